//! End-to-end orchestration: estimation runs, telemetry push, static report
//! and the command-line interface.

pub mod cli;
mod config;
mod estimate;
mod report;
mod telemetry;

pub use config::{
    AreaMode, ClockSetting, DragSection, EstimationSection, FluidSection, FramesKind, MetricsSection,
    MorphologySection, MotorSection, Paths, PcaSection, PipelineConfig, TelemetryMode, TelemetrySection, ENDPOINT_ENV,
};
pub use estimate::{
    class_totals, estimate_frames, instance_seed, run_estimate, EstimateArtifacts, EstimateOutcome, FrameDiagnostics,
    FrameFailure, FrameFeasibility, RunSummary, RECORDS_FILE, SUMMARY_FILE,
};
pub use report::{
    escape_html, mass_chart_svg, metrics_table_html, render_html, render_report, ClassTotal, FrameRow, ReportDocument,
    ReportPaths, REPORT_HTML, REPORT_JSON, REPORT_SCHEMA_VERSION,
};
pub use telemetry::{
    deliver, envelopes, payload_checksum, push_telemetry, DeliveryReport, DeliveryStatus, FileTransport, HttpTransport,
    RetryPolicy, SendError, TelemetryEnvelope, Transport,
};
