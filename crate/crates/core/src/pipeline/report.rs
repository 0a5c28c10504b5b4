//! Self-contained static report: `index.html` plus `report.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::annotio::FrameRecord;
use crate::error::{Error, Result};
use crate::evalmetrics::{format_metric, ClassMetrics, MetricsSummary};
use crate::scalar::compensated_sum;

use super::estimate::class_totals;

pub const REPORT_HTML: &str = "index.html";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassTotal {
    pub class_name: String,
    pub instances: usize,
    pub mass_g: f64,
    pub area_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRow {
    pub frame_id: String,
    pub timestamp_utc: DateTime<Utc>,
    pub instances: usize,
    pub total_area_m2: f64,
    pub total_mass_g: f64,
}

/// Machine-readable twin of the HTML report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub frames: usize,
    pub total_mass_g: f64,
    pub total_area_m2: f64,
    pub per_class: Vec<ClassTotal>,
    pub per_frame: Vec<FrameRow>,
    pub metrics: Vec<MetricsSummary>,
}

impl ReportDocument {
    pub fn build(records: &[FrameRecord], metrics: &[MetricsSummary]) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            frames: records.len(),
            total_mass_g: compensated_sum(records.iter().map(|r| r.total_mass_g)),
            total_area_m2: compensated_sum(records.iter().map(|r| r.total_area_m2)),
            per_class: class_totals(records),
            per_frame: records
                .iter()
                .map(|r| FrameRow {
                    frame_id: r.frame_id.clone(),
                    timestamp_utc: r.timestamp_utc,
                    instances: r.instances.len(),
                    total_area_m2: r.total_area_m2,
                    total_mass_g: r.total_mass_g,
                })
                .collect(),
            metrics: metrics.to_vec(),
        }
    }

    /// Parses and checks a `report.json`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ReportDocument = serde_json::from_str(text)?;
        if doc.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::validation(format!("unsupported report schema_version {}", doc.schema_version)));
        }
        if doc.frames != doc.per_frame.len() {
            return Err(Error::validation("frames count disagrees with per_frame"));
        }
        for m in &doc.metrics {
            m.validate()?;
        }
        Ok(doc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportPaths {
    pub html: PathBuf,
    pub json: PathBuf,
}

/// Escapes text for HTML element content and attribute values.
pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Horizontal bar chart of mass per class as inline SVG.
pub fn mass_chart_svg(totals: &[ClassTotal]) -> String {
    const LABEL_W: f64 = 180.0;
    const BAR_W: f64 = 360.0;
    const ROW_H: f64 = 26.0;
    let max = totals.iter().map(|t| t.mass_g).fold(0.0, f64::max);
    let height = ROW_H * totals.len().max(1) as f64 + 10.0;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{height}\" role=\"img\" aria-label=\"Mass by class\">\n",
        LABEL_W + BAR_W + 110.0
    );
    for (i, t) in totals.iter().enumerate() {
        let y = 5.0 + ROW_H * i as f64;
        let w = if max > 0.0 { BAR_W * t.mass_g / max } else { 0.0 };
        let name = escape_html(&t.class_name);
        let _ = writeln!(
            svg,
            "  <text x=\"{x}\" y=\"{ty}\" text-anchor=\"end\">{name}</text>\n  \
             <rect x=\"{LABEL_W}\" y=\"{y}\" width=\"{w:.2}\" height=\"{bh}\" fill=\"#2a7ab0\"><title>{name}: {m:.1} g</title></rect>\n  \
             <text x=\"{tx:.2}\" y=\"{ty}\">{m:.1} g</text>",
            x = LABEL_W - 8.0,
            ty = y + 16.0,
            bh = ROW_H - 6.0,
            tx = LABEL_W + w + 6.0,
            m = t.mass_g,
        );
    }
    svg.push_str("</svg>");
    svg
}

fn metrics_row(out: &mut String, r: &ClassMetrics) {
    let _ = writeln!(
        out,
        "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
        escape_html(&r.class_name),
        r.n_images,
        r.n_labels,
        format_metric(r.precision),
        format_metric(r.recall),
        format_metric(r.ap_50),
        format_metric(r.ap_50_95)
    );
}

/// HTML table in the `Class | Images | Labels | P | R | mAP@.5 | mAP@.5:95` layout.
pub fn metrics_table_html(m: &MetricsSummary) -> String {
    let mut out = String::new();
    let title = m.title.clone().unwrap_or_else(|| format!("Evaluation ({} IoU)", m.iou_kind));
    let _ = writeln!(out, "<h3>{}</h3>", escape_html(&title));
    out.push_str(
        "<table class=\"metrics\">\n<tr><th>Class</th><th>Images</th><th>Labels</th><th>P</th><th>R</th>\
         <th>mAP@.5</th><th>mAP@.5:95</th></tr>\n",
    );
    metrics_row(&mut out, &m.all_row);
    for r in &m.per_class {
        metrics_row(&mut out, r);
    }
    out.push_str("</table>\n");
    if let Some(miou) = m.miou {
        let _ = writeln!(out, "<p>mIoU: {}</p>", format_metric(miou));
    }
    for w in &m.warnings {
        let _ = writeln!(out, "<p class=\"warn\">{}</p>", escape_html(w));
    }
    out
}

pub fn render_html(doc: &ReportDocument) -> String {
    let mut h = String::from(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Debris survey report</title>\n<style>\n\
         body{font-family:sans-serif;margin:2em;color:#222}\
         table{border-collapse:collapse;margin:1em 0}\
         td,th{border:1px solid #bbb;padding:4px 10px;text-align:right}\
         td:first-child,th:first-child{text-align:left}\
         .warn{color:#a33}\n</style>\n</head>\n<body>\n<h1>Debris survey report</h1>\n",
    );
    if doc.frames > 0 {
        let _ = writeln!(
            h,
            "<h2>Totals</h2>\n<p>Frames: {} &middot; Total mass: {:.1} g &middot; Total area: {:.6} m&sup2;</p>",
            doc.frames, doc.total_mass_g, doc.total_area_m2
        );
        h.push_str("<h2>Mass by class</h2>\n<table class=\"classes\">\n<tr><th>Class</th><th>Instances</th><th>Mass (g)</th><th>Area (m&sup2;)</th></tr>\n");
        for c in &doc.per_class {
            let _ = writeln!(
                h,
                "<tr><td>{}</td><td>{}</td><td>{:.1}</td><td>{:.6}</td></tr>",
                escape_html(&c.class_name),
                c.instances,
                c.mass_g,
                c.area_m2
            );
        }
        h.push_str("</table>\n");
        h.push_str(&mass_chart_svg(&doc.per_class));
        h.push_str("\n<h2>Frames</h2>\n<table class=\"frames\">\n<tr><th>Frame</th><th>Timestamp (UTC)</th><th>Instances</th><th>Area (m&sup2;)</th><th>Mass (g)</th></tr>\n");
        for f in &doc.per_frame {
            let _ = writeln!(
                h,
                "<tr><td>{}</td><td>{}</td><td>{}</td><td>{:.6}</td><td>{:.1}</td></tr>",
                escape_html(&f.frame_id),
                f.timestamp_utc.to_rfc3339_opts(SecondsFormat::AutoSi, true),
                f.instances,
                f.total_area_m2,
                f.total_mass_g
            );
        }
        h.push_str("</table>\n");
    }
    if !doc.metrics.is_empty() {
        h.push_str("<h2>Detection metrics</h2>\n");
        for m in &doc.metrics {
            h.push_str(&metrics_table_html(m));
        }
    }
    h.push_str("</body>\n</html>\n");
    h
}

/// Writes `index.html` and `report.json` into `out_dir`.
pub fn render_report(
    records: &[FrameRecord],
    metrics: &[MetricsSummary],
    out_dir: impl AsRef<Path>,
) -> Result<ReportPaths> {
    if records.is_empty() && metrics.is_empty() {
        return Err(Error::validation("report needs records or metrics"));
    }
    let out = out_dir.as_ref();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let doc = ReportDocument::build(records, metrics);
    let html = out.join(REPORT_HTML);
    let json = out.join(REPORT_JSON);
    fs::write(&html, render_html(&doc)).map_err(|e| Error::io(&html, e))?;
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    Ok(ReportPaths { html, json })
}
