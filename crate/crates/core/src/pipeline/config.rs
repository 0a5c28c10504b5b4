//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//! device_id = "auv-01"
//! clock = "2024-03-01T12:00:00Z"   # or "system"
//!
//! [paths]
//! frames = "frames.json"
//! priors = "priors.csv"            # optional, built-in table otherwise
//! output_dir = "out"
//!
//! [camera]
//! sensor_mm = 6.4
//! pixels = 1600
//! focal_mm = 8.0
//! distance_m = 2.0
//!
//! [estimation]
//! method = "prior"                 # or "area_scaled"
//! area_mode = "pixels"             # or "monte_carlo"
//! mc_samples = 100
//!
//! [class_alias]
//! Trash = "Plastic bags"
//! ```
//!
//! Relative paths resolve against the directory holding the config file.
//! The `AQUAMASS_ENDPOINT` environment variable overrides
//! `telemetry.endpoint`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::Deserialize;

use crate::annotio::AnnotationKind;
use crate::camera::CameraModel;
use crate::clock::{Clock, FixedClock, SystemClock};
use crate::error::{Error, Result};
use crate::evalmetrics::{IouKind, MatchConfig, OperatingPoint};
use crate::hydro::{FluidEnvironment, MotorSpec, MotorState, DEFAULT_DRAG_COEFFICIENT};
use crate::maskgeom::{MorphOp, StructuringElement, DEFAULT_SAMPLES};
use crate::massmodel::{load_priors, EstimationMethod, PriorDatabase};

pub const ENDPOINT_ENV: &str = "AQUAMASS_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_device")]
    pub device_id: String,
    #[serde(default)]
    pub clock: ClockSetting,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default = "default_camera")]
    pub camera: CameraModel<f64>,
    #[serde(default)]
    pub fluid: FluidSection,
    #[serde(default)]
    pub motor: MotorSection,
    #[serde(default)]
    pub drag: DragSection,
    #[serde(default)]
    pub estimation: EstimationSection,
    #[serde(default = "default_aliases")]
    pub class_alias: BTreeMap<String, String>,
    #[serde(default)]
    pub morphology: MorphologySection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub pca: PcaSection,
    #[serde(default)]
    pub telemetry: TelemetrySection,
}

fn default_device() -> String {
    "auv-01".into()
}

fn default_camera() -> CameraModel<f64> {
    CameraModel::new(6.4, 1600, 8.0, 2.0).expect("valid default camera")
}

fn default_aliases() -> BTreeMap<String, String> {
    BTreeMap::from([("Trash".to_owned(), "Plastic bags".to_owned())])
}

/// Source of record timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(try_from = "String")]
pub enum ClockSetting {
    #[default]
    System,
    Fixed(DateTime<Utc>),
}

impl TryFrom<String> for ClockSetting {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        if s == "system" {
            return Ok(ClockSetting::System);
        }
        DateTime::parse_from_rfc3339(&s)
            .map(|t| ClockSetting::Fixed(t.with_timezone(&Utc)))
            .map_err(|e| Error::Config(format!("clock must be \"system\" or an RFC 3339 instant, got {s:?}: {e}")))
    }
}

impl ClockSetting {
    pub fn build(self) -> Arc<dyn Clock> {
        match self {
            ClockSetting::System => Arc::new(SystemClock),
            ClockSetting::Fixed(t) => Arc::new(FixedClock(t)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub frames: Option<PathBuf>,
    pub priors: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Forces how the frames file is read; inferred from scores when absent.
    pub frames_kind: Option<FramesKind>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FramesKind {
    GroundTruth,
    Predictions,
}

impl From<FramesKind> for AnnotationKind {
    fn from(k: FramesKind) -> Self {
        match k {
            FramesKind::GroundTruth => AnnotationKind::GroundTruth,
            FramesKind::Predictions => AnnotationKind::Predictions,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidSection {
    pub rho: f64,
    pub v: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub mu: f64,
    /// Recorded in the run summary; no formula consumes it.
    pub turbulence_intensity: Option<f64>,
}

impl Default for FluidSection {
    fn default() -> Self {
        Self { rho: 1025.0, v: 0.5, length: 0.3, mu: 1.08e-3, turbulence_intensity: None }
    }
}

impl FluidSection {
    pub fn environment(&self) -> FluidEnvironment<f64> {
        FluidEnvironment { rho: self.rho, v: self.v, length: self.length, mu: self.mu }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorSection {
    pub k: f64,
    pub k_prime: f64,
    pub radius: f64,
    #[serde(rename = "I")]
    pub current: f64,
    #[serde(rename = "V")]
    pub voltage: f64,
    pub omega: f64,
}

impl Default for MotorSection {
    fn default() -> Self {
        Self { k: 1.0, k_prime: 0.5, radius: 0.5, current: 2.0, voltage: 12.0, omega: 4.0 }
    }
}

impl MotorSection {
    pub fn spec(&self) -> MotorSpec<f64> {
        MotorSpec { k: self.k, k_prime: self.k_prime, radius: self.radius }
    }

    pub fn state(&self) -> MotorState<f64> {
        MotorState { current: self.current, voltage: self.voltage, omega: self.omega }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragSection {
    pub cd: f64,
}

impl Default for DragSection {
    fn default() -> Self {
        Self { cd: DEFAULT_DRAG_COEFFICIENT }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaMode {
    /// Area from the refined mask's pixel count.
    #[default]
    Pixels,
    /// Area from seeded Monte Carlo sampling over the mask's bounding box.
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSection {
    #[serde(default)]
    pub method: EstimationMethod,
    #[serde(default)]
    pub area_mode: AreaMode,
    #[serde(default = "default_samples")]
    pub mc_samples: u64,
}

fn default_samples() -> u64 {
    DEFAULT_SAMPLES
}

impl Default for EstimationSection {
    fn default() -> Self {
        Self { method: EstimationMethod::Prior, area_mode: AreaMode::Pixels, mc_samples: DEFAULT_SAMPLES }
    }
}

/// Mask refinement applied after rasterization; zero iterations disables it.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphologySection {
    pub op: MorphOp,
    pub element: StructuringElement,
    pub iterations: u32,
}

impl Default for MorphologySection {
    fn default() -> Self {
        Self { op: MorphOp::Close, element: StructuringElement::Square, iterations: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default)]
    pub operating_point: OperatingPoint,
    #[serde(default)]
    pub iou_kind: IouKind,
}

impl MetricsSection {
    pub fn match_config(&self) -> MatchConfig {
        MatchConfig::new(self.iou_kind).with_operating_point(self.operating_point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcaSection {
    pub k: usize,
    #[serde(default)]
    pub standardize: bool,
}

impl Default for PcaSection {
    fn default() -> Self {
        Self { k: 2, standardize: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TelemetryMode {
    Http,
    #[default]
    File,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelemetrySection {
    pub endpoint: Option<String>,
    #[serde(default)]
    pub mode: TelemetryMode,
    #[serde(default = "default_sink")]
    pub sink: PathBuf,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_sink() -> PathBuf {
    PathBuf::from("telemetry.jsonl")
}

fn default_attempts() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    1000
}

fn default_timeout_ms() -> u64 {
    10_000
}

impl Default for TelemetrySection {
    fn default() -> Self {
        Self {
            endpoint: None,
            mode: TelemetryMode::File,
            sink: default_sink(),
            max_attempts: default_attempts(),
            backoff_ms: default_backoff_ms(),
            timeout_ms: default_timeout_ms(),
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config deserializes")
    }
}

impl PipelineConfig {
    /// Parses TOML text. Relative paths are joined onto `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        if let Some(p) = cfg.paths.frames.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.paths.priors.as_mut() {
            rebase(p);
        }
        rebase(&mut cfg.paths.output_dir);
        rebase(&mut cfg.telemetry.sink);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and applies environment overrides.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = Self::from_toml_str(&text, base)?;
        cfg.apply_env();
        Ok(cfg)
    }

    pub fn apply_env(&mut self) {
        if let Ok(url) = std::env::var(ENDPOINT_ENV) {
            if !url.is_empty() {
                self.telemetry.endpoint = Some(url);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.camera.validate().map_err(cfg_err)?;
        self.fluid.environment().validate().map_err(cfg_err)?;
        self.motor.spec().validate().map_err(cfg_err)?;
        self.motor.state().validate().map_err(cfg_err)?;
        if !(self.drag.cd.is_finite() && self.drag.cd > 0.0) {
            return Err(Error::Config(format!("drag.cd must be positive, got {}", self.drag.cd)));
        }
        if let Some(t) = self.fluid.turbulence_intensity {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::Config(format!("fluid.turbulence_intensity must be non-negative, got {t}")));
            }
        }
        if self.estimation.mc_samples == 0 {
            return Err(Error::Config("estimation.mc_samples must be at least 1".into()));
        }
        if self.pca.k == 0 {
            return Err(Error::Config("pca.k must be at least 1".into()));
        }
        if self.telemetry.max_attempts == 0 {
            return Err(Error::Config("telemetry.max_attempts must be at least 1".into()));
        }
        if self.device_id.is_empty() {
            return Err(Error::Config("device_id must not be empty".into()));
        }
        Ok(())
    }

    /// Prior table with the configured aliases.
    pub fn prior_database(&self) -> Result<PriorDatabase> {
        let db = match &self.paths.priors {
            Some(p) => load_priors(p)?,
            None => PriorDatabase::builtin(),
        };
        db.with_aliases(self.class_alias.clone()).map_err(|e| Error::Config(e.to_string()))
    }
}
