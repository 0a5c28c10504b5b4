//! Detection and segmentation quality metrics.
//!
//! Matching is greedy per frame: predictions are visited by descending score
//! and each claims the unmatched same-class ground truth with the highest IoU
//! at or above the threshold. AP uses all-point interpolation. Precision and
//! recall are reported at one score cutoff per class, by default the one that
//! maximizes F1. The `All` row is the unweighted mean over classes, with its
//! F1 derived from the mean precision and recall.

mod ap;
mod iou;
mod matching;
mod reference;
mod summary;
mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ap::ap_from_ranked;
pub use iou::{box_iou, iou, mask_iou};
pub use matching::{match_detections, Match};
pub use reference::{reference_keys, reference_summary};
pub use summary::{average_precision, summarize, summarize_files};
pub use table::{format_metric, render_table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IouKind {
    #[default]
    Box,
    Mask,
}

impl fmt::Display for IouKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IouKind::Box => "box",
            IouKind::Mask => "mask",
        })
    }
}

impl FromStr for IouKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(IouKind::Box),
            "mask" => Ok(IouKind::Mask),
            other => Err(Error::Config(format!("unknown IoU kind {other:?} (expected box or mask)"))),
        }
    }
}

/// Score cutoff at which precision and recall are reported.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum OperatingPoint {
    /// Per-class cutoff maximizing F1 at IoU 0.5.
    #[default]
    F1Max,
    /// Keep predictions scoring at or above the given value.
    Fixed(f64),
}

impl fmt::Display for OperatingPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatingPoint::F1Max => f.write_str("f1max"),
            OperatingPoint::Fixed(s) => write!(f, "fixed:{s}"),
        }
    }
}

impl FromStr for OperatingPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "f1max" {
            return Ok(OperatingPoint::F1Max);
        }
        let bad = || Error::Config(format!("invalid operating point {s:?} (expected f1max or fixed:<score>)"));
        let score: f64 = s.strip_prefix("fixed:").ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if !score.is_finite() {
            return Err(bad());
        }
        Ok(OperatingPoint::Fixed(score))
    }
}

impl TryFrom<String> for OperatingPoint {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<OperatingPoint> for String {
    fn from(op: OperatingPoint) -> String {
        op.to_string()
    }
}

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| f64::from(50 + 5 * i) / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchConfig {
    /// Thresholds averaged into `ap_50_95`; ascending and unique, each in (0, 1].
    pub iou_thresholds: Vec<f64>,
    pub iou_kind: IouKind,
    pub operating_point: OperatingPoint,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self::new(IouKind::Box)
    }
}

impl MatchConfig {
    pub fn new(iou_kind: IouKind) -> Self {
        Self { iou_thresholds: coco_thresholds(), iou_kind, operating_point: OperatingPoint::F1Max }
    }

    pub fn with_operating_point(mut self, op: OperatingPoint) -> Self {
        self.operating_point = op;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iou_thresholds.is_empty() {
            return Err(Error::validation("at least one IoU threshold is required"));
        }
        if let Some(t) = self.iou_thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::validation(format!("IoU threshold {t} outside (0, 1]")));
        }
        if self.iou_thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("IoU thresholds must be ascending and unique"));
        }
        Ok(())
    }
}

/// One row of a metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClassMetrics")]
pub struct ClassMetrics {
    pub class_name: String,
    pub n_images: u64,
    pub n_labels: u64,
    pub precision: f64,
    pub recall: f64,
    pub ap_50: f64,
    pub ap_50_95: f64,
    pub f1: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClassMetrics {
    class_name: String,
    n_images: u64,
    n_labels: u64,
    precision: f64,
    recall: f64,
    ap_50: f64,
    ap_50_95: f64,
    f1: Option<f64>,
}

impl TryFrom<RawClassMetrics> for ClassMetrics {
    type Error = Error;

    fn try_from(r: RawClassMetrics) -> Result<Self> {
        let m = ClassMetrics::new(r.class_name, r.n_images, r.n_labels, r.precision, r.recall, r.ap_50, r.ap_50_95);
        if let Some(f1) = r.f1 {
            if (f1 - m.f1).abs() > 1e-9 {
                return Err(Error::validation(format!(
                    "{}: f1 {f1} disagrees with precision and recall ({})",
                    m.class_name, m.f1
                )));
            }
        }
        m.validate()?;
        Ok(m)
    }
}

impl ClassMetrics {
    /// Builds a row, deriving F1 from precision and recall.
    pub fn new(
        class_name: impl Into<String>,
        n_images: u64,
        n_labels: u64,
        precision: f64,
        recall: f64,
        ap_50: f64,
        ap_50_95: f64,
    ) -> Self {
        Self {
            class_name: class_name.into(),
            n_images,
            n_labels,
            precision,
            recall,
            ap_50,
            ap_50_95,
            f1: ap::f1(precision, recall),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("precision", self.precision),
            ("recall", self.recall),
            ("ap_50", self.ap_50),
            ("ap_50_95", self.ap_50_95),
            ("f1", self.f1),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(format!("{}: {name} = {v} outside [0, 1]", self.class_name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub iou_kind: IouKind,
    pub per_class: Vec<ClassMetrics>,
    pub all_row: ClassMetrics,
    /// Mean IoU over pairs matched at 0.5; absent when nothing matched.
    #[serde(default)]
    pub miou: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl MetricsSummary {
    pub fn validate(&self) -> Result<()> {
        for row in self.per_class.iter().chain([&self.all_row]) {
            row.validate()?;
        }
        let labels: u64 = self.per_class.iter().map(|c| c.n_labels).sum();
        if labels != self.all_row.n_labels {
            return Err(Error::validation(format!(
                "All row has {} labels but classes sum to {labels}",
                self.all_row.n_labels
            )));
        }
        if let Some(m) = self.miou {
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::validation(format!("miou {m} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: MetricsSummary = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}
