use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotio::{parse_frames_each, records_to_jsonl, FrameAnnotations, FrameRecord};
use crate::camera::{mask_physical_area, physical_area_from_pixels};
use crate::clock::Clock;
use crate::error::{Error, Result};
use crate::hydro::{feasibility, reynolds, TorqueRegime, Verdict};
use crate::maskgeom::{
    contours, mask_membership, mc_area, morph, rasterize_instance, BitMask, GeometryWarning, Rect, SplitMix64,
};
use crate::massmodel::{assemble_record, estimate_with_area, PriorDatabase};
use crate::scalar::compensated_sum;

use super::config::{AreaMode, PipelineConfig};
use super::report::{render_report, ClassTotal};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFailure {
    pub frame_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFeasibility {
    pub frame_id: String,
    pub verdict: Verdict,
    pub margin_n: f64,
    pub available_n: f64,
    pub required_n: f64,
    pub torque_regime: TorqueRegime,
}

/// Per-frame refinement details not carried by the record itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    pub frame_id: String,
    /// Outer contours of each refined instance mask, in instance order.
    pub components: Vec<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub frames_total: usize,
    pub frames_ok: usize,
    pub frames_failed: usize,
    /// Totals cover successful frames only.
    pub total_mass_g: f64,
    pub total_area_m2: f64,
    pub per_class: Vec<ClassTotal>,
    pub reynolds: f64,
    pub turbulence_intensity: Option<f64>,
    /// `feasible` only when every successful frame is.
    pub overall_verdict: Verdict,
    pub feasibility: Vec<FrameFeasibility>,
    pub diagnostics: Vec<FrameDiagnostics>,
    pub errors: Vec<FrameFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutcome {
    pub records: Vec<FrameRecord>,
    pub summary: RunSummary,
}

impl EstimateOutcome {
    pub fn is_partial(&self) -> bool {
        self.summary.frames_failed > 0
    }
}

/// Seed for one instance's Monte Carlo stream, derived from the run seed.
pub fn instance_seed(run_seed: u64, frame_index: usize, instance_index: usize) -> u64 {
    let lane = ((frame_index as u64) << 32) ^ instance_index as u64;
    SplitMix64::new(run_seed ^ lane.wrapping_mul(0x9E37_79B9_7F4A_7C15)).next_u64()
}

fn refine(mask: BitMask, cfg: &PipelineConfig) -> Result<BitMask> {
    let m = cfg.morphology;
    if m.iterations == 0 {
        Ok(mask)
    } else {
        morph(&mask, m.op, m.element, m.iterations)
    }
}

fn pixel_area(mask: &BitMask, cfg: &PipelineConfig, seed: u64) -> Result<f64> {
    match cfg.estimation.area_mode {
        AreaMode::Pixels => mask_physical_area(mask.count_ones(), &cfg.camera),
        AreaMode::MonteCarlo => {
            let Some((x0, y0, x1, y1)) = mask.bounding_box() else {
                return Ok(0.0);
            };
            let rect = Rect::new(f64::from(x0), f64::from(y0), f64::from(x1) + 1.0, f64::from(y1) + 1.0)?;
            let est = mc_area(mask_membership(mask), rect, cfg.estimation.mc_samples, seed)?;
            physical_area_from_pixels(est.area, &cfg.camera)
        }
    }
}

fn process_frame(
    frame_index: usize,
    frame: &FrameAnnotations,
    cfg: &PipelineConfig,
    db: &PriorDatabase,
    clock: &dyn Clock,
) -> Result<(FrameRecord, FrameDiagnostics)> {
    let mut estimates = Vec::with_capacity(frame.instances.len());
    let mut components = Vec::with_capacity(frame.instances.len());
    let mut warnings = Vec::new();
    for (i, inst) in frame.instances.iter().enumerate() {
        let raster = rasterize_instance(inst, frame.width, frame.height);
        if let Some(GeometryWarning::DegenerateGeometry) = raster.warning {
            warnings.push(format!("instance {i}: degenerate geometry, empty mask"));
        }
        let mask = refine(raster.mask, cfg)?;
        components.push(contours(&mask).len());
        let area = pixel_area(&mask, cfg, instance_seed(cfg.seed, frame_index, i))?;
        estimates.push(estimate_with_area(inst.class_name(), mask.count_ones(), area, db, cfg.estimation.method)?);
    }
    let record = assemble_record(&frame.frame_id, estimates, clock)?;
    record.validate()?;
    Ok((record, FrameDiagnostics { frame_id: frame.frame_id.clone(), components, warnings }))
}

/// Per-class instance counts, mass and area over a set of records.
pub fn class_totals(records: &[FrameRecord]) -> Vec<ClassTotal> {
    let mut by_class: BTreeMap<&str, (usize, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for inst in records.iter().flat_map(|r| &r.instances) {
        let e = by_class.entry(&inst.class_name).or_default();
        e.0 += 1;
        e.1.push(inst.mass_g);
        e.2.push(inst.area_m2);
    }
    by_class
        .into_iter()
        .map(|(name, (n, mass, area))| ClassTotal {
            class_name: name.to_owned(),
            instances: n,
            mass_g: compensated_sum(mass),
            area_m2: compensated_sum(area),
        })
        .collect()
}

/// Runs estimation over an in-memory frames document without touching disk.
///
/// Frames are processed in parallel; records keep document order. A frame
/// that fails validation or estimation is listed under `errors` and left
/// out of the totals.
pub fn estimate_frames(bytes: &[u8], cfg: &PipelineConfig, clock: &dyn Clock) -> Result<EstimateOutcome> {
    let db = cfg.prior_database()?;
    let (_, entries) = parse_frames_each(bytes, cfg.paths.frames_kind.map(Into::into))?;
    let env = cfg.fluid.environment();
    let (spec, state) = (cfg.motor.spec(), cfg.motor.state());

    let results: Vec<Result<(FrameRecord, FrameDiagnostics)>> = entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| match &entry.frame {
            Ok(frame) => process_frame(i, frame, cfg, &db, clock),
            Err(e) => Err(Error::validation(e.to_string())),
        })
        .collect();

    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut errors = Vec::new();
    for (entry, result) in entries.iter().zip(results) {
        match result {
            Ok((rec, diag)) => {
                records.push(rec);
                diagnostics.push(diag);
            }
            Err(e) => {
                log::warn!("frame {:?} failed: {e}", entry.frame_id);
                errors.push(FrameFailure { frame_id: entry.frame_id.clone(), error: e.to_string() });
            }
        }
    }

    let feasibility = records
        .iter()
        .map(|r| {
            let f = feasibility(r, &env, &spec, &state, cfg.drag.cd)?;
            Ok(FrameFeasibility {
                frame_id: r.frame_id.clone(),
                verdict: f.verdict,
                margin_n: f.margin_n,
                available_n: f.available_n,
                required_n: f.required_n,
                torque_regime: f.torque_regime,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let overall_verdict = if feasibility.iter().all(|f| f.verdict == Verdict::Feasible) {
        Verdict::Feasible
    } else {
        Verdict::Infeasible
    };
    if let Some(t) = cfg.fluid.turbulence_intensity {
        log::info!("turbulence intensity {t}");
    }

    let summary = RunSummary {
        frames_total: entries.len(),
        frames_ok: records.len(),
        frames_failed: errors.len(),
        total_mass_g: compensated_sum(records.iter().map(|r| r.total_mass_g)),
        total_area_m2: compensated_sum(records.iter().map(|r| r.total_area_m2)),
        per_class: class_totals(&records),
        reynolds: reynolds(&env)?,
        turbulence_intensity: cfg.fluid.turbulence_intensity,
        overall_verdict,
        feasibility,
        diagnostics,
        errors,
    };
    Ok(EstimateOutcome { records, summary })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateArtifacts {
    pub outcome: EstimateOutcome,
    pub records_path: PathBuf,
    pub summary_path: PathBuf,
    pub report_dir: PathBuf,
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Full estimate stage: reads the configured frames file, writes
/// `records.jsonl`, `summary.json` and the static report into the output
/// directory.
pub fn run_estimate(cfg: &PipelineConfig, clock: &dyn Clock) -> Result<EstimateArtifacts> {
    let frames_path = cfg.paths.frames.as_ref().ok_or_else(|| Error::Config("paths.frames is required".into()))?;
    for p in std::iter::once(frames_path).chain(cfg.paths.priors.as_ref()) {
        if !p.is_file() {
            return Err(Error::Config(format!("{} does not exist", p.display())));
        }
    }
    let bytes = fs::read(frames_path).map_err(|e| Error::io(frames_path, e))?;
    let outcome = estimate_frames(&bytes, cfg, clock)?;

    let out = &cfg.paths.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let records_path = out.join(RECORDS_FILE);
    let summary_path = out.join(SUMMARY_FILE);
    write(&records_path, &records_to_jsonl(&outcome.records))?;
    let mut summary = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
    summary.push('\n');
    write(&summary_path, &summary)?;
    if !outcome.records.is_empty() {
        render_report(&outcome.records, &[], out)?;
    }
    Ok(EstimateArtifacts { outcome, records_path, summary_path, report_dir: out.clone() })
}
