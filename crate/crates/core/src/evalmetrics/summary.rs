use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;

use crate::annotio::{parse_frames, AnnotationKind, FrameAnnotations};
use crate::error::{Error, Result};
use crate::scalar::compensated_sum;

use super::ap::{ap_from_ranked, f1, pr_at};
use super::iou::Region;
use super::matching::{greedy, iou_matrix};
use super::{ClassMetrics, IouKind, MatchConfig, MetricsSummary, OperatingPoint};

struct PreparedFrame {
    pred_class: Vec<usize>,
    scores: Vec<f64>,
    ious: Vec<Vec<Option<f64>>>,
    n_gt: usize,
}

struct Prepared {
    classes: Vec<String>,
    n_gt: Vec<usize>,
    frames: Vec<PreparedFrame>,
}

/// Ranked outcome of one class at one threshold.
#[derive(Default)]
struct ClassRanking {
    scores: Vec<f64>,
    hits: Vec<bool>,
}

struct ThresholdOutcome {
    per_class: Vec<ClassRanking>,
    matched_ious: Vec<f64>,
}

fn prepare(preds: &[FrameAnnotations], gts: &[FrameAnnotations], kind: IouKind) -> Result<Prepared> {
    let mut gt_ids = HashSet::new();
    for g in gts {
        if !gt_ids.insert(g.frame_id.as_str()) {
            return Err(Error::validation(format!("duplicate ground-truth frame_id {:?}", g.frame_id)));
        }
    }
    let mut by_id: HashMap<&str, &FrameAnnotations> = HashMap::new();
    for p in preds {
        if !gt_ids.contains(p.frame_id.as_str()) {
            return Err(Error::validation(format!("prediction frame {:?} has no ground truth", p.frame_id)));
        }
        if by_id.insert(&p.frame_id, p).is_some() {
            return Err(Error::validation(format!("duplicate prediction frame_id {:?}", p.frame_id)));
        }
        for (i, inst) in p.instances.iter().enumerate() {
            if !inst.score().is_some_and(f64::is_finite) {
                return Err(Error::validation(format!(
                    "frame {:?}, prediction {i}: missing or non-finite score",
                    p.frame_id
                )));
            }
        }
    }

    let classes: Vec<String> = gts
        .iter()
        .chain(preds)
        .flat_map(|f| f.instances.iter().map(|i| i.class_name().to_owned()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let class_index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();

    let frames = gts
        .par_iter()
        .map(|g| {
            let empty = [];
            let p_inst = match by_id.get(g.frame_id.as_str()) {
                Some(p) if (p.width, p.height) != (g.width, g.height) => {
                    return Err(Error::validation(format!(
                        "frame {:?}: prediction size {}x{} differs from ground truth {}x{}",
                        g.frame_id, p.width, p.height, g.width, g.height
                    )));
                }
                Some(p) => &p.instances[..],
                None => &empty[..],
            };
            let region = |i| (i, Region::of(i, kind, g.width, g.height));
            let pr: Vec<_> = p_inst.iter().map(region).collect();
            let gr: Vec<_> = g.instances.iter().map(region).collect();
            Ok(PreparedFrame {
                pred_class: p_inst.iter().map(|i| class_index[i.class_name()]).collect(),
                scores: p_inst.iter().map(|i| i.score().unwrap_or(0.0)).collect(),
                ious: iou_matrix(&pr, &gr),
                n_gt: g.instances.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut n_gt = vec![0; classes.len()];
    for g in gts {
        for i in &g.instances {
            n_gt[class_index[i.class_name()]] += 1;
        }
    }
    Ok(Prepared { classes, n_gt, frames })
}

fn evaluate_at(prep: &Prepared, threshold: f64) -> ThresholdOutcome {
    let mut entries: Vec<Vec<(f64, usize, usize, bool)>> = vec![Vec::new(); prep.classes.len()];
    let mut matched_ious = Vec::new();
    for (fi, frame) in prep.frames.iter().enumerate() {
        for m in greedy(&frame.scores, &frame.ious, frame.n_gt, threshold) {
            let c = frame.pred_class[m.pred];
            entries[c].push((frame.scores[m.pred], fi, m.pred, m.gt.is_some()));
            if let Some((_, iou)) = m.gt {
                matched_ious.push(iou);
            }
        }
    }
    let per_class = entries
        .into_iter()
        .map(|mut e| {
            e.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
            ClassRanking { scores: e.iter().map(|x| x.0).collect(), hits: e.iter().map(|x| x.3).collect() }
        })
        .collect();
    ThresholdOutcome { per_class, matched_ious }
}

/// Precision and recall at the configured cutoff. Cutoffs never split a run
/// of equal scores.
fn operating_pr(r: &ClassRanking, n_gt: usize, op: OperatingPoint) -> (f64, f64) {
    match op {
        OperatingPoint::Fixed(s) => pr_at(&r.hits, r.scores.iter().take_while(|&&x| x >= s).count(), n_gt),
        OperatingPoint::F1Max => {
            let mut best = (0.0, 0.0, 0.0);
            for k in 1..=r.hits.len() {
                if k < r.hits.len() && r.scores[k] == r.scores[k - 1] {
                    continue;
                }
                let (p, rc) = pr_at(&r.hits, k, n_gt);
                let f = f1(p, rc);
                if f > best.2 {
                    best = (p, rc, f);
                }
            }
            (best.0, best.1)
        }
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        0.0
    } else {
        compensated_sum(v.iter().copied()) / v.len() as f64
    }
}

/// Evaluates predictions against ground truth.
///
/// Frames align by `frame_id`. A prediction frame absent from the ground
/// truth is an error; a ground-truth frame without predictions counts as
/// having none. Classes with predictions but no ground truth are skipped
/// with a warning.
pub fn summarize(preds: &[FrameAnnotations], gts: &[FrameAnnotations], config: &MatchConfig) -> Result<MetricsSummary> {
    config.validate()?;
    let prep = prepare(preds, gts, config.iou_kind)?;

    let mut thresholds = config.iou_thresholds.clone();
    let at_50 = match thresholds.iter().position(|&t| t == 0.5) {
        Some(i) => i,
        None => {
            thresholds.push(0.5);
            thresholds.len() - 1
        }
    };
    let outcomes: Vec<ThresholdOutcome> = thresholds.par_iter().map(|&t| evaluate_at(&prep, t)).collect();
    let n_avg = config.iou_thresholds.len();

    let mut warnings = Vec::new();
    let n_images = gts.len() as u64;
    let mut per_class = Vec::new();
    for (c, name) in prep.classes.iter().enumerate() {
        let n_gt = prep.n_gt[c];
        if n_gt == 0 {
            let w = format!("class {name:?} has predictions but no ground truth; skipped");
            log::warn!("{w}");
            warnings.push(w);
            continue;
        }
        let ap = |o: &ThresholdOutcome| ap_from_ranked(&o.per_class[c].hits, n_gt).unwrap_or(0.0);
        let ap_50 = ap(&outcomes[at_50]);
        let ap_50_95 = mean(outcomes[..n_avg].iter().map(ap));
        let (p, r) = operating_pr(&outcomes[at_50].per_class[c], n_gt, config.operating_point);
        per_class.push(ClassMetrics::new(name.clone(), n_images, n_gt as u64, p, r, ap_50, ap_50_95));
    }
    if per_class.is_empty() {
        let w = "no ground-truth instances; all metrics are zero".to_owned();
        log::warn!("{w}");
        warnings.push(w);
    }

    let all_row = ClassMetrics::new(
        "All",
        n_images,
        per_class.iter().map(|c| c.n_labels).sum(),
        mean(per_class.iter().map(|c| c.precision)),
        mean(per_class.iter().map(|c| c.recall)),
        mean(per_class.iter().map(|c| c.ap_50)),
        mean(per_class.iter().map(|c| c.ap_50_95)),
    );
    let matched = &outcomes[at_50].matched_ious;
    let miou = (!matched.is_empty()).then(|| mean(matched.iter().copied()));
    Ok(MetricsSummary { title: None, iou_kind: config.iou_kind, per_class, all_row, miou, warnings })
}

/// Reads both annotation files and evaluates them.
pub fn summarize_files(preds: impl AsRef<Path>, gts: impl AsRef<Path>, config: &MatchConfig) -> Result<MetricsSummary> {
    let p = parse_frames(preds, AnnotationKind::Predictions)?;
    let g = parse_frames(gts, AnnotationKind::GroundTruth)?;
    summarize(&p, &g, config)
}

/// AP of one class at one IoU threshold; `None` when the class has no ground truth.
pub fn average_precision(
    preds: &[FrameAnnotations],
    gts: &[FrameAnnotations],
    class_name: &str,
    threshold: f64,
    kind: IouKind,
) -> Result<Option<f64>> {
    let prep = prepare(preds, gts, kind)?;
    let Some(c) = prep.classes.iter().position(|n| n == class_name) else {
        return Ok(None);
    };
    let out = evaluate_at(&prep, threshold);
    Ok(ap_from_ranked(&out.per_class[c].hits, prep.n_gt[c]))
}
