use crate::annotio::Instance;

use super::iou::Region;
use super::IouKind;

/// Outcome for one prediction, in ranked order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    /// Index into the prediction list.
    pub pred: usize,
    /// Matched ground-truth index and IoU, if any.
    pub gt: Option<(usize, f64)>,
}

/// Prediction order: descending score, ties by input position.
pub(crate) fn ranked(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Greedy matching on a precomputed IoU matrix (`ious[p][g]`, `None` where
/// classes differ). Returns one entry per prediction in ranked order.
pub(crate) fn greedy(scores: &[f64], ious: &[Vec<Option<f64>>], n_gt: usize, threshold: f64) -> Vec<Match> {
    let mut taken = vec![false; n_gt];
    ranked(scores)
        .into_iter()
        .map(|p| {
            let mut best: Option<(usize, f64)> = None;
            for (g, iou) in ious[p].iter().enumerate() {
                let Some(iou) = *iou else { continue };
                if taken[g] || iou < threshold {
                    continue;
                }
                if best.is_none_or(|(_, b)| iou > b) {
                    best = Some((g, iou));
                }
            }
            if let Some((g, _)) = best {
                taken[g] = true;
            }
            Match { pred: p, gt: best }
        })
        .collect()
}

pub(crate) fn iou_matrix(preds: &[(&Instance, Region)], gts: &[(&Instance, Region)]) -> Vec<Vec<Option<f64>>> {
    preds
        .iter()
        .map(|(p, pr)| gts.iter().map(|(g, gr)| (p.class_name() == g.class_name()).then(|| pr.iou(gr))).collect())
        .collect()
}

/// Matches one frame's predictions to its ground truth. Predictions are
/// visited by descending score (ties by input order); each takes the
/// unmatched same-class ground truth with the highest IoU at or above
/// `threshold`. Predictions without a score rank as 0.
pub fn match_detections(
    preds: &[Instance],
    gts: &[Instance],
    threshold: f64,
    kind: IouKind,
    width: u32,
    height: u32,
) -> Vec<Match> {
    let p: Vec<_> = preds.iter().map(|i| (i, Region::of(i, kind, width, height))).collect();
    let g: Vec<_> = gts.iter().map(|i| (i, Region::of(i, kind, width, height))).collect();
    let scores: Vec<f64> = preds.iter().map(|i| i.score().unwrap_or(0.0)).collect();
    greedy(&scores, &iou_matrix(&p, &g), gts.len(), threshold)
}
