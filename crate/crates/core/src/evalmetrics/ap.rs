/// All-point interpolated average precision of a ranked hit list.
///
/// `hits[k]` tells whether the k-th ranked prediction is a true positive.
/// The precision envelope (running maximum from the tail) is integrated over
/// recall, which grows by `1 / n_gt` at each hit. Returns `None` when there
/// is no ground truth to recall.
pub fn ap_from_ranked(hits: &[bool], n_gt: usize) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    let mut tp = 0usize;
    let precision: Vec<f64> = hits
        .iter()
        .enumerate()
        .map(|(k, &hit)| {
            tp += usize::from(hit);
            tp as f64 / (k + 1) as f64
        })
        .collect();
    let mut envelope = precision;
    for k in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[k] = envelope[k].max(envelope[k + 1]);
    }
    let n = n_gt as f64;
    Some(hits.iter().zip(&envelope).filter(|(&hit, _)| hit).fold(0.0, |acc, (_, &p)| acc + p / n))
}

/// Precision and recall of the top `k` predictions.
pub(crate) fn pr_at(hits: &[bool], k: usize, n_gt: usize) -> (f64, f64) {
    let tp = hits[..k].iter().filter(|&&h| h).count() as f64;
    let p = if k == 0 { 0.0 } else { tp / k as f64 };
    let r = if n_gt == 0 { 0.0 } else { tp / n_gt as f64 };
    (p, r)
}

pub(crate) fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}
