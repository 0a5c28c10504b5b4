use super::{ClassMetrics, MetricsSummary};

/// Three decimals with trailing zeros dropped: `1.000` prints as `1`, `0.940` as `0.94`.
pub fn format_metric(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}

fn cells(row: &ClassMetrics) -> [String; 7] {
    [
        row.class_name.clone(),
        row.n_images.to_string(),
        row.n_labels.to_string(),
        format_metric(row.precision),
        format_metric(row.recall),
        format_metric(row.ap_50),
        format_metric(row.ap_50_95),
    ]
}

/// Plain-text table with the `All` row first, then one row per class.
pub fn render_table(summary: &MetricsSummary) -> String {
    let header = ["Class", "Images", "Labels", "P", "R", "mAP@.5", "mAP@.5:95"].map(String::from);
    let rows: Vec<[String; 7]> =
        std::iter::once(header).chain(std::iter::once(&summary.all_row).chain(&summary.per_class).map(cells)).collect();
    let mut widths = [0usize; 7];
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(line.join(" | ").trim_end());
        out.push('\n');
    }
    out
}
