use crate::error::Result;

use super::MetricsSummary;

macro_rules! fixture {
    ($name:literal) => {
        ($name, include_str!(concat!("../../fixtures/reference_metrics/", $name, ".json")))
    };
}

const TABLES: [(&str, &str); 10] = [
    fixture!("yolov3_detection"),
    fixture!("yolov5_detection"),
    fixture!("yolov7_detection"),
    fixture!("yolov8_detection"),
    fixture!("yolov5_segmentation_box"),
    fixture!("yolov5_segmentation_mask"),
    fixture!("yolov7_segmentation_box"),
    fixture!("yolov7_segmentation_mask"),
    fixture!("yolov8_segmentation_box"),
    fixture!("yolov8_segmentation_mask"),
];

/// Names of the bundled published result tables.
pub fn reference_keys() -> impl Iterator<Item = &'static str> {
    TABLES.iter().map(|(k, _)| *k)
}

/// A bundled published result table, for rendering and schema checks.
pub fn reference_summary(key: &str) -> Option<Result<MetricsSummary>> {
    TABLES.iter().find(|(k, _)| *k == key).map(|(_, text)| MetricsSummary::from_json(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalmetrics::render_table;

    #[test]
    fn all_fixtures_load() {
        for key in reference_keys() {
            let s = reference_summary(key).unwrap().unwrap();
            assert_eq!(s.per_class.len(), 4, "{key}");
            assert_eq!(s.all_row.n_labels, 152, "{key}");
            assert!(s.per_class.iter().chain([&s.all_row]).all(|r| r.n_images == 117));
        }
        assert!(reference_summary("nope").is_none());
    }

    #[test]
    fn detection_table_renders() {
        let s = reference_summary("yolov3_detection").unwrap().unwrap();
        let t = render_table(&s);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].starts_with("Class    | Images | Labels |"));
        assert_eq!(lines[1], "All      |    117 |    152 | 0.903 | 0.954 |  0.963 |     0.783");
        assert_eq!(lines[2], "Crab     |    117 |     16 | 0.843 |     1 |  0.988 |     0.832");
    }

    #[test]
    fn class_rows_average_to_all_row() {
        let s = reference_summary("yolov3_detection").unwrap().unwrap();
        let mean_p: f64 = s.per_class.iter().map(|r| r.precision).sum::<f64>() / 4.0;
        assert!((mean_p - s.all_row.precision).abs() < 5e-4);
    }
}
