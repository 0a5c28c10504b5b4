//! Per-frame estimation records, serialized as JSON lines.

use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One segmented instance within a [`FrameRecord`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRecord {
    pub class_name: String,
    pub pixel_count: u64,
    pub area_m2: f64,
    pub volume_cm3: f64,
    pub density_g_cm3: f64,
    pub mass_g: f64,
}

/// Estimation output for one frame. Field order is the on-disk key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub frame_id: String,
    pub timestamp_utc: DateTime<Utc>,
    pub instances: Vec<InstanceRecord>,
    pub total_area_m2: f64,
    pub total_mass_g: f64,
}

impl FrameRecord {
    pub fn validate(&self) -> Result<()> {
        let bad = |v: f64| !(v.is_finite() && v >= 0.0);
        for (i, inst) in self.instances.iter().enumerate() {
            for (what, v) in [
                ("area_m2", inst.area_m2),
                ("volume_cm3", inst.volume_cm3),
                ("density_g_cm3", inst.density_g_cm3),
                ("mass_g", inst.mass_g),
            ] {
                if bad(v) {
                    return Err(Error::validation(format!(
                        "record {:?}, instance {i}: {what} = {v} must be finite and non-negative",
                        self.frame_id
                    )));
                }
            }
        }
        for (what, v) in [("total_area_m2", self.total_area_m2), ("total_mass_g", self.total_mass_g)] {
            if bad(v) {
                return Err(Error::validation(format!(
                    "record {:?}: {what} = {v} must be finite and non-negative",
                    self.frame_id
                )));
            }
        }
        Ok(())
    }

    /// Compact JSON with stable key order; also the canonical bytes used for checksums.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

pub fn records_to_jsonl(records: &[FrameRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_json_line());
        out.push('\n');
    }
    out
}

pub fn write_frame_records(records: &[FrameRecord], path: impl AsRef<Path>) -> Result<()> {
    for r in records {
        r.validate()?;
    }
    let path = path.as_ref();
    fs::write(path, records_to_jsonl(records)).map_err(|e| Error::io(path, e))
}

/// Parses JSON-lines text; blank lines are ignored.
pub fn parse_frame_records(text: &str) -> Result<Vec<FrameRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let record: FrameRecord = serde_json::from_str(l).map_err(|e| Error::Parse {
                line: n + 1,
                column: e.column(),
                message: e.to_string(),
            })?;
            record.validate()?;
            Ok(record)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn record(id: &str, mass: f64) -> FrameRecord {
        FrameRecord {
            frame_id: id.into(),
            timestamp_utc: Utc.with_ymd_and_hms(2024, 3, 1, 12, 0, 0).unwrap(),
            instances: vec![InstanceRecord {
                class_name: "Plastic bags".into(),
                pixel_count: 1200,
                area_m2: 0.0012,
                volume_cm3: 280.0,
                density_g_cm3: 1.2,
                mass_g: mass,
            }],
            total_area_m2: 0.0012,
            total_mass_g: mass,
        }
    }

    #[test]
    fn empty_list_writes_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        write_frame_records(&[], &path).unwrap();
        assert_eq!(fs::read(&path).unwrap().len(), 0);
    }

    #[test]
    fn one_line_per_record_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let recs = vec![record("a", 1.0), record("b", 2.0), record("c", 3.0)];
        write_frame_records(&recs, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        for (line, id) in lines.iter().zip(["a", "b", "c"]) {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["frame_id"], id);
        }
        assert_eq!(parse_frame_records(&text).unwrap(), recs);
    }

    #[test]
    fn key_order_is_fixed() {
        let line = record("a", 336.0).to_json_line();
        let keys = ["\"frame_id\"", "\"timestamp_utc\"", "\"instances\"", "\"total_area_m2\"", "\"total_mass_g\""];
        let pos: Vec<_> = keys.iter().map(|k| line.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{line}");
        assert!(line.contains("\"timestamp_utc\":\"2024-03-01T12:00:00Z\""), "{line}");
        let inner =
            ["\"class_name\"", "\"pixel_count\"", "\"area_m2\"", "\"volume_cm3\"", "\"density_g_cm3\"", "\"mass_g\""];
        let pos: Vec<_> = inner.iter().map(|k| line.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{line}");
    }

    #[test]
    fn negative_values_rejected() {
        assert!(record("a", -1.0).validate().is_err());
        assert!(record("a", f64::NAN).validate().is_err());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = write_frame_records(&[], "/nonexistent-dir/x/r.jsonl").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    proptest! {
        #[test]
        fn round_trip(masses in prop::collection::vec(0.0..1e6f64, 0..5), px in any::<u32>(), area in 0.0..10.0f64) {
            let recs: Vec<_> = masses.iter().enumerate().map(|(i, &m)| {
                let mut r = record(&format!("f{i}"), m);
                r.instances[0].pixel_count = u64::from(px);
                r.instances[0].area_m2 = area;
                r
            }).collect();
            prop_assert_eq!(parse_frame_records(&records_to_jsonl(&recs)).unwrap(), recs);
        }
    }
}
