//! Volume, density and mass estimates from per-class debris priors.
//!
//! The shipped prior table (see [`PriorDatabase::builtin`]) lists typical
//! dimensions, volume and density for seven debris classes. Its bottle row
//! states 829 cm³ where 6 x 6 x 23 = 828; box rows are therefore checked
//! against `a * b * c` with a 1 cm³ tolerance, and the stated volume is
//! kept as-is. Wood (6.5 g/cm³) and fishing gear (7 g/cm³) densities are
//! also kept verbatim even though they are far above the bulk materials.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotio::{FrameAnnotations, FrameRecord, InstanceRecord};
use crate::camera::{frame_total_area, mask_physical_area, CameraModel};
use crate::clock::Clock;
use crate::error::{Error, Result};
use crate::maskgeom::BitMask;
use crate::scalar::compensated_sum;

const BUILTIN_PRIORS: &str = include_str!("../data/debris_priors.csv");

/// Allowed gap between `a * b * c` and the stated volume of a box prior, cm³.
pub const BOX_VOLUME_TOLERANCE_CM3: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorShape {
    Box,
    Cylinder,
    Irregular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebrisPrior {
    pub class_name: String,
    pub dims_cm: [f64; 3],
    pub volume_cm3: f64,
    pub density_g_cm3: f64,
    pub shape: PriorShape,
}

impl DebrisPrior {
    fn validate(&self) -> std::result::Result<(), String> {
        let values = [self.dims_cm[0], self.dims_cm[1], self.dims_cm[2], self.volume_cm3, self.density_g_cm3];
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(format!("prior {:?}: every numeric field must be positive, found {v}", self.class_name));
        }
        if self.shape == PriorShape::Box {
            let product = self.box_volume_cm3();
            if (product - self.volume_cm3).abs() > BOX_VOLUME_TOLERANCE_CM3 {
                return Err(format!(
                    "prior {:?}: box dimensions give {product} cm³ but volume is {} cm³",
                    self.class_name, self.volume_cm3
                ));
            }
        }
        Ok(())
    }

    pub fn box_volume_cm3(&self) -> f64 {
        self.dims_cm.iter().product()
    }

    /// Footprint `a * b` of the prior, m².
    pub fn footprint_m2(&self) -> f64 {
        self.dims_cm[0] * self.dims_cm[1] * 1e-4
    }

    pub fn mass_g(&self) -> f64 {
        self.volume_cm3 * self.density_g_cm3
    }
}

#[derive(Deserialize)]
struct CsvRow {
    class_name: String,
    a_cm: f64,
    b_cm: f64,
    c_cm: f64,
    volume_cm3: f64,
    density_g_cm3: f64,
    shape: PriorShape,
}

/// Priors keyed by class name, plus dataset-name aliases.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PriorDatabase {
    priors: Vec<DebrisPrior>,
    aliases: BTreeMap<String, String>,
}

impl PriorDatabase {
    /// The seven-row reference table shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_csv_str(BUILTIN_PRIORS).expect("builtin prior table is valid")
    }

    pub fn from_priors(priors: Vec<DebrisPrior>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for p in &priors {
            p.validate().map_err(Error::Validation)?;
            if !seen.insert(p.class_name.as_str()) {
                return Err(Error::validation(format!("duplicate prior class_name {:?}", p.class_name)));
            }
        }
        Ok(Self { priors, aliases: BTreeMap::new() })
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut priors = Vec::new();
        for row in reader.deserialize::<CsvRow>() {
            let row = row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Error::Parse { line, column: 0, message: e.to_string() }
            })?;
            priors.push(DebrisPrior {
                class_name: row.class_name,
                dims_cm: [row.a_cm, row.b_cm, row.c_cm],
                volume_cm3: row.volume_cm3,
                density_g_cm3: row.density_g_cm3,
                shape: row.shape,
            });
        }
        Self::from_priors(priors)
    }

    /// Adds `dataset_name -> prior_name` mappings. Every target must exist.
    pub fn with_aliases<I, K, V>(mut self, aliases: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        for (from, to) in aliases {
            let (from, to) = (from.into(), to.into());
            if self.get(&to).is_none() {
                return Err(Error::UnknownClass { name: to, known: self.class_names() });
            }
            self.aliases.insert(from, to);
        }
        Ok(self)
    }

    pub fn priors(&self) -> &[DebrisPrior] {
        &self.priors
    }

    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }

    pub fn get(&self, class_name: &str) -> Option<&DebrisPrior> {
        self.priors.iter().find(|p| p.class_name == class_name)
    }

    pub fn class_names(&self) -> Vec<String> {
        self.priors.iter().map(|p| p.class_name.clone()).collect()
    }

    /// Looks up a class directly, then through the alias table.
    pub fn resolve(&self, class_name: &str) -> Result<&DebrisPrior> {
        self.get(class_name).or_else(|| self.aliases.get(class_name).and_then(|target| self.get(target))).ok_or_else(
            || Error::UnknownClass {
                name: class_name.to_string(),
                known: self.class_names().into_iter().chain(self.aliases.keys().cloned()).collect(),
            },
        )
    }
}

pub fn load_priors(path: impl AsRef<Path>) -> Result<PriorDatabase> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PriorDatabase::from_csv_str(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationMethod {
    /// Use the class's prior volume unchanged.
    #[default]
    Prior,
    /// Scale the prior volume by observed footprint / prior footprint.
    AreaScaled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceEstimate {
    pub class_name: String,
    pub pixel_count: u64,
    pub area_m2: f64,
    pub volume_cm3: f64,
    pub density_g_cm3: f64,
    pub mass_g: f64,
    pub method: EstimationMethod,
}

impl From<InstanceEstimate> for InstanceRecord {
    fn from(e: InstanceEstimate) -> Self {
        InstanceRecord {
            class_name: e.class_name,
            pixel_count: e.pixel_count,
            area_m2: e.area_m2,
            volume_cm3: e.volume_cm3,
            density_g_cm3: e.density_g_cm3,
            mass_g: e.mass_g,
        }
    }
}

/// Estimate for an instance whose physical footprint is already known.
pub fn estimate_with_area(
    class_name: &str,
    pixel_count: u64,
    area_m2: f64,
    db: &PriorDatabase,
    method: EstimationMethod,
) -> Result<InstanceEstimate> {
    if !(area_m2.is_finite() && area_m2 >= 0.0) {
        return Err(Error::domain(format!("observed area must be non-negative, got {area_m2}")));
    }
    let prior = db.resolve(class_name)?;
    let volume_cm3 = match method {
        EstimationMethod::Prior => prior.volume_cm3,
        EstimationMethod::AreaScaled => prior.volume_cm3 * (area_m2 / prior.footprint_m2()),
    };
    Ok(InstanceEstimate {
        class_name: class_name.to_string(),
        pixel_count,
        area_m2,
        volume_cm3,
        density_g_cm3: prior.density_g_cm3,
        mass_g: volume_cm3 * prior.density_g_cm3,
        method,
    })
}

pub fn estimate_instance(
    class_name: &str,
    pixel_count: u64,
    cam: &CameraModel<f64>,
    db: &PriorDatabase,
    method: EstimationMethod,
) -> Result<InstanceEstimate> {
    let area_m2 = mask_physical_area(pixel_count, cam)?;
    estimate_with_area(class_name, pixel_count, area_m2, db, method)
}

/// Assembles a record from per-instance estimates (in instance order).
pub fn assemble_record(frame_id: &str, estimates: Vec<InstanceEstimate>, clock: &dyn Clock) -> Result<FrameRecord> {
    let areas: Vec<f64> = estimates.iter().map(|e| e.area_m2).collect();
    let total_area_m2 = frame_total_area(&areas)?;
    let total_mass_g = compensated_sum(estimates.iter().map(|e| e.mass_g));
    Ok(FrameRecord {
        frame_id: frame_id.to_string(),
        timestamp_utc: clock.now(),
        instances: estimates.into_iter().map(InstanceRecord::from).collect(),
        total_area_m2,
        total_mass_g,
    })
}

/// Builds the record for one frame. `masks[i]` belongs to `frame.instances[i]`.
pub fn frame_record(
    frame: &FrameAnnotations,
    masks: &[BitMask],
    cam: &CameraModel<f64>,
    db: &PriorDatabase,
    method: EstimationMethod,
    clock: &dyn Clock,
) -> Result<FrameRecord> {
    if masks.len() != frame.instances.len() {
        return Err(Error::validation(format!(
            "frame {:?}: {} masks for {} instances",
            frame.frame_id,
            masks.len(),
            frame.instances.len()
        )));
    }
    let estimates = frame
        .instances
        .iter()
        .zip(masks)
        .map(|(inst, mask)| estimate_instance(inst.class_name(), mask.count_ones(), cam, db, method))
        .collect::<Result<Vec<_>>>()?;
    assemble_record(&frame.frame_id, estimates, clock)
}
