//! Pixel-to-metric conversion for a pinhole camera looking at a flat scene.
//!
//! A pixel's footprint on the scene plane has side
//! `(sensor_size / pixels) * (distance / focal_length)`. Sensor size and
//! focal length are in millimeters, so their ratio is dimensionless and the
//! footprint side comes out in the unit of the distance (meters).
//!
//! A mask's physical area is `pixel_size^2 * pixel_count`: pixels are taken
//! to be square, and the squared side is the footprint area each pixel
//! contributes. Multiplying the side length by a count would give a length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel<T> {
    /// Sensor extent along one axis, mm.
    #[serde(rename = "sensor_mm")]
    pub sensor_size_mm: T,
    /// Pixels along the same axis.
    #[serde(rename = "pixels")]
    pub pixels_along_axis: u32,
    #[serde(rename = "focal_mm")]
    pub focal_length_mm: T,
    /// Range to the (flat) scene, m.
    #[serde(rename = "distance_m")]
    pub distance_m: T,
}

impl<T: Real> CameraModel<T> {
    pub fn new(sensor_size_mm: T, pixels_along_axis: u32, focal_length_mm: T, distance_m: T) -> Result<Self> {
        let cam = Self { sensor_size_mm, pixels_along_axis, focal_length_mm, distance_m };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(self.sensor_size_mm) {
            return Err(Error::domain(format!("sensor size must be positive, got {}", self.sensor_size_mm)));
        }
        if self.pixels_along_axis == 0 {
            return Err(Error::domain("pixel count along the sensor axis must be positive"));
        }
        if !positive(self.focal_length_mm) {
            return Err(Error::domain(format!("focal length must be positive, got {}", self.focal_length_mm)));
        }
        if !positive(self.distance_m) {
            return Err(Error::domain(format!("distance to object must be positive, got {}", self.distance_m)));
        }
        Ok(())
    }
}

/// Footprint side of one pixel on the scene plane, m/px.
pub fn pixel_size<T: Real>(cam: &CameraModel<T>) -> Result<T> {
    cam.validate()?;
    let pixels = T::from_count(u64::from(cam.pixels_along_axis));
    Ok((cam.sensor_size_mm / pixels) * (cam.distance_m / cam.focal_length_mm))
}

/// Physical area of a mask with `pixel_count` set pixels, m².
pub fn mask_physical_area<T: Real>(pixel_count: u64, cam: &CameraModel<T>) -> Result<T> {
    let side = pixel_size(cam)?;
    Ok(side * side * T::from_count(pixel_count))
}

/// Same as [`mask_physical_area`] for a fractional pixel area (e.g. a Monte Carlo estimate).
pub fn physical_area_from_pixels<T: Real>(pixel_area: T, cam: &CameraModel<T>) -> Result<T> {
    if !(pixel_area.is_finite() && pixel_area >= T::zero()) {
        return Err(Error::domain(format!("pixel area must be non-negative, got {pixel_area}")));
    }
    let side = pixel_size(cam)?;
    Ok(side * side * pixel_area)
}

/// Compensated sum of per-instance areas.
pub fn frame_total_area<T: Real>(instance_areas: &[T]) -> Result<T> {
    let mut acc = CompensatedSum::new();
    for &a in instance_areas {
        if !(a.is_finite() && a >= T::zero()) {
            return Err(Error::domain(format!("instance area must be non-negative, got {a}")));
        }
        acc.add(a);
    }
    Ok(acc.total())
}
