//! Scanline polygon fill.
//!
//! A pixel `(x, y)` is set iff its center `(x + 0.5, y + 0.5)` lies inside
//! the polygon under the even-odd rule. An edge crosses a scanline when its
//! endpoints lie strictly on opposite sides of `y + 0.5` after treating a
//! vertex exactly on the line as above it; a center counts as inside when
//! an odd number of crossings lie strictly to its right.

use super::BitMask;
use crate::annotio::Instance;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryWarning {
    /// The outline covers no pixel center.
    DegenerateGeometry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rasterized {
    pub mask: BitMask,
    pub warning: Option<GeometryWarning>,
}

pub fn rasterize<T: Real>(vertices: &[[T; 2]], width: u32, height: u32) -> Rasterized {
    let mut mask = BitMask::new(width, height);
    let half = T::lit(0.5);
    let mut crossings: Vec<T> = Vec::with_capacity(vertices.len());
    let n = vertices.len();

    for y in 0..height {
        let yc = T::from_count(u64::from(y)) + half;
        crossings.clear();
        for i in 0..n {
            let [xi, yi] = vertices[i];
            let [xj, yj] = vertices[(i + n - 1) % n];
            if (yi > yc) != (yj > yc) {
                crossings.push((xj - xi) * (yc - yi) / (yj - yi) + xi);
            }
        }
        crossings.sort_by(|a, b| a.partial_cmp(b).expect("finite crossings"));

        for pair in crossings.chunks_exact(2) {
            let (lo, hi) = (pair[0], pair[1]);
            // candidate columns around [lo, hi); the exact comparison decides
            let first = (lo.floor() - T::one()).max(T::zero()).to_i64().unwrap_or(0).max(0);
            let last = hi.ceil().to_i64().unwrap_or(i64::MAX).min(i64::from(width) - 1);
            for x in first..=last {
                let xc = T::from_count(x as u64) + half;
                if lo <= xc && xc < hi {
                    mask.set(x as u32, y, true);
                }
            }
        }
    }

    let warning = mask.is_empty().then_some(GeometryWarning::DegenerateGeometry);
    Rasterized { mask, warning }
}

/// Rasterizes a polygon or box instance into a `width` x `height` mask.
pub fn rasterize_instance(instance: &Instance, width: u32, height: u32) -> Rasterized {
    rasterize(&instance.outline(), width, height)
}
