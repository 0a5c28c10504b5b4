use crate::annotio::Instance;
use crate::error::{Error, Result};
use crate::maskgeom::{rasterize_instance, BitMask};

use super::IouKind;

fn check_box(b: &[f64; 4]) -> Result<()> {
    if b.iter().all(|v| v.is_finite()) && b[0] < b[2] && b[1] < b[3] {
        Ok(())
    } else {
        Err(Error::domain(format!("invalid box {b:?}")))
    }
}

/// Continuous-area IoU of two `[x_min, y_min, x_max, y_max]` boxes.
pub fn box_iou(a: &[f64; 4], b: &[f64; 4]) -> Result<f64> {
    check_box(a)?;
    check_box(b)?;
    let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    let area = |r: &[f64; 4]| (r[2] - r[0]) * (r[3] - r[1]);
    Ok(inter / (area(a) + area(b) - inter))
}

/// Pixel-set IoU. Both masks must share a size and at least one must be non-empty.
pub fn mask_iou(a: &BitMask, b: &BitMask) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::domain(format!(
            "mask size mismatch: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (mut inter, mut union) = (0u64, 0u64);
    for (&x, &y) in a.bits().iter().zip(b.bits()) {
        inter += u64::from(x && y);
        union += u64::from(x || y);
    }
    if union == 0 {
        return Err(Error::domain("IoU of two empty masks is undefined"));
    }
    Ok(inter as f64 / union as f64)
}

/// Region an instance occupies for IoU purposes.
#[derive(Debug, Clone)]
pub(crate) enum Region {
    Box([f64; 4]),
    Mask(BitMask),
}

impl Region {
    pub(crate) fn of(inst: &Instance, kind: IouKind, width: u32, height: u32) -> Self {
        match kind {
            IouKind::Box => Region::Box(inst.bounds()),
            IouKind::Mask => Region::Mask(rasterize_instance(inst, width, height).mask),
        }
    }

    /// IoU with undefined cases (degenerate boxes, two empty masks) read as no overlap.
    pub(crate) fn iou(&self, other: &Region) -> f64 {
        let r = match (self, other) {
            (Region::Box(a), Region::Box(b)) => box_iou(a, b),
            (Region::Mask(a), Region::Mask(b)) => mask_iou(a, b),
            _ => unreachable!("regions of one evaluation share a kind"),
        };
        r.unwrap_or(0.0)
    }
}

/// IoU of two instances of a `width` x `height` frame.
pub fn iou(a: &Instance, b: &Instance, kind: IouKind, width: u32, height: u32) -> Result<f64> {
    match kind {
        IouKind::Box => box_iou(&a.bounds(), &b.bounds()),
        IouKind::Mask => {
            mask_iou(&rasterize_instance(a, width, height).mask, &rasterize_instance(b, width, height).mask)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Counts unit cells covered by each integer box.
    fn cell_oracle(a: [i32; 4], b: [i32; 4]) -> f64 {
        let inside = |r: [i32; 4], x: i32, y: i32| x >= r[0] && x < r[2] && y >= r[1] && y < r[3];
        let (mut inter, mut union) = (0, 0);
        for y in -10..10 {
            for x in -10..10 {
                let (ia, ib) = (inside(a, x, y), inside(b, x, y));
                inter += i32::from(ia && ib);
                union += i32::from(ia || ib);
            }
        }
        f64::from(inter) / f64::from(union)
    }

    #[test]
    fn box_examples() {
        let a = [0.0, 0.0, 2.0, 2.0];
        assert_eq!(box_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(box_iou(&a, &[5.0, 5.0, 6.0, 6.0]).unwrap(), 0.0);
        let expected = cell_oracle([0, 0, 2, 2], [1, 0, 3, 2]);
        assert_eq!(expected, 1.0 / 3.0);
        assert_eq!(box_iou(&a, &[1.0, 0.0, 3.0, 2.0]).unwrap(), expected);
        assert!(box_iou(&a, &[1.0, 1.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn box_matches_cell_oracle_on_grid() {
        let boxes = [[0, 0, 3, 2], [-2, -1, 1, 4], [1, 1, 5, 5], [2, -3, 4, 0], [-5, -5, 5, 5]];
        for a in boxes {
            for b in boxes {
                let f = |r: [i32; 4]| r.map(f64::from);
                assert!((box_iou(&f(a), &f(b)).unwrap() - cell_oracle(a, b)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mask_examples() {
        let a = BitMask::from_ascii(&["##..", "##.."]);
        let b = BitMask::from_ascii(&[".##.", ".##."]);
        assert_eq!(mask_iou(&a, &b).unwrap(), 1.0 / 3.0);
        assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
        assert!(mask_iou(&BitMask::new(2, 2), &BitMask::new(2, 2)).is_err());
        assert!(mask_iou(&a, &BitMask::new(3, 2)).is_err());
    }
}
