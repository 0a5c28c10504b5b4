//! Binary erosion, dilation, opening and closing with 3x3 structuring
//! elements. Pixels outside the image read as background, so erosion eats
//! objects that touch the border.

use super::BitMask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphOp {
    Erode,
    Dilate,
    /// `dilate(erode(m))`
    Open,
    /// `erode(dilate(m))`
    Close,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructuringElement {
    /// Center plus its four edge neighbors.
    Cross,
    /// Full 3x3 block.
    #[default]
    Square,
}

const CROSS: &[(i64, i64)] = &[(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)];
const SQUARE: &[(i64, i64)] = &[(-1, -1), (0, -1), (1, -1), (-1, 0), (0, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

impl StructuringElement {
    pub fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            StructuringElement::Cross => CROSS,
            StructuringElement::Square => SQUARE,
        }
    }
}

fn erode_once(m: &BitMask, el: StructuringElement) -> BitMask {
    let offs = el.offsets();
    BitMask::from_fn(m.width(), m.height(), |x, y| {
        offs.iter().all(|&(dx, dy)| m.get_signed(i64::from(x) + dx, i64::from(y) + dy))
    })
}

fn dilate_once(m: &BitMask, el: StructuringElement) -> BitMask {
    // all elements here are symmetric, so reflection is a no-op
    let offs = el.offsets();
    BitMask::from_fn(m.width(), m.height(), |x, y| {
        offs.iter().any(|&(dx, dy)| m.get_signed(i64::from(x) + dx, i64::from(y) + dy))
    })
}

fn repeat(m: &BitMask, n: u32, step: impl Fn(&BitMask) -> BitMask) -> BitMask {
    (0..n).fold(m.clone(), |acc, _| step(&acc))
}

/// Applies `op` with `element`. For open/close, `iterations` erosions are
/// followed by as many dilations (or the reverse).
pub fn morph(mask: &BitMask, op: MorphOp, element: StructuringElement, iterations: u32) -> Result<BitMask> {
    if iterations == 0 {
        return Err(Error::domain("morphology needs at least one iteration"));
    }
    let erode = |m: &BitMask| erode_once(m, element);
    let dilate = |m: &BitMask| dilate_once(m, element);
    Ok(match op {
        MorphOp::Erode => repeat(mask, iterations, erode),
        MorphOp::Dilate => repeat(mask, iterations, dilate),
        MorphOp::Open => repeat(&repeat(mask, iterations, erode), iterations, dilate),
        MorphOp::Close => repeat(&repeat(mask, iterations, dilate), iterations, erode),
    })
}
