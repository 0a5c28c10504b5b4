//! Binary mask geometry: rasterization, pixel counting, morphology,
//! contour tracing and area estimation.

mod area;
mod contour;
mod montecarlo;
mod morph;
mod raster;

pub use area::{analytic_area, Shape};
pub use contour::{contours, Contour};
pub use montecarlo::{mask_membership, mc_area, McEstimate, Rect, SplitMix64, Xoshiro256StarStar, DEFAULT_SAMPLES};
pub use morph::{morph, MorphOp, StructuringElement};
pub use raster::{rasterize, rasterize_instance, GeometryWarning, Rasterized};

use crate::error::{Error, Result};

/// Row-major binary mask; `true` marks object pixels.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BitMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMask {}x{}", self.width, self.height)?;
        for row in self.bits.chunks(self.width.max(1) as usize) {
            let line: String = row.iter().map(|&b| if b { '#' } else { '.' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

impl BitMask {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![false; width as usize * height as usize] }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::validation(format!(
                "mask of {width}x{height} needs {} bits, got {}",
                width as usize * height as usize,
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    /// Parses rows of `#` (set) and `.` (unset). Handy in tests.
    pub fn from_ascii(rows: &[&str]) -> Self {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.len()) as u32;
        assert!(rows.iter().all(|r| r.len() as u32 == width), "ragged mask rows");
        Self::from_fn(width, height, |x, y| rows[y as usize].as_bytes()[x as usize] == b'#')
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height && self.bits[self.index(x, y)]
    }

    /// Like [`get`](Self::get) but accepts out-of-image coordinates, which read as background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && x < i64::from(self.width)
            && y < i64::from(self.height)
            && self.bits[self.index(x as u32, y as u32)]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        assert!(x < self.width && y < self.height, "({x}, {y}) outside {}x{} mask", self.width, self.height);
        let i = self.index(x, y);
        self.bits[i] = value;
    }

    /// Number of set pixels.
    pub fn count_ones(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width.max(1);
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| ((i as u32) % w, (i as u32) / w))
    }

    pub fn same_shape(&self, other: &BitMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    fn zip_with(&self, other: &BitMask, f: impl Fn(bool, bool) -> bool) -> Result<BitMask> {
        if !self.same_shape(other) {
            return Err(Error::domain(format!(
                "mask size mismatch: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect();
        Ok(BitMask { width: self.width, height: self.height, bits })
    }

    pub fn and(&self, other: &BitMask) -> Result<BitMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BitMask) -> Result<BitMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn not(&self) -> BitMask {
        BitMask { width: self.width, height: self.height, bits: self.bits.iter().map(|&b| !b).collect() }
    }

    pub fn is_subset_of(&self, other: &BitMask) -> bool {
        self.same_shape(other) && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Bounding box of the set pixels as `(x_min, y_min, x_max, y_max)`, inclusive.
    pub fn bounding_box(&self) -> Option<(u32, u32, u32, u32)> {
        self.iter_set().fold(None, |acc, (x, y)| {
            Some(match acc {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            })
        })
    }
}

/// Number of set pixels in `mask`.
pub fn pixel_count(mask: &BitMask) -> u64 {
    mask.count_ones()
}
