//! Monte Carlo area estimation over a rectangle.
//!
//! Sampling is reproducible bit-for-bit across implementations:
//!
//! 1. Seed expansion uses SplitMix64: `state += 0x9E3779B97F4A7C15;
//!    z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//!    z = (z ^ (z >> 27)) * 0x94D049BB133111EB; output z ^ (z >> 31)`
//!    (wrapping arithmetic). Four consecutive outputs from the user seed
//!    become the xoshiro256** state `s0..s3`.
//! 2. Each draw is xoshiro256**: `result = rotl(s1 * 5, 7) * 9;
//!    t = s1 << 17; s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t;
//!    s3 = rotl(s3, 45)`.
//! 3. A draw maps to `[0, 1)` as `(result >> 11) * 2^-53`.
//! 4. Sample `i` consumes two draws, `ux` then `uy`, and lands at
//!    `(x0 + ux * (x1 - x0), y0 + uy * (y1 - y0))`.

use super::BitMask;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default sample count for area estimates (a coarse budget; accuracy of
/// about 1% needs on the order of 10^5 samples).
pub const DEFAULT_SAMPLES: u64 = 100;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone)]
pub struct Xoshiro256StarStar {
    s: [u64; 4],
}

impl Xoshiro256StarStar {
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = SplitMix64::new(seed);
        Self { s: [sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64()] }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Axis-aligned sampling rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Real> Rect<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Result<Self> {
        let finite = [x0, y0, x1, y1].iter().all(|v| v.is_finite());
        if !finite || !(x0 < x1 && y0 < y1) {
            return Err(Error::domain(format!("degenerate sampling rectangle ({x0}, {y0})-({x1}, {y1})")));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn area(&self) -> T {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    /// In units of the rectangle's area.
    pub area: T,
    pub hits: u64,
    pub samples: u64,
    pub std_error: T,
    pub seed: u64,
}

/// Estimates the area of `{p in rect : inside(p)}` as
/// `rect_area * hits / samples`, with binomial standard error
/// `rect_area * sqrt(p (1 - p) / samples)`.
pub fn mc_area<T: Real>(
    inside: impl Fn(T, T) -> bool,
    rect: Rect<T>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    let rect = Rect::new(rect.x0, rect.y0, rect.x1, rect.y1)?;
    if samples == 0 {
        return Err(Error::domain("Monte Carlo estimate needs at least one sample"));
    }
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let (dx, dy) = (rect.x1 - rect.x0, rect.y1 - rect.y0);
    let mut hits = 0u64;
    for _ in 0..samples {
        let ux = T::lit(rng.next_f64());
        let uy = T::lit(rng.next_f64());
        if inside(ux * dx + rect.x0, uy * dy + rect.y0) {
            hits += 1;
        }
    }
    let rect_area = rect.area();
    let n = T::from_count(samples);
    let p = T::from_count(hits) / n;
    Ok(McEstimate {
        area: rect_area * T::from_count(hits) / n,
        hits,
        samples,
        std_error: rect_area * (p * (T::one() - p) / n).sqrt(),
        seed,
    })
}

/// Point-membership predicate for a mask in pixel coordinates: `(x, y)`
/// belongs to pixel `(floor(x), floor(y))`.
pub fn mask_membership(mask: &BitMask) -> impl Fn(f64, f64) -> bool + '_ {
    move |x, y| mask.get_signed(x.floor() as i64, y.floor() as i64)
}
