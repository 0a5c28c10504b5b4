use crate::error::{Error, Result};
use crate::scalar::Real;

/// Regular shapes with closed-form areas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape<T> {
    Rectangle { width: T, height: T },
    Circle { radius: T },
}

pub fn analytic_area<T: Real>(shape: Shape<T>) -> Result<T> {
    let positive = |v: T| v.is_finite() && v > T::zero();
    match shape {
        Shape::Rectangle { width, height } if positive(width) && positive(height) => Ok(width * height),
        Shape::Circle { radius } if positive(radius) => Ok(T::PI() * radius * radius),
        _ => Err(Error::domain(format!("shape dimensions must be positive: {shape:?}"))),
    }
}
