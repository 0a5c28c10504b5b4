//! Flow regime and actuation quantities for towing debris.
//!
//! * Reynolds number `Re = rho * v * L / mu`.
//! * Quadratic drag `F_d = 0.5 * rho * v^2 * cd * A`.
//! * Motor torque `tau = k * I * (V - k' * omega)`.
//! * Pull force at the drum `F = tau / r`.
//!
//! Torque is reported raw: above the no-load speed `V / k'` it goes
//! negative and is flagged as [`TorqueRegime::Regenerative`].

use serde::{Deserialize, Serialize};

use crate::annotio::FrameRecord;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_DRAG_COEFFICIENT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidEnvironment<T> {
    /// Fluid density, kg/m³.
    pub rho: T,
    /// Flow or tow speed, m/s.
    pub v: T,
    /// Characteristic length, m.
    #[serde(rename = "L")]
    pub length: T,
    /// Dynamic viscosity, Pa·s.
    pub mu: T,
}

impl<T: Real> FluidEnvironment<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v.is_finite() && v > T::zero();
        if !pos(self.mu) {
            return Err(Error::domain(format!("dynamic viscosity must be positive, got {}", self.mu)));
        }
        if !pos(self.rho) || !pos(self.length) {
            return Err(Error::domain("fluid density and characteristic length must be positive"));
        }
        if !(self.v.is_finite() && self.v >= T::zero()) {
            return Err(Error::domain(format!("velocity must be non-negative, got {}", self.v)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorSpec<T> {
    /// Torque constant.
    pub k: T,
    /// Back-EMF constant, V·s/rad.
    pub k_prime: T,
    /// Drum or wheel radius, m.
    pub radius: T,
}

impl<T: Real> MotorSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k > T::zero()) {
            return Err(Error::domain(format!("motor constant k must be positive, got {}", self.k)));
        }
        if !(self.k_prime.is_finite() && self.k_prime >= T::zero()) {
            return Err(Error::domain(format!("motor constant k' must be non-negative, got {}", self.k_prime)));
        }
        if !(self.radius.is_finite() && self.radius > T::zero()) {
            return Err(Error::domain(format!("drum radius must be positive, got {}", self.radius)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorState<T> {
    /// Amperes.
    #[serde(rename = "I")]
    pub current: T,
    /// Volts.
    #[serde(rename = "V")]
    pub voltage: T,
    /// Shaft speed, rad/s.
    pub omega: T,
}

impl<T: Real> MotorState<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.current.is_finite() && self.current >= T::zero()) {
            return Err(Error::domain(format!("motor current must be non-negative, got {}", self.current)));
        }
        if !(self.omega.is_finite() && self.omega >= T::zero()) {
            return Err(Error::domain(format!("shaft speed must be non-negative, got {}", self.omega)));
        }
        if !self.voltage.is_finite() {
            return Err(Error::domain("motor voltage must be finite"));
        }
        Ok(())
    }
}

pub fn reynolds<T: Real>(env: &FluidEnvironment<T>) -> Result<T> {
    env.validate()?;
    Ok(env.rho * env.v * env.length / env.mu)
}

pub fn drag_force<T: Real>(env: &FluidEnvironment<T>, area_m2: T, cd: T) -> Result<T> {
    env.validate()?;
    if !(area_m2.is_finite() && area_m2 >= T::zero()) {
        return Err(Error::domain(format!("drag area must be non-negative, got {area_m2}")));
    }
    if !(cd.is_finite() && cd > T::zero()) {
        return Err(Error::domain(format!("drag coefficient must be positive, got {cd}")));
    }
    Ok(T::lit(0.5) * env.rho * env.v * env.v * cd * area_m2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorqueRegime {
    Motoring,
    /// Shaft faster than the no-load speed; torque is negative.
    Regenerative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Torque<T> {
    pub value: T,
    pub regime: TorqueRegime,
}

pub fn motor_torque<T: Real>(spec: &MotorSpec<T>, state: &MotorState<T>) -> Result<Torque<T>> {
    spec.validate()?;
    state.validate()?;
    let value = spec.k * state.current * (state.voltage - spec.k_prime * state.omega);
    let regime = if value < T::zero() { TorqueRegime::Regenerative } else { TorqueRegime::Motoring };
    Ok(Torque { value, regime })
}

pub fn pull_force<T: Real>(torque: T, radius: T) -> Result<T> {
    if !(radius.is_finite() && radius > T::zero()) {
        return Err(Error::domain(format!("radius must be positive, got {radius}")));
    }
    Ok(torque / radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility<T> {
    pub verdict: Verdict,
    /// Available pull minus required drag, N.
    pub margin_n: T,
    pub available_n: T,
    pub required_n: T,
    pub torque_regime: TorqueRegime,
}

/// Compares the motor's pull force against the drag on a debris footprint.
pub fn feasibility_for_area<T: Real>(
    area_m2: T,
    env: &FluidEnvironment<T>,
    spec: &MotorSpec<T>,
    state: &MotorState<T>,
    cd: T,
) -> Result<Feasibility<T>> {
    let torque = motor_torque(spec, state)?;
    let available_n = pull_force(torque.value, spec.radius)?;
    let required_n = drag_force(env, area_m2, cd)?;
    let verdict = if available_n >= required_n { Verdict::Feasible } else { Verdict::Infeasible };
    Ok(Feasibility {
        verdict,
        margin_n: available_n - required_n,
        available_n,
        required_n,
        torque_regime: torque.regime,
    })
}

/// Feasibility of hauling everything detected in a frame.
pub fn feasibility(
    record: &FrameRecord,
    env: &FluidEnvironment<f64>,
    spec: &MotorSpec<f64>,
    state: &MotorState<f64>,
    cd: f64,
) -> Result<Feasibility<f64>> {
    feasibility_for_area(record.total_area_m2, env, spec, state, cd)
}
