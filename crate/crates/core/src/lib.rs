//! Marine-debris quantification from segmentation masks.

pub mod annotio;
pub mod camera;
pub mod clock;
pub mod error;
pub mod evalmetrics;
pub mod features;
pub mod hydro;
pub mod maskgeom;
pub mod massmodel;
pub mod pipeline;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CameraModelF64 = camera::CameraModel<f64>;
pub type CameraModelF32 = camera::CameraModel<f32>;
pub type FluidEnvironmentF64 = hydro::FluidEnvironment<f64>;
pub type FluidEnvironmentF32 = hydro::FluidEnvironment<f32>;
pub type MotorSpecF64 = hydro::MotorSpec<f64>;
pub type MotorSpecF32 = hydro::MotorSpec<f32>;
pub type MotorStateF64 = hydro::MotorState<f64>;
pub type MotorStateF32 = hydro::MotorState<f32>;
pub type McEstimateF64 = maskgeom::McEstimate<f64>;
pub type McEstimateF32 = maskgeom::McEstimate<f32>;
pub type DataMatrixF64 = features::DataMatrix<f64>;
pub type DataMatrixF32 = features::DataMatrix<f32>;
pub type PcaResultF64 = features::PcaResult<f64>;
pub type PcaResultF32 = features::PcaResult<f32>;
