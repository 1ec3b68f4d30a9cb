//! Navigation models: local frame, strapdown mechanisation, GNSS observables
//! and the two filter models built on them.

pub mod fallback;
pub mod frame;
pub mod gnss;
pub mod main_model;
pub mod noise;
pub mod strapdown;

pub use fallback::{FallbackModel, FallbackState};
pub use frame::LocalFrame;
pub use gnss::{Corrections, GnssObservation};
pub use main_model::{MainModel, MainState};
pub use noise::{InitialSigma, NoiseParams};
pub use strapdown::ImuSample;

use nalgebra::{Matrix3, Vector3};

/// Standard gravity along NED down.
pub const GRAVITY: f64 = 9.80665;

pub fn gravity_ned() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, GRAVITY)
}

/// Cross-product matrix, `skew(a) b = a × b`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}
