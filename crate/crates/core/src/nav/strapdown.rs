//! Strapdown mechanisation in the fixed local frame.
//!
//! Earth rotation, Coriolis and transport rate are neglected and gravity is
//! the constant NED vector. Attitude uses the exact rotation-vector
//! exponential per step; the specific force is rotated with the mid-step
//! attitude and position integrates the mean velocity of the step.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

#[cfg(not(feature = "std"))]
use num_traits::Float as _;

use super::frame::LocalFrame;
use super::gravity_ned;
use super::main_model::MainState;
use super::skew;
use crate::error::{Error, Result};

/// Largest accepted propagation step (s).
pub const MAX_STEP: f64 = 0.1;

/// One IMU sample: mean specific force and angular rate over the interval
/// ending at `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    /// m/s², body frame.
    pub f_ib_b: Vector3<f64>,
    /// rad/s, body frame.
    pub w_ib_b: Vector3<f64>,
}

impl ImuSample {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.f_ib_b.iter().chain(self.w_ib_b.iter()).all(|v| v.is_finite())
    }
}

/// First-order Gauss-Markov mean propagation `b · exp(−dt/τ)`.
pub fn bias_propagate(b: &Vector3<f64>, tau: f64, dt: f64) -> Vector3<f64> {
    b * (-dt / tau).exp()
}

pub(crate) fn check_step(dt: f64) -> Result<()> {
    if dt > 0.0 && dt <= MAX_STEP {
        Ok(())
    } else {
        Err(Error::InvalidInput("strapdown step outside (0, 0.1] s"))
    }
}

/// Position, velocity and attitude after one step with already
/// bias-corrected specific force `f` and rate `w`.
pub(crate) fn mechanize(
    p: &Vector3<f64>,
    v: &Vector3<f64>,
    q: &UnitQuaternion<f64>,
    f: &Vector3<f64>,
    w: &Vector3<f64>,
    dt: f64,
    frame: &LocalFrame,
) -> (Vector3<f64>, Vector3<f64>, UnitQuaternion<f64>) {
    let theta = w * dt;
    let q_mid = q * UnitQuaternion::from_scaled_axis(theta * 0.5);
    let mut q_next = q * UnitQuaternion::from_scaled_axis(theta);
    q_next.renormalize();
    let v_next = v + (q_mid * f + gravity_ned()) * dt;
    let p_next = p + frame.c_n_e() * ((v + v_next) * (0.5 * dt));
    (p_next, v_next, q_next)
}

/// One strapdown step of a state whose position and velocity refer to the
/// IMU itself (no lever arm). Biases follow [`bias_propagate`], the clock
/// bias integrates the drift.
pub fn strapdown_propagate(
    state: &MainState,
    imu: &ImuSample,
    dt: f64,
    frame: &LocalFrame,
    accel_bias_tau: f64,
    gyro_bias_tau: f64,
) -> Result<MainState> {
    check_step(dt)?;
    let f = imu.f_ib_b - state.b_a;
    let w = imu.w_ib_b - state.b_g;
    let (p, v, q) = mechanize(&state.p_ea_e, &state.v_ea_n, &state.q_b_n, &f, &w, dt, frame);
    Ok(MainState {
        p_ea_e: p,
        v_ea_n: v,
        q_b_n: q,
        b_a: bias_propagate(&state.b_a, accel_bias_tau, dt),
        b_g: bias_propagate(&state.b_g, gyro_bias_tau, dt),
        c_b: state.c_b + state.c_d * dt,
        c_d: state.c_d,
    })
}

/// Right Jacobian of SO(3): `Exp(θ + δ) ≈ Exp(θ) Exp(J_r(θ) δ)`.
pub fn right_jacobian(theta: &Vector3<f64>) -> Matrix3<f64> {
    let a = theta.norm();
    let k = skew(theta);
    if a < 1e-6 {
        return Matrix3::identity() - k * 0.5 + k * k / 6.0;
    }
    let a2 = a * a;
    Matrix3::identity() - k * ((1.0 - a.cos()) / a2) + k * k * ((a - a.sin()) / (a2 * a))
}
