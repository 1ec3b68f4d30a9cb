//! The 8-error-state GNSS-only fallback filter with a uniform-velocity model.
//!
//! Error state: `[δp (ECEF), δv (NED), δc_b, δc_d]`. The process noise is a
//! white acceleration per NED axis plus clock random walks.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::frame::LocalFrame;
use super::gnss::{linearize_gnss, GnssColumns, GnssObservation};
use super::main_model::{self, MainState};
use super::noise::NoiseParams;
use crate::error::{Error, Result};
use crate::filter::{symmetrize, FilterModel, Linearization, Transition};

pub const POS: usize = 0;
pub const VEL: usize = 3;
pub const CB: usize = 6;
pub const CD: usize = 7;
pub const ERROR_DIM: usize = 8;

/// Process-noise layout: NED acceleration, clock bias and drift driving noise.
pub const W_ACC: usize = 0;
pub const W_CB: usize = 3;
pub const W_CD: usize = 4;
pub const NOISE_DIM: usize = 5;

/// Main-filter error-state indices carried by the fallback filter, in fallback order.
pub const MAIN_INDICES: [usize; ERROR_DIM] =
    [main_model::POS, main_model::POS + 1, main_model::POS + 2, main_model::VEL, main_model::VEL + 1, main_model::VEL + 2, main_model::CB, main_model::CD];

#[derive(Clone, Debug, PartialEq)]
pub struct FallbackState {
    /// Antenna position, ECEF (m).
    pub p_ea_e: Vector3<f64>,
    /// Antenna velocity, NED (m/s).
    pub v_ea_n: Vector3<f64>,
    pub c_b: f64,
    pub c_d: f64,
}

impl FallbackState {
    pub fn from_main(main: &MainState) -> Self {
        FallbackState { p_ea_e: main.p_ea_e, v_ea_n: main.v_ea_n, c_b: main.c_b, c_d: main.c_d }
    }

    pub fn is_finite(&self) -> bool {
        self.p_ea_e.iter().chain(self.v_ea_n.iter()).all(|v| v.is_finite()) && self.c_b.is_finite() && self.c_d.is_finite()
    }

    pub fn boxplus(&self, dx: &DVector<f64>) -> Self {
        FallbackState {
            p_ea_e: self.p_ea_e + Vector3::new(dx[POS], dx[POS + 1], dx[POS + 2]),
            v_ea_n: self.v_ea_n + Vector3::new(dx[VEL], dx[VEL + 1], dx[VEL + 2]),
            c_b: self.c_b + dx[CB],
            c_d: self.c_d + dx[CD],
        }
    }

    pub fn boxminus(&self, other: &Self) -> DVector<f64> {
        let mut dx = DVector::zeros(ERROR_DIM);
        dx.fixed_rows_mut::<3>(POS).copy_from(&(self.p_ea_e - other.p_ea_e));
        dx.fixed_rows_mut::<3>(VEL).copy_from(&(self.v_ea_n - other.v_ea_n));
        dx[CB] = self.c_b - other.c_b;
        dx[CD] = self.c_d - other.c_d;
        dx
    }
}

/// Constant-velocity step: `p += C_n^e v dt`, `c_b += c_d dt`.
pub fn uniform_propagate(state: &FallbackState, dt: f64, frame: &LocalFrame) -> Result<FallbackState> {
    FallbackModel::step(state, dt, frame, &DVector::zeros(NOISE_DIM))
}

/// Covariance block of the fallback states taken from a main-filter covariance.
pub fn covariance_from_main(p_main: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(ERROR_DIM, ERROR_DIM, |i, j| p_main[(MAIN_INDICES[i], MAIN_INDICES[j])])
}

#[derive(Clone, Debug)]
pub struct FallbackModel {
    pub frame: LocalFrame,
    pub noise: NoiseParams,
}

impl FallbackModel {
    pub fn new(frame: LocalFrame, noise: NoiseParams) -> Self {
        FallbackModel { frame, noise }
    }

    fn step(state: &FallbackState, dt: f64, frame: &LocalFrame, w: &DVector<f64>) -> Result<FallbackState> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("propagation step must be positive"));
        }
        let a = Vector3::new(w[W_ACC], w[W_ACC + 1], w[W_ACC + 2]);
        Ok(FallbackState {
            p_ea_e: state.p_ea_e + frame.c_n_e() * (state.v_ea_n * dt + a * (0.5 * dt * dt)),
            v_ea_n: state.v_ea_n + a * dt,
            c_b: state.c_b + state.c_d * dt + w[W_CB],
            c_d: state.c_d + w[W_CD],
        })
    }

    /// Nonlinear step driven by an explicit noise sample (layout [`NOISE_DIM`]).
    pub fn propagate_with_noise(&self, state: &FallbackState, dt: f64, w: &DVector<f64>) -> Result<FallbackState> {
        Self::step(state, dt, &self.frame, w)
    }

    pub fn jacobians(&self, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let c = self.frame.c_n_e();
        let mut f = DMatrix::identity(ERROR_DIM, ERROR_DIM);
        f.fixed_view_mut::<3, 3>(POS, VEL).copy_from(&(c * dt));
        f[(CB, CD)] = dt;
        let mut g = DMatrix::zeros(ERROR_DIM, NOISE_DIM);
        g.fixed_view_mut::<3, 3>(POS, W_ACC).copy_from(&(c * (0.5 * dt * dt)));
        g.fixed_view_mut::<3, 3>(VEL, W_ACC).copy_from(&(Matrix3::identity() * dt));
        g[(CB, W_CB)] = 1.0;
        g[(CD, W_CD)] = 1.0;
        (f, g)
    }

    /// White acceleration of intensity `σ_a²` held over the step: variance `σ_a²/dt`.
    pub fn process_noise(&self, dt: f64) -> DMatrix<f64> {
        let n = &self.noise;
        let mut q = DVector::zeros(NOISE_DIM);
        for k in 0..3 {
            q[W_ACC + k] = n.fallback_accel[k] * n.fallback_accel[k] / dt;
        }
        q[W_CB] = n.clock_bias_density * n.clock_bias_density * dt;
        q[W_CD] = n.clock_drift_density * n.clock_drift_density * dt;
        DMatrix::from_diagonal(&q)
    }

    /// Initial covariance from the position, velocity and clock sigmas.
    pub fn initial_covariance(&self) -> DMatrix<f64> {
        let i = &self.noise.initial;
        let c = self.frame.c_n_e();
        let mut p = DMatrix::zeros(ERROR_DIM, ERROR_DIM);
        let pos = c * Matrix3::from_diagonal(&i.position.component_mul(&i.position)) * c.transpose();
        p.fixed_view_mut::<3, 3>(POS, POS).copy_from(&pos);
        p.fixed_view_mut::<3, 3>(VEL, VEL).copy_from(&(Matrix3::identity() * (i.velocity * i.velocity)));
        p[(CB, CB)] = i.clock_bias * i.clock_bias;
        p[(CD, CD)] = i.clock_drift * i.clock_drift;
        symmetrize(&mut p);
        p
    }
}

impl FilterModel for FallbackModel {
    type State = FallbackState;
    type Input = ();
    type Observation = [GnssObservation];

    fn error_dim(&self) -> usize {
        ERROR_DIM
    }

    fn transition(&self, state: &FallbackState, _input: &(), dt: f64) -> Result<Transition<FallbackState>> {
        let next = uniform_propagate(state, dt, &self.frame)?;
        let (f, g) = self.jacobians(dt);
        Ok(Transition { state: next, f, g, q: self.process_noise(dt) })
    }

    fn linearize(&self, state: &FallbackState, observations: &[GnssObservation]) -> Result<Linearization> {
        let cols = GnssColumns { dim: ERROR_DIM, pos: POS, vel: VEL, clock_bias: CB, clock_drift: CD };
        linearize_gnss(&state.p_ea_e, &state.v_ea_n, state.c_b, state.c_d, observations, &self.frame, self.noise.c_rho, self.noise.c_d, cols)
    }

    fn inject(&self, state: &FallbackState, correction: &DVector<f64>) -> FallbackState {
        state.boxplus(correction)
    }

    fn is_finite(&self, state: &FallbackState) -> bool {
        state.is_finite()
    }
}
