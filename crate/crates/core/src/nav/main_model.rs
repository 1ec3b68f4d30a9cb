//! The 17-error-state tightly-coupled main filter.
//!
//! The state holds the antenna position (ECEF) and velocity (NED). Each step
//! moves to the IMU through the lever arm, runs the strapdown there and moves
//! back, so the lever-arm coupling lives in `F` and `G` while the GNSS rows of
//! `H` only touch position, velocity and the clock.
//!
//! Error state: `[δp (ECEF), δv (NED), δψ (NED), δb_a, δb_g, δc_b, δc_d]`, with
//! the attitude error defined by `C_true = Exp(δψ) Ĉ`.

use nalgebra::{DMatrix, DVector, Matrix3, UnitQuaternion, Vector3};

#[cfg(not(feature = "std"))]
use num_traits::Float as _;

use super::frame::LocalFrame;
use super::gnss::{linearize_gnss, GnssColumns, GnssObservation};
use super::noise::NoiseParams;
use super::skew;
use super::strapdown::{bias_propagate, check_step, mechanize, right_jacobian, ImuSample};
use crate::error::Result;
use crate::filter::{FilterModel, Linearization, Transition};

pub const POS: usize = 0;
pub const VEL: usize = 3;
pub const ATT: usize = 6;
pub const BA: usize = 9;
pub const BG: usize = 12;
pub const CB: usize = 15;
pub const CD: usize = 16;
pub const ERROR_DIM: usize = 17;

/// Process-noise layout: accelerometer and gyro white noise, accelerometer
/// and gyro bias driving noise, clock bias and drift driving noise.
pub const W_ACC: usize = 0;
pub const W_GYRO: usize = 3;
pub const W_BA: usize = 6;
pub const W_BG: usize = 9;
pub const W_CB: usize = 12;
pub const W_CD: usize = 13;
pub const NOISE_DIM: usize = 14;

/// Antenna lever arm used by the test vehicle, body frame (m).
pub const DEFAULT_LEVER_ARM: [f64; 3] = [0.0, 0.0, -0.1131];

/// Full main-filter state (18 elements with the quaternion).
#[derive(Clone, Debug, PartialEq)]
pub struct MainState {
    /// Antenna position, ECEF (m).
    pub p_ea_e: Vector3<f64>,
    /// Antenna velocity, NED (m/s).
    pub v_ea_n: Vector3<f64>,
    /// Body→NED attitude.
    pub q_b_n: UnitQuaternion<f64>,
    /// m/s².
    pub b_a: Vector3<f64>,
    /// rad/s.
    pub b_g: Vector3<f64>,
    /// m.
    pub c_b: f64,
    /// m/s.
    pub c_d: f64,
}

impl MainState {
    /// At rest, level, north-facing at `p_ea_e`.
    pub fn at(p_ea_e: Vector3<f64>) -> Self {
        MainState {
            p_ea_e,
            v_ea_n: Vector3::zeros(),
            q_b_n: UnitQuaternion::identity(),
            b_a: Vector3::zeros(),
            b_g: Vector3::zeros(),
            c_b: 0.0,
            c_d: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p_ea_e.iter().chain(self.v_ea_n.iter()).chain(self.b_a.iter()).chain(self.b_g.iter()).all(|v| v.is_finite())
            && self.q_b_n.coords.iter().all(|v| v.is_finite())
            && self.c_b.is_finite()
            && self.c_d.is_finite()
    }

    /// `self ⊞ δx`.
    pub fn boxplus(&self, dx: &DVector<f64>) -> MainState {
        let v3 = |i: usize| Vector3::new(dx[i], dx[i + 1], dx[i + 2]);
        let mut q = UnitQuaternion::from_scaled_axis(v3(ATT)) * self.q_b_n;
        q.renormalize();
        MainState {
            p_ea_e: self.p_ea_e + v3(POS),
            v_ea_n: self.v_ea_n + v3(VEL),
            q_b_n: q,
            b_a: self.b_a + v3(BA),
            b_g: self.b_g + v3(BG),
            c_b: self.c_b + dx[CB],
            c_d: self.c_d + dx[CD],
        }
    }

    /// Error state `self ⊟ other`, the inverse of [`MainState::boxplus`].
    pub fn boxminus(&self, other: &MainState) -> DVector<f64> {
        let mut dx = DVector::zeros(ERROR_DIM);
        dx.fixed_rows_mut::<3>(POS).copy_from(&(self.p_ea_e - other.p_ea_e));
        dx.fixed_rows_mut::<3>(VEL).copy_from(&(self.v_ea_n - other.v_ea_n));
        dx.fixed_rows_mut::<3>(ATT).copy_from(&(self.q_b_n * other.q_b_n.inverse()).scaled_axis());
        dx.fixed_rows_mut::<3>(BA).copy_from(&(self.b_a - other.b_a));
        dx.fixed_rows_mut::<3>(BG).copy_from(&(self.b_g - other.b_g));
        dx[CB] = self.c_b - other.c_b;
        dx[CD] = self.c_d - other.c_d;
        dx
    }
}

/// IMU-point position (ECEF) and velocity (NED) from the antenna state:
/// `p_eb = p_eA − C_n^e C_b^n L`, `v_eb = v_eA − C_b^n (ω × L)` with the
/// bias-corrected rate `ω = w̃ − b_g`.
pub fn lever_arm_transform(state: &MainState, w_ib_b: &Vector3<f64>, lever_arm: &Vector3<f64>, frame: &LocalFrame) -> (Vector3<f64>, Vector3<f64>) {
    let w = w_ib_b - state.b_g;
    let p = state.p_ea_e - frame.c_n_e() * (state.q_b_n * lever_arm);
    let v = state.v_ea_n - state.q_b_n * w.cross(lever_arm);
    (p, v)
}

/// Main filter model: fixed frame, noise parameters and antenna lever arm.
#[derive(Clone, Debug)]
pub struct MainModel {
    pub frame: LocalFrame,
    pub noise: NoiseParams,
    pub lever_arm: Vector3<f64>,
}

fn block(m: &mut DMatrix<f64>, row: usize, col: usize, b: &Matrix3<f64>) {
    m.fixed_view_mut::<3, 3>(row, col).copy_from(b);
}

impl MainModel {
    pub fn new(frame: LocalFrame, noise: NoiseParams) -> Self {
        MainModel { frame, noise, lever_arm: Vector3::from(DEFAULT_LEVER_ARM) }
    }

    /// Nonlinear step with explicit process-noise sample `w` (layout
    /// [`NOISE_DIM`]). The noise enters where the truth would: the true rate
    /// and specific force are `w̃ − b_g − n_g` and `f̃ − b_a − n_a`.
    pub fn propagate_with_noise(&self, state: &MainState, imu: &ImuSample, dt: f64, w: &DVector<f64>) -> Result<MainState> {
        check_step(dt)?;
        let v3 = |i: usize| Vector3::new(w[i], w[i + 1], w[i + 2]);
        let l = &self.lever_arm;
        let c_n_e = self.frame.c_n_e();

        let omega = imu.w_ib_b - state.b_g - v3(W_GYRO);
        let f = imu.f_ib_b - state.b_a - v3(W_ACC);
        let p_b = state.p_ea_e - c_n_e * (state.q_b_n * l);
        let v_b = state.v_ea_n - state.q_b_n * omega.cross(l);

        let (p_b, v_b, q) = mechanize(&p_b, &v_b, &state.q_b_n, &f, &omega, dt, &self.frame);
        let b_a = bias_propagate(&state.b_a, self.noise.accel_bias_tau, dt) + v3(W_BA);
        let b_g = bias_propagate(&state.b_g, self.noise.gyro_bias_tau, dt) + v3(W_BG);

        let omega_next = imu.w_ib_b - b_g - v3(W_GYRO);
        Ok(MainState {
            p_ea_e: p_b + c_n_e * (q * l),
            v_ea_n: v_b + q * omega_next.cross(l),
            q_b_n: q,
            b_a,
            b_g,
            c_b: state.c_b + state.c_d * dt + w[W_CB],
            c_d: state.c_d + w[W_CD],
        })
    }

    /// Noise-free step.
    pub fn propagate(&self, state: &MainState, imu: &ImuSample, dt: f64) -> Result<MainState> {
        self.propagate_with_noise(state, imu, dt, &DVector::zeros(NOISE_DIM))
    }

    /// Discrete error-state transition `F` (17×17) and noise map `G` (17×14)
    /// evaluated at `state`.
    pub fn jacobians(&self, state: &MainState, imu: &ImuSample, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let l = &self.lever_arm;
        let c_n_e = *self.frame.c_n_e();
        let i3 = Matrix3::identity();
        let c = state.q_b_n.to_rotation_matrix().into_inner();
        let omega = imu.w_ib_b - state.b_g;
        let f = imu.f_ib_b - state.b_a;
        let theta = omega * dt;
        let c_mid = (state.q_b_n * UnitQuaternion::from_scaled_axis(theta * 0.5)).to_rotation_matrix().into_inner();
        let q_next = state.q_b_n * UnitQuaternion::from_scaled_axis(theta);
        let c_next = q_next.to_rotation_matrix().into_inner();
        let e_a = (-dt / self.noise.accel_bias_tau).exp();
        let e_g = (-dt / self.noise.gyro_bias_tau).exp();
        let omega_next = imu.w_ib_b - bias_propagate(&state.b_g, self.noise.gyro_bias_tau, dt);
        let skew_l = skew(l);

        // antenna → IMU
        let mut a_x = DMatrix::identity(ERROR_DIM, ERROR_DIM);
        block(&mut a_x, POS, ATT, &(c_n_e * skew(&(c * l))));
        block(&mut a_x, VEL, ATT, &skew(&(c * omega.cross(l))));
        block(&mut a_x, VEL, BG, &(-c * skew_l));
        let mut a_w = DMatrix::zeros(ERROR_DIM, NOISE_DIM);
        block(&mut a_w, VEL, W_GYRO, &(-c * skew_l));

        // strapdown at the IMU
        let v_psi = -skew(&(c_mid * f)) * dt;
        let v_ba = -c_mid * dt;
        let v_bg = c_mid * skew(&f) * right_jacobian(&(theta * 0.5)) * (0.5 * dt * dt);
        let psi_bg = -c_next * right_jacobian(&theta) * dt;
        let half = c_n_e * (0.5 * dt);
        let mut s_x = DMatrix::identity(ERROR_DIM, ERROR_DIM);
        block(&mut s_x, POS, VEL, &(c_n_e * dt));
        block(&mut s_x, POS, ATT, &(half * v_psi));
        block(&mut s_x, POS, BA, &(half * v_ba));
        block(&mut s_x, POS, BG, &(half * v_bg));
        block(&mut s_x, VEL, ATT, &v_psi);
        block(&mut s_x, VEL, BA, &v_ba);
        block(&mut s_x, VEL, BG, &v_bg);
        block(&mut s_x, ATT, BG, &psi_bg);
        block(&mut s_x, BA, BA, &(i3 * e_a));
        block(&mut s_x, BG, BG, &(i3 * e_g));
        s_x[(CB, CD)] = dt;
        let mut s_w = DMatrix::zeros(ERROR_DIM, NOISE_DIM);
        block(&mut s_w, POS, W_ACC, &(half * v_ba));
        block(&mut s_w, VEL, W_ACC, &v_ba);
        block(&mut s_w, POS, W_GYRO, &(half * v_bg));
        block(&mut s_w, VEL, W_GYRO, &v_bg);
        block(&mut s_w, ATT, W_GYRO, &psi_bg);
        block(&mut s_w, BA, W_BA, &i3);
        block(&mut s_w, BG, W_BG, &i3);
        s_w[(CB, W_CB)] = 1.0;
        s_w[(CD, W_CD)] = 1.0;

        // IMU → antenna
        let mut b_x = DMatrix::identity(ERROR_DIM, ERROR_DIM);
        block(&mut b_x, POS, ATT, &(-c_n_e * skew(&(c_next * l))));
        block(&mut b_x, VEL, ATT, &(-skew(&(c_next * omega_next.cross(l)))));
        block(&mut b_x, VEL, BG, &(c_next * skew_l));
        let mut b_w = DMatrix::zeros(ERROR_DIM, NOISE_DIM);
        block(&mut b_w, VEL, W_GYRO, &(c_next * skew_l));

        let bs = &b_x * &s_x;
        let f_mat = &bs * &a_x;
        let g_mat = &bs * &a_w + &b_x * &s_w + &b_w;
        (f_mat, g_mat)
    }

    /// Per-step process-noise covariance `Q` (diagonal, [`NOISE_DIM`]).
    pub fn process_noise(&self, dt: f64) -> DMatrix<f64> {
        let n = &self.noise;
        let mut q = DVector::zeros(NOISE_DIM);
        let acc = n.accel_noise_density * n.accel_noise_density / dt;
        let gyro = n.gyro_noise_density * n.gyro_noise_density / dt;
        let ba = NoiseParams::gauss_markov_drive_variance(n.accel_bias_sigma, n.accel_bias_tau, dt);
        let bg = NoiseParams::gauss_markov_drive_variance(n.gyro_bias_sigma, n.gyro_bias_tau, dt);
        for k in 0..3 {
            q[W_ACC + k] = acc;
            q[W_GYRO + k] = gyro;
            q[W_BA + k] = ba;
            q[W_BG + k] = bg;
        }
        q[W_CB] = n.clock_bias_density * n.clock_bias_density * dt;
        q[W_CD] = n.clock_drift_density * n.clock_drift_density * dt;
        DMatrix::from_diagonal(&q)
    }

    /// Diagonal initial standard deviations in error-state order, with the
    /// position block expressed along NED.
    pub fn initial_sigmas(&self) -> DVector<f64> {
        let i = &self.noise.initial;
        let mut s = DVector::zeros(ERROR_DIM);
        s.fixed_rows_mut::<3>(POS).copy_from(&i.position);
        s.fixed_rows_mut::<3>(VEL).fill(i.velocity);
        s.fixed_rows_mut::<3>(ATT).fill(i.attitude);
        s.fixed_rows_mut::<3>(BA).fill(i.accel_bias);
        s.fixed_rows_mut::<3>(BG).fill(i.gyro_bias);
        s[CB] = i.clock_bias;
        s[CD] = i.clock_drift;
        s
    }

    /// Map from the NED-position error state to the ECEF one (identity elsewhere).
    pub fn ned_to_error_state(&self) -> DMatrix<f64> {
        let mut t = DMatrix::identity(ERROR_DIM, ERROR_DIM);
        block(&mut t, POS, POS, self.frame.c_n_e());
        t
    }

    /// `P₀` from the initial standard deviations.
    pub fn initial_covariance(&self) -> DMatrix<f64> {
        let s = self.initial_sigmas();
        let t = self.ned_to_error_state();
        let mut p = &t * DMatrix::from_diagonal(&s.component_mul(&s)) * t.transpose();
        crate::filter::symmetrize(&mut p);
        p
    }
}

impl FilterModel for MainModel {
    type State = MainState;
    type Input = ImuSample;
    type Observation = [GnssObservation];

    fn error_dim(&self) -> usize {
        ERROR_DIM
    }

    fn transition(&self, state: &MainState, imu: &ImuSample, dt: f64) -> Result<Transition<MainState>> {
        let next = self.propagate(state, imu, dt)?;
        let (f, g) = self.jacobians(state, imu, dt);
        Ok(Transition { state: next, f, g, q: self.process_noise(dt) })
    }

    fn linearize(&self, state: &MainState, observations: &[GnssObservation]) -> Result<Linearization> {
        let cols = GnssColumns { dim: ERROR_DIM, pos: POS, vel: VEL, clock_bias: CB, clock_drift: CD };
        linearize_gnss(&state.p_ea_e, &state.v_ea_n, state.c_b, state.c_d, observations, &self.frame, self.noise.c_rho, self.noise.c_d, cols)
    }

    fn inject(&self, state: &MainState, correction: &DVector<f64>) -> MainState {
        state.boxplus(correction)
    }

    fn is_finite(&self, state: &MainState) -> bool {
        state.is_finite()
    }
}
