//! Pseudorange and deltarange observables and their linearisation.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Vector3};

use super::frame::LocalFrame;
use super::noise::sigma_epsilon;
use crate::error::{Error, Result};
use crate::filter::Linearization;

/// Range corrections (satellite clock, ionosphere, troposphere, multipath), m.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Corrections {
    pub c_s: f64,
    pub i_r: f64,
    pub t_r: f64,
    pub m_rho: f64,
}

impl Corrections {
    pub fn total(&self) -> f64 {
        self.c_s + self.i_r + self.t_r + self.m_rho
    }
}

/// One satellite's observables at an epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct GnssObservation {
    pub sat_id: u32,
    /// Satellite ECEF position (m).
    pub p_es_e: Vector3<f64>,
    /// Satellite velocity in NED at the antenna (m/s).
    pub v_es_n: Vector3<f64>,
    /// m.
    pub pseudorange: f64,
    /// m/s.
    pub deltarange: f64,
    /// dB-Hz.
    pub cn0: f64,
    pub corrections: Corrections,
}

impl GnssObservation {
    pub fn validate(&self) -> Result<()> {
        if !(10.0..=60.0).contains(&self.cn0) {
            return Err(Error::InvalidInput("C/N0 outside [10, 60] dB-Hz"));
        }
        if !(self.pseudorange > 0.0) {
            return Err(Error::InvalidInput("pseudorange must be positive"));
        }
        Ok(())
    }
}

/// Unit line of sight antenna→satellite (ECEF) and the range.
pub fn line_of_sight(p_ea_e: &Vector3<f64>, obs: &GnssObservation) -> (Vector3<f64>, f64) {
    let d = obs.p_es_e - p_ea_e;
    let r = d.norm();
    (d / r, r)
}

/// `‖p_s − p_A‖ + c_b + corrections`.
pub fn predict_pseudorange(p_ea_e: &Vector3<f64>, c_b: f64, obs: &GnssObservation) -> f64 {
    (obs.p_es_e - p_ea_e).norm() + c_b + obs.corrections.total()
}

/// `e_Asⁿᵀ (v_sⁿ − v_Aⁿ) + c_d` with the line of sight rotated to NED.
pub fn predict_deltarange(p_ea_e: &Vector3<f64>, v_ea_n: &Vector3<f64>, c_d: f64, obs: &GnssObservation, frame: &LocalFrame) -> f64 {
    let (u, _) = line_of_sight(p_ea_e, obs);
    let e_n = frame.c_n_e().tr_mul(&u);
    e_n.dot(&(obs.v_es_n - v_ea_n)) + c_d
}

/// Error-state columns of the GNSS-relevant states.
#[derive(Clone, Copy, Debug)]
pub(crate) struct GnssColumns {
    pub dim: usize,
    pub pos: usize,
    pub vel: usize,
    pub clock_bias: usize,
    pub clock_drift: usize,
}

/// Residuals, Jacobian and sigma-ε noise for a set of observations; rows are
/// interleaved `[ρ_1, d_1, ρ_2, d_2, …]`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn linearize_gnss(
    p_ea_e: &Vector3<f64>,
    v_ea_n: &Vector3<f64>,
    c_b: f64,
    c_d: f64,
    observations: &[GnssObservation],
    frame: &LocalFrame,
    c_rho: f64,
    c_dr: f64,
    cols: GnssColumns,
) -> Result<Linearization> {
    if observations.is_empty() {
        return Err(Error::InvalidInput("no GNSS observations"));
    }
    let rows = 2 * observations.len();
    let mut residual = DVector::zeros(rows);
    let mut h = DMatrix::zeros(rows, cols.dim);
    let mut r_diag = Vec::with_capacity(rows);
    let c_n_e = frame.c_n_e();
    for (k, obs) in observations.iter().enumerate() {
        let (u, range) = line_of_sight(p_ea_e, obs);
        let (i, j) = (2 * k, 2 * k + 1);

        residual[i] = obs.pseudorange - predict_pseudorange(p_ea_e, c_b, obs);
        for a in 0..3 {
            h[(i, cols.pos + a)] = -u[a];
        }
        h[(i, cols.clock_bias)] = 1.0;

        residual[j] = obs.deltarange - predict_deltarange(p_ea_e, v_ea_n, c_d, obs, frame);
        let e_n = c_n_e.tr_mul(&u);
        // d/dp of uᵀ w with w the relative velocity in ECEF
        let w = c_n_e * (obs.v_es_n - v_ea_n);
        let dp = -(w - u * u.dot(&w)) / range;
        for a in 0..3 {
            h[(j, cols.vel + a)] = -e_n[a];
            h[(j, cols.pos + a)] = dp[a];
        }
        h[(j, cols.clock_drift)] = 1.0;

        let (s_rho, s_d) = sigma_epsilon(obs.cn0, c_rho, c_dr);
        r_diag.push(s_rho * s_rho);
        r_diag.push(s_d * s_d);
    }
    Ok(Linearization { residual, h, r: DMatrix::from_diagonal(&DVector::from_vec(r_diag)) })
}
