//! Model-generic Extended H∞ / Extended Kalman recursion.
//!
//! Models work in an error-state formulation: [`FilterModel::transition`]
//! propagates the full state and returns the error-state Jacobians, and
//! [`FilterModel::inject`] folds an error-state correction back into the full
//! state. The covariance arithmetic here only sees the linearised pieces.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

#[cfg(not(feature = "std"))]
use num_traits::Float as _;

use crate::error::{check_dim, Error, Result};

/// Propagated state plus the discrete error dynamics `e' = F e + G w`, `w ~ (0, Q)`.
#[derive(Clone, Debug)]
pub struct Transition<S> {
    pub state: S,
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

/// Linearised measurement: `residual = z - h(x̂)`, Jacobian `H` and noise `R`.
#[derive(Clone, Debug)]
pub struct Linearization {
    pub residual: DVector<f64>,
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl Linearization {
    pub fn len(&self) -> usize {
        self.residual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residual.is_empty()
    }

    /// Keeps only the listed rows (and the matching block of `R`).
    pub fn select_rows(&self, rows: &[usize]) -> Linearization {
        Linearization {
            residual: self.residual.select_rows(rows.iter()),
            h: self.h.select_rows(rows.iter()),
            r: self.r.select_rows(rows.iter()).select_columns(rows.iter()),
        }
    }
}

/// Process and measurement models of one navigation filter.
pub trait FilterModel {
    type State: Clone;
    type Input: ?Sized;
    type Observation: ?Sized;

    /// Error-state dimension `n_e`.
    fn error_dim(&self) -> usize;

    /// `x̂⁻ = f(x̂⁺, u)` together with `F`, `G`, `Q` evaluated at `x̂⁺`.
    fn transition(&self, state: &Self::State, input: &Self::Input, dt: f64) -> Result<Transition<Self::State>>;

    /// Residual, Jacobian and noise of an observation set at `state`.
    fn linearize(&self, state: &Self::State, observation: &Self::Observation) -> Result<Linearization>;

    /// Applies an error-state correction `δx` to the full state.
    fn inject(&self, state: &Self::State, correction: &DVector<f64>) -> Self::State;

    fn is_finite(&self, state: &Self::State) -> bool;
}

/// State estimate with its error covariance and epoch index.
#[derive(Clone, Debug)]
pub struct FilterEstimate<S> {
    pub state: S,
    pub covariance: DMatrix<f64>,
    pub epoch: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterMode {
    Ekf,
    Ehf,
}

/// How the EHF performance bound is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaSetting {
    /// Selected on the first update as `safety × γ_min`. Every later update
    /// keeps the same margin: γ doubles until `γ / safety` is feasible.
    Auto { safety: f64 },
    /// Doubles only when the existence condition fails.
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub struct RobustConfig {
    pub mode: FilterMode,
    pub gamma: GammaSetting,
    /// Weighting `L`; `None` is the identity.
    pub weighting: Option<DMatrix<f64>>,
}

impl RobustConfig {
    pub fn ekf() -> Self {
        RobustConfig { mode: FilterMode::Ekf, gamma: GammaSetting::Auto { safety: DEFAULT_SAFETY }, weighting: None }
    }

    pub fn ehf() -> Self {
        RobustConfig { mode: FilterMode::Ehf, gamma: GammaSetting::Auto { safety: DEFAULT_SAFETY }, weighting: None }
    }
}

pub const DEFAULT_SAFETY: f64 = 2.0;
pub const GAMMA_BRACKET: (f64, f64) = (1e-6, 1e9);
const BISECTION_ITERATIONS: usize = 50;

/// Makes `m` exactly symmetric.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// `P⁻ = F P Fᵀ + G Q Gᵀ`, symmetrised.
pub fn propagate_covariance(p: &DMatrix<f64>, f: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dim(p.nrows(), f.ncols())?;
    check_dim(f.nrows(), g.nrows())?;
    check_dim(g.ncols(), q.nrows())?;
    let mut out = f * p * f.transpose() + g * q * g.transpose();
    symmetrize(&mut out);
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::FilterDivergence)
    }
}

/// Time update of an estimate through `model`. Also returns the transition
/// so the caller can reuse `F`, `G`, `Q` (e.g. for error-bound propagation).
pub fn propagate<M: FilterModel>(
    model: &M,
    est: &FilterEstimate<M::State>,
    input: &M::Input,
    dt: f64,
) -> Result<(FilterEstimate<M::State>, Transition<M::State>)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput("propagation step must be positive"));
    }
    let transition = model.transition(&est.state, input, dt)?;
    if !model.is_finite(&transition.state) {
        return Err(Error::FilterDivergence);
    }
    let covariance = propagate_covariance(&est.covariance, &transition.f, &transition.g, &transition.q)?;
    let next = FilterEstimate { state: transition.state.clone(), covariance, epoch: est.epoch + 1 };
    Ok((next, transition))
}

/// Error-state correction produced by one update.
#[derive(Clone, Debug)]
pub struct Correction {
    pub correction: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub gain: DMatrix<f64>,
}

/// `R⁻¹ H` via a Cholesky solve.
fn r_inv_h(h: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dim(h.nrows(), r.nrows())?;
    let chol = r.clone().cholesky().ok_or(Error::InvalidInput("measurement covariance is not positive definite"))?;
    Ok(chol.solve(h))
}

fn identity_weighting(n: usize, l: Option<&DMatrix<f64>>) -> DMatrix<f64> {
    match l {
        Some(l) => l.transpose() * l,
        None => DMatrix::identity(n, n),
    }
}

/// Kalman update with the Joseph-form covariance.
pub fn update_ekf(p: &DMatrix<f64>, lin: &Linearization) -> Result<Correction> {
    let n = p.nrows();
    check_dim(n, lin.h.ncols())?;
    if !lin.residual.iter().all(|v| v.is_finite()) {
        return Err(Error::FilterDivergence);
    }
    let pht = p * lin.h.transpose();
    let s = &lin.h * &pht + &lin.r;
    let s_chol = s.cholesky().ok_or(Error::UpdateSingular)?;
    // K = P Hᵀ S⁻¹ = (S⁻¹ H P)ᵀ
    let gain = s_chol.solve(&pht.transpose()).transpose();
    let i_kh = DMatrix::identity(n, n) - &gain * &lin.h;
    let mut covariance = &i_kh * p * i_kh.transpose() + &gain * &lin.r * gain.transpose();
    symmetrize(&mut covariance);
    let correction = &gain * &lin.residual;
    Ok(Correction { correction, covariance, gain })
}

/// Extended H∞ update:
/// `P⁺ = P⁻ [I − γ⁻¹ LᵀL P⁻ + Hᵀ R⁻¹ H P⁻]⁻¹`, `K = P⁺ Hᵀ R⁻¹`.
///
/// `gamma_inv = 0` is the Kalman limit. Feasibility is checked first.
pub fn update_ehf(
    p: &DMatrix<f64>,
    lin: &Linearization,
    weighting: Option<&DMatrix<f64>>,
    gamma_inv: f64,
    epoch: u64,
) -> Result<Correction> {
    let n = p.nrows();
    check_dim(n, lin.h.ncols())?;
    if !lin.residual.iter().all(|v| v.is_finite()) {
        return Err(Error::FilterDivergence);
    }
    let rih = r_inv_h(&lin.h, &lin.r)?;
    let info = lin.h.transpose() * &rih;
    let ltl = identity_weighting(n, weighting);
    let a = &info - &ltl * gamma_inv;
    if !feasible_with(p, &a) {
        return Err(Error::GammaInfeasible { epoch });
    }
    let bracket = DMatrix::identity(n, n) + &a * p;
    // P⁺ = P⁻ M⁻¹  ⇔  Mᵀ P⁺ᵀ = P⁻ᵀ
    let lu = bracket.transpose().lu();
    let mut covariance = lu.solve(&p.transpose()).ok_or(Error::UpdateSingular)?.transpose();
    symmetrize(&mut covariance);
    let gain = &covariance * rih.transpose();
    let correction = &gain * &lin.residual;
    if !covariance.iter().all(|v| v.is_finite()) {
        return Err(Error::UpdateSingular);
    }
    Ok(Correction { correction, covariance, gain })
}

/// `P⁻¹ + A ≻ 0` tested as `I + Sᵀ A S ≻ 0` with `P = S Sᵀ`.
fn feasible_with(p: &DMatrix<f64>, a: &DMatrix<f64>) -> bool {
    let Some(chol) = p.clone().cholesky() else {
        return false;
    };
    let s = chol.l();
    let mut m = s.transpose() * a * &s;
    for i in 0..m.nrows() {
        m[(i, i)] += 1.0;
    }
    symmetrize(&mut m);
    m.cholesky().is_some()
}

/// Whether `P⁻¹ + HᵀR⁻¹H − γ⁻¹LᵀL` is positive definite.
///
/// Evaluated through a Cholesky factorisation; a prior covariance that is not
/// positive definite counts as infeasible.
pub fn check_feasibility(p: &DMatrix<f64>, h: &DMatrix<f64>, r: &DMatrix<f64>, weighting: Option<&DMatrix<f64>>, gamma: f64) -> bool {
    if !(gamma > 0.0) || h.ncols() != p.nrows() {
        return false;
    }
    let Ok(rih) = r_inv_h(h, r) else {
        return false;
    };
    let a = h.transpose() * rih - identity_weighting(p.nrows(), weighting) / gamma;
    feasible_with(p, &a)
}

/// Smallest feasible γ found by log-space bisection on [`GAMMA_BRACKET`],
/// multiplied by `safety`.
pub fn select_gamma(p: &DMatrix<f64>, h: &DMatrix<f64>, r: &DMatrix<f64>, weighting: Option<&DMatrix<f64>>, safety: f64) -> Result<f64> {
    if !(safety >= 1.0) {
        return Err(Error::InvalidInput("gamma safety factor must be at least 1"));
    }
    let (mut lo, mut hi) = GAMMA_BRACKET;
    let feasible = |g: f64| check_feasibility(p, h, r, weighting, g);
    if feasible(lo) {
        return Ok(lo * safety);
    }
    if !feasible(hi) {
        return Err(Error::FeasibilityBracketExhausted);
    }
    for _ in 0..BISECTION_ITERATIONS {
        let mid = (lo * hi).sqrt();
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // `hi` is the feasible end; feasibility is monotone so the scaled value is too.
    Ok(hi * safety)
}

/// Row-wise innovation gate: keeps rows with `|residual_i| <= n_sigma √S_ii`,
/// `S = H P Hᵀ + R`. Returns the accepted rows and the rejected indices.
pub fn gate(p: &DMatrix<f64>, lin: &Linearization, n_sigma: f64) -> (Linearization, Vec<usize>) {
    let mut accepted = Vec::with_capacity(lin.len());
    let mut rejected = Vec::new();
    for i in 0..lin.len() {
        let row = lin.h.row(i);
        let s_ii = (row * p * row.transpose())[(0, 0)] + lin.r[(i, i)];
        if lin.residual[i].abs() <= n_sigma * s_ii.sqrt() {
            accepted.push(i);
        } else {
            rejected.push(i);
        }
    }
    if rejected.is_empty() {
        (lin.clone(), rejected)
    } else {
        (lin.select_rows(&accepted), rejected)
    }
}

/// Outcome of one [`RobustFilter::update`].
#[derive(Clone, Debug)]
pub struct UpdateReport {
    /// Gain applied to the accepted rows.
    pub gain: DMatrix<f64>,
    /// Jacobian of the accepted rows.
    pub h: DMatrix<f64>,
    /// Noise covariance of the accepted rows.
    pub r: DMatrix<f64>,
    /// Rows removed by the innovation gate.
    pub rejected: Vec<usize>,
    /// γ in effect (infinite for the EKF).
    pub gamma: f64,
    /// The existence condition held at the γ in effect before any escape.
    pub feasible: bool,
    /// Number of γ doublings made this epoch.
    pub doublings: u32,
}

/// A filter instance: model, current estimate and γ bookkeeping.
#[derive(Clone, Debug)]
pub struct RobustFilter<M: FilterModel> {
    model: M,
    estimate: FilterEstimate<M::State>,
    config: RobustConfig,
    gamma: Option<f64>,
    gate_sigma: Option<f64>,
}

const MAX_DOUBLINGS: u32 = 200;

impl<M: FilterModel> RobustFilter<M> {
    pub fn new(model: M, state: M::State, covariance: DMatrix<f64>, config: RobustConfig) -> Result<Self> {
        check_dim(model.error_dim(), covariance.nrows())?;
        check_dim(model.error_dim(), covariance.ncols())?;
        let gamma = match config.gamma {
            GammaSetting::Fixed(g) if g > 0.0 => Some(g),
            GammaSetting::Fixed(_) => return Err(Error::InvalidInput("gamma must be positive")),
            GammaSetting::Auto { .. } => None,
        };
        let estimate = FilterEstimate { state, covariance, epoch: 0 };
        Ok(RobustFilter { model, estimate, config, gamma, gate_sigma: None })
    }

    /// Enables the innovation gate at `n_sigma`.
    pub fn with_gate(mut self, n_sigma: f64) -> Self {
        self.gate_sigma = Some(n_sigma);
        self
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn estimate(&self) -> &FilterEstimate<M::State> {
        &self.estimate
    }

    pub fn config(&self) -> &RobustConfig {
        &self.config
    }

    /// Current γ (`None` before automatic selection, infinite for the EKF).
    pub fn gamma(&self) -> Option<f64> {
        match self.config.mode {
            FilterMode::Ekf => Some(f64::INFINITY),
            FilterMode::Ehf => self.gamma,
        }
    }

    /// Replaces state and covariance (re-seeding after a filter switch).
    pub fn reset(&mut self, state: M::State, covariance: DMatrix<f64>) -> Result<()> {
        check_dim(self.model.error_dim(), covariance.nrows())?;
        self.estimate.state = state;
        self.estimate.covariance = covariance;
        Ok(())
    }

    pub fn propagate(&mut self, input: &M::Input, dt: f64) -> Result<Transition<M::State>> {
        let (next, transition) = propagate(&self.model, &self.estimate, input, dt)?;
        self.estimate = next;
        Ok(transition)
    }

    /// Measurement update; returns `None` when no rows survive the gate.
    pub fn update(&mut self, observation: &M::Observation) -> Result<Option<UpdateReport>> {
        let lin = self.model.linearize(&self.estimate.state, observation)?;
        let (lin, rejected) = match self.gate_sigma {
            Some(n) => gate(&self.estimate.covariance, &lin, n),
            None => (lin, Vec::new()),
        };
        if lin.is_empty() {
            return Ok(None);
        }
        let p = &self.estimate.covariance;
        let weighting = self.config.weighting.as_ref();
        let (correction, gamma, feasible, doublings) = match self.config.mode {
            FilterMode::Ekf => (update_ekf(p, &lin)?, f64::INFINITY, true, 0),
            FilterMode::Ehf => {
                let mut gamma = match (self.gamma, self.config.gamma) {
                    (Some(g), _) => g,
                    (None, GammaSetting::Auto { safety }) => select_gamma(p, &lin.h, &lin.r, weighting, safety)?,
                    (None, GammaSetting::Fixed(g)) => g,
                };
                let feasible = check_feasibility(p, &lin.h, &lin.r, weighting, gamma);
                let margin = match self.config.gamma {
                    GammaSetting::Auto { safety } => safety,
                    _ => 1.0,
                };
                let mut doublings = 0;
                while !check_feasibility(p, &lin.h, &lin.r, weighting, gamma / margin) {
                    if doublings == MAX_DOUBLINGS {
                        return Err(Error::GammaInfeasible { epoch: self.estimate.epoch });
                    }
                    gamma *= 2.0;
                    doublings += 1;
                }
                self.gamma = Some(gamma);
                (update_ehf(p, &lin, weighting, 1.0 / gamma, self.estimate.epoch)?, gamma, feasible, doublings)
            }
        };
        self.estimate.state = self.model.inject(&self.estimate.state, &correction.correction);
        self.estimate.covariance = correction.covariance;
        if !self.model.is_finite(&self.estimate.state) {
            return Err(Error::FilterDivergence);
        }
        Ok(Some(UpdateReport { gain: correction.gain, h: lin.h, r: lin.r, rejected, gamma, feasible, doublings }))
    }
}

/// One epoch of the cost-function history.
#[derive(Clone, Debug)]
pub struct CostEpoch {
    /// True minus estimated state, `x_k − x̂_k⁺`.
    pub error: DVector<f64>,
    pub process_noise: DVector<f64>,
    pub q: DMatrix<f64>,
    pub measurement_noise: DVector<f64>,
    pub r: DMatrix<f64>,
}

/// `‖x‖²_{A⁻¹}` through a Cholesky solve; empty vectors contribute zero.
fn inv_weighted_norm2(x: &DVector<f64>, a: &DMatrix<f64>) -> Result<f64> {
    if x.is_empty() {
        return Ok(0.0);
    }
    check_dim(a.nrows(), x.len())?;
    let chol = a.clone().cholesky().ok_or(Error::InvalidInput("weight matrix is not positive definite"))?;
    Ok(x.dot(&chol.solve(x)))
}

/// The H∞ cost: weighted estimation error energy over initial-error and
/// noise energy.
pub fn cost_j(initial_error: &DVector<f64>, p0: &DMatrix<f64>, weighting: Option<&DMatrix<f64>>, history: &[CostEpoch]) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::InvalidInput("cost needs at least one epoch"));
    }
    let mut numerator = 0.0;
    let mut denominator = inv_weighted_norm2(initial_error, p0)?;
    for epoch in history {
        let weighted = match weighting {
            Some(l) => {
                check_dim(l.ncols(), epoch.error.len())?;
                l * &epoch.error
            }
            None => epoch.error.clone(),
        };
        numerator += weighted.norm_squared();
        denominator += inv_weighted_norm2(&epoch.process_noise, &epoch.q)?;
        denominator += inv_weighted_norm2(&epoch.measurement_noise, &epoch.r)?;
    }
    if !(denominator > 0.0) {
        return Err(Error::DegenerateCost);
    }
    Ok(numerator / denominator)
}

/// Linear time-invariant model `x' = F x + G w`, `z = H x + ν`, with an
/// additive error state. Used for scalar and linearised checks.
#[derive(Clone, Debug)]
pub struct LinearModel {
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl FilterModel for LinearModel {
    type State = DVector<f64>;
    type Input = DVector<f64>;
    type Observation = DVector<f64>;

    fn error_dim(&self) -> usize {
        self.f.nrows()
    }

    fn transition(&self, state: &DVector<f64>, input: &DVector<f64>, _dt: f64) -> Result<Transition<DVector<f64>>> {
        check_dim(self.f.ncols(), state.len())?;
        let mut next = &self.f * state;
        if !input.is_empty() {
            check_dim(next.len(), input.len())?;
            next += input;
        }
        Ok(Transition { state: next, f: self.f.clone(), g: self.g.clone(), q: self.q.clone() })
    }

    fn linearize(&self, state: &DVector<f64>, z: &DVector<f64>) -> Result<Linearization> {
        check_dim(self.h.nrows(), z.len())?;
        Ok(Linearization { residual: z - &self.h * state, h: self.h.clone(), r: self.r.clone() })
    }

    fn inject(&self, state: &DVector<f64>, correction: &DVector<f64>) -> DVector<f64> {
        state + correction
    }

    fn is_finite(&self, state: &DVector<f64>) -> bool {
        state.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn scalar_lin(residual: f64) -> Linearization {
        Linearization { residual: dvector![residual], h: dmatrix![1.0], r: dmatrix![1.0] }
    }

    #[test]
    fn scalar_random_walk_propagation() {
        let p = propagate_covariance(&dmatrix![1.0], &dmatrix![1.0], &dmatrix![1.0], &dmatrix![0.04]).unwrap();
        assert!((p[(0, 0)] - 1.04).abs() < 1e-15);
        let p0 = dmatrix![2.0, 0.3; 0.3, 1.0];
        let same = propagate_covariance(&p0, &DMatrix::identity(2, 2), &DMatrix::identity(2, 2), &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(same, p0);
    }

    #[test]
    fn scalar_ekf_update() {
        let c = update_ekf(&dmatrix![1.0], &scalar_lin(2.0)).unwrap();
        assert!((c.gain[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((c.covariance[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((c.correction[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uninformative_measurement_changes_nothing() {
        let p = dmatrix![2.0, 0.1; 0.1, 1.0];
        let lin = Linearization { residual: dvector![3.0], h: dmatrix![0.0, 0.0], r: dmatrix![1.0] };
        let c = update_ekf(&p, &lin).unwrap();
        assert_eq!(c.correction, dvector![0.0, 0.0]);
        assert!((c.covariance - p).abs().max() < 1e-15);
    }

    #[test]
    fn scalar_ehf_update() {
        let c = update_ehf(&dmatrix![1.0], &scalar_lin(1.0), None, 0.1, 0).unwrap();
        assert!((c.covariance[(0, 0)] - 1.0 / 1.9).abs() < 1e-12);
        assert!((c.gain[(0, 0)] - 1.0 / 1.9).abs() < 1e-12);
        let ekf = update_ekf(&dmatrix![1.0], &scalar_lin(1.0)).unwrap();
        assert!(c.gain[(0, 0)] >= ekf.gain[(0, 0)]);
    }

    #[test]
    fn ehf_kalman_limit() {
        let p = dmatrix![2.0, 0.5; 0.5, 1.0];
        let lin = Linearization { residual: dvector![0.7, -0.2], h: dmatrix![1.0, 0.0; 1.0, 1.0], r: dmatrix![0.5, 0.0; 0.0, 2.0] };
        let a = update_ehf(&p, &lin, None, 0.0, 0).unwrap();
        let b = update_ekf(&p, &lin).unwrap();
        assert!((a.covariance - b.covariance).abs().max() < 1e-12);
        assert!((a.correction - b.correction).abs().max() < 1e-12);
    }

    #[test]
    fn ehf_rejects_infeasible_gamma() {
        assert_eq!(update_ehf(&dmatrix![1.0], &scalar_lin(1.0), None, 1.0 / 0.4, 7).unwrap_err(), Error::GammaInfeasible { epoch: 7 });
    }

    #[test]
    fn scalar_feasibility() {
        let (p, h, r) = (dmatrix![1.0], dmatrix![1.0], dmatrix![1.0]);
        assert!(!check_feasibility(&p, &h, &r, None, 0.4));
        assert!(check_feasibility(&p, &h, &r, None, 10.0));
        let zero = dmatrix![0.0];
        assert!(check_feasibility(&p, &h, &r, Some(&zero), 1e-9));
    }

    #[test]
    fn scalar_gamma_selection() {
        let (p, h, r) = (dmatrix![1.0], dmatrix![1.0], dmatrix![1.0]);
        let g = select_gamma(&p, &h, &r, None, 1.5).unwrap();
        assert!((g - 0.75).abs() < 1e-9, "{g}");
        assert!(check_feasibility(&p, &h, &r, None, g));
        let zero = dmatrix![0.0];
        assert_eq!(select_gamma(&p, &h, &r, Some(&zero), 1.0).unwrap(), GAMMA_BRACKET.0);
    }

    #[test]
    fn gamma_bracket_exhausted() {
        // a prior that is not positive definite can never pass
        let p = dmatrix![-1.0];
        assert_eq!(select_gamma(&p, &dmatrix![1.0], &dmatrix![1.0], None, 2.0).unwrap_err(), Error::FeasibilityBracketExhausted);
    }

    #[test]
    fn cost_hand_cases() {
        let epoch = CostEpoch {
            error: dvector![1.0],
            process_noise: DVector::zeros(0),
            q: DMatrix::zeros(0, 0),
            measurement_noise: DVector::zeros(0),
            r: DMatrix::zeros(0, 0),
        };
        assert!((cost_j(&dvector![1.0], &dmatrix![1.0], None, &[epoch.clone()]).unwrap() - 1.0).abs() < 1e-15);
        let zero = CostEpoch { error: dvector![0.0], ..epoch.clone() };
        assert_eq!(cost_j(&dvector![1.0], &dmatrix![1.0], None, &[zero]).unwrap(), 0.0);
        assert_eq!(cost_j(&dvector![0.0], &dmatrix![1.0], None, &[epoch]).unwrap_err(), Error::DegenerateCost);
    }

    #[test]
    fn gate_drops_outliers() {
        let lin = Linearization { residual: dvector![0.5, 10.0], h: dmatrix![1.0; 1.0], r: dmatrix![1.0, 0.0; 0.0, 1.0] };
        let (kept, rejected) = gate(&dmatrix![0.0], &lin, 5.0);
        assert_eq!(rejected, vec![1]);
        assert_eq!(kept.residual, dvector![0.5]);
    }

    #[test]
    fn robust_filter_doubles_gamma_on_infeasibility() {
        let model = LinearModel { f: dmatrix![1.0], g: dmatrix![1.0], q: dmatrix![0.0], h: dmatrix![1.0], r: dmatrix![1.0] };
        let cfg = RobustConfig { mode: FilterMode::Ehf, gamma: GammaSetting::Fixed(0.3), weighting: None };
        let mut filt = RobustFilter::new(model, dvector![0.0], dmatrix![1.0], cfg).unwrap();
        let report = filt.update(&dvector![1.0]).unwrap().unwrap();
        assert!(!report.feasible);
        assert_eq!(report.doublings, 1);
        assert_eq!(report.gamma, 0.6);
    }
}
