//! Zonotope bounds on the filter estimation error and protection levels.
//!
//! The error set is `⟨0, 𝓔⟩`; only the generator matrix is tracked. Each
//! step applies the filter's own error dynamics:
//! `𝓔⁻ = R([F 𝓔⁺, G 𝓦])` and `𝓔⁺ = R([(I − K H) 𝓔⁻, K 𝓥])`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix3};

#[cfg(not(feature = "std"))]
use num_traits::Float as _;

use crate::error::{check_dim, Error, Result};
use crate::interval::Interval;
use crate::zonotope::{abs_row_sums, reduce_generators, Zonotope};

/// Reduction order, sigma multiplier and initial position bound.
#[derive(Clone, Debug, PartialEq)]
pub struct PlConfig {
    pub q: usize,
    pub n_sigma_z: f64,
    /// Initial north/east/down position half-widths (m).
    pub e0_position: [f64; 3],
}

impl Default for PlConfig {
    fn default() -> Self {
        PlConfig { q: 4000, n_sigma_z: 3.0, e0_position: [10.0, 10.0, 20.0] }
    }
}

impl PlConfig {
    pub fn validate(&self, error_dim: usize) -> Result<()> {
        if self.q < error_dim {
            return Err(Error::InvalidInput("reduction order below error dimension"));
        }
        if !(self.n_sigma_z > 0.0) || self.e0_position.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidInput("zonotope sigma multiplier and initial bounds must be positive"));
        }
        Ok(())
    }
}

/// `n_σ · √diag(M)`; rejects negative diagonal entries.
pub fn noise_half_widths(m: &DMatrix<f64>, n_sigma: f64) -> Result<DVector<f64>> {
    let d = m.diagonal();
    if d.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidInput("noise covariance has a negative diagonal"));
    }
    Ok(d.map(|v| n_sigma * v.sqrt()))
}

/// Box zonotopes `𝓦 = ⟨0, diag(n_σ √diag Q)⟩` and `𝓥 = ⟨0, diag(n_σ √diag R)⟩`.
/// Zero variances give no generator.
pub fn noise_zonotopes(q: &DMatrix<f64>, r: &DMatrix<f64>, n_sigma: f64) -> Result<(Zonotope, Zonotope)> {
    let w = noise_half_widths(q, n_sigma)?;
    let v = noise_half_widths(r, n_sigma)?;
    Ok((box_without_zeros(&w), box_without_zeros(&v)))
}

fn box_without_zeros(half_widths: &DVector<f64>) -> Zonotope {
    let cols: Vec<usize> = (0..half_widths.len()).filter(|&i| half_widths[i] > 0.0).collect();
    let mut g = DMatrix::zeros(half_widths.len(), cols.len());
    for (k, &i) in cols.iter().enumerate() {
        g[(i, k)] = half_widths[i];
    }
    Zonotope::new(DVector::zeros(half_widths.len()), g).expect("square by construction")
}

/// `M · diag(s)` with zero scales dropped.
fn scaled_columns(m: &DMatrix<f64>, s: &DVector<f64>) -> DMatrix<f64> {
    let cols: Vec<usize> = (0..s.len()).filter(|&j| s[j] > 0.0).collect();
    let mut out = DMatrix::zeros(m.nrows(), cols.len());
    for (k, &j) in cols.iter().enumerate() {
        out.set_column(k, &(m.column(j) * s[j]));
    }
    out
}

/// `[A B, C]` without materialising `A B` separately.
fn stack_product(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = (a * b).resize_horizontally(b.ncols() + c.ncols(), 0.0);
    out.columns_mut(b.ncols(), c.ncols()).copy_from(c);
    out
}

/// Zero-centred error zonotope `⟨0, 𝓔⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorZonotope {
    generators: DMatrix<f64>,
}

impl ErrorZonotope {
    pub fn new(generators: DMatrix<f64>) -> Self {
        ErrorZonotope { generators }
    }

    /// Axis-aligned box with the given half-widths.
    pub fn from_box(half_widths: &DVector<f64>) -> Self {
        ErrorZonotope { generators: DMatrix::from_diagonal(half_widths) }
    }

    pub fn dim(&self) -> usize {
        self.generators.nrows()
    }

    pub fn order(&self) -> usize {
        self.generators.ncols()
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn to_zonotope(&self) -> Zonotope {
        Zonotope::new(DVector::zeros(self.dim()), self.generators.clone()).expect("dimensions agree")
    }

    /// Per-dimension hull half-widths.
    pub fn hull_radii(&self) -> DVector<f64> {
        abs_row_sums(&self.generators)
    }

    /// `R([F 𝓔, G 𝓦], q)` with `𝓦` given by its diagonal half-widths.
    pub fn propagate(&self, f: &DMatrix<f64>, g: &DMatrix<f64>, w_half_widths: &DVector<f64>, q: usize) -> Result<Self> {
        check_dim(self.dim(), f.ncols())?;
        check_dim(f.nrows(), g.nrows())?;
        check_dim(g.ncols(), w_half_widths.len())?;
        let stacked = stack_product(f, &self.generators, &scaled_columns(g, w_half_widths));
        Ok(ErrorZonotope { generators: reduce_generators(&stacked, q)? })
    }

    /// `R([(I − K H) 𝓔, K 𝓥], q)` with `𝓥` given by its diagonal half-widths.
    pub fn update(&self, k: &DMatrix<f64>, h: &DMatrix<f64>, v_half_widths: &DVector<f64>, q: usize) -> Result<Self> {
        let n = self.dim();
        check_dim(n, k.nrows())?;
        check_dim(n, h.ncols())?;
        check_dim(k.ncols(), h.nrows())?;
        check_dim(k.ncols(), v_half_widths.len())?;
        let i_kh = DMatrix::identity(n, n) - k * h;
        let stacked = stack_product(&i_kh, &self.generators, &scaled_columns(k, v_half_widths));
        Ok(ErrorZonotope { generators: reduce_generators(&stacked, q)? })
    }

    /// Interval hull of the selected error dimensions.
    pub fn protection_level(&self, selector: &[usize]) -> Result<Vec<Interval>> {
        let radii = self.hull_radii();
        selector
            .iter()
            .map(|&i| {
                if i < radii.len() {
                    Interval::centered(0.0, radii[i])
                } else {
                    Err(Error::InvalidInput("protection-level selector out of range"))
                }
            })
            .collect()
    }

    /// Hull half-widths of the three rows starting at `first`, after mapping
    /// them through `rotation` (e.g. ECEF position error to NED).
    pub fn rotated_block_radii(&self, first: usize, rotation: &Matrix3<f64>) -> Result<[f64; 3]> {
        if first + 3 > self.dim() {
            return Err(Error::InvalidInput("protection-level block out of range"));
        }
        let block = rotation * self.generators.fixed_rows::<3>(first);
        let r = abs_row_sums(&DMatrix::from_iterator(3, block.ncols(), block.iter().copied()));
        Ok([r[0], r[1], r[2]])
    }

    /// Error zonotope of a subset of the states (linear image by a selector).
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        ErrorZonotope { generators: self.generators.select_rows(rows.iter()) }
    }
}

/// Measurement update inputs for one [`pl_step`].
#[derive(Clone, Copy, Debug)]
pub struct PlUpdate<'a> {
    pub gain: &'a DMatrix<f64>,
    pub h: &'a DMatrix<f64>,
    pub r: &'a DMatrix<f64>,
}

/// Lockstep propagation (every epoch) and update (when measurements were
/// used) of the error zonotope. The returned zonotope is the a-posteriori one
/// when an update happened and the a-priori one otherwise.
pub fn pl_step(
    e: &ErrorZonotope,
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    q_noise: &DMatrix<f64>,
    update: Option<PlUpdate<'_>>,
    cfg: &PlConfig,
) -> Result<ErrorZonotope> {
    let prior = e.propagate(f, g, &noise_half_widths(q_noise, cfg.n_sigma_z)?, cfg.q)?;
    match update {
        Some(u) => prior.update(u.gain, u.h, &noise_half_widths(u.r, cfg.n_sigma_z)?, cfg.q),
        None => Ok(prior),
    }
}
