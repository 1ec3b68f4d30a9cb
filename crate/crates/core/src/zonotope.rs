//! Zonotopes `⟨c, H⟩ = { c + H b : b ∈ [-1, 1]^m }`.

use alloc::vec::Vec;
use core::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::interval::Interval;

/// Center plus generator matrix; column `j` of `generators` is one segment
/// direction. The dimension is fixed by the center length.
#[derive(Clone, Debug, PartialEq)]
pub struct Zonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
}

impl Zonotope {
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self> {
        check_dim(center.len(), generators.nrows())?;
        Ok(Zonotope { center, generators })
    }

    /// Single point: no generators.
    pub fn point(center: DVector<f64>) -> Self {
        let n = center.len();
        Zonotope { center, generators: DMatrix::zeros(n, 0) }
    }

    /// Zero-centred box with the given half-widths as diagonal generators.
    pub fn centered_box(half_widths: &DVector<f64>) -> Self {
        Zonotope {
            center: DVector::zeros(half_widths.len()),
            generators: DMatrix::from_diagonal(half_widths),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Number of generator columns.
    pub fn order(&self) -> usize {
        self.generators.ncols()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.center, self.generators)
    }

    /// `⟨c1 + c2, [H1 H2]⟩`.
    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope> {
        check_dim(self.dim(), other.dim())?;
        Ok(Zonotope {
            center: &self.center + &other.center,
            generators: hcat(&self.generators, &other.generators),
        })
    }

    /// `⟨L c, L H⟩` for an `n' × n` map.
    pub fn linear_image(&self, map: &DMatrix<f64>) -> Result<Zonotope> {
        check_dim(self.dim(), map.ncols())?;
        Ok(Zonotope { center: map * &self.center, generators: map * &self.generators })
    }

    /// Per-dimension `[c_i - Σ_j |H_ij|, c_i + Σ_j |H_ij|]`.
    pub fn interval_hull(&self) -> Vec<Interval> {
        let radii = abs_row_sums(&self.generators);
        self.center
            .iter()
            .zip(radii.iter())
            .map(|(&c, &r)| Interval::centered(c, r).expect("absolute row sums are non-negative"))
            .collect()
    }

    /// Support function `max_{x ∈ Z} dᵀx = dᵀc + Σ_j |dᵀh_j|`.
    pub fn support(&self, direction: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), direction.len())?;
        let projected = direction.transpose() * &self.generators;
        Ok(direction.dot(&self.center) + projected.iter().map(|v| v.abs()).sum::<f64>())
    }

    /// `c + H b` for a coefficient vector `b ∈ [-1, 1]^m`.
    pub fn realize(&self, coefficients: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.order(), coefficients.len())?;
        Ok(&self.center + &self.generators * coefficients)
    }

    /// Order reduction that keeps the interval hull unchanged.
    ///
    /// Zonotopes of order `<= q` are returned as they are. Otherwise zero
    /// columns are dropped, the `q - n` longest generators (Euclidean norm,
    /// ties by column index) are kept and the remainder is replaced by its
    /// axis-aligned box, giving exactly `q` columns. The result contains `self`.
    pub fn reduce(&self, q: usize) -> Result<Zonotope> {
        Ok(Zonotope { center: self.center.clone(), generators: reduce_generators(&self.generators, q)? })
    }
}

/// Column concatenation `[a b]`.
pub(crate) fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

pub(crate) fn abs_row_sums(generators: &DMatrix<f64>) -> DVector<f64> {
    let mut radii = DVector::zeros(generators.nrows());
    for col in generators.column_iter() {
        for (r, v) in radii.iter_mut().zip(col.iter()) {
            *r += v.abs();
        }
    }
    radii
}

/// Hull-preserving reduction of a generator matrix to order `q`.
pub fn reduce_generators(generators: &DMatrix<f64>, q: usize) -> Result<DMatrix<f64>> {
    let n = generators.nrows();
    if q < n {
        return Err(Error::InvalidInput("reduction order below zonotope dimension"));
    }
    if generators.ncols() <= q {
        return Ok(generators.clone());
    }

    let norms: Vec<f64> = generators.column_iter().map(|col| col.norm_squared()).collect();
    let mut ranked: Vec<(f64, usize)> = norms.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(j, &v)| (v, j)).collect();
    if ranked.len() <= q {
        let kept: Vec<usize> = ranked.iter().map(|&(_, j)| j).collect();
        return Ok(generators.select_columns(kept.iter()));
    }

    // Longest first; equal norms keep their original column order.
    let by_rank = |a: &(f64, usize), b: &(f64, usize)| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1));
    let keep = q - n;
    if keep > 0 {
        ranked.select_nth_unstable_by(keep - 1, by_rank);
    }
    let mut boxed = alloc::vec![false; generators.ncols()];
    for &(_, j) in &ranked[keep..] {
        boxed[j] = true;
    }

    // Kept columns stay in their original order.
    let mut out = DMatrix::zeros(n, q);
    let mut slot = 0;
    let mut radii = DVector::<f64>::zeros(n);
    for (j, col) in generators.column_iter().enumerate() {
        if boxed[j] {
            for (r, v) in radii.iter_mut().zip(col.iter()) {
                *r += v.abs();
            }
        } else if norms[j] > 0.0 {
            out.column_mut(slot).copy_from(&col);
            slot += 1;
        }
    }
    for i in 0..n {
        out[(i, keep + i)] = radii[i];
    }
    Ok(out)
}
