//! Working inside `span phi(Y)` with the kernel trick.
//!
//! With `phi(Y) = Q R` we have `R^T R = K_YY`, so `R` comes from a pivoted
//! Cholesky factorization of the Gram matrix on `Y`, and the coordinates of
//! `phi(A)` in the orthonormal basis `Q` are `R^{-T} K(Y, A)`.

use super::{gram, gram_diag, KernelSpec};
use crate::diskpca::KpcaSolution;
use crate::error::{Error, Result};
use crate::matrix::{psd_factor, tri_solve, ColumnMatrix, Mat, TriangularFactor};

#[derive(Clone, Debug)]
pub struct SpanBasis {
    pub spec: KernelSpec,
    /// Points whose features span the subspace, in input order.
    pub points: ColumnMatrix,
    pub factor: TriangularFactor,
    /// `points` restricted to the retained pivots, in pivot order.
    pub retained_points: ColumnMatrix,
}

impl SpanBasis {
    pub fn rank(&self) -> usize {
        self.factor.rank
    }

    /// Indices into `points` of the numerically independent columns, in pivot order.
    pub fn retained(&self) -> &[usize] {
        self.factor.retained()
    }

    /// `R^{-T} K_YY R^{-1}` on the retained block; the identity for a valid basis.
    pub fn basis_gram(&self) -> Result<Mat> {
        let k = gram(&self.spec, &self.retained_points, &self.retained_points)?;
        let half = tri_solve(&self.factor, &k, true)?;
        let full = tri_solve(&self.factor, &half.transpose(), true)?;
        Ok(full.transpose())
    }
}

pub fn build_span_basis(spec: &KernelSpec, y: &ColumnMatrix, tol: f64) -> Result<SpanBasis> {
    if y.n_cols() == 0 {
        return Err(Error::Empty("span basis needs at least one point"));
    }
    let k = gram(spec, y, y)?;
    let factor = psd_factor(&k, tol)?;
    if factor.rank == 0 {
        return Err(Error::Invariant("every point of the span basis has zero feature norm".into()));
    }
    let retained_points = y.select_columns(factor.retained());
    Ok(SpanBasis { spec: *spec, points: y.clone(), factor, retained_points })
}

/// Coordinates `R^{-T} K(Y_retained, A)` of `phi(A)` in the span basis.
pub fn project_coeffs(basis: &SpanBasis, spec: &KernelSpec, a: &ColumnMatrix) -> Result<Mat> {
    let kya = gram(spec, &basis.retained_points, a)?;
    tri_solve(&basis.factor, &kya, true)
}

/// Squared feature-space distance of each column of `A` to `span phi(Y)`,
/// clamped at zero.
pub fn residual_sq_distances(basis: &SpanBasis, spec: &KernelSpec, a: &ColumnMatrix) -> Result<Vec<f64>> {
    let coeffs = project_coeffs(basis, spec, a)?;
    let diag = gram_diag(spec, a);
    Ok(diag
        .iter()
        .enumerate()
        .map(|(j, &kjj)| (kjj - coeffs.column(j).norm_squared()).max(0.0))
        .collect())
}

/// `|phi(A) - L L^T phi(A)|^2 = tr(K_AA) - |C^T K(Y, A)|_F^2` for `L = phi(Y) C`.
///
/// Fails if `L^T L` deviates from the identity by more than `1e-6`.
pub fn subspace_error(spec: &KernelSpec, a: &ColumnMatrix, sol: &KpcaSolution) -> Result<f64> {
    let dev = sol.orthonormality_error(spec)?;
    if dev > 1e-6 {
        return Err(Error::Invariant(format!("solution is not orthonormal: |L^T L - I|_max = {dev:e}")));
    }
    let trace: f64 = gram_diag(spec, a).iter().sum();
    if sol.k() == 0 {
        return Ok(trace);
    }
    let proj = sol.project(spec, a)?;
    Ok((trace - proj.norm_squared()).max(0.0))
}
