use crate::error::{Error, Result};
use crate::kernels::{gram, KernelSpec};
use crate::matrix::{ColumnMatrix, Mat};

/// A rank-`k` feature-space subspace `L = phi(points) C`.
#[derive(Clone, Debug, PartialEq)]
pub struct KpcaSolution {
    pub points: ColumnMatrix,
    /// Global column index of each point, when known.
    pub indices: Vec<usize>,
    /// `|points| x k` coefficient matrix.
    pub coeffs: Mat,
}

impl KpcaSolution {
    pub fn new(points: ColumnMatrix, indices: Vec<usize>, coeffs: Mat) -> Result<Self> {
        if coeffs.nrows() != points.n_cols() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficient rows for {} points",
                coeffs.nrows(),
                points.n_cols()
            )));
        }
        if !indices.is_empty() && indices.len() != points.n_cols() {
            return Err(Error::InvalidArgument("one global index per point required".into()));
        }
        Ok(KpcaSolution { points, indices, coeffs })
    }

    /// The `k = 0` solution, whose subspace is `{0}`.
    pub fn empty(n_rows: usize) -> Self {
        KpcaSolution { points: ColumnMatrix::zeros(n_rows, 0), indices: Vec::new(), coeffs: Mat::zeros(0, 0) }
    }

    pub fn k(&self) -> usize {
        self.coeffs.ncols()
    }

    /// `L^T L = C^T K_YY C`.
    pub fn gram(&self, spec: &KernelSpec) -> Result<Mat> {
        if self.k() == 0 {
            return Ok(Mat::zeros(0, 0));
        }
        let kyy = gram(spec, &self.points, &self.points)?;
        Ok(self.coeffs.transpose() * kyy * &self.coeffs)
    }

    /// `max |L^T L - I|`.
    pub fn orthonormality_error(&self, spec: &KernelSpec) -> Result<f64> {
        let g = self.gram(spec)?;
        let k = self.k();
        Ok((g - Mat::identity(k, k)).abs().max())
    }

    /// `L^T phi(A) = C^T K(Y, A)`, the `k x n` coordinates of `A` in the subspace.
    pub fn project(&self, spec: &KernelSpec, a: &ColumnMatrix) -> Result<Mat> {
        if self.k() == 0 {
            return Ok(Mat::zeros(0, a.n_cols()));
        }
        let kya = gram(spec, &self.points, a)?;
        Ok(self.coeffs.transpose() * kya)
    }
}
