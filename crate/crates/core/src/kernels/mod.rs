//! Kernel functions and Gram matrices, plus the kernel-trick machinery for
//! working inside the span of a set of feature-space points.

mod factor;

pub use factor::{
    build_span_basis, project_coeffs, residual_sq_distances, subspace_error, SpanBasis,
};

use rand::seq::index;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matrix::{dot, sq_dist, ColumnMatrix, ColumnRef, Mat};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `(<x, y>)^degree`
    Polynomial { degree: u32 },
    /// `exp(-|x - y|^2 / (2 bandwidth^2))`
    Gaussian { bandwidth: f64 },
    /// Arc-cosine kernel of degree 0, 1 or 2.
    ArcCos { degree: u32 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Polynomial { degree } if degree < 1 => {
                Err(Error::InvalidArgument("polynomial degree must be >= 1".into()))
            }
            KernelSpec::Gaussian { bandwidth } if !(bandwidth > 0.0 && bandwidth.is_finite()) => {
                Err(Error::InvalidArgument(format!("gaussian bandwidth must be positive, got {bandwidth}")))
            }
            KernelSpec::ArcCos { degree } if degree > 2 => {
                Err(Error::InvalidArgument("arc-cos degree must be 0, 1 or 2".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Polynomial { .. } => "polynomial",
            KernelSpec::Gaussian { .. } => "gaussian",
            KernelSpec::ArcCos { .. } => "arccos",
        }
    }

    /// Evaluates the kernel from the two squared norms and the inner product.
    /// Gaussian kernels use the exact squared distance when it is supplied.
    #[inline]
    fn from_parts(&self, xx: f64, yy: f64, xy: f64, dist2: Option<f64>) -> f64 {
        match *self {
            KernelSpec::Polynomial { degree } => xy.powi(degree as i32),
            KernelSpec::Gaussian { bandwidth } => {
                let d2 = dist2.unwrap_or_else(|| (xx + yy - 2.0 * xy).max(0.0));
                (-d2 / (2.0 * bandwidth * bandwidth)).exp()
            }
            KernelSpec::ArcCos { degree } => arccos_value(degree, xx.sqrt(), yy.sqrt(), xy),
        }
    }
}

/// `(1/pi) |x|^n |y|^n J_n(theta)`. Zero vectors give 0 for every degree,
/// matching the random features, which vanish at the origin.
fn arccos_value(degree: u32, nx: f64, ny: f64, xy: f64) -> f64 {
    if nx == 0.0 || ny == 0.0 {
        return 0.0;
    }
    let cos = (xy / (nx * ny)).clamp(-1.0, 1.0);
    let theta = cos.acos();
    let sin = theta.sin();
    let j = match degree {
        0 => PI - theta,
        1 => sin + (PI - theta) * cos,
        _ => 3.0 * sin * cos + (PI - theta) * (1.0 + 2.0 * cos * cos),
    };
    (nx * ny).powi(degree as i32) * j / PI
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::mismatch("kernel_eval", (x.len(), 1), (y.len(), 1)));
    }
    Ok(kernel_eval_cols(spec, ColumnRef::Dense(x), ColumnRef::Dense(y)))
}

pub fn kernel_eval_cols(spec: &KernelSpec, x: ColumnRef<'_>, y: ColumnRef<'_>) -> f64 {
    match spec {
        KernelSpec::Gaussian { .. } => spec.from_parts(0.0, 0.0, 0.0, Some(sq_dist(x, y))),
        _ => spec.from_parts(x.sq_norm(), y.sq_norm(), dot(x, y), None),
    }
}

/// `kappa(a_j, a_j)` for every column.
pub fn gram_diag(spec: &KernelSpec, a: &ColumnMatrix) -> Vec<f64> {
    a.columns()
        .map(|c| {
            let n = c.sq_norm();
            spec.from_parts(n, n, n, Some(0.0))
        })
        .collect()
}

/// `K[i][j] = kappa(X_:i, Y_:j)`.
pub fn gram(spec: &KernelSpec, x: &ColumnMatrix, y: &ColumnMatrix) -> Result<Mat> {
    if x.n_rows() != y.n_rows() {
        return Err(Error::mismatch("gram", x.shape(), y.shape()));
    }
    let xn = x.column_sq_norms();
    let yn = y.column_sq_norms();
    let (nx, ny) = (x.n_cols(), y.n_cols());
    let column = |j: usize| -> Vec<f64> {
        let yj = y.column(j);
        (0..nx).map(|i| spec.from_parts(xn[i], yn[j], dot(x.column(i), yj), None)).collect()
    };
    #[cfg(feature = "parallel")]
    let cols: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..ny).into_par_iter().map(column).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let cols: Vec<Vec<f64>> = (0..ny).map(column).collect();
    let mut out = Mat::zeros(nx, ny);
    for (j, c) in cols.into_iter().enumerate() {
        out.column_mut(j).copy_from_slice(&c);
    }
    Ok(out)
}

/// Bandwidth by the median trick: `factor` times the median pairwise
/// distance among at most `max_points` columns drawn without replacement.
pub fn median_bandwidth(a: &ColumnMatrix, factor: f64, max_points: usize, seed: u64) -> Result<f64> {
    let n = a.n_cols();
    if n < 2 {
        return Err(Error::InvalidArgument("median trick needs at least two points".into()));
    }
    let take = n.min(max_points.max(2));
    let mut rng = crate::rng::lane_rng(seed, "median-bandwidth", crate::rng::SHARED);
    let mut idx = index::sample(&mut rng, n, take).into_vec();
    idx.sort_unstable();
    let mut dists = Vec::with_capacity(take * (take - 1) / 2);
    for (p, &i) in idx.iter().enumerate() {
        for &j in &idx[p + 1..] {
            dists.push(sq_dist(a.column(i), a.column(j)).sqrt());
        }
    }
    let mid = dists.len() / 2;
    let (_, median, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    let sigma = factor * *median;
    if sigma > 0.0 {
        Ok(sigma)
    } else {
        Err(Error::InvalidArgument("median pairwise distance is zero".into()))
    }
}
