use nalgebra::{SymmetricEigen, SVD};

use super::Mat;
use crate::error::{Error, Result};

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SvdResult {
    /// Left singular vectors, one per retained triplet.
    pub u: Mat,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// Right singular vectors as rows.
    pub vt: Mat,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U diag(s) V^T`.
    pub fn reconstruct(&self) -> Mat {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * &self.vt
    }
}

/// Upper-trapezoidal factor with a pivot order and a numerical rank.
///
/// `upper` is `rank x n`; its leading `rank x rank` block is the invertible
/// triangular part. Column `c` of `upper` refers to original index
/// `pivots[c]`, so `pivots[..rank]` are the retained indices and
/// `pivots[rank..]` the dropped ones.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangularFactor {
    pub upper: Mat,
    pub pivots: Vec<usize>,
    pub rank: usize,
    pub tol: f64,
}

impl TriangularFactor {
    pub fn retained(&self) -> &[usize] {
        &self.pivots[..self.rank]
    }

    pub fn dropped(&self) -> &[usize] {
        &self.pivots[self.rank..]
    }

    /// The invertible `rank x rank` block.
    pub fn leading(&self) -> Mat {
        self.upper.columns(0, self.rank).into_owned()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.pivots.len()
    }
}

#[derive(Clone, Debug)]
pub struct QrResult {
    /// `m x rank`, orthonormal columns.
    pub q: Mat,
    pub r: TriangularFactor,
}

impl QrResult {
    /// `M` with columns in pivot order, i.e. the matrix `Q R` reproduces.
    pub fn permuted(&self, m: &Mat) -> Mat {
        m.select_columns(&self.r.pivots)
    }
}

fn sign_normalize(u: &mut Mat, vt: Option<&mut Mat>) {
    let mut flips = Vec::with_capacity(u.ncols());
    for j in 0..u.ncols() {
        let col = u.column(j);
        let mut best = 0.0f64;
        let mut best_val = 0.0;
        for &x in col.iter() {
            if x.abs() > best {
                best = x.abs();
                best_val = x;
            }
        }
        let flip = best_val < 0.0;
        if flip {
            u.column_mut(j).neg_mut();
        }
        flips.push(flip);
    }
    if let Some(vt) = vt {
        for (i, flip) in flips.into_iter().enumerate() {
            if flip {
                vt.row_mut(i).neg_mut();
            }
        }
    }
}

/// Top `min(k, rank)` singular triplets of `m`.
///
/// Each left singular vector is oriented so its largest-magnitude entry is
/// positive (the right vector is flipped along with it).
pub fn truncated_svd(m: &Mat, k: usize) -> Result<SvdResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("truncated_svd needs k >= 1".into()));
    }
    if m.is_empty() {
        return Err(Error::Empty("truncated_svd of an empty matrix"));
    }
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::Invariant("truncated_svd input has non-finite entries".into()));
    }
    let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Invariant("SVD failed to converge".into()))?;
    let u_full = svd.u.expect("requested U");
    let vt_full = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let smax = order.first().map_or(0.0, |&i| svd.singular_values[i]);
    let cutoff = smax * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON;
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| svd.singular_values[i] > cutoff && svd.singular_values[i] > 0.0)
        .take(k)
        .collect();

    let mut u = u_full.select_columns(&keep);
    let mut vt = vt_full.select_rows(&keep);
    let singular_values = keep.iter().map(|&i| svd.singular_values[i]).collect();
    sign_normalize(&mut u, Some(&mut vt));
    Ok(SvdResult { u, singular_values, vt })
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues nonincreasing.
pub fn sym_eigen(k: &Mat) -> Result<(Vec<f64>, Mat)> {
    if k.nrows() != k.ncols() {
        return Err(Error::mismatch("sym_eigen", k.shape(), k.shape()));
    }
    if k.is_empty() {
        return Err(Error::Empty("sym_eigen of an empty matrix"));
    }
    let eig = SymmetricEigen::try_new(k.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Invariant("symmetric eigensolver failed".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = eig.eigenvectors.select_columns(&order);
    sign_normalize(&mut vectors, None);
    Ok((values, vectors))
}

/// Householder QR with column pivoting: `M[:, pivots] = Q R`.
///
/// Columns whose remaining norm falls to `tol` times the first pivot norm
/// or below end the factorization; the rank is recorded in `R`. Diagonal
/// entries of `R` are made positive.
pub fn qr_thin(m: &Mat, tol: f64) -> Result<QrResult> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::Empty("qr_thin of an empty matrix"));
    }
    let steps = rows.min(cols);
    let mut a = m.clone();
    let mut pivots: Vec<usize> = (0..cols).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut rank = steps;
    let mut first_norm = 0.0;

    for j in 0..steps {
        let mut best = j;
        let mut best_norm = -1.0;
        for c in j..cols {
            let n2: f64 = a.view((j, c), (rows - j, 1)).iter().map(|x| x * x).sum();
            if n2 > best_norm {
                best_norm = n2;
                best = c;
            }
        }
        if best != j {
            a.swap_columns(j, best);
            pivots.swap(j, best);
        }
        let norm = best_norm.sqrt();
        if j == 0 {
            first_norm = norm;
        }
        if norm == 0.0 || norm <= tol * first_norm {
            rank = j;
            break;
        }
        let x0 = a[(j, j)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a.view((j, j), (rows - j, 1)).iter().copied().collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for c in j..cols {
                let mut s = 0.0;
                for (i, vi) in v.iter().enumerate() {
                    s += vi * a[(j + i, c)];
                }
                let s = 2.0 * s / vnorm2;
                for (i, vi) in v.iter().enumerate() {
                    a[(j + i, c)] -= s * vi;
                }
            }
        }
        reflectors.push(v);
    }

    let mut upper = Mat::zeros(rank, cols);
    for i in 0..rank {
        for c in i..cols {
            upper[(i, c)] = a[(i, c)];
        }
    }
    let mut q = Mat::zeros(rows, rank);
    for i in 0..rank {
        q[(i, i)] = 1.0;
    }
    for (j, v) in reflectors.iter().enumerate().take(rank).rev() {
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in 0..rank {
            let mut s = 0.0;
            for (i, vi) in v.iter().enumerate() {
                s += vi * q[(j + i, c)];
            }
            let s = 2.0 * s / vnorm2;
            for (i, vi) in v.iter().enumerate() {
                q[(j + i, c)] -= s * vi;
            }
        }
    }
    for i in 0..rank {
        if upper[(i, i)] < 0.0 {
            upper.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
    }
    Ok(QrResult { q, r: TriangularFactor { upper, pivots, rank, tol } })
}

/// Pivoted Cholesky factorization of a symmetric PSD matrix:
/// `R^T R = K[pivots, pivots]` on the retained block.
///
/// Pivots whose residual diagonal is at most `tol * max_diag` are dropped.
/// A residual diagonal below `-tol * max_diag` means the input is not PSD.
pub fn psd_factor(k: &Mat, tol: f64) -> Result<TriangularFactor> {
    let n = k.nrows();
    if n != k.ncols() {
        return Err(Error::mismatch("psd_factor", k.shape(), k.shape()));
    }
    if n == 0 {
        return Err(Error::Empty("psd_factor of an empty matrix"));
    }
    let mut diag: Vec<f64> = (0..n).map(|i| k[(i, i)]).collect();
    let max_diag = diag.iter().fold(0.0f64, |m, &d| m.max(d.abs()));
    let threshold = tol * max_diag;
    let mut pivots: Vec<usize> = (0..n).collect();
    let mut r = Mat::zeros(n, n);
    let mut rank = n;

    for j in 0..n {
        let mut best = j;
        for c in j..n {
            let d = diag[pivots[c]];
            if d < -threshold {
                return Err(Error::NotPsd { pivot: pivots[c], value: d });
            }
            if d > diag[pivots[best]] {
                best = c;
            }
        }
        if best != j {
            pivots.swap(j, best);
            r.swap_columns(j, best);
        }
        let d = diag[pivots[j]];
        if d <= threshold || d <= 0.0 {
            rank = j;
            break;
        }
        let rjj = d.sqrt();
        r[(j, j)] = rjj;
        for c in j + 1..n {
            let mut s = k[(pivots[j], pivots[c])];
            for i in 0..j {
                s -= r[(i, j)] * r[(i, c)];
            }
            let v = s / rjj;
            r[(j, c)] = v;
            diag[pivots[c]] -= v * v;
        }
    }
    let upper = r.rows(0, rank).into_owned();
    Ok(TriangularFactor { upper, pivots, rank, tol })
}

/// Solves `U X = B` (or `U^T X = B` when `transpose`) with `U` the leading
/// triangular block of `r`. `B` must have exactly `rank` rows, ordered like
/// the retained pivots.
pub fn tri_solve(r: &TriangularFactor, b: &Mat, transpose: bool) -> Result<Mat> {
    let n = r.rank;
    if b.nrows() != n {
        return Err(Error::mismatch("tri_solve", (n, n), b.shape()));
    }
    for i in 0..n {
        let d = r.upper[(i, i)];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::SingularPivot(i));
        }
    }
    let u = r.upper.as_slice();
    let ld = r.upper.nrows();
    let ucol = |j: usize| &u[j * ld..j * ld + n];
    let mut x = b.clone();
    for mut col in x.column_iter_mut() {
        let xc = col.as_mut_slice();
        if transpose {
            for i in 0..n {
                let ui = ucol(i);
                let s: f64 = ui[..i].iter().zip(&xc[..i]).map(|(a, b)| a * b).sum();
                xc[i] = (xc[i] - s) / ui[i];
            }
        } else {
            for i in (0..n).rev() {
                let ui = ucol(i);
                xc[i] /= ui[i];
                let xi = xc[i];
                for (xl, ul) in xc[..i].iter_mut().zip(&ui[..i]) {
                    *xl -= xi * ul;
                }
            }
        }
    }
    Ok(x)
}
