//! Column-major data matrices (dense or sparse columns) and the small dense
//! factorizations the rest of the crate is built on.
//!
//! Data points are columns. Dense storage is an `nalgebra::DMatrix`, which is
//! column-major already; sparse storage keeps one sorted `(index, value)` list
//! per column.

mod factor;

pub use factor::{
    psd_factor, qr_thin, sym_eigen, tri_solve, truncated_svd, QrResult, SvdResult,
    TriangularFactor, DEFAULT_RANK_TOL,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// One sparse column: strictly increasing row indices with their values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseColumn {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseColumn {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Self {
        SparseColumn { indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    Dense(Mat),
    Sparse(Vec<SparseColumn>),
}

/// A `d x n` matrix whose columns are data points.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnMatrix {
    n_rows: usize,
    storage: Storage,
}

/// Borrowed view of a single column.
#[derive(Clone, Copy, Debug)]
pub enum ColumnRef<'a> {
    Dense(&'a [f64]),
    Sparse(&'a SparseColumn),
}

impl<'a> ColumnRef<'a> {
    pub fn dim_nnz(&self) -> usize {
        match self {
            ColumnRef::Dense(v) => v.len(),
            ColumnRef::Sparse(c) => c.nnz(),
        }
    }

    /// Calls `f(row, value)` for every stored entry in increasing row order.
    #[inline]
    pub fn for_each_nz(&self, mut f: impl FnMut(usize, f64)) {
        match self {
            ColumnRef::Dense(v) => v.iter().enumerate().for_each(|(i, &x)| f(i, x)),
            ColumnRef::Sparse(c) => c.iter().for_each(|(i, x)| f(i, x)),
        }
    }

    pub fn sq_norm(&self) -> f64 {
        let mut acc = 0.0;
        self.for_each_nz(|_, x| acc += x * x);
        acc
    }

    pub fn all_finite(&self) -> bool {
        match self {
            ColumnRef::Dense(v) => v.iter().all(|x| x.is_finite()),
            ColumnRef::Sparse(c) => c.values.iter().all(|x| x.is_finite()),
        }
    }

    pub fn to_dense(&self, n_rows: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_rows];
        self.for_each_nz(|i, x| out[i] = x);
        out
    }
}

/// Inner product of two columns of equal length, summed in increasing row order.
pub fn dot(a: ColumnRef<'_>, b: ColumnRef<'_>) -> f64 {
    match (a, b) {
        (ColumnRef::Dense(x), ColumnRef::Dense(y)) => {
            let mut acc = 0.0;
            for (p, q) in x.iter().zip(y) {
                acc += p * q;
            }
            acc
        }
        (ColumnRef::Sparse(s), ColumnRef::Dense(y)) | (ColumnRef::Dense(y), ColumnRef::Sparse(s)) => {
            let mut acc = 0.0;
            for (i, v) in s.iter() {
                acc += v * y[i];
            }
            acc
        }
        (ColumnRef::Sparse(s), ColumnRef::Sparse(t)) => {
            let (mut i, mut j, mut acc) = (0, 0, 0.0);
            while i < s.nnz() && j < t.nnz() {
                match s.indices[i].cmp(&t.indices[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        acc += s.values[i] * t.values[j];
                        i += 1;
                        j += 1;
                    }
                }
            }
            acc
        }
    }
}

/// Squared Euclidean distance computed entrywise, so identical columns give exactly 0.
pub fn sq_dist(a: ColumnRef<'_>, b: ColumnRef<'_>) -> f64 {
    match (a, b) {
        (ColumnRef::Dense(x), ColumnRef::Dense(y)) => {
            x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum()
        }
        (ColumnRef::Sparse(s), ColumnRef::Dense(y)) | (ColumnRef::Dense(y), ColumnRef::Sparse(s)) => {
            let mut acc = 0.0;
            let mut next = 0;
            for (i, v) in s.iter() {
                for &z in &y[next..i] {
                    acc += z * z;
                }
                acc += (v - y[i]) * (v - y[i]);
                next = i + 1;
            }
            for &z in &y[next..] {
                acc += z * z;
            }
            acc
        }
        (ColumnRef::Sparse(s), ColumnRef::Sparse(t)) => {
            let (mut i, mut j, mut acc) = (0, 0, 0.0);
            while i < s.nnz() || j < t.nnz() {
                let si = s.indices.get(i).copied().unwrap_or(usize::MAX);
                let tj = t.indices.get(j).copied().unwrap_or(usize::MAX);
                if si < tj {
                    acc += s.values[i] * s.values[i];
                    i += 1;
                } else if tj < si {
                    acc += t.values[j] * t.values[j];
                    j += 1;
                } else {
                    let diff = s.values[i] - t.values[j];
                    acc += diff * diff;
                    i += 1;
                    j += 1;
                }
            }
            acc
        }
    }
}

impl ColumnMatrix {
    pub fn from_dense(m: Mat) -> Self {
        ColumnMatrix { n_rows: m.nrows(), storage: Storage::Dense(m) }
    }

    /// Builds a sparse matrix, validating index bounds and ordering.
    pub fn from_sparse(n_rows: usize, columns: Vec<SparseColumn>) -> Result<Self> {
        for (j, col) in columns.iter().enumerate() {
            if col.indices.len() != col.values.len() {
                return Err(Error::InvalidArgument(format!(
                    "column {j}: {} indices but {} values",
                    col.indices.len(),
                    col.values.len()
                )));
            }
            for w in col.indices.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidArgument(format!(
                        "column {j}: indices not strictly increasing ({} then {})",
                        w[0], w[1]
                    )));
                }
            }
            if let Some(&last) = col.indices.last() {
                if last >= n_rows {
                    return Err(Error::InvalidArgument(format!(
                        "column {j}: index {last} out of range for {n_rows} rows"
                    )));
                }
            }
        }
        Ok(ColumnMatrix { n_rows, storage: Storage::Sparse(columns) })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::from_dense(Mat::zeros(n_rows, n_cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_dense(Mat::identity(n, n))
    }

    /// Dense matrix from row-major nested slices (test and example convenience).
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        Self::from_dense(Mat::from_fn(n_rows, n_cols, |i, j| rows[i][j]))
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.ncols(),
            Storage::Sparse(cols) => cols.len(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols())
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    /// Stored entries: exact for sparse storage, `rows * cols` for dense.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.len(),
            Storage::Sparse(cols) => cols.iter().map(SparseColumn::nnz).sum(),
        }
    }

    pub fn column(&self, j: usize) -> ColumnRef<'_> {
        match &self.storage {
            Storage::Dense(m) => {
                let r = self.n_rows;
                ColumnRef::Dense(&m.as_slice()[j * r..(j + 1) * r])
            }
            Storage::Sparse(cols) => ColumnRef::Sparse(&cols[j]),
        }
    }

    pub fn columns(&self) -> impl Iterator<Item = ColumnRef<'_>> {
        (0..self.n_cols()).map(move |j| self.column(j))
    }

    pub fn to_dense(&self) -> Mat {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(cols) => {
                let mut out = Mat::zeros(self.n_rows, cols.len());
                for (j, c) in cols.iter().enumerate() {
                    for (i, v) in c.iter() {
                        out[(i, j)] = v;
                    }
                }
                out
            }
        }
    }

    pub fn as_dense(&self) -> Option<&Mat> {
        match &self.storage {
            Storage::Dense(m) => Some(m),
            Storage::Sparse(_) => None,
        }
    }

    /// Gathers the listed columns, keeping the storage kind.
    pub fn select_columns(&self, idx: &[usize]) -> ColumnMatrix {
        match &self.storage {
            Storage::Dense(m) => Self::from_dense(m.select_columns(idx)),
            Storage::Sparse(cols) => ColumnMatrix {
                n_rows: self.n_rows,
                storage: Storage::Sparse(idx.iter().map(|&j| cols[j].clone()).collect()),
            },
        }
    }

    /// Horizontal concatenation. The result is sparse only if every part is.
    pub fn hconcat(parts: &[&ColumnMatrix]) -> Result<ColumnMatrix> {
        let n_rows = parts.first().ok_or(Error::Empty("hconcat of no matrices"))?.n_rows;
        for p in parts {
            if p.n_rows != n_rows {
                return Err(Error::mismatch("hconcat", (n_rows, 0), p.shape()));
            }
        }
        if parts.iter().all(|p| p.is_sparse()) {
            let mut cols = Vec::new();
            for p in parts {
                if let Storage::Sparse(c) = &p.storage {
                    cols.extend(c.iter().cloned());
                }
            }
            return Ok(ColumnMatrix { n_rows, storage: Storage::Sparse(cols) });
        }
        let n_cols: usize = parts.iter().map(|p| p.n_cols()).sum();
        let mut out = Mat::zeros(n_rows, n_cols);
        let mut offset = 0;
        for p in parts {
            for j in 0..p.n_cols() {
                let mut col = out.column_mut(offset + j);
                p.column(j).for_each_nz(|i, x| col[i] = x);
            }
            offset += p.n_cols();
        }
        Ok(Self::from_dense(out))
    }

    pub fn all_finite(&self) -> bool {
        self.columns().all(|c| c.all_finite())
    }

    /// Words needed to transmit the matrix: every dense entry, or an index
    /// and a value per stored sparse entry.
    pub fn word_count(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.len(),
            Storage::Sparse(_) => 2 * self.nnz(),
        }
    }

    pub fn column_sq_norms(&self) -> Vec<f64> {
        self.columns().map(|c| c.sq_norm()).collect()
    }
}

impl From<Mat> for ColumnMatrix {
    fn from(m: Mat) -> Self {
        ColumnMatrix::from_dense(m)
    }
}

/// `A * B`, or `A^T * B` when `transpose_a` is set.
///
/// Accumulation order is fixed: the non-transposed product adds
/// `A[:, l] * B[l, j]` for increasing `l`, the transposed one sums
/// `A[r, i] * B[r, j]` for increasing `r`. Sparse operands only skip zero
/// terms, so sparse and densified inputs give bit-identical results.
pub fn matmul(transpose_a: bool, a: &ColumnMatrix, b: &ColumnMatrix) -> Result<ColumnMatrix> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    if transpose_a {
        if ar != br {
            return Err(Error::mismatch("matmul(A^T B)", (ac, ar), (br, bc)));
        }
        let mut out = Mat::zeros(ac, bc);
        for j in 0..bc {
            let bj = b.column(j);
            for i in 0..ac {
                out[(i, j)] = dot(a.column(i), bj);
            }
        }
        Ok(ColumnMatrix::from_dense(out))
    } else {
        if ac != br {
            return Err(Error::mismatch("matmul(A B)", (ar, ac), (br, bc)));
        }
        let mut out = Mat::zeros(ar, bc);
        let data = out.as_mut_slice();
        for j in 0..bc {
            let out_col = &mut data[j * ar..(j + 1) * ar];
            b.column(j).for_each_nz(|l, blj| {
                a.column(l).for_each_nz(|i, ail| out_col[i] += ail * blj);
            });
        }
        Ok(ColumnMatrix::from_dense(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(rows: usize, cols: usize, fill: f64, seed: u64) -> ColumnMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let columns = (0..cols)
            .map(|_| {
                let mut c = SparseColumn::default();
                for i in 0..rows {
                    if rng.random::<f64>() < fill {
                        c.indices.push(i);
                        c.values.push(rng.random_range(-1.0..1.0));
                    }
                }
                c
            })
            .collect();
        ColumnMatrix::from_sparse(rows, columns).unwrap()
    }

    #[test]
    fn identity_times_matrix() {
        let m = ColumnMatrix::from_rows(&[&[1.5, -2.0, 0.0], &[3.0, 4.0, 7.0]]);
        let p = matmul(false, &ColumnMatrix::identity(2), &m).unwrap();
        assert_eq!(p.to_dense(), m.to_dense());
    }

    #[test]
    fn small_product() {
        let a = ColumnMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = ColumnMatrix::from_rows(&[&[1.0], &[1.0]]);
        let p = matmul(false, &a, &b).unwrap().to_dense();
        assert_eq!(p.as_slice(), &[3.0, 7.0]);
        let pt = matmul(true, &a, &b).unwrap().to_dense();
        assert_eq!(pt.as_slice(), &[4.0, 6.0]);
    }

    #[test]
    fn mismatch_reports_shapes() {
        let a = ColumnMatrix::zeros(2, 3);
        let b = ColumnMatrix::zeros(2, 3);
        let err = matmul(false, &a, &b).unwrap_err().to_string();
        assert!(err.contains("2x3"), "{err}");
    }

    #[test]
    fn sparse_dense_product_matches_densified() {
        let a = random_sparse(5, 4, 0.3, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let b = ColumnMatrix::from_dense(Mat::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0)));
        let sparse = matmul(false, &a, &b).unwrap().to_dense();
        let dense = matmul(false, &ColumnMatrix::from_dense(a.to_dense()), &b).unwrap().to_dense();
        let oracle = a.to_dense() * b.to_dense();
        assert_eq!(sparse, dense);
        assert!((sparse - oracle).abs().max() < 1e-14);
    }

    #[test]
    fn sparse_transposed_and_sparse_sparse_paths_agree() {
        let a = random_sparse(7, 5, 0.4, 3);
        let b = random_sparse(7, 6, 0.4, 4);
        let ad = ColumnMatrix::from_dense(a.to_dense());
        let bd = ColumnMatrix::from_dense(b.to_dense());
        let r1 = matmul(true, &a, &b).unwrap().to_dense();
        let r2 = matmul(true, &ad, &bd).unwrap().to_dense();
        let r3 = matmul(false, &ColumnMatrix::from_dense(a.to_dense().transpose()), &b)
            .unwrap()
            .to_dense();
        assert_eq!(r1, r2);
        assert!((r1 - r3).abs().max() < 1e-14);
    }

    #[test]
    fn sparse_validation() {
        let bad = ColumnMatrix::from_sparse(3, vec![SparseColumn::new(vec![2, 1], vec![1.0, 1.0])]);
        assert!(bad.is_err());
        let oob = ColumnMatrix::from_sparse(3, vec![SparseColumn::new(vec![3], vec![1.0])]);
        assert!(oob.is_err());
        let ok = ColumnMatrix::from_sparse(3, vec![SparseColumn::new(vec![0, 2], vec![1.0, 2.0])])
            .unwrap();
        assert_eq!(ok.nnz(), 2);
        assert_eq!(ok.word_count(), 4);
    }

    #[test]
    fn sq_dist_is_exact_for_identical_columns() {
        let a = random_sparse(9, 3, 0.5, 8);
        let d = ColumnMatrix::from_dense(a.to_dense());
        for j in 0..3 {
            assert_eq!(sq_dist(a.column(j), a.column(j)), 0.0);
            assert_eq!(sq_dist(a.column(j), d.column(j)), 0.0);
            let expect: f64 = (0..9).map(|i| (d.to_dense()[(i, j)] - d.to_dense()[(i, 0)]).powi(2)).sum();
            assert!((sq_dist(a.column(j), a.column(0)) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn hconcat_keeps_sparsity() {
        let a = random_sparse(4, 2, 0.5, 1);
        let b = random_sparse(4, 3, 0.5, 2);
        let c = ColumnMatrix::hconcat(&[&a, &b]).unwrap();
        assert!(c.is_sparse());
        assert_eq!(c.n_cols(), 5);
        let d = ColumnMatrix::hconcat(&[&a, &ColumnMatrix::zeros(4, 1)]).unwrap();
        assert!(!d.is_sparse());
        assert_eq!(d.to_dense().columns(0, 2), a.to_dense().columns(0, 2));
    }
}
