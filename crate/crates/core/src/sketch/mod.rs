//! Randomized embedding operators.
//!
//! Every operator is a pure function of its parameters and seed. Random
//! entries are generated per input coordinate from a counter-based seed, so
//! a column only touches the generator state of its nonzero rows and sparse
//! inputs are never densified.

mod right;

pub use right::{right_sketch, RightSketch};

use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::matrix::{ColumnMatrix, ColumnRef, Mat};
use crate::rng::{mix, rng_from};

const PHASE_COUNTER: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SketchOp {
    CountSketch { t: usize, seed: u64 },
    Gaussian { t: usize, seed: u64 },
    TensorSketch { degree: u32, t: usize, seed: u64 },
    Rff { m: usize, bandwidth: f64, seed: u64 },
    ArcCosRf { m: usize, degree: u32, seed: u64 },
    /// Stages applied left to right.
    Composed { stages: Vec<SketchOp> },
}

impl SketchOp {
    pub fn output_dim(&self) -> usize {
        match self {
            SketchOp::CountSketch { t, .. }
            | SketchOp::Gaussian { t, .. }
            | SketchOp::TensorSketch { t, .. } => *t,
            SketchOp::Rff { m, .. } | SketchOp::ArcCosRf { m, .. } => *m,
            SketchOp::Composed { stages } => stages.last().map_or(0, SketchOp::output_dim),
        }
    }

    pub fn apply(&self, x: &ColumnMatrix) -> Result<ColumnMatrix> {
        match self {
            SketchOp::CountSketch { t, seed } => countsketch_apply(*t, *seed, x),
            SketchOp::Gaussian { t, seed } => gaussian_apply(*t, *seed, x),
            SketchOp::TensorSketch { degree, t, seed } => tensorsketch_apply(*degree, *t, *seed, x),
            SketchOp::Rff { m, bandwidth, seed } => rff_apply(*m, *bandwidth, *seed, x),
            SketchOp::ArcCosRf { m, degree, seed } => arccos_rf_apply(*m, *degree, *seed, x),
            SketchOp::Composed { stages } => {
                let (first, rest) = stages.split_first().ok_or(Error::Empty("composed sketch with no stages"))?;
                let mut cur = first.apply(x)?;
                for stage in rest {
                    cur = stage.apply(&cur)?;
                }
                Ok(cur)
            }
        }
    }
}

/// A sketched local data block `E = S(phi(A))`.
#[derive(Clone, Debug)]
pub struct EmbeddedData {
    pub e: ColumnMatrix,
    pub op: SketchOp,
    pub source_count: usize,
}

fn require_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::InvalidArgument(format!("{name} must be >= 1")))
    } else {
        Ok(())
    }
}

/// Bucket and sign of input row `row` under the CountSketch with `seed`.
#[inline]
pub fn countsketch_hash(seed: u64, row: usize, t: usize) -> (usize, f64) {
    let h = mix(seed, row as u64);
    let bucket = (((h >> 1) as u128 * t as u128) >> 63) as usize;
    let sign = if h & 1 == 1 { 1.0 } else { -1.0 };
    (bucket, sign)
}

fn countsketch_column(col: ColumnRef<'_>, t: usize, seed: u64, out: &mut [f64]) {
    col.for_each_nz(|l, v| {
        let (b, s) = countsketch_hash(seed, l, t);
        out[b] += s * v;
    });
}

/// `S M` for the implicit `t x d` CountSketch `S`; cost `O(nnz(M))`.
pub fn countsketch_apply(t: usize, seed: u64, m: &ColumnMatrix) -> Result<ColumnMatrix> {
    require_positive("countsketch dimension t", t)?;
    let mut out = Mat::zeros(t, m.n_cols());
    let data = out.as_mut_slice();
    for (j, col) in m.columns().enumerate() {
        countsketch_column(col, t, seed, &mut data[j * t..(j + 1) * t]);
    }
    Ok(ColumnMatrix::from_dense(out))
}

/// Rows of `m` that hold at least one stored entry, ascending.
fn touched_rows(m: &ColumnMatrix) -> Vec<usize> {
    if !m.is_sparse() {
        return (0..m.n_rows()).collect();
    }
    let mut seen = vec![false; m.n_rows()];
    for col in m.columns() {
        col.for_each_nz(|i, _| seen[i] = true);
    }
    seen.iter().enumerate().filter_map(|(i, &s)| s.then_some(i)).collect()
}

/// Per-coordinate random columns `W[:, l]`, generated only for the rows `m` touches.
struct CoordinateColumns {
    len: usize,
    slot: Vec<usize>,
    data: Vec<f64>,
}

impl CoordinateColumns {
    fn gaussian(m: &ColumnMatrix, len: usize, seed: u64, scale: f64) -> Self {
        let rows = touched_rows(m);
        let mut slot = vec![usize::MAX; m.n_rows()];
        let mut data = Vec::with_capacity(rows.len() * len);
        for (p, &l) in rows.iter().enumerate() {
            slot[l] = p;
            let mut rng = rng_from(mix(seed, l as u64));
            data.extend((0..len).map(|_| rng.sample::<f64, _>(StandardNormal) * scale));
        }
        CoordinateColumns { len, slot, data }
    }

    #[inline]
    fn col(&self, l: usize) -> &[f64] {
        let p = self.slot[l];
        &self.data[p * self.len..(p + 1) * self.len]
    }

    /// `W x` accumulated over the stored entries of `x` in increasing row order.
    fn apply_into(&self, x: ColumnRef<'_>, out: &mut [f64]) {
        x.for_each_nz(|l, v| {
            for (o, w) in out.iter_mut().zip(self.col(l)) {
                *o += w * v;
            }
        });
    }
}

/// `G M` with `G` a `t x d` matrix of i.i.d. `N(0, 1/t)` entries.
pub fn gaussian_apply(t: usize, seed: u64, m: &ColumnMatrix) -> Result<ColumnMatrix> {
    require_positive("gaussian dimension t", t)?;
    let g = CoordinateColumns::gaussian(m, t, seed, 1.0 / (t as f64).sqrt());
    let mut out = Mat::zeros(t, m.n_cols());
    let data = out.as_mut_slice();
    for (j, col) in m.columns().enumerate() {
        g.apply_into(col, &mut data[j * t..(j + 1) * t]);
    }
    Ok(ColumnMatrix::from_dense(out))
}

/// Degree-`q` TensorSketch: `q` independent CountSketches of each column,
/// combined by length-`t` cyclic convolution (via FFT). Inner products of
/// the outputs are unbiased estimates of `(x^T y)^q`.
pub fn tensorsketch_apply(degree: u32, t: usize, seed: u64, x: &ColumnMatrix) -> Result<ColumnMatrix> {
    require_positive("tensorsketch dimension t", t)?;
    if degree == 0 {
        return Err(Error::InvalidArgument("tensorsketch degree must be >= 1".into()));
    }
    if degree == 1 {
        return countsketch_apply(t, mix(seed, 0), x);
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(t);
    let inv = planner.plan_fft_inverse(t);
    let sketch_one = |col: ColumnRef<'_>| -> Vec<f64> {
        let mut acc = vec![Complex::new(1.0, 0.0); t];
        let mut buf = vec![0.0; t];
        let mut spec = vec![Complex::new(0.0, 0.0); t];
        for i in 0..degree {
            buf.iter_mut().for_each(|v| *v = 0.0);
            countsketch_column(col, t, mix(seed, i as u64), &mut buf);
            for (s, &b) in spec.iter_mut().zip(&buf) {
                *s = Complex::new(b, 0.0);
            }
            fwd.process(&mut spec);
            for (a, s) in acc.iter_mut().zip(&spec) {
                *a *= s;
            }
        }
        inv.process(&mut acc);
        let scale = 1.0 / t as f64;
        acc.iter().map(|c| c.re * scale).collect()
    };
    let n = x.n_cols();
    #[cfg(feature = "parallel")]
    let cols: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(|j| sketch_one(x.column(j))).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let cols: Vec<Vec<f64>> = (0..n).map(|j| sketch_one(x.column(j))).collect();
    let mut out = Mat::zeros(t, n);
    for (j, c) in cols.into_iter().enumerate() {
        out.column_mut(j).copy_from_slice(&c);
    }
    Ok(ColumnMatrix::from_dense(out))
}

fn phases(seed: u64, m: usize) -> Vec<f64> {
    let mut rng = rng_from(mix(seed, PHASE_COUNTER));
    let dist = Uniform::new(0.0, 2.0 * PI).expect("valid range");
    (0..m).map(|_| rng.sample(dist)).collect()
}

fn random_features(
    m: usize,
    x: &ColumnMatrix,
    omega: &CoordinateColumns,
    feature: impl Fn(usize, f64) -> f64,
) -> ColumnMatrix {
    let mut out = Mat::zeros(m, x.n_cols());
    let data = out.as_mut_slice();
    let mut z = vec![0.0; m];
    for (j, col) in x.columns().enumerate() {
        z.iter_mut().for_each(|v| *v = 0.0);
        omega.apply_into(col, &mut z);
        for (i, (o, &zi)) in data[j * m..(j + 1) * m].iter_mut().zip(&z).enumerate() {
            *o = feature(i, zi);
        }
    }
    ColumnMatrix::from_dense(out)
}

/// Random Fourier features for the Gaussian kernel with the given bandwidth:
/// entry `(i, j)` is `sqrt(2/m) cos(w_i^T x_j + b_i)`, `w_i ~ N(0, I / bandwidth^2)`.
pub fn rff_apply(m: usize, bandwidth: f64, seed: u64, x: &ColumnMatrix) -> Result<ColumnMatrix> {
    require_positive("number of random features m", m)?;
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidArgument("rff bandwidth must be positive".into()));
    }
    let omega = CoordinateColumns::gaussian(x, m, seed, 1.0 / bandwidth);
    let b = phases(seed, m);
    let scale = (2.0 / m as f64).sqrt();
    Ok(random_features(m, x, &omega, |i, z| scale * (z + b[i]).cos()))
}

/// Arc-cosine random features `sqrt(2/m) max(0, w_i^T x)^degree`, `w_i ~ N(0, I)`.
/// Degree 0 uses the step function, which is zero at the origin.
pub fn arccos_rf_apply(m: usize, degree: u32, seed: u64, x: &ColumnMatrix) -> Result<ColumnMatrix> {
    require_positive("number of random features m", m)?;
    if degree > 2 {
        return Err(Error::InvalidArgument("arc-cos degree must be 0, 1 or 2".into()));
    }
    let omega = CoordinateColumns::gaussian(x, m, seed, 1.0);
    let scale = (2.0 / m as f64).sqrt();
    Ok(random_features(m, x, &omega, |_, z| {
        if z > 0.0 {
            scale * z.powi(degree as i32)
        } else {
            0.0
        }
    }))
}

/// Dimensions of the kernel subspace embedding; `None` picks the default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    /// Output dimension. Default `max(4k, ceil(2k/eps))`.
    pub t: Option<usize>,
    /// TensorSketch dimension for polynomial kernels. Default `3^q k^2 + ceil(k/eps)`.
    pub t1: Option<usize>,
    /// Random features for shift-invariant and arc-cos kernels.
    pub m: usize,
    /// Optional CountSketch stage between the random features and the Gaussian.
    pub countsketch: Option<usize>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig { t: None, t1: None, m: 2000, countsketch: None }
    }
}

impl EmbeddingConfig {
    pub fn resolved_t(&self, k: usize, eps: f64) -> usize {
        self.t.unwrap_or_else(|| (4 * k).max((2.0 * k as f64 / eps).ceil() as usize))
    }

    pub fn resolved_t1(&self, degree: u32, k: usize, eps: f64) -> usize {
        self.t1
            .unwrap_or_else(|| 3usize.pow(degree) * k * k + (k as f64 / eps).ceil() as usize)
    }
}

fn check_k_eps(k: usize, eps: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

/// The embedding operator `S` for `phi(A)`: TensorSketch then Gaussian for
/// polynomial kernels, random features (optionally CountSketch) then
/// Gaussian otherwise. Every worker must use the same operator.
pub fn embedding_op(spec: &KernelSpec, k: usize, eps: f64, cfg: &EmbeddingConfig, seed: u64) -> Result<SketchOp> {
    spec.validate()?;
    check_k_eps(k, eps)?;
    let t = cfg.resolved_t(k, eps);
    require_positive("embedding dimension t", t)?;
    let mut stages = Vec::with_capacity(3);
    match *spec {
        KernelSpec::Polynomial { degree } => {
            stages.push(SketchOp::TensorSketch { degree, t: cfg.resolved_t1(degree, k, eps), seed: mix(seed, 0) });
        }
        KernelSpec::Gaussian { bandwidth } => {
            stages.push(SketchOp::Rff { m: cfg.m, bandwidth, seed: mix(seed, 0) });
        }
        KernelSpec::ArcCos { degree } => {
            stages.push(SketchOp::ArcCosRf { m: cfg.m, degree, seed: mix(seed, 0) });
        }
    }
    if !matches!(spec, KernelSpec::Polynomial { .. }) {
        require_positive("number of random features m", cfg.m)?;
        if cfg.m < t {
            log::warn!("only {} random features for embedding dimension {t}; additive error may be large", cfg.m);
        }
        if let Some(c) = cfg.countsketch {
            stages.push(SketchOp::CountSketch { t: c, seed: mix(seed, 1) });
        }
    }
    stages.push(SketchOp::Gaussian { t, seed: mix(seed, 2) });
    Ok(SketchOp::Composed { stages })
}

pub fn good_embedding(
    spec: &KernelSpec,
    k: usize,
    eps: f64,
    cfg: &EmbeddingConfig,
    seed: u64,
    a: &ColumnMatrix,
) -> Result<EmbeddedData> {
    let op = embedding_op(spec, k, eps, cfg, seed)?;
    let e = op.apply(a)?;
    Ok(EmbeddedData { e, op, source_count: a.n_cols() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::kernel_eval;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn randn(rows: usize, cols: usize, seed: u64) -> ColumnMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ColumnMatrix::from_dense(Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal)))
    }

    #[test]
    fn countsketch_injective_hash_permutes_rows() {
        let d = 4;
        let seed = (0..10_000u64)
            .find(|&s| {
                let mut hit = vec![false; d];
                (0..d).all(|l| !std::mem::replace(&mut hit[countsketch_hash(s, l, d).0], true))
            })
            .expect("an injective seed exists");
        let m = randn(d, 3, 1);
        let out = countsketch_apply(d, seed, &m).unwrap().to_dense();
        let md = m.to_dense();
        for l in 0..d {
            let (b, s) = countsketch_hash(seed, l, d);
            for j in 0..3 {
                assert_eq!(out[(b, j)], s * md[(l, j)]);
            }
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let z = ColumnMatrix::zeros(6, 2);
        for op in [
            SketchOp::CountSketch { t: 3, seed: 1 },
            SketchOp::Gaussian { t: 3, seed: 1 },
            SketchOp::TensorSketch { degree: 2, t: 8, seed: 1 },
        ] {
            let out = op.apply(&z).unwrap().to_dense();
            assert!(out.iter().all(|&v| v == 0.0), "{op:?}");
        }
    }

    fn mc_sq_norm(op: impl Fn(u64) -> SketchOp, x: &ColumnMatrix, seeds: u64) -> f64 {
        (0..seeds).map(|s| op(s).apply(x).unwrap().to_dense().norm_squared()).sum::<f64>() / seeds as f64
    }

    #[test]
    fn countsketch_preserves_norm_in_expectation() {
        let x = randn(20, 1, 3);
        let truth = x.to_dense().norm_squared();
        let mean = mc_sq_norm(|s| SketchOp::CountSketch { t: 8, seed: s }, &x, 1000);
        assert!((mean - truth).abs() < 0.05 * truth, "{mean} vs {truth}");
    }

    #[test]
    fn gaussian_preserves_norm_in_expectation() {
        let x = randn(20, 1, 4);
        let truth = x.to_dense().norm_squared();
        let mean = mc_sq_norm(|s| SketchOp::Gaussian { t: 8, seed: s }, &x, 1000);
        assert!((mean - truth).abs() < 0.05 * truth, "{mean} vs {truth}");
    }

    #[test]
    fn gaussian_is_deterministic() {
        let x = randn(7, 5, 5);
        let a = gaussian_apply(4, 99, &x).unwrap();
        let b = gaussian_apply(4, 99, &x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tensorsketch_degree_one_is_countsketch() {
        let x = randn(9, 4, 6);
        let ts = tensorsketch_apply(1, 5, 17, &x).unwrap();
        let cs = countsketch_apply(5, mix(17, 0), &x).unwrap();
        assert_eq!(ts, cs);
    }

    #[test]
    fn tensorsketch_estimates_squared_inner_product() {
        let x = randn(10, 1, 7).to_dense();
        let noise = randn(10, 1, 8).to_dense();
        let d = Mat::from_fn(10, 2, |i, j| if j == 0 { x[i] } else { x[i] + 0.3 * noise[i] });
        let xy = ColumnMatrix::from_dense(d.clone());
        let truth = d.column(0).dot(&d.column(1)).powi(2);
        let seeds = 500;
        let mut sum = 0.0;
        for s in 0..seeds {
            let e = tensorsketch_apply(2, 512, s, &xy).unwrap().to_dense();
            sum += e.column(0).dot(&e.column(1));
        }
        let mean = sum / seeds as f64;
        assert!((mean - truth).abs() < 0.05 * truth.abs(), "{mean} vs {truth}");
    }

    #[test]
    fn tensorsketch_matches_explicit_hash_on_outer_product() {
        let (d, t, seed) = (5, 7, 21);
        let x = randn(d, 1, 15);
        let xv = x.to_dense();
        let mut explicit = vec![0.0; t];
        for i in 0..d {
            for j in 0..d {
                let (b1, s1) = countsketch_hash(mix(seed, 0), i, t);
                let (b2, s2) = countsketch_hash(mix(seed, 1), j, t);
                explicit[(b1 + b2) % t] += s1 * s2 * xv[i] * xv[j];
            }
        }
        let fast = tensorsketch_apply(2, t, seed, &x).unwrap().to_dense();
        for b in 0..t {
            assert!((fast[b] - explicit[b]).abs() < 1e-12, "bucket {b}");
        }
    }

    #[test]
    fn tensorsketch_unbiased_within_three_standard_errors() {
        let xy = randn(6, 2, 16);
        let d = xy.to_dense();
        let truth = d.column(0).dot(&d.column(1)).powi(3);
        let draws: Vec<f64> = (0..400)
            .map(|s| {
                let e = tensorsketch_apply(3, 64, s, &xy).unwrap().to_dense();
                e.column(0).dot(&e.column(1))
            })
            .collect();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!((mean - truth).abs() <= 3.0 * se, "{mean} vs {truth} (se {se})");
    }

    #[test]
    fn rff_feature_norm_is_bounded() {
        let x = randn(5, 30, 8);
        let r = rff_apply(64, 1.0, 3, &x).unwrap().to_dense();
        for j in 0..30 {
            assert!(r.column(j).norm_squared() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn rff_diagonal_close_to_one() {
        let x = randn(5, 1, 9);
        let mut within = 0;
        for s in 0..100 {
            let r = rff_apply(2000, 1.5, s, &x).unwrap().to_dense();
            if (r.column(0).norm_squared() - 1.0).abs() < 0.05 {
                within += 1;
            }
        }
        assert!(within >= 99, "{within}/100");
    }

    #[test]
    fn rff_uniform_error_on_random_pairs() {
        let sigma = 2.0;
        let x = randn(4, 100, 10);
        let y = randn(4, 100, 11);
        let both = ColumnMatrix::hconcat(&[&x, &y]).unwrap();
        let r = rff_apply(4000, sigma, 12, &both).unwrap().to_dense();
        let spec = KernelSpec::Gaussian { bandwidth: sigma };
        let xd = x.to_dense();
        let yd = y.to_dense();
        let mut worst = 0.0f64;
        for j in 0..100 {
            let exact = kernel_eval(&spec, xd.column(j).as_slice(), yd.column(j).as_slice()).unwrap();
            let approx = r.column(j).dot(&r.column(100 + j));
            worst = worst.max((approx - exact).abs());
        }
        assert!(worst < 0.08, "{worst}");
    }

    #[test]
    fn embedding_dimensions() {
        let spec = KernelSpec::Gaussian { bandwidth: 1.0 };
        let x = randn(3, 10, 13);
        let cfg = EmbeddingConfig { m: 200, ..Default::default() };
        let emb = good_embedding(&spec, 10, 0.5, &cfg, 1, &x).unwrap();
        assert_eq!(emb.e.n_rows(), 40);
        assert_eq!(emb.op.output_dim(), 40);
        assert_eq!(emb.source_count, 10);

        let cfg50 = EmbeddingConfig { t: Some(50), ..Default::default() };
        let poly = KernelSpec::Polynomial { degree: 2 };
        let emb = good_embedding(&poly, 10, 0.5, &cfg50, 1, &x).unwrap();
        assert_eq!(emb.e.n_rows(), 50);
        match &emb.op {
            SketchOp::Composed { stages } => {
                assert_eq!(stages[0], SketchOp::TensorSketch { degree: 2, t: 9 * 100 + 20, seed: mix(1, 0) });
            }
            other => panic!("unexpected op {other:?}"),
        }
        assert!(good_embedding(&spec, 0, 0.5, &cfg, 1, &x).is_err());
        assert!(good_embedding(&spec, 3, 1.5, &cfg, 1, &x).is_err());
    }

    #[test]
    fn sparse_input_matches_dense() {
        let dense = randn(12, 4, 14);
        let d = dense.to_dense();
        let cols = (0..4)
            .map(|j| {
                let mut c = crate::matrix::SparseColumn::default();
                for i in (j % 3..12).step_by(3) {
                    c.indices.push(i);
                    c.values.push(d[(i, j)]);
                }
                c
            })
            .collect();
        let sparse = ColumnMatrix::from_sparse(12, cols).unwrap();
        let densified = ColumnMatrix::from_dense(sparse.to_dense());
        for op in [
            SketchOp::CountSketch { t: 5, seed: 2 },
            SketchOp::Gaussian { t: 5, seed: 2 },
            SketchOp::Rff { m: 16, bandwidth: 1.0, seed: 2 },
            SketchOp::ArcCosRf { m: 16, degree: 1, seed: 2 },
            SketchOp::TensorSketch { degree: 3, t: 16, seed: 2 },
        ] {
            assert_eq!(op.apply(&sparse).unwrap(), op.apply(&densified).unwrap(), "{op:?}");
        }
    }
}
