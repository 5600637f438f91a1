//! Distributed kernel PCA: leverage scores, representative sampling, the
//! projected low-rank fit, the end-to-end driver, uniform baselines and the
//! exact batch solution.

mod baseline;
mod batch;
mod leverage;
mod lowrank;
mod representatives;
pub mod sampling;
mod solution;

pub use baseline::{baseline_uniform_batch, baseline_uniform_dislr, uniform_sample};
pub use batch::{batch_kpca, kernel_spectrum};
pub use leverage::{dis_leverage_scores, LeverageScores};
pub use lowrank::dis_low_rank;
pub use representatives::{rep_sample, RepresentativeSet};
pub use solution::KpcaSolution;

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::kernels::{build_span_basis, KernelSpec};
use crate::matrix::{ColumnMatrix, DEFAULT_RANK_TOL};
use crate::rng::{lane, SHARED};
use crate::simnet::{Cluster, CommLedger};
use crate::sketch::{embedding_op, EmbeddedData, EmbeddingConfig, RightSketch, SketchOp};

/// Width of the right sketch in the low-rank step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WRule {
    /// `w = |Y|`.
    EqualY,
    Absolute(usize),
    /// `w = ceil(k / eps^2)`.
    InverseEpsSquared,
}

impl WRule {
    pub fn resolve(&self, y_len: usize, k: usize, eps: f64) -> usize {
        match *self {
            WRule::EqualY => y_len.max(1),
            WRule::Absolute(w) => w,
            WRule::InverseEpsSquared => (k as f64 / (eps * eps)).ceil() as usize,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DisKpcaParams {
    /// Embedding dimension; default `max(4k, 50)`.
    pub t: Option<usize>,
    /// TensorSketch dimension for polynomial kernels; default `3^q k^2 + 4k`.
    pub t1: Option<usize>,
    /// Right-sketch width for leverage scores.
    pub p: usize,
    /// Random features for non-polynomial kernels.
    pub m: usize,
    pub countsketch: Option<usize>,
    /// Leverage sample size; default `ceil(c_lev k ln(k + 1))`.
    pub n_lev: Option<usize>,
    pub c_lev: f64,
    /// Adaptive sample size; default `ceil(k / eps)`.
    pub n_adapt: Option<usize>,
    pub w: WRule,
    pub right_sketch: RightSketch,
    pub rank_tol: f64,
}

impl Default for DisKpcaParams {
    fn default() -> Self {
        DisKpcaParams {
            t: None,
            t1: None,
            p: 250,
            m: 2000,
            countsketch: None,
            n_lev: None,
            c_lev: 5.0,
            n_adapt: None,
            w: WRule::EqualY,
            right_sketch: RightSketch::default(),
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

/// Parameters with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub k: usize,
    pub eps: f64,
    pub t: usize,
    pub p: usize,
    pub n_lev: usize,
    pub n_adapt: usize,
    pub embedding: EmbeddingConfig,
}

impl DisKpcaParams {
    pub fn resolve(&self, k: usize, eps: f64) -> Result<Resolved> {
        lowrank::check_k(k)?;
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidArgument(format!("eps must lie in (0, 1], got {eps}")));
        }
        let t = self.t.unwrap_or((4 * k).max(50));
        let n_lev = self.n_lev.unwrap_or_else(|| (self.c_lev * k as f64 * (k as f64 + 1.0).ln()).ceil() as usize);
        let n_adapt = self.n_adapt.unwrap_or_else(|| (k as f64 / eps).ceil() as usize);
        if t == 0 || self.p == 0 || self.m == 0 {
            return Err(Error::InvalidArgument("t, p and m must be >= 1".into()));
        }
        if self.p < t {
            return Err(Error::InvalidArgument(format!("p = {} must be at least t = {t}", self.p)));
        }
        if let WRule::Absolute(0) = self.w {
            return Err(Error::InvalidArgument("w must be >= 1".into()));
        }
        representatives::check_counts(n_lev)?;
        let embedding = EmbeddingConfig { t: Some(t), t1: self.t1, m: self.m, countsketch: self.countsketch };
        Ok(Resolved { k, eps, t, p: self.p, n_lev, n_adapt, embedding })
    }
}

/// Everything a disKPCA run produced.
#[derive(Clone, Debug)]
pub struct DisKpcaRun {
    pub solution: KpcaSolution,
    pub ledger: CommLedger,
    pub scores: LeverageScores,
    pub representatives: RepresentativeSet,
    pub resolved: Resolved,
}

/// Runs `f` and returns the ledger rounds it added.
pub(crate) fn with_ledger<T>(
    cluster: &mut Cluster,
    f: impl FnOnce(&mut Cluster) -> Result<T>,
) -> Result<(T, CommLedger)> {
    let mark = cluster.ledger().rounds.len();
    let out = f(cluster)?;
    let rounds = cluster.ledger().rounds[mark..].to_vec();
    Ok((out, CommLedger { rounds }))
}

/// The shared embedding operator; one operator for all workers.
pub(crate) fn shared_embedding(spec: &KernelSpec, r: &Resolved, seed: u64) -> Result<SketchOp> {
    // The embedding only has to be (1/4)-good; eps enters through n_adapt.
    embedding_op(spec, r.k, 0.25, &r.embedding, lane(seed, "embed", SHARED))
}

pub fn dis_kpca(
    cluster: &mut Cluster,
    spec: &KernelSpec,
    k: usize,
    eps: f64,
    params: &DisKpcaParams,
    seed: u64,
) -> Result<(KpcaSolution, CommLedger)> {
    let run = dis_kpca_run(cluster, spec, k, eps, params, seed)?;
    Ok((run.solution, run.ledger))
}

/// Embedding, distributed leverage scores, representative sampling and the
/// low-rank fit, with all randomness drawn from labeled lanes of `seed`.
pub fn dis_kpca_run(
    cluster: &mut Cluster,
    spec: &KernelSpec,
    k: usize,
    eps: f64,
    params: &DisKpcaParams,
    seed: u64,
) -> Result<DisKpcaRun> {
    spec.validate()?;
    let r = params.resolve(k, eps)?;
    let op = shared_embedding(spec, &r, seed)?;
    let tol = params.rank_tol;
    let kind = params.right_sketch;
    let ((scores, representatives, solution), ledger) = with_ledger(cluster, |c| {
        let mut embedded: Vec<Option<EmbeddedData>> = vec![None; c.s()];
        c.run_round(
            "embed",
            &mut embedded,
            |v, st| {
                let e = op.apply(v.data())?;
                *st = Some(EmbeddedData { e, op: op.clone(), source_count: v.data().n_cols() });
                Ok(())
            },
            |_, _| Ok(()),
        )?;
        let embedded: Vec<EmbeddedData> = embedded.into_iter().map(|e| e.expect("set by every worker")).collect();
        let scores = dis_leverage_scores(c, &embedded, r.p, kind, seed, tol)?;
        drop(embedded);
        let reps = rep_sample(c, spec, &scores, r.n_lev, r.n_adapt, seed, tol)?;
        let y = reps.y();
        let w = params.w.resolve(y.len(), k, eps);
        let sol = dis_low_rank(c, spec, &y, k, w, kind, seed, tol)?;
        Ok((scores, reps, sol))
    })?;
    Ok(DisKpcaRun { solution, ledger, scores, representatives, resolved: r })
}

/// The same stages as [`dis_kpca_run`] executed in one process without a
/// network, using worker 0's random lanes. With one worker the two agree bit for bit.
pub fn centralized_kpca(
    spec: &KernelSpec,
    a: &ColumnMatrix,
    k: usize,
    eps: f64,
    params: &DisKpcaParams,
    seed: u64,
) -> Result<(KpcaSolution, RepresentativeSet)> {
    spec.validate()?;
    let r = params.resolve(k, eps)?;
    let tol = params.rank_tol;
    let kind = params.right_sketch;
    let indices: Vec<usize> = (0..a.n_cols()).collect();
    let dim = a.n_rows();

    let e = shared_embedding(spec, &r, seed)?.apply(a)?.to_dense();
    let z = leverage::stacked_factor(&[leverage::sketch_block(&e, r.p, kind, seed, 0)], tol)?;
    let scores = leverage::local_scores(&z, &e)?;

    let counts = representatives::lev_counts(&[scores.iter().sum()], r.n_lev, seed)?;
    let picked = representatives::lev_draw(&scores, counts[0], seed, 0)?;
    let p = sampling::concat_batches(dim, &[sampling::local_batch(a, &indices, &picked)])?;

    let basis_p = build_span_basis(spec, &p.points, tol)?;
    let in_p: HashSet<usize> = p.indices.iter().copied().collect();
    let residuals = representatives::local_residuals(spec, &basis_p, a, &indices, &in_p)?;
    let residual_total: f64 = residuals.iter().sum();
    let counts = representatives::adapt_counts(&[residual_total], r.n_adapt, seed)?;
    let picked = representatives::adapt_draw(&residuals, counts[0], seed, 0)?;
    let y_tilde = sampling::concat_batches(dim, &[sampling::local_batch(a, &indices, &picked)])?;
    let adapt_draws = if residual_total > 0.0 { r.n_adapt } else { 0 };
    let reps = RepresentativeSet { p, y_tilde, lev_draws: r.n_lev, adapt_draws, residual_total };

    let y = reps.y();
    let basis = build_span_basis(spec, &y.points, tol)?;
    let block = lowrank::project_block(spec, &basis, a, params.w.resolve(y.len(), k, eps), kind, seed, 0)?;
    let w = lowrank::top_directions(&[block], k)?;
    Ok((lowrank::solution_from(&basis, &y, &w)?, reps))
}
