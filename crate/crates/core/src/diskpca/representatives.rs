use std::collections::HashSet;

use super::leverage::LeverageScores;
use super::sampling::{concat_batches, local_batch, multinomial_counts, sample_with_replacement};
use crate::error::{Error, Result};
use crate::kernels::{build_span_basis, residual_sq_distances, KernelSpec, SpanBasis};
use crate::matrix::ColumnMatrix;
use crate::rng::{lane_rng, MASTER};
use crate::simnet::{Cluster, PointBatch};

/// `Y = P ∪ Ỹ`: leverage-sampled points followed by adaptively sampled ones.
#[derive(Clone, Debug, PartialEq)]
pub struct RepresentativeSet {
    pub p: PointBatch,
    pub y_tilde: PointBatch,
    /// Draws made in each stage, before deduplication.
    pub lev_draws: usize,
    pub adapt_draws: usize,
    /// Total squared residual of the data to `span phi(P)`.
    pub residual_total: f64,
}

impl RepresentativeSet {
    pub fn y(&self) -> PointBatch {
        let points = ColumnMatrix::hconcat(&[&self.p.points, &self.y_tilde.points]).expect("same dimension");
        let indices = self.p.indices.iter().chain(&self.y_tilde.indices).copied().collect();
        PointBatch { indices, points }
    }

    pub fn len(&self) -> usize {
        self.p.len() + self.y_tilde.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub(crate) fn lev_counts(worker_sums: &[f64], n_lev: usize, seed: u64) -> Result<Vec<usize>> {
    multinomial_counts(worker_sums, n_lev, &mut lane_rng(seed, "rep-lev-alloc", MASTER))
}

pub(crate) fn lev_draw(scores: &[f64], count: usize, seed: u64, worker: usize) -> Result<Vec<usize>> {
    sample_with_replacement(scores, count, &mut lane_rng(seed, "rep-lev-draw", worker as u64))
}

/// Squared residuals of local points to `span phi(P)`; points of `P` get exactly zero.
pub(crate) fn local_residuals(
    spec: &KernelSpec,
    basis: &SpanBasis,
    data: &ColumnMatrix,
    indices: &[usize],
    in_p: &HashSet<usize>,
) -> Result<Vec<f64>> {
    let mut r = residual_sq_distances(basis, spec, data)?;
    for (v, g) in r.iter_mut().zip(indices) {
        if in_p.contains(g) {
            *v = 0.0;
        }
    }
    Ok(r)
}

/// Draw counts per worker for the adaptive stage; all zero when every residual vanishes.
pub(crate) fn adapt_counts(residual_sums: &[f64], n_adapt: usize, seed: u64) -> Result<Vec<usize>> {
    if residual_sums.iter().sum::<f64>() <= 0.0 {
        if n_adapt > 0 {
            log::info!("data lies in span of the leverage sample; adaptive stage is empty");
        }
        return Ok(vec![0; residual_sums.len()]);
    }
    multinomial_counts(residual_sums, n_adapt, &mut lane_rng(seed, "rep-adapt-alloc", MASTER))
}

pub(crate) fn adapt_draw(residuals: &[f64], count: usize, seed: u64, worker: usize) -> Result<Vec<usize>> {
    sample_with_replacement(residuals, count, &mut lane_rng(seed, "rep-adapt-draw", worker as u64))
}

pub(crate) fn check_counts(n_lev: usize) -> Result<()> {
    if n_lev == 0 {
        return Err(Error::InvalidArgument("leverage sample size must be >= 1".into()));
    }
    Ok(())
}

/// Two-stage representative sampling: leverage sampling of `P`, then
/// adaptive sampling proportional to squared distance to `span phi(P)`.
///
/// Afterwards every worker holds `P` (label `rep-P`) and `Ỹ` (label `rep-Ytilde`).
pub fn rep_sample(
    cluster: &mut Cluster,
    spec: &KernelSpec,
    scores: &LeverageScores,
    n_lev: usize,
    n_adapt: usize,
    seed: u64,
    tol: f64,
) -> Result<RepresentativeSet> {
    check_counts(n_lev)?;
    if scores.per_worker.len() != cluster.s() {
        return Err(Error::InvalidArgument("scores do not match the cluster".into()));
    }
    let dim = cluster.dim();
    cluster.run_round_stateless(
        "rep-lev-alloc",
        |_| Ok(()),
        |m, _| {
            for (w, c) in lev_counts(&scores.worker_sums, n_lev, seed)?.into_iter().enumerate() {
                m.send_to(w, "rep-lev-count", c)?;
            }
            Ok(())
        },
    )?;
    let p = cluster.run_round_stateless(
        "rep-lev-points",
        |v| {
            let count: usize = *v.recv("rep-lev-count")?;
            let picked = lev_draw(&scores.per_worker[v.id()], count, seed, v.id())?;
            Ok(local_batch(v.data(), v.indices(), &picked))
        },
        |m, parts| {
            let p = concat_batches(dim, &parts)?;
            m.broadcast("rep-P", p.clone())?;
            Ok(p)
        },
    )?;
    let mut residuals: Vec<Vec<f64>> = vec![Vec::new(); cluster.s()];
    let residual_sums = cluster.run_round(
        "rep-adapt-residuals",
        &mut residuals,
        |v, st| {
            let p: &PointBatch = v.recv("rep-P")?;
            let basis = build_span_basis(spec, &p.points, tol)?;
            let in_p: HashSet<usize> = p.indices.iter().copied().collect();
            *st = local_residuals(spec, &basis, v.data(), v.indices(), &in_p)?;
            Ok(st.iter().sum::<f64>())
        },
        |m, sums| {
            for (w, c) in adapt_counts(&sums, n_adapt, seed)?.into_iter().enumerate() {
                m.send_to(w, "rep-adapt-count", c)?;
            }
            Ok(sums)
        },
    )?;
    let y_tilde = cluster.run_round(
        "rep-adapt-points",
        &mut residuals,
        |v, st| {
            let count: usize = *v.recv("rep-adapt-count")?;
            let picked = adapt_draw(st, count, seed, v.id())?;
            Ok(local_batch(v.data(), v.indices(), &picked))
        },
        |m, parts| {
            let y = concat_batches(dim, &parts)?;
            m.broadcast("rep-Ytilde", y.clone())?;
            Ok(y)
        },
    )?;
    let residual_total = residual_sums.iter().sum();
    let adapt_draws = if residual_total > 0.0 { n_adapt } else { 0 };
    Ok(RepresentativeSet { p, y_tilde, lev_draws: n_lev, adapt_draws, residual_total })
}
