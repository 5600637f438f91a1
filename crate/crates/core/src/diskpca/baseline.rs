use super::batch::batch_kpca;
use super::lowrank::{check_k, dis_low_rank};
use super::sampling::{concat_batches, local_batch, sample_without_replacement};
use super::solution::KpcaSolution;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::rng::{lane_rng, MASTER};
use crate::simnet::{Cluster, CommLedger, PointBatch};
use super::with_ledger;
use crate::sketch::RightSketch;

/// Per-worker counts of a uniform sample without replacement over all `n` columns.
pub(crate) fn uniform_counts(sizes: &[usize], n_samples: usize, seed: u64) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let positions = sample_without_replacement(n, n_samples, &mut lane_rng(seed, "uniform-alloc", MASTER));
    let mut counts = vec![0; sizes.len()];
    let mut bounds = sizes.iter().scan(0, |acc, &c| {
        *acc += c;
        Some(*acc)
    });
    let mut worker = 0;
    let mut end = bounds.next().unwrap_or(0);
    for pos in positions {
        while pos >= end {
            worker += 1;
            end = bounds.next().unwrap_or(usize::MAX);
        }
        counts[worker] += 1;
    }
    counts
}

/// Pulls a uniform sample of `n_samples` columns to the master and
/// broadcasts it (label `uniform-Y`).
pub fn uniform_sample(cluster: &mut Cluster, n_samples: usize, seed: u64) -> Result<PointBatch> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("uniform sample size must be >= 1".into()));
    }
    let n = cluster.n();
    if n_samples > n {
        log::warn!("requested {n_samples} samples from {n} columns; taking all");
    }
    let dim = cluster.dim();
    cluster.run_round_stateless(
        "uniform-alloc",
        |v| Ok(v.data().n_cols()),
        |m, sizes| {
            for (w, c) in uniform_counts(&sizes, n_samples, seed).into_iter().enumerate() {
                m.send_to(w, "uniform-count", c)?;
            }
            Ok(())
        },
    )?;
    cluster.run_round_stateless(
        "uniform-points",
        |v| {
            let count: usize = *v.recv("uniform-count")?;
            let mut rng = lane_rng(seed, "uniform-draw", v.id() as u64);
            let picked = sample_without_replacement(v.data().n_cols(), count, &mut rng);
            Ok(local_batch(v.data(), v.indices(), &picked))
        },
        |m, parts| {
            let y = concat_batches(dim, &parts)?;
            m.broadcast("uniform-Y", y.clone())?;
            Ok(y)
        },
    )
}

/// Uniformly sampled representatives followed by the distributed low-rank step.
pub fn baseline_uniform_dislr(
    cluster: &mut Cluster,
    spec: &KernelSpec,
    k: usize,
    n_samples: usize,
    w: Option<usize>,
    kind: RightSketch,
    seed: u64,
    tol: f64,
) -> Result<(KpcaSolution, CommLedger)> {
    check_k(k)?;
    with_ledger(cluster, |c| {
        let y = uniform_sample(c, n_samples, seed)?;
        let w = w.unwrap_or(y.len());
        dis_low_rank(c, spec, &y, k, w, kind, seed, tol)
    })
}

/// Uniformly sampled points, exact kernel PCA at the master. The solution
/// coefficients are broadcast so workers can project their data.
pub fn baseline_uniform_batch(
    cluster: &mut Cluster,
    spec: &KernelSpec,
    k: usize,
    n_samples: usize,
    seed: u64,
) -> Result<(KpcaSolution, CommLedger)> {
    check_k(k)?;
    with_ledger(cluster, |c| {
        let y = uniform_sample(c, n_samples, seed)?;
        c.run_round_stateless(
            "batch-solve",
            |_| Ok(()),
            |m, _| {
                let (mut sol, _) = batch_kpca(spec, &y.points, k)?;
                sol.indices = y.indices.clone();
                m.broadcast("batch-C", sol.coeffs.clone())?;
                Ok(sol)
            },
        )
    })
}
