use serde::{Deserialize, Serialize};

use super::sampling::hstack;
use crate::error::{Error, Result};
use crate::matrix::{qr_thin, tri_solve, Mat, TriangularFactor};
use crate::rng::lane;
use crate::simnet::Cluster;
use crate::sketch::{right_sketch, EmbeddedData, RightSketch};

/// Approximate leverage scores of every column, held by the owning worker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeverageScores {
    pub per_worker: Vec<Vec<f64>>,
    /// Per-worker totals, as received by the master.
    pub worker_sums: Vec<f64>,
    pub global_sum: f64,
    /// Numerical rank of the stacked sketch.
    pub rank: usize,
}

pub(crate) fn sketch_block(e: &Mat, p: usize, kind: RightSketch, seed: u64, worker: usize) -> Mat {
    right_sketch(e, p, kind, lane(seed, "lev-sketch", worker as u64))
}

/// `Z` from `[E^1 T^1, ..., E^s T^s]^T P = U Z`.
pub(crate) fn stacked_factor(blocks: &[Mat], tol: f64) -> Result<TriangularFactor> {
    let m = hstack(blocks)?;
    let z = qr_thin(&m.transpose(), tol)?.r;
    if z.rank == 0 {
        return Err(Error::Invariant("embedded data is identically zero".into()));
    }
    if !z.is_full_rank() {
        log::warn!("stacked sketch has rank {} < {}; scores use the retained pivots", z.rank, z.pivots.len());
    }
    Ok(z)
}

/// `|Z^{-T} E[pivots, j]|^2` for every column `j` of `E`.
pub(crate) fn local_scores(z: &TriangularFactor, e: &Mat) -> Result<Vec<f64>> {
    let rows = e.select_rows(z.retained());
    let x = tri_solve(z, &rows, true)?;
    Ok(x.column_iter().map(|c| c.norm_squared()).collect())
}

fn check_p(t: usize, p: usize) -> Result<()> {
    if p < t {
        return Err(Error::InvalidArgument(format!("sketch width p = {p} must be at least t = {t}")));
    }
    Ok(())
}

/// Distributed generalized leverage scores of the columns of `[E^1, ..., E^s]`.
///
/// Workers send `E^i T^i` (`t x min(n_i, p)`), the master factors the stack
/// and broadcasts `Z`, workers score their columns locally and report the sum.
pub fn dis_leverage_scores(
    cluster: &mut Cluster,
    embedded: &[EmbeddedData],
    p: usize,
    kind: RightSketch,
    seed: u64,
    tol: f64,
) -> Result<LeverageScores> {
    if embedded.len() != cluster.s() {
        return Err(Error::InvalidArgument(format!("{} embeddings for {} workers", embedded.len(), cluster.s())));
    }
    let t = embedded[0].e.n_rows();
    if embedded.iter().any(|e| e.e.n_rows() != t) {
        return Err(Error::InvalidArgument("embeddings differ in dimension".into()));
    }
    check_p(t, p)?;
    let dense: Vec<Mat> = embedded.iter().map(|e| e.e.to_dense()).collect();
    let mut states: Vec<Vec<f64>> = vec![Vec::new(); cluster.s()];
    let rank = cluster.run_round_stateless(
        "lev-sketch",
        |v| Ok(sketch_block(&dense[v.id()], p, kind, seed, v.id())),
        |m, blocks| {
            let z = stacked_factor(&blocks, tol)?;
            let rank = z.rank;
            m.broadcast("lev-Z", z)?;
            Ok(rank)
        },
    )?;
    let worker_sums = cluster.run_round(
        "lev-scores",
        &mut states,
        |v, st| {
            let z: &TriangularFactor = v.recv("lev-Z")?;
            *st = local_scores(z, &dense[v.id()])?;
            Ok(st.iter().sum::<f64>())
        },
        |_, sums| Ok(sums),
    )?;
    let global_sum = worker_sums.iter().sum();
    Ok(LeverageScores { per_worker: states, worker_sums, global_sum, rank })
}
