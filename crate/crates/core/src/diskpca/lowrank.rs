use super::sampling::hstack;
use super::solution::KpcaSolution;
use crate::error::{Error, Result};
use crate::kernels::{build_span_basis, project_coeffs, KernelSpec, SpanBasis};
use crate::matrix::{tri_solve, truncated_svd, ColumnMatrix, Mat};
use crate::rng::lane;
use crate::simnet::{Cluster, PointBatch};
use crate::sketch::{right_sketch, RightSketch};

/// `Π^i T^i`: coordinates of the local block in the span basis, right-sketched to width `w`.
pub(crate) fn project_block(
    spec: &KernelSpec,
    basis: &SpanBasis,
    data: &ColumnMatrix,
    w: usize,
    kind: RightSketch,
    seed: u64,
    worker: usize,
) -> Result<Mat> {
    let pi = project_coeffs(basis, spec, data)?;
    Ok(right_sketch(&pi, w, kind, lane(seed, "lr-sketch", worker as u64)))
}

/// Top left singular vectors of the stacked blocks, at most `k` of them.
pub(crate) fn top_directions(blocks: &[Mat], k: usize) -> Result<Mat> {
    let stacked = hstack(blocks)?;
    let rank = stacked.nrows();
    if rank < k {
        log::warn!("span of the representatives has rank {rank} < k = {k}; reducing k");
    }
    let svd = truncated_svd(&stacked, k.min(rank))?;
    if svd.rank() < k.min(rank) {
        log::warn!("projected data has rank {} < {}; reducing k", svd.rank(), k.min(rank));
    }
    Ok(svd.u)
}

/// `L = phi(Y_retained) R^{-1} W`.
pub(crate) fn solution_from(basis: &SpanBasis, y: &PointBatch, w: &Mat) -> Result<KpcaSolution> {
    let c = tri_solve(&basis.factor, w, false)?;
    let indices = if y.indices.is_empty() {
        Vec::new()
    } else {
        basis.retained().iter().map(|&r| y.indices[r]).collect()
    };
    KpcaSolution::new(basis.retained_points.clone(), indices, c)
}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    Ok(())
}

/// Best rank-`k` subspace of `phi(A)` inside `span phi(Y)`.
///
/// Workers must already hold `Y`; its delivery is charged by the caller.
/// Each worker sends `Π^i T^i` (`|retained| x min(n_i, w)`), the master
/// broadcasts the top-`k` left singular vectors `W`.
pub fn dis_low_rank(
    cluster: &mut Cluster,
    spec: &KernelSpec,
    y: &PointBatch,
    k: usize,
    w: usize,
    kind: RightSketch,
    seed: u64,
    tol: f64,
) -> Result<KpcaSolution> {
    check_k(k)?;
    if w == 0 {
        return Err(Error::InvalidArgument("sketch width w must be >= 1".into()));
    }
    if y.is_empty() {
        return Err(Error::Empty("representative set is empty"));
    }
    let basis = build_span_basis(spec, &y.points, tol)?;
    let basis = &basis;
    cluster.run_round_stateless(
        "lr-project",
        |v| project_block(spec, basis, v.data(), w, kind, seed, v.id()),
        |m, blocks| {
            let wm = top_directions(&blocks, k)?;
            m.broadcast("lr-W", wm.clone())?;
            solution_from(basis, y, &wm)
        },
    )
}
