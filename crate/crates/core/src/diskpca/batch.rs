use super::solution::KpcaSolution;
use crate::error::Result;
use crate::kernels::{gram, KernelSpec};
use crate::matrix::{sym_eigen, ColumnMatrix, Mat};

/// Eigenvalues below this fraction of the largest are treated as zero.
const EIGEN_REL_TOL: f64 = 1e-8;

/// Exact kernel PCA from the full Gram matrix, with the optimal error
/// `sum_{i > k} lambda_i`. `k` is clamped to the numerical rank.
pub fn batch_kpca(spec: &KernelSpec, a: &ColumnMatrix, k: usize) -> Result<(KpcaSolution, f64)> {
    super::lowrank::check_k(k)?;
    let kaa = gram(spec, a, a)?;
    let (vals, vecs) = sym_eigen(&kaa)?;
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let rank = vals.iter().take_while(|&&l| l > EIGEN_REL_TOL * top && top > 0.0).count();
    let kk = k.min(rank);
    if kk < k {
        log::warn!("kernel matrix has numerical rank {rank} < k = {k}; reducing k");
    }
    let opt_error = vals[kk..].iter().map(|l| l.max(0.0)).sum();
    let mut c = Mat::zeros(a.n_cols(), kk);
    for j in 0..kk {
        c.set_column(j, &(vecs.column(j) / vals[j].sqrt()));
    }
    let sol = KpcaSolution::new(a.clone(), (0..a.n_cols()).collect(), c)?;
    Ok((sol, opt_error))
}

/// All eigenvalues of the Gram matrix, descending.
pub fn kernel_spectrum(spec: &KernelSpec, a: &ColumnMatrix) -> Result<Vec<f64>> {
    Ok(sym_eigen(&gram(spec, a, a)?)?.0)
}
