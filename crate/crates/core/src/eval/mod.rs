//! Error curves over sample sizes and spectral clustering on top of the
//! distributed solution.

mod kmeans;

pub use kmeans::{lloyd, KMeansResult};

use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::diskpca::{
    baseline_uniform_batch, baseline_uniform_dislr, dis_kpca_run, DisKpcaParams, KpcaSolution, WRule,
};
use crate::error::{Error, Result};
use crate::kernels::{gram_diag, subspace_error, KernelSpec};
use crate::matrix::Mat;
use crate::rng::{lane, SHARED};
use crate::simnet::{Cluster, CommLedger, Payload};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DisKpca,
    UniformDisLr,
    UniformBatch,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::DisKpca, Method::UniformDisLr, Method::UniformBatch];

    pub fn name(&self) -> &'static str {
        match self {
            Method::DisKpca => "disKPCA",
            Method::UniformDisLr => "uniform+disLR",
            Method::UniformBatch => "uniform+batch",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub k: usize,
    pub eps: f64,
    pub n_lev: usize,
    pub n_adapt: usize,
    pub t: usize,
    pub p: usize,
    /// Right-sketch width; `None` means `|Y|`.
    pub w: Option<usize>,
    pub m: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub method: String,
    pub params: RunParams,
    pub subspace_error: f64,
    pub opt_error: Option<f64>,
    pub total_words: usize,
    /// Points in the representative set (after deduplication).
    pub n_points: usize,
    pub wall_time_ms: f64,
}

/// Mean and spread of one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub method: String,
    pub n_adapt: usize,
    pub words: f64,
    pub err_mean: f64,
    pub err_std: f64,
    pub repeats: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
    pub records: Vec<ExperimentRecord>,
}

/// Seed of repeat `r` under a sweep seed; shared by all methods so runs pair up.
/// Default `n_adapt` sweep for error curves.
pub const DEFAULT_SWEEP: [usize; 4] = [50, 100, 200, 400];

pub fn repeat_seed(seed: u64, r: usize) -> u64 {
    lane(seed, "repeat", r as u64)
}

/// One run of `method` with `n_adapt` adaptive (or uniform) samples.
#[allow(clippy::too_many_arguments)]
pub fn run_method(
    cluster: &mut Cluster,
    spec: &KernelSpec,
    method: Method,
    k: usize,
    eps: f64,
    params: &DisKpcaParams,
    n_adapt: usize,
    seed: u64,
) -> Result<(KpcaSolution, CommLedger, RunParams)> {
    cluster.clear_inboxes();
    let resolved = params.resolve(k, eps)?;
    let w = match params.w {
        WRule::EqualY => None,
        rule => Some(rule.resolve(0, k, eps)),
    };
    let mut rp = RunParams {
        k,
        eps,
        n_lev: resolved.n_lev,
        n_adapt,
        t: resolved.t,
        p: resolved.p,
        w,
        m: params.m,
        seed,
    };
    let (sol, ledger) = match method {
        Method::DisKpca => {
            let p = DisKpcaParams { n_adapt: Some(n_adapt), ..params.clone() };
            let run = dis_kpca_run(cluster, spec, k, eps, &p, seed)?;
            (run.solution, run.ledger)
        }
        Method::UniformDisLr => {
            rp.n_lev = 0;
            baseline_uniform_dislr(cluster, spec, k, n_adapt, w, params.right_sketch, seed, params.rank_tol)?
        }
        Method::UniformBatch => {
            rp.n_lev = 0;
            baseline_uniform_batch(cluster, spec, k, n_adapt, seed)?
        }
    };
    Ok((sol, ledger, rp))
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Runs `method` `repeats` times at every sweep point.
#[allow(clippy::too_many_arguments)]
pub fn error_curve(
    cluster: &mut Cluster,
    spec: &KernelSpec,
    method: Method,
    k: usize,
    eps: f64,
    params: &DisKpcaParams,
    sweep: &[usize],
    repeats: usize,
    opt_error: Option<f64>,
    seed: u64,
) -> Result<Curve> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be >= 1".into()));
    }
    let a = cluster.gather_global()?;
    let mut points = Vec::with_capacity(sweep.len());
    let mut records = Vec::with_capacity(sweep.len() * repeats);
    for &n_adapt in sweep {
        let mut errs = Vec::with_capacity(repeats);
        let mut words = Vec::with_capacity(repeats);
        for r in 0..repeats {
            let start = Instant::now();
            let (sol, ledger, rp) = run_method(cluster, spec, method, k, eps, params, n_adapt, repeat_seed(seed, r))?;
            let err = subspace_error(spec, &a, &sol)?;
            errs.push(err);
            words.push(ledger.total_words() as f64);
            records.push(ExperimentRecord {
                method: method.name().to_string(),
                params: rp,
                subspace_error: err,
                opt_error,
                total_words: ledger.total_words(),
                n_points: sol.points.n_cols(),
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
        let (err_mean, err_std) = mean_std(&errs);
        points.push(CurvePoint {
            method: method.name().to_string(),
            n_adapt,
            words: mean_std(&words).0,
            err_mean,
            err_std,
            repeats,
        });
    }
    Ok(Curve { points, records })
}

/// `method,words,err_mean,err_std` rows.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("method,words,err_mean,err_std\n");
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", p.method, p.words, p.err_mean, p.err_std));
    }
    out
}

/// Local projections sent for clustering: global indices, `k x n_i` coordinates, residual total.
struct Projections {
    indices: Vec<usize>,
    coords: Mat,
    residual: f64,
}

impl Payload for Projections {
    fn word_count(&self) -> usize {
        self.indices.len() + self.coords.len() + 1
    }
    fn all_finite(&self) -> bool {
        self.residual.is_finite() && self.coords.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    /// Cluster of every point, in global index order.
    pub assignments: Vec<usize>,
    /// Mean squared feature-space distance to the assigned center.
    pub objective: f64,
    /// The same, ignoring the part of each point outside the subspace.
    pub projected_objective: f64,
    /// Projected objective after each assignment step.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub ledger: CommLedger,
}

/// k-means on the coordinates of the data in the subspace of `sol`.
///
/// Workers project locally and send coordinates plus their residual total;
/// Lloyd's algorithm runs at the master.
pub fn cluster_with_solution(
    cluster: &mut Cluster,
    spec: &KernelSpec,
    sol: &KpcaSolution,
    n_clusters: usize,
    iters: usize,
    seed: u64,
) -> Result<Clustering> {
    if n_clusters < 1 {
        return Err(Error::InvalidArgument("need at least one cluster".into()));
    }
    let n = cluster.n();
    let mark = cluster.ledger().rounds.len();
    let (coords, order, residual) = cluster.run_round_stateless(
        "cluster-project",
        |v| {
            let coords = sol.project(spec, v.data())?;
            let diag = gram_diag(spec, v.data());
            let residual = diag
                .iter()
                .zip(coords.column_iter())
                .map(|(d, c)| (d - c.norm_squared()).max(0.0))
                .sum();
            Ok(Projections { indices: v.indices().to_vec(), coords, residual })
        },
        |_, parts| {
            let blocks: Vec<Mat> = parts.iter().map(|p| p.coords.clone()).collect();
            let coords = crate::diskpca::sampling::hstack(&blocks)?;
            let order: Vec<usize> = parts.iter().flat_map(|p| p.indices.iter().copied()).collect();
            let residual: f64 = parts.iter().map(|p| p.residual).sum();
            Ok((coords, order, residual))
        },
    )?;
    let km = lloyd(&coords, n_clusters, iters, seed)?;
    let mut assignments = vec![0; n];
    for (pos, &g) in order.iter().enumerate() {
        assignments[g] = km.assignments[pos];
    }
    let projected_objective = km.objective;
    let ledger = CommLedger { rounds: cluster.ledger().rounds[mark..].to_vec() };
    Ok(Clustering {
        assignments,
        objective: projected_objective + residual / n as f64,
        projected_objective,
        history: km.history,
        iterations: km.iterations,
        ledger,
    })
}

/// disKPCA with `k` components, then k-means with `k` clusters on the projections.
#[allow(clippy::too_many_arguments)]
pub fn spectral_cluster(
    cluster: &mut Cluster,
    spec: &KernelSpec,
    k: usize,
    eps: f64,
    params: &DisKpcaParams,
    kmeans_iters: usize,
    seed: u64,
) -> Result<(Clustering, KpcaSolution)> {
    if k < 2 {
        return Err(Error::InvalidArgument("spectral clustering needs k >= 2".into()));
    }
    let run = dis_kpca_run(cluster, spec, k, eps, params, seed)?;
    let mut out = cluster_with_solution(cluster, spec, &run.solution, k, kmeans_iters, lane(seed, "kmeans", SHARED))?;
    let mut ledger = run.ledger;
    ledger.extend(out.ledger);
    out.ledger = ledger;
    Ok((out, run.solution))
}
