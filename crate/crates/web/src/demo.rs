use serde::{Deserialize, Serialize};

use diskpca_core::data::{gen_synthetic, Synthetic, SyntheticKind};
use diskpca_core::diskpca::{baseline_uniform_batch, baseline_uniform_dislr, dis_kpca_run, DisKpcaParams};
use diskpca_core::kernels::{gram, median_bandwidth, subspace_error, KernelSpec};
use diskpca_core::matrix::ColumnMatrix;
use diskpca_core::simnet::{partition_powerlaw, Cluster, Partition};
use diskpca_core::sketch::{RightSketch, SketchOp};

#[derive(Clone, Debug, Deserialize)]
#[serde(default)]
pub struct DemoParams {
    pub n: usize,
    pub d: usize,
    pub clusters: usize,
    pub noise: f64,
    pub separation: f64,
    pub s: usize,
    pub k: usize,
    pub n_adapt: usize,
    pub seed: u64,
}

impl Default for DemoParams {
    fn default() -> Self {
        DemoParams { n: 400, d: 2, clusters: 4, noise: 0.3, separation: 3.0, s: 4, k: 4, n_adapt: 8, seed: 1 }
    }
}

fn parse<T: for<'a> Deserialize<'a> + Default>(params: &str) -> Result<T, String> {
    if params.trim().is_empty() {
        return Ok(T::default());
    }
    serde_json::from_str(params).map_err(|e| format!("bad parameters: {e}"))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

struct Setup {
    syn: Synthetic,
    spec: KernelSpec,
    bandwidth: f64,
    part: Partition,
    params: DisKpcaParams,
}

fn setup(p: &DemoParams) -> Result<Setup, String> {
    if p.n > 2000 || p.d > 50 {
        return Err("demo limits: n <= 2000, d <= 50".into());
    }
    let kind = SyntheticKind::Clustered { separation: p.separation, imbalance: 1.0 };
    let syn = gen_synthetic(kind, p.n, p.d, p.clusters, p.noise, p.seed).map_err(|e| e.to_string())?;
    let bandwidth = median_bandwidth(&syn.data, 0.2, 2000, p.seed).map_err(|e| e.to_string())?;
    let part = partition_powerlaw(p.n, p.s, 2.0, p.seed).map_err(|e| e.to_string())?;
    let params = DisKpcaParams { p: 60, m: 300, n_adapt: Some(p.n_adapt), ..Default::default() };
    Ok(Setup { syn, spec: KernelSpec::Gaussian { bandwidth }, bandwidth, part, params })
}

#[derive(Serialize)]
pub struct MethodResult {
    pub method: &'static str,
    pub error: f64,
    pub words: usize,
    pub representatives: usize,
}

#[derive(Serialize)]
pub struct Comparison {
    pub bandwidth: f64,
    pub trace: f64,
    pub results: Vec<MethodResult>,
    /// Rows of `(x, y, label)` for the first two disKPCA coordinates.
    pub embedding: Vec<[f64; 3]>,
    pub rounds: Vec<(String, usize)>,
}

pub fn compare_methods(params: &str) -> Result<String, String> {
    let p: DemoParams = parse(params)?;
    let Setup { syn, spec, bandwidth, part, params } = setup(&p)?;
    let e = |x: diskpca_core::Error| x.to_string();
    let a = &syn.data;
    let mut cluster = Cluster::new(a, &part, p.seed).map_err(e)?;
    let run = dis_kpca_run(&mut cluster, &spec, p.k, 0.5, &params, p.seed).map_err(e)?;
    let (dislr, dislr_ledger) =
        baseline_uniform_dislr(&mut cluster, &spec, p.k, p.n_adapt, None, RightSketch::default(), p.seed, 1e-10)
            .map_err(e)?;
    let (batch, batch_ledger) = baseline_uniform_batch(&mut cluster, &spec, p.k, p.n_adapt, p.seed).map_err(e)?;
    let mut results = Vec::new();
    for (method, sol, words) in [
        ("disKPCA", &run.solution, run.ledger.total_words()),
        ("uniform+disLR", &dislr, dislr_ledger.total_words()),
        ("uniform+batch", &batch, batch_ledger.total_words()),
    ] {
        results.push(MethodResult {
            method,
            error: subspace_error(&spec, a, sol).map_err(e)?,
            words,
            representatives: sol.points.n_cols(),
        });
    }
    let coords = run.solution.project(&spec, a).map_err(e)?;
    let labels = syn.labels.unwrap_or_else(|| vec![0; a.n_cols()]);
    let embedding = (0..a.n_cols())
        .map(|j| {
            let c = coords.column(j);
            [c.get(0).copied().unwrap_or(0.0), c.get(1).copied().unwrap_or(0.0), labels[j] as f64]
        })
        .collect();
    let rounds = run.ledger.rounds.iter().map(|r| (r.label.clone(), r.total())).collect();
    let trace = a.n_cols() as f64; // Gaussian kernel: unit diagonal.
    to_json(&Comparison { bandwidth, trace, results, embedding, rounds })
}

#[derive(Serialize)]
pub struct LeveragePoint {
    pub x: f64,
    pub y: f64,
    pub worker: usize,
    pub score: f64,
    /// 0 = not sampled, 1 = leverage sample, 2 = adaptive sample.
    pub sampled: u8,
}

#[derive(Serialize)]
pub struct LeverageMap {
    pub points: Vec<LeveragePoint>,
    pub worker_sizes: Vec<usize>,
    pub words: usize,
}

pub fn leverage_map(params: &str) -> Result<String, String> {
    let p: DemoParams = parse(params)?;
    if p.d != 2 {
        return Err("leverage map needs d = 2".into());
    }
    let Setup { syn, spec, part, params, .. } = setup(&p)?;
    let a = &syn.data;
    let mut cluster = Cluster::new(a, &part, p.seed).map_err(|e| e.to_string())?;
    let run = dis_kpca_run(&mut cluster, &spec, p.k, 0.5, &params, p.seed).map_err(|e| e.to_string())?;
    let dense = a.to_dense();
    let mut points: Vec<LeveragePoint> = (0..a.n_cols())
        .map(|j| LeveragePoint { x: dense[(0, j)], y: dense[(1, j)], worker: part.assignment[j], score: 0.0, sampled: 0 })
        .collect();
    for (idx, scores) in part.worker_indices().iter().zip(&run.scores.per_worker) {
        for (&j, &sc) in idx.iter().zip(scores) {
            points[j].score = sc;
        }
    }
    for &j in &run.representatives.p.indices {
        points[j].sampled = 1;
    }
    for &j in &run.representatives.y_tilde.indices {
        points[j].sampled = 2;
    }
    to_json(&LeverageMap { points, worker_sizes: part.sizes.clone(), words: run.ledger.total_words() })
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default)]
pub struct SketchParams {
    /// `gaussian` or `polynomial`.
    pub kernel: String,
    pub n: usize,
    pub d: usize,
    pub sizes: Vec<usize>,
    pub seed: u64,
}

impl Default for SketchParams {
    fn default() -> Self {
        SketchParams { kernel: "gaussian".into(), n: 100, d: 5, sizes: vec![16, 64, 256, 1024], seed: 1 }
    }
}

#[derive(Serialize)]
pub struct SketchRow {
    pub size: usize,
    /// `|E^T E - K|_F / |K|_F`.
    pub rel_error: f64,
}

pub fn sketch_accuracy(params: &str) -> Result<String, String> {
    let p: SketchParams = parse(params)?;
    if p.n > 500 || p.d > 50 || p.sizes.iter().any(|&t| t == 0 || t > 8192) {
        return Err("demo limits: n <= 500, d <= 50, 1 <= size <= 8192".into());
    }
    let syn = gen_synthetic(SyntheticKind::LowRankPlusNoise, p.n, p.d, p.d.min(3), 0.2, p.seed)
        .map_err(|e| e.to_string())?;
    let a: ColumnMatrix = syn.data;
    let spec = match p.kernel.as_str() {
        "gaussian" => {
            KernelSpec::Gaussian { bandwidth: median_bandwidth(&a, 1.0, 500, p.seed).map_err(|e| e.to_string())? }
        }
        "polynomial" => KernelSpec::Polynomial { degree: 2 },
        other => return Err(format!("unknown kernel {other:?}")),
    };
    let k = gram(&spec, &a, &a).map_err(|e| e.to_string())?;
    let rows = p
        .sizes
        .iter()
        .map(|&t| {
            let op = match spec {
                KernelSpec::Gaussian { bandwidth } => SketchOp::Rff { m: t, bandwidth, seed: p.seed },
                _ => SketchOp::TensorSketch { degree: 2, t, seed: p.seed },
            };
            let emb = op.apply(&a).map_err(|e| e.to_string())?.to_dense();
            let approx = emb.transpose() * &emb;
            Ok(SketchRow { size: t, rel_error: (approx - &k).norm() / k.norm() })
        })
        .collect::<Result<Vec<_>, String>>()?;
    to_json(&rows)
}
