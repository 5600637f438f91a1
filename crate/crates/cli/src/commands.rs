use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use diskpca_core::data::{gen_synthetic, load_dataset, save_dataset, DataFormat};
use diskpca_core::diskpca::{batch_kpca, dis_kpca_run};
use diskpca_core::eval::{curve_csv, error_curve, run_method, spectral_cluster, ExperimentRecord, Method};
use diskpca_core::kernels::{median_bandwidth, subspace_error, KernelSpec};
use diskpca_core::matrix::ColumnMatrix;
use diskpca_core::rng::{lane, SHARED};
use diskpca_core::simnet::{partition_even, partition_powerlaw, Cluster, CommLedger, Partition};

use crate::config::{Bandwidth, Config, KernelConfig, PartitionScheme};
use crate::{CliError, Command};

const MEDIAN_FACTOR: f64 = 0.2;
const MEDIAN_POINTS: usize = 20_000;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Kpca(o) => single(&Config::load(&o)?, Method::DisKpca),
        Command::BaselineDislr(o) => single(&Config::load(&o)?, Method::UniformDisLr),
        Command::BaselineBatch(o) => single(&Config::load(&o)?, Method::UniformBatch),
        Command::Sweep { overrides, method } => {
            let method = parse_method(&method)?;
            sweep(&Config::load(&overrides)?, &[method])
        }
        Command::Compare(o) => sweep(&Config::load(&o)?, &Method::ALL),
        Command::Cluster(o) => cluster(&Config::load(&o)?),
        Command::LeverageDebug(o) => leverage_debug(&Config::load(&o)?),
        Command::Gen { overrides, kind, n, d, k_true, noise, to } => {
            let mut cfg = Config::load(&overrides)?;
            let syn = &mut cfg.synthetic;
            if let Some(v) = kind {
                syn.kind = v;
            }
            syn.n = n.unwrap_or(syn.n);
            syn.d = d.unwrap_or(syn.d);
            syn.k_true = k_true.unwrap_or(syn.k_true);
            syn.noise = noise.unwrap_or(syn.noise);
            generate(&cfg, &to)
        }
    }
}

fn parse_method(s: &str) -> Result<Method, CliError> {
    match s {
        "diskpca" => Ok(Method::DisKpca),
        "uniform-dislr" => Ok(Method::UniformDisLr),
        "uniform-batch" => Ok(Method::UniformBatch),
        other => Err(CliError::Usage(format!("unknown method {other:?}"))),
    }
}

/// The dataset named in the config, or the configured synthetic data.
pub fn load_data(cfg: &Config) -> Result<ColumnMatrix> {
    if let (Some(path), Some(format)) = (&cfg.data.path, cfg.data_format()) {
        let ds = load_dataset(path, format).with_context(|| format!("loading {}", path.display()))?;
        log::info!("loaded {} points of dimension {} ({} nonzeros)", ds.data.n_cols(), ds.data.n_rows(), ds.data.nnz());
        return Ok(ds.data);
    }
    let s = &cfg.synthetic;
    let syn = gen_synthetic(s.kind()?, s.n, s.d, s.k_true, s.noise, cfg.seed)
        .map_err(|e| CliError::Usage(format!("synthetic data: {e}")))?;
    Ok(syn.data)
}

pub fn kernel_spec(cfg: &Config, a: &ColumnMatrix) -> Result<KernelSpec> {
    let spec = match &cfg.kernel {
        KernelConfig::Polynomial { degree } => KernelSpec::Polynomial { degree: *degree },
        KernelConfig::ArcCos { degree } => KernelSpec::ArcCos { degree: *degree },
        KernelConfig::Gaussian { bandwidth: Bandwidth::Fixed(b) } => KernelSpec::Gaussian { bandwidth: *b },
        KernelConfig::Gaussian { bandwidth: Bandwidth::Rule(_) } => {
            let seed = lane(cfg.seed, "bandwidth", SHARED);
            let b = median_bandwidth(a, MEDIAN_FACTOR, MEDIAN_POINTS, seed)?;
            if b <= 0.0 {
                return Err(CliError::Data("median pairwise distance is zero".into()).into());
            }
            KernelSpec::Gaussian { bandwidth: b }
        }
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

pub fn build_cluster(cfg: &Config, a: &ColumnMatrix) -> Result<(Cluster, Partition)> {
    let n = a.n_cols();
    if n < cfg.s {
        return Err(CliError::Data(format!("{n} points cannot fill {} workers", cfg.s)).into());
    }
    let part = match cfg.partition {
        PartitionScheme::Powerlaw => partition_powerlaw(n, cfg.s, cfg.exponent, cfg.seed)?,
        PartitionScheme::Even => partition_even(n, cfg.s, cfg.seed)?,
    };
    Ok((Cluster::new(a, &part, cfg.seed)?, part))
}

fn setup(cfg: &Config) -> Result<(ColumnMatrix, KernelSpec, Cluster)> {
    let a = load_data(cfg)?;
    let spec = kernel_spec(cfg, &a)?;
    let (cluster, _) = build_cluster(cfg, &a)?;
    Ok((a, spec, cluster))
}

fn opt_error(cfg: &Config, spec: &KernelSpec, a: &ColumnMatrix) -> Result<Option<f64>> {
    if !cfg.opt_error {
        return Ok(None);
    }
    Ok(Some(batch_kpca(spec, a, cfg.k)?.1))
}

fn out_dir(cfg: &Config) -> Result<&Path> {
    fs::create_dir_all(&cfg.output).with_context(|| format!("creating {}", cfg.output.display()))?;
    Ok(&cfg.output)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct LedgerReport<'a> {
    total_words: usize,
    up_words: usize,
    down_words: usize,
    rounds: &'a [diskpca_core::simnet::RoundRecord],
}

fn ledger_json(ledger: &CommLedger) -> Result<String> {
    let report = LedgerReport {
        total_words: ledger.total_words(),
        up_words: ledger.up_words(),
        down_words: ledger.down_words(),
        rounds: &ledger.rounds,
    };
    Ok(serde_json::to_string_pretty(&report)? + "\n")
}

fn single(cfg: &Config, method: Method) -> Result<()> {
    let (a, spec, mut cluster) = setup(cfg)?;
    let opt = opt_error(cfg, &spec, &a)?;
    let n_adapt = cfg.params.resolve(cfg.k, cfg.eps)?.n_adapt;
    let start = Instant::now();
    let (sol, ledger, params) = run_method(&mut cluster, &spec, method, cfg.k, cfg.eps, &cfg.params, n_adapt, cfg.seed)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let err = subspace_error(&spec, &a, &sol)?;
    let record = ExperimentRecord {
        method: method.name().to_string(),
        params,
        subspace_error: err,
        opt_error: opt,
        total_words: ledger.total_words(),
        n_points: sol.points.n_cols(),
        wall_time_ms,
    };
    let dir = out_dir(cfg)?;
    write(dir, "records.jsonl", &jsonl(&[&record])?)?;
    write(dir, "ledger.json", &ledger_json(&ledger)?)?;
    println!(
        "{}: k={} error={:.6} words={} representatives={}",
        record.method,
        sol.k(),
        err,
        record.total_words,
        record.n_points
    );
    if let Some(o) = opt {
        println!("batch optimum: {o:.6} (ratio {:.4})", err / o.max(f64::MIN_POSITIVE));
    }
    Ok(())
}

fn sweep(cfg: &Config, methods: &[Method]) -> Result<()> {
    let (a, spec, mut cluster) = setup(cfg)?;
    let opt = opt_error(cfg, &spec, &a)?;
    let mut records = Vec::new();
    let mut points = Vec::new();
    for &method in methods {
        let curve = error_curve(
            &mut cluster,
            &spec,
            method,
            cfg.k,
            cfg.eps,
            &cfg.params,
            &cfg.sweep.n_adapt,
            cfg.sweep.repeats,
            opt,
            cfg.seed,
        )?;
        records.extend(curve.records);
        points.extend(curve.points);
    }
    let dir = out_dir(cfg)?;
    write(dir, "records.jsonl", &jsonl(&records)?)?;
    write(dir, "curve.csv", &curve_csv(&points))?;
    let mut table = format!("{:<15} {:>8} {:>12} {:>12} {:>12}\n", "method", "n_adapt", "words", "err_mean", "err_std");
    for p in &points {
        let _ = writeln!(table, "{:<15} {:>8} {:>12.0} {:>12.6} {:>12.6}", p.method, p.n_adapt, p.words, p.err_mean, p.err_std);
    }
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct ClusterRecord {
    method: &'static str,
    k: usize,
    objective: f64,
    projected_objective: f64,
    iterations: usize,
    total_words: usize,
    wall_time_ms: f64,
}

fn cluster(cfg: &Config) -> Result<()> {
    let (_, spec, mut cluster) = setup(cfg)?;
    if cfg.k < 2 {
        return Err(CliError::Usage("cluster needs k >= 2".into()).into());
    }
    let start = Instant::now();
    let (cl, _) = spectral_cluster(&mut cluster, &spec, cfg.k, cfg.eps, &cfg.params, cfg.cluster.iters, cfg.seed)?;
    let record = ClusterRecord {
        method: "disKPCA+kmeans",
        k: cfg.k,
        objective: cl.objective,
        projected_objective: cl.projected_objective,
        iterations: cl.iterations,
        total_words: cl.ledger.total_words(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let mut csv = String::from("index,cluster\n");
    for (j, c) in cl.assignments.iter().enumerate() {
        let _ = writeln!(csv, "{j},{c}");
    }
    let dir = out_dir(cfg)?;
    write(dir, "records.jsonl", &jsonl(&[&record])?)?;
    write(dir, "clusters.csv", &csv)?;
    write(dir, "ledger.json", &ledger_json(&cl.ledger)?)?;
    println!(
        "k-means objective {:.6} (projected {:.6}) after {} iterations, {} words",
        record.objective, record.projected_objective, record.iterations, record.total_words
    );
    Ok(())
}

#[derive(Serialize)]
struct Representatives<'a> {
    leverage_rank: usize,
    leverage_sum: f64,
    lev_draws: usize,
    adapt_draws: usize,
    residual_total: f64,
    p: &'a [usize],
    y_tilde: &'a [usize],
}

fn leverage_debug(cfg: &Config) -> Result<()> {
    let a = load_data(cfg)?;
    let spec = kernel_spec(cfg, &a)?;
    let (mut cluster, part) = build_cluster(cfg, &a)?;
    let run = dis_kpca_run(&mut cluster, &spec, cfg.k, cfg.eps, &cfg.params, cfg.seed)?;
    let mut csv = String::from("index,worker,score\n");
    let mut rows = Vec::with_capacity(a.n_cols());
    for (w, (idx, scores)) in part.worker_indices().iter().zip(&run.scores.per_worker).enumerate() {
        rows.extend(idx.iter().zip(scores).map(|(&j, &sc)| (j, w, sc)));
    }
    rows.sort_by_key(|r| r.0);
    for (j, w, sc) in rows {
        let _ = writeln!(csv, "{j},{w},{sc}");
    }
    let reps = &run.representatives;
    let summary = Representatives {
        leverage_rank: run.scores.rank,
        leverage_sum: run.scores.global_sum,
        lev_draws: reps.lev_draws,
        adapt_draws: reps.adapt_draws,
        residual_total: reps.residual_total,
        p: &reps.p.indices,
        y_tilde: &reps.y_tilde.indices,
    };
    let dir = out_dir(cfg)?;
    write(dir, "leverage.csv", &csv)?;
    write(dir, "representatives.json", &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    write(dir, "ledger.json", &ledger_json(&run.ledger)?)?;
    println!(
        "leverage rank {} (sum {:.4}); |P| = {} from {} draws, |Y~| = {} from {} draws",
        summary.leverage_rank,
        summary.leverage_sum,
        summary.p.len(),
        summary.lev_draws,
        summary.y_tilde.len(),
        summary.adapt_draws
    );
    Ok(())
}

fn generate(cfg: &Config, to: &Path) -> Result<()> {
    let s = &cfg.synthetic;
    let syn = gen_synthetic(s.kind()?, s.n, s.d, s.k_true, s.noise, cfg.seed)
        .map_err(|e| CliError::Usage(format!("synthetic data: {e}")))?;
    if let Some(dir) = to.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let format = DataFormat::from_path(to);
    save_dataset(&syn.data, to, format).with_context(|| format!("writing {}", to.display()))?;
    println!("wrote {} points of dimension {} to {}", syn.data.n_cols(), syn.data.n_rows(), to.display());
    Ok(())
}
