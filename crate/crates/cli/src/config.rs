use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use diskpca_core::data::{DataFormat, SyntheticKind};
use diskpca_core::diskpca::{DisKpcaParams, WRule};

use crate::CliError;

/// Gaussian bandwidth: a number, or `"median"` for the median trick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bandwidth {
    Fixed(f64),
    Rule(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelConfig {
    Polynomial { degree: u32 },
    Gaussian { bandwidth: Bandwidth },
    ArcCos { degree: u32 },
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig::Gaussian { bandwidth: Bandwidth::Rule("median".into()) }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionScheme {
    #[default]
    Powerlaw,
    Even,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    /// Inferred from the extension when absent.
    pub format: Option<DataFormat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub kind: String,
    pub n: usize,
    pub d: usize,
    pub k_true: usize,
    pub noise: f64,
    pub separation: f64,
    pub imbalance: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            kind: "clustered".into(),
            n: 1000,
            d: 10,
            k_true: 5,
            noise: 0.1,
            separation: 4.0,
            imbalance: 1.0,
        }
    }
}

impl SyntheticConfig {
    pub fn kind(&self) -> Result<SyntheticKind, CliError> {
        match self.kind.as_str() {
            "low-rank-plus-noise" | "lowrank" => Ok(SyntheticKind::LowRankPlusNoise),
            "clustered" => Ok(SyntheticKind::Clustered { separation: self.separation, imbalance: self.imbalance }),
            other => Err(CliError::Usage(format!("unknown synthetic kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_adapt: Vec<usize>,
    pub repeats: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { n_adapt: diskpca_core::eval::DEFAULT_SWEEP.to_vec(), repeats: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub iters: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig { iters: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub k: usize,
    pub eps: f64,
    /// Number of workers.
    pub s: usize,
    pub partition: PartitionScheme,
    pub exponent: f64,
    pub output: PathBuf,
    /// Also solve batch KPCA on the full data for the optimum error.
    pub opt_error: bool,
    pub kernel: KernelConfig,
    pub data: DataConfig,
    pub synthetic: SyntheticConfig,
    pub params: DisKpcaParams,
    pub sweep: SweepConfig,
    pub cluster: ClusterConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            k: 10,
            eps: 0.5,
            s: 10,
            partition: PartitionScheme::Powerlaw,
            exponent: 2.0,
            output: PathBuf::from("diskpca-out"),
            opt_error: false,
            kernel: KernelConfig::default(),
            data: DataConfig::default(),
            synthetic: SyntheticConfig::default(),
            params: DisKpcaParams::default(),
            sweep: SweepConfig::default(),
            cluster: ClusterConfig::default(),
        }
    }
}

/// Flags that override config file entries.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// TOML config file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Number of workers.
    #[arg(short, long)]
    pub s: Option<usize>,
    /// `powerlaw` or `even`.
    #[arg(long)]
    pub partition: Option<String>,
    #[arg(long)]
    pub exponent: Option<f64>,
    /// Dataset file; `.csv` is dense, anything else sparse index:value.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// `sparse` or `csv`, overriding the extension.
    #[arg(long)]
    pub format: Option<String>,
    /// Output directory.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// `gaussian`, `polynomial` or `arccos`.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Gaussian bandwidth or `median`.
    #[arg(long)]
    pub bandwidth: Option<String>,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Right-sketch width: a number, `equal-y` or `inv-eps2`.
    #[arg(long)]
    pub w: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n_lev: Option<usize>,
    #[arg(long)]
    pub n_adapt: Option<usize>,
    /// Comma-separated n_adapt values for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<usize>>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Compute the batch-KPCA optimum for every record.
    #[arg(long)]
    pub opt_error: bool,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn parse_format(s: &str) -> Result<DataFormat, CliError> {
    match s {
        "sparse" | "libsvm" | "sparse-index-value" => Ok(DataFormat::SparseIndexValue),
        "csv" | "dense" | "dense-csv" => Ok(DataFormat::DenseCsv),
        other => Err(usage(format!("unknown data format {other:?}"))),
    }
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth, CliError> {
    if s == "median" {
        return Ok(Bandwidth::Rule(s.into()));
    }
    s.parse().map(Bandwidth::Fixed).map_err(|_| usage(format!("bandwidth must be a number or `median`, got {s:?}")))
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }

    /// Config file (if any) with flag overrides applied, validated.
    pub fn load(o: &Overrides) -> Result<Self, CliError> {
        let mut c = match &o.config {
            Some(p) => Config::from_file(p)?,
            None => Config::default(),
        };
        c.apply(o)?;
        c.validate()?;
        Ok(c)
    }

    fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.k {
            self.k = v;
        }
        if let Some(v) = o.eps {
            self.eps = v;
        }
        if let Some(v) = o.s {
            self.s = v;
        }
        if let Some(v) = &o.partition {
            self.partition = match v.as_str() {
                "powerlaw" => PartitionScheme::Powerlaw,
                "even" => PartitionScheme::Even,
                other => return Err(usage(format!("unknown partition {other:?}"))),
            };
        }
        if let Some(v) = o.exponent {
            self.exponent = v;
        }
        if let Some(v) = &o.data {
            self.data.path = Some(v.clone());
        }
        if let Some(v) = &o.format {
            self.data.format = Some(parse_format(v)?);
        }
        if let Some(v) = &o.out {
            self.output = v.clone();
        }
        if let Some(kind) = &o.kernel {
            self.kernel = match kind.as_str() {
                "gaussian" | "rbf" => KernelConfig::Gaussian { bandwidth: Bandwidth::Rule("median".into()) },
                "polynomial" | "poly" => KernelConfig::Polynomial { degree: 2 },
                "arccos" | "arc-cos" => KernelConfig::ArcCos { degree: 1 },
                other => return Err(usage(format!("unknown kernel {other:?}"))),
            };
        }
        if let Some(b) = &o.bandwidth {
            match &mut self.kernel {
                KernelConfig::Gaussian { bandwidth } => *bandwidth = parse_bandwidth(b)?,
                _ => return Err(usage("--bandwidth only applies to the gaussian kernel")),
            }
        }
        if let Some(q) = o.degree {
            match &mut self.kernel {
                KernelConfig::Polynomial { degree } | KernelConfig::ArcCos { degree } => *degree = q,
                _ => return Err(usage("--degree applies to polynomial and arccos kernels")),
            }
        }
        if let Some(v) = o.t {
            self.params.t = Some(v);
        }
        if let Some(v) = o.p {
            self.params.p = v;
        }
        if let Some(v) = &o.w {
            self.params.w = match v.as_str() {
                "equal-y" => WRule::EqualY,
                "inv-eps2" => WRule::InverseEpsSquared,
                n => WRule::Absolute(n.parse().map_err(|_| usage(format!("bad --w {n:?}")))?),
            };
        }
        if let Some(v) = o.m {
            self.params.m = v;
        }
        if let Some(v) = o.n_lev {
            self.params.n_lev = Some(v);
        }
        if let Some(v) = o.n_adapt {
            self.params.n_adapt = Some(v);
        }
        if let Some(v) = &o.sweep {
            self.sweep.n_adapt = v.clone();
        }
        if let Some(v) = o.repeats {
            self.sweep.repeats = v;
        }
        self.opt_error |= o.opt_error;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.k == 0 || self.s == 0 {
            return Err(usage("k and s must be >= 1"));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(usage(format!("eps must lie in (0, 1], got {}", self.eps)));
        }
        if self.sweep.repeats == 0 || self.sweep.n_adapt.is_empty() || self.sweep.n_adapt.contains(&0) {
            return Err(usage("sweep needs repeats >= 1 and nonzero n_adapt values"));
        }
        if self.cluster.iters == 0 {
            return Err(usage("cluster.iters must be >= 1"));
        }
        if let KernelConfig::Gaussian { bandwidth: Bandwidth::Rule(r) } = &self.kernel {
            if r != "median" {
                return Err(usage(format!("unknown bandwidth rule {r:?}")));
            }
        }
        self.params.resolve(self.k, self.eps).map_err(|e| usage(e.to_string()))?;
        Ok(())
    }

    pub fn data_format(&self) -> Option<DataFormat> {
        let path = self.data.path.as_ref()?;
        Some(self.data.format.unwrap_or_else(|| DataFormat::from_path(path)))
    }
}
