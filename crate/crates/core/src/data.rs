//! Dataset files and synthetic data.
//!
//! Two text formats, one data point per line:
//! - sparse: `[label] idx:val idx:val ...` with 1-based indices; blank lines
//!   and lines starting with `#` are skipped, except a `# dim: N` header.
//! - dense CSV: comma-separated values, the same count on every line.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{ColumnMatrix, Mat, SparseColumn, Storage};
use crate::rng::{lane_rng, SHARED};
use crate::simnet::powerlaw_sizes;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    SparseIndexValue,
    DenseCsv,
}

impl DataFormat {
    /// `.csv` files are dense, everything else sparse.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::DenseCsv,
            _ => DataFormat::SparseIndexValue,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub data: ColumnMatrix,
    /// Leading labels of sparse lines, when every line had one.
    pub labels: Option<Vec<f64>>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| parse_err(line, format!("not a number: {tok:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

pub fn parse_sparse(text: &str) -> Result<Dataset> {
    let mut cols = Vec::new();
    let mut labels = Vec::new();
    let mut dim_header: Option<usize> = None;
    let mut max_index = 0usize;
    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(d) = comment.trim().strip_prefix("dim:") {
                let d = d.trim().parse().map_err(|_| parse_err(line_no, "bad dim header"))?;
                dim_header = Some(d);
            }
            continue;
        }
        let mut col = SparseColumn::default();
        for (pos, tok) in line.split_whitespace().enumerate() {
            match tok.split_once(':') {
                Some((i, v)) => {
                    let i: usize = i.parse().map_err(|_| parse_err(line_no, format!("bad index {i:?}")))?;
                    if i == 0 {
                        return Err(parse_err(line_no, "indices are 1-based"));
                    }
                    if col.indices.last().is_some_and(|&last| last >= i - 1) {
                        return Err(parse_err(line_no, "indices must be strictly increasing"));
                    }
                    let v = parse_f64(v, line_no)?;
                    max_index = max_index.max(i);
                    if v != 0.0 {
                        col.indices.push(i - 1);
                        col.values.push(v);
                    }
                }
                None if pos == 0 => labels.push(parse_f64(tok, line_no)?),
                None => return Err(parse_err(line_no, format!("expected idx:val, got {tok:?}"))),
            }
        }
        cols.push(col);
    }
    if cols.is_empty() {
        return Err(Error::Empty("dataset has no data lines"));
    }
    let dim = match dim_header {
        Some(d) if d < max_index => return Err(parse_err(0, format!("index {max_index} exceeds declared dim {d}"))),
        Some(d) => d,
        None => max_index,
    };
    let labels = (labels.len() == cols.len()).then_some(labels);
    Ok(Dataset { data: ColumnMatrix::from_sparse(dim, cols)?, labels })
}

pub fn parse_dense_csv(text: &str) -> Result<Dataset> {
    let mut values = Vec::new();
    let mut dim: Option<usize> = None;
    let mut n = 0;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = line.split(',').map(|t| parse_f64(t.trim(), no + 1)).collect::<Result<_>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(parse_err(no + 1, format!("expected {d} values, found {}", row.len())));
            }
            _ => {}
        }
        values.extend(row);
        n += 1;
    }
    let d = dim.ok_or(Error::Empty("dataset has no data lines"))?;
    Ok(Dataset { data: ColumnMatrix::from_dense(Mat::from_vec(d, n, values)), labels: None })
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    match format {
        DataFormat::SparseIndexValue => parse_sparse(&text),
        DataFormat::DenseCsv => parse_dense_csv(&text),
    }
}

/// Text that [`parse_sparse`] / [`parse_dense_csv`] read back bit for bit.
pub fn format_dataset(data: &ColumnMatrix, format: DataFormat) -> String {
    let mut out = String::new();
    match format {
        DataFormat::SparseIndexValue => {
            let _ = writeln!(out, "# dim: {}", data.n_rows());
            for col in data.columns() {
                let mut first = true;
                col.for_each_nz(|i, v| {
                    if v != 0.0 {
                        let _ = write!(out, "{}{}:{}", if first { "" } else { " " }, i + 1, v);
                        first = false;
                    }
                });
                if first {
                    // An all-zero point still needs a line.
                    out.push_str("1:0");
                }
                out.push('\n');
            }
        }
        DataFormat::DenseCsv => {
            let dense = data.to_dense();
            for col in dense.column_iter() {
                let parts: Vec<String> = col.iter().map(|v| v.to_string()).collect();
                out.push_str(&parts.join(","));
                out.push('\n');
            }
        }
    }
    out
}

pub fn save_dataset(data: &ColumnMatrix, path: &Path, format: DataFormat) -> Result<()> {
    std::fs::write(path, format_dataset(data, format))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// `A = B C + noise G` with `B` `d x k_true`, `C` `k_true x n`.
    LowRankPlusNoise,
    /// `k_true` Gaussian blobs whose centers have scale `separation`;
    /// blob `j` holds a share proportional to `(j+1)^-imbalance`.
    Clustered { separation: f64, imbalance: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Synthetic {
    pub data: ColumnMatrix,
    /// Blob of every point for clustered data.
    pub labels: Option<Vec<usize>>,
}

pub fn gen_synthetic(kind: SyntheticKind, n: usize, d: usize, k_true: usize, noise: f64, seed: u64) -> Result<Synthetic> {
    // Blobs are not limited by the ambient dimension, only by the point count.
    let limit = match kind {
        SyntheticKind::LowRankPlusNoise => d.min(n),
        SyntheticKind::Clustered { .. } => n,
    };
    if k_true == 0 || k_true > limit {
        return Err(Error::InvalidArgument(format!("k_true = {k_true} must lie in 1..={limit}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument("noise must be a finite nonnegative number".into()));
    }
    let mut rng = lane_rng(seed, "synthetic", SHARED);
    let mut gauss = |r: usize, c: usize| Mat::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
    match kind {
        SyntheticKind::LowRankPlusNoise => {
            let b = gauss(d, k_true);
            let c = gauss(k_true, n);
            let g = gauss(d, n);
            let a = if noise == 0.0 { b * c } else { b * c + g * noise };
            Ok(Synthetic { data: ColumnMatrix::from_dense(a), labels: None })
        }
        SyntheticKind::Clustered { separation, imbalance } => {
            let centers = gauss(d, k_true) * separation;
            let sizes = powerlaw_sizes(n, k_true, imbalance)?;
            let mut labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(j, &c)| std::iter::repeat_n(j, c)).collect();
            let mut order_rng = lane_rng(seed, "synthetic-order", SHARED);
            labels.shuffle(&mut order_rng);
            let g = gauss(d, n);
            let a = Mat::from_fn(d, n, |i, j| centers[(i, labels[j])] + noise * g[(i, j)]);
            Ok(Synthetic { data: ColumnMatrix::from_dense(a), labels: Some(labels) })
        }
    }
}

/// True if the matrix is stored sparse; ingestion never densifies.
pub fn is_sparse(data: &ColumnMatrix) -> bool {
    matches!(data.storage(), Storage::Sparse(_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::truncated_svd;

    #[test]
    fn sparse_example() {
        let ds = parse_sparse("1:1.0 3:2.0\n2:1.0").unwrap();
        assert_eq!(ds.data.shape(), (3, 2));
        assert_eq!(ds.data.nnz(), 3);
        assert!(is_sparse(&ds.data));
        assert!(ds.labels.is_none());
    }

    #[test]
    fn labels_comments_and_errors() {
        let ds = parse_sparse("# header\n+1 1:0.5\n\n-1 2:1e-3\n").unwrap();
        assert_eq!(ds.labels, Some(vec![1.0, -1.0]));
        assert_eq!(ds.data.n_cols(), 2);
        assert!(matches!(parse_sparse(""), Err(Error::Empty(_))));
        assert!(matches!(parse_sparse("1:1\n0:2"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_sparse("1:1 x"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_sparse("2:1 1:1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_dense_csv("1,2\n3"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn round_trips_are_bit_identical() {
        let syn = gen_synthetic(SyntheticKind::LowRankPlusNoise, 7, 4, 2, 0.3, 5).unwrap();
        let text = format_dataset(&syn.data, DataFormat::DenseCsv);
        assert_eq!(parse_dense_csv(&text).unwrap().data, syn.data);

        let cols = vec![
            SparseColumn::new(vec![0, 4], vec![0.1 + 0.2, -1.0 / 3.0]),
            SparseColumn::default(),
            SparseColumn::new(vec![2], vec![f64::MIN_POSITIVE]),
        ];
        let sparse = ColumnMatrix::from_sparse(6, cols).unwrap();
        let text = format_dataset(&sparse, DataFormat::SparseIndexValue);
        assert_eq!(parse_sparse(&text).unwrap().data, sparse);
    }

    #[test]
    fn noiseless_low_rank_has_exact_rank() {
        let syn = gen_synthetic(SyntheticKind::LowRankPlusNoise, 30, 10, 3, 0.0, 1).unwrap();
        let svd = truncated_svd(&syn.data.to_dense(), 10).unwrap();
        assert_eq!(svd.rank(), 3);
        let again = gen_synthetic(SyntheticKind::LowRankPlusNoise, 30, 10, 3, 0.0, 1).unwrap();
        assert_eq!(syn, again);
        assert!(gen_synthetic(SyntheticKind::LowRankPlusNoise, 30, 2, 3, 0.0, 1).is_err());
    }

    #[test]
    fn clustered_sizes_follow_imbalance() {
        let kind = SyntheticKind::Clustered { separation: 5.0, imbalance: 1.0 };
        let syn = gen_synthetic(kind, 100, 3, 4, 0.1, 2).unwrap();
        let labels = syn.labels.unwrap();
        let mut counts = [0; 4];
        labels.iter().for_each(|&l| counts[l] += 1);
        assert_eq!(counts.to_vec(), powerlaw_sizes(100, 4, 1.0).unwrap());
    }
}
