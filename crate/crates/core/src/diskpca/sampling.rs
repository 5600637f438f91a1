//! Seeded sampling primitives shared by the distributed and centralized paths.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::matrix::{ColumnMatrix, Mat};
use crate::simnet::PointBatch;

/// Splits `total` draws over categories with probability proportional to `weights`.
pub fn multinomial_counts(weights: &[f64], total: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let mut counts = vec![0; weights.len()];
    if total == 0 {
        return Ok(counts);
    }
    let dist = WeightedIndex::new(weights)
        .map_err(|e| Error::Invariant(format!("cannot sample from weights: {e}")))?;
    for _ in 0..total {
        counts[dist.sample(rng)] += 1;
    }
    Ok(counts)
}

/// `count` draws with replacement proportional to `weights`; returns the
/// distinct local indices in ascending order.
pub fn sample_with_replacement(weights: &[f64], count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let dist = WeightedIndex::new(weights)
        .map_err(|e| Error::Invariant(format!("cannot sample from local weights: {e}")))?;
    let picked: BTreeSet<usize> = (0..count).map(|_| dist.sample(rng)).collect();
    Ok(picked.into_iter().collect())
}

/// `count` distinct indices out of `n`, ascending.
pub fn sample_without_replacement(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx = index::sample(rng, n, count.min(n)).into_vec();
    idx.sort_unstable();
    idx
}

pub fn local_batch(data: &ColumnMatrix, global: &[usize], local: &[usize]) -> PointBatch {
    PointBatch { indices: local.iter().map(|&l| global[l]).collect(), points: data.select_columns(local) }
}

/// Concatenates batches in the given order.
pub fn concat_batches(n_rows: usize, parts: &[PointBatch]) -> Result<PointBatch> {
    let indices = parts.iter().flat_map(|b| b.indices.iter().copied()).collect();
    let mats: Vec<&ColumnMatrix> = parts.iter().map(|b| &b.points).collect();
    let points = if mats.is_empty() { ColumnMatrix::zeros(n_rows, 0) } else { ColumnMatrix::hconcat(&mats)? };
    Ok(PointBatch { indices, points })
}

/// Side-by-side concatenation of dense blocks with equal row counts.
pub fn hstack(blocks: &[Mat]) -> Result<Mat> {
    let rows = blocks.first().map_or(0, Mat::nrows);
    let cols = blocks.iter().map(Mat::ncols).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        if b.nrows() != rows {
            return Err(Error::mismatch("hstack", (rows, at), b.shape()));
        }
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    Ok(out)
}
