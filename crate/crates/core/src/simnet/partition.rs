use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{lane_rng, SHARED};

/// Assignment of global column indices to workers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    /// `assignment[j]` is the worker owning global column `j`.
    pub assignment: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl Partition {
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn s(&self) -> usize {
        self.sizes.len()
    }

    /// Global indices owned by each worker, ascending.
    pub fn worker_indices(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&c| Vec::with_capacity(c)).collect();
        for (j, &w) in self.assignment.iter().enumerate() {
            out[w].push(j);
        }
        out
    }

    fn from_sizes(sizes: Vec<usize>, seed: u64) -> Self {
        let n: usize = sizes.iter().sum();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut lane_rng(seed, "partition", SHARED));
        let mut assignment = vec![0; n];
        let mut pos = 0;
        for (w, &c) in sizes.iter().enumerate() {
            for &j in &order[pos..pos + c] {
                assignment[j] = w;
            }
            pos += c;
        }
        Partition { assignment, sizes }
    }
}

fn check(n: usize, s: usize) -> Result<()> {
    if s == 0 {
        return Err(Error::InvalidArgument("at least one worker required".into()));
    }
    if n < s {
        return Err(Error::InvalidArgument(format!("{n} columns cannot fill {s} workers")));
    }
    Ok(())
}

/// Worker `i` (1-based) receives a share proportional to `i^-exponent`.
pub fn powerlaw_sizes(n: usize, s: usize, exponent: f64) -> Result<Vec<usize>> {
    check(n, s)?;
    if !exponent.is_finite() {
        return Err(Error::InvalidArgument("power-law exponent must be finite".into()));
    }
    let weights: Vec<f64> = (1..=s).map(|i| (i as f64).powf(-exponent)).collect();
    let total: f64 = weights.iter().sum();
    let mut sizes: Vec<usize> = weights.iter().map(|w| (n as f64 * w / total).round() as usize).collect();
    let largest = (0..s).max_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a))).unwrap_or(0);
    let assigned: usize = sizes.iter().sum();
    if assigned <= n {
        sizes[largest] += n - assigned;
    } else {
        let mut excess = assigned - n;
        while excess > 0 {
            let big = (0..s).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))).unwrap_or(0);
            sizes[big] -= 1;
            excess -= 1;
        }
    }
    for i in 0..s {
        while sizes[i] == 0 {
            let big = (0..s).max_by_key(|&j| (sizes[j], std::cmp::Reverse(j))).unwrap_or(0);
            sizes[big] -= 1;
            sizes[i] += 1;
        }
    }
    Ok(sizes)
}

pub fn partition_powerlaw(n: usize, s: usize, exponent: f64, seed: u64) -> Result<Partition> {
    Ok(Partition::from_sizes(powerlaw_sizes(n, s, exponent)?, seed))
}

/// Sizes differ by at most one.
pub fn partition_even(n: usize, s: usize, seed: u64) -> Result<Partition> {
    check(n, s)?;
    let sizes = (0..s).map(|i| n / s + usize::from(i < n % s)).collect();
    Ok(Partition::from_sizes(sizes, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powerlaw_thousand_over_four() {
        assert_eq!(powerlaw_sizes(1000, 4, 2.0).unwrap(), vec![702, 176, 78, 44]);
    }

    #[test]
    fn degenerate_cases() {
        let p = partition_powerlaw(17, 1, 2.0, 3).unwrap();
        assert_eq!(p.sizes, vec![17]);
        assert!(p.assignment.iter().all(|&w| w == 0));
        assert_eq!(powerlaw_sizes(6, 6, 2.0).unwrap(), vec![1; 6]);
        assert!(partition_powerlaw(3, 4, 2.0, 0).is_err());
        assert!(partition_even(5, 0, 0).is_err());
    }

    #[test]
    fn every_column_assigned_once() {
        let p = partition_powerlaw(101, 5, 2.0, 9).unwrap();
        let idx = p.worker_indices();
        let mut all: Vec<usize> = idx.concat();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
        for (w, ix) in idx.iter().enumerate() {
            assert_eq!(ix.len(), p.sizes[w]);
        }
        assert_eq!(partition_even(10, 3, 1).unwrap().sizes, vec![4, 3, 3]);
    }

    #[test]
    fn heavy_tail_keeps_everyone_nonempty() {
        let sizes = powerlaw_sizes(12, 10, 2.0).unwrap();
        assert_eq!(sizes.iter().sum::<usize>(), 12);
        assert!(sizes.iter().all(|&c| c >= 1));
    }
}
