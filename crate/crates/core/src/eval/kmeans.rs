use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::rng::{lane_rng, MASTER};
use rand::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Mean squared distance to the assigned center, after the last step.
    pub objective: f64,
    /// Objective after every assignment step; nonincreasing.
    pub history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest center and its squared distance; ties go to the lower index.
fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// First center drawn from the master lane, then repeatedly the point
/// farthest from all chosen centers.
fn farthest_point_init(pts: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let first = lane_rng(seed, "kmeans-init", MASTER).random_range(0..pts.len());
    let mut centers = vec![pts[first].clone()];
    let mut dist: Vec<f64> = pts.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let (far, _) = dist
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        centers.push(pts[far].clone());
        for (d, p) in dist.iter_mut().zip(pts) {
            *d = d.min(sq_dist(p, &pts[far]));
        }
    }
    centers
}

/// Lloyd's algorithm on the columns of `coords`. A center that loses all
/// its points moves to the point currently farthest from its own center.
pub fn lloyd(coords: &Mat, k: usize, max_iters: usize, seed: u64) -> Result<KMeansResult> {
    let n = coords.ncols();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("cannot form {k} clusters from {n} points")));
    }
    let pts: Vec<Vec<f64>> = coords.column_iter().map(|c| c.iter().copied().collect()).collect();
    let dim = coords.nrows();
    let mut centers = farthest_point_init(&pts, k, seed);
    let mut assignments = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let mut changed = false;
        let mut cost = 0.0;
        let mut own = vec![0.0; n];
        for (i, p) in pts.iter().enumerate() {
            let (c, d) = nearest(p, &centers);
            changed |= assignments[i] != c;
            assignments[i] = c;
            own[i] = d;
            cost += d;
        }
        history.push(cost / n as f64);
        iterations += 1;
        if !changed || iterations > max_iters {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in pts.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let (far, _) = own
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
                centers[c] = pts[far].clone();
                own[far] = 0.0;
            }
        }
    }
    let objective = *history.last().expect("at least one step");
    Ok(KMeansResult { assignments, centers, objective, history, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_masses_are_recovered() {
        let coords = Mat::from_fn(2, 9, |i, j| (j / 3) as f64 * 10.0 + if i == 0 { (j % 3) as f64 * 0.1 } else { 0.0 });
        let km = lloyd(&coords, 3, 50, 4).unwrap();
        for g in 0..3 {
            assert!(km.assignments[g * 3..g * 3 + 3].iter().all(|&a| a == km.assignments[g * 3]));
        }
        let mut distinct = km.assignments.clone();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(distinct.len(), 3);
        assert!((km.objective - 2.0 * 0.01 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn history_never_increases() {
        let coords = Mat::from_fn(3, 200, |i, j| ((j * 7919 + i * 104729) % 1000) as f64 / 100.0);
        let km = lloyd(&coords, 5, 100, 1).unwrap();
        for w in km.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn too_many_clusters_is_an_error() {
        assert!(lloyd(&Mat::zeros(2, 3), 4, 10, 0).is_err());
    }
}
