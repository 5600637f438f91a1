//! Right-side embeddings `M T` that shrink the number of columns of a
//! dense local block before it is sent to the master.

use nalgebra::QR;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::matrix::Mat;
use crate::rng::{mix, rng_from};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RightSketch {
    /// `T` with i.i.d. `N(0, 1/w)` entries.
    Gaussian,
    /// `T = sqrt(n/w) Q` with `Q` a random `n x w` matrix with orthonormal columns.
    #[default]
    Orthogonal,
}

fn gaussian_block(n: usize, w: usize, seed: u64, scale: f64) -> Mat {
    let mut t = Mat::zeros(n, w);
    for c in 0..w {
        let mut rng = rng_from(mix(seed, c as u64));
        for v in t.column_mut(c).iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal) * scale;
        }
    }
    t
}

/// `M T` with `T` an `n x w` embedding. Blocks with at most `w` columns
/// are returned unchanged (`T = I`).
pub fn right_sketch(m: &Mat, w: usize, kind: RightSketch, seed: u64) -> Mat {
    let n = m.ncols();
    if n <= w {
        return m.clone();
    }
    let t = match kind {
        RightSketch::Gaussian => gaussian_block(n, w, seed, 1.0 / (w as f64).sqrt()),
        RightSketch::Orthogonal => {
            let g = gaussian_block(n, w, seed, 1.0);
            QR::new(g).q() * (n as f64 / w as f64).sqrt()
        }
    };
    m * t
}
