use crate::matrix::{ColumnMatrix, Mat};

/// Anything that can travel over a link.
pub trait Payload {
    fn word_count(&self) -> usize;
    fn all_finite(&self) -> bool;
}

impl Payload for () {
    fn word_count(&self) -> usize {
        0
    }
    fn all_finite(&self) -> bool {
        true
    }
}

impl Payload for f64 {
    fn word_count(&self) -> usize {
        1
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl Payload for usize {
    fn word_count(&self) -> usize {
        1
    }
    fn all_finite(&self) -> bool {
        true
    }
}

impl Payload for Mat {
    fn word_count(&self) -> usize {
        self.len()
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl Payload for ColumnMatrix {
    fn word_count(&self) -> usize {
        ColumnMatrix::word_count(self)
    }
    fn all_finite(&self) -> bool {
        ColumnMatrix::all_finite(self)
    }
}

impl<T: Payload> Payload for Vec<T> {
    fn word_count(&self) -> usize {
        self.iter().map(Payload::word_count).sum()
    }
    fn all_finite(&self) -> bool {
        self.iter().all(Payload::all_finite)
    }
}

impl<T: Payload> Payload for Option<T> {
    fn word_count(&self) -> usize {
        self.as_ref().map_or(0, Payload::word_count)
    }
    fn all_finite(&self) -> bool {
        self.as_ref().is_none_or(Payload::all_finite)
    }
}

impl<A: Payload, B: Payload> Payload for (A, B) {
    fn word_count(&self) -> usize {
        self.0.word_count() + self.1.word_count()
    }
    fn all_finite(&self) -> bool {
        self.0.all_finite() && self.1.all_finite()
    }
}

/// Data points together with their global column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct PointBatch {
    pub indices: Vec<usize>,
    pub points: ColumnMatrix,
}

impl PointBatch {
    pub fn empty(n_rows: usize) -> Self {
        PointBatch { indices: Vec::new(), points: ColumnMatrix::zeros(n_rows, 0) }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

impl Payload for PointBatch {
    fn word_count(&self) -> usize {
        self.indices.len() + self.points.word_count()
    }
    fn all_finite(&self) -> bool {
        self.points.all_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_counts() {
        assert_eq!(Mat::zeros(3, 4).word_count(), 12);
        assert_eq!(vec![0usize; 7].word_count(), 7);
        assert_eq!(().word_count(), 0);
        assert_eq!((2.0, vec![1.0, 2.0]).word_count(), 3);
        assert!(!vec![1.0, f64::NAN].all_finite());
    }
}

impl Payload for crate::matrix::TriangularFactor {
    /// The stored factor plus its pivot order.
    fn word_count(&self) -> usize {
        self.upper.len() + self.pivots.len()
    }
    fn all_finite(&self) -> bool {
        self.upper.iter().all(|v| v.is_finite())
    }
}
