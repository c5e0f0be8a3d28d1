//! Data points: fixed-length real vectors.

use serde::{Deserialize, Serialize};

/// A single example: a fixed-length vector of finite reals.
///
/// For the synthetic worlds this is a 2-D point; for raster data it is a
/// flattened grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub values: Vec<f64>,
}

impl DataPoint {
    pub fn new(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    /// Number of coordinates.
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean distance to another point of the same dimension.
    pub fn distance(&self, other: &DataPoint) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// True when every coordinate is finite.
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for DataPoint {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_and_distance() {
        let a = DataPoint::new(vec![3.0, 4.0]);
        let b = DataPoint::new(vec![0.0, 0.0]);
        assert_eq!(a.norm(), 5.0);
        assert_eq!(a.distance(&b), 5.0);
        assert_eq!(a.distance(&a), 0.0);
    }

    #[test]
    fn finiteness_check() {
        let p = DataPoint {
            values: vec![1.0, f64::NAN],
        };
        assert!(!p.is_finite());
        assert!(DataPoint::new(vec![1.0, 2.0]).is_finite());
    }
}
