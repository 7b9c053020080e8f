//! Low-dimensional shape codes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point in a box-bounded latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentVector<T> {
    pub values: Vec<T>,
    pub bounds: Vec<(T, T)>,
}

impl<T: Scalar> LatentVector<T> {
    /// Builds a latent vector, checking `lo <= v <= hi` per coordinate.
    pub fn new(values: Vec<T>, bounds: Vec<(T, T)>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("latent dimension must be >= 1".into()));
        }
        if values.len() != bounds.len() {
            return Err(Error::Config(format!(
                "latent has {} values but {} bounds",
                values.len(),
                bounds.len()
            )));
        }
        for (i, (&v, &(lo, hi))) in values.iter().zip(&bounds).enumerate() {
            if lo > hi {
                return Err(Error::Config(format!("bounds [{lo}, {hi}] at index {i} are empty")));
            }
            if v < lo || v > hi {
                return Err(Error::Bounds(format!(
                    "value {v} at index {i} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { values, bounds })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Euclidean distance between value vectors.
    pub fn distance(&self, other: &[T]) -> T {
        self.values
            .iter()
            .zip(other)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }

    /// Clamps a raw vector into the box and wraps it.
    pub fn clamped(values: Vec<T>, bounds: Vec<(T, T)>) -> Self {
        let clipped = values
            .iter()
            .zip(&bounds)
            .map(|(&v, &(lo, hi))| v.max(lo).min(hi))
            .collect();
        Self { values: clipped, bounds }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_of_bounds_is_rejected() {
        let err = LatentVector::new(vec![2.0], vec![(0.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::Bounds(_)));
    }

    #[test]
    fn empty_latent_is_rejected() {
        assert!(LatentVector::<f64>::new(vec![], vec![]).is_err());
    }

    #[test]
    fn clamping_stays_in_box() {
        let z = LatentVector::clamped(vec![-3.0, 0.5], vec![(0.0, 1.0), (0.0, 1.0)]);
        assert_eq!(z.values, vec![0.0, 0.5]);
    }
}
