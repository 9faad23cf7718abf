//! Finite probability spaces: weighted atoms on which every integral
//! becomes a finite sum.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hard cap on the number of atoms; dense kernel storage only pays off at
/// desk scale.
pub const MAX_ATOMS: usize = 8;
/// Hard cap on kernel order (number of axes).
pub const MAX_ORDER: usize = 12;
/// Hard cap on dense value-array length.
pub const MAX_VALUES: usize = 1 << 24;

/// A finite probability space `(X, mu)`: named atoms with nonnegative
/// weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Space<K: Scalar> {
    atoms: Vec<String>,
    weights: Vec<K>,
}

impl<K: Scalar> Space<K> {
    /// Weight-sum tolerance in float mode; exact mode requires equality.
    pub const WEIGHT_TOL: f64 = 1e-12;

    pub fn new(atoms: Vec<String>, weights: Vec<K>) -> Result<Arc<Self>> {
        if atoms.is_empty() {
            return Err(Error::InvalidSpace("no atoms".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidSpace(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.len() > MAX_ATOMS {
            return Err(Error::ResourceLimit(format!(
                "{} atoms exceeds the supported maximum of {MAX_ATOMS}",
                atoms.len()
            )));
        }
        for (a, w) in atoms.iter().zip(&weights) {
            if *w < K::zero() {
                return Err(Error::InvalidSpace(format!("atom {a} has negative weight")));
            }
        }
        let total: K = weights.iter().cloned().sum();
        let defect = (total - K::one()).abs();
        let ok = if K::EXACT {
            defect.is_zero()
        } else {
            defect.to_f64() <= Self::WEIGHT_TOL
        };
        if !ok {
            return Err(Error::InvalidSpace(format!(
                "weights sum to 1{:+e}",
                defect.to_f64()
            )));
        }
        Ok(Arc::new(Space { atoms, weights }))
    }

    /// Uniform distribution on `n` atoms named `x0..x{n-1}`.
    pub fn uniform(n: usize) -> Result<Arc<Self>> {
        let atoms = (0..n).map(|i| format!("x{i}")).collect();
        let weights = (0..n).map(|_| K::from_ratio(1, n as i64)).collect();
        Space::new(atoms, weights)
    }

    /// Exact rational weights `parts[i] / sum(parts)`.
    pub fn from_parts(parts: &[i64]) -> Result<Arc<Self>> {
        let total: i64 = parts.iter().sum();
        if total <= 0 || parts.iter().any(|&p| p < 0) {
            return Err(Error::InvalidSpace("weight parts must be nonnegative with a positive sum".into()));
        }
        let atoms = (0..parts.len()).map(|i| format!("x{i}")).collect();
        let weights = parts.iter().map(|&p| K::from_ratio(p, total)).collect();
        Space::new(atoms, weights)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one atom
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn weights(&self) -> &[K] {
        &self.weights
    }

    pub fn weight(&self, atom: usize) -> &K {
        &self.weights[atom]
    }

    /// Validates that a kernel of the given order fits the dense-storage
    /// limits, returning the value-array length.
    pub fn kernel_len(&self, order: usize) -> Result<usize> {
        if order > MAX_ORDER {
            return Err(Error::ResourceLimit(format!(
                "kernel order {order} exceeds the supported maximum of {MAX_ORDER}"
            )));
        }
        let mut len = 1usize;
        for _ in 0..order {
            len = len
                .checked_mul(self.len())
                .filter(|&l| l <= MAX_VALUES)
                .ok_or_else(|| {
                    Error::ResourceLimit(format!(
                        "dense kernel of order {order} over {} atoms exceeds {MAX_VALUES} entries",
                        self.len()
                    ))
                })?;
        }
        Ok(len)
    }

    /// Cumulative weights as floats, for inverse-CDF sampling.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.weights
            .iter()
            .map(|w| {
                acc += w.to_f64();
                acc
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn accepts_exact_uniform() {
        let s = Space::<Rational>::uniform(3).unwrap();
        assert_eq!(s.len(), 3);
        let total: Rational = s.weights().iter().cloned().sum();
        assert!((total - Rational::one()).is_zero());
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(Space::<f64>::new(vec!["a".into()], vec![0.9]).is_err());
        assert!(Space::<f64>::new(vec!["a".into(), "b".into()], vec![1.5, -0.5]).is_err());
        assert!(Space::<f64>::new(vec![], vec![]).is_err());
    }

    #[test]
    fn enforces_atom_cap() {
        assert!(Space::<f64>::uniform(MAX_ATOMS).is_ok());
        assert!(Space::<f64>::uniform(MAX_ATOMS + 1).is_err());
    }

    #[test]
    fn kernel_len_limits() {
        let s = Space::<f64>::uniform(2).unwrap();
        assert_eq!(s.kernel_len(0).unwrap(), 1);
        assert_eq!(s.kernel_len(3).unwrap(), 8);
        assert!(s.kernel_len(MAX_ORDER + 1).is_err());
        let s8 = Space::<f64>::uniform(8).unwrap();
        assert!(s8.kernel_len(9).is_err()); // 8^9 > 2^24
    }
}
