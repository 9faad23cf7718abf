//! Seeded random kernel generation for test corpora and experiments.
//!
//! Raw entries are drawn on a small rational grid so the same seed yields
//! the same kernel in both arithmetic modes. Constraints are then applied
//! in a fixed order: canonicalize, clip into the sup ball, canonicalize
//! once more (clipping can break canonicality), and finally scale down to
//! meet the sup and L2 targets. Scaling preserves canonicality, and the
//! post-conditions are asserted before returning.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::scalar::Scalar;
use crate::space::Space;
use crate::vertex::row_labels;

/// Denominator of the raw value grid.
const GRID: i64 = 16;

#[derive(Clone, Copy, Debug, Default)]
pub struct KernelConstraints {
    /// Project onto the canonical (fully centered) component.
    pub canonical: bool,
    /// Target sup-norm ball radius (typically 1).
    pub sup_bound: Option<f64>,
    /// Target L2-norm bound (the `sigma` of the experiments).
    pub l2_bound: Option<f64>,
}

impl KernelConstraints {
    pub fn canonical_only() -> Self {
        KernelConstraints {
            canonical: true,
            ..Default::default()
        }
    }

    pub fn canonical_sup1() -> Self {
        KernelConstraints {
            canonical: true,
            sup_bound: Some(1.0),
            ..Default::default()
        }
    }
}

/// Deterministic kernel of the given order on row-1 axes, honoring the
/// constraints; identical seeds yield identical kernels.
pub fn random_kernel<K: Scalar>(
    space: &Arc<Space<K>>,
    order: usize,
    seed: u64,
    constraints: &KernelConstraints,
) -> Result<Kernel<K>> {
    if let Some(l2) = constraints.l2_bound {
        if l2 <= 0.0 {
            return Err(Error::InvalidParameter(
                "l2 bound must be positive for a nonzero kernel".into(),
            ));
        }
    }
    if let Some(sup) = constraints.sup_bound {
        if sup <= 0.0 {
            return Err(Error::InvalidParameter("sup bound must be positive".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = space.kernel_len(order)?;
    let values: Vec<K> = (0..len)
        .map(|_| K::from_ratio(rng.gen_range(-GRID..=GRID), GRID))
        .collect();
    let mut h = Kernel::new(space.clone(), row_labels(1, order), values)?;
    if constraints.canonical {
        h = h.canonical_projection()?;
    }
    if let Some(sup) = constraints.sup_bound {
        let radius = K::from_f64(sup);
        h = h.clip(&radius);
        if constraints.canonical {
            h = h.canonical_projection()?;
        }
    }
    // Scale down to the requested balls; scaling keeps canonicality.
    let mut factor = K::one();
    if let Some(sup) = constraints.sup_bound {
        let cur = h.sup_norm_value();
        let radius = K::from_f64(sup);
        if cur > radius && !cur.is_zero() {
            let s = radius / cur;
            if s < factor {
                factor = s;
            }
        }
    }
    if let Some(l2) = constraints.l2_bound {
        let cur = h.l2_norm();
        if cur > l2 {
            // Rounded toward zero so the scaled norm stays below the target
            // in exact mode too.
            let s = K::from_f64(l2 / cur * (1.0 - 1e-13));
            if s < factor {
                factor = s;
            }
        }
    }
    if factor != K::one() {
        h = h.scale(&factor);
    }
    if constraints.canonical {
        debug_assert!(h.is_canonical(if K::EXACT { 0.0 } else { 1e-10 }));
    }
    if let Some(sup) = constraints.sup_bound {
        debug_assert!(h.sup_norm() <= sup + 1e-12);
    }
    if let Some(l2) = constraints.l2_bound {
        debug_assert!(h.l2_norm() <= l2 + 1e-12);
    }
    Ok(h)
}

/// Seeded space with small exact rational weights (parts 1..=8).
pub fn random_space<K: Scalar>(num_atoms: usize, seed: u64) -> Result<Arc<Space<K>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5350_4143_4553); // "SPACES"
    let parts: Vec<i64> = (0..num_atoms).map(|_| rng.gen_range(1..=8)).collect();
    Space::from_parts(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn deterministic_per_seed() {
        let s = Space::<f64>::uniform(3).unwrap();
        let c = KernelConstraints::canonical_sup1();
        let a = random_kernel(&s, 2, 42, &c).unwrap();
        let b = random_kernel(&s, 2, 42, &c).unwrap();
        assert_eq!(a, b);
        let other = random_kernel(&s, 2, 43, &c).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn constraints_are_met() {
        let s = random_space::<f64>(4, 7).unwrap();
        for seed in 0..20 {
            let k = random_kernel(
                &s,
                2,
                seed,
                &KernelConstraints {
                    canonical: true,
                    sup_bound: Some(1.0),
                    l2_bound: Some(0.4),
                },
            )
            .unwrap();
            assert!(k.is_canonical(1e-10));
            assert!(k.sup_norm() <= 1.0 + 1e-12);
            assert!(k.l2_norm() <= 0.4 + 1e-12);
        }
    }

    #[test]
    fn exact_mode_is_exactly_canonical() {
        let s = random_space::<Rational>(3, 1).unwrap();
        for seed in 0..10 {
            let k = random_kernel(&s, 2, seed, &KernelConstraints::canonical_sup1()).unwrap();
            assert!(k.is_canonical(0.0));
            assert!(k.sup_norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn modes_agree_on_the_same_seed() {
        let sr = random_space::<Rational>(3, 9).unwrap();
        let sf = Space::<f64>::new(
            sr.atoms().to_vec(),
            sr.weights().iter().map(|w| w.to_f64()).collect(),
        )
        .unwrap();
        let c = KernelConstraints::canonical_sup1();
        let kr = random_kernel(&sr, 2, 5, &c).unwrap();
        let kf = random_kernel(&sf, 2, 5, &c).unwrap();
        for (a, b) in kr.values().iter().zip(kf.values()) {
            assert!((a.to_f64() - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn degenerate_requests_are_rejected() {
        let s = Space::<f64>::uniform(2).unwrap();
        let bad = KernelConstraints {
            canonical: false,
            sup_bound: None,
            l2_bound: Some(0.0),
        };
        assert!(random_kernel(&s, 1, 0, &bad).is_err());
    }
}
