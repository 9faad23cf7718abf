//! Hermite polynomials, exact moments of Gaussian polynomial chaos, and
//! exact tail probabilities for product kernels.
//!
//! For a rank-one kernel `sigma f0 (x) ... (x) f0` with unit-norm `f0`,
//! the order-k chaos element equals `sigma H_k(eta)` with `eta` standard
//! normal, so its moments reduce to Gaussian monomial moments
//! `E eta^(2m) = (2m-1)!!` and its tails reduce to one-dimensional events
//! `|H_k(eta)| > u/sigma` whose boundary is a finite set of polynomial
//! roots. Moments are computed in exact big-integer arithmetic; tails go
//! through root isolation and the complementary error function.

use num::bigint::BigInt;
use num::traits::ToPrimitive;

use crate::error::{Error, Result};

/// Probabilists' Hermite polynomial with leading coefficient 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HermitePoly {
    degree: usize,
    /// `coeffs[i]` multiplies `x^i`; `coeffs[degree] = 1`.
    coeffs: Vec<BigInt>,
}

impl HermitePoly {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().expect("hermite coefficient fits f64"))
            .collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coeffs_f64(), x)
    }
}

/// `H_k` by the recurrence `H_{k+1}(x) = x H_k(x) - k H_{k-1}(x)`.
pub fn hermite(k: usize) -> HermitePoly {
    let mut prev = vec![BigInt::from(1)]; // H_0
    if k == 0 {
        return HermitePoly {
            degree: 0,
            coeffs: prev,
        };
    }
    let mut cur = vec![BigInt::from(0), BigInt::from(1)]; // H_1 = x
    for m in 1..k {
        let mut next = vec![BigInt::from(0); m + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c; // x * H_m
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c * BigInt::from(m); // - m * H_{m-1}
        }
        prev = cur;
        cur = next;
    }
    HermitePoly {
        degree: k,
        coeffs: cur,
    }
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::from(0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `(2m-1)!!` as a big integer.
fn double_factorial_big(two_m: usize) -> BigInt {
    let mut acc = BigInt::from(1);
    let mut i = 1usize;
    while i + 1 < two_m {
        i += 2;
        acc *= BigInt::from(i);
    }
    acc
}

/// `E[p(eta)]` for a polynomial with integer coefficients and standard
/// normal `eta`: odd powers vanish, `E eta^(2j) = (2j-1)!!`.
pub fn gaussian_poly_moment(coeffs: &[BigInt]) -> BigInt {
    let mut total = BigInt::from(0);
    for (i, c) in coeffs.iter().enumerate() {
        if i % 2 == 0 {
            total += c * double_factorial_big(i);
        }
    }
    total
}

/// Exact integer value of `E[H_k(eta)^(2M)]`.
pub fn hermite_power_moment(k: usize, two_m: usize) -> Result<BigInt> {
    if two_m == 0 {
        return Ok(BigInt::from(1));
    }
    if two_m % 2 != 0 {
        return Err(Error::InvalidParameter(
            "moment order must be even".into(),
        ));
    }
    let h = hermite(k);
    let mut p = h.coeffs.clone();
    for _ in 1..two_m {
        p = poly_mul(&p, &h.coeffs);
    }
    Ok(gaussian_poly_moment(&p))
}

/// `E[(sigma H_k(eta))^(2M)]`: the even moments of the rank-one chaos
/// element of order `k` with L2 norm `sigma`.
pub fn product_kernel_moment(k: usize, sigma: f64, two_m: usize) -> Result<f64> {
    let int_part = hermite_power_moment(k, two_m)?;
    Ok(int_part.to_f64().unwrap_or(f64::INFINITY) * sigma.powi(two_m as i32))
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as f64)
        .collect()
}

/// All real roots of a polynomial (`coeffs[i]` multiplies `x^i`), by
/// recursive bisection on the monotone intervals delimited by the
/// derivative's roots; refined to ~1e-13 absolute.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|&v| v == 0.0) {
        c.pop();
    }
    if c.len() <= 1 {
        return Vec::new();
    }
    if c.len() == 2 {
        return vec![-c[0] / c[1]];
    }
    let lead = *c.last().unwrap();
    let bound = 1.0
        + c[..c.len() - 1]
            .iter()
            .map(|v| (v / lead).abs())
            .fold(0.0f64, f64::max);
    let mut cuts = real_roots(&derivative(&c));
    cuts.retain(|x| x.abs() < bound);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut points = vec![-bound];
    points.extend(cuts);
    points.push(bound);
    let mut roots = Vec::new();
    for w in points.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (fa, fb) = (horner(&c, a), horner(&c, b));
        if fa == 0.0 {
            push_root(&mut roots, a);
            continue;
        }
        if fb == 0.0 {
            // picked up as the left end of the next interval
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        for _ in 0..120 {
            let mid = 0.5 * (a + b);
            let fm = horner(&c, mid);
            if fm == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if fm.signum() == fa.signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        push_root(&mut roots, 0.5 * (a + b));
    }
    // right end of the last interval
    if horner(&c, bound) == 0.0 {
        push_root(&mut roots, bound);
    }
    roots
}

fn push_root(roots: &mut Vec<f64>, x: f64) {
    if roots.iter().all(|r| (r - x).abs() > 1e-11) {
        roots.push(x);
    }
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(a < eta <= b)` with full tail accuracy at both ends.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::INFINITY {
        return 1.0;
    }
    if a == f64::NEG_INFINITY {
        return normal_cdf(b);
    }
    if b == f64::INFINITY {
        return 0.5 * libm::erfc(a / std::f64::consts::SQRT_2);
    }
    // Difference of upper tails keeps accuracy when both ends are far out.
    let upper_a = 0.5 * libm::erfc(a / std::f64::consts::SQRT_2);
    let upper_b = 0.5 * libm::erfc(b / std::f64::consts::SQRT_2);
    (upper_a - upper_b).max(0.0)
}

/// Exact `P(sigma |H_k(eta)| > u)`: the level set `{|H_k| > u/sigma}` is a
/// finite union of intervals delimited by the roots of `H_k -+ u/sigma`,
/// and each interval carries an exact normal mass.
pub fn example2_exact_tail(k: usize, sigma: f64, u: f64) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    if u < 0.0 {
        return Err(Error::InvalidParameter("threshold must be >= 0".into()));
    }
    if u == 0.0 {
        // roots of H_k have measure zero
        return Ok(1.0);
    }
    let t = u / sigma;
    let h = hermite(k).coeffs_f64();
    let mut cuts = Vec::new();
    for shift in [-t, t] {
        let mut shifted = h.clone();
        shifted[0] += shift;
        cuts.extend(real_roots(&shifted));
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-11);
    let mut total = 0.0;
    let mut left = f64::NEG_INFINITY;
    for i in 0..=cuts.len() {
        let right = cuts.get(i).copied().unwrap_or(f64::INFINITY);
        let probe = match (left.is_finite(), right.is_finite()) {
            (true, true) => 0.5 * (left + right),
            (true, false) => left + 1.0,
            (false, true) => right - 1.0,
            (false, false) => 0.0,
        };
        if horner(&h, probe).abs() > t {
            total += normal_mass(left, right);
        }
        left = right;
    }
    Ok(total.min(1.0))
}

/// Largest constant making the sharpness lower bound hold on a grid.
#[derive(Clone, Debug)]
pub struct LowerBoundReport {
    /// The calibrated constant: `min_u tail(u) * ((u/sigma)^(1/k) + 1)
    /// * exp((u/sigma)^(2/k) / 2)`.
    pub c_bar: f64,
    /// Per grid point: `(u, exact tail, lower-bound curve at c_bar)`.
    pub points: Vec<(f64, f64, f64)>,
}

/// Calibrates the largest constant for which the lower-bound curve
/// `C / ((u/sigma)^(1/k) + 1) * exp(-(u/sigma)^(2/k) / 2)` stays below the
/// exact tail at every grid point; the constant depends on `u` only
/// through `u/sigma`.
pub fn verify_lower_bound_17(k: usize, sigma: f64, u_grid: &[f64]) -> Result<LowerBoundReport> {
    if u_grid.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let mut c_bar = f64::INFINITY;
    let mut tails = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        let tail = example2_exact_tail(k, sigma, u)?;
        let r = u / sigma;
        let envelope = (r.powf(1.0 / k as f64) + 1.0) * (r.powf(2.0 / k as f64) / 2.0).exp();
        c_bar = c_bar.min(tail * envelope);
        tails.push((u, tail));
    }
    let points = tails
        .into_iter()
        .map(|(u, tail)| {
            let r = u / sigma;
            let curve = c_bar / (r.powf(1.0 / k as f64) + 1.0)
                * (-r.powf(2.0 / k as f64) / 2.0).exp();
            (u, tail, curve)
        })
        .collect();
    Ok(LowerBoundReport { c_bar, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_small_polynomials() {
        assert_eq!(hermite(1).coeffs(), &[BigInt::from(0), BigInt::from(1)]);
        assert_eq!(
            hermite(2).coeffs(),
            &[BigInt::from(-1), BigInt::from(0), BigInt::from(1)]
        );
        assert_eq!(
            hermite(3).coeffs(),
            &[
                BigInt::from(0),
                BigInt::from(-3),
                BigInt::from(0),
                BigInt::from(1)
            ]
        );
    }

    #[test]
    fn hermite_structural_invariants() {
        for k in 1..=10 {
            let h = hermite(k);
            assert_eq!(h.degree(), k);
            assert_eq!(h.coeffs()[k], BigInt::from(1), "leading coefficient");
            assert_eq!(h.coeffs()[k - 1], BigInt::from(0), "subleading vanishes");
        }
    }

    #[test]
    fn hermite_orthogonality_exact() {
        // E[H_j H_k] = 0 for j != k, = k! for j = k
        for j in 0..=5usize {
            for k in 0..=5usize {
                let p = poly_mul(hermite(j).coeffs(), hermite(k).coeffs());
                let m = gaussian_poly_moment(&p);
                if j == k {
                    let fact: BigInt = (1..=k).map(BigInt::from).product::<BigInt>()
                        * BigInt::from(1);
                    assert_eq!(m, if k == 0 { BigInt::from(1) } else { fact });
                } else {
                    assert_eq!(m, BigInt::from(0));
                }
            }
        }
    }

    #[test]
    fn product_kernel_moments() {
        assert_eq!(product_kernel_moment(1, 1.0, 2).unwrap(), 1.0);
        // E (eta^2 - 1)^2 = 3 - 2 + 1 = 2
        assert_eq!(product_kernel_moment(2, 1.0, 2).unwrap(), 2.0);
        // E (eta^2 - 1)^4 = 105 - 60 + 18 - 4 + 1 = 60
        assert_eq!(product_kernel_moment(2, 1.0, 4).unwrap(), 60.0);
        // E (eta^3 - 3 eta)^4 = 10395 - 11340 + 5670 - 1620 + 243 = 3348
        assert_eq!(product_kernel_moment(3, 1.0, 4).unwrap(), 3348.0);
        // sigma scales out as sigma^(2M)
        let s = product_kernel_moment(2, 0.5, 4).unwrap();
        assert!((s - 60.0 * 0.5f64.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_moment_bound_consistency() {
        // E[(H_k)^(2M)] <= (2kM-1)!! for desk-scale (k, M)
        for k in 1..=3usize {
            for m in 1..=3usize {
                if 2 * k * m > 12 {
                    continue;
                }
                let val = hermite_power_moment(k, 2 * m).unwrap();
                let bound = crate::diagrams::double_factorial_pairings(2 * k * m).unwrap();
                assert!(
                    val <= BigInt::from(bound),
                    "k={k} M={m}: {val} > {bound}"
                );
            }
        }
    }

    #[test]
    fn roots_of_small_polynomials() {
        // x^2 - 1
        let r = real_roots(&[-1.0, 0.0, 1.0]);
        assert_eq!(r.len(), 2);
        assert!((r[0] + 1.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);
        // x^3 - 3x: roots at -sqrt(3), 0, sqrt(3)
        let mut r = real_roots(&[0.0, -3.0, 0.0, 1.0]);
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(r.len(), 3);
        assert!((r[0] + 3f64.sqrt()).abs() < 1e-12);
        assert!(r[1].abs() < 1e-12);
        assert!((r[2] - 3f64.sqrt()).abs() < 1e-12);
        // no real roots
        assert!(real_roots(&[1.0, 0.0, 1.0]).is_empty());
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
        // deep tails keep full relative accuracy through erfc
        let far = example2_exact_tail(1, 1.0, 10.0).unwrap();
        assert!(far > 0.0 && far < 1e-22);
    }

    #[test]
    fn exact_tail_order_one_closed_form() {
        for (sigma, u) in [(1.0, 0.5), (1.0, 3.0), (2.0, 1.0), (0.5, 4.0)] {
            let got = example2_exact_tail(1, sigma, u).unwrap();
            let expect = libm::erfc(u / sigma / std::f64::consts::SQRT_2);
            assert!((got - expect).abs() <= 1e-14, "sigma={sigma} u={u}");
        }
    }

    #[test]
    fn exact_tail_order_two_closed_form() {
        // P(|eta^2 - 1| > 1) = P(eta^2 > 2) = erfc(1)
        let got = example2_exact_tail(2, 1.0, 1.0).unwrap();
        assert!((got - libm::erfc(1.0)).abs() < 1e-14);
        // u = 0: roots have measure zero
        assert_eq!(example2_exact_tail(2, 1.0, 0.0).unwrap(), 1.0);
        // general u: P(|eta^2-1| > u) = P(eta^2 > 1+u) + P(eta^2 < 1-u)
        for u in [0.25, 0.5, 2.0, 5.0] {
            let got = example2_exact_tail(2, 1.0, u).unwrap();
            let upper = libm::erfc(((1.0 + u) as f64).sqrt() / std::f64::consts::SQRT_2);
            let lower = if u < 1.0 {
                1.0 - libm::erfc(((1.0 - u) as f64).sqrt() / std::f64::consts::SQRT_2)
            } else {
                0.0
            };
            assert!((got - (upper + lower)).abs() < 1e-13, "u={u}");
        }
    }

    #[test]
    fn exact_tail_monotone_and_right_continuous() {
        for k in 1..=3usize {
            let mut prev = 1.0;
            for i in 0..=40 {
                let u = 0.25 * i as f64;
                let t = example2_exact_tail(k, 1.0, u).unwrap();
                assert!(t <= prev + 1e-13, "k={k} u={u}");
                // right continuity probe
                let t_eps = example2_exact_tail(k, 1.0, u + 1e-9).unwrap();
                assert!((t - t_eps).abs() < 1e-4, "k={k} u={u}");
                prev = t;
            }
        }
    }

    #[test]
    fn lower_bound_constant_positive_and_scale_invariant() {
        let grid: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
        for k in 1..=3usize {
            let r = verify_lower_bound_17(k, 1.0, &grid).unwrap();
            assert!(r.c_bar > 0.0, "k={k}");
            for (_, tail, curve) in &r.points {
                assert!(curve <= &(tail + 1e-15));
            }
            // same constant for (sigma=2, grid 2U)
            let grid2: Vec<f64> = grid.iter().map(|u| 2.0 * u).collect();
            let r2 = verify_lower_bound_17(k, 2.0, &grid2).unwrap();
            assert!((r.c_bar - r2.c_bar).abs() <= 1e-12 * r.c_bar.max(1.0));
        }
    }
}
