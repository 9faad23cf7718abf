//! Direct evaluation of U-statistics, exact expectation oracles by
//! exhaustive sample enumeration, and seeded Monte Carlo estimation of
//! moments and tail probabilities.
//!
//! The workhorse is a counts-based evaluator: on a finite space the sum
//! over ordered tuples of distinct indices depends on the sample only
//! through its atom histogram, and equals a signed sum over set partitions
//! of the kernel coordinates (merge the coordinates in each block, contract
//! against the histogram, weight by `prod_B (-1)^(|B|-1) (|B|-1)!`). A
//! naive tuple loop is kept alongside as the independent oracle.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::scalar::Scalar;
use crate::vertex::Vertex;

/// Resource cap for the exhaustive expectation oracle.
pub const MAX_ASSIGNMENTS: usize = 10_000_000;

/// One realization `(xi_1, ..., xi_n)` as atom indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleAssignment {
    values: Vec<usize>,
}

impl SampleAssignment {
    pub fn new(values: Vec<usize>, num_atoms: usize) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&v| v >= num_atoms) {
            return Err(Error::InvalidParameter(format!(
                "sample entry {bad} is not an atom index (|X| = {num_atoms})"
            )));
        }
        Ok(SampleAssignment { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    /// Histogram of atom occurrences.
    pub fn counts(&self, num_atoms: usize) -> Vec<u64> {
        let mut c = vec![0u64; num_atoms];
        for &v in &self.values {
            c[v] += 1;
        }
        c
    }
}

/// Precomputed partition expansion of one kernel, for fast evaluation of
/// `k! I_{n,k}(f)` from sample histograms.
pub struct UstatEvaluator<K: Scalar> {
    order: usize,
    /// `(mu(pi), kernel with the blocks of pi merged)` per set partition.
    terms: Vec<(K, Kernel<K>)>,
}

impl<K: Scalar> UstatEvaluator<K> {
    pub fn new(f: &Kernel<K>) -> Result<Self> {
        let k = f.order();
        let mut terms = Vec::new();
        for blocks in set_partitions(k) {
            let mut coeff = K::one();
            let mut mapping: BTreeMap<Vertex, Vertex> = BTreeMap::new();
            for block in &blocks {
                let rep = f.axes()[block[0]];
                for &i in block {
                    mapping.insert(f.axes()[i], rep);
                }
                // (-1)^(|B|-1) (|B|-1)!
                for s in 1..block.len() {
                    coeff = coeff * K::from_int(-(s as i64));
                }
            }
            terms.push((coeff, f.substitute(&mapping)?));
        }
        Ok(UstatEvaluator { order: k, terms })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Sum over ordered k-tuples of distinct indices of `f` at the sampled
    /// atoms, i.e. `k! I_{n,k}(f)`, from the sample histogram.
    pub fn distinct_sum(&self, counts: &[u64]) -> K {
        let weights: Vec<K> = counts.iter().map(|&c| K::from_int(c as i64)).collect();
        let mut total = K::zero();
        for (coeff, merged) in &self.terms {
            total = total + coeff.clone() * contract_all(merged, &weights);
        }
        total
    }
}

/// Full contraction of a kernel against one weight vector per axis.
fn contract_all<K: Scalar>(kernel: &Kernel<K>, weights: &[K]) -> K {
    let base = weights.len();
    let k = kernel.order();
    let mut idx = vec![0usize; k];
    let mut total = K::zero();
    for v in kernel.values() {
        let mut w = v.clone();
        for &d in &idx {
            w = w * weights[d].clone();
        }
        total = total + w;
        crate::kernel::bump(&mut idx, base);
    }
    total
}

/// Set partitions of `{0..k}` as sorted blocks, via restricted-growth
/// strings; deterministic order.
fn set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(
        i: usize,
        k: usize,
        max_used: usize,
        assignment: &mut Vec<usize>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if i == k {
            let mut blocks = vec![Vec::new(); max_used + 1];
            for (e, &b) in assignment.iter().enumerate() {
                blocks[b].push(e);
            }
            out.push(blocks);
            return;
        }
        for b in 0..=max_used + 1 {
            assignment[i] = b;
            rec(i + 1, k, max_used.max(b), assignment, out);
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut assignment = vec![0usize; k];
    rec(1, k, 0, &mut assignment, &mut out);
    out
}

/// `k! I_{n,k}(f)` at a sample: the sum over ordered distinct index
/// tuples. Errors when `n < k`.
pub fn ustat_sum<K: Scalar>(f: &Kernel<K>, sample: &SampleAssignment) -> Result<K> {
    if sample.n() < f.order() {
        return Err(Error::SampleTooShort {
            n: sample.n(),
            k: f.order(),
        });
    }
    let ev = UstatEvaluator::new(f)?;
    Ok(ev.distinct_sum(&sample.counts(f.space().len())))
}

/// `I_{n,k}(f)` at a sample, with the `1/k!` normalization of the
/// U-statistic definition; an order-0 kernel returns its scalar.
pub fn evaluate_ustat<K: Scalar>(f: &Kernel<K>, sample: &SampleAssignment) -> Result<K> {
    let sum = ustat_sum(f, sample)?;
    Ok(sum / K::from_int(factorial_i64(f.order())))
}

/// Literal definition of `k! I_{n,k}(f)`: loops over ordered tuples of
/// distinct indices. Exponential; test oracle only.
pub fn ustat_sum_naive<K: Scalar>(f: &Kernel<K>, sample: &SampleAssignment) -> Result<K> {
    if sample.n() < f.order() {
        return Err(Error::SampleTooShort {
            n: sample.n(),
            k: f.order(),
        });
    }
    fn rec<K: Scalar>(
        f: &Kernel<K>,
        sample: &SampleAssignment,
        tuple: &mut Vec<usize>,
        depth: usize,
        total: &mut K,
    ) {
        if depth == tuple.len() {
            let atoms: Vec<usize> = tuple.iter().map(|&j| sample.values()[j]).collect();
            *total = total.clone() + f.eval(&atoms).clone();
            return;
        }
        for j in 0..sample.n() {
            if tuple[..depth].contains(&j) {
                continue;
            }
            tuple[depth] = j;
            rec(f, sample, tuple, depth + 1, total);
        }
    }
    let k = f.order();
    if k == 0 {
        return Ok(f.scalar_value().clone());
    }
    let mut total = K::zero();
    let mut tuple = vec![0usize; k];
    rec(f, sample, &mut tuple, 0, &mut total);
    Ok(total)
}

pub(crate) fn factorial_i64(k: usize) -> i64 {
    (1..=k as i64).product::<i64>().max(1)
}

/// `E[prod_l k_l! I_{n,k_l}(f_l)]` by exhaustive enumeration of all
/// `|X|^n` sample assignments, weighted by `mu^n`. No normalization is
/// applied, so the value is exact in rational mode.
pub fn exact_expectation_unnormalized<K: Scalar>(fs: &[Kernel<K>], n: usize) -> Result<K> {
    let space = fs
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty factor list".into()))?
        .space()
        .clone();
    for f in fs {
        if f.space() != &space {
            return Err(Error::SpaceMismatch);
        }
        if f.order() > n {
            return Err(Error::SampleTooShort { n, k: f.order() });
        }
    }
    let base = space.len();
    let total = base
        .checked_pow(n as u32)
        .filter(|&t| t <= MAX_ASSIGNMENTS)
        .ok_or_else(|| {
            Error::ResourceLimit(format!(
                "{base}^{n} sample assignments exceed {MAX_ASSIGNMENTS}; use Monte Carlo instead"
            ))
        })?;
    let evaluators: Vec<UstatEvaluator<K>> =
        fs.iter().map(UstatEvaluator::new).collect::<Result<_>>()?;
    // Memoize per histogram: the factor values depend on the assignment
    // only through its atom counts.
    let mut memo: BTreeMap<Vec<u64>, K> = BTreeMap::new();
    let mut acc = K::zero();
    let mut omega = vec![0usize; n];
    for _ in 0..total {
        let mut weight = K::one();
        let mut counts = vec![0u64; base];
        for &a in &omega {
            weight = weight * space.weight(a).clone();
            counts[a] += 1;
        }
        let prod = memo
            .entry(counts.clone())
            .or_insert_with(|| {
                let mut p = K::one();
                for ev in &evaluators {
                    p = p * ev.distinct_sum(&counts);
                }
                p
            })
            .clone();
        acc = acc + weight * prod;
        crate::kernel::bump(&mut omega, base);
    }
    Ok(acc)
}

/// `E[prod_l k_l! n^(-k_l/2) I_{n,k_l}(f_l)]` as a float.
pub fn exact_expectation<K: Scalar>(fs: &[Kernel<K>], n: usize) -> Result<f64> {
    let total_order: usize = fs.iter().map(|f| f.order()).sum();
    let raw = exact_expectation_unnormalized(fs, n)?;
    Ok(raw.to_f64() * (n as f64).powf(-(total_order as f64) / 2.0))
}

/// Draws one atom index by inverse CDF over the atom order.
fn sample_atom(cdf: &[f64], u: f64) -> usize {
    cdf.iter()
        .position(|&c| u < c)
        .unwrap_or(cdf.len() - 1)
}

/// Values of the normalized statistic `T = k! n^(-k/2) I_{n,k}(f)` for
/// `samples` independent seeded samples. The stream for sample `i` is
/// `ChaCha8(seed, stream = i)`, so results are bit-identical regardless
/// of the number of worker threads.
pub fn mc_statistic_samples(
    f: &Kernel<f64>,
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    if n < f.order() {
        return Err(Error::SampleTooShort { n, k: f.order() });
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let ev = UstatEvaluator::new(f)?;
    let cdf = f.space().cdf();
    let base = f.space().len();
    let scale = (n as f64).powf(-(f.order() as f64) / 2.0);
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let mut counts = vec![0u64; base];
            for _ in 0..n {
                let u: f64 = rng.gen();
                counts[sample_atom(&cdf, u)] += 1;
            }
            ev.distinct_sum(&counts) * scale
        })
        .collect();
    Ok(values)
}

/// Monte Carlo estimate of one even moment, with its standard error.
#[derive(Clone, Copy, Debug)]
pub struct McMoment {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Empirical mean of `(k! n^(-k/2) I_{n,k}(f))^(2M)` over seeded iid
/// samples; deterministic for a fixed seed.
pub fn mc_moment(f: &Kernel<f64>, n: usize, m: usize, samples: u64, seed: u64) -> Result<McMoment> {
    let values = mc_statistic_samples(f, n, samples, seed)?;
    let powers: Vec<f64> = values.iter().map(|t| f64::powi(*t, 2 * m as i32)).collect();
    let mean = powers.iter().sum::<f64>() / samples as f64;
    let var = powers.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>()
        / (samples as f64 - 1.0).max(1.0);
    Ok(McMoment {
        mean,
        std_error: (var / samples as f64).sqrt(),
        samples,
        seed,
    })
}

/// One empirical tail point with a 95% binomial confidence interval.
#[derive(Clone, Copy, Debug)]
pub struct TailEstimate {
    pub u: f64,
    pub p_hat: f64,
    /// Half-width of the 95% interval `[lower95, upper95]`.
    pub ci_halfwidth: f64,
    pub lower95: f64,
    pub upper95: f64,
    pub samples: u64,
    pub seed: u64,
}

const Z95: f64 = 1.959963984540054;

/// 95% binomial interval: normal approximation away from the boundary,
/// Wilson near `p_hat` of 0 or 1 (tails are the object of study, so the
/// boundary matters).
fn binomial_ci(successes: u64, m: u64) -> (f64, f64) {
    let mf = m as f64;
    let p = successes as f64 / mf;
    let near_boundary = successes < 5 || m - successes < 5;
    if near_boundary {
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / mf;
        let center = (p + z2 / (2.0 * mf)) / denom;
        let hw = Z95 * ((p * (1.0 - p) / mf + z2 / (4.0 * mf * mf)).sqrt()) / denom;
        // The Wilson interval contains p-hat; guard against rounding at the
        // boundary.
        ((center - hw).max(0.0).min(p), (center + hw).min(1.0).max(p))
    } else {
        let hw = Z95 * (p * (1.0 - p) / mf).sqrt();
        ((p - hw).max(0.0), (p + hw).min(1.0))
    }
}

/// Empirical `P(k! n^(-k/2) |I_{n,k}(f)| > u)` on a grid of thresholds,
/// all from one set of seeded samples.
pub fn mc_tail(
    f: &Kernel<f64>,
    n: usize,
    u_grid: &[f64],
    samples: u64,
    seed: u64,
) -> Result<Vec<TailEstimate>> {
    if u_grid.iter().any(|&u| u < 0.0) {
        return Err(Error::InvalidParameter("thresholds must be >= 0".into()));
    }
    let values = mc_statistic_samples(f, n, samples, seed)?;
    Ok(tails_from_values(&values, u_grid, samples, seed))
}

/// Tail estimates computed from an existing vector of statistic values.
pub fn tails_from_values(
    values: &[f64],
    u_grid: &[f64],
    samples: u64,
    seed: u64,
) -> Vec<TailEstimate> {
    u_grid
        .iter()
        .map(|&u| {
            let successes = values.iter().filter(|t| t.abs() > u).count() as u64;
            let p_hat = successes as f64 / samples as f64;
            let (lower95, upper95) = binomial_ci(successes, samples);
            TailEstimate {
                u,
                p_hat,
                ci_halfwidth: (upper95 - lower95) / 2.0,
                lower95,
                upper95,
                samples,
                seed,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::space::Space;

    fn pm_one(space: &std::sync::Arc<Space<Rational>>) -> Kernel<Rational> {
        Kernel::univariate(
            space.clone(),
            vec![Rational::from_int(1), Rational::from_int(-1)],
        )
        .unwrap()
    }

    #[test]
    fn order_one_sum() {
        let s = Space::<Rational>::uniform(2).unwrap();
        let f = pm_one(&s);
        let sample = SampleAssignment::new(vec![0, 1], 2).unwrap();
        assert!(Scalar::is_zero(&evaluate_ustat(&f, &sample).unwrap()));
    }

    #[test]
    fn order_two_on_two_points_is_symmetrized_value() {
        let s = Space::<Rational>::uniform(2).unwrap();
        let f = Kernel::from_fn(s, vec![Vertex::plain(1, 1), Vertex::plain(1, 2)], |idx| {
            Rational::from_int((idx[0] + 2 * idx[1]) as i64)
        })
        .unwrap();
        let sample = SampleAssignment::new(vec![0, 1], 2).unwrap();
        // two ordered pairs, divided by 2!
        let expect =
            (f.eval(&[0, 1]).clone() + f.eval(&[1, 0]).clone()) / Rational::from_int(2);
        assert_eq!(evaluate_ustat(&f, &sample).unwrap(), expect);
    }

    #[test]
    fn worked_example_order_two() {
        // f = [[0,1],[1,0]] on X={a,b}, sample (a,a,b):
        // six ordered pairs sum to 4, I = 4/2 = 2.
        let s = Space::<Rational>::uniform(2).unwrap();
        let f = Kernel::from_fn(s, vec![Vertex::plain(1, 1), Vertex::plain(1, 2)], |idx| {
            Rational::from_int(((idx[0] + idx[1]) % 2) as i64)
        })
        .unwrap();
        let sample = SampleAssignment::new(vec![0, 0, 1], 2).unwrap();
        assert_eq!(evaluate_ustat(&f, &sample).unwrap(), Rational::from_int(2));
    }

    #[test]
    fn sample_too_short_errors() {
        let s = Space::<Rational>::uniform(2).unwrap();
        let f = pm_one(&s);
        let g = f.tensor_product(&f.retag_row(2).unwrap()).unwrap();
        let sample = SampleAssignment::new(vec![0], 2).unwrap();
        assert!(matches!(
            evaluate_ustat(&g, &sample),
            Err(Error::SampleTooShort { n: 1, k: 2 })
        ));
    }

    #[test]
    fn counts_evaluator_matches_naive_tuples() {
        // Third route: the partition expansion against the literal loop.
        let s = Space::<Rational>::from_parts(&[2, 1, 1]).unwrap();
        let mut state = 7u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 33) % 9) as i64 - 4
        };
        for k in 1..=3usize {
            let axes: Vec<Vertex> = (1..=k as u32).map(|j| Vertex::plain(1, j)).collect();
            let f = Kernel::from_fn(s.clone(), axes, |_| Rational::from_ratio(next(), 4)).unwrap();
            for sample_vals in [vec![0, 1, 2, 0], vec![2, 2, 2, 1], vec![0, 0, 1, 2]] {
                let sample = SampleAssignment::new(sample_vals, 3).unwrap();
                assert_eq!(
                    ustat_sum(&f, &sample).unwrap(),
                    ustat_sum_naive(&f, &sample).unwrap()
                );
            }
        }
    }

    #[test]
    fn order_zero_convention() {
        let s = Space::<Rational>::uniform(2).unwrap();
        let c = Kernel::scalar(s, Rational::from_ratio(5, 3));
        let sample = SampleAssignment::new(vec![0, 1, 1], 2).unwrap();
        assert_eq!(
            evaluate_ustat(&c, &sample).unwrap(),
            Rational::from_ratio(5, 3)
        );
    }

    #[test]
    fn canonical_kernel_has_zero_expectation() {
        let s = Space::<Rational>::from_parts(&[1, 3]).unwrap();
        let f = Kernel::univariate(s, vec![Rational::from_int(3), Rational::from_int(-1)])
            .unwrap()
            .canonical_projection()
            .unwrap();
        for n in 2..=4 {
            assert!(Scalar::is_zero(
                &exact_expectation_unnormalized(&[f.clone()], n).unwrap()
            ));
        }
    }

    fn relabeled_to_rows(f: &Kernel<Rational>, rows: &[u32]) -> Kernel<Rational> {
        let mut m = BTreeMap::new();
        for (axis, &r) in f.axes().iter().zip(rows) {
            m.insert(*axis, Vertex::plain(r, 1));
        }
        f.substitute(&m).unwrap()
    }

    #[test]
    fn second_moment_closed_forms() {
        let s = Space::<Rational>::from_parts(&[1, 1, 2]).unwrap();
        let f = Kernel::univariate(
            s.clone(),
            vec![
                Rational::from_int(2),
                Rational::from_int(-1),
                Rational::from_ratio(1, 2),
            ],
        )
        .unwrap()
        .canonical_projection()
        .unwrap();
        // E[n^{-1} (I_{n,1} f)^2] = ||f||_2^2 for canonical f, any n:
        // unnormalized E[(sum f)^2] = n ||f||_2^2
        for n in 1..=5usize {
            let g = relabeled_to_rows(&f, &[2]);
            let raw = exact_expectation_unnormalized(&[f.clone(), g], n).unwrap();
            assert_eq!(raw, f.l2_norm_sq() * Rational::from_int(n as i64));
        }
        // E[(2! n^{-1} I_{n,2} f2)^2] = 2((n-1)/n) ||f2||_2^2 for symmetric
        // canonical f2; unnormalized form carries n^2.
        let f2 = f.tensor_product(&f.retag_row(2).unwrap()).unwrap();
        let mut m = BTreeMap::new();
        m.insert(Vertex::plain(1, 1), Vertex::plain(3, 1));
        m.insert(Vertex::plain(2, 1), Vertex::plain(4, 1));
        let g2 = f2.substitute(&m).unwrap();
        let n = 4usize;
        let raw = exact_expectation_unnormalized(&[f2.clone(), g2], n).unwrap();
        let expect = Rational::from_int(2)
            * Rational::from_ratio((n - 1) as i64, n as i64)
            * f2.l2_norm_sq()
            * Rational::from_int((n * n) as i64);
        assert_eq!(raw, expect);
    }

    #[test]
    fn variance_bound_from_l2() {
        // exact E[(n^{-k/2} k! I)^2] <= k! sigma^2 with sigma^2 = ||f||_2^2
        let s = Space::<f64>::from_parts(&[1, 2, 1]).unwrap();
        let f0 = Kernel::univariate(s.clone(), vec![0.8, -0.3, 0.1])
            .unwrap()
            .canonical_projection()
            .unwrap();
        let f = f0.tensor_product(&f0.retag_row(2).unwrap()).unwrap();
        let mut m = BTreeMap::new();
        m.insert(Vertex::plain(1, 1), Vertex::plain(3, 1));
        m.insert(Vertex::plain(2, 1), Vertex::plain(4, 1));
        let g = f.substitute(&m).unwrap();
        let n = 5;
        let m2 = exact_expectation(&[f.clone(), g], n).unwrap();
        assert!(m2 <= 2.0 * f.l2_norm_sq() + 1e-12);
    }

    #[test]
    fn hoeffding_consistency_pointwise() {
        // k! I_{n,k}(h) = sum_S (n-|S|)!/(n-k)! |S|! I_{n,|S|}(h_S)
        let s = Space::<Rational>::from_parts(&[3, 1]).unwrap();
        let h = Kernel::from_fn(
            s.clone(),
            vec![Vertex::plain(1, 1), Vertex::plain(1, 2)],
            |idx| Rational::from_ratio(idx[0] as i64 * 2 + (idx[1] * idx[1]) as i64 - 1, 3),
        )
        .unwrap();
        let n = 4usize;
        let parts = h.hoeffding_decompose().unwrap();
        let mut omega = vec![0usize; n];
        for _ in 0..(2usize.pow(n as u32)) {
            let sample = SampleAssignment::new(omega.clone(), 2).unwrap();
            let lhs = ustat_sum(&h, &sample).unwrap();
            let mut rhs = Rational::zero();
            for (subset, comp) in &parts {
                let s_len = subset.len();
                // (n-|S|)!/(n-k)! extensions of a distinct |S|-tuple
                let mut ext = Rational::one();
                for t in (n - h.order() + 1)..=(n - s_len) {
                    ext = ext * Rational::from_int(t as i64);
                }
                rhs = rhs + ext * ustat_sum(comp, &sample).unwrap();
            }
            assert_eq!(lhs, rhs);
            crate::kernel::bump(&mut omega, 2);
        }
    }

    #[test]
    fn mc_zero_kernel_and_determinism() {
        let s = Space::<f64>::uniform(2).unwrap();
        let z = Kernel::univariate(s.clone(), vec![0.0, 0.0]).unwrap();
        let m = mc_moment(&z, 8, 1, 500, 42).unwrap();
        assert_eq!(m.mean, 0.0);
        let f = Kernel::univariate(s, vec![1.0, -1.0]).unwrap();
        let a = mc_statistic_samples(&f, 8, 300, 7).unwrap();
        let b = mc_statistic_samples(&f, 8, 300, 7).unwrap();
        assert_eq!(a, b);
        let c = mc_statistic_samples(&f, 8, 300, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mc_moment_within_four_standard_errors_of_exact() {
        let s = Space::<f64>::from_parts(&[1, 1, 2]).unwrap();
        let f = Kernel::univariate(s, vec![1.0, -0.5, 0.25])
            .unwrap()
            .canonical_projection()
            .unwrap();
        let n = 6;
        let mut m = BTreeMap::new();
        m.insert(Vertex::plain(1, 1), Vertex::plain(2, 1));
        let g = f.substitute(&m).unwrap();
        let exact = exact_expectation(&[f.clone(), g], n).unwrap();
        let mc = mc_moment(&f, n, 1, 40_000, 11).unwrap();
        assert!(
            (mc.mean - exact).abs() <= 4.0 * mc.std_error.max(1e-12),
            "mc {} vs exact {} (se {})",
            mc.mean,
            exact,
            mc.std_error
        );
    }

    #[test]
    fn tail_grid_properties() {
        let s = Space::<f64>::uniform(2).unwrap();
        let f = Kernel::univariate(s, vec![1.0, -1.0]).unwrap();
        let n = 9;
        let grid = [0.0, 0.5, 1.0, 2.0, 100.0];
        let tails = mc_tail(&f, n, &grid, 2000, 3).unwrap();
        // u = 0: the odd-n sum of +-1 is never zero, so p_hat = 1
        assert_eq!(tails[0].p_hat, 1.0);
        // beyond the envelope n^{k/2} sup|f| the statistic cannot reach
        assert_eq!(tails.last().unwrap().p_hat, 0.0);
        // monotone non-increasing in u on a fixed seed
        for w in tails.windows(2) {
            assert!(w[0].p_hat >= w[1].p_hat);
        }
        for t in &tails {
            assert!(t.lower95 <= t.p_hat && t.p_hat <= t.upper95);
            assert!(t.ci_halfwidth >= 0.0);
        }
    }
}
