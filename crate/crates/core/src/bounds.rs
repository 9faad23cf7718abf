//! Closed-form evaluators for the Bernstein-type tail bounds and the
//! Gaussian/U-statistic moment bounds, plus the Markov chaining that turns
//! a moment oracle into a tail bound.
//!
//! Several bounds contain constants the theory only proves to exist.
//! Every evaluator therefore takes explicit constants; a `calibrate`
//! helper computes the minimal constant making a bound hold on a supplied
//! dataset, and reports carry a provenance tag so calibrated values are
//! never presented as given ones.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Where a constant's value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PaperGiven,
    User,
    Calibrated,
}

#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct NamedConstant {
    pub value: f64,
    pub provenance: Provenance,
}

/// Parameter bundle for the bound evaluators, with named constants.
#[derive(Clone, Debug, Default)]
pub struct BoundParams {
    pub k: usize,
    pub sigma: f64,
    pub n: usize,
    pub constants: BTreeMap<String, NamedConstant>,
}

impl BoundParams {
    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).map(|c| c.value)
    }

    pub fn set(&mut self, name: &str, value: f64, provenance: Provenance) {
        self.constants
            .insert(name.to_string(), NamedConstant { value, provenance });
    }
}

/// Verdict at one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    NotApplicable,
}

/// One evaluated grid point: bound value, comparator (exact or empirical),
/// and the verdict.
#[derive(Clone, Copy, Debug)]
pub struct BoundPoint {
    pub x: f64,
    pub bound: Option<f64>,
    pub comparator: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Default)]
pub struct BoundReport {
    pub points: Vec<BoundPoint>,
}

impl BoundReport {
    pub fn all_hold(&self) -> bool {
        self.points.iter().all(|p| p.verdict != Verdict::Violated)
    }

    pub fn violations(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.verdict == Verdict::Violated)
            .count()
    }
}

/// The classical order-1 Bernstein inequality with constants
/// `c1 = 2, c2 = 1/2, c3 = 1/3`:
/// `2 exp(-(u^2/2) / (sigma^2 (1 + u/(3 sqrt(n) sigma^2))))`.
pub fn bernstein_k1(u: f64, sigma: f64, n: usize) -> f64 {
    let correction = 1.0 + u / (3.0 * (n as f64).sqrt() * sigma * sigma);
    2.0 * (-(u * u / 2.0) / (sigma * sigma * correction)).exp()
}

/// The order-k Bernstein-type bound
/// `c1 exp(-c2 u^(2/k) / (sigma^(2/k) (1 + c3 (u n^(-k/2)
/// sigma^-(k+1))^(2/(k(k+1))))))`. The theory does not pin the constants
/// for `k >= 2`, so they must be supplied explicitly.
pub fn arcones_gine_bound(
    u: f64,
    k: usize,
    sigma: f64,
    n: usize,
    constants: Option<(f64, f64, f64)>,
) -> Result<f64> {
    let (c1, c2, c3) = constants.ok_or(Error::MissingConstant("c1,c2,c3"))?;
    let kf = k as f64;
    let t = u * (n as f64).powf(-kf / 2.0) * sigma.powf(-(kf + 1.0));
    let correction = 1.0 + c3 * t.powf(2.0 / (kf * (kf + 1.0)));
    Ok(c1 * (-c2 * u.powf(2.0 / kf) / (sigma.powf(2.0 / kf) * correction)).exp())
}

/// Chaos-order-k tail shape `C exp(-(u/sigma)^(2/k) / 2)`.
pub fn theorem1_bound(u: f64, k: usize, sigma: f64, c: f64) -> f64 {
    c * (-0.5 * (u / sigma).powf(2.0 / k as f64)).exp()
}

/// Outcome of a range-restricted bound evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Applicability {
    Applicable(f64),
    /// Above the stated range but within reach of the rescaled evaluation
    /// at `sigma_bar = (u n^(-k/2))^(1/(k+1))`.
    ExtendedSigmaBar { value: f64, sigma_bar: f64 },
    NotApplicable,
}

impl Applicability {
    pub fn value(&self) -> Option<f64> {
        match self {
            Applicability::Applicable(v) => Some(*v),
            Applicability::ExtendedSigmaBar { value, .. } => Some(*value),
            Applicability::NotApplicable => None,
        }
    }
}

/// Which algebraic reading to use for the extended range: the denominator
/// of the exponent carries either `(1+B)` (direct substitution of
/// `sigma_bar`) or `(1+B)^(1/k)` (as displayed in the comparison algebra).
/// The two coincide at `k = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionReading {
    OnePlusB,
    OnePlusBRootK,
}

/// The degenerate-U-statistic tail bound
/// `A exp(-u^(2/k) / (2 sigma^(2/k) (1 + B (u n^(-k/2)
/// sigma^-(k+1))^(1/k))))`, valid for `0 <= u <= n^(k/2) sigma^(k+1)` and
/// `0 < sigma^2 <= 1`. Outside the range (but `u <= n^(k/2)`) the bound is
/// re-evaluated at `sigma_bar` and tagged as extended; beyond that it is
/// not applicable.
pub fn theorem3_bound(
    u: f64,
    k: usize,
    sigma: f64,
    n: usize,
    a: f64,
    b: f64,
    reading: ExtensionReading,
) -> Result<Applicability> {
    if sigma <= 0.0 || sigma * sigma > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma^2 must lie in (0, 1], got sigma = {sigma}"
        )));
    }
    if u < 0.0 {
        return Err(Error::InvalidParameter("u must be >= 0".into()));
    }
    let kf = k as f64;
    let n_k2 = (n as f64).powf(kf / 2.0);
    let range_end = n_k2 * sigma.powf(kf + 1.0);
    if u <= range_end {
        let t = u / range_end; // = u n^(-k/2) sigma^-(k+1)
        let denom = 2.0 * sigma.powf(2.0 / kf) * (1.0 + b * t.powf(1.0 / kf));
        return Ok(Applicability::Applicable(
            a * (-u.powf(2.0 / kf) / denom).exp(),
        ));
    }
    if u <= n_k2 {
        let sigma_bar = (u / n_k2).powf(1.0 / (kf + 1.0));
        let exponent_scale = match reading {
            ExtensionReading::OnePlusB => 1.0 + b,
            ExtensionReading::OnePlusBRootK => (1.0 + b).powf(1.0 / kf),
        };
        let value =
            a * (-(u * u * n as f64).powf(1.0 / (kf + 1.0)) / (2.0 * exponent_scale)).exp();
        return Ok(Applicability::ExtendedSigmaBar { value, sigma_bar });
    }
    Ok(Applicability::NotApplicable)
}

/// `(2kM - 1)!! sigma^(2M)`: the Gaussian product-moment bound.
pub fn gaussian_moment_bound(k: usize, m: usize, sigma: f64) -> f64 {
    let mut acc = 1.0f64;
    let mut i = 1usize;
    while i + 1 < 2 * k * m {
        i += 2;
        acc *= i as f64;
    }
    acc * sigma.powi(2 * m as i32)
}

/// Stirling form `A (2/e)^(kM) (kM)^(kM) sigma^(2M)` of the same bound,
/// valid for any `A > sqrt(2)` once `M` exceeds a threshold.
pub fn gaussian_moment_bound_stirling(k: usize, m: usize, sigma: f64, a: f64) -> f64 {
    let km = (k * m) as f64;
    a * (2.0 / std::f64::consts::E).powf(km) * km.powf(km) * sigma.powi(2 * m as i32)
}

/// Default value of the constant in the U-statistic moment bound.
pub const PROP_B_DEFAULT_C: f64 = 2.0 * std::f64::consts::SQRT_2;

/// The U-statistic moment bound
/// `A (1 + C sqrt(eta))^(2kM) (2/e)^(kM) (kM)^(kM) sigma^(2M)`,
/// applicable while `kM <= eta n sigma^2`; `C` defaults to `2 sqrt(2)`.
pub fn ustat_moment_bound(
    k: usize,
    m: usize,
    sigma: f64,
    n: usize,
    eta: f64,
    a: f64,
    c: Option<f64>,
) -> Applicability {
    let c = c.unwrap_or(PROP_B_DEFAULT_C);
    if (k * m) as f64 > eta * n as f64 * sigma * sigma {
        return Applicability::NotApplicable;
    }
    let km = (k * m) as f64;
    let value = a
        * (1.0 + c * eta.sqrt()).powf(2.0 * km)
        * (2.0 / std::f64::consts::E).powf(km)
        * km.powf(km)
        * sigma.powi(2 * m as i32);
    Applicability::Applicable(value)
}

/// Which rule picks the chaining moment order `M(u)`.
#[derive(Clone, Copy, Debug)]
pub enum ChainingBranch {
    /// `M(u) = floor((u/sigma)^(2/k) / (2k))`, the Gaussian-side choice.
    Gaussian,
    /// `k M(u) = (u/sigma)^(2/k) / (2 (1 + B (u n^(-k/2)
    /// sigma^-(k+1))^(1/k)))`, the U-statistic-side choice.
    UStatistic { b: f64 },
}

/// Result of one Markov chaining step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChainedTail {
    Applicable { m: usize, bound: f64 },
    /// `u` too small for `M >= 1`, or the moment oracle has no value at
    /// the chosen order.
    NotApplicable,
}

impl ChainedTail {
    pub fn bound(&self) -> Option<f64> {
        match self {
            ChainedTail::Applicable { bound, .. } => Some(*bound),
            ChainedTail::NotApplicable => None,
        }
    }
}

/// Markov step `P(|T| > u) <= E[T^(2M)] / u^(2M)` at the branch-specific
/// moment order `M(u)`. `moment_fn(M)` must return `E[T^(2M)]` (exact or
/// bounded from above) or `None` when unavailable.
pub fn tail_from_moments(
    moment_fn: &mut dyn FnMut(usize) -> Option<f64>,
    u: f64,
    k: usize,
    sigma: f64,
    n: usize,
    branch: ChainingBranch,
) -> Result<ChainedTail> {
    if u <= 0.0 {
        return Err(Error::InvalidParameter("u must be positive".into()));
    }
    let kf = k as f64;
    let m_bar = match branch {
        ChainingBranch::Gaussian => (u / sigma).powf(2.0 / kf) / (2.0 * kf),
        ChainingBranch::UStatistic { b } => {
            let t = u * (n as f64).powf(-kf / 2.0) * sigma.powf(-(kf + 1.0));
            (u / sigma).powf(2.0 / kf) / (2.0 * kf * (1.0 + b * t.powf(1.0 / kf)))
        }
    };
    let m = m_bar.floor() as usize;
    if m < 1 {
        return Ok(ChainedTail::NotApplicable);
    }
    match moment_fn(m) {
        Some(moment) => Ok(ChainedTail::Applicable {
            m,
            bound: moment / u.powi(2 * m as i32),
        }),
        None => Ok(ChainedTail::NotApplicable),
    }
}

/// Smallest constant `C` such that `C * shape(x) >= target(x)` at every
/// supplied point; pair it with a `Calibrated` provenance tag.
pub fn calibrate_constant(points: &[(f64, f64)], shape: impl Fn(f64) -> f64) -> f64 {
    points
        .iter()
        .map(|&(x, target)| {
            let s = shape(x);
            if s <= 0.0 {
                f64::INFINITY
            } else {
                target / s
            }
        })
        .fold(0.0f64, f64::max)
}
