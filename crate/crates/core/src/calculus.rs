//! The diagram calculus itself: per-diagram kernels and coefficients,
//! rewriting a product of degenerate U-statistics as a sum of degenerate
//! U-statistics, expectations of products via closed diagrams, Gaussian
//! product moments via pairing diagrams, and the kernel-norm bounds.
//!
//! All identities are verified on the unnormalized scale, where both sides
//! are multiplied by `n^(sum k_l / 2)`: every coefficient is then rational,
//! so rational-mode checks are exact. On that scale the rewriting reads
//!
//! `prod_l k_l! I_{n,k_l}(f_l)
//!    = sum_gamma (prod_l J_n(l,gamma)) n^|Z| k(gamma)! I_{n,k(gamma)}(F_gamma)`
//!
//! restricted to diagrams satisfying the level-wise order condition
//! `k(gamma(l-1)) + k_l - (#edges into row l) <= n`.

use std::collections::BTreeMap;

use crate::diagrams::{
    colored_multi, colored_pair, pairings, Color, ColoredDiagram, Edge, PairingDiagram,
};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::scalar::Scalar;
use crate::ustat::UstatEvaluator;
use crate::vertex::Vertex;

/// Canonicality tolerance for float-mode inputs; exact mode uses 0.
pub const CANONICAL_TOL: f64 = 1e-10;

/// One summand of the diagram formula.
#[derive(Clone, Debug)]
pub struct DecompositionTerm<K: Scalar> {
    pub diagram: ColoredDiagram,
    /// `prod_l J_n(l, gamma)`, a rational in the scalar type.
    pub j_coeff: K,
    /// `|W(gamma)|`, contributing `n^(-|W|/2)` on the normalized scale.
    pub w_power: usize,
    /// `|Z(gamma)|`, contributing `n^|Z|` on the unnormalized scale.
    pub z_power: usize,
    /// `k(gamma)`: order of the term's U-statistic.
    pub order: usize,
    /// The canonical kernel `F_gamma`.
    pub kernel: Kernel<K>,
}

impl<K: Scalar> DecompositionTerm<K> {
    /// Coefficient of `k! I_{n,k}(F)` once both sides of the identity are
    /// scaled by `n^(sum k_l / 2)`: `j_coeff * n^|Z|`. Exact in K.
    pub fn unnormalized_coefficient(&self, n: usize) -> K {
        self.j_coeff.clone() * K::from_int(n as i64).powi(self.z_power as u32)
    }

    /// The literal coefficient `(prod J) n^(-|W|/2)` of the normalized
    /// identity, as a float.
    pub fn normalized_coefficient(&self, n: usize) -> f64 {
        self.j_coeff.to_f64() * (n as f64).powf(-(self.w_power as f64) / 2.0)
    }
}

/// One summand of the Gaussian product-moment formula.
#[derive(Clone, Debug)]
pub struct GaussianTerm<K: Scalar> {
    pub diagram: PairingDiagram,
    /// The fully contracted integral `F_gamma`.
    pub value: K,
}

fn check_canonical<K: Scalar>(f: &Kernel<K>) -> Result<()> {
    let tol = if K::EXACT { 0.0 } else { CANONICAL_TOL };
    if let Some((axis, defect)) = f.canonical_defect() {
        let d = defect.to_f64();
        if tol == 0.0 || d > tol {
            return Err(Error::NotCanonical { axis, defect: d });
        }
    }
    Ok(())
}

fn retag_rows<K: Scalar>(fs: &[Kernel<K>]) -> Result<Vec<Kernel<K>>> {
    fs.iter()
        .enumerate()
        .map(|(i, f)| f.retag_row(i as u32 + 1))
        .collect()
}

fn check_shared_space<K: Scalar>(fs: &[Kernel<K>]) -> Result<()> {
    let first = fs
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty factor list".into()))?;
    if fs.iter().any(|f| f.space() != first.space()) {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

/// `J_n(l, gamma)` with explicit counts: the product over
/// `j = 1..=b_plus` of `(n - kk + b_minus + b_plus + j) / n`, and 1 when
/// `b_plus = 0`. `kk` is the order of the two-row product feeding level
/// `l`: accumulated order entering the level plus the row size `k_l`.
/// A nonpositive factor is an error: such terms must be excluded by the
/// level-wise order condition, never clamped.
pub fn jn_from_counts<K: Scalar>(
    b_plus: usize,
    b_minus: usize,
    n: usize,
    kk: usize,
    level: usize,
) -> Result<K> {
    let mut acc = K::one();
    for j in 1..=b_plus {
        let factor = n as i64 - kk as i64 + b_minus as i64 + b_plus as i64 + j as i64;
        if factor <= 0 {
            return Err(Error::NonpositiveFactor { level });
        }
        acc = acc * K::from_ratio(factor, n as i64);
    }
    Ok(acc)
}

/// `J_n(l, gamma)` read off a diagram's row `level`; `kk` as in
/// [`jn_from_counts`].
pub fn coefficient_jn<K: Scalar>(
    d: &ColoredDiagram,
    level: usize,
    n: usize,
    kk: usize,
) -> Result<K> {
    let stats = d.stats();
    jn_from_counts(
        stats.per_row_plus[level - 1],
        stats.per_row_minus[level - 1],
        n,
        kk,
        level,
    )
}

/// One level of the kernel recursion: tensor the accumulated kernel with
/// the row-`l` factor, replace each edge's upper argument by its lower
/// end-point, apply `P` at `+1` and `Q` at `-1` lower end-points, and
/// relabel the surviving `-1` lower end-points to their copy vertices.
pub fn apply_level<K: Scalar>(
    acc: &Kernel<K>,
    factor: &Kernel<K>,
    edges: &[Edge],
) -> Result<Kernel<K>> {
    for e in edges {
        if !acc.axes().contains(&e.upper) {
            return Err(Error::IncompatibleDiagram(format!(
                "upper end-point {} is not free entering the level",
                e.upper
            )));
        }
        if !factor.axes().contains(&e.lower) {
            return Err(Error::IncompatibleDiagram(format!(
                "lower end-point {} is not a coordinate of the level factor",
                e.lower
            )));
        }
    }
    let mut bar = acc.tensor_product(factor)?;
    let mapping: BTreeMap<Vertex, Vertex> = edges.iter().map(|e| (e.upper, e.lower)).collect();
    bar = bar.substitute(&mapping)?;
    let mut copies: BTreeMap<Vertex, Vertex> = BTreeMap::new();
    for e in edges {
        match e.color {
            Color::Plus => bar = bar.integrate_out(e.lower)?,
            Color::Minus => {
                bar = bar.center(e.lower)?;
                copies.insert(e.lower, e.lower.twin_copy());
            }
        }
    }
    if copies.is_empty() {
        Ok(bar)
    } else {
        bar.substitute(&copies)
    }
}

/// Builds the kernel `(f o g)_gamma` for a two-row colored diagram:
/// tensor product, substitution along the edges, `P` at `+1` and `Q` at
/// `-1` lower end-points, copy relabeling of surviving `-1` axes.
pub fn kernel_for_diagram<K: Scalar>(
    f: &Kernel<K>,
    g: &Kernel<K>,
    d: &ColoredDiagram,
) -> Result<Kernel<K>> {
    if d.row_sizes() != [f.order(), g.order()] {
        return Err(Error::IncompatibleDiagram(format!(
            "diagram rows {:?} vs kernel orders ({}, {})",
            d.row_sizes(),
            f.order(),
            g.order()
        )));
    }
    let f1 = f.retag_row(1)?;
    let g2 = g.retag_row(2)?;
    apply_level(&f1, &g2, d.edges())
}

/// Theorem-B rewriting of `k1! k2! n^{-(k1+k2)/2} I_{n,k1}(f) I_{n,k2}(g)`
/// as a sum of normalized degenerate U-statistics, one term per two-row
/// colored diagram surviving the order condition
/// `k1 + k2 - (|Z| + |W|) <= n`.
pub fn product_pair<K: Scalar>(
    f: &Kernel<K>,
    g: &Kernel<K>,
    n: usize,
) -> Result<Vec<DecompositionTerm<K>>> {
    check_shared_space(&[f.clone(), g.clone()])?;
    check_canonical(f)?;
    check_canonical(g)?;
    let (k1, k2) = (f.order(), g.order());
    if n < k1.max(k2) {
        return Err(Error::SampleTooShort { n, k: k1.max(k2) });
    }
    let mut terms = Vec::new();
    for d in colored_pair(k1, k2) {
        let stats = d.stats();
        if k1 + k2 - (stats.plus_edges + stats.minus_edges) > n {
            continue;
        }
        let j = coefficient_jn::<K>(&d, 2, n, k1 + k2)?;
        let kernel = kernel_for_diagram(f, g, &d)?;
        debug_assert_eq!(kernel.order(), stats.order);
        terms.push(DecompositionTerm {
            j_coeff: j,
            w_power: stats.minus_edges,
            z_power: stats.plus_edges,
            order: stats.order,
            kernel,
            diagram: d,
        });
    }
    Ok(terms)
}

/// Multi-factor rewriting of `prod_l k_l! n^{-k_l/2} I_{n,k_l}(f_l)`;
/// reduces to [`product_pair`] at `L = 2`. Diagrams violating the
/// level-wise order condition are excluded, never clamped.
pub fn product_multi<K: Scalar>(fs: &[Kernel<K>], n: usize) -> Result<Vec<DecompositionTerm<K>>> {
    check_shared_space(fs)?;
    for f in fs {
        check_canonical(f)?;
        if n < f.order() {
            return Err(Error::SampleTooShort { n, k: f.order() });
        }
    }
    let tagged = retag_rows(fs)?;
    let rows: Vec<usize> = tagged.iter().map(|f| f.order()).collect();
    let mut terms = Vec::new();
    'diagrams: for d in colored_multi(&rows) {
        let mut acc = tagged[0].clone();
        let mut j_prod = K::one();
        for l in 2..=rows.len() {
            let edges: Vec<Edge> = d.edges_at_level(l as u32).copied().collect();
            let kk = acc.order() + rows[l - 1];
            if kk - edges.len() > n {
                continue 'diagrams; // excluded by the order condition
            }
            let b_plus = edges.iter().filter(|e| e.color == Color::Plus).count();
            let b_minus = edges.len() - b_plus;
            j_prod = j_prod * jn_from_counts::<K>(b_plus, b_minus, n, kk, l)?;
            acc = apply_level(&acc, &tagged[l - 1], &edges)?;
        }
        let stats = d.stats();
        debug_assert_eq!(acc.order(), stats.order);
        terms.push(DecompositionTerm {
            j_coeff: j_prod,
            w_power: stats.minus_edges,
            z_power: stats.plus_edges,
            order: stats.order,
            kernel: acc,
            diagram: d,
        });
    }
    Ok(terms)
}

/// `E[prod_l k_l! I_{n,k_l}(f_l)]` (unnormalized scale) as the sum over
/// closed diagrams of `(prod J) n^|Z| F_gamma`, together with the number
/// of contributing closed diagrams.
///
/// The walk over diagrams prunes any branch whose free vertices already
/// outnumber the lower end-points still to come, so only closable
/// prefixes are expanded; dropped open diagrams contribute zero because
/// degenerate U-statistics have zero mean.
pub fn expected_product_unnormalized<K: Scalar>(fs: &[Kernel<K>], n: usize) -> Result<(K, usize)> {
    check_shared_space(fs)?;
    for f in fs {
        check_canonical(f)?;
        if n < f.order() {
            return Err(Error::SampleTooShort { n, k: f.order() });
        }
    }
    let tagged = retag_rows(fs)?;
    let rows: Vec<usize> = tagged.iter().map(|f| f.order()).collect();
    let mut total = K::zero();
    let mut closed_terms = 0usize;
    if rows.len() == 1 {
        if rows[0] == 0 {
            total = tagged[0].scalar_value().clone();
            closed_terms = 1;
        }
        return Ok((total, closed_terms));
    }
    expected_dfs(
        &tagged,
        &rows,
        n,
        2,
        tagged[0].clone(),
        K::one(),
        0,
        &mut total,
        &mut closed_terms,
    )?;
    Ok((total, closed_terms))
}

#[allow(clippy::too_many_arguments)]
fn expected_dfs<K: Scalar>(
    tagged: &[Kernel<K>],
    rows: &[usize],
    n: usize,
    level: usize,
    acc: Kernel<K>,
    j_prod: K,
    plus_total: usize,
    total: &mut K,
    closed_terms: &mut usize,
) -> Result<()> {
    if level > rows.len() {
        if acc.order() == 0 {
            *total = total.clone()
                + j_prod
                    * K::from_int(n as i64).powi(plus_total as u32)
                    * acc.scalar_value().clone();
            *closed_terms += 1;
        }
        return Ok(());
    }
    let k_l = rows[level - 1];
    let remaining: usize = rows[level..].iter().sum();
    let free: Vec<Vertex> = acc.axes().to_vec();
    let mut assignments = Vec::new();
    level_assignments(&free, level as u32, k_l, &mut assignments);
    for edges in assignments {
        let kk = acc.order() + k_l;
        if kk - edges.len() > n {
            continue;
        }
        let b_plus = edges.iter().filter(|e| e.color == Color::Plus).count();
        let b_minus = edges.len() - b_plus;
        let j = jn_from_counts::<K>(b_plus, b_minus, n, kk, level)?;
        let next = apply_level(&acc, &tagged[level - 1], &edges)?;
        if next.order() > remaining {
            continue; // can never close
        }
        expected_dfs(
            tagged,
            rows,
            n,
            level + 1,
            next,
            j_prod.clone() * j,
            plus_total + b_plus,
            total,
            closed_terms,
        )?;
    }
    Ok(())
}

/// All ways to attach edges from `free` upper end-points into the `k_l`
/// lower end-points of row `level`, in the documented enumeration order.
fn level_assignments(free: &[Vertex], level: u32, k_l: usize, out: &mut Vec<Vec<Edge>>) {
    fn rec(
        free: &[Vertex],
        used: &mut Vec<bool>,
        level: u32,
        j: usize,
        k_l: usize,
        current: &mut Vec<Edge>,
        out: &mut Vec<Vec<Edge>>,
    ) {
        if j > k_l {
            out.push(current.clone());
            return;
        }
        rec(free, used, level, j + 1, k_l, current, out);
        for (i, &upper) in free.iter().enumerate() {
            if used[i] {
                continue;
            }
            used[i] = true;
            for color in [Color::Minus, Color::Plus] {
                current.push(Edge {
                    upper,
                    lower: Vertex::plain(level, j as u32),
                    color,
                });
                rec(free, used, level, j + 1, k_l, current, out);
                current.pop();
            }
            used[i] = false;
        }
    }
    let mut used = vec![false; free.len()];
    let mut current = Vec::new();
    rec(free, &mut used, level, 1, k_l, &mut current, out);
}

/// Normalized expectation `E[prod_l k_l! n^{-k_l/2} I_{n,k_l}(f_l)]` as a
/// float.
pub fn expected_product<K: Scalar>(fs: &[Kernel<K>], n: usize) -> Result<f64> {
    let total_order: usize = fs.iter().map(|f| f.order()).sum();
    let (raw, _) = expected_product_unnormalized(fs, n)?;
    Ok(raw.to_f64() * (n as f64).powf(-(total_order as f64) / 2.0))
}

/// The contracted integral `F_gamma` of one pairing diagram, computed
/// incrementally: at each level, merge the edges arriving there and
/// integrate the merged coordinates out.
pub fn gaussian_term_value<K: Scalar>(tagged: &[Kernel<K>], d: &PairingDiagram) -> Result<K> {
    let mut acc = tagged[0].clone();
    for l in 2..=tagged.len() as u32 {
        acc = acc.tensor_product(&tagged[(l - 1) as usize])?;
        let mapping: BTreeMap<Vertex, Vertex> = d
            .edges()
            .iter()
            .filter(|(_, lo)| lo.row == l)
            .map(|&(up, lo)| (up, lo))
            .collect();
        acc = acc.substitute(&mapping)?;
        for (_, lo) in d.edges().iter().filter(|(_, lo)| lo.row == l) {
            acc = acc.integrate_out(*lo)?;
        }
    }
    debug_assert!(acc.is_scalar());
    Ok(acc.scalar_value().clone())
}

/// Reference route for `F_gamma`: build the full tensor product, perform
/// all substitutions at once, then integrate the surviving coordinates in
/// reverse order. Used to check that the value does not depend on the
/// enumeration of lower end-points.
pub fn gaussian_term_value_reference<K: Scalar>(
    tagged: &[Kernel<K>],
    d: &PairingDiagram,
) -> Result<K> {
    let mut full = tagged[0].clone();
    for f in &tagged[1..] {
        full = full.tensor_product(f)?;
    }
    let mapping: BTreeMap<Vertex, Vertex> = d.edges().iter().copied().collect();
    let mut acc = full.substitute(&mapping)?;
    for axis in acc.axes().to_vec().into_iter().rev() {
        acc = acc.integrate_out(axis)?;
    }
    Ok(acc.scalar_value().clone())
}

/// `E[prod_l k_l! J_{mu,k_l}(f_l)]` for Wiener-Ito integrals: the sum of
/// `F_gamma` over all pairing diagrams, with the per-term breakdown.
/// Zero (with no terms) when no pairing exists.
pub fn gaussian_expected_product<K: Scalar>(
    fs: &[Kernel<K>],
) -> Result<(K, Vec<GaussianTerm<K>>)> {
    check_shared_space(fs)?;
    if fs.iter().any(|f| f.order() == 0) {
        return Err(Error::InvalidParameter(
            "pairing rows need at least one vertex per factor".into(),
        ));
    }
    let tagged = retag_rows(fs)?;
    let rows: Vec<usize> = tagged.iter().map(|f| f.order()).collect();
    let mut terms = Vec::new();
    let mut total = K::zero();
    for d in pairings(&rows) {
        let value = gaussian_term_value(&tagged, &d)?;
        total = total + value.clone();
        terms.push(GaussianTerm { diagram: d, value });
    }
    Ok((total, terms))
}

fn le_with_slack<K: Scalar>(value: &K, bound: &K) -> bool {
    if K::EXACT {
        value <= bound
    } else {
        value.to_f64() <= bound.to_f64() * (1.0 + 1e-9) + 1e-12
    }
}

/// Outcome of checking the two-row kernel-norm bounds on every diagram.
#[derive(Clone, Debug)]
pub struct NormBoundReport {
    pub diagrams_checked: usize,
    /// Whether the `sup <= 1` branch (the `2^|W| min` bound) was checked.
    pub sup_branch_checked: bool,
    /// `(diagram index, which bound, norm, bound)` for each violation.
    pub violations: Vec<(usize, &'static str, f64, f64)>,
    /// Smallest `bound - norm` margin seen, in L2 units.
    pub min_slack: f64,
}

impl NormBoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks, for every two-row colored diagram over the orders of `f` and
/// `g`: when `|W| = 0`, `||(f o g)_gamma||_2 <= ||f||_2 ||g||_2`; and
/// whenever both sup norms are at most 1,
/// `||(f o g)_gamma||_2 <= 2^|W| min(||f||_2, ||g||_2)`.
/// Canonicality is not assumed.
pub fn verify_norm_bounds<K: Scalar>(f: &Kernel<K>, g: &Kernel<K>) -> Result<NormBoundReport> {
    let sup_ok = f.sup_norm() <= 1.0 + 1e-12 && g.sup_norm() <= 1.0 + 1e-12;
    let f_l2 = f.l2_norm_sq();
    let g_l2 = g.l2_norm_sq();
    let min_l2 = if f_l2 < g_l2 {
        f_l2.clone()
    } else {
        g_l2.clone()
    };
    let mut report = NormBoundReport {
        diagrams_checked: 0,
        sup_branch_checked: sup_ok,
        violations: Vec::new(),
        min_slack: f64::INFINITY,
    };
    for (idx, d) in colored_pair(f.order(), g.order()).into_iter().enumerate() {
        let stats = d.stats();
        let kernel = kernel_for_diagram(f, g, &d)?;
        let val_sq = kernel.l2_norm_sq();
        let val = val_sq.to_f64().sqrt();
        if stats.minus_edges == 0 {
            let bound_sq = f_l2.clone() * g_l2.clone();
            let bound = bound_sq.to_f64().sqrt();
            report.min_slack = report.min_slack.min(bound - val);
            if !le_with_slack(&val_sq, &bound_sq) {
                report.violations.push((idx, "product", val, bound));
            }
        }
        if sup_ok {
            let bound_sq = K::from_int(4).powi(stats.minus_edges as u32) * min_l2.clone();
            let bound = bound_sq.to_f64().sqrt();
            report.min_slack = report.min_slack.min(bound - val);
            if !le_with_slack(&val_sq, &bound_sq) {
                report.violations.push((idx, "two_power_min", val, bound));
            }
        }
        report.diagrams_checked += 1;
    }
    Ok(report)
}

/// Outcome of the multi-row L2/sup recursion bounds.
#[derive(Clone, Debug)]
pub struct LevelBoundReport {
    pub diagrams_checked: usize,
    pub levels_checked: usize,
    /// `(diagram index, level, which bound)` per violation.
    pub violations: Vec<(usize, usize, &'static str)>,
    /// Largest `value / bound` ratios observed (L2 and sup).
    pub max_l2_ratio: f64,
    pub max_sup_ratio: f64,
}

impl LevelBoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For every multi-row colored diagram over the orders of `fs` and every
/// level `l`, checks the recursion bounds
/// `||F_{l,gamma}||_2 <= 2^|W(l)| sigma^(l - U(l))` and
/// `sup |F_{l,gamma}| <= 2^|W(l)|`, assuming `sup |f_l| <= 1` and
/// `||f_l||_2 <= sigma`. The inputs need not be canonical.
pub fn verify_level_bounds<K: Scalar>(fs: &[Kernel<K>], sigma: &K) -> Result<LevelBoundReport> {
    check_shared_space(fs)?;
    let sigma_sq = sigma.clone() * sigma.clone();
    for f in fs {
        if f.sup_norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "factor sup norm {} exceeds 1",
                f.sup_norm()
            )));
        }
        if !le_with_slack(&f.l2_norm_sq(), &sigma_sq) {
            return Err(Error::InvalidParameter(format!(
                "factor L2 norm {} exceeds sigma {}",
                f.l2_norm(),
                sigma.to_f64()
            )));
        }
    }
    let tagged = retag_rows(fs)?;
    let rows: Vec<usize> = tagged.iter().map(|f| f.order()).collect();
    let mut report = LevelBoundReport {
        diagrams_checked: 0,
        levels_checked: 0,
        violations: Vec::new(),
        max_l2_ratio: 0.0,
        max_sup_ratio: 0.0,
    };
    for (idx, d) in colored_multi(&rows).into_iter().enumerate() {
        let stats = d.stats();
        let mut acc = tagged[0].clone();
        for l in 1..=rows.len() {
            if l >= 2 {
                let edges: Vec<Edge> = d.edges_at_level(l as u32).copied().collect();
                acc = apply_level(&acc, &tagged[l - 1], &edges)?;
            }
            let w_l = stats.minus_prefix(l);
            let u_l = stats.rows_with_minus_prefix(l);
            let l2_bound_sq = K::from_int(4).powi(w_l as u32) * sigma_sq.powi((l - u_l) as u32);
            let sup_bound = K::from_int(2).powi(w_l as u32);
            let l2_sq = acc.l2_norm_sq();
            let sup = acc.sup_norm_value();
            let l2_ratio = (l2_sq.to_f64() / l2_bound_sq.to_f64().max(f64::MIN_POSITIVE)).sqrt();
            let sup_ratio = sup.to_f64() / sup_bound.to_f64();
            report.max_l2_ratio = report.max_l2_ratio.max(l2_ratio);
            report.max_sup_ratio = report.max_sup_ratio.max(sup_ratio);
            if !le_with_slack(&l2_sq, &l2_bound_sq) {
                report.violations.push((idx, l, "l2"));
            }
            if !le_with_slack(&sup, &sup_bound) {
                report.violations.push((idx, l, "sup"));
            }
            report.levels_checked += 1;
        }
        report.diagrams_checked += 1;
    }
    Ok(report)
}

/// Pointwise verification of the product rewriting over every sample
/// assignment in `X^n`.
#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub terms: usize,
    pub checked_assignments: usize,
    /// Largest pointwise error on the normalized scale, as a float.
    pub max_abs_error: f64,
    /// Whether every pointwise error was exactly zero (rational mode).
    pub exact: bool,
}

impl IdentityReport {
    pub fn passed(&self, tol: f64) -> bool {
        if self.exact {
            true
        } else {
            self.max_abs_error <= tol
        }
    }
}

/// Evaluates both sides of the rewriting identity at every assignment in
/// `X^n` and reports the largest deviation. Comparison happens on the
/// unnormalized (integer-power) scale so rational mode is exact; the
/// reported error is rescaled to the normalized identity.
pub fn verify_product_identity<K: Scalar>(fs: &[Kernel<K>], n: usize) -> Result<IdentityReport> {
    let terms = product_multi(fs, n)?;
    let space = fs[0].space().clone();
    let base = space.len();
    let total_assignments = base
        .checked_pow(n as u32)
        .filter(|&t| t <= crate::ustat::MAX_ASSIGNMENTS)
        .ok_or_else(|| {
            Error::ResourceLimit(format!(
                "{base}^{n} assignments exceed the pointwise-check limit"
            ))
        })?;
    let factor_evs: Vec<UstatEvaluator<K>> =
        fs.iter().map(UstatEvaluator::new).collect::<Result<_>>()?;
    // distinct_sum already carries the k! of `k! I_{n,k}`, so the term
    // coefficient is exactly (prod J) n^|Z|.
    let term_evs: Vec<(K, UstatEvaluator<K>)> = terms
        .iter()
        .map(|t| UstatEvaluator::new(&t.kernel).map(|ev| (t.unnormalized_coefficient(n), ev)))
        .collect::<Result<_>>()?;
    let mut max_err = K::zero();
    let mut all_zero = true;
    let mut memo: BTreeMap<Vec<u64>, K> = BTreeMap::new();
    let mut omega = vec![0usize; n];
    for _ in 0..total_assignments {
        let mut counts = vec![0u64; base];
        for &a in &omega {
            counts[a] += 1;
        }
        let err = memo
            .entry(counts.clone())
            .or_insert_with(|| {
                let mut lhs = K::one();
                for ev in &factor_evs {
                    lhs = lhs * ev.distinct_sum(&counts);
                }
                let mut rhs = K::zero();
                for (coeff, ev) in &term_evs {
                    rhs = rhs + coeff.clone() * ev.distinct_sum(&counts);
                }
                (lhs - rhs).abs()
            })
            .clone();
        if !err.is_zero() {
            all_zero = false;
        }
        max_err = K::max_of(max_err, err);
        crate::kernel::bump(&mut omega, base);
    }
    let total_order: usize = fs.iter().map(|f| f.order()).sum();
    Ok(IdentityReport {
        terms: terms.len(),
        checked_assignments: total_assignments,
        max_abs_error: max_err.to_f64() * (n as f64).powf(-(total_order as f64) / 2.0),
        exact: all_zero,
    })
}
