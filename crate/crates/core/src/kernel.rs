//! Labeled kernel functions on finite product spaces, with the integral
//! operator `P` (integrate one coordinate out), the centering operator
//! `Q = I - P`, tensor products, argument substitution and the Hoeffding
//! decomposition. These are the building blocks every diagram kernel is
//! assembled from.
//!
//! A kernel of order `k` is a dense array over `X^k` whose axes carry
//! [`Vertex`] labels. Axes are kept sorted, so equal label sets imply equal
//! storage layout.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::Space;
use crate::vertex::{row_labels, Vertex};

#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<K: Scalar> {
    space: Arc<Space<K>>,
    axes: Vec<Vertex>,
    values: Vec<K>,
}

impl<K: Scalar> Kernel<K> {
    /// Builds a kernel from axis labels and row-major values over those axes
    /// as listed. Axes are re-sorted internally; values are permuted to match.
    pub fn new(space: Arc<Space<K>>, axes: Vec<Vertex>, values: Vec<K>) -> Result<Self> {
        let expected = space.kernel_len(axes.len())?;
        if values.len() != expected {
            return Err(Error::ShapeMismatch {
                got: values.len(),
                expected,
            });
        }
        let mut seen = BTreeSet::new();
        for &a in &axes {
            if !seen.insert(a) {
                return Err(Error::DuplicateAxis(a));
            }
        }
        if !K::EXACT {
            for v in &values {
                if !v.to_f64().is_finite() {
                    return Err(Error::InvalidParameter("non-finite kernel entry".into()));
                }
            }
        }
        let raw = Kernel {
            space,
            axes: axes.clone(),
            values,
        };
        if axes.windows(2).all(|w| w[0] < w[1]) {
            return Ok(raw);
        }
        // Unsorted input axes: reorder storage to the canonical axis order.
        let mut sorted = axes.clone();
        sorted.sort();
        let mapping: BTreeMap<Vertex, Vertex> = axes.iter().map(|&a| (a, a)).collect();
        raw.substitute_onto(&mapping, sorted)
    }

    /// Order-0 kernel holding a single scalar.
    pub fn scalar(space: Arc<Space<K>>, value: K) -> Self {
        Kernel {
            space,
            axes: Vec::new(),
            values: vec![value],
        }
    }

    /// Builds a kernel by evaluating `f` at every atom tuple, in axis order.
    pub fn from_fn(
        space: Arc<Space<K>>,
        axes: Vec<Vertex>,
        mut f: impl FnMut(&[usize]) -> K,
    ) -> Result<Self> {
        let mut sorted = axes;
        sorted.sort();
        let len = space.kernel_len(sorted.len())?;
        let mut idx = vec![0usize; sorted.len()];
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            values.push(f(&idx));
            bump(&mut idx, space.len());
        }
        Kernel::new(space, sorted, values)
    }

    /// Order-1 kernel on axis `(1,1)` with the given per-atom values.
    pub fn univariate(space: Arc<Space<K>>, values: Vec<K>) -> Result<Self> {
        Kernel::new(space, vec![Vertex::plain(1, 1)], values)
    }

    pub fn space(&self) -> &Arc<Space<K>> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vertex] {
        &self.axes
    }

    pub fn values(&self) -> &[K] {
        &self.values
    }

    pub fn is_scalar(&self) -> bool {
        self.axes.is_empty()
    }

    /// The sole entry of an order-0 kernel.
    pub fn scalar_value(&self) -> &K {
        assert!(self.is_scalar(), "kernel has {} axes", self.order());
        &self.values[0]
    }

    fn axis_pos(&self, axis: Vertex) -> Result<usize> {
        self.axes
            .iter()
            .position(|&a| a == axis)
            .ok_or(Error::UnknownAxis(axis))
    }

    /// Value at the atom tuple `idx`, one atom index per axis in axis order.
    pub fn eval(&self, idx: &[usize]) -> &K {
        debug_assert_eq!(idx.len(), self.order());
        let base = self.space.len();
        let mut lin = 0usize;
        for &d in idx {
            lin = lin * base + d;
        }
        &self.values[lin]
    }

    /// `P_axis h`: integrates the named coordinate out against `mu`,
    /// dropping that axis.
    pub fn integrate_out(&self, axis: Vertex) -> Result<Self> {
        let p = self.axis_pos(axis)?;
        let base = self.space.len();
        let lo = base.pow((self.order() - 1 - p) as u32);
        let hi = self.values.len() / (lo * base);
        let mut out = vec![K::zero(); hi * lo];
        for h in 0..hi {
            for a in 0..base {
                let w = self.space.weight(a).clone();
                let src = (h * base + a) * lo;
                let dst = h * lo;
                for l in 0..lo {
                    out[dst + l] =
                        out[dst + l].clone() + w.clone() * self.values[src + l].clone();
                }
            }
        }
        let mut axes = self.axes.clone();
        axes.remove(p);
        Ok(Kernel {
            space: self.space.clone(),
            axes,
            values: out,
        })
    }

    /// `Q_axis h = h - P_axis h`, the integral broadcast back over the
    /// removed coordinate. Axes are unchanged.
    pub fn center(&self, axis: Vertex) -> Result<Self> {
        self.center_signed(axis, false)
    }

    /// `Q~_axis h = h + P_axis h`; only used inside norm-bound checks.
    pub fn tilde_center(&self, axis: Vertex) -> Result<Self> {
        self.center_signed(axis, true)
    }

    fn center_signed(&self, axis: Vertex, plus: bool) -> Result<Self> {
        let marg = self.integrate_out(axis)?;
        let p = self.axis_pos(axis)?;
        let base = self.space.len();
        let lo = base.pow((self.order() - 1 - p) as u32);
        let hi = self.values.len() / (lo * base);
        let mut out = Vec::with_capacity(self.values.len());
        for h in 0..hi {
            for a in 0..base {
                let src = (h * base + a) * lo;
                let red = h * lo;
                for l in 0..lo {
                    let m = marg.values[red + l].clone();
                    let v = self.values[src + l].clone();
                    out.push(if plus { v + m } else { v - m });
                }
            }
        }
        Ok(Kernel {
            space: self.space.clone(),
            axes: self.axes.clone(),
            values: out,
        })
    }

    /// Adds the named axes back by constant extension along each.
    pub fn broadcast_insert(&self, new_axes: &[Vertex]) -> Result<Self> {
        let mut axes = self.axes.clone();
        for &a in new_axes {
            if axes.contains(&a) {
                return Err(Error::DuplicateAxis(a));
            }
            axes.push(a);
        }
        axes.sort();
        let mapping: BTreeMap<Vertex, Vertex> = self.axes.iter().map(|&a| (a, a)).collect();
        self.substitute_onto(&mapping, axes)
    }

    /// Squared L2 norm under the product measure `mu^k`.
    pub fn l2_norm_sq(&self) -> K {
        let base = self.space.len();
        let k = self.order();
        let mut idx = vec![0usize; k];
        let mut total = K::zero();
        for v in &self.values {
            let mut w = K::one();
            for &d in idx.iter() {
                w = w * self.space.weight(d).clone();
            }
            total = total + w * v.clone() * v.clone();
            bump(&mut idx, base);
        }
        total
    }

    /// L2 norm as a float; an order-0 kernel reports its absolute value.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().to_f64().sqrt()
    }

    /// Largest absolute entry, in the scalar type.
    pub fn sup_norm_value(&self) -> K {
        let mut best = K::zero();
        for v in &self.values {
            best = K::max_of(best, v.abs());
        }
        best
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_value().to_f64()
    }

    /// Whether every one-coordinate integral vanishes, up to `tol` in sup
    /// norm. `tol == 0` demands exact vanishing.
    pub fn is_canonical(&self, tol: f64) -> bool {
        self.canonical_defect().map_or(true, |(_, d)| {
            if tol == 0.0 {
                false
            } else {
                d.to_f64() <= tol
            }
        })
    }

    /// Worst offending axis, if any coordinate integral is nonzero:
    /// returns `(axis, sup |P_axis h|)` maximized over axes.
    pub fn canonical_defect(&self) -> Option<(Vertex, K)> {
        let mut worst: Option<(Vertex, K)> = None;
        for &axis in &self.axes {
            let d = self
                .integrate_out(axis)
                .expect("axis comes from self")
                .sup_norm_value();
            if d.is_zero() {
                continue;
            }
            match &worst {
                Some((_, best)) if *best >= d => {}
                _ => worst = Some((axis, d)),
            }
        }
        worst
    }

    /// Hoeffding decomposition: for each subset `S` of the axes, the
    /// component `(prod_{u notin S} P_u)(prod_{u in S} Q_u) h`, a kernel on
    /// exactly the axes in `S`. Components broadcast-sum back to `h`, and
    /// every component is canonical.
    pub fn hoeffding_decompose(&self) -> Result<BTreeMap<Vec<Vertex>, Kernel<K>>> {
        let k = self.order();
        let mut out = BTreeMap::new();
        for mask in 0u32..(1u32 << k) {
            let mut comp = self.clone();
            let mut subset = Vec::new();
            for (i, &axis) in self.axes.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    subset.push(axis);
                    comp = comp.center(axis)?;
                } else {
                    comp = comp.integrate_out(axis)?;
                }
            }
            out.insert(subset, comp);
        }
        Ok(out)
    }

    /// The fully canonical part: `prod_u Q_u h` (the top Hoeffding
    /// component, on all axes).
    pub fn canonical_projection(&self) -> Result<Self> {
        let mut comp = self.clone();
        for &axis in &self.axes {
            comp = comp.center(axis)?;
        }
        Ok(comp)
    }

    /// Tensor product `f o g`; axis label sets must be disjoint and the
    /// spaces identical.
    pub fn tensor_product(&self, other: &Kernel<K>) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        for &a in &other.axes {
            if self.axes.contains(&a) {
                return Err(Error::DuplicateAxis(a));
            }
        }
        let mut axes: Vec<Vertex> = self.axes.iter().chain(&other.axes).copied().collect();
        axes.sort();
        let len = self.space.kernel_len(axes.len())?;
        // For each merged axis, which factor it reads and that factor's
        // stride for the digit.
        let base = self.space.len();
        let route: Vec<(bool, usize)> = axes
            .iter()
            .map(|a| {
                if let Some(i) = self.axes.iter().position(|b| b == a) {
                    (true, base.pow((self.order() - 1 - i) as u32))
                } else {
                    let j = other.axes.iter().position(|b| b == a).unwrap();
                    (false, base.pow((other.order() - 1 - j) as u32))
                }
            })
            .collect();
        let mut idx = vec![0usize; axes.len()];
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            let mut lin_f = 0usize;
            let mut lin_g = 0usize;
            for (d, (left, stride)) in idx.iter().zip(&route) {
                if *left {
                    lin_f += d * stride;
                } else {
                    lin_g += d * stride;
                }
            }
            values.push(self.values[lin_f].clone() * other.values[lin_g].clone());
            bump(&mut idx, base);
        }
        Ok(Kernel {
            space: self.space.clone(),
            axes,
            values,
        })
    }

    /// Substitutes arguments: each key axis reads the value of its target
    /// axis. Distinct axes mapped to a common target merge into a diagonal;
    /// fresh targets relabel. Unmapped axes keep their labels.
    pub fn substitute(&self, mapping: &BTreeMap<Vertex, Vertex>) -> Result<Self> {
        for key in mapping.keys() {
            self.axis_pos(*key)?;
        }
        let targets: BTreeSet<Vertex> = self
            .axes
            .iter()
            .map(|a| *mapping.get(a).unwrap_or(a))
            .collect();
        self.substitute_onto(mapping, targets.into_iter().collect())
    }

    /// Core gather: result axes are given (sorted); every source axis reads
    /// the digit of `mapping(axis)` (defaulting to itself).
    fn substitute_onto(
        &self,
        mapping: &BTreeMap<Vertex, Vertex>,
        result_axes: Vec<Vertex>,
    ) -> Result<Self> {
        debug_assert!(result_axes.windows(2).all(|w| w[0] < w[1]));
        let base = self.space.len();
        let len = self.space.kernel_len(result_axes.len())?;
        // source axis -> position of its target among the result axes
        let tpos: Vec<usize> = self
            .axes
            .iter()
            .map(|a| {
                let t = mapping.get(a).unwrap_or(a);
                result_axes
                    .iter()
                    .position(|r| r == t)
                    .expect("target axis missing from result axes")
            })
            .collect();
        let src_stride: Vec<usize> = (0..self.order())
            .map(|i| base.pow((self.order() - 1 - i) as u32))
            .collect();
        let mut idx = vec![0usize; result_axes.len()];
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            let mut lin = 0usize;
            for (i, &tp) in tpos.iter().enumerate() {
                lin += idx[tp] * src_stride[i];
            }
            values.push(self.values[lin].clone());
            bump(&mut idx, base);
        }
        Ok(Kernel {
            space: self.space.clone(),
            axes: result_axes,
            values,
        })
    }

    /// Relabels this kernel's axes, in their current order, to
    /// `(row, 1), ..., (row, k)`.
    pub fn retag_row(&self, row: u32) -> Result<Self> {
        let fresh = row_labels(row, self.order());
        let mapping: BTreeMap<Vertex, Vertex> = self
            .axes
            .iter()
            .copied()
            .zip(fresh.iter().copied())
            .collect();
        self.substitute_onto(&mapping, fresh)
    }

    pub fn scale(&self, c: &K) -> Self {
        Kernel {
            space: self.space.clone(),
            axes: self.axes.clone(),
            values: self.values.iter().map(|v| v.clone() * c.clone()).collect(),
        }
    }

    /// Entry-wise sum; axes must agree exactly.
    pub fn add(&self, other: &Kernel<K>) -> Result<Self> {
        if self.axes != other.axes || self.space != other.space {
            return Err(Error::IncompatibleDiagram(
                "kernel addition needs identical axes".into(),
            ));
        }
        Ok(Kernel {
            space: self.space.clone(),
            axes: self.axes.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        })
    }

    pub fn sub(&self, other: &Kernel<K>) -> Result<Self> {
        self.add(&other.scale(&(-K::one())))
    }

    /// Largest absolute entry-wise difference, as a scalar.
    pub fn max_abs_diff(&self, other: &Kernel<K>) -> Result<K> {
        Ok(self.sub(other)?.sup_norm_value())
    }

    /// Clamps every entry into `[-bound, bound]`.
    pub fn clip(&self, bound: &K) -> Self {
        let neg = -bound.clone();
        Kernel {
            space: self.space.clone(),
            axes: self.axes.clone(),
            values: self
                .values
                .iter()
                .map(|v| {
                    if *v > *bound {
                        bound.clone()
                    } else if *v < neg {
                        neg.clone()
                    } else {
                        v.clone()
                    }
                })
                .collect(),
        }
    }

    /// Converts entries and weights to floats.
    pub fn to_f64_kernel(&self) -> Kernel<f64> {
        let space = Space::new(
            self.space.atoms().to_vec(),
            self.space.weights().iter().map(|w| w.to_f64()).collect(),
        )
        .expect("float image of a valid space is valid");
        Kernel {
            space,
            axes: self.axes.clone(),
            values: self.values.iter().map(|v| v.to_f64()).collect(),
        }
    }
}

/// Advances a row-major multi-index by one (last digit fastest).
pub(crate) fn bump(idx: &mut [usize], base: usize) {
    for d in idx.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return;
        }
        *d = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn half_space() -> Arc<Space<Rational>> {
        Space::uniform(2).unwrap()
    }

    fn pm_one(space: &Arc<Space<Rational>>) -> Kernel<Rational> {
        Kernel::univariate(
            space.clone(),
            vec![Rational::from_int(1), Rational::from_int(-1)],
        )
        .unwrap()
    }

    #[test]
    fn integrate_out_centered_function_is_zero() {
        let s = half_space();
        let f = pm_one(&s);
        let m = f.integrate_out(Vertex::plain(1, 1)).unwrap();
        assert!(m.is_scalar());
        assert!(m.scalar_value().is_zero());
    }

    #[test]
    fn integrate_out_constant_keeps_constant() {
        let s = Space::<Rational>::uniform(3).unwrap();
        let c = Rational::from_ratio(7, 3);
        let h = Kernel::from_fn(
            s.clone(),
            vec![Vertex::plain(1, 1), Vertex::plain(1, 2)],
            |_| c.clone(),
        )
        .unwrap();
        let m = h.integrate_out(Vertex::plain(1, 2)).unwrap();
        assert_eq!(m.order(), 1);
        assert!(m.values().iter().all(|v| *v == c));
    }

    #[test]
    fn integrate_out_weighted_indicator() {
        // X = {a,b}, mu = (1/4, 3/4), h = indicator of a -> 1/4
        let s = Space::<Rational>::from_parts(&[1, 3]).unwrap();
        let h = Kernel::univariate(s, vec![Rational::from_int(1), Rational::zero()]).unwrap();
        let m = h.integrate_out(Vertex::plain(1, 1)).unwrap();
        assert_eq!(*m.scalar_value(), Rational::from_ratio(1, 4));
    }

    #[test]
    fn integrate_out_unknown_axis_names_label() {
        let s = half_space();
        let f = pm_one(&s);
        let err = f.integrate_out(Vertex::plain(2, 1)).unwrap_err();
        assert!(err.to_string().contains("(2,1)"));
    }

    #[test]
    fn center_examples() {
        let s = half_space();
        let axis = Vertex::plain(1, 1);
        // centered stays put
        let f = pm_one(&s);
        assert_eq!(f.center(axis).unwrap(), f);
        // constant maps to zero
        let c = Kernel::univariate(s.clone(), vec![Rational::from_int(5); 2]).unwrap();
        assert!(c.center(axis).unwrap().sup_norm_value().is_zero());
        // (1,0) with uniform weights -> (1/2, -1/2)
        let h = Kernel::univariate(s.clone(), vec![Rational::one(), Rational::zero()]).unwrap();
        let q = h.center(axis).unwrap();
        assert_eq!(
            q.values(),
            &[Rational::from_ratio(1, 2), Rational::from_ratio(-1, 2)]
        );
    }

    #[test]
    fn tilde_center_examples() {
        let s = half_space();
        let axis = Vertex::plain(1, 1);
        let f = pm_one(&s);
        assert_eq!(f.tilde_center(axis).unwrap(), f);
        let c = Kernel::univariate(s.clone(), vec![Rational::from_int(3); 2]).unwrap();
        assert!(c
            .tilde_center(axis)
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == Rational::from_int(6)));
        let h = Kernel::univariate(s.clone(), vec![Rational::one(), Rational::zero()]).unwrap();
        let t = h.tilde_center(axis).unwrap();
        assert_eq!(
            t.values(),
            &[Rational::from_ratio(3, 2), Rational::from_ratio(1, 2)]
        );
    }

    #[test]
    fn norms() {
        let s = half_space();
        let f = pm_one(&s);
        assert_eq!(f.l2_norm_sq(), Rational::one());
        assert_eq!(f.l2_norm(), 1.0);
        assert_eq!(f.sup_norm(), 1.0);
        let z = Kernel::univariate(s.clone(), vec![Rational::zero(); 2]).unwrap();
        assert_eq!(z.l2_norm(), 0.0);
        assert_eq!(z.sup_norm(), 0.0);
        let h = Kernel::univariate(
            s.clone(),
            vec![Rational::from_ratio(1, 2), Rational::from_ratio(-3, 4)],
        )
        .unwrap();
        assert_eq!(h.sup_norm_value(), Rational::from_ratio(3, 4));
        // order-0 kernel: |c|
        let c = Kernel::scalar(s, Rational::from_int(-4));
        assert_eq!(c.l2_norm(), 4.0);
    }

    #[test]
    fn product_kernel_l2_is_sigma() {
        // sigma * f0 (x) f0 with ||f0||_2 = 1 has L2 norm sigma
        let s = half_space();
        let sigma = Rational::from_ratio(3, 5);
        let f0 = pm_one(&s);
        let f = f0
            .tensor_product(&f0.retag_row(2).unwrap())
            .unwrap()
            .scale(&sigma);
        assert_eq!(f.l2_norm_sq(), sigma.clone() * sigma);
    }

    #[test]
    fn canonicality_checks() {
        let s = half_space();
        let f0 = pm_one(&s);
        let prod = f0.tensor_product(&f0.retag_row(2).unwrap()).unwrap();
        assert!(prod.is_canonical(0.0));
        let c = Kernel::univariate(s.clone(), vec![Rational::one(); 2]).unwrap();
        assert!(!c.is_canonical(1e-10));
        // h(x,y) = xy - 1/4 on {0,1} uniform is not canonical
        let s01 = Space::<Rational>::uniform(2).unwrap();
        let h = Kernel::from_fn(
            s01,
            vec![Vertex::plain(1, 1), Vertex::plain(1, 2)],
            |idx| Rational::from_int((idx[0] * idx[1]) as i64) - Rational::from_ratio(1, 4),
        )
        .unwrap();
        assert!(!h.is_canonical(1e-10));
        let (_, defect) = h.canonical_defect().unwrap();
        assert_eq!(defect, Rational::from_ratio(1, 4));
    }

    #[test]
    fn hoeffding_of_canonical_kernel_is_trivial() {
        let s = half_space();
        let f0 = pm_one(&s);
        let f = f0.tensor_product(&f0.retag_row(2).unwrap()).unwrap();
        let parts = f.hoeffding_decompose().unwrap();
        for (subset, comp) in &parts {
            if subset.len() == f.order() {
                assert_eq!(comp, &f);
            } else {
                assert!(comp.sup_norm_value().is_zero());
            }
        }
    }

    #[test]
    fn hoeffding_of_identity_on_01() {
        // h(x) = x on {0,1} uniform: { {} : 1/2, {axis} : x - 1/2 }
        let s = Space::<Rational>::uniform(2).unwrap();
        let h = Kernel::univariate(s, vec![Rational::zero(), Rational::one()]).unwrap();
        let parts = h.hoeffding_decompose().unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(
            *parts.get(&vec![]).unwrap().scalar_value(),
            Rational::from_ratio(1, 2)
        );
        let top = parts.get(&vec![Vertex::plain(1, 1)]).unwrap();
        assert_eq!(
            top.values(),
            &[Rational::from_ratio(-1, 2), Rational::from_ratio(1, 2)]
        );
        assert!(top.is_canonical(0.0));
    }

    #[test]
    fn hoeffding_of_constant() {
        let s = half_space();
        let c = Kernel::univariate(s, vec![Rational::from_int(9); 2]).unwrap();
        let parts = c.hoeffding_decompose().unwrap();
        assert_eq!(
            *parts.get(&vec![]).unwrap().scalar_value(),
            Rational::from_int(9)
        );
        assert!(parts
            .get(&vec![Vertex::plain(1, 1)])
            .unwrap()
            .sup_norm_value()
            .is_zero());
    }

    #[test]
    fn hoeffding_components_sum_back() {
        let s = Space::<Rational>::from_parts(&[2, 1, 1]).unwrap();
        let h = Kernel::from_fn(
            s.clone(),
            vec![Vertex::plain(1, 1), Vertex::plain(1, 2)],
            |idx| Rational::from_ratio((idx[0] * 3 + idx[1] * idx[1]) as i64 - 2, 4),
        )
        .unwrap();
        let parts = h.hoeffding_decompose().unwrap();
        let mut total = h.scale(&Rational::zero());
        for (subset, comp) in &parts {
            if !subset.is_empty() {
                assert!(comp.is_canonical(0.0));
            }
            let missing: Vec<Vertex> = h
                .axes()
                .iter()
                .copied()
                .filter(|a| !subset.contains(a))
                .collect();
            total = total.add(&comp.broadcast_insert(&missing).unwrap()).unwrap();
        }
        assert_eq!(total, h);
    }

    #[test]
    fn tensor_product_examples() {
        let s = half_space();
        let f = pm_one(&s);
        let g = f.retag_row(2).unwrap();
        let fg = f.tensor_product(&g).unwrap();
        let one = Rational::one();
        assert_eq!(
            fg.values(),
            &[one.clone(), -one.clone(), -one.clone(), one.clone()]
        );
        // scalar factor multiplies through
        let c = Kernel::scalar(s.clone(), Rational::from_int(3));
        let cf = f.tensor_product(&c).unwrap();
        assert_eq!(cf, f.scale(&Rational::from_int(3)));
        // shared labels are rejected
        assert!(f.tensor_product(&f).is_err());
        // mismatched spaces are rejected
        let other = Space::<Rational>::uniform(3).unwrap();
        let h = Kernel::univariate(other, vec![Rational::zero(); 3]).unwrap();
        assert!(matches!(
            f.tensor_product(&h.retag_row(2).unwrap()),
            Err(Error::SpaceMismatch)
        ));
    }

    #[test]
    fn tensor_product_l2_factorizes() {
        let s = Space::<Rational>::from_parts(&[1, 2, 1]).unwrap();
        let f = Kernel::univariate(
            s.clone(),
            vec![
                Rational::from_ratio(1, 2),
                Rational::from_int(-1),
                Rational::from_ratio(2, 3),
            ],
        )
        .unwrap();
        let g = Kernel::from_fn(
            s.clone(),
            vec![Vertex::plain(2, 1), Vertex::plain(2, 2)],
            |idx| Rational::from_int(idx[0] as i64 - idx[1] as i64),
        )
        .unwrap();
        let fg = f.tensor_product(&g).unwrap();
        assert_eq!(fg.l2_norm_sq(), f.l2_norm_sq() * g.l2_norm_sq());
    }

    #[test]
    fn substitute_identity_and_diagonal() {
        let s = half_space();
        let f = pm_one(&s);
        let g = f.retag_row(2).unwrap();
        let fg = f.tensor_product(&g).unwrap();
        // identity mapping
        let id: BTreeMap<Vertex, Vertex> = BTreeMap::new();
        assert_eq!(fg.substitute(&id).unwrap(), fg);
        // (1,1) -> (2,1): diagonal of the 2x2 product = (f*g)(y) = (1,1)
        let mut m = BTreeMap::new();
        m.insert(Vertex::plain(1, 1), Vertex::plain(2, 1));
        let d = fg.substitute(&m).unwrap();
        assert_eq!(d.axes(), &[Vertex::plain(2, 1)]);
        assert_eq!(d.values(), &[Rational::one(), Rational::one()]);
    }

    #[test]
    fn substitute_extracts_matrix_diagonal() {
        let s = half_space();
        let h = Kernel::new(
            s,
            vec![Vertex::plain(1, 1), Vertex::plain(1, 2)],
            vec![
                Rational::from_int(1),
                Rational::from_int(2),
                Rational::from_int(3),
                Rational::from_int(4),
            ],
        )
        .unwrap();
        let mut m = BTreeMap::new();
        m.insert(Vertex::plain(1, 1), Vertex::plain(1, 2));
        let d = h.substitute(&m).unwrap();
        assert_eq!(d.values(), &[Rational::from_int(1), Rational::from_int(4)]);
        // unknown key errors
        let mut bad = BTreeMap::new();
        bad.insert(Vertex::plain(9, 9), Vertex::plain(1, 1));
        assert!(h.substitute(&bad).is_err());
    }

    #[test]
    fn unsorted_axes_are_normalized() {
        // Values given row-major over (2,1),(1,1) must land transposed.
        let s = half_space();
        let k = Kernel::new(
            s,
            vec![Vertex::plain(2, 1), Vertex::plain(1, 1)],
            vec![
                Rational::from_int(1),
                Rational::from_int(2),
                Rational::from_int(3),
                Rational::from_int(4),
            ],
        )
        .unwrap();
        assert_eq!(k.axes(), &[Vertex::plain(1, 1), Vertex::plain(2, 1)]);
        assert_eq!(
            k.values(),
            &[
                Rational::from_int(1),
                Rational::from_int(3),
                Rational::from_int(2),
                Rational::from_int(4)
            ]
        );
    }

    #[test]
    fn p_plus_q_is_identity_and_pq_vanishes() {
        let s = Space::<Rational>::from_parts(&[3, 1]).unwrap();
        let h = Kernel::from_fn(
            s.clone(),
            vec![Vertex::plain(1, 1), Vertex::plain(1, 2)],
            |idx| Rational::from_ratio(idx[0] as i64 * 2 - idx[1] as i64 + 1, 3),
        )
        .unwrap();
        for &axis in h.axes() {
            let q = h.center(axis).unwrap();
            let p = h.integrate_out(axis).unwrap();
            let back = q
                .add(&p.broadcast_insert(&[axis]).unwrap())
                .unwrap();
            assert_eq!(back, h);
            assert!(q
                .integrate_out(axis)
                .unwrap()
                .sup_norm_value()
                .is_zero());
        }
    }

    #[test]
    fn p_and_q_commute_across_axes() {
        let s = Space::<Rational>::from_parts(&[1, 1, 2]).unwrap();
        let h = Kernel::from_fn(
            s.clone(),
            vec![Vertex::plain(1, 1), Vertex::plain(1, 2)],
            |idx| Rational::from_ratio((idx[0] * idx[0] + 3 * idx[1]) as i64 - 3, 5),
        )
        .unwrap();
        let a = Vertex::plain(1, 1);
        let b = Vertex::plain(1, 2);
        let qp = h.center(a).unwrap().integrate_out(b).unwrap();
        let pq = h.integrate_out(b).unwrap().center(a).unwrap();
        assert_eq!(qp, pq);
        let qq = h.center(a).unwrap().center(b).unwrap();
        let qq2 = h.center(b).unwrap().center(a).unwrap();
        assert_eq!(qq, qq2);
    }

    #[test]
    fn operator_norm_contractions() {
        // ||P_u h||_2 <= ||h||_2, ||Q~_u h||_2 <= 2 ||h||_2, same in sup norm.
        let s = Space::<f64>::from_parts(&[2, 5, 3]).unwrap();
        let mut rng = 0u64;
        let mut next = move || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng >> 33) as f64 / (1u64 << 31) as f64) * 2.0 - 1.0
        };
        for _ in 0..20 {
            let h = Kernel::from_fn(
                s.clone(),
                vec![Vertex::plain(1, 1), Vertex::plain(1, 2)],
                |_| next(),
            )
            .unwrap();
            for &axis in h.axes() {
                let p = h.integrate_out(axis).unwrap();
                let t = h.tilde_center(axis).unwrap();
                assert!(p.l2_norm() <= h.l2_norm() + 1e-12);
                assert!(t.l2_norm() <= 2.0 * h.l2_norm() + 1e-12);
                assert!(p.sup_norm() <= h.sup_norm() + 1e-12);
                assert!(t.sup_norm() <= 2.0 * h.sup_norm() + 1e-12);
            }
        }
    }
}
