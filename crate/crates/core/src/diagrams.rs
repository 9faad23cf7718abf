//! Diagram classes and their enumeration.
//!
//! Three families of labeled diagrams drive the calculus:
//! * pairing diagrams: perfect matchings across rows with no intra-row
//!   edges, indexing Gaussian product moments;
//! * two-row colored diagrams: partial cross-row matchings whose edges
//!   carry a `+1` (integrate) or `-1` (center) color;
//! * multi-row colored diagrams, built level by level, where the lower
//!   end-point of every `-1` edge spawns a permissible copy vertex that
//!   later rows may attach to.
//!
//! Enumeration order is fixed and documented so that streams are
//! reproducible: rows in increasing level, lower end-points in increasing
//! position, the no-edge option first, candidate upper end-points in
//! lexicographic `(row, pos, copy)` order, and color `-1` before `+1`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vertex::Vertex;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Color {
    Minus,
    Plus,
}

impl Color {
    pub fn sign(self) -> i8 {
        match self {
            Color::Minus => -1,
            Color::Plus => 1,
        }
    }

    pub fn from_sign(sign: i8) -> Result<Self> {
        match sign {
            -1 => Ok(Color::Minus),
            1 => Ok(Color::Plus),
            other => Err(Error::InvalidParameter(format!(
                "edge color must be +1 or -1, got {other}"
            ))),
        }
    }
}

/// A colored edge; `lower.row > upper.row` and the lower end-point is
/// always a plain vertex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Edge {
    pub upper: Vertex,
    pub lower: Vertex,
    pub color: Color,
}

/// A perfect cross-row matching: every vertex is covered by exactly one
/// edge and no edge stays inside a row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairingDiagram {
    row_sizes: Vec<usize>,
    /// Edges as `(upper, lower)` pairs with `upper.row < lower.row`,
    /// sorted by upper end-point.
    edges: Vec<(Vertex, Vertex)>,
}

impl PairingDiagram {
    pub fn new(row_sizes: Vec<usize>, mut edges: Vec<(Vertex, Vertex)>) -> Result<Self> {
        edges.sort();
        let mut covered = BTreeSet::new();
        for &(u, l) in &edges {
            if u.copy || l.copy {
                return Err(Error::IncompatibleDiagram(
                    "pairing diagrams have no copy vertices".into(),
                ));
            }
            if u.row >= l.row {
                return Err(Error::IncompatibleDiagram(format!(
                    "edge {u}-{l} does not go downward across rows"
                )));
            }
            for v in [u, l] {
                check_in_rows(&row_sizes, v)?;
                if !covered.insert(v) {
                    return Err(Error::IncompatibleDiagram(format!(
                        "vertex {v} is covered twice"
                    )));
                }
            }
        }
        let total: usize = row_sizes.iter().sum();
        if covered.len() != total {
            return Err(Error::IncompatibleDiagram(format!(
                "{} of {total} vertices covered",
                covered.len()
            )));
        }
        Ok(PairingDiagram { row_sizes, edges })
    }

    pub fn row_sizes(&self) -> &[usize] {
        &self.row_sizes
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    /// Number of edges `N = (sum k_l) / 2`.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
}

fn check_in_rows(row_sizes: &[usize], v: Vertex) -> Result<()> {
    let ok = v.row >= 1
        && (v.row as usize) <= row_sizes.len()
        && v.pos >= 1
        && (v.pos as usize) <= row_sizes[(v.row - 1) as usize];
    if ok {
        Ok(())
    } else {
        Err(Error::IncompatibleDiagram(format!(
            "vertex {v} outside rows {row_sizes:?}"
        )))
    }
}

/// All pairing diagrams over the given row sizes, in deterministic
/// lexicographic order. Empty when no perfect cross-row matching exists.
pub fn pairings(row_sizes: &[usize]) -> Vec<PairingDiagram> {
    let mut verts = Vec::new();
    for (l, &k) in row_sizes.iter().enumerate() {
        for j in 1..=k as u32 {
            verts.push(Vertex::plain(l as u32 + 1, j));
        }
    }
    let mut out = Vec::new();
    let mut edges = Vec::new();
    let mut free: Vec<bool> = vec![true; verts.len()];
    pair_rec(row_sizes, &verts, &mut free, &mut edges, &mut out);
    out
}

fn pair_rec(
    row_sizes: &[usize],
    verts: &[Vertex],
    free: &mut [bool],
    edges: &mut Vec<(Vertex, Vertex)>,
    out: &mut Vec<PairingDiagram>,
) {
    let first = match free.iter().position(|&f| f) {
        None => {
            out.push(
                PairingDiagram::new(row_sizes.to_vec(), edges.clone())
                    .expect("enumerator builds valid pairings"),
            );
            return;
        }
        Some(i) => i,
    };
    free[first] = false;
    for j in first + 1..verts.len() {
        if free[j] && verts[j].row != verts[first].row {
            free[j] = false;
            edges.push((verts[first], verts[j]));
            pair_rec(row_sizes, verts, free, edges, out);
            edges.pop();
            free[j] = true;
        }
    }
    free[first] = true;
}

/// `(2N-1)!!`: the number of perfect matchings of `2N` labeled vertices
/// when intra-row edges are allowed. Errors on an odd vertex count.
pub fn double_factorial_pairings(total_vertices: usize) -> Result<u128> {
    if total_vertices % 2 != 0 {
        return Err(Error::OddVertexCount(total_vertices));
    }
    let mut acc: u128 = 1;
    let mut m = 1u128;
    while m + 1 < total_vertices as u128 {
        m += 2;
        acc = acc
            .checked_mul(m)
            .ok_or_else(|| Error::ResourceLimit("double factorial overflows u128".into()))?;
    }
    Ok(acc)
}

/// Counts perfect matchings of `total_vertices` labeled points by direct
/// enumeration (intra-row edges allowed). Cross-checks the double
/// factorial; zero for odd counts.
pub fn perfect_matching_count_brute(total_vertices: usize) -> u128 {
    // The first free vertex pairs with each remaining one in turn, so every
    // matching is visited exactly once.
    fn rec(free: &mut Vec<usize>) -> u128 {
        let Some(first) = free.pop() else {
            return 1;
        };
        let mut total = 0u128;
        for i in 0..free.len() {
            let partner = free.remove(i);
            total += rec(free);
            free.insert(i, partner);
        }
        free.push(first);
        total
    }
    if total_vertices % 2 == 1 {
        return 0;
    }
    let mut free: Vec<usize> = (0..total_vertices).collect();
    rec(&mut free)
}

/// A colored diagram over rows of plain vertices plus the copy vertices
/// made permissible by `-1` edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredDiagram {
    row_sizes: Vec<usize>,
    /// Sorted by `(lower, upper)`; lower end-points are unique.
    edges: Vec<Edge>,
    /// Copy vertices `(l,j,C)` whose plain twin is the lower end-point of
    /// a `-1` edge. Fully determined by `edges`; stored for direct access.
    permissible_copies: BTreeSet<Vertex>,
}

impl ColoredDiagram {
    pub fn new(row_sizes: Vec<usize>, mut edges: Vec<Edge>) -> Result<Self> {
        edges.sort_by_key(|e| (e.lower, e.upper));
        let mut endpoint_of = BTreeSet::new();
        for e in &edges {
            if e.lower.copy {
                return Err(Error::IncompatibleDiagram(format!(
                    "lower end-point {} must be a plain vertex",
                    e.lower
                )));
            }
            if e.upper.row >= e.lower.row {
                return Err(Error::IncompatibleDiagram(format!(
                    "edge {}-{} does not go downward across rows",
                    e.upper, e.lower
                )));
            }
            check_in_rows(&row_sizes, e.upper.twin_plain())?;
            check_in_rows(&row_sizes, e.lower)?;
            for v in [e.upper, e.lower] {
                if !endpoint_of.insert(v) {
                    return Err(Error::IncompatibleDiagram(format!(
                        "vertex {v} carries two edges"
                    )));
                }
            }
        }
        let permissible_copies: BTreeSet<Vertex> = edges
            .iter()
            .filter(|e| e.color == Color::Minus)
            .map(|e| e.lower.twin_copy())
            .collect();
        for e in &edges {
            if e.upper.copy && !permissible_copies.contains(&e.upper) {
                return Err(Error::IncompatibleDiagram(format!(
                    "copy vertex {} is not permissible (its twin has no -1 edge)",
                    e.upper
                )));
            }
        }
        Ok(ColoredDiagram {
            row_sizes,
            edges,
            permissible_copies,
        })
    }

    pub fn row_sizes(&self) -> &[usize] {
        &self.row_sizes
    }

    pub fn num_rows(&self) -> usize {
        self.row_sizes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn permissible_copies(&self) -> &BTreeSet<Vertex> {
        &self.permissible_copies
    }

    /// Edges whose lower end-point sits in row `level`.
    pub fn edges_at_level(&self, level: u32) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.lower.row == level)
    }

    /// All permissible vertices: every plain vertex plus the permissible
    /// copies. Their count is `sum k_l + |W|`.
    pub fn permissible_vertices(&self) -> Vec<Vertex> {
        let mut all = Vec::new();
        for (l, &k) in self.row_sizes.iter().enumerate() {
            for j in 1..=k as u32 {
                all.push(Vertex::plain(l as u32 + 1, j));
            }
        }
        all.extend(self.permissible_copies.iter().copied());
        all.sort();
        all
    }

    /// Permissible vertices that are not an end-point of any edge. Their
    /// count equals the diagram order `k(gamma)`.
    pub fn free_vertices(&self) -> Vec<Vertex> {
        let used: BTreeSet<Vertex> = self
            .edges
            .iter()
            .flat_map(|e| [e.upper, e.lower])
            .collect();
        self.permissible_vertices()
            .into_iter()
            .filter(|v| !used.contains(v))
            .collect()
    }

    pub fn is_closed(&self) -> bool {
        self.stats().order == 0
    }

    pub fn stats(&self) -> DiagramStats {
        let rows = self.num_rows();
        let mut per_row_plus = vec![0usize; rows];
        let mut per_row_minus = vec![0usize; rows];
        for e in &self.edges {
            let r = (e.lower.row - 1) as usize;
            match e.color {
                Color::Plus => per_row_plus[r] += 1,
                Color::Minus => per_row_minus[r] += 1,
            }
        }
        let plus_edges: usize = per_row_plus.iter().sum();
        let minus_edges: usize = per_row_minus.iter().sum();
        let total: usize = self.row_sizes.iter().sum();
        let order = total - 2 * plus_edges - minus_edges;
        let rows_with_minus_lower = per_row_minus.iter().filter(|&&c| c > 0).count();
        DiagramStats {
            row_sizes: self.row_sizes.clone(),
            order,
            plus_edges,
            minus_edges,
            rows_with_minus_lower,
            per_row_plus,
            per_row_minus,
        }
    }
}

/// Edge/vertex counts of a colored diagram, per row and accumulated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagramStats {
    row_sizes: Vec<usize>,
    /// `k(gamma)`: number of free permissible vertices.
    pub order: usize,
    /// `|Z|`: number of `+1` edges.
    pub plus_edges: usize,
    /// `|W|`: number of `-1` edges.
    pub minus_edges: usize,
    /// `U`: number of rows containing a `-1` lower end-point.
    pub rows_with_minus_lower: usize,
    /// `|B_{(b,1)}(l)|` per row (index `l-1`).
    pub per_row_plus: Vec<usize>,
    /// `|B_{(b,-1)}(l)|` per row (index `l-1`).
    pub per_row_minus: Vec<usize>,
}

impl DiagramStats {
    /// `k(gamma(l))`: order of the level-`l` restriction, rows `1..=l`.
    pub fn order_prefix(&self, level: usize) -> usize {
        let mut acc = 0usize;
        for l in 0..level.min(self.row_sizes.len()) {
            acc += self.row_sizes[l];
            acc -= 2 * self.per_row_plus[l] + self.per_row_minus[l];
        }
        acc
    }

    /// `|W(l,gamma)|`: `-1` edges with level `<= l`.
    pub fn minus_prefix(&self, level: usize) -> usize {
        self.per_row_minus[..level.min(self.per_row_minus.len())]
            .iter()
            .sum()
    }

    /// `U(l,gamma)` count: rows `<= l` containing a `-1` lower end-point.
    pub fn rows_with_minus_prefix(&self, level: usize) -> usize {
        self.per_row_minus[..level.min(self.per_row_minus.len())]
            .iter()
            .filter(|&&c| c > 0)
            .count()
    }
}

/// Two-row colored diagrams over rows of sizes `(k1, k2)`: every partial
/// cross-row matching with every edge coloring, enumerated directly.
pub fn colored_pair(k1: usize, k2: usize) -> Vec<ColoredDiagram> {
    let rows = vec![k1, k2];
    let mut out = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut upper_free = vec![true; k1];
    fn rec(
        rows: &[usize],
        j: usize,
        upper_free: &mut [bool],
        edges: &mut Vec<Edge>,
        out: &mut Vec<ColoredDiagram>,
    ) {
        if j > rows[1] {
            out.push(
                ColoredDiagram::new(rows.to_vec(), edges.clone())
                    .expect("enumerator builds valid diagrams"),
            );
            return;
        }
        // no edge into (2,j)
        rec(rows, j + 1, upper_free, edges, out);
        for i in 0..upper_free.len() {
            if !upper_free[i] {
                continue;
            }
            upper_free[i] = false;
            for color in [Color::Minus, Color::Plus] {
                edges.push(Edge {
                    upper: Vertex::plain(1, i as u32 + 1),
                    lower: Vertex::plain(2, j as u32),
                    color,
                });
                rec(rows, j + 1, upper_free, edges, out);
                edges.pop();
            }
            upper_free[i] = true;
        }
    }
    rec(&rows, 1, &mut upper_free, &mut edges, &mut out);
    out
}

/// Multi-row colored diagrams built by the level-by-level construction:
/// edges into row `l` start from vertices still free after level `l-1`,
/// and each `-1` lower end-point makes its copy vertex permissible for
/// later rows.
pub fn colored_multi(row_sizes: &[usize]) -> Vec<ColoredDiagram> {
    let mut out = Vec::new();
    visit_colored_multi(row_sizes, |d| out.push(d.clone()));
    out
}

/// Visitor form of [`colored_multi`]; diagrams are produced lazily in the
/// documented deterministic order.
pub fn visit_colored_multi(row_sizes: &[usize], mut f: impl FnMut(&ColoredDiagram)) {
    visit_multi_impl(row_sizes, false, &mut |d| f(d));
}

/// Visits only closed diagrams (`k(gamma) = 0`), pruning branches whose
/// free vertices already outnumber the lower end-points still to come.
pub fn visit_closed_multi(row_sizes: &[usize], mut f: impl FnMut(&ColoredDiagram)) {
    visit_multi_impl(row_sizes, true, &mut |d| f(d));
}

fn visit_multi_impl(row_sizes: &[usize], closed_only: bool, f: &mut dyn FnMut(&ColoredDiagram)) {
    let levels = row_sizes.len();
    // capacity[l] = lower end-points available in rows strictly after l+1
    let mut state = MultiState {
        row_sizes: row_sizes.to_vec(),
        free: (1..=row_sizes.first().copied().unwrap_or(0) as u32)
            .map(|j| Vertex::plain(1, j))
            .collect(),
        edges: Vec::new(),
        closed_only,
    };
    if levels <= 1 {
        // A single row has no edges; it is closed only when empty.
        if !closed_only || row_sizes.iter().sum::<usize>() == 0 {
            f(&ColoredDiagram::new(row_sizes.to_vec(), Vec::new())
                .expect("rowed diagram with no edges is valid"));
        }
        return;
    }
    state.level(2, f);
}

struct MultiState {
    row_sizes: Vec<usize>,
    free: BTreeSet<Vertex>,
    edges: Vec<Edge>,
    closed_only: bool,
}

impl MultiState {
    fn remaining_capacity(&self, level_done: usize) -> usize {
        self.row_sizes[level_done..].iter().sum()
    }

    fn level(&mut self, l: usize, f: &mut dyn FnMut(&ColoredDiagram)) {
        let k_l = self.row_sizes[l - 1];
        self.position(l, 1, k_l, Vec::new(), f);
    }

    fn position(
        &mut self,
        l: usize,
        j: usize,
        k_l: usize,
        matched_lowers: Vec<(u32, Color)>,
        f: &mut dyn FnMut(&ColoredDiagram),
    ) {
        if j > k_l {
            // Level complete: update the free pool and descend.
            let mut added: Vec<Vertex> = Vec::new();
            for jj in 1..=k_l as u32 {
                match matched_lowers.iter().find(|(p, _)| *p == jj) {
                    None => added.push(Vertex::plain(l as u32, jj)),
                    Some((_, Color::Minus)) => added.push(Vertex::copy_of(l as u32, jj)),
                    Some((_, Color::Plus)) => {}
                }
            }
            for &v in &added {
                self.free.insert(v);
            }
            let prune = self.closed_only && self.free.len() > self.remaining_capacity(l);
            if !prune {
                if l == self.row_sizes.len() {
                    if !self.closed_only || self.free.is_empty() {
                        f(&ColoredDiagram::new(self.row_sizes.clone(), self.edges.clone())
                            .expect("enumerator builds valid diagrams"));
                    }
                } else {
                    self.level(l + 1, f);
                }
            }
            for &v in &added {
                self.free.remove(&v);
            }
            return;
        }
        // Option: no edge into (l, j).
        self.position(l, j + 1, k_l, matched_lowers.clone(), f);
        // Option: edge from each free earlier vertex, color -1 then +1.
        let candidates: Vec<Vertex> = self.free.iter().copied().collect();
        for upper in candidates {
            self.free.remove(&upper);
            for color in [Color::Minus, Color::Plus] {
                self.edges.push(Edge {
                    upper,
                    lower: Vertex::plain(l as u32, j as u32),
                    color,
                });
                let mut next = matched_lowers.clone();
                next.push((j as u32, color));
                self.position(l, j + 1, k_l, next, f);
                self.edges.pop();
            }
            self.free.insert(upper);
        }
    }
}

/// Partition of the closed diagrams over `2M` rows of size `k` into
/// classes by `p = |permissible copies| / 2`; every class member has
/// `|W(gamma)| = 2p`. Errors if a closed diagram has an odd copy count.
pub fn closed_classes(
    k: usize,
    two_m: usize,
) -> Result<std::collections::BTreeMap<usize, Vec<ColoredDiagram>>> {
    let rows = vec![k; two_m];
    let mut classes: std::collections::BTreeMap<usize, Vec<ColoredDiagram>> =
        std::collections::BTreeMap::new();
    let mut odd: Option<usize> = None;
    visit_closed_multi(&rows, |d| {
        let copies = d.permissible_copies().len();
        if copies % 2 != 0 {
            odd = Some(copies);
            return;
        }
        classes.entry(copies / 2).or_default().push(d.clone());
    });
    if let Some(c) = odd {
        return Err(Error::OddCopyCount(c));
    }
    Ok(classes)
}

/// Upper bound on `|Gamma(k, M, p)|`:
/// `binom(2kM, 2p) * (2kM + 2p)! / (2^(kM+p) (kM+p)!)`.
pub fn class_size_bound(k: usize, m: usize, p: usize) -> Result<u128> {
    let two_km = 2 * k * m;
    binomial(two_km, 2 * p)?
        .checked_mul(double_factorial_pairings(two_km + 2 * p)?)
        .ok_or_else(|| Error::ResourceLimit("class size bound overflows u128".into()))
}

pub fn binomial(n: usize, r: usize) -> Result<u128> {
    if r > n {
        return Ok(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or_else(|| Error::ResourceLimit("binomial overflows u128".into()))?;
        acc /= (i + 1) as u128;
    }
    Ok(acc)
}
