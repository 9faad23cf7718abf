//! Vertex labels `(l, j)` and copy vertices `(l, j, C)`.
//!
//! A vertex names both a diagram node and a kernel axis: the variables of
//! every kernel built by the calculus are indexed by the diagram vertices
//! they came from, so substitutions driven by diagram edges are unambiguous.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A diagram vertex / kernel axis label.
///
/// Ordering is lexicographic in `(row, pos, copy)` with the plain vertex
/// sorting before its copy; enumeration order and kernel axis order both
/// rely on it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex {
    /// Row index `l`, starting at 1.
    pub row: u32,
    /// Position `j` inside the row, starting at 1.
    pub pos: u32,
    /// Whether this is the copy vertex `(l, j, C)`.
    pub copy: bool,
}

impl Vertex {
    pub const fn plain(row: u32, pos: u32) -> Self {
        Vertex {
            row,
            pos,
            copy: false,
        }
    }

    pub const fn copy_of(row: u32, pos: u32) -> Self {
        Vertex {
            row,
            pos,
            copy: true,
        }
    }

    /// The copy vertex sharing this label's `(row, pos)`.
    pub const fn twin_copy(self) -> Self {
        Vertex {
            row: self.row,
            pos: self.pos,
            copy: true,
        }
    }

    /// The plain vertex sharing this label's `(row, pos)`.
    pub const fn twin_plain(self) -> Self {
        Vertex {
            row: self.row,
            pos: self.pos,
            copy: false,
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.copy {
            write!(f, "({},{},C)", self.row, self.pos)
        } else {
            write!(f, "({},{})", self.row, self.pos)
        }
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Labels `(row, 1), ..., (row, k)` for a fresh row of `k` plain vertices.
pub fn row_labels(row: u32, k: usize) -> Vec<Vertex> {
    (1..=k as u32).map(|j| Vertex::plain(row, j)).collect()
}
