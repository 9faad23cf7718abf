//! JSON file formats for kernels and diagrams.
//!
//! Kernel files carry the space and the value table:
//! `{"atoms":[...], "weights":[...], "axes":[[row,pos,copy],...],
//! "values":[...]}` with values row-major over the axes as listed.
//! Numbers are plain JSON floats in float mode and exact `"p/q"` strings
//! in rational mode; either representation loads into either mode.

use std::path::Path;
use std::str::FromStr;

use num::rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::diagrams::{Color, ColoredDiagram, Edge};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::scalar::Scalar;
use crate::space::Space;
use crate::vertex::Vertex;

/// A number stored either as a float or as an exact `"p/q"` string.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumRepr {
    Float(f64),
    Text(String),
}

impl NumRepr {
    pub fn from_scalar<K: Scalar>(v: &K) -> Self {
        match v.exact_string() {
            Some(s) => NumRepr::Text(s),
            None => NumRepr::Float(v.to_f64()),
        }
    }

    pub fn to_scalar<K: Scalar>(&self) -> Result<K> {
        match self {
            NumRepr::Float(v) => {
                if !v.is_finite() {
                    return Err(Error::BadNumber(v.to_string()));
                }
                Ok(K::from_f64(*v))
            }
            NumRepr::Text(s) => {
                let r = BigRational::from_str(s.trim())
                    .map_err(|_| Error::BadNumber(s.clone()))?;
                Ok(K::from_big_ratio(&r))
            }
        }
    }
}

/// On-disk kernel representation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelFile {
    pub atoms: Vec<String>,
    pub weights: Vec<NumRepr>,
    pub axes: Vec<(u32, u32, bool)>,
    pub values: Vec<NumRepr>,
}

impl KernelFile {
    pub fn from_kernel<K: Scalar>(k: &Kernel<K>) -> Self {
        KernelFile {
            atoms: k.space().atoms().to_vec(),
            weights: k
                .space()
                .weights()
                .iter()
                .map(NumRepr::from_scalar)
                .collect(),
            axes: k.axes().iter().map(|a| (a.row, a.pos, a.copy)).collect(),
            values: k.values().iter().map(NumRepr::from_scalar).collect(),
        }
    }

    pub fn to_kernel<K: Scalar>(&self) -> Result<Kernel<K>> {
        let weights: Vec<K> = self
            .weights
            .iter()
            .map(NumRepr::to_scalar)
            .collect::<Result<_>>()?;
        let space = Space::new(self.atoms.clone(), weights)?;
        let axes: Vec<Vertex> = self
            .axes
            .iter()
            .map(|&(row, pos, copy)| Vertex { row, pos, copy })
            .collect();
        let values: Vec<K> = self
            .values
            .iter()
            .map(NumRepr::to_scalar)
            .collect::<Result<_>>()?;
        Kernel::new(space, axes, values)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("kernel file serializes")
    }
}

/// On-disk diagram representation: row sizes plus
/// `[upper_row, upper_pos, upper_copy, lower_row, lower_pos, color]` per
/// edge with color `+1` or `-1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagramFile {
    pub rows: Vec<usize>,
    pub edges: Vec<(u32, u32, bool, u32, u32, i8)>,
}

impl DiagramFile {
    pub fn from_diagram(d: &ColoredDiagram) -> Self {
        DiagramFile {
            rows: d.row_sizes().to_vec(),
            edges: d
                .edges()
                .iter()
                .map(|e| {
                    (
                        e.upper.row,
                        e.upper.pos,
                        e.upper.copy,
                        e.lower.row,
                        e.lower.pos,
                        e.color.sign(),
                    )
                })
                .collect(),
        }
    }

    pub fn to_diagram(&self) -> Result<ColoredDiagram> {
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|&(ur, up, uc, lr, lp, sign)| {
                Ok(Edge {
                    upper: Vertex {
                        row: ur,
                        pos: up,
                        copy: uc,
                    },
                    lower: Vertex::plain(lr, lp),
                    color: Color::from_sign(sign)?,
                })
            })
            .collect::<Result<_>>()?;
        ColoredDiagram::new(self.rows.clone(), edges)
    }
}
