//! Computational engine for the diagram calculus of degenerate
//! U-statistics and Gaussian chaos on finite probability spaces.
//!
//! Products of degenerate U-statistics are rewritten as sums of degenerate
//! U-statistics indexed by colored diagrams; expectations reduce to sums
//! over closed diagrams; Gaussian product moments reduce to sums over
//! pairing diagrams. Because the base space is finite, every identity can
//! be checked pointwise on each sample assignment — exactly in rational
//! arithmetic, or in floats against a tolerance — and every Bernstein-type
//! tail or moment bound can be compared against exact oracles and Monte
//! Carlo simulation.

pub mod bounds;
pub mod calculus;
pub mod diagrams;
pub mod error;
pub mod gaussian;
pub mod gen;
pub mod io;
pub mod kernel;
pub mod scalar;
pub mod space;
pub mod ustat;
pub mod vertex;

pub use error::{Error, Result};
pub use kernel::Kernel;
pub use scalar::{Rational, Scalar};
pub use space::Space;
pub use vertex::Vertex;
