//! fraclab — a desk-scale numerical laboratory for the spectral fractional
//! operator (−div(A(x)∇))^s on bounded domains.
//!
//! The crate discretizes the operator with piecewise-linear finite elements,
//! computes its full Dirichlet spectrum, realizes fractional powers both
//! modally and through the heat-semigroup integral, solves the degenerate
//! cylinder extension problem that recovers L^s as a weighted Neumann trace,
//! and evaluates the quadratic functionals behind variational comparison
//! arguments. On top of that sit a comparison verifier for coefficient pairs
//! and Prüfer-based oscillation tooling for the radial model equations.
//!
//! Everything is deterministic: fixed summation orders, seeded randomness,
//! and byte-stable report formats.

pub mod assemble;
pub mod coeff;
pub mod compare;
pub mod config;
pub mod error;
pub mod expr;
pub mod extension;
pub mod frac;
pub mod gamma;
pub mod grid;
pub mod linalg;
pub mod ode;
pub mod picone;
pub mod pipeline;
pub mod quad;
pub mod radial;
pub mod spectral;

pub use assemble::{assemble, AssembledOperator};
pub use coeff::{MatrixCoefficient, ScalarCoefficient};
pub use error::{Error, Result};
pub use expr::Expr;
pub use frac::{frac_schroedinger_spectrum, modal_potential, FracPower};
pub use grid::{build_interval_grid, build_rectangle_grid, Grid};
pub use spectral::{eigendecompose, GridFunction, SpectralDecomposition};
