//! Radial ground states on the Nehari manifold for
//! `-Δu + u = -λ|x|^{-s1}|u|^{p-2}u + |x|^{-s2}|u|^{q-2}u` in `R^N`.
//!
//! * [`params`]: parameter validation, critical exponents, regime dispatch.
//! * [`fiber`]: exact fibering algebra on the four energy integrals.
//! * [`grid`]: graded radial mesh, singular-weight quadrature, H¹ Riesz map.
//! * [`functional`]: `I`, `phi`, `psi` and their H¹ gradients on fields.
//! * [`solver`]: `M+` initialization and projected descent.
//! * [`identities`]: Nehari/Pohozaev residuals and the critical-regime certificate.

pub mod error;
pub mod fiber;
pub mod functional;
pub mod grid;
pub mod identities;
pub mod params;
pub mod solver;

pub use error::{Error, Result};
pub use fiber::{FiberCoeffs, FiberRoots, M0Point};
pub use grid::{GridSpec, RadialField, RadialGrid, Weight};
pub use params::{Params, Regime, RegimeTag};
pub use solver::{SolveReport, SolverConfig};
