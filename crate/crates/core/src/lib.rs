//! Self-similar axisymmetric Navier–Stokes solutions and their vanishing
//! viscosity limits.
//!
//! The velocity fields are (-1)-homogeneous and reduce to a scalar Riccati
//! equation for `U(x)`, `x = cos theta`. The crate solves that equation on
//! the full admissible parameter region, compares the solutions with their
//! Euler limits `±sqrt(2 P_c)` and transition-layer asymptotics, and measures
//! convergence rates as `nu -> 0`.

pub mod error;
pub mod eulerlim;
pub mod field;
pub mod figures;
pub mod layers;
pub mod ode;
pub mod polyparams;
pub mod profile;
pub mod riccati;
pub mod vanish;

pub use error::{Error, Result};
pub use polyparams::{classify, Alpha, Coeffs, Regime, RegimeKind};
pub use profile::{Branch, SolutionProfile};
pub use riccati::{Solver, SolverConfig};
