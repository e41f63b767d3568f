//! Free-boundary Riemann problem for one-dimensional cold plasma at the
//! interface of two media with different constant background densities.
//!
//! The medium on each side of a free interface `x = Phi(t)` carries a constant
//! ion background density `n`, so constant-in-x states oscillate harmonically
//! with frequency `sqrt(n)`. The interface itself is a singular (delta) shock:
//! mass accumulates on it according to generalized Rankine-Hugoniot balance
//! laws. Compression and rarefaction regions alternate between intersection
//! times of the boundary Lagrangian trajectories; inside rarefaction regions
//! the solution is affine in x with time-dependent coefficients and the
//! interface switches between two-sided and one-sided wave configurations at
//! computable switching points.
//!
//! Modules:
//! - [`numerics`]: root bracketing/refinement, adaptive Runge-Kutta with event
//!   detection, shooting for two-point boundary problems.
//! - [`characteristics`]: closed-form trajectories, intersection times,
//!   regime classification.
//! - [`rarefaction`]: in-fan affine coefficients and switching-point search.
//! - [`interface_shock`]: the singular-shock interface between constant
//!   states (amplitude law, second-order interface equation, IVP/BVP).
//! - [`interface_rarefaction`]: the interface inside rarefaction regions
//!   (two-sided and one-sided systems, conjugation, smoothness criterion).
//! - [`scenario`]: timeline orchestration, periodicity, validation.
//! - [`cli`] and [`render`]: configuration, CSV/JSON export, SVG rendering.

pub mod characteristics;
pub mod cli;
pub mod diag;
pub mod interface_rarefaction;
pub mod interface_shock;
pub mod numerics;
pub mod rarefaction;
pub mod render;
pub mod scenario;

pub use characteristics::{RiemannProblem, Side, SideData};
pub use diag::{CpError, Diagnostic};
pub use numerics::SolverSettings;
pub use scenario::{Segment, SegmentKind, Timeline};
