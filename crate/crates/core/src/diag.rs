//! Error and diagnostic types shared by every solver layer.
//!
//! Degeneracies are first-class outcomes here, not bugs: the interface
//! equations lose validity where the interface speed or the delta amplitude
//! vanishes, and solvers terminate with a typed [`Diagnostic`] carrying the
//! last valid state instead of silently truncating.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A typed record of why a solve stopped early or deviated from the nominal
/// contract. Diagnostics ride along with partial results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// Interface speed reached zero; the second-order interface equation is
    /// degenerate there.
    SpeedDegeneracy { t: f64, phi: f64, dphi: f64 },
    /// Delta amplitude reached zero mid-segment.
    AmplitudeDegeneracy { t: f64, phi: f64, e: f64 },
    /// Adaptive step size underflowed; carries the last valid state.
    StepUnderflow { t: f64, state: Vec<f64> },
    /// The regime inequality for the active rarefaction configuration was
    /// violated.
    ConditionViolation { t: f64, phi: f64, margin: f64 },
    /// Interface speed left the admissible band of side speeds.
    AdmissibilityViolation { t: f64, dphi: f64, lo: f64, hi: f64 },
    /// Shooting found no slope bracketing the target.
    NoSolution { best_slope: f64, best_residual: f64 },
    /// Iteration budget exhausted before the residual tolerance was met.
    NonConvergence { best_slope: f64, best_residual: f64 },
    /// Several shooting slopes satisfy the boundary conditions.
    AmbiguousSolutions { slopes: Vec<f64> },
    /// A scalar function returned non-finite values over most of the grid.
    EvaluationFailure { t: f64 },
    /// Both trajectories coincide within tolerance; no isolated intersection.
    CoincidentTrajectories,
    /// Fan closing coefficient is undefined (half-wave resonance).
    DegenerateB { n: f64, t_star: f64 },
    /// Switching curve undefined (vanishing denominator).
    UndefinedCurve { t: f64 },
    /// Switching-curve roots could not be paired within tolerance.
    InconsistentSwitch {
        psi1_roots: Vec<f64>,
        psi2_roots: Vec<f64>,
    },
    /// The delta amplitude delivered at a junction differs from the
    /// segment's nominal entry value.
    EntryMismatch {
        t: f64,
        nominal: f64,
        delivered: f64,
    },
    /// Amplitude at a switch endpoint differs from zero beyond tolerance.
    ExitMismatch { t: f64, e: f64 },
    /// A sub-interval could not be entered at all (no viable entry slope).
    NoViableEntry { t: f64 },
    /// A gap in time or interface position between consecutive segments.
    Gap { t: f64, width: f64 },
    /// Two separately integrated arcs meet here with mismatched positions.
    SeamJump { t: f64, phi_gap: f64 },
}

impl Diagnostic {
    /// Degeneracy diagnostics signal that integration stalled and the result
    /// is partial.
    pub fn is_stall(&self) -> bool {
        matches!(
            self,
            Diagnostic::SpeedDegeneracy { .. }
                | Diagnostic::AmplitudeDegeneracy { .. }
                | Diagnostic::StepUnderflow { .. }
                | Diagnostic::ConditionViolation { .. }
                | Diagnostic::AdmissibilityViolation { .. }
                | Diagnostic::NoViableEntry { .. }
        )
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::SpeedDegeneracy { t, phi, dphi } => {
                write!(f, "speed degeneracy at t={t}: phi={phi}, phi'={dphi}")
            }
            Diagnostic::AmplitudeDegeneracy { t, phi, e } => {
                write!(f, "amplitude degeneracy at t={t}: phi={phi}, e={e}")
            }
            Diagnostic::StepUnderflow { t, .. } => write!(f, "step underflow at t={t}"),
            Diagnostic::ConditionViolation { t, margin, .. } => {
                write!(f, "regime condition violated at t={t} (margin {margin})")
            }
            Diagnostic::AdmissibilityViolation { t, dphi, lo, hi } => {
                write!(f, "speed {dphi} left admissible band [{lo}, {hi}] at t={t}")
            }
            Diagnostic::NoSolution {
                best_slope,
                best_residual,
            } => {
                write!(
                    f,
                    "no shooting solution (best slope {best_slope}, residual {best_residual})"
                )
            }
            Diagnostic::NonConvergence {
                best_slope,
                best_residual,
            } => {
                write!(
                    f,
                    "shooting did not converge (best slope {best_slope}, residual {best_residual})"
                )
            }
            Diagnostic::AmbiguousSolutions { slopes } => {
                write!(f, "multiple shooting solutions: {slopes:?}")
            }
            Diagnostic::EvaluationFailure { t } => write!(f, "non-finite evaluation near t={t}"),
            Diagnostic::CoincidentTrajectories => write!(f, "trajectories coincide"),
            Diagnostic::DegenerateB { n, t_star } => {
                write!(f, "fan coefficient undefined for n={n}, t*={t_star}")
            }
            Diagnostic::UndefinedCurve { t } => write!(f, "switching curve undefined at t={t}"),
            Diagnostic::InconsistentSwitch { .. } => {
                write!(f, "switching-curve roots inconsistent")
            }
            Diagnostic::EntryMismatch {
                t,
                nominal,
                delivered,
            } => {
                write!(
                    f,
                    "entry amplitude at t={t}: nominal {nominal}, delivered {delivered}"
                )
            }
            Diagnostic::ExitMismatch { t, e } => write!(f, "amplitude {e} nonzero at switch t={t}"),
            Diagnostic::NoViableEntry { t } => write!(f, "no viable entry slope at t={t}"),
            Diagnostic::Gap { t, width } => write!(f, "gap of width {width} at t={t}"),
            Diagnostic::SeamJump { t, phi_gap } => {
                write!(f, "arcs meet at t={t} with position mismatch {phi_gap}")
            }
        }
    }
}

/// Hard failures. Degenerate data and evaluation breakdowns surface here;
/// recoverable solver stalls stay inside results as [`Diagnostic`]s.
#[derive(Debug, Error)]
pub enum CpError {
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("{0}")]
    Numerics(Diagnostic),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CpError>;
