//! In-fan affine solution coefficients, the switching curves, and
//! switching-point detection inside a rarefaction region.
//!
//! A rarefaction region opens at a trajectory intersection and closes at the
//! next one. Inside it each side's solution is affine in x,
//! `V = a(t) x + b(t)`, `E = c(t) x + d(t)`, with coefficients that blow up
//! at both region ends. All coefficients here live in the fan-local frame:
//! time measured from the opening instant and abscissae measured from the
//! vertex. Callers pass absolute times; positions returned by the psi curves
//! are fan-local.

use serde::{Deserialize, Serialize};

use crate::characteristics::{state_at, trajectory_at, RiemannProblem, Side, SideData};
use crate::diag::{CpError, Diagnostic, Result};
use crate::numerics::{bracket_roots, refine_root, SolverSettings};

/// Closing coefficient `B = (1 - cos(w T))/sin(w T) = tan(w T / 2)` of a fan
/// of duration `t_star` on a side with frequency `w = sqrt(n)`.
///
/// At a full-period resonance (`sin = 0`, `cos = 1`) the limit value is 0; at
/// a half-period resonance (`cos = -1`) the quotient diverges and the fan
/// coefficient does not exist.
pub fn b_coefficient(n: f64, t_star: f64, eps: f64) -> Result<f64> {
    if !(t_star > 0.0) {
        return Err(CpError::InvalidData("fan duration must be > 0".into()));
    }
    let wt = n.sqrt() * t_star;
    let (s, c) = wt.sin_cos();
    if s.abs() > eps {
        Ok((1.0 - c) / s)
    } else if (c - 1.0).abs() <= eps.sqrt() {
        Ok(0.0)
    } else {
        Err(CpError::Numerics(Diagnostic::DegenerateB { n, t_star }))
    }
}

/// Geometry of one rarefaction region: opening instant and vertex, duration,
/// per-side closing coefficients, and the outer constant states at opening.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanGeometry {
    /// Absolute opening time.
    pub t_open: f64,
    /// Region duration; the fan closes at `t_open + duration`.
    pub duration: f64,
    /// Vertex abscissa (where both trajectories meet at opening).
    pub vertex_x: f64,
    pub b_minus: f64,
    pub b_plus: f64,
    /// Outer state of each side at the opening instant; these play the role
    /// of the initial data for the fan-local trajectories.
    pub minus_open: SideData,
    pub plus_open: SideData,
}

impl FanGeometry {
    /// Build the fan for the region `(t_open, t_close)` of `problem`.
    pub fn for_region(
        problem: &RiemannProblem,
        t_open: f64,
        t_close: f64,
        settings: &SolverSettings,
    ) -> Result<FanGeometry> {
        if !(t_close > t_open) {
            return Err(CpError::InvalidData("empty rarefaction region".into()));
        }
        let duration = t_close - t_open;
        let eps = settings.degeneracy_eps;
        let b_minus = b_coefficient(problem.left.n, duration, eps)?;
        let b_plus = b_coefficient(problem.right.n, duration, eps)?;
        let (vm, em) = state_at(&problem.left, t_open);
        let (vp, ep) = state_at(&problem.right, t_open);
        let vertex_x = trajectory_at(&problem.left, t_open);
        Ok(FanGeometry {
            t_open,
            duration,
            vertex_x,
            b_minus,
            b_plus,
            minus_open: SideData {
                n: problem.left.n,
                v0: vm,
                e0: em,
                x0: 0.0,
            },
            plus_open: SideData {
                n: problem.right.n,
                v0: vp,
                e0: ep,
                x0: 0.0,
            },
        })
    }

    pub fn t_close(&self) -> f64 {
        self.t_open + self.duration
    }

    pub fn side_open(&self, side: Side) -> &SideData {
        match side {
            Side::Minus => &self.minus_open,
            Side::Plus => &self.plus_open,
        }
    }

    pub fn b(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.b_minus,
            Side::Plus => self.b_plus,
        }
    }

    pub fn local_t(&self, t_abs: f64) -> f64 {
        t_abs - self.t_open
    }

    pub fn local_x(&self, x_abs: f64) -> f64 {
        x_abs - self.vertex_x
    }

    pub fn abs_x(&self, x_local: f64) -> f64 {
        x_local + self.vertex_x
    }

    /// Boundary trajectory of a side at absolute time `t`, in the fan-local
    /// frame (the opening vertex is the origin).
    pub fn boundary_x(&self, side: Side, t_abs: f64) -> f64 {
        trajectory_at(self.side_open(side), self.local_t(t_abs))
    }

    /// Same boundary trajectory in absolute coordinates.
    pub fn boundary_x_abs(&self, side: Side, t_abs: f64) -> f64 {
        self.abs_x(self.boundary_x(side, t_abs))
    }

    /// Outer constant state of a side at absolute time `t` (fan-local clock).
    pub fn outer_state(&self, side: Side, t_abs: f64) -> (f64, f64) {
        state_at(self.side_open(side), self.local_t(t_abs))
    }
}

/// Affine in-fan coefficients of one side at one instant, fan-local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RarefactionCoeffs {
    /// Absolute time of evaluation.
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Regular density `n - c`.
    pub density: f64,
}

/// Evaluate the in-fan coefficients of `side` at absolute time `t`.
///
/// The denominator `D = B sin(w tau) + cos(w tau) - 1` vanishes at the fan
/// ends by construction and possibly at interior resonances of the faster
/// side; those evaluations report a boundary singularity.
pub fn coeffs_at(side: Side, t_abs: f64, fan: &FanGeometry, eps: f64) -> Result<RarefactionCoeffs> {
    let sd = fan.side_open(side);
    let bb = fan.b(side);
    let tau = fan.local_t(t_abs);
    let w = sd.omega();
    let (s, c) = (w * tau).sin_cos();
    let den = bb * s + c - 1.0;
    if den.abs() < eps {
        return Err(CpError::Numerics(Diagnostic::AmplitudeDegeneracy {
            t: t_abs,
            phi: f64::NAN,
            e: den,
        }));
    }
    let a = w * (bb * c - s) / den;
    let cc = sd.n * (bb * s + c) / den;
    let k = bb * sd.e0 - w * sd.v0;
    let b = k * (c - 1.0) / (w * den);
    let d = k * s / den;
    Ok(RarefactionCoeffs {
        t: t_abs,
        a,
        b,
        c: cc,
        d,
        density: sd.n - cc,
    })
}

/// Times in `(t_lo, t_hi)` (absolute) where a side's coefficient denominator
/// vanishes, i.e. where the in-fan closed forms are singular.
pub fn coefficient_poles(
    side: Side,
    fan: &FanGeometry,
    t_lo: f64,
    t_hi: f64,
    settings: &SolverSettings,
) -> Vec<f64> {
    let sd = fan.side_open(side);
    let bb = fan.b(side);
    let w = sd.omega();
    let den = |t_abs: f64| {
        let tau = fan.local_t(t_abs);
        let (s, c) = (w * tau).sin_cos();
        bb * s + c - 1.0
    };
    let grid = settings.grid_for(t_hi - t_lo).max(256);
    let mut poles = Vec::new();
    if let Ok(brs) = bracket_roots(den, (t_lo, t_hi), grid) {
        for b in brs {
            if let Ok(r) = refine_root(den, b, settings.root_tol) {
                poles.push(r);
            }
        }
    }
    // Tangential zeros (full-period resonances) do not change sign; catch
    // them by scanning for near-zero minima of |den|.
    let n = grid;
    for i in 1..n {
        let t = t_lo + (t_hi - t_lo) * i as f64 / n as f64;
        let v = den(t).abs();
        if v < 1e-7 && poles.iter().all(|&p| (p - t).abs() > 1e-3 * (t_hi - t_lo)) {
            // Refine the minimum with a short golden-section shrink.
            let (mut a, mut b) = (t - (t_hi - t_lo) / n as f64, t + (t_hi - t_lo) / n as f64);
            for _ in 0..80 {
                let m1 = a + 0.382 * (b - a);
                let m2 = a + 0.618 * (b - a);
                if den(m1).abs() < den(m2).abs() {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            let tm = 0.5 * (a + b);
            if den(tm).abs() < 1e-9 {
                poles.push(tm);
            }
        }
    }
    poles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    poles.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * (1.0 + t_hi.abs()));
    poles
}

/// Fan-local abscissa where the two in-fan fields coincide
/// (`c- x + d- = c+ x + d+`).
pub fn psi1(t_abs: f64, fan: &FanGeometry, eps: f64) -> Result<f64> {
    let m = coeffs_at(Side::Minus, t_abs, fan, eps)?;
    let p = coeffs_at(Side::Plus, t_abs, fan, eps)?;
    let den = p.c - m.c;
    if den.abs() < eps {
        return Err(CpError::Numerics(Diagnostic::UndefinedCurve { t: t_abs }));
    }
    Ok(-(p.d - m.d) / den)
}

/// Fan-local abscissa where one side's in-fan field meets the other side's
/// outer constant field: for `Side::Plus` the curve `(E+ - d-)/c-`, mirrored
/// for `Side::Minus`.
pub fn psi2(side: Side, t_abs: f64, fan: &FanGeometry, eps: f64) -> Result<f64> {
    match side {
        Side::Plus => {
            let m = coeffs_at(Side::Minus, t_abs, fan, eps)?;
            if m.c.abs() < eps {
                return Err(CpError::Numerics(Diagnostic::UndefinedCurve { t: t_abs }));
            }
            let (_, e_plus) = fan.outer_state(Side::Plus, t_abs);
            Ok((e_plus - m.d) / m.c)
        }
        Side::Minus => {
            let p = coeffs_at(Side::Plus, t_abs, fan, eps)?;
            if p.c.abs() < eps {
                return Err(CpError::Numerics(Diagnostic::UndefinedCurve { t: t_abs }));
            }
            let (_, e_minus) = fan.outer_state(Side::Minus, t_abs);
            Ok((e_minus - p.d) / p.c)
        }
    }
}

/// A detected switching point: the interface configuration changes between
/// two-sided and one-sided at `(t, x_side(t))` on the recorded side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchPoint {
    /// Absolute time.
    pub t: f64,
    /// Which boundary trajectory hosts the switch.
    pub side: Side,
    /// Reconstructed field-jump amplitude at the point (should vanish).
    pub e_reconstructed: f64,
}

/// One-sided condition margin of `side` evaluated along its own boundary
/// trajectory: positive where removing that side's wave is admissible.
fn one_sided_margin_on_boundary(side: Side, t: f64, fan: &FanGeometry, eps: f64) -> f64 {
    let x = fan.boundary_x(side, t);
    match side {
        Side::Plus => match coeffs_at(Side::Minus, t, fan, eps) {
            Ok(m) => (m.c * x + m.d) - fan.outer_state(Side::Plus, t).1,
            Err(_) => f64::NAN,
        },
        Side::Minus => match coeffs_at(Side::Plus, t, fan, eps) {
            Ok(p) => fan.outer_state(Side::Minus, t).1 - (p.c * x + p.d),
            Err(_) => f64::NAN,
        },
    }
}

/// Whether the two-sided configuration is admissible somewhere strictly
/// inside the wedge at time `t`: the field-coincidence curve must run between
/// the boundary trajectories.
fn two_sided_band_exists(t: f64, fan: &FanGeometry, eps: f64) -> bool {
    let Ok(p1) = psi1(t, fan, eps) else {
        return false;
    };
    let xm = fan.boundary_x(Side::Minus, t);
    let xp = fan.boundary_x(Side::Plus, t);
    let (lo, hi) = (xm.min(xp), xm.max(xp));
    lo < p1 && p1 < hi
}

/// Find the switching points inside the rarefaction region `(t_lo, t_hi)`.
///
/// Candidates are the crossings of each side's psi2 curve with its boundary
/// trajectory, confirmed by a psi1 crossing within the pairing window (psi1
/// also touches the trajectories at coefficient poles; those fail the
/// pairing residual). A candidate is accepted only if it genuinely toggles
/// the regime: its side's one-sided margin changes sign across it, switches
/// alternate two-sided/one-sided starting two-sided at the vertex, and a
/// switch out of the two-sided regime requires the two-sided band to exist
/// beforehand.
pub fn find_switch_points(
    problem: &RiemannProblem,
    region: (f64, f64),
    fan: &FanGeometry,
    settings: &SolverSettings,
) -> Result<Vec<SwitchPoint>> {
    let (t_lo, t_hi) = region;
    if !(t_hi > t_lo) {
        return Ok(Vec::new());
    }
    // Equal densities: c+ == c- identically, psi1 is undefined and the fan is
    // continuous; there is nothing to switch.
    if problem.alpha().abs() <= settings.degeneracy_eps {
        return Ok(Vec::new());
    }
    let eps = settings.degeneracy_eps;
    let margin = (t_hi - t_lo) * 1e-7;
    let span = (t_lo + margin, t_hi - margin);
    let mut candidates: Vec<SwitchPoint> = Vec::new();
    let mut psi1_roots_all: Vec<f64> = Vec::new();
    let mut psi2_roots_all: Vec<f64> = Vec::new();

    for side in [Side::Plus, Side::Minus] {
        let h2 = |t: f64| match psi2(side, t, fan, eps) {
            Ok(v) => v - fan.boundary_x(side, t),
            Err(_) => f64::NAN,
        };
        let h1 = |t: f64| match psi1(t, fan, eps) {
            Ok(v) => v - fan.boundary_x(side, t),
            Err(_) => f64::NAN,
        };
        let grid = settings.grid_for(span.1 - span.0).max(1024);
        let brackets = match bracket_roots(h2, span, grid) {
            Ok(b) => b,
            Err(_) => continue,
        };
        for b in brackets {
            let Ok(r) = refine_root(h2, b, settings.root_tol) else {
                continue;
            };
            let v = h2(r);
            // Reject pole crossings: a genuine root has a small residual.
            if !v.is_finite() || v.abs() > 1e-6 {
                continue;
            }
            psi2_roots_all.push(r);
            // Pair with a psi1 crossing at the same point.
            let w1 = h1(r);
            let confirmed = w1.is_finite() && w1.abs() <= 1e-6;
            if confirmed {
                psi1_roots_all.push(r);
            } else {
                // Look for a psi1 root nearby within the pairing window.
                let window = 10.0 * settings.root_tol;
                let near = bracket_roots(h1, (r - window, r + window), 16)
                    .ok()
                    .and_then(|bs| bs.first().copied());
                match near {
                    Some(nb) => {
                        if let Ok(r1) = refine_root(h1, nb, settings.root_tol) {
                            psi1_roots_all.push(r1);
                        }
                    }
                    None => {
                        return Err(CpError::Numerics(Diagnostic::InconsistentSwitch {
                            psi1_roots: psi1_roots_all,
                            psi2_roots: psi2_roots_all,
                        }));
                    }
                }
            }
            // Reconstructed amplitude -[E] with the in-fan fields at the
            // trajectory point; vanishes at a genuine switch.
            let x = fan.boundary_x(side, r);
            let e_rec = match (
                coeffs_at(Side::Minus, r, fan, eps),
                coeffs_at(Side::Plus, r, fan, eps),
            ) {
                (Ok(m), Ok(p)) => -((p.c * x + p.d) - (m.c * x + m.d)),
                _ => f64::NAN,
            };
            candidates.push(SwitchPoint {
                t: r,
                side,
                e_reconstructed: e_rec,
            });
        }
    }
    candidates.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    candidates.dedup_by(|a, b| (a.t - b.t).abs() < 10.0 * settings.root_tol);

    // Regime-consistency walk: keep only candidates that really toggle.
    let mut accepted: Vec<SwitchPoint> = Vec::new();
    let mut one_sided: Option<Side> = None;
    let mut prev_t = t_lo;
    for cand in candidates {
        let gap_prev = cand.t - prev_t;
        let probe = (0.25 * gap_prev).min(0.01 * fan.duration).max(1e-9);
        let before = one_sided_margin_on_boundary(cand.side, cand.t - probe, fan, eps);
        let after = one_sided_margin_on_boundary(cand.side, cand.t + probe, fan, eps);
        let flips = before.is_finite() && after.is_finite() && before * after < 0.0;
        if !flips {
            continue;
        }
        match one_sided {
            None => {
                // Two-sided -> one-sided: the candidate's one-sided margin
                // must become positive, and a two-sided band must have
                // existed before the switch.
                if after > 0.0 && two_sided_band_exists(cand.t - probe, fan, eps) {
                    one_sided = Some(cand.side);
                    accepted.push(cand);
                    prev_t = cand.t;
                }
            }
            Some(side) => {
                // One-sided -> two-sided: only the same side's wave can
                // re-form, with its margin turning negative again.
                if cand.side == side && after < 0.0 {
                    one_sided = None;
                    accepted.push(cand);
                    prev_t = cand.t;
                }
            }
        }
    }
    Ok(accepted)
}
