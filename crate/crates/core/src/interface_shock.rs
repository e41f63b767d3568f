//! The singular-shock interface between constant states: amplitude law,
//! the second-order interface equation, IVP/BVP solving, and discrete
//! mass/energy balance residuals.
//!
//! Between rarefaction regions the states on both sides of the interface are
//! the constant-state oscillators, the accumulated mass has the closed form
//! `e = -[E] + [n] (phi - phi0)` (plus any delivered entry offset), and the
//! interface position solves a nonlinear second-order equation that
//! degenerates where the speed or the amplitude vanishes.

use crate::characteristics::{state_at, RiemannProblem};
use crate::diag::{CpError, Diagnostic, Result};
use crate::numerics::{integrate_ode, shoot_bvp, OdeEvent, SolverSettings};
use crate::scenario::{InterfacePoint, Segment, SegmentKind};

/// Precomputed jump data for one shock segment.
#[derive(Debug, Clone)]
pub struct ShockContext {
    /// Density jump `n+ - n-`.
    pub alpha: f64,
    /// Conserved jump `[n V^2 + E^2]`.
    pub k: f64,
    /// Segment start time and interface position there.
    pub t0: f64,
    pub phi0: f64,
    /// Difference between the delivered entry amplitude and the nominal
    /// `-[E(t0)]`; zero when the segment starts fresh.
    pub e_offset: f64,
}

impl ShockContext {
    pub fn new(problem: &RiemannProblem, t0: f64, phi0: f64) -> Self {
        ShockContext {
            alpha: problem.alpha(),
            k: crate::characteristics::jump_invariant_k(problem),
            t0,
            phi0,
            e_offset: 0.0,
        }
    }

    /// Carry a delivered amplitude: `e(t0) = delivered` instead of the
    /// nominal `-[E(t0)]`.
    pub fn with_delivered_e(mut self, problem: &RiemannProblem, delivered: f64) -> Self {
        self.e_offset = delivered - nominal_entry_e(problem, self.t0);
        self
    }

    /// `beta(t) = -[E(t)] - alpha * phi0`.
    pub fn beta(&self, problem: &RiemannProblem, t: f64) -> f64 {
        let (_, em) = state_at(&problem.left, t);
        let (_, ep) = state_at(&problem.right, t);
        -(ep - em) - self.alpha * self.phi0
    }

    /// `beta'(t) = -[n V(t)]`, exact because `dE/dt = n V` on each side.
    pub fn beta_prime(&self, problem: &RiemannProblem, t: f64) -> f64 {
        let (vm, _) = state_at(&problem.left, t);
        let (vp, _) = state_at(&problem.right, t);
        -(problem.right.n * vp - problem.left.n * vm)
    }

    /// Energy flux jump `sigma(t) = [n V^3]`.
    pub fn sigma(&self, problem: &RiemannProblem, t: f64) -> f64 {
        let (vm, _) = state_at(&problem.left, t);
        let (vp, _) = state_at(&problem.right, t);
        problem.right.n * vp.powi(3) - problem.left.n * vm.powi(3)
    }

    /// Amplitude along the shock, including any delivered offset.
    pub fn e(&self, problem: &RiemannProblem, t: f64, phi: f64) -> f64 {
        e_on_shock(problem, t, phi, self.phi0, self.t0) + self.e_offset
    }
}

/// Nominal entry amplitude `-[E(t0)]`.
pub fn nominal_entry_e(problem: &RiemannProblem, t0: f64) -> f64 {
    let (_, em) = state_at(&problem.left, t0);
    let (_, ep) = state_at(&problem.right, t0);
    -(ep - em)
}

/// Amplitude on a shock started at `(t0, phi0)` with the nominal entry value:
/// `e = -[E(t)] + [n] (phi - phi0)`.
pub fn e_on_shock(problem: &RiemannProblem, t: f64, phi: f64, phi0: f64, _t0: f64) -> f64 {
    let (_, em) = state_at(&problem.left, t);
    let (_, ep) = state_at(&problem.right, t);
    -(ep - em) + problem.alpha() * (phi - phi0)
}

/// Second derivative of the interface position.
///
/// Degenerate where the speed or the amplitude (the denominator) vanishes;
/// both report a typed error carrying the state.
pub fn shock_rhs(
    problem: &RiemannProblem,
    ctx: &ShockContext,
    t: f64,
    phi: f64,
    dphi: f64,
    eps: f64,
) -> Result<f64> {
    if dphi.abs() <= eps {
        return Err(CpError::Numerics(Diagnostic::SpeedDegeneracy {
            t,
            phi,
            dphi,
        }));
    }
    let den = 2.0 * (ctx.alpha * phi + ctx.beta(problem, t) + ctx.e_offset);
    if den.abs() <= eps {
        return Err(CpError::Numerics(Diagnostic::AmplitudeDegeneracy {
            t,
            phi,
            e: den / 2.0,
        }));
    }
    let num = ctx.k
        - ctx.alpha * dphi * dphi
        - ctx.beta_prime(problem, t) * dphi
        - ctx.sigma(problem, t) / dphi;
    Ok(num / den)
}

/// Residual of the interface balance in factored form,
/// `phi' (2 (alpha phi + beta) phi'' + alpha phi'^2 + beta' phi' - K) + sigma`;
/// zero along exact solutions, and equal to `sigma(t)` for any stationary
/// interface.
pub fn shock_balance_residual(
    problem: &RiemannProblem,
    ctx: &ShockContext,
    t: f64,
    phi: f64,
    dphi: f64,
    ddphi: f64,
) -> f64 {
    dphi * (2.0 * (ctx.alpha * phi + ctx.beta(problem, t) + ctx.e_offset) * ddphi
        + ctx.alpha * dphi * dphi
        + ctx.beta_prime(problem, t) * dphi
        - ctx.k)
        + ctx.sigma(problem, t)
}

/// Admissible speed band at the segment entry: the interface speed must lie
/// between the side speeds there.
pub fn entry_speed_band(problem: &RiemannProblem, t0: f64) -> (f64, f64) {
    let (vm, _) = state_at(&problem.left, t0);
    let (vp, _) = state_at(&problem.right, t0);
    (vm.min(vp), vm.max(vp))
}

/// Signed distance of `dphi` to the instantaneous speed band at `t`
/// (positive inside). Reported in validation; the band pinches to a point
/// whenever the side speeds cross, so it can dip negative mid-segment for
/// perfectly good solutions.
pub fn instantaneous_admissibility_margin(problem: &RiemannProblem, t: f64, dphi: f64) -> f64 {
    let (vm, _) = state_at(&problem.left, t);
    let (vp, _) = state_at(&problem.right, t);
    (dphi - vm.min(vp)).min(vm.max(vp) - dphi)
}

/// Number of sample points stored per solved segment.
pub const SEGMENT_SAMPLES: usize = 1024;

/// Integrate the interface from `(phi0, dphi0)` at `t0` up to `t_end` or the
/// first terminal event, and return the (possibly partial) segment.
pub fn solve_shock_ivp(
    problem: &RiemannProblem,
    t0: f64,
    t_end: f64,
    phi0: f64,
    dphi0: f64,
    delivered_e: Option<f64>,
    settings: &SolverSettings,
) -> Result<Segment> {
    let mut ctx = ShockContext::new(problem, t0, phi0);
    if let Some(e0) = delivered_e {
        ctx = ctx.with_delivered_e(problem, e0);
    }
    let eps = settings.degeneracy_eps;
    let (band_lo, band_hi) = entry_speed_band(problem, t0);

    let mut diagnostics: Vec<Diagnostic> = Vec::new();
    if dphi0 < band_lo - eps || dphi0 > band_hi + eps {
        // Outside the admissible band before the first step.
        diagnostics.push(Diagnostic::AdmissibilityViolation {
            t: t0,
            dphi: dphi0,
            lo: band_lo,
            hi: band_hi,
        });
        let mut seg = Segment::new(SegmentKind::SingularShock, t0, t0);
        seg.points.push(InterfacePoint {
            t: t0,
            phi: phi0,
            dphi: dphi0,
            e: ctx.e(problem, t0, phi0),
        });
        seg.diagnostics = diagnostics;
        seg.exit_event = Some("admissibility".into());
        return Ok(seg);
    }
    if ctx.e_offset.abs() > 1e-6 {
        diagnostics.push(Diagnostic::EntryMismatch {
            t: t0,
            nominal: nominal_entry_e(problem, t0),
            delivered: nominal_entry_e(problem, t0) + ctx.e_offset,
        });
    }

    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> bool {
        match shock_rhs(problem, &ctx, t, y[0], y[1], eps) {
            Ok(dd) if dd.is_finite() => {
                dy[0] = y[1];
                dy[1] = dd;
                true
            }
            _ => false,
        }
    };
    let events = [
        OdeEvent {
            f: Box::new(|_t: f64, y: &[f64]| y[1]),
            terminal: true,
            label: "speed_zero",
        },
        OdeEvent {
            f: Box::new(|t: f64, y: &[f64]| ctx.e(problem, t, y[0])),
            terminal: true,
            label: "amplitude_zero",
        },
        OdeEvent {
            f: Box::new(move |_t: f64, y: &[f64]| y[1] - (band_lo - eps)),
            terminal: true,
            label: "admissibility_low",
        },
        OdeEvent {
            f: Box::new(move |_t: f64, y: &[f64]| (band_hi + eps) - y[1]),
            terminal: true,
            label: "admissibility_high",
        },
    ];

    let mut local = settings.clone();
    local.max_step = settings.max_step.min((t_end - t0).abs() / 64.0);
    let path = integrate_ode(rhs, &[phi0, dphi0], (t0, t_end), &local, &events)?;

    let reached = path.t_end();
    let mut seg = Segment::new(SegmentKind::SingularShock, t0, reached);
    seg.entry_event = Some("junction".into());
    let n = SEGMENT_SAMPLES;
    for i in 0..=n {
        let t = t0 + (reached - t0) * i as f64 / n as f64;
        let y = path.eval(t);
        seg.points.push(InterfacePoint {
            t,
            phi: y[0],
            dphi: y[1],
            e: ctx.e(problem, t, y[0]),
        });
    }
    if let Some(ie) = path.terminated_by {
        let hit = path.events.iter().find(|h| h.index == ie).unwrap();
        seg.exit_event = Some(hit.label.into());
        diagnostics.push(match hit.label {
            "speed_zero" => Diagnostic::SpeedDegeneracy {
                t: hit.t,
                phi: hit.y[0],
                dphi: hit.y[1],
            },
            "amplitude_zero" => Diagnostic::AmplitudeDegeneracy {
                t: hit.t,
                phi: hit.y[0],
                e: ctx.e(problem, hit.t, hit.y[0]),
            },
            _ => Diagnostic::AdmissibilityViolation {
                t: hit.t,
                dphi: hit.y[1],
                lo: band_lo,
                hi: band_hi,
            },
        });
    } else if let Some(stall) = path.stall {
        seg.exit_event = Some("stall".into());
        diagnostics.push(stall);
    } else {
        seg.exit_event = Some("region_end".into());
    }
    seg.e_offset = ctx.e_offset;
    seg.diagnostics = diagnostics;
    Ok(seg)
}

/// Shooting solve: find the entry speed in the admissible band whose
/// terminal position matches `phi_target` at `t_end`.
///
/// Every bracketing slope is refined and every accepted solution is kept;
/// the segment returned integrates the slope closest to the band midpoint,
/// and any extra solutions are recorded as an ambiguity diagnostic.
pub fn solve_shock_bvp(
    problem: &RiemannProblem,
    t0: f64,
    t_end: f64,
    phi0: f64,
    phi_target: f64,
    delivered_e: Option<f64>,
    settings: &SolverSettings,
) -> Result<Segment> {
    let (lo, hi) = entry_speed_band(problem, t0);
    if !(hi > lo) {
        return Err(CpError::DegenerateData(
            "admissible speed band is empty at the segment entry".into(),
        ));
    }
    let residual = |slope: f64| -> Option<f64> {
        let seg = solve_shock_ivp(problem, t0, t_end, phi0, slope, delivered_e, settings).ok()?;
        if seg.exit_event.as_deref() == Some("region_end") {
            Some(seg.points.last()?.phi - phi_target)
        } else {
            None
        }
    };
    let guess = 0.5 * (lo + hi);
    let (sols, best) = shoot_bvp(residual, (lo, hi), guess, settings);
    if sols.is_empty() {
        let b = best.unwrap_or(crate::numerics::ShootSolution {
            slope: guess,
            residual: f64::NAN,
        });
        return Err(CpError::Numerics(Diagnostic::NoSolution {
            best_slope: b.slope,
            best_residual: b.residual,
        }));
    }
    // Prefer solutions whose amplitude stays nonnegative throughout.
    let mut chosen = None;
    let mut alternates = Vec::new();
    for s in &sols {
        let seg = solve_shock_ivp(problem, t0, t_end, phi0, s.slope, delivered_e, settings)?;
        let e_ok = seg.points.iter().all(|p| p.e >= -settings.degeneracy_eps);
        if chosen.is_none() && e_ok {
            chosen = Some(seg);
        } else {
            alternates.push(s.slope);
        }
    }
    let mut seg = match chosen {
        Some(s) => s,
        None => solve_shock_ivp(
            problem,
            t0,
            t_end,
            phi0,
            sols[0].slope,
            delivered_e,
            settings,
        )?,
    };
    if sols.len() > 1 {
        seg.diagnostics.push(Diagnostic::AmbiguousSolutions {
            slopes: sols.iter().map(|s| s.slope).collect(),
        });
    }
    Ok(seg)
}

/// Field values `(rho_hat, V, E)` on each side of the interface at a sample,
/// chosen by segment kind.
fn side_fields(
    problem: &RiemannProblem,
    seg: &Segment,
    t: f64,
    phi: f64,
) -> Option<((f64, f64, f64), (f64, f64, f64))> {
    use crate::characteristics::Side;
    let const_minus = || {
        let (v, e) = state_at(&problem.left, t);
        (problem.left.n, v, e)
    };
    let const_plus = || {
        let (v, e) = state_at(&problem.right, t);
        (problem.right.n, v, e)
    };
    match seg.kind {
        SegmentKind::SingularShock => Some((const_minus(), const_plus())),
        SegmentKind::ContinuousFan => None,
        _ => {
            let fan = seg.fan.as_ref()?;
            let xi = fan.local_x(phi);
            let eps = 1e-12;
            let in_fan = |side: Side| -> Option<(f64, f64, f64)> {
                let c = crate::rarefaction::coeffs_at(side, t, fan, eps).ok()?;
                Some((c.density, c.a * xi + c.b, c.c * xi + c.d))
            };
            let outer = |side: Side| -> (f64, f64, f64) {
                let (v, e) = fan.outer_state(side, t);
                (problem.side(side).n, v, e)
            };
            match seg.kind {
                SegmentKind::RarefactionTwoSided => {
                    Some((in_fan(Side::Minus)?, in_fan(Side::Plus)?))
                }
                SegmentKind::RarefactionOneSidedLeftWave => {
                    Some((in_fan(Side::Minus)?, outer(Side::Plus)))
                }
                SegmentKind::RarefactionOneSidedRightWave => {
                    Some((outer(Side::Minus), in_fan(Side::Plus)?))
                }
                _ => unreachable!(),
            }
        }
    }
}

/// Discrete residuals of the two balance laws along a segment's samples,
/// by central differences: returns `(r1_max, r2_max)` for
/// `e' + [rho V] - [rho] phi'` and
/// `(e phi'^2 / 2)' + [rho V^3 / 2] - [(rho V^2 + E^2)/2] phi'`.
pub fn rh_residual(problem: &RiemannProblem, seg: &Segment) -> (f64, f64) {
    let pts = &seg.points;
    if pts.len() < 3 {
        return (0.0, 0.0);
    }
    let mut r1_max = 0.0f64;
    let mut r2_max = 0.0f64;
    for i in 1..pts.len() - 1 {
        let (pm, p0, pp) = (&pts[i - 1], &pts[i], &pts[i + 1]);
        let dt = pp.t - pm.t;
        if dt <= 0.0 {
            continue;
        }
        // Samples in the degenerating tail of a partial segment (speed
        // blow-up, coefficient pole) carry no meaningful balance
        // information; physical speeds and fields here are order one.
        if [pm.dphi, p0.dphi, pp.dphi]
            .iter()
            .any(|v| !v.is_finite() || v.abs() > 10.0)
        {
            continue;
        }
        // Skip seams between separately integrated pieces: central
        // differences need locally uniform spacing.
        let (h1, h2) = (p0.t - pm.t, pp.t - p0.t);
        if h1 <= 0.0 || h2 <= 0.0 || h1 / h2 > 3.0 || h2 / h1 > 3.0 {
            continue;
        }
        let Some(((rm, vm, em), (rp, vp, ep))) = side_fields(problem, seg, p0.t, p0.phi) else {
            continue;
        };
        if [rm, vm, em, rp, vp, ep]
            .iter()
            .any(|v| !v.is_finite() || v.abs() > 1e3)
        {
            continue;
        }
        let de = (pp.e - pm.e) / dt;
        let r1 = de + (rp * vp - rm * vm) - (rp - rm) * p0.dphi;
        let wm = pm.e * pm.dphi * pm.dphi / 2.0;
        let wp = pp.e * pp.dphi * pp.dphi / 2.0;
        let dw = (wp - wm) / dt;
        let r2 = dw + (rp * vp.powi(3) - rm * vm.powi(3)) / 2.0
            - ((rp * vp * vp + ep * ep) - (rm * vm * vm + em * em)) / 2.0 * p0.dphi;
        r1_max = r1_max.max(r1.abs());
        r2_max = r2_max.max(r2.abs());
    }
    (r1_max, r2_max)
}
