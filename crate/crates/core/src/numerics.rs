//! Scalar root finding, adaptive explicit Runge-Kutta integration with event
//! detection, and shooting for two-point boundary problems.
//!
//! Root location is grid-bracketing followed by a secant step with bisection
//! fallback, which trades speed for guaranteed convergence. The integrator is
//! Dormand-Prince 5(4) with the standard fourth-order continuous extension;
//! event functions are evaluated on the dense output and their sign changes
//! refined to `event_refine_tol`.

use crate::diag::{CpError, Diagnostic, Result};

/// Tolerances and discretization knobs shared by all solvers.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverSettings {
    /// Width tolerance for refined roots (on t).
    pub root_tol: f64,
    /// Relative tolerance of the adaptive integrator.
    pub ode_rel_tol: f64,
    /// Absolute tolerance of the adaptive integrator.
    pub ode_abs_tol: f64,
    /// Hard cap on the step size (infinite by default).
    pub max_step: f64,
    /// Boundary-residual tolerance for shooting.
    pub shoot_tol: f64,
    /// Iteration budget for shooting.
    pub shoot_max_iter: usize,
    /// Tolerance for localized event times.
    pub event_refine_tol: f64,
    /// Threshold below which speeds, amplitudes and denominators count as
    /// degenerate.
    pub degeneracy_eps: f64,
    /// Bracketing grid density: subintervals per length 2*pi.
    pub bracket_grid: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            root_tol: 1e-12,
            ode_rel_tol: 1e-10,
            ode_abs_tol: 1e-12,
            max_step: f64::INFINITY,
            shoot_tol: 1e-9,
            shoot_max_iter: 60,
            event_refine_tol: 1e-12,
            degeneracy_eps: 1e-9,
            bracket_grid: 2048,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            self.root_tol,
            self.ode_rel_tol,
            self.ode_abs_tol,
            self.max_step,
            self.shoot_tol,
            self.event_refine_tol,
            self.degeneracy_eps,
        ];
        if pos.iter().any(|&v| !(v > 0.0)) {
            return Err(CpError::InvalidData("all tolerances must be > 0".into()));
        }
        if self.bracket_grid < 16 {
            return Err(CpError::InvalidData("bracket_grid must be >= 16".into()));
        }
        Ok(())
    }

    /// Grid node count for an interval of the given length.
    pub fn grid_for(&self, span: f64) -> usize {
        let per = self.bracket_grid as f64 * span / (2.0 * std::f64::consts::PI);
        (per.ceil() as usize).max(16)
    }
}

/// A sign-change interval produced by [`bracket_roots`]. A zero-width bracket
/// (`lo == hi`) marks a grid node where the function vanished exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Scan `f` on a uniform grid over `(t0, t1)` and return every sign change.
///
/// Non-finite samples are skipped; if more than half the grid fails to
/// evaluate the scan is abandoned with an evaluation-failure error.
pub fn bracket_roots<F: FnMut(f64) -> f64>(
    mut f: F,
    interval: (f64, f64),
    grid: usize,
) -> Result<Vec<Bracket>> {
    let (t0, t1) = interval;
    if !(t0 < t1) {
        return Err(CpError::InvalidData(format!("bad interval ({t0}, {t1})")));
    }
    let n = grid.max(1);
    let h = (t1 - t0) / n as f64;
    let mut out = Vec::new();
    let mut bad = 0usize;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let t = if i == n { t1 } else { t0 + i as f64 * h };
        let v = f(t);
        if !v.is_finite() {
            bad += 1;
            prev = None;
            continue;
        }
        if v == 0.0 {
            out.push(Bracket {
                lo: t,
                hi: t,
                f_lo: 0.0,
                f_hi: 0.0,
            });
            prev = None;
            continue;
        }
        if let Some((tp, vp)) = prev {
            if vp * v < 0.0 {
                out.push(Bracket {
                    lo: tp,
                    hi: t,
                    f_lo: vp,
                    f_hi: v,
                });
            }
        }
        prev = Some((t, v));
    }
    if bad > (n + 1) / 2 {
        return Err(CpError::Numerics(Diagnostic::EvaluationFailure { t: t0 }));
    }
    Ok(out)
}

/// Shrink a bracket to width `tol` by secant steps with bisection fallback
/// and return the root estimate.
pub fn refine_root<F: FnMut(f64) -> f64>(mut f: F, bracket: Bracket, tol: f64) -> Result<f64> {
    let Bracket {
        mut lo,
        mut hi,
        mut f_lo,
        mut f_hi,
    } = bracket;
    if lo == hi {
        return Ok(lo);
    }
    if !(lo < hi) || f_lo * f_hi > 0.0 {
        return Err(CpError::InvalidData("invalid bracket".into()));
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        // Secant proposal from the bracket endpoints; reject if it falls
        // outside or barely moves, and bisect instead.
        let mut t = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        let margin = 0.01 * (hi - lo);
        if !t.is_finite() || t <= lo + margin || t >= hi - margin {
            t = 0.5 * (lo + hi);
        }
        let v = f(t);
        if !v.is_finite() {
            return Err(CpError::Numerics(Diagnostic::EvaluationFailure { t }));
        }
        if v == 0.0 {
            return Ok(t);
        }
        if f_lo * v < 0.0 {
            hi = t;
            f_hi = v;
        } else {
            lo = t;
            f_lo = v;
        }
    }
    Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi })
}

/// Locate every root of `f` on `(t0, t1)`: bracket on the settings grid, then
/// refine. Zero-width brackets (exact grid hits) are kept as-is.
pub fn find_roots<F: FnMut(f64) -> f64>(
    mut f: F,
    interval: (f64, f64),
    settings: &SolverSettings,
) -> Result<Vec<f64>> {
    let brackets = bracket_roots(&mut f, interval, settings.grid_for(interval.1 - interval.0))?;
    let mut roots = Vec::new();
    for b in brackets {
        let r = refine_root(&mut f, b, settings.root_tol)?;
        if roots
            .last()
            .map_or(true, |&p: &f64| r - p > 10.0 * settings.root_tol)
        {
            roots.push(r);
        }
    }
    Ok(roots)
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)
// ---------------------------------------------------------------------------

/// Scalar function watched during integration; a sign change is localized and
/// reported, and terminal events stop the integration.
pub struct OdeEvent<'a> {
    pub f: Box<dyn Fn(f64, &[f64]) -> f64 + 'a>,
    pub terminal: bool,
    pub label: &'static str,
}

/// One localized event occurrence.
#[derive(Debug, Clone)]
pub struct EventHit {
    pub index: usize,
    pub label: &'static str,
    pub t: f64,
    pub y: Vec<f64>,
}

struct DenseStep {
    t: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

/// Result of an adaptive integration: accepted-step samples, localized
/// events, and the dense interpolant over the covered span.
pub struct IntegrationPath {
    pub samples: Vec<(f64, Vec<f64>)>,
    pub events: Vec<EventHit>,
    /// Set when a terminal event ended the integration early.
    pub terminated_by: Option<usize>,
    /// Set when integration stalled; carries the diagnostic to surface.
    pub stall: Option<Diagnostic>,
    steps: Vec<DenseStep>,
}

impl IntegrationPath {
    pub fn t_end(&self) -> f64 {
        self.samples.last().map(|(t, _)| *t).unwrap_or(f64::NAN)
    }

    pub fn y_end(&self) -> &[f64] {
        self.samples
            .last()
            .map(|(_, y)| y.as_slice())
            .unwrap_or(&[])
    }

    /// Evaluate the continuous extension at `t` (clamped to the covered span).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        if self.steps.is_empty() {
            return self
                .samples
                .first()
                .map(|(_, y)| y.clone())
                .unwrap_or_default();
        }
        let first = &self.steps[0];
        let forward = first.h > 0.0;
        let mut idx = self.steps.len() - 1;
        for (i, s) in self.steps.iter().enumerate() {
            let (a, b) = (s.t, s.t + s.h);
            let inside = if forward {
                t <= b || i == self.steps.len() - 1
            } else {
                t >= b || i == self.steps.len() - 1
            };
            if inside {
                idx = i;
                break;
            }
            let _ = a;
        }
        let s = &self.steps[idx];
        let theta = ((t - s.t) / s.h).clamp(0.0, 1.0);
        dense_eval(s, theta)
    }
}

fn dense_eval(s: &DenseStep, theta: f64) -> Vec<f64> {
    let th1 = 1.0 - theta;
    (0..s.rcont[0].len())
        .map(|i| {
            s.rcont[0][i]
                + theta
                    * (s.rcont[1][i]
                        + th1 * (s.rcont[2][i] + theta * (s.rcont[3][i] + th1 * s.rcont[4][i])))
        })
        .collect()
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Adaptive Dormand-Prince 5(4) over `span` with event localization.
///
/// `rhs` writes the derivative into its third argument and returns `false`
/// when the state has left the domain of validity, which makes the step
/// shrink; persistent failure surfaces as a step-underflow stall carrying the
/// last valid state.
pub fn integrate_ode<F>(
    mut rhs: F,
    y0: &[f64],
    span: (f64, f64),
    settings: &SolverSettings,
    events: &[OdeEvent<'_>],
) -> Result<IntegrationPath>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> bool,
{
    let (t0, t1) = span;
    let dim = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let total = (t1 - t0).abs();
    if total == 0.0 {
        return Ok(IntegrationPath {
            samples: vec![(t0, y0.to_vec())],
            events: vec![],
            terminated_by: None,
            stall: None,
            steps: vec![],
        });
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    if !rhs(t, &y, &mut k[0]) || k[0].iter().any(|v| !v.is_finite()) {
        return Err(CpError::Numerics(Diagnostic::EvaluationFailure { t }));
    }

    // Initial step: conservative fraction of the span bounded by max_step.
    let mut h = (total / 100.0).min(settings.max_step).max(total * 1e-12);
    let h_min = total * 1e-14;

    let mut path = IntegrationPath {
        samples: vec![(t, y.clone())],
        events: vec![],
        terminated_by: None,
        stall: None,
        steps: vec![],
    };
    let mut ev_prev: Vec<f64> = events.iter().map(|e| (e.f)(t, &y)).collect();

    let mut ytmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];

    'outer: while dir * (t1 - t) > 1e-15 * total {
        h = h.min(settings.max_step).min((t1 - t).abs());
        let hs = dir * h;

        // Stage evaluations.
        let mut ok = true;
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ytmp[i] = y[i] + hs * acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            if !rhs(t + C[s] * hs, &ytmp, &mut tail[0]) {
                ok = false;
                break;
            }
            if tail[0].iter().any(|v| !v.is_finite()) {
                ok = false;
                break;
            }
        }
        // ytmp now holds the 5th-order solution (stage 7 uses the b-row).
        if ok {
            ynew.copy_from_slice(&ytmp);
        }

        let mut err = f64::INFINITY;
        if ok {
            err = 0.0;
            for i in 0..dim {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                e *= hs;
                let sc =
                    settings.ode_abs_tol + settings.ode_rel_tol * y[i].abs().max(ynew[i].abs());
                err += (e / sc) * (e / sc);
            }
            err = (err / dim as f64).sqrt();
        }

        if !ok || err > 1.0 {
            let f = if ok {
                (0.9 * err.powf(-0.2)).clamp(0.2, 1.0)
            } else {
                0.3
            };
            h *= f;
            if h < h_min {
                path.stall = Some(Diagnostic::StepUnderflow {
                    t,
                    state: y.clone(),
                });
                break 'outer;
            }
            continue;
        }

        // Accepted: build the continuous extension for this step.
        let dy: Vec<f64> = (0..dim).map(|i| ynew[i] - y[i]).collect();
        let bspl: Vec<f64> = (0..dim).map(|i| hs * k[0][i] - dy[i]).collect();
        let mut r5 = vec![0.0; dim];
        for i in 0..dim {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                acc += D[j] * kj[i];
            }
            r5[i] = hs * acc;
        }
        let r4: Vec<f64> = (0..dim).map(|i| dy[i] - hs * k[6][i] - bspl[i]).collect();
        let step = DenseStep {
            t,
            h: hs,
            rcont: [y.clone(), dy, bspl, r4, r5],
        };

        let t_new = t + hs;

        // Event handling on the accepted step.
        let ev_new: Vec<f64> = events.iter().map(|e| (e.f)(t_new, &ynew)).collect();
        let mut first_hit: Option<(usize, f64)> = None;
        for (ie, ev) in events.iter().enumerate() {
            let (a, b) = (ev_prev[ie], ev_new[ie]);
            if !a.is_finite() || !b.is_finite() || a == 0.0 {
                continue;
            }
            if a * b < 0.0 {
                let g = |tt: f64| {
                    let th = ((tt - t) / hs).clamp(0.0, 1.0);
                    (ev.f)(tt, &dense_eval(&step, th))
                };
                let (blo, bhi) = if hs > 0.0 { (t, t_new) } else { (t_new, t) };
                let bt = Bracket {
                    lo: blo,
                    hi: bhi,
                    f_lo: g(blo),
                    f_hi: g(bhi),
                };
                let th = if bt.f_lo * bt.f_hi <= 0.0 {
                    refine_root(g, bt, settings.event_refine_tol).unwrap_or(t_new)
                } else {
                    t_new
                };
                if first_hit.map_or(true, |(_, tb)| dir * (th - tb) < 0.0) {
                    first_hit = Some((ie, th));
                }
            }
        }

        if let Some((ie, th)) = first_hit {
            let theta = ((th - t) / hs).clamp(0.0, 1.0);
            let yh = dense_eval(&step, theta);
            path.events.push(EventHit {
                index: ie,
                label: events[ie].label,
                t: th,
                y: yh.clone(),
            });
            if events[ie].terminal {
                // Truncate the dense step at the event and stop.
                path.steps.push(step);
                path.samples.push((th, yh));
                path.terminated_by = Some(ie);
                break 'outer;
            }
        }

        path.steps.push(step);
        path.samples.push((t_new, ynew.clone()));
        t = t_new;
        y.copy_from_slice(&ynew);
        k.swap(0, 6); // FSAL
        ev_prev = ev_new;

        let f = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        h *= f;
    }

    Ok(path)
}

// ---------------------------------------------------------------------------
// Shooting
// ---------------------------------------------------------------------------

/// Result of a shooting solve: the slope and the residual it achieved.
#[derive(Debug, Clone, Copy)]
pub struct ShootSolution {
    pub slope: f64,
    pub residual: f64,
}

/// Find initial slopes whose boundary residual vanishes.
///
/// The residual is scanned over `range` on a coarse grid (`Err`/non-finite
/// evaluations are skipped), every sign change is refined by secant with
/// bisection fallback, and refined slopes are kept only if the residual
/// magnitude actually meets `shoot_tol`; a jump discontinuity refines to a
/// point with a large residual and is rejected. Returns all accepted
/// solutions ordered by distance from `guess`, plus the best rejected
/// candidate for diagnostics.
pub fn shoot_bvp<F>(
    mut residual: F,
    range: (f64, f64),
    guess: f64,
    settings: &SolverSettings,
) -> (Vec<ShootSolution>, Option<ShootSolution>)
where
    F: FnMut(f64) -> Option<f64>,
{
    let (lo, hi) = range;
    let n = 96usize;
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for i in 0..=n {
        let s = lo + (hi - lo) * i as f64 / n as f64;
        if let Some(r) = residual(s) {
            if r.is_finite() {
                nodes.push((s, r));
            }
        }
    }
    let mut best: Option<ShootSolution> = None;
    let mut track_best = |s: f64, r: f64| {
        if best.map_or(true, |b| r.abs() < b.residual.abs()) {
            best = Some(ShootSolution {
                slope: s,
                residual: r,
            });
        }
    };
    for &(s, r) in &nodes {
        track_best(s, r);
    }

    let mut sols: Vec<ShootSolution> = Vec::new();
    for w in nodes.windows(2) {
        let ((s0, r0), (s1, r1)) = (w[0], w[1]);
        if r0 == 0.0 {
            sols.push(ShootSolution {
                slope: s0,
                residual: 0.0,
            });
            continue;
        }
        if r0 * r1 >= 0.0 {
            continue;
        }
        // Secant-with-bisection refinement on the shrinking bracket.
        let (mut a, mut b, mut fa, mut fb) = (s0, s1, r0, r1);
        let mut accepted = None;
        for _ in 0..settings.shoot_max_iter {
            let mut m = a - fa * (b - a) / (fb - fa);
            let margin = 0.01 * (b - a);
            if !m.is_finite() || m <= a + margin || m >= b - margin {
                m = 0.5 * (a + b);
            }
            let fm = match residual(m) {
                Some(v) if v.is_finite() => v,
                _ => break,
            };
            track_best(m, fm);
            if fm.abs() <= settings.shoot_tol {
                accepted = Some(ShootSolution {
                    slope: m,
                    residual: fm,
                });
                break;
            }
            if fa * fm < 0.0 {
                b = m;
                fb = fm;
            } else {
                a = m;
                fa = fm;
            }
            if b - a <= settings.root_tol {
                // Bracket exhausted without meeting the tolerance: either a
                // sharp root or a jump. Accept only a genuine root.
                let (s, r) = if fa.abs() < fb.abs() {
                    (a, fa)
                } else {
                    (b, fb)
                };
                if r.abs() <= settings.shoot_tol {
                    accepted = Some(ShootSolution {
                        slope: s,
                        residual: r,
                    });
                }
                break;
            }
        }
        if let Some(sol) = accepted {
            sols.push(sol);
        }
    }
    sols.sort_by(|x, y| {
        (x.slope - guess)
            .abs()
            .partial_cmp(&(y.slope - guess).abs())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    (sols, best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn brackets_linear_function() {
        let br = bracket_roots(|t| t - 1.0, (0.0, 2.0), 4).unwrap();
        assert_eq!(br.len(), 1);
        assert!(br[0].lo <= 1.0 && 1.0 <= br[0].hi);
    }

    #[test]
    fn brackets_sine_zeros() {
        let br = bracket_roots(|t| t.sin(), (0.1, 7.0), 64).unwrap();
        assert_eq!(br.len(), 2);
        let pi = std::f64::consts::PI;
        assert!(br[0].lo < pi && pi < br[0].hi);
        assert!(br[1].lo < 2.0 * pi && 2.0 * pi < br[1].hi);
    }

    #[test]
    fn brackets_trajectory_gap_of_reference_problem() {
        // Gap of the two boundary trajectories for the n = 1 / n = 4
        // reference data; the first sign change brackets the intersection.
        let g = |t: f64| (1.0 - (2.0 * t).cos()) / 4.0 - (t.sin() + t.cos() - 1.0);
        let s = settings();
        let br = bracket_roots(
            g,
            (0.01, 2.0 * std::f64::consts::PI),
            s.grid_for(2.0 * std::f64::consts::PI),
        )
        .unwrap();
        assert!(!br.is_empty());
        assert!(
            br[0].lo < 1.035895953 && 1.035895953 < br[0].hi,
            "{:?}",
            br[0]
        );
    }

    #[test]
    fn bracket_rejects_mostly_nonfinite() {
        let r = bracket_roots(|t| if t < 1.8 { f64::NAN } else { t }, (0.0, 2.0), 8);
        assert!(r.is_err());
    }

    #[test]
    fn refine_sqrt2() {
        let br = Bracket {
            lo: 1.0,
            hi: 2.0,
            f_lo: -1.0,
            f_hi: 2.0,
        };
        let r = refine_root(|t| t * t - 2.0, br, 1e-13).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn refine_cosine() {
        let br = Bracket {
            lo: 1.0,
            hi: 2.0,
            f_lo: 1.0f64.cos(),
            f_hi: 2.0f64.cos(),
        };
        let r = refine_root(|t| t.cos(), br, 1e-13).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn integrates_exponential_decay() {
        let path = integrate_ode(
            |_t, y, dy| {
                dy[0] = -y[0];
                true
            },
            &[1.0],
            (0.0, 1.0),
            &settings(),
            &[],
        )
        .unwrap();
        assert!((path.y_end()[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn oscillator_matches_closed_form() {
        // V' = -E, E' = n V with n = 4, (V,E)(0) = (0,-1).
        let n = 4.0f64;
        let w = n.sqrt();
        let path = integrate_ode(
            |_t, y, dy| {
                dy[0] = -y[1];
                dy[1] = n * y[0];
                true
            },
            &[0.0, -1.0],
            (0.0, std::f64::consts::PI),
            &settings(),
            &[],
        )
        .unwrap();
        let mut worst = 0.0f64;
        for k in 0..=100 {
            let t = std::f64::consts::PI * k as f64 / 100.0;
            let y = path.eval(t);
            let v = (1.0 / w) * (w * t).sin();
            let e = -(w * t).cos();
            worst = worst.max((y[0] - v).abs()).max((y[1] - e).abs());
        }
        assert!(worst < 1e-8, "sup error {worst}");
    }

    #[test]
    fn event_at_ln2() {
        let ev = OdeEvent {
            f: Box::new(|_t, y: &[f64]| y[0] - 0.5),
            terminal: true,
            label: "half",
        };
        let path = integrate_ode(
            |_t, y, dy| {
                dy[0] = -y[0];
                true
            },
            &[1.0],
            (0.0, 2.0),
            &settings(),
            &[ev],
        )
        .unwrap();
        assert_eq!(path.terminated_by, Some(0));
        let hit = &path.events[0];
        assert!((hit.t - std::f64::consts::LN_2).abs() < 1e-9);
        assert!((hit.y[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn halved_tolerances_are_consistent() {
        let run = |rt: f64, at: f64| {
            let mut s = settings();
            s.ode_rel_tol = rt;
            s.ode_abs_tol = at;
            integrate_ode(
                |t, y, dy| {
                    dy[0] = -y[0] + t.sin();
                    true
                },
                &[1.0],
                (0.0, 3.0),
                &s,
                &[],
            )
            .unwrap()
            .y_end()[0]
        };
        let a = run(1e-10, 1e-12);
        let b = run(5e-11, 5e-13);
        assert!((a - b).abs() < 10.0 * 1e-10);
    }

    #[test]
    fn shoot_straight_line() {
        // y'' = 0, y(0) = 0, want y(1) = 3: slope 3.
        let s = settings();
        let (sols, _) = shoot_bvp(
            |slope| {
                let path = integrate_ode(
                    |_t, y, dy| {
                        dy[0] = y[1];
                        dy[1] = 0.0;
                        true
                    },
                    &[0.0, slope],
                    (0.0, 1.0),
                    &s,
                    &[],
                )
                .ok()?;
                Some(path.y_end()[0] - 3.0)
            },
            (0.0, 10.0),
            1.0,
            &s,
        );
        assert!(!sols.is_empty());
        assert!((sols[0].slope - 3.0).abs() < 1e-8);
    }

    #[test]
    fn shoot_harmonic() {
        // y'' = -y, y(0) = 0, want y(pi/2) = 1: slope 1.
        let s = settings();
        let (sols, _) = shoot_bvp(
            |slope| {
                let path = integrate_ode(
                    |_t, y, dy| {
                        dy[0] = y[1];
                        dy[1] = -y[0];
                        true
                    },
                    &[0.0, slope],
                    (0.0, std::f64::consts::FRAC_PI_2),
                    &s,
                    &[],
                )
                .ok()?;
                Some(path.y_end()[0] - 1.0)
            },
            (-2.0, 2.0),
            0.5,
            &s,
        );
        assert!(!sols.is_empty());
        assert!((sols[0].slope - 1.0).abs() < 1e-8);
    }

    #[test]
    fn shoot_reports_no_sign_change() {
        let s = settings();
        let (sols, best) = shoot_bvp(|slope| Some(slope * slope + 1.0), (-1.0, 1.0), 0.0, &s);
        assert!(sols.is_empty());
        let b = best.unwrap();
        assert!(b.residual >= 1.0);
    }

    #[test]
    fn refined_root_beats_bracket_ends() {
        let f = |t: f64| (t - 0.8371).tanh() + 0.1 * (t - 0.8371);
        let br = bracket_roots(f, (0.0, 2.0), 32).unwrap();
        let r = refine_root(f, br[0], 1e-12).unwrap();
        assert!(f(r).abs() <= f(br[0].lo).abs());
        assert!(f(r).abs() <= f(br[0].hi).abs());
    }
}
