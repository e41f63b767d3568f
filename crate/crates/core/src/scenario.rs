//! Full-solution orchestration: interval schedule from trajectory
//! intersections, per-interval solving, junction bookkeeping, periodicity
//! detection, and end-to-end validation.

use serde::{Deserialize, Serialize};

use crate::characteristics::{
    classify_initial_regime, intersection_times, state_at, trajectory_at, InitialRegime,
    RiemannProblem, Side,
};
use crate::diag::{CpError, Diagnostic, Result};
use crate::interface_rarefaction::{solve_rarefaction_interface, RegionBc};
use crate::interface_shock::{
    entry_speed_band, instantaneous_admissibility_margin, nominal_entry_e, rh_residual,
    solve_shock_bvp,
};
use crate::numerics::SolverSettings;
use crate::rarefaction::{find_switch_points, FanGeometry};

/// One sampled interface state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfacePoint {
    pub t: f64,
    pub phi: f64,
    pub dphi: f64,
    pub e: f64,
}

/// Interface configuration over one span of the timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    SingularShock,
    RarefactionTwoSided,
    RarefactionOneSidedLeftWave,
    RarefactionOneSidedRightWave,
    /// Equal-density rarefaction: a continuous fan with no interface inside.
    ContinuousFan,
}

impl SegmentKind {
    pub fn label(self) -> &'static str {
        match self {
            SegmentKind::SingularShock => "shock",
            SegmentKind::RarefactionTwoSided => "rarefaction_two_sided",
            SegmentKind::RarefactionOneSidedLeftWave => "rarefaction_one_sided_left_wave",
            SegmentKind::RarefactionOneSidedRightWave => "rarefaction_one_sided_right_wave",
            SegmentKind::ContinuousFan => "continuous_fan",
        }
    }
}

/// A solved (possibly partial) span of the interface timeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub t_start: f64,
    pub t_end: f64,
    pub points: Vec<InterfacePoint>,
    pub entry_event: Option<String>,
    pub exit_event: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
    /// Fan geometry for rarefaction segments.
    pub fan: Option<FanGeometry>,
    /// Difference between delivered and nominal entry amplitude (shocks).
    pub e_offset: f64,
}

impl Segment {
    pub fn new(kind: SegmentKind, t_start: f64, t_end: f64) -> Self {
        Segment {
            kind,
            t_start,
            t_end,
            points: Vec::new(),
            entry_event: None,
            exit_event: None,
            diagnostics: Vec::new(),
            fan: None,
            e_offset: 0.0,
        }
    }

    /// Whether integration covered the whole scheduled span.
    pub fn completed(&self) -> bool {
        matches!(
            self.exit_event.as_deref(),
            Some("region_end") | Some("sub_interval_end") | Some("horizon")
        ) || self.kind == SegmentKind::ContinuousFan
    }

    pub fn has_stall(&self) -> bool {
        self.diagnostics.iter().any(|d| d.is_stall())
    }

    /// Interface position at `t` by linear interpolation of the samples.
    pub fn phi_at(&self, t: f64) -> Option<f64> {
        if self.points.is_empty() {
            return None;
        }
        let pts = &self.points;
        if t <= pts[0].t {
            return Some(pts[0].phi);
        }
        for w in pts.windows(2) {
            if t <= w[1].t {
                let f = (t - w[0].t) / (w[1].t - w[0].t).max(1e-300);
                return Some(w[0].phi + f * (w[1].phi - w[0].phi));
            }
        }
        Some(pts[pts.len() - 1].phi)
    }

    /// Truncate stored points to `t <= horizon` and mark the exit.
    fn clip_to(&mut self, horizon: f64) {
        if self.t_end <= horizon {
            return;
        }
        self.points.retain(|p| p.t <= horizon + 1e-12);
        self.t_end = horizon;
        self.exit_event = Some("horizon".into());
    }
}

/// A timeline event: a trajectory intersection or a switching point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Intersection,
    SwitchPlus,
    SwitchMinus,
}

/// The assembled solution: ordered segments, event times, optional common
/// period, and the validation report once computed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timeline {
    pub problem: RiemannProblem,
    pub horizon: f64,
    pub segments: Vec<Segment>,
    pub events: Vec<TimelineEvent>,
    pub period: Option<f64>,
    pub validation: Option<ValidationReport>,
}

impl Timeline {
    /// Interface position at `t` from whichever segment covers it.
    pub fn phi_at(&self, t: f64) -> Option<f64> {
        self.segments
            .iter()
            .find(|s| s.t_start - 1e-12 <= t && t <= s.t_end + 1e-12 && !s.points.is_empty())
            .and_then(|s| s.phi_at(t))
    }

    pub fn has_stalls(&self) -> bool {
        self.segments.iter().any(|s| s.has_stall())
    }

    pub fn has_no_solution(&self) -> bool {
        self.segments.iter().any(|s| {
            s.diagnostics
                .iter()
                .any(|d| matches!(d, Diagnostic::NoSolution { .. }))
        })
    }
}

/// Best rational approximation `p/q` of `x` with `q <= q_max`, by continued
/// fraction convergents.
fn best_rational(x: f64, q_max: u64) -> (u64, u64) {
    let (mut p0, mut q0, mut p1, mut q1) = (1u64, 0u64, x.floor() as u64, 1u64);
    let mut frac = x - x.floor();
    let mut best = (p1, q1);
    for _ in 0..64 {
        if frac.abs() < 1e-15 {
            break;
        }
        let a = (1.0 / frac).floor();
        frac = 1.0 / frac - a;
        let a = a as u64;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > q_max {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        best = (p1, q1);
    }
    best
}

/// All switching points in rarefaction regions up to `horizon`, ascending.
pub fn switch_points_up_to(
    problem: &RiemannProblem,
    horizon: f64,
    settings: &SolverSettings,
) -> Result<Vec<crate::rarefaction::SwitchPoint>> {
    let ext = horizon.max(problem.default_horizon()) + problem.slow_period();
    let mut bounds = vec![0.0f64];
    bounds.extend(intersection_times(problem, ext, settings)?);
    let mut out = Vec::new();
    for w in bounds.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        if ta >= horizon {
            break;
        }
        let (vm, _) = state_at(&problem.left, ta);
        let (vp, _) = state_at(&problem.right, ta);
        let rare = if ta == 0.0 {
            problem.left.v0 < problem.right.v0
        } else {
            vm < vp
        };
        if !rare || problem.alpha().abs() <= settings.degeneracy_eps {
            continue;
        }
        let Ok(fan) = FanGeometry::for_region(problem, ta, tb, settings) else {
            continue;
        };
        for sw in find_switch_points(problem, (ta, tb), &fan, settings)? {
            if sw.t <= horizon {
                out.push(sw);
            }
        }
    }
    Ok(out)
}

/// Common oscillation period of the two media, if the frequency ratio is
/// rational with denominator at most 64 within `tol`.
pub fn detect_period(problem: &RiemannProblem, tol: f64) -> Option<f64> {
    let r = problem.frequency_ratio();
    let (p, q) = best_rational(r, 64);
    if q == 0 || p == 0 {
        return None;
    }
    if (r - p as f64 / q as f64).abs() > tol {
        return None;
    }
    // r = sqrt(n-)/sqrt(n+) = p/q means p periods of the minus side equal
    // q periods of the plus side.
    Some(p as f64 * problem.left.period())
}

/// Build the interface timeline over `(0, horizon)`.
///
/// Intervals between consecutive trajectory intersections are classified by
/// the entering side speeds and solved with the matching machinery; solver
/// stalls and unsolvable boundary problems are recorded on the affected
/// segments and the timeline is returned partial rather than truncated
/// silently.
pub fn build_timeline(
    problem: &RiemannProblem,
    settings: &SolverSettings,
    horizon: f64,
) -> Result<Timeline> {
    settings.validate()?;
    classify_initial_regime(problem)?;
    if !(horizon > 0.0) {
        return Err(CpError::InvalidData("horizon must be > 0".into()));
    }

    // Schedule region bounds from intersections; extend the search so the
    // region containing the horizon has a closing time.
    let ext = horizon.max(problem.default_horizon()) + problem.slow_period();
    let intersections = intersection_times(problem, ext, settings)?;
    let mut bounds: Vec<f64> = vec![0.0];
    for &t in &intersections {
        bounds.push(t);
        if t >= horizon {
            break;
        }
    }
    if *bounds.last().unwrap() < horizon {
        // No closing intersection found inside the extended window; solve up
        // to the horizon only.
        bounds.push(horizon);
    }

    let mut events: Vec<TimelineEvent> = intersections
        .iter()
        .filter(|&&t| t <= horizon + 1e-12)
        .map(|&t| TimelineEvent {
            t,
            kind: EventKind::Intersection,
        })
        .collect();

    let mut segments: Vec<Segment> = Vec::new();
    let mut delivered_e: Option<f64> = None;
    let mut delivered_slope: Option<f64> = None;

    for pair in bounds.windows(2) {
        let (ta, tb) = (pair[0], pair[1]);
        if ta >= horizon {
            break;
        }
        let (vm, _) = state_at(&problem.left, ta);
        let (vp, _) = state_at(&problem.right, ta);
        let is_shock = if ta == 0.0 {
            classify_initial_regime(problem)? == InitialRegime::ShockFirst
        } else {
            vm > vp
        };
        let phi_a = if ta == 0.0 {
            problem.phi0
        } else {
            trajectory_at(&problem.left, ta)
        };

        if is_shock {
            let target = trajectory_at(&problem.right, tb);
            let mut seg =
                match solve_shock_bvp(problem, ta, tb, phi_a, target, delivered_e, settings) {
                    Ok(s) => s,
                    Err(CpError::Numerics(d)) => {
                        // Keep the scheduled span so the failure is attributable;
                        // the empty point list shows nothing was covered.
                        let mut s = Segment::new(SegmentKind::SingularShock, ta, tb.min(horizon));
                        s.exit_event = Some("no_solution".into());
                        s.diagnostics.push(d);
                        s
                    }
                    Err(e) => return Err(e),
                };
            if seg.completed() {
                delivered_e = seg.points.last().map(|p| p.e);
                delivered_slope = seg.points.last().map(|p| p.dphi);
            } else {
                delivered_e = None;
                delivered_slope = None;
            }
            seg.clip_to(horizon);
            segments.push(seg);
        } else {
            // Rarefaction region.
            if problem.alpha().abs() <= settings.degeneracy_eps {
                let mut seg = Segment::new(SegmentKind::ContinuousFan, ta, tb);
                seg.entry_event = Some("junction".into());
                seg.exit_event = Some("region_end".into());
                seg.clip_to(horizon);
                segments.push(seg);
                // Equal densities deliver the nominal amplitude exactly.
                delivered_e = None;
                delivered_slope = None;
                continue;
            }
            match FanGeometry::for_region(problem, ta, tb, settings) {
                Ok(fan) => {
                    // An inconsistent curve pairing downgrades to "no
                    // switches found" with the diagnostic kept; the region
                    // is still solved as a single sub-interval.
                    let mut switch_diag = None;
                    let switches = match find_switch_points(problem, (ta, tb), &fan, settings) {
                        Ok(sw) => sw,
                        Err(CpError::Numerics(d)) => {
                            switch_diag = Some(d);
                            Vec::new()
                        }
                        Err(e) => return Err(e),
                    };
                    for sw in &switches {
                        if sw.t <= horizon + 1e-12 {
                            events.push(TimelineEvent {
                                t: sw.t,
                                kind: match sw.side {
                                    Side::Plus => EventKind::SwitchPlus,
                                    Side::Minus => EventKind::SwitchMinus,
                                },
                            });
                        }
                    }
                    let entry_e = delivered_e.unwrap_or_else(|| nominal_entry_e(problem, ta));
                    let bc = RegionBc {
                        entry_e,
                        entry_slope_hint: delivered_slope,
                    };
                    let mut segs = solve_rarefaction_interface(
                        problem,
                        &fan,
                        (ta, tb),
                        &switches,
                        bc,
                        settings,
                    )?;
                    let nominal = nominal_entry_e(problem, ta);
                    if let Some(first) = segs.first_mut() {
                        if (entry_e - nominal).abs() > 1e-6 {
                            first.diagnostics.push(Diagnostic::EntryMismatch {
                                t: ta,
                                nominal,
                                delivered: entry_e,
                            });
                        }
                        if let Some(d) = switch_diag.take() {
                            first.diagnostics.push(d);
                        }
                    }
                    delivered_e = None;
                    delivered_slope = None;
                    if let Some(last) = segs.last() {
                        if last.completed() {
                            delivered_e = last.points.last().map(|p| p.e);
                            delivered_slope = last.points.last().map(|p| p.dphi);
                        }
                    }
                    for mut s in segs {
                        if s.t_start >= horizon {
                            break;
                        }
                        s.clip_to(horizon);
                        segments.push(s);
                    }
                }
                Err(CpError::Numerics(d)) => {
                    let mut seg =
                        Segment::new(SegmentKind::RarefactionTwoSided, ta, tb.min(horizon));
                    seg.diagnostics.push(d);
                    segments.push(seg);
                    delivered_e = None;
                    delivered_slope = None;
                }
                Err(e) => return Err(e),
            }
        }
    }

    events.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    events.dedup_by(|a, b| (a.t - b.t).abs() < 1e-9);

    Ok(Timeline {
        problem: problem.clone(),
        horizon,
        segments,
        events,
        period: detect_period(problem, 1e-9),
        validation: None,
    })
}

/// Per-segment validation numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentReport {
    pub kind: SegmentKind,
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
    pub completed: bool,
    pub r1_max: f64,
    pub r2_max: f64,
    pub e_min: f64,
    /// Shock segments: minimum slack inside the entry speed band.
    pub entry_band_margin_min: Option<f64>,
    /// Shock segments: minimum slack against the instantaneous side speeds.
    /// Dips negative whenever the side speeds cross mid-segment.
    pub instantaneous_margin_min: Option<f64>,
    /// Rarefaction segments: minimum regime condition margin over samples.
    pub condition_margin_min: Option<f64>,
    pub diagnostics: Vec<String>,
}

/// Whole-timeline validation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub segments: Vec<SegmentReport>,
    /// `(t, |phi jump|)` at junctions where both segments delivered points.
    pub abutment_gaps: Vec<(f64, f64)>,
    /// `(t, width)` spans not covered by any segment points.
    pub time_gaps: Vec<(f64, f64)>,
    /// `(t, |e|)` at switching points that were reached by integration.
    pub switch_e: Vec<(f64, f64)>,
    /// Max `|phi(t+L) - phi(t)|` over spans where both are computed.
    pub period_mismatch: Option<f64>,
    /// Max drift of the conserved jump along shock segments.
    pub k_drift_max: f64,
    /// Which of the reference sign assumptions the data satisfies; arbitrary
    /// finite data is accepted either way.
    pub sign_assumptions: Vec<(String, bool)>,
    pub hard_violations: Vec<String>,
}

/// Validate a built timeline; failures are reported, never panicked.
pub fn validate_timeline(timeline: &Timeline, settings: &SolverSettings) -> ValidationReport {
    let p = &timeline.problem;
    let eps = settings.degeneracy_eps;
    let mut segs = Vec::new();
    let mut hard = Vec::new();
    let mut k_drift_max: f64 = 0.0;

    let k0 = crate::characteristics::jump_invariant_k(p);
    for seg in &timeline.segments {
        let (r1, r2) = rh_residual(p, seg);
        let e_min = seg.points.iter().map(|q| q.e).fold(f64::INFINITY, f64::min);
        let mut entry_band = None;
        let mut inst = None;
        let mut cond = None;
        match seg.kind {
            SegmentKind::SingularShock => {
                let (lo, hi) = entry_speed_band(p, seg.t_start);
                let mut band_min = f64::INFINITY;
                let mut inst_min = f64::INFINITY;
                for q in &seg.points {
                    band_min = band_min.min((q.dphi - lo).min(hi - q.dphi));
                    inst_min = inst_min.min(instantaneous_admissibility_margin(p, q.t, q.dphi));
                    let (vm, em) = state_at(&p.left, q.t);
                    let (vp, ep) = state_at(&p.right, q.t);
                    let k = (p.right.n * vp * vp + ep * ep) - (p.left.n * vm * vm + em * em);
                    k_drift_max = k_drift_max.max((k - k0).abs());
                }
                if seg.points.is_empty() {
                    band_min = f64::NAN;
                    inst_min = f64::NAN;
                }
                entry_band = Some(band_min);
                inst = Some(inst_min);
                if band_min < -eps {
                    hard.push(format!(
                        "shock at [{:.6}, {:.6}]: speed left the entry band by {:.3e}",
                        seg.t_start, seg.t_end, -band_min
                    ));
                }
                if r1 > 1e-5 && seg.completed() {
                    hard.push(format!(
                        "shock at [{:.6}, {:.6}]: mass balance residual {:.3e}",
                        seg.t_start, seg.t_end, r1
                    ));
                }
                if r2 > 1e-5 && seg.completed() {
                    hard.push(format!(
                        "shock at [{:.6}, {:.6}]: energy balance residual {:.3e}",
                        seg.t_start, seg.t_end, r2
                    ));
                }
            }
            SegmentKind::ContinuousFan => {}
            _ => {
                if let Some(fan) = &seg.fan {
                    use crate::interface_rarefaction::{condition_monitor, Regime};
                    let regime = match seg.kind {
                        SegmentKind::RarefactionTwoSided => Regime::TwoSided,
                        SegmentKind::RarefactionOneSidedLeftWave => Regime::OneSidedLeftWave,
                        _ => Regime::OneSidedRightWave,
                    };
                    let mut m_min = f64::INFINITY;
                    // The first couple of points sit on the singular entry;
                    // margins are evaluated from the series-start onward.
                    for q in seg.points.iter().skip(2) {
                        let (_, m) =
                            condition_monitor(p, fan, regime, q.t, fan.local_x(q.phi), eps);
                        if m.is_finite() {
                            m_min = m_min.min(m);
                        }
                    }
                    if m_min.is_finite() {
                        cond = Some(m_min);
                        // Partial segments report their violation through
                        // diagnostics; only completed spans are held to the
                        // margin bound.
                        if m_min < -1e-8 && seg.completed() {
                            hard.push(format!(
                                "{} at [{:.6}, {:.6}]: condition margin {:.3e}",
                                seg.kind.label(),
                                seg.t_start,
                                seg.t_end,
                                m_min
                            ));
                        }
                    }
                }
            }
        }
        if e_min.is_finite() && e_min < -eps {
            hard.push(format!(
                "{} at [{:.6}, {:.6}]: negative amplitude {:.3e}",
                seg.kind.label(),
                seg.t_start,
                seg.t_end,
                e_min
            ));
        }
        segs.push(SegmentReport {
            kind: seg.kind,
            t_start: seg.t_start,
            t_end: seg.t_end,
            n_points: seg.points.len(),
            completed: seg.completed(),
            r1_max: r1,
            r2_max: r2,
            e_min,
            entry_band_margin_min: entry_band,
            instantaneous_margin_min: inst,
            condition_margin_min: cond,
            diagnostics: seg.diagnostics.iter().map(|d| d.to_string()).collect(),
        });
    }

    // Abutments and gaps.
    let mut abutment_gaps = Vec::new();
    let mut time_gaps = Vec::new();
    for w in timeline.segments.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let gap = b.t_start - a.t_end;
        if gap > 1e-9 {
            time_gaps.push((a.t_end, gap));
            let explained = a.has_stall()
                || a.diagnostics
                    .iter()
                    .any(|d| matches!(d, Diagnostic::NoSolution { .. }));
            if !explained {
                hard.push(format!(
                    "silent gap of width {gap:.3e} after segment ending at {:.6}",
                    a.t_end
                ));
            }
        } else if !a.points.is_empty() && !b.points.is_empty() {
            let pa = a.points.last().unwrap().phi;
            let pb = b.points.first().unwrap().phi;
            abutment_gaps.push((b.t_start, (pa - pb).abs()));
        }
    }

    // Switch amplitudes where integration reached the switch time.
    let mut switch_e = Vec::new();
    for ev in &timeline.events {
        let sw = matches!(ev.kind, EventKind::SwitchPlus | EventKind::SwitchMinus);
        if !sw {
            continue;
        }
        for seg in &timeline.segments {
            if (seg.t_end - ev.t).abs() <= 1e-6 {
                if let Some(q) = seg.points.last() {
                    if (q.t - ev.t).abs() <= 1e-6 {
                        switch_e.push((ev.t, q.e.abs()));
                    }
                }
            }
        }
    }

    // Periodicity cross-check where two periods were computed.
    let period_mismatch = timeline.period.and_then(|l| {
        let mut worst: Option<f64> = None;
        for seg in &timeline.segments {
            for q in &seg.points {
                if let Some(phi_next) = timeline.phi_at(q.t + l) {
                    let d = (phi_next - q.phi).abs();
                    worst = Some(worst.map_or(d, |w: f64| w.max(d)));
                }
            }
        }
        worst
    });

    ValidationReport {
        segments: segs,
        abutment_gaps,
        time_gaps,
        switch_e,
        period_mismatch,
        k_drift_max,
        sign_assumptions: crate::characteristics::sign_assumptions(p)
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        hard_violations: hard,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::examples;
    use std::f64::consts::PI;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn period_detection() {
        assert_eq!(
            detect_period(&examples::commensurate(), 1e-9),
            Some(2.0 * PI)
        );
        assert_eq!(detect_period(&examples::incommensurate(), 1e-9), None);
        let unit =
            crate::characteristics::RiemannProblem::from_states(1.0, 1.0, 1.0, 0.0, 0.0, -1.0, 0.0)
                .unwrap();
        assert_eq!(detect_period(&unit, 1e-9), Some(2.0 * PI));
        // 4:1 densities the other way round.
        let inv =
            crate::characteristics::RiemannProblem::from_states(4.0, 1.0, 1.0, 0.0, 0.0, -1.0, 0.0)
                .unwrap();
        assert_eq!(inv.frequency_ratio(), 2.0);
        assert_eq!(detect_period(&inv, 1e-9), Some(2.0 * PI));
    }

    #[test]
    fn equal_density_timeline_structure() {
        let p = examples::equal_density();
        let s = settings();
        let tl = build_timeline(&p, &s, 2.0 * PI).unwrap();
        let kinds: Vec<_> = tl.segments.iter().map(|sg| sg.kind).collect();
        assert_eq!(
            kinds,
            vec![SegmentKind::SingularShock, SegmentKind::ContinuousFan]
        );
        assert!((tl.segments[0].t_end - PI / 2.0).abs() < 1e-9);
        assert_eq!(tl.period, Some(2.0 * PI));
        // Shock: e(t) = -[E(t)] holds exactly.
        for q in &tl.segments[0].points {
            let (_, em) = state_at(&p.left, q.t);
            let (_, ep) = state_at(&p.right, q.t);
            assert!((q.e + (ep - em)).abs() <= 1e-8);
        }
        let report = validate_timeline(&tl, &s);
        assert!(
            report.hard_violations.is_empty(),
            "{:?}",
            report.hard_violations
        );
    }

    #[test]
    fn commensurate_timeline_structure() {
        let p = examples::commensurate();
        let s = settings();
        let tl = build_timeline(&p, &s, 2.0 * PI).unwrap();
        let kinds: Vec<_> = tl.segments.iter().map(|sg| sg.kind).collect();
        assert_eq!(
            kinds,
            vec![
                SegmentKind::SingularShock,
                SegmentKind::RarefactionTwoSided,
                SegmentKind::RarefactionOneSidedLeftWave,
                SegmentKind::RarefactionTwoSided,
                SegmentKind::RarefactionOneSidedLeftWave,
            ]
        );
        // Events: two intersections (T*, 2pi) + three switches.
        assert_eq!(tl.events.len(), 5, "{:?}", tl.events);
        let expect = [1.035895953, 2.176190164, 3.920405792, 5.916224372, 2.0 * PI];
        let mut sorted = expect;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (ev, want) in tl.events.iter().zip(sorted) {
            assert!((ev.t - want).abs() < 1e-5, "{} vs {want}", ev.t);
        }
        assert_eq!(tl.period, Some(2.0 * PI));
        // Spans abut switch-to-switch regardless of how far integration got.
        assert!((tl.segments[1].t_start - 1.035895953).abs() < 1e-5);
        assert!((tl.segments[2].t_start - 2.176190164).abs() < 1e-5);
        assert!((tl.segments[3].t_start - 3.920405792).abs() < 1e-5);
        assert!((tl.segments[4].t_start - 5.916224372).abs() < 1e-5);
    }

    #[test]
    fn horizon_inside_first_shock() {
        let p = examples::commensurate();
        let s = settings();
        let tl = build_timeline(&p, &s, 0.5).unwrap();
        assert_eq!(tl.segments.len(), 1);
        let seg = &tl.segments[0];
        assert_eq!(seg.kind, SegmentKind::SingularShock);
        assert_eq!(seg.exit_event.as_deref(), Some("horizon"));
        assert!(seg.points.last().unwrap().t <= 0.5 + 1e-9);
    }

    #[test]
    fn validation_flags_injected_fault() {
        let p = examples::equal_density();
        let s = settings();
        let mut tl = build_timeline(&p, &s, 2.0 * PI).unwrap();
        // Shift the shock segment to fabricate a silent hole before the fan.
        tl.segments[0].t_end -= 0.2;
        let cut = tl.segments[0].t_end;
        tl.segments[0].points.retain(|q| q.t <= cut);
        tl.segments[0].exit_event = Some("region_end".into());
        let report = validate_timeline(&tl, &s);
        assert!(!report.time_gaps.is_empty());
        assert!(
            report
                .hard_violations
                .iter()
                .any(|v| v.contains("silent gap")),
            "{:?}",
            report.hard_violations
        );
    }

    #[test]
    fn events_strictly_increase() {
        let p = examples::commensurate();
        let s = settings();
        let tl = build_timeline(&p, &s, 4.0 * PI).unwrap();
        for w in tl.events.windows(2) {
            assert!(w[0].t < w[1].t);
        }
        // Switch times sit strictly inside rarefaction intervals.
        let intersections: Vec<f64> = tl
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Intersection)
            .map(|e| e.t)
            .collect();
        for ev in &tl.events {
            if matches!(ev.kind, EventKind::SwitchPlus | EventKind::SwitchMinus) {
                assert!(intersections.iter().all(|&t| (t - ev.t).abs() > 1e-6));
            }
        }
    }

    #[test]
    fn periodic_events_repeat_after_one_period() {
        let p = examples::commensurate();
        let s = settings();
        let tl = build_timeline(&p, &s, 4.0 * PI).unwrap();
        let l = tl.period.unwrap();
        let first: Vec<f64> = tl
            .events
            .iter()
            .map(|e| e.t)
            .filter(|&t| t <= l + 1e-9)
            .collect();
        let second: Vec<f64> = tl
            .events
            .iter()
            .map(|e| e.t)
            .filter(|&t| t > l + 1e-9)
            .collect();
        assert_eq!(first.len(), second.len(), "{first:?} vs {second:?}");
        for (a, b) in first.iter().zip(second.iter()) {
            assert!((a + l - b).abs() < 1e-5, "{a} + L vs {b}");
        }
    }

    #[test]
    fn interval_classification_alternates() {
        let p = examples::commensurate();
        let s = settings();
        let tl = build_timeline(&p, &s, 4.0 * PI).unwrap();
        for seg in &tl.segments {
            let (vm, _) = state_at(&p.left, seg.t_start);
            let (vp, _) = state_at(&p.right, seg.t_start);
            match seg.kind {
                SegmentKind::SingularShock => assert!(vm > vp, "at {}", seg.t_start),
                SegmentKind::RarefactionTwoSided
                | SegmentKind::RarefactionOneSidedLeftWave
                | SegmentKind::RarefactionOneSidedRightWave => {
                    // Sub-segments after switches start mid-region where the
                    // outer speeds already recrossed; only region openings
                    // (which follow shocks) are classified.
                    if (seg.t_start - 1.035895953).abs() < 1e-6
                        || (seg.t_start - (2.0 * PI + 1.035895953)).abs() < 1e-5
                    {
                        assert!(vm < vp, "at {}", seg.t_start);
                    }
                }
                SegmentKind::ContinuousFan => assert!(vm < vp),
            }
        }
    }
}
