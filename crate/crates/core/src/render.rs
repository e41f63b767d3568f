//! Deterministic SVG rendering of the characteristic plane: trajectory
//! families, filled rarefaction regions, the interface path in red, and one
//! marker per event time. Output is a pure function of the timeline, with no
//! timestamps or external references.

use std::fmt::Write as _;

use crate::characteristics::{trajectory_at, RiemannProblem, Side, SideData};
use crate::scenario::{EventKind, SegmentKind, Timeline};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const ML: f64 = 60.0; // left margin
const MR: f64 = 20.0;
const MT: f64 = 20.0;
const MB: f64 = 40.0;

/// Rendering options; the defaults reproduce the reference figure style.
#[derive(Debug, Clone)]
pub struct RenderStyle {
    /// Trajectories drawn per family.
    pub family_count: usize,
    /// Samples per polyline.
    pub samples: usize,
    pub interface_color: &'static str,
    pub fill_color: &'static str,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            family_count: 9,
            samples: 400,
            interface_color: "#cc0000",
            fill_color: "#cfe2f3",
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{:.2}", v)
}

struct Frame {
    t0: f64,
    t1: f64,
    x0: f64,
    x1: f64,
}

impl Frame {
    fn px(&self, t: f64) -> f64 {
        ML + (t - self.t0) / (self.t1 - self.t0) * (WIDTH - ML - MR)
    }
    fn py(&self, x: f64) -> f64 {
        HEIGHT - MB - (x - self.x0) / (self.x1 - self.x0) * (HEIGHT - MT - MB)
    }
}

fn polyline(frame: &Frame, pts: &[(f64, f64)], attrs: &str) -> String {
    let mut d = String::new();
    for (i, (t, x)) in pts.iter().enumerate() {
        let _ = write!(
            d,
            "{}{},{}",
            if i == 0 { "M" } else { " L" },
            fmt(frame.px(*t)),
            fmt(frame.py(*x))
        );
    }
    format!("<path {attrs} d=\"{d}\"/>\n")
}

/// Render the characteristic plane of a (possibly partial) timeline.
pub fn render_characteristic_plane(
    timeline: &Timeline,
    problem: &RiemannProblem,
    style: &RenderStyle,
) -> String {
    let horizon = timeline.horizon;
    let n = style.samples.max(16);
    let sample_t = |k: usize| horizon * k as f64 / n as f64;

    // Plot range from boundary trajectories and the interface.
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    for k in 0..=n {
        let t = sample_t(k);
        for side in [&problem.left, &problem.right] {
            let x = trajectory_at(side, t);
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
        }
    }
    for seg in &timeline.segments {
        for p in &seg.points {
            x_lo = x_lo.min(p.phi);
            x_hi = x_hi.max(p.phi);
        }
    }
    if !x_lo.is_finite() || !x_hi.is_finite() || x_lo == x_hi {
        x_lo = -1.0;
        x_hi = 1.0;
    }
    let pad = 0.35 * (x_hi - x_lo);
    let frame = Frame {
        t0: 0.0,
        t1: horizon,
        x0: x_lo - pad,
        x1: x_hi + pad,
    };

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"0 0 {} {}\" width=\"{}\" height=\"{}\">\n",
        WIDTH as u32, HEIGHT as u32, WIDTH as u32, HEIGHT as u32
    ));
    svg.push_str("<rect width=\"800\" height=\"600\" fill=\"#ffffff\"/>\n");

    // Rarefaction fills: between the two boundary trajectories over each
    // rarefaction span.
    let mut fan_spans: Vec<(f64, f64)> = Vec::new();
    for seg in &timeline.segments {
        let span = match (&seg.fan, seg.kind) {
            (Some(f), _) => (f.t_open, f.t_close().min(horizon)),
            (None, SegmentKind::ContinuousFan) => (seg.t_start, seg.t_end),
            _ => continue,
        };
        if fan_spans.iter().all(|s| (s.0 - span.0).abs() > 1e-9) {
            fan_spans.push(span);
        }
    }
    for (ta, tb) in &fan_spans {
        if tb <= ta {
            continue;
        }
        let m = 80;
        let mut d = String::new();
        for k in 0..=m {
            let t = ta + (tb - ta) * k as f64 / m as f64;
            let x = trajectory_at(&problem.left, t);
            let _ = write!(
                d,
                "{}{},{}",
                if k == 0 { "M" } else { " L" },
                fmt(frame.px(t)),
                fmt(frame.py(x))
            );
        }
        for k in (0..=m).rev() {
            let t = ta + (tb - ta) * k as f64 / m as f64;
            let x = trajectory_at(&problem.right, t);
            let _ = write!(d, " L{},{}", fmt(frame.px(t)), fmt(frame.py(x)));
        }
        d.push_str(" Z");
        svg.push_str(&format!(
            "<path class=\"fan-fill\" fill=\"{}\" stroke=\"none\" d=\"{}\"/>\n",
            style.fill_color, d
        ));
    }

    // Characteristic families: horizontal translates of each side's
    // boundary trajectory.
    for (side, class, color) in [
        (Side::Minus, "char-minus", "#9a9a9a"),
        (Side::Plus, "char-plus", "#5b5b8a"),
    ] {
        let sd = problem.side(side);
        let count = style.family_count.max(2);
        for j in 0..count {
            let offset = (frame.x0 + (frame.x1 - frame.x0) * j as f64 / (count - 1) as f64) - sd.x0;
            let shifted = SideData {
                x0: sd.x0 + offset,
                ..*sd
            };
            let pts: Vec<(f64, f64)> = (0..=n)
                .map(|k| (sample_t(k), trajectory_at(&shifted, sample_t(k))))
                .collect();
            svg.push_str(&polyline(
                &frame,
                &pts,
                &format!("class=\"{class}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"0.6\" opacity=\"0.55\""),
            ));
        }
        // The boundary trajectory itself, heavier.
        let pts: Vec<(f64, f64)> = (0..=n)
            .map(|k| (sample_t(k), trajectory_at(sd, sample_t(k))))
            .collect();
        svg.push_str(&polyline(
            &frame,
            &pts,
            &format!(
                "class=\"{class} boundary\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.4\""
            ),
        ));
    }

    // Interface path per segment, split at coverage gaps so a hole is not
    // drawn as a chord.
    for seg in &timeline.segments {
        if seg.points.is_empty() {
            continue;
        }
        let dts: Vec<f64> = seg
            .points
            .windows(2)
            .map(|w| w[1].t - w[0].t)
            .filter(|&d| d > 0.0)
            .collect();
        let median_dt = {
            let mut s = dts.clone();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s.get(s.len() / 2).copied().unwrap_or(f64::INFINITY)
        };
        let mut piece: Vec<(f64, f64)> = Vec::new();
        let attrs = format!(
            "class=\"interface\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"",
            style.interface_color
        );
        for w in seg.points.windows(2) {
            if piece.is_empty() {
                piece.push((w[0].t, w[0].phi));
            }
            if w[1].t - w[0].t > 20.0 * median_dt {
                if piece.len() > 1 {
                    svg.push_str(&polyline(&frame, &piece, &attrs));
                }
                piece.clear();
            }
            piece.push((w[1].t, w[1].phi));
        }
        if piece.len() > 1 {
            svg.push_str(&polyline(&frame, &piece, &attrs));
        }
    }

    // One marker per event time, placed on the hosting trajectory.
    for ev in &timeline.events {
        let x = match ev.kind {
            EventKind::Intersection => trajectory_at(&problem.left, ev.t),
            EventKind::SwitchPlus => trajectory_at(&problem.right, ev.t),
            EventKind::SwitchMinus => trajectory_at(&problem.left, ev.t),
        };
        svg.push_str(&format!(
            "<circle class=\"marker\" cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"#000000\"/>\n",
            fmt(frame.px(ev.t)),
            fmt(frame.py(x))
        ));
    }

    // Axes with a few ticks.
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000\" stroke-width=\"1\"/>\n",
        fmt(ML),
        fmt(HEIGHT - MB),
        fmt(WIDTH - MR),
        fmt(HEIGHT - MB)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000\" stroke-width=\"1\"/>\n",
        fmt(ML),
        fmt(MT),
        fmt(ML),
        fmt(HEIGHT - MB)
    ));
    for j in 0..=5 {
        let t = horizon * j as f64 / 5.0;
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#000\" stroke-width=\"1\"/>\n",
            fmt(frame.px(t)),
            fmt(HEIGHT - MB),
            fmt(HEIGHT - MB + 5.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{t:.2}</text>\n",
            fmt(frame.px(t)),
            fmt(HEIGHT - MB + 18.0),
        ));
        let x = frame.x0 + (frame.x1 - frame.x0) * j as f64 / 5.0;
        svg.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"#000\" stroke-width=\"1\"/>\n",
            fmt(frame.py(x)),
            fmt(ML - 5.0),
            fmt(ML)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{x:.2}</text>\n",
            fmt(ML - 8.0),
            fmt(frame.py(x) + 4.0),
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">t</text>\n",
        fmt((ML + WIDTH - MR) / 2.0),
        fmt(HEIGHT - 6.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">x</text>\n",
        fmt(16.0),
        fmt((MT + HEIGHT - MB) / 2.0)
    ));

    svg.push_str("</svg>\n");
    svg
}
