//! Python bindings: a thin `Problem`/`Timeline` surface over the solver.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use coldplasma::characteristics::{
    classify_initial_regime, first_intersection, intersection_times, jump_invariant_k, state_at,
    trajectory_at, InitialRegime, Side,
};
use coldplasma::cli::timeline_csv;
use coldplasma::render::{render_characteristic_plane, RenderStyle};
use coldplasma::scenario::{build_timeline, detect_period, switch_points_up_to, validate_timeline};
use coldplasma::{CpError, RiemannProblem, SolverSettings};

fn to_py_err(e: CpError) -> PyErr {
    match e {
        CpError::InvalidData(m) | CpError::Config(m) | CpError::DegenerateData(m) => {
            PyValueError::new_err(m)
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_side(side: &str) -> PyResult<Side> {
    match side {
        "minus" | "-" | "left" => Ok(Side::Minus),
        "plus" | "+" | "right" => Ok(Side::Plus),
        other => Err(PyValueError::new_err(format!(
            "side must be 'minus'/'-' or 'plus'/'+', got {other:?}"
        ))),
    }
}

/// Two media joined at a free interface.
#[pyclass(name = "Problem")]
struct PyProblem {
    inner: RiemannProblem,
    settings: SolverSettings,
}

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (n_minus, n_plus, v_minus0, v_plus0, e_minus0, e_plus0, phi0=0.0))]
    fn new(
        n_minus: f64,
        n_plus: f64,
        v_minus0: f64,
        v_plus0: f64,
        e_minus0: f64,
        e_plus0: f64,
        phi0: f64,
    ) -> PyResult<Self> {
        let inner = RiemannProblem::from_states(
            n_minus, n_plus, v_minus0, v_plus0, e_minus0, e_plus0, phi0,
        )
        .map_err(to_py_err)?;
        Ok(PyProblem {
            inner,
            settings: SolverSettings::default(),
        })
    }

    /// `(V, E)` of the constant state on one side at time `t`.
    fn state(&self, side: &str, t: f64) -> PyResult<(f64, f64)> {
        Ok(state_at(self.inner.side(parse_side(side)?), t))
    }

    /// Boundary trajectory position of one side at time `t`.
    fn trajectory(&self, side: &str, t: f64) -> PyResult<f64> {
        Ok(trajectory_at(self.inner.side(parse_side(side)?), t))
    }

    /// Jump of the conserved quantity `n V^2 + E^2` across the interface.
    fn jump_invariant(&self) -> f64 {
        jump_invariant_k(&self.inner)
    }

    /// `"shock_first"` or `"rarefaction_first"`.
    fn classify(&self) -> PyResult<String> {
        let regime = classify_initial_regime(&self.inner).map_err(to_py_err)?;
        Ok(match regime {
            InitialRegime::ShockFirst => "shock_first".into(),
            InitialRegime::RarefactionFirst => "rarefaction_first".into(),
        })
    }

    fn default_horizon(&self) -> f64 {
        self.inner.default_horizon()
    }

    /// Smallest positive time at which the boundary trajectories meet.
    fn first_intersection(&self) -> PyResult<f64> {
        first_intersection(&self.inner, &self.settings).map_err(to_py_err)
    }

    /// All trajectory intersection times in `(0, horizon]`.
    fn intersections(&self, horizon: f64) -> PyResult<Vec<f64>> {
        intersection_times(&self.inner, horizon, &self.settings).map_err(to_py_err)
    }

    /// Switching points `(t, side)` of every rarefaction region up to the
    /// horizon.
    #[pyo3(signature = (horizon=None))]
    fn switch_points(&self, horizon: Option<f64>) -> PyResult<Vec<(f64, String)>> {
        let h = horizon.unwrap_or_else(|| self.inner.default_horizon());
        Ok(switch_points_up_to(&self.inner, h, &self.settings)
            .map_err(to_py_err)?
            .into_iter()
            .map(|sw| (sw.t, sw.side.label().to_string()))
            .collect())
    }

    /// Common oscillation period, if the frequency ratio is rational.
    #[pyo3(signature = (tol=1e-9))]
    fn detect_period(&self, tol: f64) -> Option<f64> {
        detect_period(&self.inner, tol)
    }

    /// Whether a differentiable shock/rarefaction conjugation is possible
    /// for a fan of the given duration.
    fn smoothness_feasible(&self, t_star: f64) -> PyResult<bool> {
        coldplasma::interface_rarefaction::smoothness_feasible(
            &self.inner,
            t_star,
            self.settings.degeneracy_eps,
        )
        .map_err(to_py_err)
    }

    /// Build the interface timeline up to `horizon` (defaults to three slow
    /// periods).
    #[pyo3(signature = (horizon=None))]
    fn solve(&self, horizon: Option<f64>) -> PyResult<PyTimeline> {
        let h = horizon.unwrap_or_else(|| self.inner.default_horizon());
        let inner = build_timeline(&self.inner, &self.settings, h).map_err(to_py_err)?;
        Ok(PyTimeline {
            inner,
            settings: self.settings.clone(),
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(n_minus={}, n_plus={}, v_minus0={}, v_plus0={}, e_minus0={}, e_plus0={}, phi0={})",
            self.inner.left.n,
            self.inner.right.n,
            self.inner.left.v0,
            self.inner.right.v0,
            self.inner.left.e0,
            self.inner.right.e0,
            self.inner.phi0
        )
    }
}

/// A solved (possibly partial) interface timeline.
#[pyclass(name = "Timeline")]
struct PyTimeline {
    inner: coldplasma::Timeline,
    settings: SolverSettings,
}

#[pymethods]
impl PyTimeline {
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }

    fn period(&self) -> Option<f64> {
        self.inner.period
    }

    /// `(t, kind)` event list: trajectory intersections and switch points.
    fn events(&self) -> Vec<(f64, String)> {
        self.inner
            .events
            .iter()
            .map(|e| {
                let kind = match e.kind {
                    coldplasma::scenario::EventKind::Intersection => "intersection",
                    coldplasma::scenario::EventKind::SwitchPlus => "switch_plus",
                    coldplasma::scenario::EventKind::SwitchMinus => "switch_minus",
                };
                (e.t, kind.to_string())
            })
            .collect()
    }

    /// `(kind, t_start, t_end, n_points, completed)` per segment.
    fn segments(&self) -> Vec<(String, f64, f64, usize, bool)> {
        self.inner
            .segments
            .iter()
            .map(|s| {
                (
                    s.kind.label().to_string(),
                    s.t_start,
                    s.t_end,
                    s.points.len(),
                    s.completed(),
                )
            })
            .collect()
    }

    /// Sampled `(t, phi, dphi, e)` rows of one segment.
    fn segment_points(&self, index: usize) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        let seg = self
            .inner
            .segments
            .get(index)
            .ok_or_else(|| PyValueError::new_err(format!("no segment {index}")))?;
        Ok(seg
            .points
            .iter()
            .map(|p| (p.t, p.phi, p.dphi, p.e))
            .collect())
    }

    /// Human-readable diagnostics of one segment.
    fn diagnostics(&self, index: usize) -> PyResult<Vec<String>> {
        let seg = self
            .inner
            .segments
            .get(index)
            .ok_or_else(|| PyValueError::new_err(format!("no segment {index}")))?;
        Ok(seg.diagnostics.iter().map(|d| d.to_string()).collect())
    }

    /// Interface position at `t`, if a segment covers it.
    fn phi_at(&self, t: f64) -> Option<f64> {
        self.inner.phi_at(t)
    }

    fn has_stalls(&self) -> bool {
        self.inner.has_stalls()
    }

    /// Whole timeline as a JSON document.
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Validation report as a JSON document.
    fn validation_json(&self) -> PyResult<String> {
        let report = validate_timeline(&self.inner, &self.settings);
        serde_json::to_string_pretty(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Write the interface series as CSV.
    fn write_csv(&self, path: &str) -> PyResult<()> {
        std::fs::write(path, timeline_csv(&self.inner))
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Render the characteristic plane and write it as SVG.
    fn write_svg(&self, path: &str) -> PyResult<()> {
        let svg =
            render_characteristic_plane(&self.inner, &self.inner.problem, &RenderStyle::default());
        std::fs::write(path, svg).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Timeline(horizon={}, segments={}, events={}, period={:?})",
            self.inner.horizon,
            self.inner.segments.len(),
            self.inner.events.len(),
            self.inner.period
        )
    }
}

#[pymodule]
fn coldplasma_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyTimeline>()?;
    Ok(())
}
