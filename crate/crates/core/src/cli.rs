//! Configuration parsing, the command-line driver, and tabular export.
//!
//! The config format is plain `key = value` lines with `#` comments; unknown
//! keys are rejected with their line number. File writes are atomic
//! (write-temp-then-rename). Exit codes: 0 success, 1 usage or config error,
//! 2 solver found no solution, 3 degeneracy stall with partial output.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::characteristics::{intersection_times, state_at, trajectory_at, RiemannProblem};
use crate::diag::{CpError, Result};
use crate::numerics::SolverSettings;
use crate::render::{render_characteristic_plane, RenderStyle};
use crate::scenario::{build_timeline, validate_timeline, SegmentKind, Timeline};

/// Fully parsed run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_minus: f64,
    pub n_plus: f64,
    pub v_minus0: f64,
    pub v_plus0: f64,
    pub e_minus0: f64,
    pub e_plus0: f64,
    pub phi0: f64,
    pub horizon: Option<f64>,
    pub settings: SolverSettings,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn problem(&self) -> Result<RiemannProblem> {
        RiemannProblem::from_states(
            self.n_minus,
            self.n_plus,
            self.v_minus0,
            self.v_plus0,
            self.e_minus0,
            self.e_plus0,
            self.phi0,
        )
    }
}

const REQUIRED_KEYS: [&str; 6] = [
    "n_minus", "n_plus", "v_minus0", "v_plus0", "e_minus0", "e_plus0",
];

/// Parse a `key = value` config document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig {
        n_minus: f64::NAN,
        n_plus: f64::NAN,
        v_minus0: f64::NAN,
        v_plus0: f64::NAN,
        e_minus0: f64::NAN,
        e_plus0: f64::NAN,
        phi0: 0.0,
        horizon: None,
        settings: SolverSettings::default(),
        out_dir: None,
    };
    let mut seen: Vec<&str> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CpError::Config(format!(
                "line {}: expected `key = value`",
                ln + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        let num = |name: &str| -> Result<f64> {
            value.parse::<f64>().map_err(|_| {
                CpError::Config(format!("line {}: non-numeric value for `{name}`", ln + 1))
            })
        };
        match key {
            "n_minus" => cfg.n_minus = num("n_minus")?,
            "n_plus" => cfg.n_plus = num("n_plus")?,
            "v_minus0" => cfg.v_minus0 = num("v_minus0")?,
            "v_plus0" => cfg.v_plus0 = num("v_plus0")?,
            "e_minus0" => cfg.e_minus0 = num("e_minus0")?,
            "e_plus0" => cfg.e_plus0 = num("e_plus0")?,
            "phi0" => cfg.phi0 = num("phi0")?,
            "horizon" => cfg.horizon = Some(num("horizon")?),
            "root_tol" => cfg.settings.root_tol = num("root_tol")?,
            "ode_rel_tol" => cfg.settings.ode_rel_tol = num("ode_rel_tol")?,
            "ode_abs_tol" => cfg.settings.ode_abs_tol = num("ode_abs_tol")?,
            "max_step" => cfg.settings.max_step = num("max_step")?,
            "shoot_tol" => cfg.settings.shoot_tol = num("shoot_tol")?,
            "shoot_max_iter" => {
                cfg.settings.shoot_max_iter = value.parse().map_err(|_| {
                    CpError::Config(format!(
                        "line {}: non-integer value for `shoot_max_iter`",
                        ln + 1
                    ))
                })?
            }
            "event_refine_tol" => cfg.settings.event_refine_tol = num("event_refine_tol")?,
            "degeneracy_eps" => cfg.settings.degeneracy_eps = num("degeneracy_eps")?,
            "bracket_grid" => {
                cfg.settings.bracket_grid = value.parse().map_err(|_| {
                    CpError::Config(format!(
                        "line {}: non-integer value for `bracket_grid`",
                        ln + 1
                    ))
                })?
            }
            "out_dir" => cfg.out_dir = Some(PathBuf::from(value)),
            other => {
                return Err(CpError::Config(format!(
                    "line {}: unknown key `{other}`",
                    ln + 1
                )))
            }
        }
        match key {
            "n_minus" => seen.push("n_minus"),
            "n_plus" => seen.push("n_plus"),
            "v_minus0" => seen.push("v_minus0"),
            "v_plus0" => seen.push("v_plus0"),
            "e_minus0" => seen.push("e_minus0"),
            "e_plus0" => seen.push("e_plus0"),
            _ => {}
        }
    }
    let missing: Vec<&str> = REQUIRED_KEYS
        .iter()
        .filter(|k| !seen.contains(k))
        .copied()
        .collect();
    if !missing.is_empty() {
        return Err(CpError::Config(format!(
            "missing required keys: {}",
            missing.join(", ")
        )));
    }
    if !(cfg.n_minus > 0.0) {
        return Err(CpError::Config(format!(
            "n_minus must be > 0, got {}",
            cfg.n_minus
        )));
    }
    if !(cfg.n_plus > 0.0) {
        return Err(CpError::Config(format!(
            "n_plus must be > 0, got {}",
            cfg.n_plus
        )));
    }
    if let Some(h) = cfg.horizon {
        if !(h > 0.0) {
            return Err(CpError::Config(format!("horizon must be > 0, got {h}")));
        }
    }
    cfg.settings
        .validate()
        .map_err(|e| CpError::Config(e.to_string()))?;
    Ok(cfg)
}

/// Full-precision decimal formatting: 17 significant digits round-trip
/// exactly through `f64` parsing.
pub fn format_full(v: f64) -> String {
    format!("{:.16e}", v)
}

/// Serialize the interface series: one row per stored sample.
pub fn timeline_csv(timeline: &Timeline) -> String {
    let mut out = String::from("t,phi,dphi,e,x_minus,x_plus,segment_kind\n");
    for seg in &timeline.segments {
        for p in &seg.points {
            let xm = trajectory_at(&timeline.problem.left, p.t);
            let xp = trajectory_at(&timeline.problem.right, p.t);
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                format_full(p.t),
                format_full(p.phi),
                format_full(p.dphi),
                format_full(p.e),
                format_full(xm),
                format_full(xp),
                seg.kind.label()
            ));
        }
    }
    out
}

/// Parse a series document back into rows (used by the round-trip tests and
/// downstream consumers).
pub fn parse_series_csv(text: &str) -> Result<Vec<(f64, f64, f64, f64, f64, f64, String)>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "t,phi,dphi,e,x_minus,x_plus,segment_kind" {
                return Err(CpError::Config("unexpected series header".into()));
            }
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(CpError::Config(format!(
                "line {}: expected 7 columns",
                i + 1
            )));
        }
        let f = |j: usize| -> Result<f64> {
            parts[j]
                .parse::<f64>()
                .map_err(|_| CpError::Config(format!("line {}: bad number", i + 1)))
        };
        rows.push((
            f(0)?,
            f(1)?,
            f(2)?,
            f(3)?,
            f(4)?,
            f(5)?,
            parts[6].to_string(),
        ));
    }
    Ok(rows)
}

/// Print a line, ignoring broken-pipe errors from downstream consumers.
fn out(line: std::fmt::Arguments<'_>) {
    use std::io::Write as _;
    let _ = writeln!(std::io::stdout(), "{line}");
}

macro_rules! outln {
    ($($arg:tt)*) => { out(format_args!($($arg)*)) };
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "coldplasma",
    about = "Free-boundary Riemann problem for 1-D cold plasma: solve, validate and plot",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the interface timeline and write series + report files.
    Solve(CommonArgs),
    /// Export the boundary trajectories and side states.
    Characteristics(CommonArgs),
    /// Print the trajectory intersection times.
    Intersections(CommonArgs),
    /// Print the switching points of every rarefaction region.
    SwitchPoints(CommonArgs),
    /// Build the timeline and run the validation report.
    Validate(CommonArgs),
    /// Render the characteristic plane as SVG.
    Plot(CommonArgs),
}

#[derive(Debug, clap::Args)]
struct CommonArgs {
    /// Path to the `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if needed).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Output format for series data.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn load(args: &CommonArgs) -> Result<(RunConfig, RiemannProblem, f64)> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CpError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = parse_config(&text)?;
    let problem = cfg.problem()?;
    let horizon = args
        .horizon
        .or(cfg.horizon)
        .unwrap_or_else(|| problem.default_horizon());
    if !(horizon > 0.0) {
        return Err(CpError::Config("horizon must be > 0".into()));
    }
    Ok((cfg, problem, horizon))
}

fn exit_code_for(timeline: &Timeline) -> i32 {
    let shock_unsolved = timeline.segments.iter().any(|s| {
        s.kind == SegmentKind::SingularShock
            && s.diagnostics
                .iter()
                .any(|d| matches!(d, crate::diag::Diagnostic::NoSolution { .. }))
    });
    if shock_unsolved {
        2
    } else if timeline.has_stalls() || timeline.has_no_solution() {
        3
    } else {
        0
    }
}

fn cmd_solve(args: &CommonArgs) -> Result<i32> {
    let (cfg, problem, horizon) = load(args)?;
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| args.out.clone());
    std::fs::create_dir_all(&out_dir)?;
    let mut timeline = build_timeline(&problem, &cfg.settings, horizon)?;
    let report = validate_timeline(&timeline, &cfg.settings);
    timeline.validation = Some(report);

    // The machine-readable timeline document is always written; the series
    // format flag chooses whether the flat CSV rides along.
    write_atomic(
        &out_dir.join("timeline.json"),
        &serde_json::to_string_pretty(&timeline).expect("timeline serializes"),
    )?;
    if args.format == Format::Csv {
        write_atomic(&out_dir.join("timeline.csv"), &timeline_csv(&timeline))?;
    }
    write_atomic(
        &out_dir.join("report.json"),
        &serde_json::to_string_pretty(timeline.validation.as_ref().unwrap())
            .expect("report serializes"),
    )?;

    for seg in &timeline.segments {
        outln!(
            "{:32} [{:.6}, {:.6}] points={} {}",
            seg.kind.label(),
            seg.t_start,
            seg.t_end,
            seg.points.len(),
            seg.exit_event.as_deref().unwrap_or("-")
        );
    }
    if let Some(l) = timeline.period {
        outln!("period: {l:.9}");
    }
    let code = exit_code_for(&timeline);
    if code != 0 {
        outln!("partial result: see diagnostics in report.json");
    }
    Ok(code)
}

fn cmd_characteristics(args: &CommonArgs) -> Result<i32> {
    let (cfg, problem, horizon) = load(args)?;
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| args.out.clone());
    std::fs::create_dir_all(&out_dir)?;
    let n = 2000usize;
    match args.format {
        Format::Csv => {
            let mut out = String::from("t,x_minus,v_minus,e_minus,x_plus,v_plus,e_plus\n");
            for k in 0..=n {
                let t = horizon * k as f64 / n as f64;
                let (vm, em) = state_at(&problem.left, t);
                let (vp, ep) = state_at(&problem.right, t);
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    format_full(t),
                    format_full(trajectory_at(&problem.left, t)),
                    format_full(vm),
                    format_full(em),
                    format_full(trajectory_at(&problem.right, t)),
                    format_full(vp),
                    format_full(ep),
                ));
            }
            write_atomic(&out_dir.join("characteristics.csv"), &out)?;
            outln!("wrote {}", out_dir.join("characteristics.csv").display());
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = (0..=n)
                .map(|k| {
                    let t = horizon * k as f64 / n as f64;
                    let (vm, em) = state_at(&problem.left, t);
                    let (vp, ep) = state_at(&problem.right, t);
                    serde_json::json!({
                        "t": t,
                        "x_minus": trajectory_at(&problem.left, t),
                        "v_minus": vm,
                        "e_minus": em,
                        "x_plus": trajectory_at(&problem.right, t),
                        "v_plus": vp,
                        "e_plus": ep,
                    })
                })
                .collect();
            write_atomic(
                &out_dir.join("characteristics.json"),
                &serde_json::to_string_pretty(&rows).expect("rows serialize"),
            )?;
            outln!("wrote {}", out_dir.join("characteristics.json").display());
        }
    }
    Ok(0)
}

fn cmd_intersections(args: &CommonArgs) -> Result<i32> {
    let (cfg, problem, horizon) = load(args)?;
    let ts = intersection_times(&problem, horizon, &cfg.settings)?;
    match args.format {
        Format::Csv => {
            for t in &ts {
                outln!("{t:.9}");
            }
        }
        Format::Json => outln!("{}", serde_json::to_string(&ts).expect("list serializes")),
    }
    Ok(0)
}

fn cmd_switch_points(args: &CommonArgs) -> Result<i32> {
    let (cfg, problem, horizon) = load(args)?;
    let rows: Vec<(f64, &'static str)> =
        crate::scenario::switch_points_up_to(&problem, horizon, &cfg.settings)?
            .into_iter()
            .map(|sw| (sw.t, sw.side.label()))
            .collect();
    match args.format {
        Format::Csv => {
            for (t, side) in &rows {
                outln!("{t:.9} {side}");
            }
        }
        Format::Json => {
            let v: Vec<serde_json::Value> = rows
                .iter()
                .map(|(t, s)| serde_json::json!({"t": t, "side": s}))
                .collect();
            outln!("{}", serde_json::to_string(&v).expect("list serializes"));
        }
    }
    Ok(0)
}

fn cmd_validate(args: &CommonArgs) -> Result<i32> {
    let (cfg, problem, horizon) = load(args)?;
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| args.out.clone());
    std::fs::create_dir_all(&out_dir)?;
    let timeline = build_timeline(&problem, &cfg.settings, horizon)?;
    let report = validate_timeline(&timeline, &cfg.settings);
    write_atomic(
        &out_dir.join("report.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    for sr in &report.segments {
        outln!(
            "{:32} [{:.6}, {:.6}] r1={:.3e} r2={:.3e} e_min={:.3e} {}",
            sr.kind.label(),
            sr.t_start,
            sr.t_end,
            sr.r1_max,
            sr.r2_max,
            sr.e_min,
            if sr.completed { "complete" } else { "partial" }
        );
    }
    for v in &report.hard_violations {
        outln!("violation: {v}");
    }
    Ok(if report.hard_violations.is_empty() {
        0
    } else {
        2
    })
}

fn cmd_plot(args: &CommonArgs) -> Result<i32> {
    let (cfg, problem, horizon) = load(args)?;
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| args.out.clone());
    std::fs::create_dir_all(&out_dir)?;
    let timeline = build_timeline(&problem, &cfg.settings, horizon)?;
    let svg = render_characteristic_plane(&timeline, &problem, &RenderStyle::default());
    write_atomic(&out_dir.join("plane.svg"), &svg)?;
    outln!("wrote {}", out_dir.join("plane.svg").display());
    Ok(0)
}

/// Entry point for the binary; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut argv: Vec<std::ffi::OsString> = vec!["coldplasma".into()];
    argv.extend(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap prints its own help/usage text.
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Characteristics(a) => cmd_characteristics(a),
        Command::Intersections(a) => cmd_intersections(a),
        Command::SwitchPoints(a) => cmd_switch_points(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(code) => code,
        Err(CpError::Config(msg)) | Err(CpError::InvalidData(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CpError::Numerics(d)) => {
            eprintln!("solver error: {d}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Example configuration text for the commensurate reference problem.
pub fn example_config() -> &'static str {
    "# two media, commensurate frequencies\n\
     n_minus = 1\n\
     n_plus = 4\n\
     v_minus0 = 1\n\
     v_plus0 = 0\n\
     e_minus0 = 1\n\
     e_plus0 = -1\n\
     phi0 = 0\n"
}
