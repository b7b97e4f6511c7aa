use std::collections::BTreeMap;

use clap::{Args, ValueEnum};
use hetdiff::analysis::{
    self, default_eps_grid, exponent_curve, fit_power_law, fit_sweep, linear_trend, log_grid, q_grid, run_sweep,
    FdSettings, Observable, PowerLawFit, Source, SweepSpec, WalkerSettings,
};
use hetdiff::closedform::{ClosedFormSolution, EvalMode};
use hetdiff::fd::{self, Form, Grid1D, Scheme};
use hetdiff::model::{p_to_u, x_to_y, y_to_x};
use hetdiff::walker::{self, Bins, JumpRule};
use hetdiff::{InitialData, ModelParams};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::init::parse_init;
use crate::table::OutputTable;

/// A finished computation, before it is written anywhere.
pub struct Run {
    pub table: OutputTable,
    pub parameters: BTreeMap<String, Value>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveSource {
    /// Closed-form solution.
    Closed,
    /// Finite volumes on the pressure in the stretched coordinate y.
    FdY,
    /// Finite volumes on the pressure in the physical coordinate x.
    FdX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepSource {
    Closed,
    FdY,
    FdX,
    /// Random walk; needs eps >= 1e-2.
    Walker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceArg {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    /// Density u.
    U,
    /// Pressure p = D^q u.
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Closed-form kernels for point-mass and step data.
    Exact,
    /// Force numerical quadrature for every integral.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObservableArg {
    /// u(t, 0+).
    Value,
    /// du/dx(t, 0+).
    Slope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JumpArg {
    /// Sojourn time taken from the side the particle leaves.
    Reversible,
    /// Jump length and sojourn time both from the departure point.
    Departure,
}

impl From<JumpArg> for JumpRule {
    fn from(j: JumpArg) -> Self {
        match j {
            JumpArg::Reversible => JumpRule::Reversible,
            JumpArg::Departure => JumpRule::DeparturePoint,
        }
    }
}

fn params(eps: f64, q: f64) -> Result<ModelParams> {
    Ok(ModelParams::new(eps, q)?)
}

pub fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected LO:HI")?;
    let a: f64 = a.trim().parse().map_err(|_| format!("{a:?} is not a number"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("{b:?} is not a number"))?;
    if !(a < b) {
        return Err("need LO < HI".into());
    }
    Ok((a, b))
}

pub fn parse_triple(s: &str) -> std::result::Result<(f64, f64, usize), String> {
    let (lohi, n) = s.rsplit_once(':').ok_or("expected LO:HI:N")?;
    let (a, b) = parse_pair(lohi)?;
    let n = parse_count(n)?;
    Ok((a, b, n))
}

/// Accepts plain integers and exact float forms such as `1e6`.
pub fn parse_count(s: &str) -> std::result::Result<usize, String> {
    let s = s.trim();
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= 1e15 => Ok(v as usize),
        _ => Err(format!("{s:?} is not a count")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Solver.
    #[arg(long, value_enum, default_value_t = SolveSource::Closed)]
    pub source: SolveSource,
    /// Initial density: dirac:X0, step:A:B, expr:F or expr:LEFT|RIGHT.
    #[arg(long, default_value = "step:1:1")]
    pub init: String,
    /// Contrast: diffusivity on the left half-line.
    #[arg(long)]
    pub eps: f64,
    /// Exponent of the pressure p = D^q u, in [0, 1].
    #[arg(long)]
    pub q: f64,
    /// Snapshot times, comma separated.
    #[arg(long = "t", value_delimiter = ',', num_args = 1.., required = true)]
    pub times: Vec<f64>,
    /// Coordinate of the output column.
    #[arg(long, value_enum, default_value_t = SpaceArg::X)]
    pub space: SpaceArg,
    /// Quantity of the value columns.
    #[arg(long, value_enum, default_value_t = QuantityArg::U)]
    pub quantity: QuantityArg,
    /// Cell size on the right half-line; also the sampling step of the closed form.
    #[arg(long, default_value_t = 0.002)]
    pub dx: f64,
    /// Time-stepping weight, 0.5 (Crank-Nicolson) to 1 (implicit Euler).
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// Time step; defaults to dx^2.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Truncation tolerance for the domain extent.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Closed-form sampling range LO:HI in the output coordinate; defaults to the truncated domain.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub range: Option<(f64, f64)>,
    /// Closed-form evaluation mode.
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
}

pub fn solve(a: &SolveArgs) -> Result<Run> {
    let p = params(a.eps, a.q)?;
    let init = parse_init(&a.init)?;
    if a.times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(CliError::Usage("--t values must be positive".into()));
    }
    if !(a.dx > 0.0) {
        return Err(CliError::Usage("--dx must be positive".into()));
    }
    let mut times = a.times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let t_max = *times.last().expect("clap requires at least one time");
    let extra = match init {
        InitialData::Dirac { x0 } => x0,
        _ => 0.0,
    };

    let coord = match a.space {
        SpaceArg::X => "x",
        SpaceArg::Y => "y",
    };
    let (qty, unit) = match a.quantity {
        QuantityArg::U => ("u", "density"),
        QuantityArg::P => ("p", "pressure"),
    };
    let mut names = vec![coord.to_string()];
    names.extend(times.iter().map(|t| format!("{qty}(t={t})")));
    let mut units = vec!["length"];
    units.extend(times.iter().map(|_| unit));
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut table = OutputTable::new(&names, &units);

    let rows: Vec<Vec<f64>> = match a.source {
        SolveSource::Closed => {
            let mode = match a.mode {
                ModeArg::Exact => EvalMode::Exact,
                ModeArg::Quadrature => EvalMode::Quadrature,
            };
            let sol = ClosedFormSolution::from_density(&init, p, mode)?;
            let points: Vec<f64> = match a.range {
                Some((lo, hi)) => {
                    let n = ((hi - lo) / a.dx).ceil().max(1.0) as usize;
                    (0..n).map(|i| lo + (i as f64 + 0.5) * (hi - lo) / n as f64).collect()
                }
                None => {
                    let form = match a.space {
                        SpaceArg::X => Form::PressureX,
                        SpaceArg::Y => Form::PressureY,
                    };
                    Grid1D::for_problem(&p, form, t_max, a.dx, a.tol, extra)?.centers()
                }
            };
            points
                .par_iter()
                .filter(|&&c| c != 0.0)
                .map(|&c| {
                    let mut row = vec![c];
                    for &t in &times {
                        let v = match (a.space, a.quantity) {
                            (SpaceArg::X, QuantityArg::U) => sol.density(t, c)?,
                            (SpaceArg::X, QuantityArg::P) => sol.pressure(t, x_to_y(c, &p))?,
                            (SpaceArg::Y, QuantityArg::P) => sol.pressure(t, c)?,
                            (SpaceArg::Y, QuantityArg::U) => p_to_u(sol.pressure(t, c)?, y_to_x(c, &p), &p)?,
                        };
                        row.push(v);
                    }
                    Ok(row)
                })
                .collect::<Result<_>>()?
        }
        SolveSource::FdY | SolveSource::FdX => {
            if a.range.is_some() || a.mode != ModeArg::Exact {
                return Err(CliError::Usage("--range and --mode apply to --source closed only".into()));
            }
            let form = if a.source == SolveSource::FdY { Form::PressureY } else { Form::PressureX };
            let scheme = Scheme::new(form, a.theta, a.dt.unwrap_or(a.dx * a.dx))?;
            let grid = Grid1D::for_problem(&p, form, t_max, a.dx, a.tol, extra)?;
            let field = fd::solve_at(&init, &p, scheme, &times, &grid)?;
            let coords: Vec<f64> = match a.space {
                SpaceArg::X => field.physical_centers(&p),
                SpaceArg::Y => field.physical_centers(&p).into_iter().map(|x| x_to_y(x, &p)).collect(),
            };
            let columns: Vec<Vec<f64>> = (0..times.len())
                .map(|k| match a.quantity {
                    QuantityArg::U => field.density(k, &p),
                    QuantityArg::P => field.snapshot(k).to_vec(),
                })
                .collect();
            (0..coords.len())
                .map(|i| std::iter::once(coords[i]).chain(columns.iter().map(|c| c[i])).collect())
                .collect()
        }
    };
    for row in rows {
        table.push(row)?;
    }

    let source = a.source.to_possible_value().expect("no skipped variants").get_name().to_string();
    table.meta("source", &source);
    table.meta("init", &a.init);
    table.meta("eps", a.eps);
    table.meta("q", a.q);
    table.meta("sigma", p.sigma());
    if a.source != SolveSource::Closed {
        table.meta("dx", a.dx);
        table.meta("theta", a.theta);
        table.meta("dt", a.dt.unwrap_or(a.dx * a.dx));
    }
    let parameters = BTreeMap::from([
        ("source".into(), json!(source)),
        ("init".into(), json!(a.init)),
        ("eps".into(), json!(a.eps)),
        ("q".into(), json!(a.q)),
        ("times".into(), json!(times)),
        ("dx".into(), json!(a.dx)),
        ("theta".into(), json!(a.theta)),
        ("dt".into(), json!(a.dt.unwrap_or(a.dx * a.dx))),
        ("tol".into(), json!(a.tol)),
    ]);
    Ok(Run { table, parameters, seeds: vec![] })
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Observable; defaults to the one that decays for the given q.
    #[arg(long, value_enum)]
    pub observable: Option<ObservableArg>,
    /// Contrast exponent of a single sweep.
    #[arg(long, required_unless_present = "curve", conflicts_with = "curve")]
    pub q: Option<f64>,
    /// Fit an exponent for every q in --q-range and write the (q, k) curve.
    #[arg(long, requires = "q_range")]
    pub curve: bool,
    /// q values LO:HI:N for --curve; an endpoint at 1/2 is moved inward.
    #[arg(long, value_parser = parse_triple)]
    pub q_range: Option<(f64, f64, usize)>,
    /// Solver evaluating the observable.
    #[arg(long, value_enum, default_value_t = SweepSource::Closed)]
    pub source: SweepSource,
    /// Log-spaced eps grid LO:HI:N including both ends; default is 50 points inside (1e-4, 1).
    #[arg(long, value_parser = parse_triple)]
    pub eps_range: Option<(f64, f64, usize)>,
    /// Observation time; defaults to 0.01 for the value and 0.1 for the slope.
    #[arg(long = "t")]
    pub t: Option<f64>,
    /// Initial density, as for solve; defaults to step:1:1 for the value and
    /// expr:1+sin(x) for the slope, whose equal-step counterpart is flat at eps = 1.
    #[arg(long)]
    pub init: Option<String>,
    /// Fit window: auto (whole grid, plus 1e-4:1e-2 near q = 1/2), or LO:HI.
    #[arg(long, default_value = "auto")]
    pub window: String,
    /// FD cell size.
    #[arg(long, default_value_t = 0.002)]
    pub dx: f64,
    /// FD time-stepping weight, 0.5 to 1.
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// FD time step; defaults to dx^2.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Walker lattice step.
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Walker particle count.
    #[arg(long, default_value = "200000", value_parser = parse_count)]
    pub particles: usize,
    /// Walker random seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Walker histogram bin width.
    #[arg(long, default_value_t = 0.05)]
    pub bin: f64,
    /// Walker interface rule.
    #[arg(long, value_enum, default_value_t = JumpArg::Reversible)]
    pub jump: JumpArg,
}

fn fit_meta(table: &mut OutputTable, prefix: &str, fit: &std::result::Result<PowerLawFit, hetdiff::Error>) {
    match fit {
        Ok(f) => {
            table.meta(&format!("{prefix}_k"), f.k);
            table.meta(&format!("{prefix}_c"), f.c);
            table.meta(&format!("{prefix}_residual"), f.residual);
            table.meta(&format!("{prefix}_window"), format!("{}:{}", f.window.0, f.window.1));
            table.meta(&format!("{prefix}_points"), f.points);
        }
        Err(e) => table.meta(&format!("{prefix}_error"), e),
    }
}

pub fn sweep(a: &SweepArgs) -> Result<Run> {
    let source = match a.source {
        SweepSource::Closed => Source::ClosedForm,
        SweepSource::FdY => Source::FdY,
        SweepSource::FdX => Source::FdX,
        SweepSource::Walker => Source::Walker,
    };
    let window = match a.window.as_str() {
        "auto" => None,
        w => Some(parse_pair(w).map_err(|e| CliError::Usage(format!("bad --window {w:?}: {e}")))?),
    };
    let eps = match a.eps_range {
        Some((lo, hi, n)) if lo > 0.0 && n >= 2 => log_grid(lo, hi, n),
        Some(_) => return Err(CliError::Usage("--eps-range needs 0 < LO < HI and N >= 2".into())),
        None => default_eps_grid(),
    };
    let q0 = match (a.q, a.q_range) {
        (Some(q), _) => q,
        (None, Some((lo, hi, _))) => 0.5 * (lo + hi),
        (None, None) => unreachable!("clap enforces --q or --q-range"),
    };
    let observable = match a.observable {
        Some(ObservableArg::Value) => Observable::BoundaryValue,
        Some(ObservableArg::Slope) => Observable::BoundarySlope,
        None => Observable::decaying_for(q0),
    };
    let init_spec = a.init.clone().unwrap_or_else(|| {
        match observable {
            Observable::BoundaryValue => "step:1:1",
            Observable::BoundarySlope => "expr:1+sin(x)",
        }
        .to_string()
    });
    let init = parse_init(&init_spec)?;
    let spec = SweepSpec {
        q: q0,
        eps,
        source,
        observable,
        t_obs: a.t.unwrap_or(observable.default_time()),
        init,
        fd: FdSettings { delta: a.dx, theta: a.theta, dt: a.dt, ..FdSettings::default() },
        walker: WalkerSettings {
            delta: a.delta,
            particles: a.particles,
            seed: a.seed,
            bin_width: a.bin,
            jump: a.jump.into(),
        },
    };
    spec.validate()?;

    let source_name = a.source.to_possible_value().expect("no skipped variants").get_name().to_string();
    let obs_name = match observable {
        Observable::BoundaryValue => "value",
        Observable::BoundarySlope => "slope",
    };
    let mut parameters = BTreeMap::from([
        ("source".into(), json!(source_name)),
        ("init".into(), json!(init_spec)),
        ("t".into(), json!(spec.t_obs)),
        ("eps".into(), json!(spec.eps)),
        ("window".into(), json!(a.window)),
    ]);
    if source == Source::FdY || source == Source::FdX {
        parameters.insert("fd".into(), json!({ "dx": a.dx, "theta": a.theta, "dt": a.dt.unwrap_or(a.dx * a.dx) }));
    }
    let mut seeds = vec![];
    if source == Source::Walker {
        seeds.push(a.seed);
        parameters.insert(
            "walker".into(),
            json!({ "delta": a.delta, "particles": a.particles, "bin": a.bin, "jump": format!("{:?}", a.jump).to_lowercase() }),
        );
    }

    let table = if a.curve {
        let (lo, hi, n) = a.q_range.expect("clap enforces --q-range with --curve");
        if n == 0 {
            return Err(CliError::Usage("--q-range needs N >= 1".into()));
        }
        let qs = q_grid(lo, hi, n);
        let win = window.unwrap_or((spec.eps[0].min(spec.eps[spec.eps.len() - 1]), spec.eps[0].max(spec.eps[spec.eps.len() - 1])));
        let curve = exponent_curve(&qs, &spec, win)?;
        let mut table = OutputTable::new(
            &["q", "abs_q_minus_half", "k", "c", "residual", "points"],
            &["1", "1", "1", "1", "log", "count"],
        );
        let mut failed = Vec::new();
        let mut pts = Vec::new();
        for cp in &curve {
            match &cp.fit {
                Ok(f) => {
                    pts.push((cp.q, f.k));
                    table.push(vec![cp.q, (cp.q - 0.5).abs(), f.k, f.c, f.residual, f.points as f64])?;
                }
                Err(e) => failed.push(format!("q={} ({e})", cp.q)),
            }
        }
        match linear_trend(&pts) {
            Ok((slope, intercept)) => {
                table.meta("trend_slope", slope);
                table.meta("trend_intercept", intercept);
            }
            Err(e) => table.meta("trend_error", e),
        }
        if !failed.is_empty() {
            table.meta("failed", failed.join("; "));
        }
        table.meta("window", format!("{}:{}", win.0, win.1));
        parameters.insert("q_range".into(), json!([lo, hi, n]));
        parameters.insert("observable".into(), json!("decaying"));
        table
    } else {
        let sweep = run_sweep(&spec)?;
        let mut table = OutputTable::new(
            &["eps", obs_name, "log10_eps", &format!("log10_abs_{obs_name}")],
            &["1", if observable == Observable::BoundaryValue { "density" } else { "density/length" }, "log10", "log10"],
        );
        let mut failed = Vec::new();
        for row in &sweep.rows {
            match &row.value {
                Ok(v) if v.is_finite() => table.push(vec![row.eps, *v, row.eps.log10(), v.abs().log10()])?,
                Ok(v) => failed.push(format!("eps={} (value {v})", row.eps)),
                Err(e) => failed.push(format!("eps={} ({e})", row.eps)),
            }
        }
        if table.rows.is_empty() {
            return Err(CliError::Numerical(format!("every sweep point failed: {}", failed.join("; "))));
        }
        if !failed.is_empty() {
            table.meta("failed", failed.join("; "));
        }
        match window {
            Some(w) => fit_meta(&mut table, "fit", &fit_power_law(&sweep.points(), w)),
            None => {
                let report = fit_sweep(&sweep);
                fit_meta(&mut table, "fit_full", &report.full);
                if let Some(sub) = &report.sub {
                    fit_meta(&mut table, "fit_near_half", sub);
                }
            }
        }
        parameters.insert("q".into(), json!(spec.q));
        parameters.insert("observable".into(), json!(obs_name));
        table
    };
    let mut table = table;
    table.meta("source", &source_name);
    table.meta("init", &init_spec);
    table.meta("t", spec.t_obs);
    if !a.curve {
        table.meta("q", spec.q);
        table.meta("observable", obs_name);
    }
    if source == Source::Walker {
        table.meta("precision", "low (Monte Carlo)");
        table.meta("seed", a.seed);
    }
    Ok(Run { table, parameters, seeds })
}

#[derive(Debug, Clone, Args)]
pub struct WalkArgs {
    /// Contrast: diffusivity on the left half-line.
    #[arg(long)]
    pub eps: f64,
    /// Exponent of the pressure p = D^q u, in [0, 1].
    #[arg(long)]
    pub q: f64,
    /// Lattice step on the right half-line.
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Number of particles.
    #[arg(long, default_value = "100000", value_parser = parse_count)]
    pub n: usize,
    /// Horizon.
    #[arg(long = "t", default_value_t = 0.1)]
    pub t: f64,
    /// Random seed; equal seeds give identical tables.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Starting point of every particle (a point mass).
    #[arg(long, default_value_t = 0.2)]
    pub x0: f64,
    /// Histogram bin width.
    #[arg(long, default_value_t = 0.02)]
    pub bins: f64,
    /// Histogram range LO:HI; defaults to eight diffusion lengths around the start and the interface.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub range: Option<(f64, f64)>,
    /// Interface rule.
    #[arg(long, value_enum, default_value_t = JumpArg::Reversible)]
    pub jump: JumpArg,
}

pub fn walk(a: &WalkArgs) -> Result<Run> {
    let p = params(a.eps, a.q)?;
    let init = InitialData::dirac(a.x0)?;
    let rule = walker::walk_rule_from_params(&p, a.delta)?.with_jump(a.jump.into());
    let ens = walker::simulate(&rule, &init, a.n, a.t, a.seed)?;
    let (lo, hi) = a.range.unwrap_or_else(|| {
        let spread = 8.0 * (a.t * p.eps().max(1.0)).sqrt();
        (-spread, a.x0 + spread)
    });
    let bins = Bins::aligned(lo, hi, a.bins).map_err(|e| CliError::Usage(e.to_string()))?;
    let est = walker::density(&ens, &bins)?;
    let sol = ClosedFormSolution::from_density(&init, p, EvalMode::Exact)?;
    let exact = analysis::exact_bin_masses(&est, &sol)?;
    let l1 = analysis::walker_l1(&est, &sol)?;
    let left = ens.left_fraction();

    let mut table = OutputTable::new(
        &["x_lo", "x_hi", "x", "density", "exact_density", "abs_mass_error", "l1_distance", "left_mass_fraction"],
        &["length", "length", "length", "density", "density", "1", "1", "1"],
    );
    let masses = est.masses();
    for (i, w) in est.edges.windows(2).enumerate() {
        let width = w[1] - w[0];
        table.push(vec![
            w[0],
            w[1],
            0.5 * (w[0] + w[1]),
            est.density[i],
            exact[i] / width,
            (masses[i] - exact[i]).abs(),
            l1,
            left,
        ])?;
    }
    table.meta("eps", a.eps);
    table.meta("q", a.q);
    table.meta("delta", a.delta);
    table.meta("particles", a.n);
    table.meta("t", a.t);
    table.meta("x0", a.x0);
    table.meta("seed", a.seed);
    table.meta("jump", format!("{:?}", a.jump).to_lowercase());
    table.meta("outside_fraction", est.outside);
    table.meta("l1_distance", l1);
    table.meta("left_mass_fraction", left);
    let parameters = BTreeMap::from([
        ("eps".into(), json!(a.eps)),
        ("q".into(), json!(a.q)),
        ("delta".into(), json!(a.delta)),
        ("particles".into(), json!(a.n)),
        ("t".into(), json!(a.t)),
        ("x0".into(), json!(a.x0)),
        ("bins".into(), json!(a.bins)),
        ("range".into(), json!([lo, hi])),
        ("jump".into(), json!(format!("{:?}", a.jump).to_lowercase())),
    ]);
    Ok(Run { table, parameters, seeds: vec![a.seed] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsers() {
        assert_eq!(parse_pair("-1:2.5"), Ok((-1.0, 2.5)));
        assert!(parse_pair("2:1").is_err());
        assert_eq!(parse_triple("0.5:1:50"), Ok((0.5, 1.0, 50)));
        assert_eq!(parse_triple("1e-6:1e-3:31"), Ok((1e-6, 1e-3, 31)));
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }
}
