//! Parameter sweeps over `eps`, interface observables, and power-law fits
//! `value ≈ exp(c) eps^k` in log-log space.

use rayon::prelude::*;

use crate::closedform::{ClosedFormSolution, EvalMode};
use crate::error::{Error, Result};
use crate::fd::{self, Form, Grid1D, Scheme};
use crate::model::{InitialData, ModelParams};
use crate::quadrature::{integrate, GaussLegendre, Tolerance};
use crate::walker::{self, Bins, DensityEstimate, InitSampler, JumpRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    ClosedForm,
    FdY,
    FdX,
    Walker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    /// `u(t, 0⁺)`.
    BoundaryValue,
    /// `∂_x u(t, 0⁺)`.
    BoundarySlope,
}

impl Observable {
    /// The observable that decays as `eps → 0`: the value for `q > 1/2`,
    /// the slope for `q < 1/2`.
    pub fn decaying_for(q: f64) -> Self {
        if q > 0.5 {
            Observable::BoundaryValue
        } else {
            Observable::BoundarySlope
        }
    }

    /// Default observation time: 0.01 for the value, 0.1 for the slope.
    pub fn default_time(self) -> f64 {
        match self {
            Observable::BoundaryValue => 0.01,
            Observable::BoundarySlope => 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSettings {
    pub delta: f64,
    pub theta: f64,
    /// Time step; `delta²` when absent.
    pub dt: Option<f64>,
    pub tol: f64,
}

impl Default for FdSettings {
    fn default() -> Self {
        FdSettings {
            delta: 0.002,
            theta: 1.0,
            dt: None,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerSettings {
    pub delta: f64,
    pub particles: usize,
    pub seed: u64,
    pub bin_width: f64,
    pub jump: JumpRule,
}

impl Default for WalkerSettings {
    fn default() -> Self {
        WalkerSettings {
            delta: 0.01,
            particles: 200_000,
            seed: 1,
            bin_width: 0.05,
            jump: JumpRule::Reversible,
        }
    }
}

/// Smallest `eps` a walker sweep accepts.
pub const WALKER_EPS_MIN: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub q: f64,
    pub eps: Vec<f64>,
    pub source: Source,
    pub observable: Observable,
    pub t_obs: f64,
    /// Density initial data.
    pub init: InitialData,
    pub fd: FdSettings,
    pub walker: WalkerSettings,
}

impl SweepSpec {
    /// Step(1, 1) data on the default grid at the observable's default time.
    pub fn new(q: f64, source: Source, observable: Observable) -> Self {
        SweepSpec {
            q,
            eps: default_eps_grid(),
            source,
            observable,
            t_obs: observable.default_time(),
            init: InitialData::Step { a: 1.0, b: 1.0 },
            fd: FdSettings::default(),
            walker: WalkerSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(Error::InvalidParameter("empty eps grid".into()));
        }
        let increasing = self.eps.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.eps.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::InvalidParameter("eps grid must be strictly monotone".into()));
        }
        for &e in &self.eps {
            ModelParams::new(e, self.q)?;
        }
        if !(self.t_obs > 0.0 && self.t_obs.is_finite()) {
            return Err(Error::InvalidParameter(format!("observation time must be positive, got {}", self.t_obs)));
        }
        if self.source == Source::Walker {
            if let Some(e) = self.eps.iter().find(|&&e| e < WALKER_EPS_MIN) {
                return Err(Error::InvalidParameter(format!(
                    "walker sweeps need eps >= {WALKER_EPS_MIN}, got {e}"
                )));
            }
        }
        Ok(())
    }
}

/// `n` log-spaced points inside `(1e-4, 1)`, one per equal log-width cell.
pub fn default_eps_grid() -> Vec<f64> {
    log_midpoints(1e-4, 1.0, 50)
}

/// `n >= 2` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

/// Centers (in log scale) of `n` equal log-width cells between `lo` and `hi`.
pub fn log_midpoints(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * (i as f64 + 0.5) / n as f64))
        .collect()
}

/// `(eps, observable)` with per-`eps` failures kept.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub value: std::result::Result<f64, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub q: f64,
    pub observable: Observable,
    pub source: Source,
    pub t_obs: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// The successful rows.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.value.as_ref().ok().map(|&v| (r.eps, v)))
            .collect()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.value.is_err()).count()
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let rows = spec
        .eps
        .par_iter()
        .map(|&eps| SweepRow {
            eps,
            value: ModelParams::new(eps, spec.q).and_then(|p| observe(spec, &p)),
        })
        .collect();
    Ok(SweepTable {
        q: spec.q,
        observable: spec.observable,
        source: spec.source,
        t_obs: spec.t_obs,
        rows,
    })
}

/// The observable of `spec` for one parameter set.
pub fn observe(spec: &SweepSpec, params: &ModelParams) -> Result<f64> {
    let t = spec.t_obs;
    match spec.source {
        Source::ClosedForm => {
            let sol = ClosedFormSolution::from_density(&spec.init, *params, EvalMode::Exact)?;
            match spec.observable {
                Observable::BoundaryValue => sol.interface().value(t),
                Observable::BoundarySlope => sol.flux_right(t),
            }
        }
        Source::FdY | Source::FdX => {
            let form = if spec.source == Source::FdY {
                Form::PressureY
            } else {
                Form::PressureX
            };
            let s = spec.fd;
            let scheme = Scheme::new(form, s.theta, s.dt.unwrap_or(s.delta * s.delta))?;
            let extra = match spec.init {
                InitialData::Dirac { x0 } => x0,
                _ => 0.0,
            };
            let grid = Grid1D::for_problem(params, form, t, s.delta, s.tol, extra)?;
            let field = fd::solve(&spec.init, params, scheme, t, &grid)?;
            let r = fd::boundary_readouts(&field, params)?;
            Ok(match spec.observable {
                Observable::BoundaryValue => r.u_plus,
                Observable::BoundarySlope => r.du_plus,
            })
        }
        Source::Walker => walker_observable(spec, params),
    }
}

/// Near-interface density from a walker ensemble, linearly extrapolated
/// from the first two bins right of the interface.
fn walker_observable(spec: &SweepSpec, params: &ModelParams) -> Result<f64> {
    let w = spec.walker;
    let t = spec.t_obs;
    let rule = walker::walk_rule_from_params(params, w.delta)?.with_jump(w.jump);
    let (extent, mass) = sampling_window(&spec.init, t)?;
    let sampler = InitSampler::new(spec.init.clone(), extent)?;
    let ens = walker::simulate_with(&rule, &sampler, w.particles, t, w.seed, None)?;
    let bins = Bins::new(vec![0.0, w.bin_width, 2.0 * w.bin_width])?;
    let d = walker::density(&ens, &bins)?;
    let (d1, d2) = (mass * d.density[0], mass * d.density[1]);
    Ok(match spec.observable {
        Observable::BoundaryValue => 1.5 * d1 - 0.5 * d2,
        Observable::BoundarySlope => (d2 - d1) / w.bin_width,
    })
}

/// Sampling half-width for non-point data and the mass it carries.
fn sampling_window(init: &InitialData, t: f64) -> Result<(f64, f64)> {
    let extent = 10.0 * t.sqrt();
    let mass = match init {
        InitialData::Dirac { .. } => 1.0,
        InitialData::Step { a, b } => (a + b) * extent,
        InitialData::Sampled(s) => {
            let tol = Tolerance::default();
            integrate(|x| s.left(x), -extent, 0.0, tol)?.value
                + integrate(|x| s.right(x), 0.0, extent, tol)?.value
        }
    };
    Ok((extent, mass))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub k: f64,
    /// Intercept of `ln value` against `ln eps`.
    pub c: f64,
    pub window: (f64, f64),
    /// RMS residual in `ln value`.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares line through `(ln eps, ln value)` for `eps` in the closed `window`.
pub fn fit_power_law(points: &[(f64, f64)], window: (f64, f64)) -> Result<PowerLawFit> {
    let (lo, hi) = window;
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(e, _)| e >= lo * (1.0 - 1e-12) && e <= hi * (1.0 + 1e-12))
        .collect();
    if inside.len() < 5 {
        return Err(Error::Domain(format!(
            "power-law fit needs at least 5 points in [{lo:e}, {hi:e}], got {}",
            inside.len()
        )));
    }
    if let Some(&(e, v)) = inside.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(Error::Domain(format!("nonpositive value {v} at eps = {e} in the fit window")));
    }
    let n = inside.len() as f64;
    let xs: Vec<f64> = inside.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = inside.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("fit window holds a single eps value".into()));
    }
    let k = sxy / sxx;
    let c = my - k * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - c - k * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(PowerLawFit {
        k,
        c,
        window,
        residual,
        points: inside.len(),
    })
}

/// Window over which the measured exponent bends near `q = 1/2`.
pub const NEAR_HALF_WINDOW: (f64, f64) = (1e-4, 1e-2);

/// Fit over the whole table, plus a second fit on [`NEAR_HALF_WINDOW`]
/// when `|q - 1/2| < 0.15`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub full: std::result::Result<PowerLawFit, Error>,
    pub sub: Option<std::result::Result<PowerLawFit, Error>>,
}

pub fn fit_sweep(table: &SweepTable) -> FitReport {
    let pts = table.points();
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let full = fit_power_law(&pts, (lo, hi));
    let sub = ((table.q - 0.5).abs() < 0.15).then(|| fit_power_law(&pts, NEAR_HALF_WINDOW));
    FitReport { full, sub }
}

/// Smallest allowed distance of a curve's `q` from 1/2.
pub const Q_GAP: f64 = 0.02;

/// `n` evenly spaced values from `lo` to `hi`, with an endpoint at 1/2
/// moved inward by [`Q_GAP`].
pub fn q_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let shift = |q: f64, inward: f64| if (q - 0.5).abs() < Q_GAP { 0.5 + inward * Q_GAP } else { q };
    let a = shift(lo, (hi - lo).signum());
    let b = shift(hi, (lo - hi).signum());
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub q: f64,
    pub fit: std::result::Result<PowerLawFit, Error>,
}

/// Fitted exponent for every `q`; each run uses `base` with `q` replaced
/// and the observable that decays for that `q`.
pub fn exponent_curve(q_values: &[f64], base: &SweepSpec, window: (f64, f64)) -> Result<Vec<CurvePoint>> {
    if let Some(q) = q_values.iter().find(|&&q| (q - 0.5).abs() < Q_GAP) {
        return Err(Error::InvalidParameter(format!(
            "q = {q} is closer than {Q_GAP} to 1/2"
        )));
    }
    Ok(q_values
        .par_iter()
        .map(|&q| {
            let spec = SweepSpec {
                q,
                observable: Observable::decaying_for(q),
                ..base.clone()
            };
            CurvePoint {
                q,
                fit: run_sweep(&spec).and_then(|t| fit_power_law(&t.points(), window)),
            }
        })
        .collect())
}

/// Least-squares slope and intercept of `k` against `|q - 1/2|`.
pub fn linear_trend(curve: &[(f64, f64)]) -> Result<(f64, f64)> {
    if curve.len() < 2 {
        return Err(Error::Domain("trend needs at least two points".into()));
    }
    let n = curve.len() as f64;
    let xs: Vec<f64> = curve.iter().map(|p| (p.0 - 0.5).abs()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = curve.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(curve).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("trend needs two distinct |q - 1/2|".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Exact mass of each bin under the closed-form density `u(T, ·)`.
pub fn exact_bin_masses(estimate: &DensityEstimate, solution: &ClosedFormSolution) -> Result<Vec<f64>> {
    let gauss = GaussLegendre::new(8);
    let t = estimate.horizon;
    let piece = |a: f64, b: f64| -> Result<f64> {
        let mut s = 0.0;
        for (x, w) in gauss.mapped(a, b) {
            s += w * solution.density(t, x)?;
        }
        Ok(s)
    };
    estimate
        .edges
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            if a < 0.0 && b > 0.0 {
                Ok(piece(a, 0.0)? + piece(0.0, b)?)
            } else {
                piece(a, b)
            }
        })
        .collect()
}

/// `L¹` distance between a histogram of a unit-mass ensemble and the
/// closed-form density, counting the mass either side puts outside the bins.
pub fn walker_l1(estimate: &DensityEstimate, solution: &ClosedFormSolution) -> Result<f64> {
    let exact = exact_bin_masses(estimate, solution)?;
    let binned: f64 = exact.iter().sum();
    let inside: f64 = estimate
        .masses()
        .iter()
        .zip(&exact)
        .map(|(m, e)| (m - e).abs())
        .sum();
    Ok(inside + estimate.outside + (1.0 - binned).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let pts: Vec<(f64, f64)> = log_grid(1e-6, 1.0, 30).into_iter().map(|e| (e, 3.0 * e.powf(0.4))).collect();
        let fit = fit_power_law(&pts, (1e-6, 1.0)).unwrap();
        assert!((fit.k - 0.4).abs() < 1e-12);
        assert!((fit.c - 3f64.ln()).abs() < 1e-11);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.points, 30);
    }

    #[test]
    fn fit_errors() {
        let pts: Vec<(f64, f64)> = log_grid(1e-3, 1.0, 10).into_iter().map(|e| (e, e)).collect();
        assert!(matches!(fit_power_law(&pts, (1e-1, 1.0)), Err(Error::Domain(_))));
        let mut bad = pts.clone();
        bad[5].1 = 0.0;
        assert!(matches!(fit_power_law(&bad, (1e-3, 1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn grids() {
        let g = default_eps_grid();
        assert_eq!(g.len(), 50);
        assert!(g[0] > 1e-4 && g[49] < 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let g = log_grid(1e-6, 1e-3, 4);
        assert!((g[0] - 1e-6).abs() < 1e-20 && (g[3] - 1e-3).abs() < 1e-18);
        let q = q_grid(0.5, 1.0, 50);
        assert_eq!(q.len(), 50);
        assert!((q[0] - 0.52).abs() < 1e-15 && q[49] == 1.0);
        let q = q_grid(0.0, 0.5, 5);
        assert!((q[4] - 0.48).abs() < 1e-15 && q[0] == 0.0);
    }

    #[test]
    fn q_half_sweep_is_flat() {
        let spec = SweepSpec::new(0.5, Source::ClosedForm, Observable::BoundaryValue);
        let t = run_sweep(&spec).unwrap();
        let v: Vec<f64> = t.points().iter().map(|p| p.1).collect();
        // Step(1, 1): h = (1 + eps^0.5) / 2 depends on eps only through the left data
        for (i, &(e, val)) in t.points().iter().enumerate() {
            assert!((val - (1.0 + e.sqrt()) / 2.0).abs() < 1e-14, "{i}");
        }
        let dirac = SweepSpec {
            init: InitialData::dirac(1.0).unwrap(),
            ..spec
        };
        let t = run_sweep(&dirac).unwrap();
        let first = t.points()[0].1;
        assert!(t.points().iter().all(|p| p.1 == first));
        assert_eq!(v.len(), 50);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let mut spec = SweepSpec::new(0.9, Source::ClosedForm, Observable::BoundaryValue);
        spec.eps = vec![0.1, 0.01, 0.2];
        assert!(run_sweep(&spec).is_err());
        let mut spec = SweepSpec::new(0.9, Source::Walker, Observable::BoundaryValue);
        spec.eps = vec![0.1, 0.001];
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn value_decreases_for_large_q() {
        let spec = SweepSpec::new(0.9, Source::ClosedForm, Observable::BoundaryValue);
        let pts = run_sweep(&spec).unwrap().points();
        assert!(pts.windows(2).all(|w| w[1].1 > w[0].1));
    }

    #[test]
    fn slope_decreases_for_small_q() {
        let spec = SweepSpec::new(0.1, Source::ClosedForm, Observable::BoundarySlope);
        let pts: Vec<(f64, f64)> = run_sweep(&spec).unwrap().points().into_iter().filter(|p| p.0 <= 1e-2).collect();
        assert!(pts[0].1 > 0.0);
        // Step(1, 1) carries a factor 1 - eps^q that vanishes at eps = 1
        assert!(pts.windows(2).all(|w| w[1].1 > w[0].1));
    }

    #[test]
    fn linear_trend_of_exact_line() {
        let (s, c) = linear_trend(&[(0.1, 0.4), (0.3, 0.2), (0.9, 0.4)]).unwrap();
        assert!((s - 1.0).abs() < 1e-12 && c.abs() < 1e-12);
        assert!(linear_trend(&[(0.1, 0.4)]).is_err());
    }

    #[test]
    fn curve_rejects_q_near_half() {
        let base = SweepSpec::new(0.9, Source::ClosedForm, Observable::BoundaryValue);
        assert!(exponent_curve(&[0.51], &base, (1e-4, 1.0)).is_err());
    }
}
