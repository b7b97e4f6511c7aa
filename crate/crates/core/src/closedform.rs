//! Exact solution of the pressure equation
//!
//! ```text
//! p_t = (sigma p_y)_y  (y < 0),   p_t = p_yy  (y > 0)
//! ```
//!
//! glued at `y = 0` by continuity of `p` and of the flux. Each half-line is a
//! Dirichlet problem whose boundary value is the interface value `h(t)`:
//!
//! ```text
//! h(t) = ∫_0^∞ c(ξ) exp(-ξ²/4t) / sqrt(pi t) dξ,
//! c(ξ) = (p0(ξ) + sqrt(sigma) p0(-sqrt(sigma) ξ)) / (1 + sqrt(sigma))
//! ```
//!
//! and the solution on `y > 0` is the half-line heat kernel convolution plus
//! a Duhamel memory term `∫ h'(τ) erfc(y / 2 sqrt(t - τ)) dτ` (the left side
//! is the same after the scaling `s = sigma t`, `z = -y`).
//!
//! Point masses and step data have elementary closed forms; those are used
//! directly in [`EvalMode::Exact`]. [`EvalMode::Quadrature`] forces the
//! general representation (quadrature over `ξ`, product integration over
//! `τ`) for every kind of data, which is how the general machinery is checked
//! against the closed forms. Sampled data always takes the general route.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{
    initial_pressure, side_of, x_to_y, InitialData, ModelParams, Side,
};
use crate::quadrature::{erfc, integrate, GaussLegendre, Tolerance};

/// Gaussian tail level at which `ξ`-integrals are truncated.
pub const TRUNCATION_TOL: f64 = 1e-12;

/// Start of the memory integrals for sampled data; `h(0⁺)` is taken as `h(TAU0)`.
pub const SAMPLED_TAU0: f64 = 1e-8;

/// Half-width of the `ξ` window outside which `exp(-ξ²/4t)` is below `tol`.
pub fn truncation_width(t: f64, tol: f64) -> f64 {
    2.0 * t.sqrt() * (1.0 / tol).ln().sqrt()
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be positive, got {t}")))
    }
}

/// Heat kernel on the half-line with a homogeneous Dirichlet condition at 0.
///
/// `Φ(t, x, ξ) = (exp(-(x-ξ)²/4t) - exp(-(x+ξ)²/4t)) / (2 sqrt(pi t))`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HeatHalfKernel;

impl HeatHalfKernel {
    #[inline]
    pub fn eval(&self, t: f64, x: f64, xi: f64) -> f64 {
        // exp(-(x-ξ)²/4t) (1 - exp(-xξ/t)), with expm1 near the boundary
        let d = x - xi;
        (-d * d / (4.0 * t)).exp() * -(-x * xi / t).exp_m1() / (2.0 * (PI * t).sqrt())
    }
}

pub fn phi_kernel(t: f64, x: f64, xi: f64) -> Result<f64> {
    check_time(t)?;
    Ok(HeatHalfKernel.eval(t, x, xi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    /// Closed forms for point-mass and step data, general route otherwise.
    #[default]
    Exact,
    /// General representation for every kind of data.
    Quadrature,
}

/// Accuracy controls of the product-integration memory terms.
#[derive(Debug, Clone)]
pub struct MemoryQuadrature {
    /// Geometric grading ratio toward both ends of `[0, t]`.
    pub ratio: f64,
    /// Smallest graded interval, relative to the half-width of `[0, t]`.
    pub finest: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Largest number of uniform subdivisions of each graded interval.
    pub max_subdivisions: usize,
    gauss: GaussLegendre,
}

impl Default for MemoryQuadrature {
    fn default() -> Self {
        MemoryQuadrature {
            ratio: 0.85,
            finest: 1e-15,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 512,
            gauss: GaussLegendre::new(8),
        }
    }
}

/// Weight `w(t - τ)` of a memory integral `∫ h'(τ) w(t - τ) dτ`.
#[derive(Debug, Clone, Copy)]
enum Kernel {
    /// `(t - τ)^(-1/2)`.
    InvSqrt,
    /// `erfc(z / (2 sqrt(t - τ)))` with `z > 0`.
    Erfc { z: f64 },
}

impl MemoryQuadrature {
    fn breakpoints(&self, t0: f64, t: f64) -> Vec<f64> {
        let mid = t0 + 0.5 * (t - t0);
        let half = mid - t0;
        let levels = (self.finest.ln() / self.ratio.ln()).ceil() as usize;
        let mut pts = Vec::with_capacity(2 * levels + 3);
        pts.push(t0);
        for j in (0..=levels).rev() {
            pts.push(t0 + half * self.ratio.powi(j as i32));
        }
        for j in 1..=levels {
            pts.push(t - half * self.ratio.powi(j as i32));
        }
        pts.push(t);
        pts.dedup();
        pts
    }

    /// Moments `(∫_a^b w, ∫_a^b (τ - a) w)` of the kernel on `[a, b]`.
    fn moments(&self, kernel: Kernel, t: f64, a: f64, b: f64) -> (f64, f64) {
        match kernel {
            Kernel::InvSqrt => {
                let sa = (t - a).max(0.0).sqrt();
                let sb = (t - b).max(0.0).sqrt();
                let diff = (b - a) / (sa + sb);
                (2.0 * diff, 2.0 / 3.0 * diff * diff * (2.0 * sa + sb))
            }
            Kernel::Erfc { z } => {
                let mut m0 = 0.0;
                let mut m1 = 0.0;
                for (tau, w) in self.gauss.mapped(a, b) {
                    let v = w * erfc(z / (2.0 * (t - tau).max(0.0).sqrt()));
                    m0 += v;
                    m1 += v * (tau - a);
                }
                (m0, m1)
            }
        }
    }

    /// Product integration of `∫_{t0}^t h'(τ) w(t - τ) dτ` with `h'`
    /// piecewise linear on a graded mesh; the mesh is refined by doubling
    /// and successive levels are Richardson-extrapolated.
    fn integrate<F>(&self, kernel: Kernel, t0: f64, t: f64, hprime: F) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let base = self.breakpoints(t0, t);
        let n_base = base.len() - 1;
        let mut m = 1usize;
        let mut values: Vec<f64> = base.iter().map(|&s| hprime(s)).collect::<Result<_>>()?;
        let mut previous: Option<f64> = None;
        let mut previous_extrapolated: Option<f64> = None;
        loop {
            let mut sum = 0.0;
            for k in 0..n_base {
                let (lo, hi) = (base[k], base[k + 1]);
                let width = (hi - lo) / m as f64;
                for i in 0..m {
                    let a = if i == 0 { lo } else { lo + width * i as f64 };
                    let b = if i + 1 == m { hi } else { lo + width * (i + 1) as f64 };
                    if b <= a {
                        continue;
                    }
                    let fa = values[k * m + i];
                    let fb = values[k * m + i + 1];
                    let (m0, m1) = self.moments(kernel, t, a, b);
                    let slope = (fb - fa) / (b - a);
                    sum += fa * m0 + slope * m1;
                }
            }
            if !sum.is_finite() {
                return Err(Error::Numerical("non-finite memory integral".into()));
            }
            if let Some(coarse) = previous {
                let extrapolated = (4.0 * sum - coarse) / 3.0;
                if let Some(prev_ex) = previous_extrapolated {
                    let change = (extrapolated - prev_ex).abs();
                    if change <= self.abs_tol.max(self.rel_tol * extrapolated.abs()) {
                        return Ok(extrapolated);
                    }
                    if 2 * m > self.max_subdivisions {
                        return Err(Error::Accuracy {
                            what: "memory-term product integration",
                            achieved: change,
                            requested: self.abs_tol.max(self.rel_tol * extrapolated.abs()),
                        });
                    }
                }
                previous_extrapolated = Some(extrapolated);
            }
            previous = Some(sum);

            // refine: old nodes land on even indices of the new level
            let m2 = 2 * m;
            let mut refined = Vec::with_capacity(n_base * m2 + 1);
            for k in 0..n_base {
                let (lo, hi) = (base[k], base[k + 1]);
                let width = (hi - lo) / m2 as f64;
                for i in 0..m2 {
                    if i % 2 == 0 {
                        refined.push(values[k * m + i / 2]);
                    } else {
                        refined.push(hprime(lo + width * i as f64)?);
                    }
                }
            }
            refined.push(values[n_base * m]);
            values = refined;
            m = m2;
        }
    }
}

/// The interface value `h(t) = p(t, 0)` and its time derivative.
#[derive(Debug, Clone)]
pub struct InterfaceValue {
    params: ModelParams,
    init: InitialData,
    mode: EvalMode,
    initial: f64,
    scale: f64,
}

impl InterfaceValue {
    /// `init` is pressure data over `y`.
    pub fn new(init: InitialData, params: ModelParams, mode: EvalMode) -> Result<Self> {
        let scale = data_scale(&init);
        let mut iv = InterfaceValue {
            params,
            init,
            mode,
            initial: 0.0,
            scale,
        };
        iv.initial = match (&iv.init, mode) {
            (InitialData::Dirac { .. }, _) => 0.0,
            (InitialData::Step { a, b }, EvalMode::Exact) => iv.step_value(*a, *b),
            _ => iv.value(SAMPLED_TAU0)?,
        };
        Ok(iv)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn init(&self) -> &InitialData {
        &self.init
    }

    fn step_value(&self, a: f64, b: f64) -> f64 {
        let rs = self.params.sqrt_sigma();
        (a + rs * b) / (1.0 + rs)
    }

    /// Start of the memory integrals and the value `h` takes there.
    fn memory_start(&self) -> f64 {
        match (&self.init, self.mode) {
            (InitialData::Dirac { .. }, _) => 0.0,
            (InitialData::Step { .. }, EvalMode::Exact) => 0.0,
            _ => SAMPLED_TAU0,
        }
    }

    /// `h(0⁺)`.
    pub fn initial_value(&self) -> f64 {
        self.initial
    }

    /// `c(ξ) = (p0(ξ) + sqrt(sigma) p0(-sqrt(sigma) ξ)) / (1 + sqrt(sigma))`.
    fn weight(&self, xi: f64) -> f64 {
        let rs = self.params.sqrt_sigma();
        match &self.init {
            InitialData::Step { a, b } => (a + rs * b) / (1.0 + rs),
            InitialData::Sampled(s) => (s.right(xi) + rs * s.left(-rs * xi)) / (1.0 + rs),
            InitialData::Dirac { .. } => unreachable!("point masses are sifted analytically"),
        }
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let rs = self.params.sqrt_sigma();
        match (&self.init, self.mode) {
            (InitialData::Dirac { x0 }, _) => {
                Ok((-x0 * x0 / (4.0 * t)).exp() / ((1.0 + rs) * (PI * t).sqrt()))
            }
            (InitialData::Step { a, b }, EvalMode::Exact) => Ok(self.step_value(*a, *b)),
            _ => {
                let norm = 1.0 / (PI * t).sqrt();
                xi_integral(
                    |xi| self.weight(xi) * (-xi * xi / (4.0 * t)).exp() * norm,
                    0.0,
                    truncation_width(t, TRUNCATION_TOL),
                    self.scale,
                )
            }
        }
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        match (&self.init, self.mode) {
            (InitialData::Dirac { x0 }, _) => {
                Ok(self.value(t)? * (x0 * x0 / (4.0 * t * t) - 0.5 / t))
            }
            (InitialData::Step { .. }, EvalMode::Exact) => Ok(0.0),
            _ => {
                let norm = 1.0 / (PI * t).sqrt();
                xi_integral(
                    |xi| {
                        self.weight(xi)
                            * (xi * xi / (4.0 * t * t) - 0.5 / t)
                            * (-xi * xi / (4.0 * t)).exp()
                            * norm
                    },
                    0.0,
                    truncation_width(t, TRUNCATION_TOL),
                    self.scale / t,
                )
            }
        }
    }

    /// `h'` on the memory mesh; the point-mass formula is extended by its limit 0 at `τ = 0`.
    fn derivative_on_mesh(&self, tau: f64) -> Result<f64> {
        if tau <= 0.0 {
            return Ok(0.0);
        }
        self.derivative(tau)
    }
}

/// `scale` bounds the integral of `|f|` and sets the absolute tolerance.
fn xi_integral<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, scale: f64) -> Result<f64> {
    let tol = Tolerance {
        abs: 1e-14 * scale,
        rel: 1e-12,
        max_intervals: 4000,
    };
    Ok(integrate(f, a, b, tol)?.value)
}

pub fn interface_value(init: &InitialData, params: &ModelParams, t: f64) -> Result<f64> {
    InterfaceValue::new(init.clone(), *params, EvalMode::Exact)?.value(t)
}

pub fn interface_value_derivative(init: &InitialData, params: &ModelParams, t: f64) -> Result<f64> {
    InterfaceValue::new(init.clone(), *params, EvalMode::Exact)?.derivative(t)
}

/// Closed-form solution for a unit point mass at `x0 > 0`.
///
/// At `y = 0` this returns the common one-sided limit `h(t)`.
pub fn fundamental_solution(x0: f64, params: &ModelParams, t: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    let rs = params.sqrt_sigma();
    let norm = 1.0 / (PI * t).sqrt();
    let v = if y > 0.0 {
        let direct = 0.5 * norm * (-(y - x0).powi(2) / (4.0 * t)).exp();
        let reflected = (1.0 - rs) / (2.0 * (1.0 + rs)) * norm * (-(y + x0).powi(2) / (4.0 * t)).exp();
        direct + reflected
    } else {
        norm / (1.0 + rs) * (-(x0 - y / rs).powi(2) / (4.0 * t)).exp()
    };
    Ok(v)
}

/// Closed-form solution (in pressure) for density step data `a` on `x > 0`
/// and `b` on `x < 0`.
pub fn step_solution(a: f64, b: f64, params: &ModelParams, t: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    step_pressure(a, params.eps_pow_q() * b, params, t, y)
}

/// Same as [`step_solution`] with the left value already in pressure form.
fn step_pressure(a: f64, b: f64, params: &ModelParams, t: f64, y: f64) -> Result<f64> {
    let rs = params.sqrt_sigma();
    let h = (a + rs * b) / (1.0 + rs);
    match side_of(y)? {
        Side::Right => Ok(a + (h - a) * erfc(y / (2.0 * t.sqrt()))),
        Side::Left => Ok(b + (h - b) * erfc(-y / (2.0 * (params.sigma() * t).sqrt()))),
    }
}

/// Finite-difference estimates of the one-sided second derivatives at the interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondDerivativeIdentity {
    /// `sigma * p_yy(t, 0⁻)`.
    pub left: f64,
    /// `p_yy(t, 0⁺)`.
    pub right: f64,
    /// `h'(t)`.
    pub hprime: f64,
}

/// The solution of the interface problem for given pressure initial data.
#[derive(Debug, Clone)]
pub struct ClosedFormSolution {
    params: ModelParams,
    interface: InterfaceValue,
    mode: EvalMode,
    memory: MemoryQuadrature,
}

impl ClosedFormSolution {
    /// `init` is pressure data over `y`.
    pub fn from_pressure(init: InitialData, params: ModelParams, mode: EvalMode) -> Result<Self> {
        Ok(ClosedFormSolution {
            params,
            interface: InterfaceValue::new(init, params, mode)?,
            mode,
            memory: MemoryQuadrature::default(),
        })
    }

    /// `init` is density data over `x`.
    pub fn from_density(init: &InitialData, params: ModelParams, mode: EvalMode) -> Result<Self> {
        Self::from_pressure(initial_pressure(init, &params), params, mode)
    }

    pub fn with_memory_quadrature(mut self, memory: MemoryQuadrature) -> Self {
        self.memory = memory;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn interface(&self) -> &InterfaceValue {
        &self.interface
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    fn init(&self) -> &InitialData {
        &self.interface.init
    }

    fn uses_closed_form(&self) -> bool {
        self.mode == EvalMode::Exact
            && matches!(self.init(), InitialData::Dirac { .. } | InitialData::Step { .. })
    }

    /// `p(t, y)` for `y != 0`.
    pub fn pressure(&self, t: f64, y: f64) -> Result<f64> {
        check_time(t)?;
        let side = side_of(y)?;
        if self.uses_closed_form() {
            return match *self.init() {
                InitialData::Dirac { x0 } => fundamental_solution(x0, &self.params, t, y),
                InitialData::Step { a, b } => step_pressure(a, b, &self.params, t, y),
                InitialData::Sampled(_) => unreachable!(),
            };
        }
        match side {
            Side::Right => self.pressure_general_right(t, y),
            Side::Left => self.pressure_general_left(t, y),
        }
    }

    /// `u(t, x) = D(x)^-q p(t, y(x))` for `x != 0`.
    pub fn density(&self, t: f64, x: f64) -> Result<f64> {
        let p = self.pressure(t, x_to_y(x, &self.params))?;
        crate::model::p_to_u(p, x, &self.params)
    }

    fn pressure_general_right(&self, t: f64, y: f64) -> Result<f64> {
        let conv = match self.init() {
            InitialData::Dirac { x0 } => HeatHalfKernel.eval(t, y, *x0),
            InitialData::Step { a, .. } => {
                let a = *a;
                convolution(t, y, a, move |_| a)?
            }
            InitialData::Sampled(s) => convolution(t, y, s.bound(), |xi| s.right(xi))?,
        };
        let memory = self.memory.integrate(
            Kernel::Erfc { z: y },
            self.interface.memory_start(),
            t,
            |tau| self.interface.derivative_on_mesh(tau),
        )?;
        Ok(conv + memory + self.interface.initial * erfc(y / (2.0 * t.sqrt())))
    }

    fn pressure_general_left(&self, t: f64, y: f64) -> Result<f64> {
        let sigma = self.params.sigma();
        let conv = match self.init() {
            InitialData::Dirac { .. } => 0.0,
            InitialData::Step { b, .. } => {
                let b = *b;
                convolution(sigma * t, -y, b, move |_| b)?
            }
            InitialData::Sampled(s) => convolution(sigma * t, -y, s.bound(), |xi| s.left(-xi))?,
        };
        // τ ↦ τ/sigma turns the left memory integral into one over [0, t]
        let memory = self.memory.integrate(
            Kernel::Erfc {
                z: -y / sigma.sqrt(),
            },
            self.interface.memory_start(),
            t,
            |tau| self.interface.derivative_on_mesh(tau),
        )?;
        Ok(conv + memory + self.interface.initial * erfc(-y / (2.0 * (sigma * t).sqrt())))
    }

    /// `p_y(t, 0⁺)`.
    pub fn flux_right(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let rs = self.params.sqrt_sigma();
        if self.uses_closed_form() {
            let norm = 1.0 / (PI * t).sqrt();
            return Ok(match *self.init() {
                InitialData::Dirac { x0 } => {
                    // derivative of the y > 0 branch of the fundamental solution
                    let g = norm * (-x0 * x0 / (4.0 * t)).exp() * x0 / (2.0 * t);
                    0.5 * g - (1.0 - rs) / (2.0 * (1.0 + rs)) * g
                }
                InitialData::Step { a, b } => {
                    let h = (a + rs * b) / (1.0 + rs);
                    (a - h) * norm
                }
                InitialData::Sampled(_) => unreachable!(),
            });
        }
        let source = self.source_moment(t, Side::Right)?;
        let memory = self.memory_inv_sqrt(t)?;
        Ok(source - memory / PI.sqrt() - self.interface.initial / (PI * t).sqrt())
    }

    /// `p_y(t, 0⁻)`.
    pub fn flux_left(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let sigma = self.params.sigma();
        let rs = self.params.sqrt_sigma();
        if self.uses_closed_form() {
            let norm = 1.0 / (PI * t).sqrt();
            return Ok(match *self.init() {
                InitialData::Dirac { x0 } => {
                    // derivative of the y < 0 branch of the fundamental solution
                    norm / (1.0 + rs) * (-x0 * x0 / (4.0 * t)).exp() * x0 / (2.0 * t * rs)
                }
                InitialData::Step { a, b } => {
                    let h = (a + rs * b) / (1.0 + rs);
                    (h - b) * norm / rs
                }
                InitialData::Sampled(_) => unreachable!(),
            });
        }
        let source = self.source_moment(t, Side::Left)?;
        let memory = self.memory_inv_sqrt(t)?;
        Ok(-source / rs
            + memory / (PI * sigma).sqrt()
            + self.interface.initial / (PI * sigma * t).sqrt())
    }

    /// `∫ p0(±ξ') ξ exp(-ξ²/4t) / (2 sqrt(pi t³)) dξ` with `ξ' = ξ` on the
    /// right and `ξ' = sqrt(sigma) ξ` on the left.
    fn source_moment(&self, t: f64, side: Side) -> Result<f64> {
        let norm = 1.0 / (2.0 * (PI * t * t * t).sqrt());
        let rs = self.params.sqrt_sigma();
        let width = truncation_width(t, TRUNCATION_TOL);
        let moment = |f: &dyn Fn(f64) -> f64| {
            xi_integral(
                |xi| f(xi) * xi * (-xi * xi / (4.0 * t)).exp() * norm,
                0.0,
                width,
                self.interface.scale / t.sqrt(),
            )
        };
        match (self.init(), side) {
            (InitialData::Dirac { x0 }, Side::Right) => Ok(x0 * (-x0 * x0 / (4.0 * t)).exp() * norm),
            (InitialData::Dirac { .. }, Side::Left) => Ok(0.0),
            (InitialData::Step { a, .. }, Side::Right) => moment(&|_| *a),
            (InitialData::Step { b, .. }, Side::Left) => moment(&|_| *b),
            (InitialData::Sampled(s), Side::Right) => moment(&|xi| s.right(xi)),
            (InitialData::Sampled(s), Side::Left) => moment(&|xi| s.left(-rs * xi)),
        }
    }

    /// `∫ h'(τ) / sqrt(t - τ) dτ`.
    fn memory_inv_sqrt(&self, t: f64) -> Result<f64> {
        self.memory.integrate(
            Kernel::InvSqrt,
            self.interface.memory_start(),
            t,
            |tau| self.interface.derivative_on_mesh(tau),
        )
    }

    /// One-sided second derivatives at the interface by second-order
    /// one-sided differences on a halving ladder, Richardson-extrapolated.
    pub fn second_derivative_identity(&self, t: f64) -> Result<SecondDerivativeIdentity> {
        check_time(t)?;
        let h = self.interface.value(t)?;
        let sigma = self.params.sigma();
        let one_sided = |dir: f64, scale: f64| -> Result<f64> {
            const RUNGS: usize = 5;
            let mut ladder = Vec::with_capacity(RUNGS);
            let mut step = 0.05 * scale;
            for _ in 0..RUNGS {
                let p1 = self.pressure(t, dir * step)?;
                let p2 = self.pressure(t, dir * 2.0 * step)?;
                let p3 = self.pressure(t, dir * 3.0 * step)?;
                ladder.push((2.0 * h - 5.0 * p1 + 4.0 * p2 - p3) / (step * step));
                step *= 0.5;
            }
            Ok(richardson(&mut ladder))
        };
        let right = one_sided(1.0, t.sqrt())?;
        let left = sigma * one_sided(-1.0, (sigma * t).sqrt())?;
        Ok(SecondDerivativeIdentity {
            left,
            right,
            hprime: self.interface.derivative(t)?,
        })
    }
}

/// Richardson tableau for an error expansion in even powers of a halving step.
fn richardson(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mut factor = 4.0;
    for level in 1..n {
        for i in (level..n).rev() {
            values[i] = (factor * values[i] - values[i - 1]) / (factor - 1.0);
        }
        factor *= 4.0;
    }
    values[n - 1]
}

/// `∫_0^∞ f(ξ) Φ(s, z, ξ) dξ` for `z > 0`, truncated to the Gaussian window around `z`.
fn convolution<F: Fn(f64) -> f64>(s: f64, z: f64, scale: f64, f: F) -> Result<f64> {
    let width = truncation_width(s, TRUNCATION_TOL);
    let lo = (z - width).max(0.0);
    let hi = z + width;
    xi_integral(|xi| f(xi) * HeatHalfKernel.eval(s, z, xi), lo, hi, scale)
}

/// Largest value of the data away from point masses.
fn data_scale(init: &InitialData) -> f64 {
    let (left, right) = init.sup_norms();
    match init {
        InitialData::Dirac { .. } => 1.0,
        _ => left.max(right).max(f64::MIN_POSITIVE),
    }
}

/// Supremum bound on `h` from the half-line sup norms of the pressure data.
pub fn interface_bound(init: &InitialData, params: &ModelParams) -> f64 {
    let rs = params.sqrt_sigma();
    let (left, right) = init.sup_norms();
    (right + rs * left) / (1.0 + rs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirac_solution(eps: f64, q: f64, mode: EvalMode) -> ClosedFormSolution {
        let p = ModelParams::new(eps, q).unwrap();
        ClosedFormSolution::from_pressure(InitialData::dirac(1.0).unwrap(), p, mode).unwrap()
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(phi_kernel(0.3, 0.0, 0.7).unwrap(), 0.0);
        let expected = (1.0 - (-1.0f64).exp()) / (2.0 * PI.sqrt());
        assert!((phi_kernel(1.0, 1.0, 1.0).unwrap() - expected).abs() < 1e-15);
        assert!(phi_kernel(0.0, 1.0, 1.0).is_err());
        assert!(phi_kernel(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn kernel_symmetry() {
        for i in 0..50 {
            let (t, x, xi) = (0.01 + i as f64 * 0.03, (i as f64 * 0.37) % 2.0, (i as f64 * 0.91) % 3.0);
            assert_eq!(phi_kernel(t, x, xi).unwrap(), phi_kernel(t, xi, x).unwrap());
            assert!(phi_kernel(t, x, xi).unwrap() >= 0.0);
        }
    }

    #[test]
    fn interface_value_point_mass_and_step() {
        let p = ModelParams::new(0.1, 0.75).unwrap();
        let rs = p.sqrt_sigma();
        let t = 0.3;
        let h = interface_value(&InitialData::dirac(0.8).unwrap(), &p, t).unwrap();
        let expected = (-0.64 / (4.0 * t)).exp() / ((1.0 + rs) * (PI * t).sqrt());
        assert!((h - expected).abs() < 1e-15);

        let h = interface_value(&InitialData::Step { a: 2.0, b: 0.5 }, &p, t).unwrap();
        assert!((h - (2.0 + rs * 0.5) / (1.0 + rs)).abs() < 1e-15);

        // sigma = 1: h = (a + eps^q b) / 2 with b in pressure form eps^q b
        let p = ModelParams::new(0.09, 0.5).unwrap();
        let init = initial_pressure(&InitialData::step(1.0, 1.0).unwrap(), &p);
        let h = interface_value(&init, &p, 0.7).unwrap();
        assert!((h - (1.0 + 0.3) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn interface_derivative_examples() {
        let p = ModelParams::new(0.2, 0.3).unwrap();
        let step = InitialData::Step { a: 1.0, b: 0.2 };
        assert_eq!(interface_value_derivative(&step, &p, 0.4).unwrap(), 0.0);
        let dirac = InitialData::dirac(1.0).unwrap();
        for t in [0.05, 0.2, 1.0, 4.0] {
            let d = interface_value_derivative(&dirac, &p, t).unwrap();
            let h = interface_value(&dirac, &p, t).unwrap();
            assert!((d - h * (1.0 / (4.0 * t * t) - 0.5 / t)).abs() < 1e-14 * h.abs().max(1.0));
            // centered difference, O(δ²)
            let delta = 1e-4 * t;
            let fd = (interface_value(&dirac, &p, t + delta).unwrap()
                - interface_value(&dirac, &p, t - delta).unwrap())
                / (2.0 * delta);
            assert!((fd - d).abs() < 1e-6 * d.abs().max(1.0), "t={t}: {fd} vs {d}");
        }
    }

    #[test]
    fn sampled_interface_value_matches_step_formula_and_bound() {
        let p = ModelParams::new(0.05, 0.8).unwrap();
        let sampled = InitialData::sampled(|_| 0.4, |_| 1.5, 1.5).unwrap();
        let iv = InterfaceValue::new(sampled.clone(), p, EvalMode::Exact).unwrap();
        let exact = (1.5 + p.sqrt_sigma() * 0.4) / (1.0 + p.sqrt_sigma());
        for t in [1e-3, 0.1, 3.0] {
            assert!((iv.value(t).unwrap() - exact).abs() < 1e-10);
            assert!(iv.derivative(t).unwrap().abs() < 1e-8 / t);
        }
        let bound = interface_bound(&sampled, &p);
        let wavy = InitialData::sampled_fn(|x: f64| 1.0 + x.sin(), 2.0).unwrap();
        let iv = InterfaceValue::new(wavy, p, EvalMode::Exact).unwrap();
        for t in [1e-3, 0.1, 1.0, 10.0] {
            let h = iv.value(t).unwrap();
            assert!(h >= 0.0 && h <= 2.0 + 1e-12);
        }
        assert!(bound >= exact - 1e-15);
    }

    #[test]
    fn fundamental_solution_limits() {
        let p = ModelParams::new(0.01, 0.9).unwrap();
        let t = 0.2;
        let h = interface_value(&InitialData::dirac(0.6).unwrap(), &p, t).unwrap();
        let right = fundamental_solution(0.6, &p, t, 1e-12).unwrap();
        let at_zero = fundamental_solution(0.6, &p, t, 0.0).unwrap();
        assert!((right - h).abs() < 1e-10 * h);
        assert!((at_zero - h).abs() < 1e-14 * h);

        // sigma = 1 is the Gaussian heat kernel
        let p = ModelParams::new(0.3, 0.5).unwrap();
        for y in [-1.5, -0.2, 0.4, 2.0] {
            let g = (-(y - 0.6f64).powi(2) / (4.0 * t)).exp() / (2.0 * (PI * t).sqrt());
            assert!((fundamental_solution(0.6, &p, t, y).unwrap() - g).abs() < 1e-15);
        }
    }

    #[test]
    fn step_solution_limits() {
        let p = ModelParams::new(0.2, 0.7).unwrap();
        let (a, b) = (1.3, 0.6);
        let t = 0.05;
        assert!((step_solution(a, b, &p, t, 50.0).unwrap() - a).abs() < 1e-14);
        assert!((step_solution(a, b, &p, t, -50.0).unwrap() - p.eps_pow_q() * b).abs() < 1e-14);
        let h = (a + p.sqrt_sigma() * p.eps_pow_q() * b) / (1.0 + p.sqrt_sigma());
        assert!((step_solution(a, b, &p, t, 1e-13).unwrap() - h).abs() < 1e-10);
        assert!((step_solution(a, b, &p, t, -1e-13).unwrap() - h).abs() < 1e-10);
        assert!(step_solution(a, b, &p, t, 0.0).is_err());

        // q = 1/2, b = 0: a - a/2 erfc(y/2 sqrt t) on y > 0
        let p = ModelParams::new(0.2, 0.5).unwrap();
        for y in [0.01, 0.3, 1.0] {
            let expected = a - 0.5 * a * erfc(y / (2.0 * t.sqrt()));
            assert!((step_solution(a, 0.0, &p, t, y).unwrap() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn step_fluxes_are_continuous() {
        for (eps, q) in [(0.001, 0.0), (0.1, 0.75), (0.01, 1.0)] {
            let p = ModelParams::new(eps, q).unwrap();
            let sol = ClosedFormSolution::from_density(&InitialData::step(1.0, 1.0).unwrap(), p, EvalMode::Exact)
                .unwrap();
            for t in [1e-3, 0.1, 10.0] {
                let r = sol.flux_right(t).unwrap();
                let l = sol.flux_left(t).unwrap();
                assert!((p.sigma() * l - r).abs() <= 1e-12 * (1.0 + r.abs()));
                let expected = p.sqrt_sigma() * (1.0 - p.eps_pow_q())
                    / ((1.0 + p.sqrt_sigma()) * (PI * t).sqrt());
                assert!((r - expected).abs() <= 1e-12 * (1.0 + r.abs()));
            }
        }
        let p = ModelParams::new(0.3, 0.5).unwrap();
        let sol = ClosedFormSolution::from_pressure(InitialData::Step { a: 1.0, b: 1.0 }, p, EvalMode::Exact)
            .unwrap();
        assert_eq!(sol.flux_right(0.2).unwrap(), 0.0);
        let zero = ClosedFormSolution::from_pressure(InitialData::Step { a: 0.0, b: 0.0 }, p, EvalMode::Exact)
            .unwrap();
        assert_eq!(zero.flux_left(0.2).unwrap(), 0.0);
    }

    #[test]
    fn point_mass_fluxes_match_one_sided_differences() {
        for (eps, q, t) in [(0.25, 0.75, 0.05), (0.01, 0.2, 0.3), (0.5, 1.0, 1.0)] {
            let sol = dirac_solution(eps, q, EvalMode::Exact);
            let h = sol.interface().value(t).unwrap();
            for (dir, flux) in [(1.0, sol.flux_right(t).unwrap()), (-1.0, sol.flux_left(t).unwrap())] {
                // fourth-order one-sided difference from the common interface value
                let d = 1e-3;
                let p = |k: f64| sol.pressure(t, dir * k * d).unwrap();
                let fd = dir * (-25.0 * h + 48.0 * p(1.0) - 36.0 * p(2.0) + 16.0 * p(3.0) - 3.0 * p(4.0))
                    / (12.0 * d);
                assert!((fd - flux).abs() < 1e-6 * (1.0 + flux.abs()), "{eps} {q} {t}: {fd} vs {flux}");
            }
        }
    }

    #[test]
    fn general_route_reproduces_point_mass() {
        let sol = dirac_solution(0.1, 0.75, EvalMode::Quadrature);
        let p = *sol.params();
        for t in [0.05, 0.5] {
            for y in [-1.0, -0.2, 0.1, 0.9] {
                let got = sol.pressure(t, y).unwrap();
                let want = fundamental_solution(1.0, &p, t, y).unwrap();
                assert!(((got - want) / want).abs() < 1e-7, "t={t} y={y}: {got} vs {want}");
            }
            let r = sol.flux_right(t).unwrap();
            let exact = dirac_solution(0.1, 0.75, EvalMode::Exact).flux_right(t).unwrap();
            assert!((r - exact).abs() < 1e-7 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn general_route_reproduces_step() {
        let p = ModelParams::new(0.25, 0.3).unwrap();
        let init = InitialData::step(1.0, 2.0).unwrap();
        let sol = ClosedFormSolution::from_density(&init, p, EvalMode::Quadrature).unwrap();
        for y in [-0.3, -0.01, 0.02, 0.4] {
            let got = sol.pressure(0.1, y).unwrap();
            let want = step_solution(1.0, 2.0, &p, 0.1, y).unwrap();
            assert!((got - want).abs() < 1e-9, "y={y}: {got} vs {want}");
        }
    }

    #[test]
    fn sampled_fluxes_continuous_and_match_identity() {
        let p = ModelParams::new(0.1, 0.25).unwrap();
        let init = InitialData::sampled_fn(|x: f64| 1.0 + x.sin(), 2.0).unwrap();
        let sol = ClosedFormSolution::from_density(&init, p, EvalMode::Exact).unwrap();
        let t = 0.1;
        let r = sol.flux_right(t).unwrap();
        let l = sol.flux_left(t).unwrap();
        assert!((p.sigma() * l - r).abs() < 1e-7 * (1.0 + r.abs()), "{} vs {r}", p.sigma() * l);

        // flux = sqrt(sigma) ∫ (p0(ξ) - p0(-sqrt(sigma) ξ)) ξ e^{-ξ²/4t} / (2 sqrt(pi t³)) / (1 + sqrt(sigma))
        let rs = p.sqrt_sigma();
        let eq = p.eps_pow_q();
        let q = crate::quadrature::integrate(
            |xi| {
                let left = eq * (1.0 + (-rs * xi / p.eps_pow_neg_q()).sin());
                (1.0 + xi.sin() - left) * xi * (-xi * xi / (4.0 * t)).exp() / (2.0 * (PI * t.powi(3)).sqrt())
            },
            0.0,
            20.0,
            Tolerance::default(),
        )
        .unwrap();
        let identity = rs * q.value / (1.0 + rs);
        assert!((identity - r).abs() < 1e-7 * (1.0 + r.abs()), "{identity} vs {r}");
    }

    #[test]
    fn second_derivative_identity_point_mass() {
        let sol = dirac_solution(0.25, 0.75, EvalMode::Exact);
        let id = sol.second_derivative_identity(0.05).unwrap();
        assert!(((id.left - id.hprime) / id.hprime).abs() < 1e-6, "{id:?}");
        assert!(((id.right - id.hprime) / id.hprime).abs() < 1e-6, "{id:?}");

        let p = ModelParams::new(0.3, 0.5).unwrap();
        let sol = ClosedFormSolution::from_pressure(InitialData::dirac(0.7).unwrap(), p, EvalMode::Exact).unwrap();
        let t = 0.2;
        let g = (-0.49f64 / (4.0 * t)).exp() / (2.0 * (PI * t).sqrt());
        let gyy = g * (0.49 / (4.0 * t * t) - 0.5 / t);
        let id = sol.second_derivative_identity(t).unwrap();
        // with sigma = 1 the interface value is the full-line kernel at y = 0
        assert!((id.hprime - gyy).abs() < 1e-12 * gyy.abs());
        assert!((id.right - gyy).abs() < 1e-6 * gyy.abs());
    }

    #[test]
    fn second_derivative_identity_step_is_zero() {
        let p = ModelParams::new(0.1, 0.9).unwrap();
        let sol = ClosedFormSolution::from_density(&InitialData::step(1.0, 1.0).unwrap(), p, EvalMode::Exact).unwrap();
        let t = 0.1;
        let id = sol.second_derivative_identity(t).unwrap();
        assert_eq!(id.hprime, 0.0);
        assert!(id.left.abs() < 1e-5 && id.right.abs() < 1e-5, "{id:?}");
    }

    #[test]
    fn q_half_is_independent_of_eps() {
        let a = dirac_solution(0.3, 0.5, EvalMode::Quadrature);
        let b = dirac_solution(0.003, 0.5, EvalMode::Quadrature);
        for (t, y) in [(0.1, -0.3), (0.2, 0.5)] {
            assert_eq!(a.pressure(t, y).unwrap().to_bits(), b.pressure(t, y).unwrap().to_bits());
        }
    }

    #[test]
    fn evaluation_rejects_bad_points() {
        let sol = dirac_solution(0.1, 0.7, EvalMode::Exact);
        assert!(sol.pressure(0.1, 0.0).is_err());
        assert!(sol.pressure(0.0, 0.5).is_err());
        assert!(sol.flux_right(-1.0).is_err());
    }

    #[test]
    fn interface_consistency_is_linear_in_distance() {
        let sol = dirac_solution(0.05, 0.35, EvalMode::Exact);
        let t = 0.15;
        let h = sol.interface().value(t).unwrap();
        let r = sol.flux_right(t).unwrap();
        let l = sol.flux_left(t).unwrap();
        for d in [1e-3, 1e-4, 1e-5] {
            let right = sol.pressure(t, d).unwrap();
            let left = sol.pressure(t, -d).unwrap();
            assert!((right - h - r * d).abs() < 50.0 * d * d * (1.0 + h));
            assert!((left - h + l * d).abs() < 50.0 * d * d * (1.0 + h) / sol.params().sigma());
        }
    }
}
