//! Model parameters, the two-level diffusivity and the change of variables
//! between density `u(t, x)` and pressure `p(t, y) = D(x)^q u(t, x)`.
//!
//! The stretched coordinate is `y = x` on the right half-line and
//! `y = eps^{-q} x` on the left one, so that the pressure solves a heat
//! equation with diffusivity `sigma = eps^{1-2q}` on `y < 0` and `1` on `y > 0`.
//! Nothing here is defined at the interface `x = 0` itself.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Validation window for the left diffusivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamLimits {
    /// Values `eps <= eps_min` are rejected.
    pub eps_min: f64,
    /// Values `eps >= eps_max` are rejected.
    pub eps_max: f64,
}

impl Default for ParamLimits {
    fn default() -> Self {
        ParamLimits {
            eps_min: 1e-12,
            eps_max: 10.0,
        }
    }
}

/// `eps^(1-2q)`.
pub fn sigma_of(eps: f64, q: f64) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive and finite, got {eps}"
        )));
    }
    if !q.is_finite() {
        return Err(Error::InvalidParameter(format!("q must be finite, got {q}")));
    }
    let s = eps.powf(1.0 - 2.0 * q);
    if !s.is_finite() || s == 0.0 {
        return Err(Error::Overflow("sigma = eps^(1-2q)"));
    }
    Ok(s)
}

/// Heterogeneity parameters `(eps, q)`.
///
/// All powers of `eps` used downstream are computed once here, so every
/// module sees the same bits for `sigma`, `eps^q` and `eps^-q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    eps: f64,
    q: f64,
    sigma: f64,
    eps_pow_q: f64,
    eps_pow_neg_q: f64,
}

impl ModelParams {
    pub fn new(eps: f64, q: f64) -> Result<Self> {
        Self::with_limits(eps, q, ParamLimits::default())
    }

    pub fn with_limits(eps: f64, q: f64, limits: ParamLimits) -> Result<Self> {
        if !(eps > limits.eps_min && eps < limits.eps_max) {
            return Err(Error::InvalidParameter(format!(
                "eps = {eps} outside ({}, {})",
                limits.eps_min, limits.eps_max
            )));
        }
        let sigma = sigma_of(eps, q)?;
        let eps_pow_q = eps.powf(q);
        let eps_pow_neg_q = eps.powf(-q);
        if !(eps_pow_q.is_finite() && eps_pow_neg_q.is_finite())
            || eps_pow_q == 0.0
            || eps_pow_neg_q == 0.0
        {
            return Err(Error::Overflow("eps^q"));
        }
        Ok(ModelParams {
            eps,
            q,
            sigma,
            eps_pow_q,
            eps_pow_neg_q,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Left diffusivity of the pressure equation in the stretched variable.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sqrt_sigma(&self) -> f64 {
        self.sigma.sqrt()
    }

    pub fn eps_pow_q(&self) -> f64 {
        self.eps_pow_q
    }

    pub fn eps_pow_neg_q(&self) -> f64 {
        self.eps_pow_neg_q
    }

    pub fn diffusivity(&self) -> Diffusivity {
        Diffusivity { params: *self }
    }
}

/// `D(x) = eps` for `x < 0`, `1` for `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diffusivity {
    params: ModelParams,
}

impl Diffusivity {
    pub fn at(&self, x: f64) -> Result<f64> {
        side_of(x).map(|s| match s {
            Side::Left => self.params.eps,
            Side::Right => 1.0,
        })
    }

    /// `D(x)^q`.
    pub fn pow_q(&self, x: f64) -> Result<f64> {
        side_of(x).map(|s| match s {
            Side::Left => self.params.eps_pow_q,
            Side::Right => 1.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

pub fn side_of(x: f64) -> Result<Side> {
    if x < 0.0 {
        Ok(Side::Left)
    } else if x > 0.0 {
        Ok(Side::Right)
    } else {
        Err(Error::InvalidPoint(x))
    }
}

pub fn x_to_y(x: f64, params: &ModelParams) -> f64 {
    if x >= 0.0 {
        x
    } else {
        x * params.eps_pow_neg_q
    }
}

pub fn y_to_x(y: f64, params: &ModelParams) -> f64 {
    if y >= 0.0 {
        y
    } else {
        y / params.eps_pow_neg_q
    }
}

pub fn u_to_p(u: f64, x: f64, params: &ModelParams) -> Result<f64> {
    Ok(params.diffusivity().pow_q(x)? * u)
}

pub fn p_to_u(p: f64, x: f64, params: &ModelParams) -> Result<f64> {
    Ok(p / params.diffusivity().pow_q(x)?)
}

/// Function handle on one half-line.
pub type HalfLineFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Bounded initial data given as one function per half-line.
#[derive(Clone)]
pub struct SampledData {
    left: HalfLineFn,
    right: HalfLineFn,
    bound: f64,
}

impl SampledData {
    /// Value at `x != 0`.
    pub fn value(&self, x: f64) -> Result<f64> {
        Ok(match side_of(x)? {
            Side::Left => (self.left)(x),
            Side::Right => (self.right)(x),
        })
    }

    pub fn left(&self, x: f64) -> f64 {
        (self.left)(x)
    }

    pub fn right(&self, x: f64) -> f64 {
        (self.right)(x)
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// One-sided limit at `0⁻`.
    pub fn left_limit(&self) -> f64 {
        (self.left)(-f64::MIN_POSITIVE)
    }

    /// One-sided limit at `0⁺`.
    pub fn right_limit(&self) -> f64 {
        (self.right)(f64::MIN_POSITIVE)
    }
}

impl fmt::Debug for SampledData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledData")
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

/// Initial condition, either for the density (over `x`) or for the pressure
/// (over `y`); which one is a matter of context.
#[derive(Debug, Clone)]
pub enum InitialData {
    /// Unit point mass at `x0 > 0`.
    Dirac { x0: f64 },
    /// `a` on the right half-line, `b` on the left one.
    Step { a: f64, b: f64 },
    Sampled(SampledData),
}

const PROBE_EXTENT: f64 = 50.0;
const PROBE_POINTS: usize = 4000;

impl InitialData {
    pub fn dirac(x0: f64) -> Result<Self> {
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Dirac location must be positive, got {x0}"
            )));
        }
        Ok(InitialData::Dirac { x0 })
    }

    pub fn step(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step values must be finite and nonnegative, got ({a}, {b})"
            )));
        }
        Ok(InitialData::Step { a, b })
    }

    /// Builds sampled data and spot-checks nonnegativity and the bound on a
    /// probe grid over `[-50, 50]`.
    pub fn sampled<L, R>(left: L, right: R, bound: f64) -> Result<Self>
    where
        L: Fn(f64) -> f64 + Send + Sync + 'static,
        R: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_handles(Arc::new(left), Arc::new(right), bound)
    }

    /// The same function on both half-lines.
    pub fn sampled_fn<F>(f: F, bound: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f: HalfLineFn = Arc::new(f);
        Self::from_handles(f.clone(), f, bound)
    }

    fn from_handles(left: HalfLineFn, right: HalfLineFn, bound: f64) -> Result<Self> {
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bound must be finite and nonnegative, got {bound}"
            )));
        }
        let tol = 1e-12 * (1.0 + bound);
        for i in 1..=PROBE_POINTS {
            let x = PROBE_EXTENT * i as f64 / PROBE_POINTS as f64;
            for v in [left(-x), right(x)] {
                if !(v >= -tol && v <= bound + tol) {
                    return Err(Error::InvalidParameter(format!(
                        "sampled data value {v} near |x| = {x} violates 0 <= phi <= {bound}"
                    )));
                }
            }
        }
        Ok(InitialData::Sampled(SampledData { left, right, bound }))
    }

    /// Supremum norm over each half-line, `(left, right)`.
    pub fn sup_norms(&self) -> (f64, f64) {
        match self {
            InitialData::Dirac { .. } => (0.0, f64::INFINITY),
            InitialData::Step { a, b } => (*b, *a),
            InitialData::Sampled(s) => (s.bound, s.bound),
        }
    }
}

/// Rewrites density initial data over `x` as pressure initial data over `y`.
pub fn initial_pressure(init: &InitialData, params: &ModelParams) -> InitialData {
    match init {
        InitialData::Dirac { x0 } => InitialData::Dirac { x0: *x0 },
        InitialData::Step { a, b } => InitialData::Step {
            a: *a,
            b: params.eps_pow_q() * b,
        },
        InitialData::Sampled(s) => {
            let scale = params.eps_pow_q();
            let stretch = params.eps_pow_neg_q();
            let left = s.left.clone();
            InitialData::Sampled(SampledData {
                left: Arc::new(move |y: f64| scale * left(y / stretch)),
                right: s.right.clone(),
                bound: s.bound * scale.max(1.0),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    DensityU,
    PressureP,
}

/// Which coordinate a field is laid out over and which quantity it holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variable {
    pub space: Space,
    pub quantity: Quantity,
}

impl Variable {
    pub const fn new(space: Space, quantity: Quantity) -> Self {
        Variable { space, quantity }
    }

    /// Converts a `(coordinate, value)` sample of this variable into `target`.
    pub fn convert(
        &self,
        coord: f64,
        value: f64,
        target: Variable,
        params: &ModelParams,
    ) -> Result<(f64, f64)> {
        let x = match self.space {
            Space::X => coord,
            Space::Y => y_to_x(coord, params),
        };
        let p = match self.quantity {
            Quantity::PressureP => value,
            Quantity::DensityU => u_to_p(value, x, params)?,
        };
        let new_coord = match target.space {
            Space::X => x,
            Space::Y => x_to_y(x, params),
        };
        let new_value = match target.quantity {
            Quantity::PressureP => p,
            Quantity::DensityU => p_to_u(p, x, params)?,
        };
        Ok((new_coord, new_value))
    }
}
