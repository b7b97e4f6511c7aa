//! Conservative finite-volume θ-scheme for the pressure equation, either in
//! the stretched coordinate `y` (`p_t = (sigma p_y)_y` on the left) or in the
//! physical coordinate `x` (`eps^-q p_t = (eps^(1-q) p_x)_x` on the left).
//!
//! The interface is a cell face; its conductance is the half-cell harmonic
//! mean of the two one-sided coefficients, so the discrete flux through it is
//! single-valued. The outer faces carry no flux.

use crate::closedform::fundamental_solution;
use crate::error::{Error, Result};
use crate::model::{
    initial_pressure, x_to_y, InitialData, ModelParams, Quantity, Space, Variable,
};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Form {
    /// `p_t = (D^(1-2q) p_y)_y` over `y`.
    PressureY,
    /// `D^-q p_t = (D^(1-q) p_x)_x` over `x`.
    PressureX,
}

impl Form {
    pub fn space(self) -> Space {
        match self {
            Form::PressureY => Space::Y,
            Form::PressureX => Space::X,
        }
    }

    /// Effective left-side diffusivity in the solved coordinate.
    pub fn left_diffusivity(self, params: &ModelParams) -> f64 {
        match self {
            Form::PressureY => params.sigma(),
            Form::PressureX => params.eps(),
        }
    }

    /// `(mass coefficient, conductance coefficient)` on the left half-line.
    fn left_coefficients(self, params: &ModelParams) -> (f64, f64) {
        match self {
            Form::PressureY => (1.0, params.sigma()),
            Form::PressureX => (params.eps_pow_neg_q(), params.eps() * params.eps_pow_neg_q()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheme {
    form: Form,
    theta: f64,
    dt: f64,
}

impl Scheme {
    pub fn new(form: Form, theta: f64, dt: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta must lie in [0.5, 1], got {theta}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        Ok(Scheme { form, theta, dt })
    }

    pub fn implicit(form: Form, dt: f64) -> Result<Self> {
        Self::new(form, 1.0, dt)
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// Cells of constant width on each side of a face at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    left_extent: f64,
    right_extent: f64,
    n_left: usize,
    n_right: usize,
}

impl Grid1D {
    pub fn new(left_extent: f64, right_extent: f64, n_left: usize, n_right: usize) -> Result<Self> {
        for (name, e) in [("left", left_extent), ("right", right_extent)] {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} extent must be positive, got {e}")));
            }
        }
        if n_left == 0 || n_right == 0 {
            return Err(Error::InvalidParameter("each side needs at least one cell".into()));
        }
        Ok(Grid1D {
            left_extent,
            right_extent,
            n_left,
            n_right,
        })
    }

    /// Smallest grid with the given cell widths covering the extents.
    pub fn with_spacing(left_extent: f64, right_extent: f64, h_left: f64, h_right: f64) -> Result<Self> {
        if !(h_left > 0.0 && h_right > 0.0) {
            return Err(Error::InvalidParameter("cell widths must be positive".into()));
        }
        let n_left = (left_extent / h_left - 1e-9).ceil().max(1.0) as usize;
        let n_right = (right_extent / h_right - 1e-9).ceil().max(1.0) as usize;
        Self::new(n_left as f64 * h_left, n_right as f64 * h_right, n_left, n_right)
    }

    /// Grid for a solve up to `t_final`: right cells of width `delta`, left
    /// cells narrowed by the square root of the left diffusivity when it is
    /// below one, extents from [`truncation_extent`] plus `extra_right`.
    /// In the `x` form the left extent is mapped back from `y` by `eps^q`.
    pub fn for_problem(
        params: &ModelParams,
        form: Form,
        t_final: f64,
        delta: f64,
        tol: f64,
        extra_right: f64,
    ) -> Result<Self> {
        let (mut left, right) = truncation_extent(params, t_final, tol)?;
        if form == Form::PressureX {
            left *= params.eps_pow_q();
        }
        let h_left = delta * form.left_diffusivity(params).sqrt().min(1.0);
        Self::with_spacing(left, right + extra_right, h_left, delta)
    }

    pub fn left_extent(&self) -> f64 {
        self.left_extent
    }

    pub fn right_extent(&self) -> f64 {
        self.right_extent
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn len(&self) -> usize {
        self.n_left + self.n_right
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h_left(&self) -> f64 {
        self.left_extent / self.n_left as f64
    }

    pub fn h_right(&self) -> f64 {
        self.right_extent / self.n_right as f64
    }

    pub fn width(&self, i: usize) -> f64 {
        if i < self.n_left {
            self.h_left()
        } else {
            self.h_right()
        }
    }

    pub fn is_left(&self, i: usize) -> bool {
        i < self.n_left
    }

    /// Left face of cell `i`; face `n_left` is the interface.
    pub fn face(&self, i: usize) -> f64 {
        if i <= self.n_left {
            -((self.n_left - i) as f64) * self.h_left()
        } else {
            (i - self.n_left) as f64 * self.h_right()
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        if i < self.n_left {
            -((self.n_left - i) as f64 - 0.5) * self.h_left()
        } else {
            ((i - self.n_left) as f64 + 0.5) * self.h_right()
        }
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.center(i)).collect()
    }

    pub fn faces(&self) -> Vec<f64> {
        (0..=self.len()).map(|i| self.face(i)).collect()
    }
}

/// Extents beyond which the Gaussian tail of the solution up to `t_final`
/// is below `tol`, in units of `sqrt(t_final max(sigma, 1))`.
pub fn truncation_extent(params: &ModelParams, t_final: f64, tol: f64) -> Result<(f64, f64)> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_final must be positive, got {t_final}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!("tol must lie in (0, 1), got {tol}")));
    }
    let width = 6f64.max(2.0 * (1.0 / tol).ln().sqrt());
    let extent = width * (t_final * params.sigma().max(1.0)).sqrt();
    Ok((extent, extent))
}

/// Snapshots of the pressure over the cell centers of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    variable: Variable,
    form: Form,
    grid: Grid1D,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl SolutionField {
    pub fn variable(&self) -> Variable {
        self.variable
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn snapshot(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn last(&self) -> &[f64] {
        self.values.last().expect("a field has at least one snapshot")
    }

    /// Density at the cell centers of snapshot `k`.
    pub fn density(&self, k: usize, params: &ModelParams) -> Vec<f64> {
        let left_scale = params.eps_pow_neg_q();
        self.values[k]
            .iter()
            .enumerate()
            .map(|(i, &p)| if self.grid.is_left(i) { left_scale * p } else { p })
            .collect()
    }

    /// Physical positions of the cell centers.
    pub fn physical_centers(&self, params: &ModelParams) -> Vec<f64> {
        let centers = self.grid.centers();
        match self.form {
            Form::PressureX => centers,
            Form::PressureY => centers
                .into_iter()
                .map(|y| crate::model::y_to_x(y, params))
                .collect(),
        }
    }

    /// Total mass `∫ u dx` of snapshot `k`, with compensated summation.
    pub fn mass(&self, k: usize, params: &ModelParams) -> f64 {
        let (m_left, _) = self.form.left_coefficients(params);
        let mut sum = 0.0;
        let mut carry = 0.0;
        for (i, &p) in self.values[k].iter().enumerate() {
            let m = if self.grid.is_left(i) { m_left } else { 1.0 };
            let term = m * p * self.grid.width(i);
            // Neumaier summation
            let t = sum + term;
            if sum.abs() >= term.abs() {
                carry += (sum - t) + term;
            } else {
                carry += (term - t) + sum;
            }
            sum = t;
        }
        sum + carry
    }
}

/// Assembled tridiagonal operator for one grid, form and time step.
#[derive(Debug, Clone)]
pub struct Stepper {
    scheme: Scheme,
    /// Conductance of face `i + 1/2` between cells `i` and `i + 1`.
    conductance: Vec<f64>,
    /// `m_i h_i / dt`.
    capacity: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: &Grid1D, params: &ModelParams, scheme: Scheme) -> Self {
        let n = grid.len();
        let (m_left, k_left) = scheme.form.left_coefficients(params);
        let coeff = |i: usize| if grid.is_left(i) { (m_left, k_left) } else { (1.0, 1.0) };
        let conductance: Vec<f64> = (0..n.saturating_sub(1))
            .map(|i| {
                let (_, ka) = coeff(i);
                let (_, kb) = coeff(i + 1);
                let (ha, hb) = (grid.width(i), grid.width(i + 1));
                1.0 / (ha / (2.0 * ka) + hb / (2.0 * kb))
            })
            .collect();
        let capacity: Vec<f64> = (0..n).map(|i| coeff(i).0 * grid.width(i) / scheme.dt).collect();
        let theta = scheme.theta;
        let g = |j: isize| {
            if j < 0 || j as usize >= conductance.len() {
                0.0
            } else {
                conductance[j as usize]
            }
        };
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            let gl = g(i as isize - 1);
            let gr = g(i as isize);
            lower[i] = -theta * gl;
            upper[i] = -theta * gr;
            diag[i] = capacity[i] + theta * (gl + gr);
        }
        Stepper {
            scheme,
            conductance,
            capacity,
            lower,
            diag,
            upper,
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Face conductances, interface included.
    pub fn conductance(&self) -> &[f64] {
        &self.conductance
    }

    /// Advances `p` by one step of size `dt` (which may be shorter than the
    /// scheme's nominal step; only the capacity term changes).
    pub fn step(&self, p: &[f64], dt: f64) -> Result<Vec<f64>> {
        let n = p.len();
        let mut fluxes = Vec::with_capacity(n + 1);
        fluxes.push(0.0);
        for (j, g) in self.conductance.iter().enumerate() {
            fluxes.push(g * (p[j + 1] - p[j]));
        }
        fluxes.push(0.0);
        // solve (C + theta A) delta = -A p for the increment
        let rhs: Vec<f64> = (0..n).map(|i| fluxes[i + 1] - fluxes[i]).collect();
        let ratio = self.scheme.dt / dt;
        let diag: Vec<f64> = if ratio == 1.0 {
            self.diag.clone()
        } else {
            self.diag
                .iter()
                .zip(&self.capacity)
                .map(|(d, c)| d - c + c * ratio)
                .collect()
        };
        let delta = thomas(&self.lower, &diag, &self.upper, &rhs)?;
        Ok(p.iter().zip(&delta).map(|(a, d)| a + d).collect())
    }
}

/// Direct solve of a tridiagonal system; `lower[0]` and `upper[n-1]` are ignored.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::Numerical("singular tridiagonal matrix".into()));
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::Numerical("singular tridiagonal matrix".into()));
        }
        c[i] = upper[i] / pivot;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// One θ-step of the pressure values `p` on `grid`.
pub fn assemble_and_step(
    p: &[f64],
    grid: &Grid1D,
    params: &ModelParams,
    scheme: Scheme,
) -> Result<Vec<f64>> {
    if p.len() != grid.len() {
        return Err(Error::InvalidParameter(format!(
            "state has {} values for {} cells",
            p.len(),
            grid.len()
        )));
    }
    Stepper::new(grid, params, scheme).step(p, scheme.dt)
}

/// Warm-start time for point-mass data.
pub fn warm_start_time(scheme: &Scheme) -> f64 {
    10.0 * scheme.dt
}

/// Cell averages of the initial pressure; for a point mass, the exact
/// solution at the warm-start time.
pub fn initial_cells(
    init: &InitialData,
    params: &ModelParams,
    grid: &Grid1D,
    form: Form,
    t_start: f64,
) -> Result<Vec<f64>> {
    let pressure = initial_pressure(init, params);
    let gauss = GaussLegendre::new(4);
    let to_y = |s: f64| match form {
        Form::PressureY => s,
        Form::PressureX => x_to_y(s, params),
    };
    (0..grid.len())
        .map(|i| {
            let (a, b) = (grid.face(i), grid.face(i + 1));
            let left = grid.is_left(i);
            let avg = |f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
                let mut s = 0.0;
                for (z, w) in gauss.mapped(a, b) {
                    s += w * f(to_y(z))?;
                }
                Ok(s / (b - a))
            };
            match &pressure {
                InitialData::Step { a: ra, b: lb } => Ok(if left { *lb } else { *ra }),
                InitialData::Dirac { x0 } => avg(&|y| fundamental_solution(*x0, params, t_start, y)),
                InitialData::Sampled(s) => avg(&|y| Ok(if left { s.left(y) } else { s.right(y) })),
            }
        })
        .collect()
}

/// Solves up to each of `times` (increasing, positive) and records a snapshot there.
pub fn solve_at(
    init: &InitialData,
    params: &ModelParams,
    scheme: Scheme,
    times: &[f64],
    grid: &Grid1D,
) -> Result<SolutionField> {
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) || times[0] <= 0.0 {
        return Err(Error::InvalidParameter("snapshot times must be positive and increasing".into()));
    }
    let t_start = match init {
        InitialData::Dirac { .. } => warm_start_time(&scheme),
        _ => 0.0,
    };
    if times[0] <= t_start {
        return Err(Error::InvalidParameter(format!(
            "first snapshot time {} is not after the warm start {t_start}",
            times[0]
        )));
    }
    let stepper = Stepper::new(grid, params, scheme);
    let mut p = initial_cells(init, params, grid, scheme.form, t_start)?;
    let mut t = t_start;
    let mut values = Vec::with_capacity(times.len());
    for &target in times {
        let n = ((target - t) / scheme.dt - 1e-9).ceil().max(1.0) as usize;
        let dt = (target - t) / n as f64;
        for _ in 0..n {
            p = stepper.step(&p, dt)?;
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite finite-volume state".into()));
        }
        t = target;
        values.push(p.clone());
    }
    Ok(SolutionField {
        variable: Variable::new(scheme.form.space(), Quantity::PressureP),
        form: scheme.form,
        grid: grid.clone(),
        times: times.to_vec(),
        values,
    })
}

pub fn solve(
    init: &InitialData,
    params: &ModelParams,
    scheme: Scheme,
    t_final: f64,
    grid: &Grid1D,
) -> Result<SolutionField> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_final must be positive, got {t_final}")));
    }
    solve_at(init, params, scheme, &[t_final], grid)
}

/// One-sided interface values of the density and the right-hand slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Readouts {
    /// `u(t, 0⁺)`.
    pub u_plus: f64,
    /// `∂_x u(t, 0⁺)`.
    pub du_plus: f64,
    /// `u(t, 0⁻)`.
    pub u_minus: f64,
}

/// Quadratic extrapolation to a face from the three nearest cell centers,
/// ordered from the face outward: `(value, derivative away from the face)`.
fn extrapolate(c: [f64; 3], h: f64) -> (f64, f64) {
    (
        (15.0 * c[0] - 10.0 * c[1] + 3.0 * c[2]) / 8.0,
        (-2.0 * c[0] + 3.0 * c[1] - c[2]) / h,
    )
}

fn interface_stencils(field: &SolutionField, k: usize) -> Result<([f64; 3], [f64; 3])> {
    let g = &field.grid;
    if g.n_left < 3 || g.n_right < 3 {
        return Err(Error::Domain("interface readouts need three cells per side".into()));
    }
    let p = &field.values[k];
    let nl = g.n_left;
    Ok((
        [p[nl - 1], p[nl - 2], p[nl - 3]],
        [p[nl], p[nl + 1], p[nl + 2]],
    ))
}

/// Readouts of snapshot `k`.
pub fn boundary_readouts_at(field: &SolutionField, params: &ModelParams, k: usize) -> Result<Readouts> {
    let (left, right) = interface_stencils(field, k)?;
    let (p_plus, dp_plus) = extrapolate(right, field.grid.h_right());
    let (p_minus, _) = extrapolate(left, field.grid.h_left());
    Ok(Readouts {
        u_plus: p_plus,
        du_plus: dp_plus,
        u_minus: params.eps_pow_neg_q() * p_minus,
    })
}

/// Readouts of the last snapshot.
pub fn boundary_readouts(field: &SolutionField, params: &ModelParams) -> Result<Readouts> {
    boundary_readouts_at(field, params, field.values.len() - 1)
}

/// One-sided pressure slopes `(p'(0⁻), p'(0⁺))` in the solved coordinate,
/// reconstructed from cell values of snapshot `k`.
pub fn interface_slopes(field: &SolutionField, k: usize) -> Result<(f64, f64)> {
    let (left, right) = interface_stencils(field, k)?;
    let (_, away_left) = extrapolate(left, field.grid.h_left());
    let (_, away_right) = extrapolate(right, field.grid.h_right());
    Ok((-away_left, away_right))
}
