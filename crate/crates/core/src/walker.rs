//! Position-jump random walk with walk length `ℓ(x) δ` and sojourn time
//! `τ(x) δ²`: `ℓ = η, τ = ζ` on `x < 0` and `ℓ = 1, τ = 1/2` on `x >= 0`,
//! so the right diffusivity is 1 and the left one is `η²/(2ζ)`.
//!
//! Two jump rules are available. [`JumpRule::Reversible`] walks a
//! homogeneous `±δ` lattice in the stretched coordinate `z` (`x = z` on the
//! right, `x = η z` on the left) with the sojourn time of the departure
//! side. [`JumpRule::DeparturePoint`] jumps `±ℓ(x) δ` in `x` with both the
//! length and the sojourn time of the departure point.
//!
//! Particles are simulated in fixed-size chunks; chunk `c` draws from the
//! ChaCha8 stream `c` of the seed, so results do not depend on the thread count.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{InitialData, ModelParams};

/// Particles per RNG stream.
pub const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpRule {
    #[default]
    Reversible,
    DeparturePoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkRule {
    eta: f64,
    zeta: f64,
    delta: f64,
    jump: JumpRule,
}

/// Sojourn-time parameter on the right half-line.
pub const TAU_RIGHT: f64 = 0.5;

impl WalkRule {
    pub fn new(eta: f64, zeta: f64, delta: f64, jump: JumpRule) -> Result<Self> {
        for (name, v) in [("eta", eta), ("zeta", zeta), ("delta", delta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(WalkRule {
            eta,
            zeta,
            delta,
            jump,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn jump(&self) -> JumpRule {
        self.jump
    }

    pub fn with_jump(mut self, jump: JumpRule) -> Self {
        self.jump = jump;
        self
    }

    pub fn with_delta(self, delta: f64) -> Result<Self> {
        Self::new(self.eta, self.zeta, delta, self.jump)
    }

    /// Walk-length factor `ℓ(x)`.
    pub fn ell(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.eta
        } else {
            1.0
        }
    }

    /// Sojourn-time factor `τ(x)`.
    pub fn tau(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.zeta
        } else {
            TAU_RIGHT
        }
    }

    /// `η² / (2ζ)`.
    pub fn left_diffusivity(&self) -> f64 {
        self.eta * self.eta / (2.0 * self.zeta)
    }

    pub fn right_diffusivity(&self) -> f64 {
        1.0 / (2.0 * TAU_RIGHT)
    }

    /// `K = ℓ`.
    pub fn k_coefficient(&self, x: f64) -> f64 {
        self.ell(x)
    }

    /// `M = ℓ / τ`.
    pub fn m_coefficient(&self, x: f64) -> f64 {
        self.ell(x) / self.tau(x)
    }
}

/// `η = eps^(1-q)`, `ζ = sigma / 2`, so that `η²/(2ζ) = eps` and the ratio
/// of `M = ℓ/τ` across the interface is `eps^q`.
pub fn walk_rule_from_params(params: &ModelParams, delta: f64) -> Result<WalkRule> {
    let eta = params.eps() * params.eps_pow_neg_q();
    if !eta.is_finite() {
        return Err(Error::Overflow("eta = eps^(1-q)"));
    }
    WalkRule::new(eta, TAU_RIGHT * params.sigma(), delta, JumpRule::Reversible)
}

/// Positions and clocks of all particles at the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    positions: Vec<f64>,
    clocks: Vec<f64>,
    seed: u64,
    horizon: f64,
    rule: WalkRule,
    jumps: u64,
    occupancy: Option<Occupancy>,
}

/// Time spent by all particles in `[-width, 0)` and `[0, width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupancy {
    pub width: f64,
    pub left_time: f64,
    pub right_time: f64,
}

impl Occupancy {
    /// Ratio of time-averaged occupancy densities, left over right.
    pub fn density_ratio(&self) -> f64 {
        self.left_time / self.right_time
    }
}

impl Ensemble {
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn clocks(&self) -> &[f64] {
        &self.clocks
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn rule(&self) -> &WalkRule {
        &self.rule
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Total number of jumps taken.
    pub fn jumps(&self) -> u64 {
        self.jumps
    }

    pub fn occupancy(&self) -> Option<Occupancy> {
        self.occupancy
    }

    /// Fraction of particles in `x < 0`.
    pub fn left_fraction(&self) -> f64 {
        self.positions.iter().filter(|&&x| x < 0.0).count() as f64 / self.len() as f64
    }

    /// `(mean, variance, skewness)` of the positions.
    pub fn moments(&self) -> (f64, f64, f64) {
        let n = self.len() as f64;
        let mean = self.positions.iter().sum::<f64>() / n;
        let (mut m2, mut m3) = (0.0, 0.0);
        for &x in &self.positions {
            let d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
        }
        m2 /= n;
        m3 /= n;
        (mean, m2, m3 / m2.powf(1.5))
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws initial positions (in `x`).
#[derive(Debug, Clone)]
pub struct InitSampler {
    init: InitialData,
    extent: f64,
}

impl InitSampler {
    /// Non-point data are sampled from their normalized restriction to `[-extent, extent]`.
    pub fn new(init: InitialData, extent: f64) -> Result<Self> {
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::InvalidParameter(format!("sampling extent must be positive, got {extent}")));
        }
        match &init {
            InitialData::Step { a, b } if a + b <= 0.0 => {
                return Err(Error::InvalidParameter("step data carry no mass".into()))
            }
            InitialData::Sampled(s) if s.bound() <= 0.0 => {
                return Err(Error::InvalidParameter("sampled data carry no mass".into()))
            }
            _ => {}
        }
        Ok(InitSampler { init, extent })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        match &self.init {
            InitialData::Dirac { x0 } => Ok(*x0),
            InitialData::Step { a, b } => {
                let side = uniform(rng) * (a + b);
                let r = uniform(rng) * self.extent;
                Ok(if side < *a { r } else { -r })
            }
            InitialData::Sampled(s) => {
                for _ in 0..1_000_000 {
                    let x = (2.0 * uniform(rng) - 1.0) * self.extent;
                    if x == 0.0 {
                        continue;
                    }
                    if uniform(rng) * s.bound() < s.value(x)? {
                        return Ok(x);
                    }
                }
                Err(Error::Numerical("rejection sampling of the initial data failed".into()))
            }
        }
    }
}

struct ChunkResult {
    positions: Vec<f64>,
    clocks: Vec<f64>,
    jumps: u64,
    left_time: f64,
    right_time: f64,
}

/// Simulates `n_particles` walkers up to `horizon` with the given seed.
///
/// A point mass at `x0` is smeared uniformly over one lattice cell,
/// `x0 ± δ` in the walk coordinate, so that the ensemble does not inherit
/// the parity of a single lattice.
pub fn simulate(
    rule: &WalkRule,
    init: &InitialData,
    n_particles: usize,
    horizon: f64,
    seed: u64,
) -> Result<Ensemble> {
    simulate_with(rule, &InitSampler::new(init.clone(), 1.0)?, n_particles, horizon, seed, None)
}

/// [`simulate`] with an explicit initial sampler and optional occupancy
/// tracking in `[-width, width)`.
pub fn simulate_with(
    rule: &WalkRule,
    sampler: &InitSampler,
    n_particles: usize,
    horizon: f64,
    seed: u64,
    occupancy_width: Option<f64>,
) -> Result<Ensemble> {
    if n_particles == 0 {
        return Err(Error::InvalidParameter("need at least one particle".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let delta = rule.delta;
    if rule.zeta.min(TAU_RIGHT) * delta * delta >= horizon {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} is too coarse for horizon {horizon}"
        )));
    }
    if let Some(w) = occupancy_width {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!("occupancy width must be positive, got {w}")));
        }
    }
    let n_chunks = n_particles.div_ceil(CHUNK);
    let results: Vec<ChunkResult> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(n_particles - c * CHUNK);
            run_chunk(rule, sampler, count, horizon, seed, c as u64, occupancy_width)
        })
        .collect::<Result<_>>()?;
    let mut positions = Vec::with_capacity(n_particles);
    let mut clocks = Vec::with_capacity(n_particles);
    let mut jumps = 0;
    let (mut left_time, mut right_time) = (0.0, 0.0);
    for r in results {
        positions.extend(r.positions);
        clocks.extend(r.clocks);
        jumps += r.jumps;
        left_time += r.left_time;
        right_time += r.right_time;
    }
    Ok(Ensemble {
        positions,
        clocks,
        seed,
        horizon,
        rule: *rule,
        jumps,
        occupancy: occupancy_width.map(|width| Occupancy {
            width,
            left_time,
            right_time,
        }),
    })
}

fn run_chunk(
    rule: &WalkRule,
    sampler: &InitSampler,
    count: usize,
    horizon: f64,
    seed: u64,
    stream: u64,
    occupancy_width: Option<f64>,
) -> Result<ChunkResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let delta = rule.delta;
    let reversible = rule.jump == JumpRule::Reversible;
    // walk coordinate s: z for the reversible rule, x otherwise
    let step_left = if reversible { delta } else { rule.eta * delta };
    let step_right = delta;
    let tau_left = rule.zeta * delta * delta;
    let tau_right = TAU_RIGHT * delta * delta;
    let to_walk = |x: f64| if reversible && x < 0.0 { x / rule.eta } else { x };
    let to_x = |s: f64| if reversible && s < 0.0 { rule.eta * s } else { s };

    let mut out = ChunkResult {
        positions: Vec::with_capacity(count),
        clocks: Vec::with_capacity(count),
        jumps: 0,
        left_time: 0.0,
        right_time: 0.0,
    };
    for _ in 0..count {
        let x0 = sampler.sample(&mut rng)?;
        let mut s = to_walk(x0);
        if matches!(sampler.init, InitialData::Dirac { .. }) {
            s += (2.0 * uniform(&mut rng) - 1.0) * delta;
        }
        let mut clock = 0.0;
        let mut bits = 0u64;
        let mut nbits = 0u32;
        let mut jumps = 0u64;
        loop {
            let left = s < 0.0;
            let tau = if left { tau_left } else { tau_right };
            if clock + tau > horizon {
                break;
            }
            if let Some(w) = occupancy_width {
                let x = to_x(s);
                if left && x >= -w {
                    out.left_time += tau;
                } else if !left && x < w {
                    out.right_time += tau;
                }
            }
            clock += tau;
            if nbits == 0 {
                bits = rng.next_u64();
                nbits = 64;
            }
            let step = if left { step_left } else { step_right };
            s += if bits & 1 == 1 { step } else { -step };
            bits >>= 1;
            nbits -= 1;
            jumps += 1;
        }
        if let Some(w) = occupancy_width {
            // the last sojourn is cut at the horizon
            let rest = horizon - clock;
            let x = to_x(s);
            if s < 0.0 && x >= -w {
                out.left_time += rest;
            } else if s >= 0.0 && x < w {
                out.right_time += rest;
            }
        }
        out.positions.push(to_x(s));
        out.clocks.push(clock);
        out.jumps += jumps;
    }
    Ok(out)
}

/// Histogram bin edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Bins {
    edges: Vec<f64>,
}

impl Bins {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Domain("need at least two bin edges".into()));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("bin edges must be strictly increasing (no zero-width bins)".into()));
        }
        Ok(Bins { edges })
    }

    /// Bins of `width` with an edge at 0, covering `[lo, hi]`.
    pub fn aligned(lo: f64, hi: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !(hi > lo) {
            return Err(Error::Domain("bins need a positive width and lo < hi".into()));
        }
        let first = (lo / width).floor() as i64;
        let last = (hi / width).ceil() as i64;
        Self::new((first..=last).map(|k| k as f64 * width).collect())
    }

    /// Aligned bins covering every particle of `ens`.
    pub fn covering(ens: &Ensemble, width: f64) -> Result<Self> {
        let lo = ens.positions.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ens.positions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self::aligned(lo, hi + 0.5 * width, width)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn locate(&self, x: f64) -> Option<usize> {
        let n = self.edges.len();
        if x < self.edges[0] || x >= self.edges[n - 1] {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= x) - 1)
    }
}

/// Normalized histogram of an ensemble at its horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub horizon: f64,
    /// Fraction of particles outside all bins.
    pub outside: f64,
}

impl DensityEstimate {
    /// `Σ density * width`.
    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Bin masses.
    pub fn masses(&self) -> Vec<f64> {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .collect()
    }
}

pub fn density(ens: &Ensemble, bins: &Bins) -> Result<DensityEstimate> {
    if ens.is_empty() {
        return Err(Error::Domain("empty ensemble".into()));
    }
    let mut counts = vec![0u64; bins.len()];
    let mut outside = 0u64;
    for &x in &ens.positions {
        match bins.locate(x) {
            Some(i) => counts[i] += 1,
            None => outside += 1,
        }
    }
    let n = ens.len() as f64;
    let density = counts
        .iter()
        .zip(bins.edges.windows(2))
        .map(|(&c, w)| c as f64 / (n * (w[1] - w[0])))
        .collect();
    Ok(DensityEstimate {
        edges: bins.edges.clone(),
        density,
        horizon: ens.horizon,
        outside: outside as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_from_params_examples() {
        let p = ModelParams::new(0.01, 0.5).unwrap();
        let r = walk_rule_from_params(&p, 0.01).unwrap();
        assert!((r.eta() - 0.1).abs() < 1e-15);
        assert!((r.left_diffusivity() / r.right_diffusivity() - 0.01).abs() < 1e-12);
        assert!((r.zeta() - 0.5).abs() < 1e-15);

        let p = ModelParams::new(0.01, 1.0).unwrap();
        let r = walk_rule_from_params(&p, 0.01).unwrap();
        assert!((r.zeta() - 0.5 * 100.0).abs() < 1e-9);
        assert!((r.left_diffusivity() - 0.01).abs() < 1e-12);
        // M ratio across the interface is eps^q
        assert!((r.m_coefficient(-1.0) / r.m_coefficient(1.0) - 0.01).abs() < 1e-14);
        assert!(WalkRule::new(0.0, 1.0, 0.1, JumpRule::Reversible).is_err());
    }

    #[test]
    fn trajectories_are_reproducible() {
        let p = ModelParams::new(0.3, 0.8).unwrap();
        let r = walk_rule_from_params(&p, 0.05).unwrap();
        let init = InitialData::dirac(0.1).unwrap();
        let a = simulate(&r, &init, 1, 0.05, 99).unwrap();
        let b = simulate(&r, &init, 1, 0.05, 99).unwrap();
        assert_eq!(a.positions()[0].to_bits(), b.positions()[0].to_bits());
        let c = simulate(&r, &init, 1, 0.05, 100).unwrap();
        assert_ne!(a.positions()[0].to_bits(), c.positions()[0].to_bits());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let p = ModelParams::new(0.3, 0.2).unwrap();
        let r = walk_rule_from_params(&p, 0.05).unwrap();
        let init = InitialData::dirac(0.2).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| simulate(&r, &init, 5000, 0.02, 3).unwrap());
        let b = three.install(|| simulate(&r, &init, 5000, 0.02, 3).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.len(), 5000);
    }

    #[test]
    fn clocks_stay_below_horizon() {
        let p = ModelParams::new(0.1, 0.9).unwrap();
        let r = walk_rule_from_params(&p, 0.05).unwrap();
        let ens = simulate(&r, &InitialData::dirac(0.05).unwrap(), 2000, 0.03, 1).unwrap();
        let min_tau = r.tau(-1.0).min(r.tau(1.0)) * 0.05 * 0.05;
        for &c in ens.clocks() {
            assert!(c <= 0.03 && c > 0.03 - r.tau(-1.0).max(0.5) * 0.0025 - min_tau);
        }
    }

    #[test]
    fn coarse_delta_is_rejected() {
        let p = ModelParams::new(0.5, 0.5).unwrap();
        let r = walk_rule_from_params(&p, 1.0).unwrap();
        assert!(simulate(&r, &InitialData::dirac(1.0).unwrap(), 10, 0.1, 0).is_err());
    }

    #[test]
    fn single_point_histogram() {
        let p = ModelParams::new(0.5, 0.5).unwrap();
        let r = walk_rule_from_params(&p, 0.1).unwrap();
        let ens = simulate(&r, &InitialData::dirac(1.0).unwrap(), 1, 0.1, 5).unwrap();
        let bins = Bins::covering(&ens, 0.05).unwrap();
        let d = density(&ens, &bins).unwrap();
        assert_eq!(d.masses().iter().filter(|&&m| m > 0.0).count(), 1);
        assert!((d.integral() - 1.0).abs() < 1e-12);
        assert!(Bins::new(vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn homogeneous_walk_is_symmetric() {
        let p = ModelParams::new(0.999, 0.0).unwrap();
        let r = walk_rule_from_params(&p, 0.02).unwrap();
        let ens = simulate(&r, &InitialData::dirac(3.0).unwrap(), 20000, 0.1, 11).unwrap();
        let (mean, var, skew) = ens.moments();
        assert!((mean - 3.0).abs() < 4.0 * (0.2f64 / 20000.0).sqrt());
        assert!((var - 0.2).abs() < 0.02);
        // standard error of the sample skewness is about sqrt(6/n)
        assert!(skew.abs() < 4.0 * (6.0f64 / 20000.0).sqrt());
    }

    #[test]
    fn far_particles_ignore_the_left_medium() {
        // before any particle can reach the interface, every eps gives the same trajectories
        let init = InitialData::dirac(1.0).unwrap();
        let run = |eps: f64| {
            let p = ModelParams::new(eps, 0.7).unwrap();
            let r = walk_rule_from_params(&p, 0.05).unwrap();
            simulate(&r, &init, 200, 0.05, 17).unwrap()
        };
        // 0.05 / (0.5 * 0.0025) = 40 jumps of 0.05 cannot cover 0.95
        assert_eq!(run(0.5).positions(), run(0.001).positions());
    }

    #[test]
    fn step_sampler_respects_side_weights() {
        let sampler = InitSampler::new(InitialData::step(3.0, 1.0).unwrap(), 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 40000;
        let right = (0..n).filter(|_| sampler.sample(&mut rng).unwrap() > 0.0).count();
        assert!((right as f64 / n as f64 - 0.75).abs() < 0.01);
        assert!(InitSampler::new(InitialData::step(0.0, 0.0).unwrap(), 1.0).is_err());
    }
}
