//! Diffusion across a single jump in diffusivity, `u_t = (D^(1-q) (D^q u)_x)_x`
//! with `D = eps` on `x < 0` and `D = 1` on `x > 0`.
//!
//! * [`model`]: parameters, coordinates and initial data.
//! * [`closedform`]: exact solutions through the interface value `h(t)`.
//! * [`fd`]: conservative finite-volume solver.
//! * [`walker`]: Monte Carlo random walks.
//! * [`analysis`]: interface observables, sweeps and power-law fits.

pub mod analysis;
pub mod closedform;
pub mod error;
pub mod fd;
pub mod model;
pub mod quadrature;
pub mod walker;

pub use error::{Error, Result};
pub use model::{InitialData, ModelParams};
