//! Numerical laboratory for reaction-diffusion fronts in 1-periodic media:
//! cell-problem spectral objects, nonlinear and moving-boundary linear
//! solvers, front asymptotics, fitting utilities and a branching Brownian
//! motion sampler.

pub mod analysis;
pub mod asymptotics;
pub mod bbm;
pub mod error;
pub mod linalg;
pub mod periodic;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use periodic::PeriodicFunction;
pub use spectral::SpeedBundle;
