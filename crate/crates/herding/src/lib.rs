//! Leader-follower density control of large-scale multi-agent systems on
//! periodic domains.
//!
//! A population of controllable *leaders* indirectly steers the spatial
//! density of a population of diffusive *followers* through a repulsive
//! interaction kernel. Leaders obey a mass-conservation law driven by a
//! velocity field `u`; followers obey an advection-diffusion equation whose
//! advection velocity is the circular convolution of the kernel with the
//! leaders' density.
//!
//! The crate provides:
//!
//! - discrete calculus on uniform periodic grids ([`field`]),
//! - periodized interaction kernels ([`kernel`]),
//! - feasibility analysis and reference synthesis ([`feasibility`]),
//! - deconvolution of velocity fields into densities ([`deconvolve`]),
//! - the leaders' flux-law controller ([`leader`]),
//! - the reference-governor outer loop ([`governor`]),
//! - macroscopic closed-loop simulation with a Lyapunov-bound monitor
//!   ([`sim`]),
//! - the microscopic agent-based counterpart ([`agents`]),
//! - error/divergence metrics ([`metrics`]) and scenario orchestration
//!   ([`scenario`]).
//!
//! See the `examples/` directory for runnable entry points covering each
//! capability, and the `herding` binary for batch scenario execution.

pub mod agents;
pub mod deconvolve;
mod error;
pub mod feasibility;
pub mod field;
pub mod governor;
pub mod kernel;
pub mod leader;
pub mod metrics;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
