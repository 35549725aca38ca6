//! Brownian motion on space forms under conformal geometric flows, with
//! damped parallel transport, Girsanov coupling and numerical verification
//! of heat-kernel inequalities against exact reference kernels.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: closed-form metrics, distances, geodesics, volumes and
//!   curvature bounds of `g(t) = c(t) g_0`.
//! - [`process`]: geodesic random walks for `½Δ_{g(t)}`, parallel and damped
//!   transport, and the coupled process with its Girsanov functionals.
//! - [`kernel`]: Monte Carlo and exact heat-kernel values.
//! - [`verify`]: one verifier per inequality, each producing a
//!   [`verify::BoundReport`].

pub mod error;
pub mod geometry;
pub mod kernel;
pub mod parallel;
pub mod process;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod verify;

pub use error::{FlowError, Result};
pub use geometry::{
    Coords, CurvatureBounds, FlowFunctionals, FlowLaw, FlowSpec, Model, Point, RateFunction,
    TangentVector,
};
pub use rng::RngStream;
