//! Closed-form geometry of space forms under conformal flows.

mod coords;
mod flow;
mod model;

pub use coords::{Coords, MAX_AMBIENT};
pub use flow::{
    decay_integral, CurvatureBounds, FlowFunctionals, FlowLaw, FlowSpec, RateFunction,
    CRITICAL_GUARD,
};
pub use model::{Model, Point, TangentVector, ANTIPODAL_GUARD, CONSTRAINT_TOL};
