//! Fixtures shared by the benchmarks.

use flowkernel::{FlowSpec, Model, Point};

pub fn sphere_ricci() -> FlowSpec {
    FlowSpec::ricci(Model::sphere(2, 1.0), 0.9).expect("valid flow")
}

pub fn hyperbolic_ricci() -> FlowSpec {
    FlowSpec::ricci(Model::hyperbolic(2, -1.0), 1.0).expect("valid flow")
}

pub fn plane() -> FlowSpec {
    FlowSpec::static_flow(Model::euclidean(2), 1.0).expect("valid flow")
}

/// The origin and a point at `g_0` distance `d` from it.
pub fn pair(flow: &FlowSpec, d: f64) -> (Point, Point) {
    let x = flow.model.origin();
    let y = flow.model.offset(&x, d, 0.0);
    (x, y)
}
