use rand::Rng;
use serde::{Deserialize, Serialize};

use super::walk::{advance, combine, draw_normals, initial_frame, Direction, Schedule};
use crate::error::{FlowError, Result};
use crate::geometry::{Coords, FlowSpec, Point};
use crate::parallel;
use crate::rng::RngStream;

/// A discrete Brownian path for the time-dependent metric family given by
/// `direction`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    pub direction: Direction,
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    /// Standard normal frame components drawn at each step.
    pub noises: Vec<Vec<f64>>,
    /// `g_0` displacement applied at each step (tangent at the step's start).
    pub displacements: Vec<Coords>,
    /// Set for the coupled process `X_t(γ(t/T))`.
    pub coupled: bool,
}

impl BrownianPath {
    pub fn start(&self) -> &Point {
        &self.points[0]
    }

    pub fn end(&self) -> &Point {
        self.points.last().expect("paths have at least one node")
    }

    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    /// A deterministic path through `points` (consecutive points joined by
    /// minimizing `g_0` geodesics). Useful for transporting along curves.
    pub fn through_points(
        flow: &FlowSpec,
        direction: Direction,
        times: Vec<f64>,
        points: Vec<Point>,
    ) -> Result<Self> {
        if times.len() != points.len() || points.is_empty() {
            return Err(FlowError::invalid("a path needs one time per point"));
        }
        let displacements = points
            .windows(2)
            .map(|w| flow.model.log(&w[0], &w[1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(BrownianPath {
            direction,
            noises: vec![Vec::new(); displacements.len()],
            times,
            points,
            displacements,
            coupled: false,
        })
    }
}

/// Runs one geodesic random walk, calling `visit(k, point_after_step_k)`.
pub(crate) fn walk<R: Rng, V: FnMut(usize, &Point, &[f64], &Coords)>(
    flow: &FlowSpec,
    schedule: &Schedule,
    x: &Point,
    rng: &mut R,
    mut visit: V,
) -> Point {
    let model = &flow.model;
    let n = model.dim();
    let mut frame = initial_frame(model, x);
    let mut point = *x;
    let mut xi = [0.0; crate::geometry::MAX_AMBIENT];
    for k in 0..schedule.steps() {
        draw_normals(rng, &mut xi[..n]);
        // Δ_{g(s)} = c(s)^{-1} Δ_{g_0}
        let amp = (schedule.dt / schedule.scale[k]).sqrt();
        let mut v = combine(&frame, &xi[..n]);
        v = v.scale(amp);
        advance(model, &mut point, &mut frame, n, &v);
        visit(k + 1, &point, &xi[..n], &v);
    }
    point
}

/// Simulates a `g(t)`- (forward) or `g(T - t)`- (backward) Brownian motion
/// from `x` for `horizon` units of time.
pub fn simulate_bm(
    flow: &FlowSpec,
    direction: Direction,
    x: &Point,
    horizon: f64,
    step: f64,
    rng: RngStream,
) -> Result<BrownianPath> {
    let schedule = Schedule::new(flow, direction, horizon, step)?;
    let mut points = Vec::with_capacity(schedule.times.len());
    let mut noises = Vec::with_capacity(schedule.steps());
    let mut displacements = Vec::with_capacity(schedule.steps());
    points.push(*x);
    let mut g = rng.generator();
    walk(flow, &schedule, x, &mut g, |_, p, xi, v| {
        points.push(*p);
        noises.push(xi.to_vec());
        displacements.push(*v);
    });
    Ok(BrownianPath {
        direction,
        times: schedule.times,
        points,
        noises,
        displacements,
        coupled: false,
    })
}

/// Endpoints of `n_paths` independent walks; path `i` uses stream `(seed, i)`
/// and ends where [`simulate_bm`] with the same stream ends.
pub fn sample_endpoints(
    flow: &FlowSpec,
    direction: Direction,
    x: &Point,
    horizon: f64,
    step: f64,
    seed: u64,
    n_paths: usize,
) -> Result<Vec<Point>> {
    let schedule = Schedule::new(flow, direction, horizon, step)?;
    Ok(parallel::map_indexed(n_paths, |i| {
        let mut g = RngStream::new(seed, i as u64).generator();
        walk(flow, &schedule, x, &mut g, |_, _, _, _| {})
    }))
}

/// Largest `g_0` distance from the start reached by each path: a runtime
/// non-explosion diagnostic.
pub fn max_excursions(
    flow: &FlowSpec,
    direction: Direction,
    x: &Point,
    horizon: f64,
    step: f64,
    seed: u64,
    n_paths: usize,
) -> Result<Vec<f64>> {
    let schedule = Schedule::new(flow, direction, horizon, step)?;
    Ok(parallel::map_indexed(n_paths, |i| {
        let mut g = RngStream::new(seed, i as u64).generator();
        let mut worst = 0.0f64;
        walk(flow, &schedule, x, &mut g, |_, p, _, _| {
            let d = flow.model.distance(x, p);
            worst = if d.is_finite() {
                worst.max(d)
            } else {
                f64::INFINITY
            };
        });
        worst
    }))
}
