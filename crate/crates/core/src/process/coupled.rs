//! The coupled process: a `g(T - t)`-Brownian motion from `x` pushed towards
//! `y` along the damped transport of the `g(T)` geodesic velocity, with the
//! Girsanov functionals that undo the push.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::path::BrownianPath;
use super::walk::{advance, combine, draw_normals, initial_frame, Direction, Schedule};
use crate::error::{FlowError, Result};
use crate::geometry::{decay_integral, Coords, FlowSpec, Point, MAX_AMBIENT};
use crate::parallel;
use crate::rng::RngStream;

/// `N_t`, `⟨N⟩_t` and `R_t = exp(N_t - ½⟨N⟩_t)` at every node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GirsanovRecord {
    pub martingale: Vec<f64>,
    pub quadratic_variation: Vec<f64>,
    pub density: Vec<f64>,
    /// Closed-form bound on `⟨N⟩_T`.
    pub novikov_bound: f64,
}

impl GirsanovRecord {
    pub fn final_density(&self) -> f64 {
        *self.density.last().expect("records have at least one node")
    }

    pub fn final_quadratic_variation(&self) -> f64 {
        *self
            .quadratic_variation
            .last()
            .expect("records have at least one node")
    }
}

/// Endpoint summary of one coupled path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledSample {
    pub end: Point,
    pub martingale: f64,
    pub quadratic_variation: f64,
    pub density: f64,
}

/// Everything the coupled walk needs that does not depend on the path.
struct Coupling {
    schedule: Schedule,
    /// `γ̇(0)` in the components of the initial frame at `x`.
    velocity: [f64; MAX_AMBIENT],
    velocity_sq: f64,
    horizon: f64,
    /// `√c(T)`.
    root_scale_t: f64,
}

impl Coupling {
    fn new(flow: &FlowSpec, x: &Point, y: &Point, horizon: f64, step: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(FlowError::invalid("coupling horizon must be positive"));
        }
        let schedule = Schedule::new(flow, Direction::Backward { total: horizon }, horizon, step)?;
        let model = &flow.model;
        let v = model.log(x, y)?;
        let frame = model.tangent_frame(x);
        let mut velocity = [0.0; MAX_AMBIENT];
        for (slot, e) in velocity.iter_mut().zip(&frame) {
            *slot = model.inner(e, &v);
        }
        let velocity_sq = velocity.iter().map(|g| g * g).sum();
        Ok(Coupling {
            schedule,
            velocity,
            velocity_sq,
            horizon,
            root_scale_t: flow.scale_factor(horizon)?.sqrt(),
        })
    }

    /// Runs one path; `visit(point, N, ⟨N⟩, displacement)` after each step.
    fn run<R: Rng, V: FnMut(&Point, f64, f64, &[f64], &Coords)>(
        &self,
        flow: &FlowSpec,
        x: &Point,
        rng: &mut R,
        mut visit: V,
    ) -> CoupledSample {
        let model = &flow.model;
        let n = model.dim();
        let s = &self.schedule;
        let h = s.dt;
        let inv_t = 1.0 / self.horizon;
        let mut frame = initial_frame(model, x);
        let mut point = *x;
        let mut damp = 1.0;
        let (mut big_n, mut qv) = (0.0, 0.0);
        let mut xi = [0.0; MAX_AMBIENT];
        let mut a = [0.0; MAX_AMBIENT];
        for k in 0..s.steps() {
            draw_normals(rng, &mut xi[..n]);
            let c = s.scale[k];
            let noise_amp = (h / c).sqrt();
            // W γ̇ in the frame: damping × gauge √(c(T)/c(s)) × initial components
            let drift_amp = inv_t * damp * self.root_scale_t / c.sqrt() * h;
            let mut proj = 0.0;
            for i in 0..n {
                a[i] = noise_amp * xi[i] + drift_amp * self.velocity[i];
                proj += xi[i] * self.velocity[i];
            }
            big_n -= inv_t * h.sqrt() * damp * self.root_scale_t * proj;
            qv += inv_t
                * inv_t
                * damp
                * damp
                * self.root_scale_t
                * self.root_scale_t
                * self.velocity_sq
                * h;
            let v = combine(&frame, &a[..n]);
            advance(model, &mut point, &mut frame, n, &v);
            damp *= 1.0 - 0.5 * s.damping_rate[k] * h;
            visit(&point, big_n, qv, &xi[..n], &v);
        }
        CoupledSample {
            end: point,
            martingale: big_n,
            quadratic_variation: qv,
            density: (big_n - 0.5 * qv).exp(),
        }
    }
}

/// `d_T(x, y)² / T² · (1 - e^{-C̃T})/C̃`, with `C̃` over `[0, T]`.
pub fn novikov_bound(flow: &FlowSpec, x: &Point, y: &Point, horizon: f64) -> Result<f64> {
    let d = flow.distance(horizon, x, y)?;
    let ct = flow.curvature_bounds((0.0, horizon))?.c_tilde;
    Ok(d * d / (horizon * horizon) * decay_integral(ct, horizon))
}

/// Simulates the coupled process from `x` towards `y` under the backward
/// metric `g(T - t)`.
pub fn simulate_coupled(
    flow: &FlowSpec,
    horizon: f64,
    x: &Point,
    y: &Point,
    step: f64,
    rng: RngStream,
) -> Result<(BrownianPath, GirsanovRecord)> {
    let coupling = Coupling::new(flow, x, y, horizon, step)?;
    let steps = coupling.schedule.steps();
    let mut points = Vec::with_capacity(steps + 1);
    let mut noises = Vec::with_capacity(steps);
    let mut displacements = Vec::with_capacity(steps);
    let mut martingale = Vec::with_capacity(steps + 1);
    let mut quadratic_variation = Vec::with_capacity(steps + 1);
    points.push(*x);
    martingale.push(0.0);
    quadratic_variation.push(0.0);
    let mut g = rng.generator();
    coupling.run(flow, x, &mut g, |p, big_n, qv, xi, v| {
        points.push(*p);
        martingale.push(big_n);
        quadratic_variation.push(qv);
        noises.push(xi.to_vec());
        displacements.push(*v);
    });
    let density = martingale
        .iter()
        .zip(&quadratic_variation)
        .map(|(m, q)| (m - 0.5 * q).exp())
        .collect();
    let path = BrownianPath {
        direction: Direction::Backward { total: horizon },
        times: coupling.schedule.times.clone(),
        points,
        noises,
        displacements,
        coupled: true,
    };
    let record = GirsanovRecord {
        martingale,
        quadratic_variation,
        density,
        novikov_bound: novikov_bound(flow, x, y, horizon)?,
    };
    Ok((path, record))
}

/// Endpoint summaries of `n_paths` coupled paths; path `i` uses stream
/// `(seed, i)`.
pub fn sample_coupled(
    flow: &FlowSpec,
    horizon: f64,
    x: &Point,
    y: &Point,
    step: f64,
    seed: u64,
    n_paths: usize,
) -> Result<Vec<CoupledSample>> {
    let coupling = Coupling::new(flow, x, y, horizon, step)?;
    Ok(parallel::map_indexed(n_paths, |i| {
        let mut g = RngStream::new(seed, i as u64).generator();
        coupling.run(flow, x, &mut g, |_, _, _, _, _| {})
    }))
}

/// `exp(½ β(β-1) d_T²/T² · (1 - e^{-C̃T})/C̃)`, the bound on `E[R_T^β]`.
pub fn moment_bound(flow: &FlowSpec, x: &Point, y: &Point, horizon: f64, beta: f64) -> Result<f64> {
    if !(beta >= 1.0) {
        return Err(FlowError::invalid(format!(
            "moment exponent {beta} must be at least 1"
        )));
    }
    let ct = flow.curvature_bounds((0.0, horizon))?.c_tilde;
    let d = flow.distance(horizon, x, y)?;
    Ok(moment_bound_from(beta, d, horizon, ct))
}

/// [`moment_bound`] from its ingredients `(β, d_T, T, C̃)`.
pub fn moment_bound_from(beta: f64, distance: f64, horizon: f64, c_tilde: f64) -> f64 {
    let q = distance * distance / (horizon * horizon) * decay_integral(c_tilde, horizon);
    (0.5 * beta * (beta - 1.0) * q).exp()
}
