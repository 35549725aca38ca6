//! Time grids and the single-step geodesic random walk shared by every
//! simulator.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::geometry::{Coords, FlowSpec, Model, Point, MAX_AMBIENT};

/// Largest admissible time step.
pub const MAX_STEP: f64 = 1e-2;

/// Which metric family drives the path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Direction {
    /// `g(t)`-Brownian motion.
    Forward,
    /// `g(T - t)`-Brownian motion.
    Backward { total: f64 },
}

impl Direction {
    /// Metric time `s` at path time `t`.
    #[inline]
    pub fn metric_time(&self, t: f64) -> f64 {
        match self {
            Direction::Forward => t,
            Direction::Backward { total } => (total - t).max(0.0),
        }
    }
}

/// Node times and the flow quantities each step needs, evaluated once per
/// simulation and shared by all paths.
#[derive(Clone, Debug)]
pub(crate) struct Schedule {
    pub times: Vec<f64>,
    pub dt: f64,
    /// `c(s_k)` at every node.
    pub scale: Vec<f64>,
    /// `λ(s_k)` with `(Ric - ∂_t g)^# = λ Id` for the path's metric family.
    pub damping_rate: Vec<f64>,
}

impl Schedule {
    pub fn new(flow: &FlowSpec, direction: Direction, horizon: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(FlowError::invalid("step must be positive"));
        }
        if step > MAX_STEP {
            return Err(FlowError::StepTooLarge {
                step,
                max: MAX_STEP,
            });
        }
        if !(horizon >= 0.0) {
            return Err(FlowError::invalid("horizon must be non-negative"));
        }
        match direction {
            Direction::Forward => flow.check_time(horizon)?,
            Direction::Backward { total } => {
                flow.check_time(total)?;
                if horizon > total * (1.0 + 1e-12) {
                    return Err(FlowError::invalid(format!(
                        "backward path horizon {horizon} exceeds its reversal time {total}"
                    )));
                }
            }
        }
        let steps = if horizon == 0.0 {
            0
        } else {
            (horizon / step - 1e-9).ceil().max(1.0) as usize
        };
        let dt = if steps == 0 {
            0.0
        } else {
            horizon / steps as f64
        };
        let times: Vec<f64> = (0..=steps)
            .map(|k| if k == steps { horizon } else { k as f64 * dt })
            .collect();
        let mut scale = Vec::with_capacity(times.len());
        let mut damping_rate = Vec::with_capacity(times.len());
        for &t in &times {
            let (c, lambda) = node_rates(flow, direction, t)?;
            scale.push(c);
            damping_rate.push(lambda);
        }
        Ok(Schedule {
            times,
            dt,
            scale,
            damping_rate,
        })
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }
}

/// `(c(s), λ(s))` at path time `t`, where `s` is the metric time and
/// `λ · Id = (Ric - ∂_t g)^#` for the path's own metric family.
pub(crate) fn node_rates(flow: &FlowSpec, direction: Direction, t: f64) -> Result<(f64, f64)> {
    let ricci0 = (flow.dim() as f64 - 1.0) * flow.model.curvature();
    let s = direction.metric_time(t);
    let c = flow.scale_factor(s)?;
    let cdot = flow.scale_rate(s)?;
    // forward: Ric - α; backward: Ric_{g(T-t)} - ∂_t g(T-t) = Ric + α
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Backward { .. } => 1.0,
    };
    Ok((c, (ricci0 + sign * cdot) / c))
}

pub(crate) type Frame = [Coords; MAX_AMBIENT];

/// `g_0`-orthonormal frame at `x` as a fixed array.
pub(crate) fn initial_frame(model: &Model, x: &Point) -> Frame {
    let mut frame = [Coords::zeros(model.ambient_dim()); MAX_AMBIENT];
    for (slot, e) in frame.iter_mut().zip(model.tangent_frame(x)) {
        *slot = e;
    }
    frame
}

/// Combination `Σ a_i E_i` of the first `a.len()` frame vectors.
#[inline]
pub(crate) fn combine(frame: &Frame, a: &[f64]) -> Coords {
    let mut v = Coords::zeros(frame[0].len());
    for (e, ai) in frame.iter().zip(a) {
        v = v.axpy(*ai, e);
    }
    v
}

#[inline]
pub(crate) fn draw_normals<R: Rng>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

/// Moves `point` by the `g_0` displacement `v`, transporting the frame.
#[inline]
pub(crate) fn advance(model: &Model, point: &mut Point, frame: &mut Frame, n: usize, v: &Coords) {
    *point = model.exp_transport(point, v, &mut frame[..n]);
}
