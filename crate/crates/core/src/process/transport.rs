use super::path::BrownianPath;
use super::walk::{node_rates, Direction};
use crate::error::Result;
use crate::geometry::{Coords, FlowSpec, Model};

/// Parallel transport `//_{0,t}` along a path: the composed `g_0` geodesic
/// transports times the gauge `√(c(s_0)/c(s_k))`, which makes every node
/// map an isometry `(T_{x_0}M, g(s_0)) → (T_{X_k}M, g(s_k))`.
#[derive(Clone, Debug)]
pub struct TransportMap {
    pub direction: Direction,
    pub times: Vec<f64>,
    pub gauge: Vec<f64>,
    /// `c(s_k)` at each node.
    pub scale: Vec<f64>,
    /// Images of the initial `g_0`-orthonormal frame, `g_0`-transported.
    pub frames: Vec<Vec<Coords>>,
    model: Model,
}

impl TransportMap {
    pub fn nodes(&self) -> usize {
        self.frames.len()
    }

    /// `//_{0,t_k} v` in `g_0` components, for `v` tangent at the start.
    pub fn apply(&self, k: usize, v: &Coords) -> Coords {
        let start = &self.frames[0];
        let mut out = Coords::zeros(v.len());
        for (e0, ek) in start.iter().zip(&self.frames[k]) {
            out = out.axpy(self.model.inner(e0, v), ek);
        }
        out.scale(self.gauge[k])
    }

    /// `g(s_k)` norm of a vector at node `k`.
    pub fn norm_at(&self, k: usize, w: &Coords) -> f64 {
        self.scale[k].sqrt() * self.model.norm(w)
    }

    /// `max_k |‖//v‖_{g(s_k)} - ‖v‖_{g(s_0)}|`.
    pub fn isometry_defect(&self, v: &Coords) -> f64 {
        let base = self.norm_at(0, v);
        (0..self.nodes())
            .map(|k| (self.norm_at(k, &self.apply(k, v)) - base).abs())
            .fold(0.0, f64::max)
    }
}

/// Damped transport `W_{0,t}`: the parallel transport scaled by the
/// per-step product `Π (1 - ½ λ(s_j) h)`, with the exact factor
/// `exp(-½ ∫ λ)` kept alongside for comparison.
#[derive(Clone, Debug)]
pub struct DampedTransport {
    pub transport: TransportMap,
    pub damping: Vec<f64>,
    pub exact_damping: Vec<f64>,
}

impl DampedTransport {
    pub fn apply(&self, k: usize, v: &Coords) -> Coords {
        self.transport.apply(k, v).scale(self.damping[k])
    }

    pub fn apply_exact(&self, k: usize, v: &Coords) -> Coords {
        self.transport.apply(k, v).scale(self.exact_damping[k])
    }

    pub fn norm_at(&self, k: usize, v: &Coords) -> f64 {
        self.transport.norm_at(k, &self.apply(k, v))
    }

    /// `max_k |‖W v‖_{g(s_k)} - ‖v‖_{g(s_0)}|`.
    pub fn norm_defect(&self, v: &Coords) -> f64 {
        let base = self.transport.norm_at(0, v);
        (0..self.transport.nodes())
            .map(|k| (self.norm_at(k, v) - base).abs())
            .fold(0.0, f64::max)
    }

    /// `max_k |damping_k - exact_k|`.
    pub fn discretization_gap(&self) -> f64 {
        self.damping
            .iter()
            .zip(&self.exact_damping)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn parallel_transport(flow: &FlowSpec, path: &BrownianPath) -> Result<TransportMap> {
    let model = &flow.model;
    let n = model.dim();
    let mut frame = model.tangent_frame(path.start());
    let mut frames = Vec::with_capacity(path.points.len());
    let mut scale = Vec::with_capacity(path.points.len());
    frames.push(frame.clone());
    for (p, v) in path.points.iter().zip(&path.displacements) {
        model.exp_transport(p, v, &mut frame[..n]);
        frames.push(frame.clone());
    }
    for &t in &path.times {
        scale.push(node_rates(flow, path.direction, t)?.0);
    }
    let gauge = scale.iter().map(|c| (scale[0] / c).sqrt()).collect();
    Ok(TransportMap {
        direction: path.direction,
        times: path.times.clone(),
        gauge,
        scale,
        frames,
        model: model.clone(),
    })
}

/// `∫_0^t λ` along the path's metric family, in closed form through the
/// clock `∫ du/c` and `ln c`.
fn damping_integral(flow: &FlowSpec, direction: Direction, t: f64) -> Result<f64> {
    let ricci0 = (flow.dim() as f64 - 1.0) * flow.model.curvature();
    Ok(match direction {
        Direction::Forward => {
            ricci0 * flow.clock(0.0, t)? - (flow.scale_factor(t)? / flow.scale_factor(0.0)?).ln()
        }
        Direction::Backward { total } => {
            let s = direction.metric_time(t);
            ricci0 * flow.clock(s, total)?
                + (flow.scale_factor(total)? / flow.scale_factor(s)?).ln()
        }
    })
}

pub fn damped_transport(flow: &FlowSpec, path: &BrownianPath) -> Result<DampedTransport> {
    let transport = parallel_transport(flow, path)?;
    let mut damping = Vec::with_capacity(path.times.len());
    let mut w = 1.0;
    damping.push(w);
    for k in 0..path.steps() {
        let dt = path.times[k + 1] - path.times[k];
        let (_, lambda) = node_rates(flow, path.direction, path.times[k])?;
        w *= 1.0 - 0.5 * lambda * dt;
        damping.push(w);
    }
    let exact_damping = path
        .times
        .iter()
        .map(|&t| damping_integral(flow, path.direction, t).map(|i| (-0.5 * i).exp()))
        .collect::<Result<Vec<_>>>()?;
    Ok(DampedTransport {
        transport,
        damping,
        exact_damping,
    })
}
