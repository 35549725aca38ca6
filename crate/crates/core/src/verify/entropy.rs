//! Entropy estimate `f(t,x) ≤ √f(t,y) √M_{t/2} e^{d_t²(x,y)/t}` for the
//! kernel from a pole.

use serde::{Deserialize, Serialize};

use super::{check_positive_time, BoundReport, QUADRATURE_BUDGET};
use crate::error::{FlowError, Result};
use crate::geometry::{Coords, FlowSpec, Model, Point};
use crate::kernel::{has_exact_kernel, radial_kernel, static_kernel_unchecked};

/// Relative change at which the sup grid stops doubling.
pub const SUP_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonContext {
    pub t: f64,
    /// `sup f(t/2, ·)` over the final evaluation grid.
    pub m_half: f64,
    pub grid_nodes: usize,
}

impl HamiltonContext {
    /// Sup of the kernel from `pole` at time `t/2`, from grids doubled until
    /// the maximum changes by less than [`SUP_TOL`].
    pub fn new(flow: &FlowSpec, pole: &Point, t: f64) -> Result<Self> {
        check_positive_time(flow, t)?;
        if !has_exact_kernel(&flow.model) {
            return Err(FlowError::UnsupportedModel {
                operation: "verify_hamilton",
                model: flow.model.label(),
            });
        }
        let s = flow.clock(0.0, 0.5 * t)?;
        let model = &flow.model;
        let mut nodes = 64usize;
        let mut prev = grid_max(model, s, pole, nodes);
        loop {
            nodes *= 2;
            let next = grid_max(model, s, pole, nodes);
            let settled = (next - prev).abs() <= SUP_TOL * next.abs();
            prev = next.max(prev);
            if settled || nodes >= 1 << 16 {
                break;
            }
        }
        Ok(HamiltonContext {
            t,
            m_half: prev,
            grid_nodes: nodes,
        })
    }

    /// Interpolating weight `h(s) = (t/2 - s)/2` of the entropy argument.
    pub fn weight(&self, s: f64) -> f64 {
        0.5 * (0.5 * self.t - s)
    }
}

/// Max of the clock-`s` kernel from `pole` on a uniform grid with `nodes`
/// cells per direction.
fn grid_max(model: &Model, s: f64, pole: &Point, nodes: usize) -> f64 {
    match model {
        Model::FlatTorus { periods } => {
            let d = periods.len();
            let total = nodes.pow(d as u32);
            let mut best = 0.0f64;
            for idx in 0..total {
                let mut rest = idx;
                let mut c = Coords::zeros(d);
                for (i, l) in periods.iter().enumerate() {
                    c[i] = (pole.0[i] + l * (rest % nodes) as f64 / nodes as f64).rem_euclid(*l);
                    rest /= nodes;
                }
                best = best.max(static_kernel_unchecked(model, s, pole, &Point(c)));
            }
            best
        }
        _ => {
            let reach = match model {
                Model::Sphere { .. } => std::f64::consts::PI * model.radius(),
                _ => crate::kernel::euclidean_extent(s),
            };
            (0..=nodes)
                .map(|j| radial_kernel(model, s, reach * j as f64 / nodes as f64))
                .fold(0.0, f64::max)
        }
    }
}

/// `f(t, ·) = P(·, t, pole, 0)`. Needs `Ric + α ≥ 0` on `[0, t]`.
pub fn verify_hamilton(
    flow: &FlowSpec,
    pole: &Point,
    t: f64,
    x: &Point,
    y: &Point,
) -> Result<BoundReport> {
    check_positive_time(flow, t)?;
    let c_tilde = flow.curvature_bounds((0.0, t))?.c_tilde;
    if c_tilde < 0.0 {
        return Err(FlowError::HypothesisFailed(format!(
            "Ric + α ≥ {c_tilde} on [0, {t}]; the entropy estimate needs Ric + α ≥ 0"
        )));
    }
    let ctx = HamiltonContext::new(flow, pole, t)?;
    let s = flow.clock(0.0, t)?;
    let model = &flow.model;
    let fx = static_kernel_unchecked(model, s, pole, x);
    let fy = static_kernel_unchecked(model, s, pole, y);
    let d = flow.distance(t, x, y)?;
    let rhs = fy.sqrt() * ctx.m_half.sqrt() * (d * d / t).exp();
    let params = vec![
        ("t".to_string(), t),
        ("d_t".to_string(), d),
        ("m_half".to_string(), ctx.m_half),
    ];
    Ok(BoundReport::new(
        "hamilton",
        flow,
        &[("x0", pole), ("x", x), ("y", y)],
        params,
        fx,
        rhs,
        0.0,
        QUADRATURE_BUDGET * (fx + rhs),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::evolving_kernel_oracle;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn sup_sits_at_the_pole() {
        let flow = FlowSpec::ricci(Model::sphere(2, 1.0), 0.9).unwrap();
        let pole = flow.model.origin();
        let ctx = HamiltonContext::new(&flow, &pole, 0.5).unwrap();
        let at_pole = evolving_kernel_oracle(&flow, 0.25, &pole, &pole)
            .unwrap()
            .value;
        assert_abs_diff_eq!(ctx.m_half, at_pole, epsilon = 1e-12);
        assert_abs_diff_eq!(ctx.weight(0.0), 0.125, epsilon = 1e-15);
        assert_eq!(ctx.weight(0.25), 0.0);
    }

    #[test]
    fn torus_sup() {
        let flow = FlowSpec::static_flow(Model::flat_torus(vec![1.0, 1.0]), 1.0).unwrap();
        let pole = flow.model.point(&[0.3, 0.6]).unwrap();
        let ctx = HamiltonContext::new(&flow, &pole, 0.2).unwrap();
        let peak = static_kernel_unchecked(&flow.model, 0.1, &pole, &pole);
        assert_abs_diff_eq!(ctx.m_half, peak, epsilon = 1e-12);
    }

    #[test]
    fn contraction_case() {
        let flow = FlowSpec::static_flow(Model::sphere(2, 1.0), 1.0).unwrap();
        let pole = flow.model.origin();
        let x = flow.model.point_at_distance(0.7);
        let r = verify_hamilton(&flow, &pole, 0.5, &x, &x).unwrap();
        assert!(r.lhs <= r.param("m_half").unwrap());
        assert!(r.passed());
    }

    #[test]
    fn antipode_instance() {
        let flow = FlowSpec::static_flow(Model::sphere(2, 1.0), 1.0).unwrap();
        let pole = flow.model.origin();
        let anti = flow.model.point_at_distance(PI);
        let r = verify_hamilton(&flow, &pole, 0.5, &anti, &pole).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = verify_hamilton(&flow, &pole, 0.5, &pole, &anti).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn refuses_negative_ricci_plus_alpha() {
        let flow = FlowSpec::static_flow(Model::hyperbolic(2, -1.0), 1.0).unwrap();
        let o = flow.model.origin();
        assert!(matches!(
            verify_hamilton(&flow, &o, 0.5, &o, &o),
            Err(FlowError::HypothesisFailed(_))
        ));
    }
}
