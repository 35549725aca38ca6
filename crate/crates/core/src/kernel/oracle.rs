//! Exact kernels of the evolving heat equation and quadrature against them.
//!
//! On `g(t) = c(t) g_0` the heat equation `∂_t f = ½Δ_{g(t)} f` is the static
//! one run on the clock `s(t) = ∫_0^t du/c(u)`, so
//! `P(x, t, y, τ) = p_{s(t) - s(τ)}(x, y) / c(τ)^{n/2}` w.r.t. `μ_τ`.

use std::f64::consts::PI;

use super::exact::{radial_kernel, require_exact, static_kernel_unchecked};
use super::{KernelEstimate, KernelMethod};
use crate::error::{FlowError, Result};
use crate::geometry::{Coords, FlowSpec, Model, Point};
use crate::parallel;
use crate::quadrature::GaussLegendre;

/// `P(x, t, y, 0)`, a density w.r.t. `μ_0`.
pub fn evolving_kernel_oracle(
    flow: &FlowSpec,
    t: f64,
    x: &Point,
    y: &Point,
) -> Result<KernelEstimate> {
    kernel_between(flow, x, t, y, 0.0)
}

/// `P(x, t, y, τ)` for `τ < t`, a density w.r.t. `μ_τ`.
pub fn kernel_between(
    flow: &FlowSpec,
    x: &Point,
    t: f64,
    y: &Point,
    tau: f64,
) -> Result<KernelEstimate> {
    require_exact(&flow.model, "evolving_kernel_oracle")?;
    if !(tau < t) {
        return Err(FlowError::invalid(format!(
            "kernel needs τ = {tau} < t = {t}"
        )));
    }
    let s = flow.clock(tau, t)?;
    let value = static_kernel_unchecked(&flow.model, s, x, y) / flow.volume_ratio(tau)?;
    Ok(KernelEstimate {
        value,
        std_err: 0.0,
        n_paths: 0,
        method: KernelMethod::TimeChangeOracle,
    })
}

/// Exact bias of a heat-kernel KDE of `g_0`-bandwidth `h`: the bump is
/// `p_{h²}`, so the estimator targets `p_{s + h²}` instead of `p_s`.
pub fn kde_bias(flow: &FlowSpec, t: f64, x: &Point, y: &Point, bandwidth: f64) -> Result<f64> {
    require_exact(&flow.model, "kde_bias")?;
    let s = flow.clock(0.0, t)?;
    let smoothed = static_kernel_unchecked(&flow.model, s + bandwidth * bandwidth, x, y);
    Ok((smoothed - static_kernel_unchecked(&flow.model, s, x, y)).abs())
}

/// Quadrature nodes with `μ_0` weights, laid out around `center`.
#[derive(Clone, Debug)]
pub struct Grid {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// `g_0` distance of each node from the center.
    pub radii: Vec<f64>,
}

impl Grid {
    /// Nodes covering the whole model (compact) or the ball of radius
    /// `extent` (euclidean). `level` doubles the resolution per increment.
    pub fn new(model: &Model, center: &Point, extent: Option<f64>, level: u32) -> Result<Grid> {
        let mul = 1usize << level;
        let unsupported = || FlowError::UnsupportedModel {
            operation: "quadrature grid",
            model: model.label(),
        };
        let rule = GaussLegendre::new(8);
        let mut grid = Grid {
            points: Vec::new(),
            weights: Vec::new(),
            radii: Vec::new(),
        };
        match model {
            Model::Euclidean { dim: 1 } => {
                let r =
                    extent.ok_or_else(|| FlowError::invalid("euclidean grids need an extent"))?;
                for (u, w) in panels(&rule, -r, r, 100 * mul) {
                    grid.push(Point(Coords::from_slice(&[center.0[0] + u])), w, u.abs());
                }
            }
            Model::Euclidean { dim: 2 } => {
                let r =
                    extent.ok_or_else(|| FlowError::invalid("euclidean grids need an extent"))?;
                let radial = panels(&rule, 0.0, r, 60 * mul);
                let angles = 128 * mul;
                for (rr, wr) in &radial {
                    for j in 0..angles {
                        let phi = 2.0 * PI * j as f64 / angles as f64;
                        let p = Coords::from_slice(&[
                            center.0[0] + rr * phi.cos(),
                            center.0[1] + rr * phi.sin(),
                        ]);
                        grid.push(Point(p), wr * rr * 2.0 * PI / angles as f64, *rr);
                    }
                }
            }
            Model::Sphere { dim: 2, .. } => {
                let rho = model.radius();
                let frame = model.tangent_frame(center);
                let polar = panels(&rule, 0.0, PI, 80 * mul);
                let angles = 128 * mul;
                for (th, wt) in &polar {
                    let (st, ct) = th.sin_cos();
                    for j in 0..angles {
                        let phi = 2.0 * PI * j as f64 / angles as f64;
                        let dir = frame[0].scale(phi.cos()).axpy(phi.sin(), &frame[1]);
                        let mut p = center.0.scale(ct).axpy(st, &dir);
                        p = p.scale(1.0 / p.norm());
                        grid.push(
                            Point(p),
                            wt * rho * rho * st * 2.0 * PI / angles as f64,
                            rho * th,
                        );
                    }
                }
            }
            Model::FlatTorus { periods } if periods.len() <= 2 => {
                let axes: Vec<Vec<(f64, f64)>> = periods
                    .iter()
                    .map(|l| {
                        panels(
                            &rule,
                            -0.5 * l,
                            0.5 * l,
                            if periods.len() == 1 { 100 } else { 40 } * mul,
                        )
                    })
                    .collect();
                let wrap = |v: f64, l: f64| v.rem_euclid(l);
                if periods.len() == 1 {
                    for (u, w) in &axes[0] {
                        let p = Coords::from_slice(&[wrap(center.0[0] + u, periods[0])]);
                        grid.push(Point(p), *w, u.abs());
                    }
                } else {
                    for (u, wu) in &axes[0] {
                        for (v, wv) in &axes[1] {
                            let p = Coords::from_slice(&[
                                wrap(center.0[0] + u, periods[0]),
                                wrap(center.0[1] + v, periods[1]),
                            ]);
                            grid.push(Point(p), wu * wv, u.hypot(*v));
                        }
                    }
                }
            }
            _ => return Err(unsupported()),
        }
        Ok(grid)
    }

    fn push(&mut self, p: Point, w: f64, r: f64) {
        self.points.push(p);
        self.weights.push(w);
        self.radii.push(r);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Σ w_i g(z_i)`, with `g` evaluated in parallel and summed in order.
    pub fn integrate<G: Fn(usize, &Point) -> f64 + Sync + Send>(&self, g: G) -> f64 {
        let idx: Vec<usize> = (0..self.len()).collect();
        let vals = parallel::map_slice(&idx, |&i| self.weights[i] * g(i, &self.points[i]));
        vals.iter().sum()
    }
}

fn panels(rule: &GaussLegendre, a: f64, b: f64, count: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / count as f64;
    (0..count)
        .flat_map(|k| {
            let lo = a + k as f64 * h;
            rule.mapped(lo, lo + h).collect::<Vec<_>>()
        })
        .collect()
}

/// Repeats `compute(level)` with doubled resolution until the relative
/// change drops below `tol` (at most `max_level` refinements).
pub fn refine<F: FnMut(u32) -> Result<f64>>(
    mut compute: F,
    tol: f64,
    max_level: u32,
) -> Result<f64> {
    let mut prev = compute(0)?;
    for level in 1..=max_level {
        let next = compute(level)?;
        if (next - prev).abs() <= tol * next.abs().max(1e-300) {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

/// Kernel from the grid center `pole` at clock `s` on every node; radial
/// kernels are evaluated once per ring.
pub(crate) fn kernel_on_grid(model: &Model, s: f64, pole: &Point, grid: &Grid) -> Vec<f64> {
    if let Model::FlatTorus { .. } = model {
        return grid
            .points
            .iter()
            .map(|z| static_kernel_unchecked(model, s, pole, z))
            .collect();
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut last = (f64::NAN, 0.0);
    for &r in &grid.radii {
        if r != last.0 {
            last = (r, radial_kernel(model, s, r));
        }
        out.push(last.1);
    }
    out
}

/// Radius beyond which a euclidean kernel of clock time `s` is negligible.
pub(crate) fn euclidean_extent(s: f64) -> f64 {
    14.0 * s.sqrt()
}

/// `P_{0,t} f(x) = ∫ f(z) P(x, t, z, 0) dμ_0(z)` by quadrature.
pub fn oracle_expectation<F: Fn(&Point) -> f64 + Sync + Send>(
    flow: &FlowSpec,
    t: f64,
    x: &Point,
    f: F,
) -> Result<f64> {
    require_exact(&flow.model, "oracle_expectation")?;
    if t == 0.0 {
        return Ok(f(x));
    }
    let s = flow.clock(0.0, t)?;
    let model = &flow.model;
    if let Model::Euclidean { dim: 1 } = model {
        // 1-d integrands may jump (indicators), so go adaptive
        let r = euclidean_extent(s);
        let g = |u: f64| {
            f(&Point(Coords::from_slice(&[x.0[0] + u]))) * radial_kernel(model, s, u.abs())
        };
        return Ok(crate::quadrature::adaptive(g, -r, 0.0, 1e-12)
            + crate::quadrature::adaptive(g, 0.0, r, 1e-12));
    }
    let extent = matches!(model, Model::Euclidean { .. }).then(|| euclidean_extent(s));
    refine(
        |level| {
            let grid = Grid::new(model, x, extent, level)?;
            let kernel = kernel_on_grid(model, s, x, &grid);
            Ok(grid.integrate(|i, z| f(z) * kernel[i]))
        },
        1e-9,
        2,
    )
}

/// `‖f‖_{L^p(μ_0)}` by quadrature; euclidean domains are grown until the
/// integral settles, and [`FlowError::NonIntegrable`] is returned if it does not.
pub fn lp_norm<F: Fn(&Point) -> f64 + Sync + Send>(model: &Model, f: F, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(FlowError::invalid("L^p norms need p ≥ 1"));
    }
    let g = |z: &Point| f(z).abs().powf(p);
    let origin = model.origin();
    let total = match model {
        Model::Euclidean { dim: 1 } => {
            let on = |r: f64| {
                crate::quadrature::adaptive(|u| g(&Point(Coords::from_slice(&[u]))), -r, r, 1e-12)
            };
            let (a, b) = (on(20.0), on(40.0));
            if !b.is_finite() || (b - a).abs() > 1e-9 * b.abs().max(1e-300) {
                return Err(FlowError::NonIntegrable(format!(
                    "|f|^{p} does not settle on growing intervals"
                )));
            }
            b
        }
        Model::Euclidean { .. } => {
            let on = |r: f64| {
                Grid::new(model, &origin, Some(r), 1).map(|grid| grid.integrate(|_, z| g(z)))
            };
            let (a, b) = (on(20.0)?, on(40.0)?);
            if !b.is_finite() || (b - a).abs() > 1e-6 * b.abs().max(1e-300) {
                return Err(FlowError::NonIntegrable(format!(
                    "|f|^{p} does not settle on growing discs"
                )));
            }
            b
        }
        _ => refine(
            |level| Ok(Grid::new(model, &origin, None, level)?.integrate(|_, z| g(z))),
            1e-9,
            2,
        )?,
    };
    if !total.is_finite() {
        return Err(FlowError::NonIntegrable("integral is not finite".into()));
    }
    Ok(total.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::exact::exact_static_kernel;
    use approx::assert_abs_diff_eq;

    fn flows() -> Vec<(FlowSpec, f64)> {
        vec![
            (
                FlowSpec::static_flow(Model::euclidean(1), 1.0).unwrap(),
                0.6,
            ),
            (
                FlowSpec::static_flow(Model::euclidean(2), 1.0).unwrap(),
                0.6,
            ),
            (
                FlowSpec::static_flow(Model::sphere(2, 1.0), 1.0).unwrap(),
                0.6,
            ),
            (FlowSpec::ricci(Model::sphere(2, 1.0), 0.9).unwrap(), 0.5),
            (
                FlowSpec::static_flow(Model::flat_torus(vec![1.0]), 1.0).unwrap(),
                0.2,
            ),
            (
                FlowSpec::static_flow(Model::flat_torus(vec![1.0, 1.5]), 1.0).unwrap(),
                0.2,
            ),
        ]
    }

    #[test]
    fn ricci_time_change() {
        let flow = FlowSpec::ricci(Model::sphere(2, 1.0), 0.9).unwrap();
        assert_abs_diff_eq!(flow.clock(0.0, 0.5).unwrap(), 2f64.ln(), epsilon = 1e-15);
        let x = flow.model.origin();
        let a = evolving_kernel_oracle(&flow, 0.5, &x, &x).unwrap().value;
        let b = exact_static_kernel(&flow.model, 2f64.ln(), &x, &x)
            .unwrap()
            .value;
        assert_eq!(a, b);
    }

    #[test]
    fn static_flow_reduces_to_static_kernel() {
        let flow = FlowSpec::static_flow(Model::euclidean(2), 1.0).unwrap();
        let x = flow.model.origin();
        let y = flow.model.point(&[0.3, 0.4]).unwrap();
        let a = evolving_kernel_oracle(&flow, 0.7, &x, &y).unwrap().value;
        let b = exact_static_kernel(&flow.model, 0.7, &x, &y).unwrap().value;
        assert_abs_diff_eq!(a, b, epsilon = 1e-15);
    }

    #[test]
    fn unit_mass() {
        for (flow, t) in flows() {
            let x = flow.model.offset(&flow.model.origin(), 0.1, 0.2);
            let m = oracle_expectation(&flow, t, &x, |_| 1.0).unwrap();
            assert_abs_diff_eq!(m, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn chapman_kolmogorov() {
        for (flow, t) in flows() {
            let model = &flow.model;
            let x = model.offset(&model.origin(), 0.05, -0.1);
            let y = model.offset(&x, 0.3, 0.2);
            let half = 0.5 * t;
            let target = evolving_kernel_oracle(&flow, t, &x, &y).unwrap().value;
            let ratio = flow.volume_ratio(half).unwrap();
            let extent = matches!(model, Model::Euclidean { .. })
                .then(|| euclidean_extent(flow.clock(0.0, t).unwrap()));
            let glued = refine(
                |level| {
                    let grid = Grid::new(model, &x, extent, level)?;
                    Ok(grid.integrate(|_, z| {
                        let a = kernel_between(&flow, &x, t, z, half).unwrap().value;
                        let b = evolving_kernel_oracle(&flow, half, z, &y).unwrap().value;
                        // dμ_{t/2} = ratio · dμ_0
                        a * b * ratio
                    }))
                },
                1e-10,
                2,
            )
            .unwrap();
            assert!(
                (glued - target).abs() <= 1e-6,
                "{}: {glued} vs {target}",
                flow.label()
            );
        }
    }

    #[test]
    fn semigroup_of_first_harmonic() {
        // z-coordinate decays as e^{-s} under ½Δ on the unit sphere
        let flow = FlowSpec::static_flow(Model::sphere(2, 1.0), 1.0).unwrap();
        let x = flow.model.origin();
        let v = oracle_expectation(&flow, 1.0, &x, |p| p.0[0]).unwrap();
        assert_abs_diff_eq!(v, (-1f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn lp_norms() {
        let sphere = Model::sphere(2, 1.0);
        assert_abs_diff_eq!(
            lp_norm(&sphere, |_| 1.0, 2.0).unwrap(),
            (4.0 * PI).sqrt(),
            epsilon = 1e-9
        );
        // ∫ z² over the unit sphere = 4π/3
        assert_abs_diff_eq!(
            lp_norm(&sphere, |p| p.0[0], 2.0).unwrap(),
            (4.0 * PI / 3.0).sqrt(),
            epsilon = 1e-9
        );
        let line = Model::euclidean(1);
        let bump = |p: &Point| (-0.5 * p.0[0] * p.0[0]).exp();
        assert_abs_diff_eq!(
            lp_norm(&line, bump, 2.0).unwrap(),
            PI.sqrt().sqrt(),
            epsilon = 1e-10
        );
        assert!(matches!(
            lp_norm(&line, |_| 1.0, 2.0),
            Err(FlowError::NonIntegrable(_))
        ));
    }
}
