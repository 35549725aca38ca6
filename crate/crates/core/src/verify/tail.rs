//! Weighted `L²` decay, the iterated tail bound and the resulting Gaussian
//! upper bound, for kernels from a pole under Ricci flow with `Ric ≥ 0`.

use serde::{Deserialize, Serialize};

use super::{check_positive_time, require_nonnegative_ricci_flow, BoundReport, QUADRATURE_BUDGET};
use crate::error::{FlowError, Result};
use crate::geometry::{FlowSpec, Model, Point};
use crate::kernel::{
    euclidean_extent, evolving_kernel_oracle, kernel_on_grid, radial_kernel, refine, Grid,
};
use crate::quadrature;

/// Relative tolerance of grid refinement for the weighted integrals.
pub const INTEGRAL_TOL: f64 = 1e-6;
const MAX_RATE_TERMS: u64 = 100_000_000;

/// Constants of the iteration over radii `r_k` and times `t_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrigoryanParams {
    /// Time ratio `a > 1` between iterates.
    pub a: f64,
    /// Scale `A ≥ 1` of the weight `-(r - d)²/(A(t_0 - t))`.
    pub weight_scale: f64,
    pub dim: usize,
    /// Volume doubling constant `a^{n/2}`.
    pub doubling: f64,
    /// `2e · a^{n/2}`.
    pub prefactor: f64,
    /// `min_i a^{i+1} / (A (a-1) (i+3)⁴ (i+2))`.
    pub rate: f64,
    /// Index attaining `rate`.
    pub rate_index: u64,
}

impl GrigoryanParams {
    pub fn new(a: f64, weight_scale: f64, dim: usize) -> Result<Self> {
        if !(a > 1.0 && a.is_finite()) {
            return Err(FlowError::invalid(format!(
                "time ratio a = {a} must exceed 1"
            )));
        }
        if !(weight_scale >= 1.0 && weight_scale.is_finite()) {
            return Err(FlowError::invalid(format!(
                "weight scale A = {weight_scale} must be at least 1"
            )));
        }
        let doubling = a.powf(0.5 * dim as f64);
        let (rate, rate_index) = minimize_rate(a, weight_scale)?;
        Ok(GrigoryanParams {
            a,
            weight_scale,
            dim,
            doubling,
            prefactor: 2.0 * std::f64::consts::E * doubling,
            rate,
            rate_index,
        })
    }

    /// `r_k = (½ + 1/(k+2)) r`, decreasing from `r` to `r/2`.
    pub fn radius(&self, k: u64, r: f64) -> f64 {
        (0.5 + 1.0 / (k as f64 + 2.0)) * r
    }

    /// `t_k = t / a^k`.
    pub fn time(&self, k: u64, t: f64) -> f64 {
        t / self.a.powf(k as f64)
    }

    pub fn rate_term(&self, i: u64) -> f64 {
        rate_term(self.a, self.weight_scale, i)
    }
}

fn rate_term(a: f64, weight_scale: f64, i: u64) -> f64 {
    let i = i as f64;
    ((i + 1.0) * a.ln() - (weight_scale * (a - 1.0) * (i + 2.0)).ln() - 4.0 * (i + 3.0).ln()).exp()
}

/// Scans `i = 0, 1, …` until the term ratio
/// `a ((i+3)/(i+4))⁴ (i+2)/(i+3)` reaches 1; the ratio increases with `i`,
/// so every later term is larger.
fn minimize_rate(a: f64, weight_scale: f64) -> Result<(f64, u64)> {
    let mut best = (rate_term(a, weight_scale, 0), 0);
    let mut i = 0u64;
    loop {
        let x = i as f64;
        let ratio = a * ((x + 3.0) / (x + 4.0)).powi(4) * (x + 2.0) / (x + 3.0);
        if ratio >= 1.0 {
            return Ok(best);
        }
        i += 1;
        let term = rate_term(a, weight_scale, i);
        if term < best.0 {
            best = (term, i);
        }
        if i > MAX_RATE_TERMS {
            return Err(FlowError::invalid(format!(
                "time ratio a = {a} is too close to 1"
            )));
        }
    }
}

fn grid_extent(model: &Model, s: f64) -> Option<f64> {
    matches!(model, Model::Euclidean { .. }).then(|| euclidean_extent(s))
}

/// `∫ f(t,·)² e^{ξ(·,t)} dμ_t` with `f(t,·) = P(·, t, pole, 0)`.
fn weighted_energy(
    flow: &FlowSpec,
    pole: &Point,
    centre: &Point,
    r: f64,
    t0: f64,
    weight_scale: f64,
    t: f64,
) -> Result<f64> {
    let model = &flow.model;
    let s = flow.clock(0.0, t)?;
    let scale = flow.scale_factor(t)?.sqrt();
    let denom = weight_scale * (t0 - t);
    let xi = |z: &Point| {
        let d = scale * model.distance(centre, z);
        if d < r {
            -(r - d) * (r - d) / denom
        } else {
            0.0
        }
    };
    let integral = refine(
        |level| {
            let grid = Grid::new(model, pole, grid_extent(model, s), level)?;
            let f = kernel_on_grid(model, s, pole, &grid);
            Ok(grid.integrate(|i, z| f[i] * f[i] * xi(z).exp()))
        },
        INTEGRAL_TOL,
        3,
    )?;
    Ok(flow.volume_ratio(t)? * integral)
}

/// `∫ f²(t_1) e^{ξ(t_1)} dμ_{t_1} ≤ e^{-(Λ(t_1) - Λ(t_2))} ∫ f²(t_2) e^{ξ(t_2)} dμ_{t_2}`
/// for `ξ(y, t) = -(r - d_t(x, y))²₊ / (A (t_0 - t))` and `f` the kernel from
/// `pole`, `Λ(t) = ∫_0^t inf R`.
#[allow(clippy::too_many_arguments)]
pub fn verify_weighted_decay(
    flow: &FlowSpec,
    centre: &Point,
    pole: &Point,
    r: f64,
    t0: f64,
    weight_scale: f64,
    t2: f64,
    t1: f64,
) -> Result<BoundReport> {
    require_nonnegative_ricci_flow(flow)?;
    if !(weight_scale >= 1.0) {
        return Err(FlowError::invalid(format!(
            "weight scale A = {weight_scale} must be at least 1"
        )));
    }
    if !(r > 0.0) {
        return Err(FlowError::invalid("radius must be positive"));
    }
    if !(0.0 < t2 && t2 <= t1 && t1 < t0) {
        return Err(FlowError::invalid(format!(
            "times must satisfy 0 < t2 ≤ t1 < t0, got ({t2}, {t1}, {t0})"
        )));
    }
    check_positive_time(flow, t0)?;
    let lhs = weighted_energy(flow, pole, centre, r, t0, weight_scale, t1)?;
    let earlier = if t1 == t2 {
        lhs
    } else {
        weighted_energy(flow, pole, centre, r, t0, weight_scale, t2)?
    };
    let lambda_gap = flow.scalar_curvature_integral(t2, t1)?;
    let rhs = (-lambda_gap).exp() * earlier;
    let params = vec![
        ("r".to_string(), r),
        ("A".to_string(), weight_scale),
        ("t0".to_string(), t0),
        ("t1".to_string(), t1),
        ("t2".to_string(), t2),
        ("lambda_gap".to_string(), lambda_gap),
    ];
    Ok(BoundReport::new(
        "weighted_decay",
        flow,
        &[("x", centre), ("x0", pole)],
        params,
        lhs,
        rhs,
        0.0,
        INTEGRAL_TOL * (lhs + rhs),
    ))
}

/// `∫_{d_0(pole, ·) > r0} f² dμ_0` for the clock-`s` kernel from `pole`.
fn outer_energy(model: &Model, s: f64, pole: &Point, r0: f64) -> Result<f64> {
    match model {
        Model::Euclidean { .. } | Model::Sphere { dim: 2, .. } => {
            let end = match model {
                Model::Sphere { .. } => std::f64::consts::PI * model.radius(),
                _ => r0 + euclidean_extent(s),
            };
            if r0 >= end {
                return Ok(0.0);
            }
            let g = |rho: f64| {
                let k = radial_kernel(model, s, rho);
                k * k * model.sphere_area(rho)
            };
            Ok(quadrature::adaptive(g, r0, end, 1e-14))
        }
        _ => refine(
            |level| {
                let grid = Grid::new(model, pole, None, level)?;
                let f = kernel_on_grid(model, s, pole, &grid);
                Ok(grid.integrate(|i, _| if grid.radii[i] > r0 { f[i] * f[i] } else { 0.0 }))
            },
            INTEGRAL_TOL,
            3,
        ),
    }
}

/// `I_r(t) = ∫_{M ∖ B_t(x_0, r)} f(t,·)² dμ_t ≤ q_a e^{∫(sup R - inf R)} / V_0(B_0(y, √t)) · e^{-m r²/t}`
/// with `f` the kernel from `x_0` and `m = m_{(a,A)}`.
pub fn grigoryan_tail(
    flow: &FlowSpec,
    x0: &Point,
    y: &Point,
    r: f64,
    t: f64,
    a: f64,
    weight_scale: f64,
) -> Result<BoundReport> {
    require_nonnegative_ricci_flow(flow)?;
    check_positive_time(flow, t)?;
    if !(r > 0.0) {
        return Err(FlowError::invalid("radius must be positive"));
    }
    let params_a = GrigoryanParams::new(a, weight_scale, flow.dim())?;
    let model = &flow.model;
    let s = flow.clock(0.0, t)?;
    let r0 = r / flow.scale_factor(t)?.sqrt();
    let lhs = flow.volume_ratio(t)? * outer_energy(model, s, x0, r0)?;
    // R is spatially constant, so sup R - inf R vanishes
    let volume = model.ball_volume(t.sqrt());
    let rhs = params_a.prefactor / volume * (-params_a.rate * r * r / t).exp();
    let params = vec![
        ("r".to_string(), r),
        ("t".to_string(), t),
        ("a".to_string(), a),
        ("A".to_string(), weight_scale),
        ("m_a".to_string(), params_a.rate),
        ("q_a".to_string(), params_a.prefactor),
    ];
    Ok(BoundReport::new(
        "grigoryan_tail",
        flow,
        &[("x0", x0), ("y", y)],
        params,
        lhs,
        rhs,
        0.0,
        INTEGRAL_TOL * (lhs + rhs),
    ))
}

/// `P(y_0, t, x_0, 0) ≤ q_a e^{∫_0^t (⅝ sup R - ¼ inf R)}
///   / √(V_0(B_0(x_0, √t)) V_0(B_0(y_0, √t))) · e^{-m_a d_t²/(16t)}`.
/// The note carries the alternative factor `e^{-d_t²/(m_a t)}`.
pub fn verify_gaussian(
    flow: &FlowSpec,
    x0: &Point,
    y0: &Point,
    t: f64,
    a: f64,
) -> Result<BoundReport> {
    require_nonnegative_ricci_flow(flow)?;
    check_positive_time(flow, t)?;
    let params_a = GrigoryanParams::new(a, 1.0, flow.dim())?;
    let model = &flow.model;
    let lhs = evolving_kernel_oracle(flow, t, y0, x0)?.value;
    let curvature = (0.625 - 0.25) * flow.scalar_curvature_integral(0.0, t)?;
    let v = model.ball_volume(t.sqrt());
    let base = params_a.prefactor * curvature.exp() / v;
    let d = flow.distance(t, x0, y0)?;
    let d2 = d * d;
    let rhs = base * (-params_a.rate * d2 / (16.0 * t)).exp();
    let alternative = base * (-d2 / (params_a.rate * t)).exp();
    let alt_verdict = if lhs <= alternative * (1.0 + QUADRATURE_BUDGET) {
        "pass"
    } else {
        "fail"
    };
    let params = vec![
        ("t".to_string(), t),
        ("a".to_string(), a),
        ("d_t2".to_string(), d2),
        ("m_a".to_string(), params_a.rate),
    ];
    Ok(BoundReport::new(
        "gaussian",
        flow,
        &[("x0", x0), ("y0", y0)],
        params,
        lhs,
        rhs,
        0.0,
        QUADRATURE_BUDGET * (lhs + rhs),
    )
    .with_note(format!(
        "exp(-d^2/(m_a t)) form: rhs={alternative} {alt_verdict}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{E, PI};

    /// Brute-force minimum over a long explicit range.
    fn brute_rate(a: f64) -> f64 {
        (0..2000)
            .map(|i| a.powi(i + 1) / ((a - 1.0) * ((i + 3) as f64).powi(4) * (i + 2) as f64))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn constants_for_a_two() {
        let p = GrigoryanParams::new(2.0, 1.0, 2).unwrap();
        assert_eq!(p.doubling, 2.0);
        assert_abs_diff_eq!(p.prefactor, 4.0 * E, epsilon = 1e-14);
        assert!((p.prefactor - 10.873).abs() < 5e-4);
        assert_eq!(p.rate_index, 4);
        assert_abs_diff_eq!(p.rate, 32.0 / (2401.0 * 6.0), epsilon = 1e-15);
        assert!((p.rate - 2.22e-3).abs() < 5e-6);
    }

    #[test]
    fn rate_matches_brute_force() {
        for a in [1.05, 1.3, 2.0, 3.0, 10.0] {
            let p = GrigoryanParams::new(a, 1.0, 3).unwrap();
            let brute = brute_rate(a);
            assert!(
                (p.rate - brute).abs() <= 1e-12 * brute,
                "{a}: {} vs {brute}",
                p.rate
            );
            for i in 0..=10_000u64 {
                let i_f = i as f64;
                let lhs = a.powf(i_f + 1.0) / ((a - 1.0) * (i_f + 3.0).powi(4));
                if lhs.is_finite() {
                    assert!(lhs >= p.rate * (i_f + 2.0) * (1.0 - 1e-12));
                }
            }
        }
        let wide = GrigoryanParams::new(2.0, 4.0, 2).unwrap();
        assert_abs_diff_eq!(wide.rate, 32.0 / (2401.0 * 6.0) / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn sequence_identities() {
        let p = GrigoryanParams::new(2.0, 1.0, 2).unwrap();
        let (r, t) = (1.3, 0.7);
        for i in 0..50u64 {
            let gap = p.radius(i, r) - p.radius(i + 1, r);
            let want = r / ((i as f64 + 3.0) * (i as f64 + 2.0));
            assert!((gap - want).abs() <= 4.0 * f64::EPSILON * r, "{i}");
            let tgap = p.time(i, t) - p.time(i + 1, t);
            let twant = t / 2f64.powi(i as i32) * 0.5;
            assert!((tgap - twant).abs() <= 4.0 * f64::EPSILON * twant.max(1e-300) + 1e-300);
        }
        assert_eq!(p.radius(0, r), r);
        assert!(GrigoryanParams::new(1.0, 1.0, 2).is_err());
        assert!(GrigoryanParams::new(2.0, 0.5, 2).is_err());
    }

    #[test]
    fn weighted_decay_equal_times() {
        let flow = FlowSpec::ricci(Model::sphere(2, 1.0), 0.9).unwrap();
        let pole = flow.model.origin();
        let r = verify_weighted_decay(&flow, &pole, &pole, 1.0, 0.3, 1.0, 0.2, 0.2).unwrap();
        assert_eq!(r.lhs, r.rhs);
        assert!(r.passed());
    }

    #[test]
    fn weighted_decay_sphere_instance() {
        let flow = FlowSpec::ricci(Model::sphere(2, 1.0), 0.9).unwrap();
        let pole = flow.model.origin();
        let r = verify_weighted_decay(&flow, &pole, &pole, 1.0, 0.3, 1.0, 0.1, 0.2).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn weighted_decay_flat_torus() {
        let flow = FlowSpec::static_flow(Model::flat_torus(vec![1.0, 1.0]), 1.0).unwrap();
        let pole = flow.model.point(&[0.5, 0.5]).unwrap();
        let centre = flow.model.point(&[0.6, 0.45]).unwrap();
        let r = verify_weighted_decay(&flow, &centre, &pole, 0.3, 0.2, 1.0, 0.02, 0.05).unwrap();
        assert_eq!(r.param("lambda_gap"), Some(0.0));
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn hypotheses_are_enforced() {
        let hyper = FlowSpec::ricci(Model::hyperbolic(2, -1.0), 1.0).unwrap();
        let o = hyper.model.origin();
        assert!(matches!(
            verify_weighted_decay(&hyper, &o, &o, 1.0, 0.3, 1.0, 0.1, 0.2),
            Err(FlowError::HypothesisFailed(_))
        ));
        assert!(matches!(
            grigoryan_tail(&hyper, &o, &o, 1.0, 0.3, 2.0, 1.0),
            Err(FlowError::HypothesisFailed(_))
        ));
        assert!(matches!(
            verify_gaussian(&hyper, &o, &o, 0.3, 2.0),
            Err(FlowError::HypothesisFailed(_))
        ));
        let static_sphere = FlowSpec::static_flow(Model::sphere(2, 1.0), 1.0).unwrap();
        let p = static_sphere.model.origin();
        assert!(matches!(
            verify_gaussian(&static_sphere, &p, &p, 0.3, 2.0),
            Err(FlowError::HypothesisFailed(_))
        ));
        let flow = FlowSpec::ricci(Model::sphere(2, 1.0), 0.9).unwrap();
        assert!(verify_weighted_decay(&flow, &p, &p, 1.0, 0.3, 0.5, 0.1, 0.2).is_err());
    }

    #[test]
    fn tail_on_sphere() {
        let flow = FlowSpec::ricci(Model::sphere(2, 1.0), 0.9).unwrap();
        let pole = flow.model.origin();
        let r = grigoryan_tail(&flow, &pole, &pole, 1.0, 0.3, 2.0, 1.0).unwrap();
        assert!(r.passed(), "{r:?}");
        // the whole-space energy is p_{2s}(x0, x0) · c^{n/2}
        let all = grigoryan_tail(&flow, &pole, &pole, 1e-12, 0.3, 2.0, 1.0).unwrap();
        let s = flow.clock(0.0, 0.3).unwrap();
        let energy = crate::kernel::unit_sphere_kernel(2.0 * s, 0.0) * 0.7;
        assert_abs_diff_eq!(all.lhs, energy, epsilon = 1e-9);
    }

    #[test]
    fn tail_on_line() {
        let flow = FlowSpec::static_flow(Model::euclidean(1), 2.0).unwrap();
        let x0 = flow.model.origin();
        let r = grigoryan_tail(&flow, &x0, &x0, 0.8, 0.5, 2.0, 1.0).unwrap();
        // 2∫_r^∞ p_t² = erfc(r/√t) / (2√(πt))
        let t: f64 = 0.5;
        let z = 0.8 / t.sqrt();
        let tail =
            crate::quadrature::adaptive(|u| (-u * u).exp(), z, z + 40.0, 1e-15) * 2.0 / PI.sqrt();
        assert_abs_diff_eq!(r.lhs, tail / (2.0 * (PI * t).sqrt()), epsilon = 1e-12);
        assert!(r.passed());
    }

    #[test]
    fn gaussian_on_sphere() {
        let flow = FlowSpec::ricci(Model::sphere(2, 1.0), 0.9).unwrap();
        let x0 = flow.model.origin();
        let same = verify_gaussian(&flow, &x0, &x0, 0.4, 2.0).unwrap();
        assert!(same.passed());
        let v = flow.model.ball_volume(0.4f64.sqrt());
        let expected =
            4.0 * E * (0.375 * flow.scalar_curvature_integral(0.0, 0.4).unwrap()).exp() / v;
        assert_abs_diff_eq!(same.rhs, expected, epsilon = 1e-12);
        let far = flow.model.point_at_distance(PI);
        let r = verify_gaussian(&flow, &x0, &far, 0.4, 2.0).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.note.contains("fail"), "{}", r.note);
    }
}
