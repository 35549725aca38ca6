//! Exact heat kernels of `½Δ_{g_0}`: closed form on euclidean space, a
//! Legendre series on the 2-sphere and a wrapped Gaussian on flat tori.

use std::f64::consts::PI;

use super::{KernelEstimate, KernelMethod};
use crate::error::{FlowError, Result};
use crate::geometry::{Model, Point};

/// Spectral tail bound required of the sphere series.
pub const SPHERE_TAIL: f64 = 1e-12;
/// Lattice terms below this (relative to the leading one) are dropped.
pub const WRAP_CUTOFF: f64 = 1e-14;

/// Whether [`exact_static_kernel`] covers `model`.
pub fn has_exact_kernel(model: &Model) -> bool {
    match model {
        Model::Euclidean { .. } | Model::FlatTorus { .. } => true,
        Model::Sphere { dim, .. } => *dim == 2,
        Model::Hyperbolic { .. } => false,
    }
}

pub(crate) fn require_exact(model: &Model, operation: &'static str) -> Result<()> {
    if has_exact_kernel(model) {
        Ok(())
    } else {
        Err(FlowError::UnsupportedModel {
            operation,
            model: model.label(),
        })
    }
}

/// `p_s(x, y)` for `∂_s p = ½Δ_{g_0} p`, a density w.r.t. `μ_0`.
pub fn exact_static_kernel(model: &Model, s: f64, x: &Point, y: &Point) -> Result<KernelEstimate> {
    require_exact(model, "exact_static_kernel")?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(FlowError::invalid(format!(
            "kernel time {s} must be positive"
        )));
    }
    let method = match model {
        Model::Euclidean { .. } => KernelMethod::ExactClosedForm,
        _ => KernelMethod::ExactSpectral,
    };
    Ok(KernelEstimate {
        value: static_kernel_unchecked(model, s, x, y),
        std_err: 0.0,
        n_paths: 0,
        method,
    })
}

/// Kernel value without argument checks (model supported, `s > 0`).
pub(crate) fn static_kernel_unchecked(model: &Model, s: f64, x: &Point, y: &Point) -> f64 {
    match model {
        Model::FlatTorus { periods } => periods
            .iter()
            .enumerate()
            .map(|(i, l)| wrapped_gaussian(s, y.0[i] - x.0[i], *l))
            .product(),
        _ => radial_kernel(model, s, model.distance(x, y)),
    }
}

/// Kernel as a function of the `g_0` distance (euclidean and sphere).
pub(crate) fn radial_kernel(model: &Model, s: f64, d0: f64) -> f64 {
    match model {
        Model::Euclidean { dim } => {
            (2.0 * PI * s).powf(-0.5 * *dim as f64) * (-d0 * d0 / (2.0 * s)).exp()
        }
        Model::Sphere { curvature, .. } => {
            let rho = model.radius();
            curvature * unit_sphere_kernel(curvature * s, d0 / rho)
        }
        _ => unreachable!("radial kernels exist for euclidean and 2-sphere models only"),
    }
}

/// Heat kernel of `½Δ` on the unit 2-sphere at time `sigma` and angle `theta`:
/// `Σ_l (2l+1)/(4π) e^{-l(l+1)σ/2} P_l(cos θ)`, truncated once the tail bound
/// drops below [`SPHERE_TAIL`].
pub fn unit_sphere_kernel(sigma: f64, theta: f64) -> f64 {
    // Far from the diagonal at tiny times the series only cancels to rounding
    // noise; the true value is below e^{-80}/σ.
    if theta * theta > 160.0 * sigma {
        return 0.0;
    }
    let last = sphere_truncation(sigma);
    let z = theta.cos();
    let (mut p0, mut p1) = (1.0, z);
    let mut sum = 1.0;
    for l in 1..=last {
        let p = if l == 1 {
            p1
        } else {
            let lf = l as f64;
            let p2 = ((2.0 * lf - 1.0) * z * p1 - (lf - 1.0) * p0) / lf;
            p0 = p1;
            p1 = p2;
            p2
        };
        let lf = l as f64;
        sum += (2.0 * lf + 1.0) * (-0.5 * lf * (lf + 1.0) * sigma).exp() * p;
    }
    sum / (4.0 * PI)
}

/// Smallest `L` whose neglected tail `Σ_{l>L}` is provably below
/// [`SPHERE_TAIL`]: terms are bounded by `(2l+1) e^{-l(l+1)σ/2}/(4π)` and
/// their successive ratios decrease from `(2L+5)/(2L+3) e^{-(L+2)σ}`.
pub fn sphere_truncation(sigma: f64) -> usize {
    let mut l = 0usize;
    loop {
        let lf = l as f64;
        let log_first =
            (2.0 * lf + 3.0).ln() - 0.5 * (lf + 1.0) * (lf + 2.0) * sigma - (4.0 * PI).ln();
        let ratio = (2.0 * lf + 5.0) / (2.0 * lf + 3.0) * (-(lf + 2.0) * sigma).exp();
        if ratio < 1.0 && log_first - (1.0 - ratio).ln() < SPHERE_TAIL.ln() {
            return l;
        }
        l += 1;
    }
}

/// 1-d heat kernel on a circle of length `period`: Gaussian images
/// `Σ_m (2πs)^{-1/2} e^{-(d + m L)²/(2s)}`.
pub fn wrapped_gaussian(s: f64, d: f64, period: f64) -> f64 {
    let d = d - period * (d / period).round();
    let norm = (2.0 * PI * s).sqrt();
    let term = |m: f64| (-(d + m * period).powi(2) / (2.0 * s)).exp();
    let mut sum = term(0.0);
    let lead = sum.max(f64::MIN_POSITIVE);
    let mut m = 1.0;
    loop {
        let t = term(m) + term(-m);
        sum += t;
        // images beyond |m| ≥ 1 decay monotonically
        if t < WRAP_CUTOFF * lead && m * period > d.abs() {
            break;
        }
        m += 1.0;
    }
    sum / norm
}

/// The same circle kernel from its eigenfunction expansion
/// `(1/L)(1 + 2 Σ_j e^{-2π²j²s/L²} cos(2πjd/L))`.
pub fn circle_eigen_kernel(s: f64, d: f64, period: f64) -> f64 {
    let mut sum = 1.0;
    let mut j = 1.0;
    loop {
        let decay = (-2.0 * PI * PI * j * j * s / (period * period)).exp();
        if decay < 1e-17 {
            break;
        }
        sum += 2.0 * decay * (2.0 * PI * j * d / period).cos();
        j += 1.0;
    }
    sum / period
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use approx::assert_abs_diff_eq;

    #[test]
    fn euclidean_closed_form() {
        let m = Model::euclidean(1);
        let x = m.origin();
        let k = exact_static_kernel(&m, 1.0, &x, &x).unwrap();
        assert_abs_diff_eq!(k.value, 0.398_942_280_401_432_7, epsilon = 1e-15);
        assert_eq!(k.std_err, 0.0);
        let m2 = Model::euclidean(2);
        let y = m2.point(&[1.0, 0.0]).unwrap();
        let v = exact_static_kernel(&m2, 1.0, &m2.origin(), &y)
            .unwrap()
            .value;
        assert_abs_diff_eq!(v, (-0.5f64).exp() / (2.0 * PI), epsilon = 1e-15);
    }

    #[test]
    fn sphere_equilibrium_and_mass() {
        let m = Model::sphere(2, 1.0);
        let x = m.origin();
        let far = m.point_at_distance(2.0);
        for p in [x, far] {
            let v = exact_static_kernel(&m, 40.0, &x, &p).unwrap().value;
            assert_abs_diff_eq!(v, 1.0 / (4.0 * PI), epsilon = 1e-15);
        }
        // mass: 2π ∫ p(θ) sin θ dθ = 1
        let rule = GaussLegendre::new(20);
        for sigma in [0.01, 0.3, 2.0] {
            let mass = 2.0
                * PI
                * rule.composite(|th| unit_sphere_kernel(sigma, th) * th.sin(), 0.0, PI, 200);
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn sphere_small_time_matches_flat_kernel() {
        // θ/sin θ correction is negligible at θ = 0
        let sigma = 1e-3;
        let v = unit_sphere_kernel(sigma, 0.0);
        let flat = 1.0 / (2.0 * PI * sigma);
        // p(0) = (1/2πσ)(1 + σ/6 + O(σ²))
        assert!((v / flat - 1.0 - sigma / 6.0).abs() < 1e-5);
    }

    #[test]
    fn sphere_curvature_scaling() {
        // sphere of curvature k: p^k_s(θρ) = k p^1_{ks}(θ)
        let m = Model::sphere(2, 4.0);
        let x = m.origin();
        let y = m.point_at_distance(0.3);
        let v = exact_static_kernel(&m, 0.05, &x, &y).unwrap().value;
        assert_abs_diff_eq!(v, 4.0 * unit_sphere_kernel(0.2, 0.6), epsilon = 1e-14);
    }

    #[test]
    fn torus_two_series_agree() {
        for (s, d) in [(0.1, 0.5), (0.01, 0.2), (0.5, 0.05), (0.1, 0.37)] {
            let a = wrapped_gaussian(s, d, 1.0);
            let b = circle_eigen_kernel(s, d, 1.0);
            assert!((a - b).abs() <= 1e-10, "{s} {d}: {a} vs {b}");
        }
        let m = Model::flat_torus(vec![1.0]);
        let x = m.point(&[0.0]).unwrap();
        let y = m.point(&[0.5]).unwrap();
        let v = exact_static_kernel(&m, 0.1, &x, &y).unwrap().value;
        assert_abs_diff_eq!(v, circle_eigen_kernel(0.1, 0.5, 1.0), epsilon = 1e-10);
    }

    #[test]
    fn hyperbolic_unsupported() {
        let m = Model::hyperbolic(2, -1.0);
        let x = m.origin();
        assert!(matches!(
            exact_static_kernel(&m, 1.0, &x, &x),
            Err(FlowError::UnsupportedModel { .. })
        ));
        assert!(exact_static_kernel(
            &Model::euclidean(1),
            0.0,
            &Model::euclidean(1).origin(),
            &Model::euclidean(1).origin()
        )
        .is_err());
    }
}
