//! Harnack inequality with power and the `L^p → L^∞` bound it implies.

use super::{check_positive_time, check_power, BoundReport, Estimator, Options, TestFunction};
use crate::error::Result;
use crate::geometry::{decay_integral, FlowSpec, Point};
use crate::kernel::{lp_norm, oracle_expectation, semigroup_mc};
use crate::rng::derive_seed;

/// `P_{0,T} g(x)` with its standard error.
fn expectation<G: Fn(&Point) -> f64 + Sync + Send>(
    flow: &FlowSpec,
    horizon: f64,
    x: &Point,
    g: G,
    estimator: &Estimator,
    tag: &str,
) -> Result<(f64, f64)> {
    match estimator {
        Estimator::Oracle => Ok((oracle_expectation(flow, horizon, x, g)?, 0.0)),
        Estimator::MonteCarlo {
            n_paths,
            step,
            seed,
            ..
        } => {
            let e = semigroup_mc(
                flow,
                g,
                x,
                horizon,
                *n_paths,
                *step,
                derive_seed(*seed, tag),
            )?;
            Ok((e.value, e.std_err))
        }
    }
}

/// `|P_T f|^p(x) ≤ exp(p/(2(p-1)) · d_T²/T² · φ(C̃, T)) · P_T|f|^p(y)`,
/// `φ(C, T) = (1 - e^{-CT})/C`.
#[allow(clippy::too_many_arguments)]
pub fn verify_harnack(
    flow: &FlowSpec,
    f0: &TestFunction,
    x: &Point,
    y: &Point,
    horizon: f64,
    p: f64,
    opts: &Options,
) -> Result<BoundReport> {
    check_power(p)?;
    check_positive_time(flow, horizon)?;
    let model = &flow.model;
    let c_tilde = match opts.overrides.c_tilde {
        Some(v) => v,
        None => flow.curvature_bounds((0.0, horizon))?.c_tilde,
    };
    let d = flow.distance(horizon, x, y)?;
    let exponent =
        p / (2.0 * (p - 1.0)) * d * d / (horizon * horizon) * decay_integral(c_tilde, horizon);

    let (pf, pf_err) = expectation(
        flow,
        horizon,
        x,
        |z| f0.eval(model, z),
        &opts.estimator,
        "harnack-x",
    )?;
    let (pfp, pfp_err) = expectation(
        flow,
        horizon,
        y,
        |z| f0.eval(model, z).abs().powf(p),
        &opts.estimator,
        "harnack-y",
    )?;
    let lhs = pf.abs().powf(p);
    let rhs = exponent.exp() * pfp;
    // delta method for |m|^p
    let lhs_err = p * pf.abs().powf(p - 1.0) * pf_err;
    let sigma = lhs_err.hypot(exponent.exp() * pfp_err);
    let params = vec![
        ("T".to_string(), horizon),
        ("p".to_string(), p),
        ("d_T".to_string(), d),
        ("c_tilde".to_string(), c_tilde),
    ];
    Ok(BoundReport::new(
        "harnack",
        flow,
        &[("x", x), ("y", y)],
        params,
        lhs,
        rhs,
        sigma,
        opts.estimator.step_budget(lhs, rhs),
    )
    .with_note(format!("f0={}", f0.label()))
    .with_note(opts.overrides.note()))
}

/// `|P_T f|(x) ≤ e^{(∫_0^T τ + 1)/p} V_T(B_T(x, ρ))^{-1/p} ‖f‖_{L^p(μ_0)}`
/// with `ρ² = 2(p-1)T² / (p φ(C̃, T))`.
pub fn verify_lp_linfty(
    flow: &FlowSpec,
    f0: &TestFunction,
    x: &Point,
    horizon: f64,
    p: f64,
    opts: &Options,
) -> Result<BoundReport> {
    check_power(p)?;
    check_positive_time(flow, horizon)?;
    let model = &flow.model;
    let c_tilde = match opts.overrides.c_tilde {
        Some(v) => v,
        None => flow.curvature_bounds((0.0, horizon))?.c_tilde,
    };
    let norm = lp_norm(model, |z| f0.eval(model, z), p)?;
    let radius =
        (2.0 * (p - 1.0) * horizon * horizon / (p * decay_integral(c_tilde, horizon))).sqrt();
    let tau = flow.tau_integral(0.0, horizon)? + opts.overrides.tau_slack * horizon;
    let volume = flow.ball_volume(horizon, radius)?;
    let rhs = ((tau + 1.0) / p).exp() / volume.powf(1.0 / p) * norm;

    let (pf, sigma) = expectation(
        flow,
        horizon,
        x,
        |z| f0.eval(model, z),
        &opts.estimator,
        "lp-linfty",
    )?;
    let lhs = pf.abs();
    let params = vec![
        ("T".to_string(), horizon),
        ("p".to_string(), p),
        ("radius".to_string(), radius),
        ("lp_norm".to_string(), norm),
    ];
    Ok(BoundReport::new(
        "lp_linfty",
        flow,
        &[("x", x)],
        params,
        lhs,
        rhs,
        sigma,
        opts.estimator.step_budget(lhs, rhs),
    )
    .with_note(format!("f0={}", f0.label()))
    .with_note(opts.overrides.note()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::FlowError;
    use crate::geometry::Model;
    use crate::verify::Overrides;
    use approx::assert_abs_diff_eq;

    /// Standard normal CDF via the complementary error function series.
    fn normal_cdf(z: f64) -> f64 {
        // Φ(z) = ½ + φ(z) Σ z^{2k+1}/(1·3·…·(2k+1))
        let mut term = z;
        let mut sum = z;
        for k in 1..200 {
            term *= z * z / (2 * k + 1) as f64;
            sum += term;
        }
        0.5 + sum * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn euclidean_hand_instance() {
        let flow = FlowSpec::static_flow(Model::euclidean(1), 2.0).unwrap();
        let x = flow.model.point(&[0.0]).unwrap();
        let y = flow.model.point(&[1.0]).unwrap();
        let r = verify_harnack(
            &flow,
            &TestFunction::HalfSpace,
            &x,
            &y,
            1.0,
            2.0,
            &Options::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.lhs, 0.25, epsilon = 1e-9);
        let expected = 1f64.exp() * normal_cdf(1.0);
        assert_abs_diff_eq!(r.rhs, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(r.rhs, 2.287, epsilon = 5e-4);
        assert!(r.passed());
    }

    #[test]
    fn power_must_exceed_one() {
        let flow = FlowSpec::static_flow(Model::euclidean(1), 2.0).unwrap();
        let x = flow.model.origin();
        let e = verify_harnack(
            &flow,
            &TestFunction::HalfSpace,
            &x,
            &x,
            1.0,
            1.0,
            &Options::default(),
        );
        assert!(
            matches!(e, Err(FlowError::InvalidParameter(m)) if m.contains("power must exceed 1"))
        );
    }

    #[test]
    fn jensen_case_and_monotone_in_power() {
        let flow = FlowSpec::ricci(Model::sphere(2, 1.0), 0.8).unwrap();
        let x = flow.model.point_at_distance(0.3);
        let y = flow.model.point_at_distance(1.1);
        let f = TestFunction::ClippedFirstCoordinate;
        let same = verify_harnack(&flow, &f, &x, &x, 0.5, 2.0, &Options::default()).unwrap();
        assert!(same.passed());
        let mut last = f64::INFINITY;
        for p in [1.5, 2.0, 4.0, 16.0] {
            let r = verify_harnack(&flow, &f, &x, &y, 0.5, p, &Options::default()).unwrap();
            assert!(r.passed(), "{r:?}");
            let prefactor = r.rhs
                / oracle_expectation(&flow, 0.5, &y, |z| f.eval(&flow.model, z).powf(p)).unwrap();
            assert!(prefactor <= last);
            last = prefactor;
        }
    }

    #[test]
    fn weaker_constants_keep_a_pass() {
        let flow = FlowSpec::static_flow(Model::sphere(2, 1.0), 2.0).unwrap();
        let x = flow.model.origin();
        let y = flow.model.point_at_distance(0.8);
        let f = TestFunction::FirstCoordinate;
        let base = verify_harnack(&flow, &f, &x, &y, 0.4, 2.0, &Options::default()).unwrap();
        let opts = Options {
            overrides: Overrides {
                c_tilde: Some(-1.0),
                ..Default::default()
            },
            ..Default::default()
        };
        let weak = verify_harnack(&flow, &f, &x, &y, 0.4, 2.0, &opts).unwrap();
        assert!(base.passed() && weak.passed());
        assert!(weak.rhs >= base.rhs);
    }

    #[test]
    fn monte_carlo_matches_oracle() {
        let flow = FlowSpec::static_flow(Model::euclidean(1), 2.0).unwrap();
        let x = flow.model.point(&[0.0]).unwrap();
        let y = flow.model.point(&[1.0]).unwrap();
        let opts = Options::monte_carlo(20_000, 1e-2, 11, 0.1);
        let r = verify_harnack(&flow, &TestFunction::HalfSpace, &x, &y, 1.0, 2.0, &opts).unwrap();
        assert!(r.passed());
        assert!((r.lhs - 0.25).abs() <= 4.0 * r.mc_sigma + 0.01, "{r:?}");
    }

    #[test]
    fn constant_function_on_sphere() {
        let flow = FlowSpec::ricci(Model::sphere(2, 1.0), 0.9).unwrap();
        let x = flow.model.origin();
        let r = verify_lp_linfty(
            &flow,
            &TestFunction::Constant { value: 1.0 },
            &x,
            0.5,
            2.0,
            &Options::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.lhs, 1.0, epsilon = 1e-9);
        assert!(r.rhs >= 1.0 && r.passed());
    }

    #[test]
    fn first_coordinate_on_ricci_sphere() {
        let flow = FlowSpec::ricci(Model::sphere(2, 1.0), 0.9).unwrap();
        let x = flow.model.origin();
        let r = verify_lp_linfty(
            &flow,
            &TestFunction::FirstCoordinate,
            &x,
            0.5,
            2.0,
            &Options::default(),
        )
        .unwrap();
        // P_T z_0 at the pole: e^{-s}, s = ln 2
        assert_abs_diff_eq!(r.lhs, 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(
            r.param("lp_norm").unwrap(),
            (4.0 * std::f64::consts::PI / 3.0).sqrt(),
            epsilon = 1e-8
        );
        assert!(r.passed());
    }

    #[test]
    fn gaussian_bump_on_line() {
        let flow = FlowSpec::static_flow(Model::euclidean(1), 2.0).unwrap();
        let x = flow.model.origin();
        let horizon = 0.5;
        let r = verify_lp_linfty(
            &flow,
            &TestFunction::GaussianBump { width: 1.0 },
            &x,
            horizon,
            2.0,
            &Options::default(),
        )
        .unwrap();
        // P_T e^{-z²/2}(0) = (1 + T)^{-1/2}; ‖·‖_2 = π^{1/4}
        assert_abs_diff_eq!(r.lhs, 1.0 / (1.0 + horizon).sqrt(), epsilon = 1e-9);
        let radius = horizon.sqrt();
        let rhs = (0.5f64).exp() / (2.0 * radius).sqrt() * std::f64::consts::PI.powf(0.25);
        assert_abs_diff_eq!(r.rhs, rhs, epsilon = 1e-9);
        assert!(r.passed());
    }
}
