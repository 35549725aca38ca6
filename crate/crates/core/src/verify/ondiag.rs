//! On-diagonal upper bound of the evolving heat kernel.

use super::{check_positive_time, BoundReport, Estimator, Options};
use crate::error::Result;
use crate::geometry::{decay_integral, FlowSpec, Point};
use crate::kernel::{evolving_kernel_oracle, kde_bias, kernel_mc};

/// `P(x, t, y, 0) ≤ e · e^{½∫_0^t τ - ½∫_0^{t/2} τ̲}
///   / √(V_t(B_t(x, ρ̃)) · V_0(B_0(y, ρ)))`
/// with `ρ̃² = (t/2)²/φ(C̃, t/2)` for `Ric + α` on `[t/2, t]` and
/// `ρ² = (t/2)²/φ(C, t/2)` for `Ric - α` on `[0, t/2]`.
pub fn verify_ondiag(
    flow: &FlowSpec,
    x: &Point,
    y: &Point,
    t: f64,
    opts: &Options,
) -> Result<BoundReport> {
    check_positive_time(flow, t)?;
    let half = 0.5 * t;
    let c = match opts.overrides.c {
        Some(v) => v,
        None => flow.curvature_bounds((0.0, half))?.c,
    };
    let c_tilde = match opts.overrides.c_tilde {
        Some(v) => v,
        None => flow.curvature_bounds((half, t))?.c_tilde,
    };
    let slack = opts.overrides.tau_slack;
    let tau_upper = flow.tau_integral(0.0, t)? + slack * t;
    let tau_lower = flow.tau_integral(0.0, half)? - slack * half;
    let radius_t = (half * half / decay_integral(c_tilde, half)).sqrt();
    let radius_0 = (half * half / decay_integral(c, half)).sqrt();
    let volumes = flow.ball_volume(t, radius_t)? * flow.ball_volume(0.0, radius_0)?;
    let rhs = (1.0 + 0.5 * tau_upper - 0.5 * tau_lower).exp() / volumes.sqrt();

    let (lhs, sigma, allowance, note) = match &opts.estimator {
        Estimator::Oracle => {
            let v = evolving_kernel_oracle(flow, t, x, y)?.value;
            (v, 0.0, super::QUADRATURE_BUDGET * (v + rhs), String::new())
        }
        Estimator::MonteCarlo {
            n_paths,
            step,
            seed,
            bandwidth,
        } => {
            let est = kernel_mc(
                flow,
                x,
                t,
                std::slice::from_ref(y),
                *bandwidth,
                *n_paths,
                *step,
                *seed,
            )?[0];
            // the bandwidth bias is only known where the kernel is
            let (bias, note) = match kde_bias(flow, t, x, y, *bandwidth) {
                Ok(b) => (b, String::new()),
                Err(_) => (
                    0.0,
                    format!("kde bias at bandwidth {bandwidth} not bounded"),
                ),
            };
            let budget = opts.estimator.step_budget(est.value, rhs) + bias;
            (est.value, est.std_err, budget, note)
        }
    };
    let params = vec![
        ("t".to_string(), t),
        ("d_t".to_string(), flow.distance(t, x, y)?),
        ("c".to_string(), c),
        ("c_tilde".to_string(), c_tilde),
        ("radius_t".to_string(), radius_t),
        ("radius_0".to_string(), radius_0),
    ];
    Ok(BoundReport::new(
        "on_diagonal",
        flow,
        &[("x", x), ("y", y)],
        params,
        lhs,
        rhs,
        sigma,
        allowance,
    )
    .with_note(note)
    .with_note(opts.overrides.note()))
}
