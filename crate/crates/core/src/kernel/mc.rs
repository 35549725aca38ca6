//! Monte Carlo estimators of the semigroup and of heat-kernel values.

use serde::{Deserialize, Serialize};

use super::exact::{has_exact_kernel, static_kernel_unchecked};
use super::{KernelEstimate, KernelMethod, SemigroupEstimate};
use crate::error::{FlowError, Result};
use crate::geometry::{FlowSpec, Model, Point};
use crate::process::{sample_endpoints, Direction};
use crate::quadrature;
use crate::stats::MeanEstimate;

/// Batches used for KDE standard errors.
pub const KDE_BATCHES: usize = 100;

/// `E f_0(X^T_T(x))` over `g(T - t)`-Brownian paths from `x`.
pub fn semigroup_mc<F: Fn(&Point) -> f64 + Sync>(
    flow: &FlowSpec,
    f0: F,
    x: &Point,
    horizon: f64,
    n_paths: usize,
    step: f64,
    seed: u64,
) -> Result<SemigroupEstimate> {
    if n_paths == 0 {
        return Err(FlowError::invalid("need at least one path"));
    }
    let ends = sample_endpoints(
        flow,
        Direction::Backward { total: horizon },
        x,
        horizon,
        step,
        seed,
        n_paths,
    )?;
    let values: Vec<f64> = ends.iter().map(&f0).collect();
    let est = MeanEstimate::from_samples(&values);
    Ok(SemigroupEstimate {
        value: est.mean,
        std_err: est.std_err,
        n_paths,
    })
}

/// Intrinsic smoothing bump of `g_0`-bandwidth `h`, a probability density
/// w.r.t. `μ_0`: the heat kernel `p_{h²}` where it is known exactly, a
/// normalized geodesic Gaussian otherwise.
#[derive(Clone, Debug)]
pub enum Bump {
    HeatKernel {
        model: Model,
        time: f64,
    },
    Geodesic {
        model: Model,
        bandwidth: f64,
        normalizer: f64,
    },
}

impl Bump {
    pub fn new(model: &Model, bandwidth: f64) -> Self {
        if has_exact_kernel(model) {
            return Bump::HeatKernel {
                model: model.clone(),
                time: bandwidth * bandwidth,
            };
        }
        let profile =
            |r: f64| model.sphere_area(r) * (-r * r / (2.0 * bandwidth * bandwidth)).exp();
        let normalizer = quadrature::adaptive(profile, 0.0, 40.0 * bandwidth, 1e-13);
        Bump::Geodesic {
            model: model.clone(),
            bandwidth,
            normalizer,
        }
    }

    pub fn eval(&self, centre: &Point, z: &Point) -> f64 {
        match self {
            Bump::HeatKernel { model, time } => static_kernel_unchecked(model, *time, centre, z),
            Bump::Geodesic {
                model,
                bandwidth,
                normalizer,
            } => {
                let d = model.distance(centre, z);
                (-d * d / (2.0 * bandwidth * bandwidth)).exp() / normalizer
            }
        }
    }
}

fn check_bandwidth(bandwidth: f64, step: f64) -> Result<()> {
    let min = 10.0 * step;
    if !(bandwidth >= min) {
        return Err(FlowError::BandwidthDegenerate { bandwidth, min });
    }
    Ok(())
}

fn batches_for(n_paths: usize) -> Result<usize> {
    if n_paths < 2 * 20 {
        return Err(FlowError::invalid(
            "kernel estimates need at least 40 paths (20 batches)",
        ));
    }
    Ok(KDE_BATCHES.min(n_paths / 2))
}

/// Kernel-density estimates at `targets`, each scaled by `factor`.
fn kde(
    ends: &[Point],
    targets: &[Point],
    bump: &Bump,
    factor: f64,
    batches: usize,
) -> Vec<KernelEstimate> {
    targets
        .iter()
        .map(|y| {
            let values: Vec<f64> = crate::parallel::map_slice(ends, |z| factor * bump.eval(y, z));
            let est = MeanEstimate::from_batches(&values, batches);
            KernelEstimate {
                value: est.mean.max(0.0),
                std_err: est.std_err,
                n_paths: ends.len(),
                method: KernelMethod::McKde,
            }
        })
        .collect()
}

/// `P(x, T, y, 0)` for each target `y`, by a KDE of the endpoints of
/// `g(T - t)`-Brownian paths from `x`; standard errors from batch means.
#[allow(clippy::too_many_arguments)]
pub fn kernel_mc(
    flow: &FlowSpec,
    x: &Point,
    horizon: f64,
    targets: &[Point],
    bandwidth: f64,
    n_paths: usize,
    step: f64,
    seed: u64,
) -> Result<Vec<KernelEstimate>> {
    check_bandwidth(bandwidth, step)?;
    let batches = batches_for(n_paths)?;
    let ends = sample_endpoints(
        flow,
        Direction::Backward { total: horizon },
        x,
        horizon,
        step,
        seed,
        n_paths,
    )?;
    Ok(kde(
        &ends,
        targets,
        &Bump::new(&flow.model, bandwidth),
        1.0,
        batches,
    ))
}

/// Feynman–Kac factor `exp(½ ∫_0^t trace_{g(t-s)} α(t-s) ds)` of the
/// conjugate equation. Trace `α` is spatially constant on space forms, so
/// the factor does not depend on the path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugateWeight {
    pub factor: f64,
}

impl ConjugateWeight {
    pub fn for_flow(flow: &FlowSpec, t: f64) -> Result<Self> {
        // ½ trace α = (n/2) ċ/c
        let exponent = quadrature::adaptive(
            |u| flow.half_trace_alpha(u).unwrap_or(f64::NAN),
            0.0,
            t,
            1e-12,
        );
        if !exponent.is_finite() {
            return Err(FlowError::HorizonExceeded {
                t,
                critical: flow.critical_time(),
            });
        }
        Ok(ConjugateWeight {
            factor: exponent.exp(),
        })
    }
}

/// `P*(y, 0, x, t)` for each target `x`: `g(t - s)`-Brownian paths from `y`,
/// a KDE normalized against `μ_t`, times the [`ConjugateWeight`].
#[allow(clippy::too_many_arguments)]
pub fn conjugate_kernel_mc(
    flow: &FlowSpec,
    y: &Point,
    t: f64,
    targets: &[Point],
    bandwidth: f64,
    n_paths: usize,
    step: f64,
    seed: u64,
) -> Result<Vec<KernelEstimate>> {
    check_bandwidth(bandwidth, step)?;
    let batches = batches_for(n_paths)?;
    let weight = ConjugateWeight::for_flow(flow, t)?;
    let ends = sample_endpoints(
        flow,
        Direction::Backward { total: t },
        y,
        t,
        step,
        seed,
        n_paths,
    )?;
    // a μ_0 probability density is a μ_t density after dividing by c(t)^{n/2}
    let to_mu_t = 1.0 / flow.volume_ratio(t)?;
    Ok(kde(
        &ends,
        targets,
        &Bump::new(&flow.model, bandwidth),
        weight.factor * to_mu_t,
        batches,
    ))
}
