//! Instance matrices for each suite and their evaluation.

use flowkernel::kernel::{evolving_kernel_oracle, has_exact_kernel, kde_bias, kernel_mc};
use flowkernel::parallel::map_slice;
use flowkernel::process::{moment_bound, sample_coupled, sample_endpoints, Direction};
use flowkernel::rng::derive_seed;
use flowkernel::stats::MeanEstimate;
use flowkernel::verify::{
    grigoryan_tail, verify_gaussian, verify_hamilton, verify_harnack, verify_lp_linfty,
    verify_ondiag, verify_weighted_decay, BoundReport, Options, TestFunction,
};
use flowkernel::{FlowError, FlowSpec, Point};
use serde::Serialize;

use crate::config::{Grids, McSettings};

/// A suite that produced no reports for a flow, and why.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Skipped {
    pub suite: String,
    pub flow: String,
    pub reason: String,
}

/// One evaluable inequality instance.
#[derive(Clone, Debug)]
pub enum Instance {
    Harnack {
        f0: TestFunction,
        x: Point,
        y: Point,
        t: f64,
        p: f64,
        opts: Options,
    },
    LpLinfty {
        f0: TestFunction,
        x: Point,
        t: f64,
        p: f64,
        opts: Options,
    },
    OnDiagonal {
        x: Point,
        y: Point,
        t: f64,
        opts: Options,
    },
    Hamilton {
        pole: Point,
        t: f64,
        x: Point,
        y: Point,
    },
    WeightedDecay {
        centre: Point,
        pole: Point,
        r: f64,
        weight_scale: f64,
        times: [f64; 3],
    },
    Tail {
        x0: Point,
        r: f64,
        t: f64,
        a: f64,
    },
    Gaussian {
        x0: Point,
        y0: Point,
        t: f64,
        a: f64,
    },
}

impl Instance {
    pub fn suite(&self) -> &'static str {
        match self {
            Instance::Harnack { .. } => "harnack",
            Instance::LpLinfty { .. } => "lp_linfty",
            Instance::OnDiagonal { .. } => "on_diagonal",
            Instance::Hamilton { .. } => "hamilton",
            Instance::WeightedDecay { .. } => "weighted_decay",
            Instance::Tail { .. } => "grigoryan_tail",
            Instance::Gaussian { .. } => "gaussian",
        }
    }

    pub fn evaluate(&self, flow: &FlowSpec) -> flowkernel::Result<BoundReport> {
        match self {
            Instance::Harnack {
                f0,
                x,
                y,
                t,
                p,
                opts,
            } => verify_harnack(flow, f0, x, y, *t, *p, opts),
            Instance::LpLinfty { f0, x, t, p, opts } => verify_lp_linfty(flow, f0, x, *t, *p, opts),
            Instance::OnDiagonal { x, y, t, opts } => verify_ondiag(flow, x, y, *t, opts),
            Instance::Hamilton { pole, t, x, y } => verify_hamilton(flow, pole, *t, x, y),
            Instance::WeightedDecay {
                centre,
                pole,
                r,
                weight_scale,
                times: [t2, t1, t0],
            } => verify_weighted_decay(flow, centre, pole, *r, *t0, *weight_scale, *t2, *t1),
            Instance::Tail { x0, r, t, a } => grigoryan_tail(flow, x0, x0, *r, *t, *a, 1.0),
            Instance::Gaussian { x0, y0, t, a } => verify_gaussian(flow, x0, y0, *t, *a),
        }
    }
}

fn positive_times(grid: &Grids, flow: &FlowSpec) -> Vec<f64> {
    let mut times: Vec<f64> = grid
        .times_for(flow)
        .into_iter()
        .filter(|t| *t > 0.0)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

/// Oracle where the model has an exact kernel, Monte Carlo otherwise.
fn options_for(flow: &FlowSpec, mc: &McSettings, seed: u64, tag: &str) -> Options {
    if has_exact_kernel(&flow.model) {
        Options::default()
    } else {
        Options::monte_carlo(mc.n_paths, mc.step, derive_seed(seed, tag), mc.bandwidth)
    }
}

/// The verification matrix for one flow, in a fixed order.
pub fn verify_instances(
    flow: &FlowSpec,
    flow_index: usize,
    grid: &Grids,
    mc: &McSettings,
    seed: u64,
) -> Vec<Instance> {
    let points = grid.points_for(flow);
    let times = positive_times(grid, flow);
    let exact = has_exact_kernel(&flow.model);
    // Monte Carlo instances are costly: keep x at the first point
    let sources: Vec<Point> = if exact {
        points.clone()
    } else {
        points[..1].to_vec()
    };
    let mut out = Vec::new();
    let mut counter = 0usize;
    let mut tag = |suite: &str| {
        counter += 1;
        format!("{suite}/{flow_index}/{counter}")
    };

    for f0 in &grid.functions {
        for x in &sources {
            for y in &points {
                for &t in &times {
                    for &p in &grid.powers {
                        let opts = options_for(flow, mc, seed, &tag("harnack"));
                        out.push(Instance::Harnack {
                            f0: f0.clone(),
                            x: *x,
                            y: *y,
                            t,
                            p,
                            opts,
                        });
                    }
                }
            }
        }
        for x in &sources {
            for &t in &times {
                for &p in &grid.powers {
                    let opts = options_for(flow, mc, seed, &tag("lp_linfty"));
                    out.push(Instance::LpLinfty {
                        f0: f0.clone(),
                        x: *x,
                        t,
                        p,
                        opts,
                    });
                }
            }
        }
    }
    for x in &sources {
        for y in &points {
            for &t in &times {
                let opts = options_for(flow, mc, seed, &tag("on_diagonal"));
                out.push(Instance::OnDiagonal {
                    x: *x,
                    y: *y,
                    t,
                    opts,
                });
            }
        }
    }
    let mut poles = vec![points[0]];
    if points.len() > 2 {
        poles.push(points[2]);
    }
    for pole in &poles {
        for x in &points {
            for y in &points {
                for &t in &times {
                    out.push(Instance::Hamilton {
                        pole: *pole,
                        t,
                        x: *x,
                        y: *y,
                    });
                }
            }
        }
    }
    for centre in &points {
        for &r in &grid.radii {
            for &weight_scale in &grid.weight_scales {
                for k in 1..times.len() {
                    for j in 0..k {
                        for i in 0..=j {
                            out.push(Instance::WeightedDecay {
                                centre: *centre,
                                pole: points[0],
                                r,
                                weight_scale,
                                times: [times[i], times[j], times[k]],
                            });
                        }
                    }
                }
            }
        }
    }
    for x0 in &points {
        for &r in &grid.radii {
            for &t in &times {
                for &a in &grid.ratios {
                    out.push(Instance::Tail { x0: *x0, r, t, a });
                }
            }
        }
    }
    for x0 in &points[..1] {
        for y0 in &points {
            for &t in &times {
                for &a in &grid.ratios {
                    out.push(Instance::Gaussian {
                        x0: *x0,
                        y0: *y0,
                        t,
                        a,
                    });
                }
            }
        }
    }
    out
}

/// Errors that mean "this suite does not apply here" rather than a broken run.
fn is_inapplicable(e: &FlowError) -> bool {
    matches!(
        e,
        FlowError::HypothesisFailed(_)
            | FlowError::UnsupportedModel { .. }
            | FlowError::NonIntegrable(_)
    )
}

/// Evaluates instances in parallel; reports keep the instance order.
pub fn evaluate(
    flow: &FlowSpec,
    instances: &[Instance],
) -> Result<(Vec<BoundReport>, Vec<Skipped>), FlowError> {
    let results = map_slice(instances, |inst| inst.evaluate(flow));
    let mut reports = Vec::with_capacity(results.len());
    let mut skipped: Vec<Skipped> = Vec::new();
    for (inst, res) in instances.iter().zip(results) {
        match res {
            Ok(r) => reports.push(r),
            Err(e) if is_inapplicable(&e) => {
                let s = Skipped {
                    suite: inst.suite().to_string(),
                    flow: flow.label(),
                    reason: e.to_string(),
                };
                if !skipped.contains(&s) {
                    skipped.push(s);
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok((reports, skipped))
}

/// Monte Carlo kernel values against the oracle at every point and time.
pub fn kernel_suite(
    flow: &FlowSpec,
    flow_index: usize,
    grid: &Grids,
    mc: &McSettings,
    seed: u64,
) -> Result<(Vec<BoundReport>, Vec<Skipped>), FlowError> {
    if !has_exact_kernel(&flow.model) {
        return Ok((
            Vec::new(),
            vec![Skipped {
                suite: "kernel_agreement".into(),
                flow: flow.label(),
                reason: "no exact kernel to compare against".into(),
            }],
        ));
    }
    let x = flow.model.origin();
    let targets = grid.points_for(flow);
    let mut reports = Vec::new();
    for (k, &t) in positive_times(grid, flow).iter().enumerate() {
        let s = derive_seed(seed, &format!("kernel/{flow_index}/{k}"));
        let estimates = kernel_mc(flow, &x, t, &targets, mc.bandwidth, mc.n_paths, mc.step, s)?;
        for (y, est) in targets.iter().zip(&estimates) {
            let oracle = evolving_kernel_oracle(flow, t, &x, y)?.value;
            let bias = kde_bias(flow, t, &x, y, mc.bandwidth)?;
            let params = vec![
                ("t".to_string(), t),
                ("bandwidth".to_string(), mc.bandwidth),
                ("n_paths".to_string(), mc.n_paths as f64),
                ("step".to_string(), mc.step),
                ("estimate".to_string(), est.value),
                ("oracle".to_string(), oracle),
            ];
            // |estimate - oracle| against the bias budget, inside 3σ plus an O(step) walk error
            reports.push(BoundReport::new(
                "kernel_agreement",
                flow,
                &[("x", &x), ("y", y)],
                params,
                (est.value - oracle).abs(),
                bias,
                est.std_err,
                mc.step * oracle,
            ));
        }
    }
    Ok((reports, Vec::new()))
}

/// `E R_T = 1` and `E R_T^β ≤ moment_bound` over coupled paths.
pub fn martingale_suite(
    flow: &FlowSpec,
    flow_index: usize,
    grid: &Grids,
    mc: &McSettings,
    seed: u64,
) -> Result<Vec<BoundReport>, FlowError> {
    let x = flow.model.origin();
    let y = flow.model.offset(&x, grid.coupling_distance, 0.0);
    let mut reports = Vec::new();
    for (k, &horizon) in positive_times(grid, flow).iter().enumerate() {
        let s = derive_seed(seed, &format!("coupled/{flow_index}/{k}"));
        let samples = sample_coupled(flow, horizon, &x, &y, mc.step, s, mc.n_paths)?;
        let densities: Vec<f64> = samples.iter().map(|c| c.density).collect();
        let mean = MeanEstimate::from_samples(&densities);
        let base = vec![
            ("T".to_string(), horizon),
            ("n_paths".to_string(), mc.n_paths as f64),
            ("step".to_string(), mc.step),
        ];
        let mut params = base.clone();
        params.push(("mean".to_string(), mean.mean));
        reports.push(BoundReport::new(
            "martingale_mean",
            flow,
            &[("x", &x), ("y", &y)],
            params,
            (mean.mean - 1.0).abs(),
            0.0,
            mean.std_err,
            mc.step,
        ));
        for &beta in &grid.betas {
            let powered: Vec<f64> = densities.iter().map(|r| r.powf(beta)).collect();
            let m = MeanEstimate::from_samples(&powered);
            let bound = moment_bound(flow, &x, &y, horizon, beta)?;
            let mut params = base.clone();
            params.push(("beta".to_string(), beta));
            reports.push(BoundReport::new(
                "moment",
                flow,
                &[("x", &x), ("y", &y)],
                params,
                m.mean,
                bound,
                m.std_err,
                mc.step * bound,
            ));
        }
    }
    Ok(reports)
}

/// Second moment of the walk at each time; checked against `n t` on
/// euclidean models, reported as data elsewhere.
#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub flow: String,
    pub t: f64,
    pub n_paths: usize,
    pub mean_sq_distance: f64,
    pub std_err: f64,
}

pub fn simulate_suite(
    flow: &FlowSpec,
    flow_index: usize,
    grid: &Grids,
    mc: &McSettings,
    seed: u64,
) -> Result<(Vec<MomentRow>, Vec<BoundReport>), FlowError> {
    let x = flow.model.origin();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (k, &t) in positive_times(grid, flow).iter().enumerate() {
        let s = derive_seed(seed, &format!("simulate/{flow_index}/{k}"));
        let ends = sample_endpoints(flow, Direction::Forward, &x, t, mc.step, s, mc.n_paths)?;
        let sq: Vec<f64> = ends
            .iter()
            .map(|e| flow.model.distance(&x, e).powi(2))
            .collect();
        let est = MeanEstimate::from_samples(&sq);
        if let flowkernel::Model::Euclidean { dim } = flow.model {
            let target = dim as f64 * t;
            reports.push(BoundReport::new(
                "second_moment",
                flow,
                &[("x", &x)],
                vec![("t".to_string(), t), ("mean".to_string(), est.mean)],
                (est.mean - target).abs(),
                0.0,
                est.std_err,
                0.0,
            ));
        }
        rows.push(MomentRow {
            flow: flow.label(),
            t,
            n_paths: mc.n_paths,
            mean_sq_distance: est.mean,
            std_err: est.std_err,
        });
    }
    Ok((rows, reports))
}
