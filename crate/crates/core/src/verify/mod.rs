//! One verifier per inequality. Each evaluates both sides on a concrete
//! instance and returns a [`BoundReport`].

mod entropy;
mod functions;
mod ondiag;
mod semigroup;
mod tail;

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::geometry::{FlowLaw, FlowSpec, Point};

pub use entropy::{verify_hamilton, HamiltonContext};
pub use functions::TestFunction;
pub use ondiag::verify_ondiag;
pub use semigroup::{verify_harnack, verify_lp_linfty};
pub use tail::{grigoryan_tail, verify_gaussian, verify_weighted_decay, GrigoryanParams};

/// Relative slack granted to quadrature-evaluated sides.
pub const QUADRATURE_BUDGET: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

/// One evaluated inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub flow: String,
    /// Points of the instance, `name=[coords]` separated by spaces.
    pub points: String,
    pub params: Vec<(String, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    pub mc_sigma: f64,
    /// Discretization allowance added to the `3σ` band.
    pub allowance: f64,
    pub verdict: Verdict,
    pub note: String,
}

impl BoundReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        flow: &FlowSpec,
        points: &[(&str, &Point)],
        params: Vec<(String, f64)>,
        lhs: f64,
        rhs: f64,
        mc_sigma: f64,
        allowance: f64,
    ) -> Self {
        let pass = lhs.is_finite() && rhs.is_finite() && lhs <= rhs + 3.0 * mc_sigma + allowance;
        BoundReport {
            name: name.to_string(),
            flow: flow.label(),
            points: points
                .iter()
                .map(|(k, p)| format!("{k}={}", format_point(p)))
                .collect::<Vec<_>>()
                .join(" "),
            params,
            lhs,
            rhs,
            margin: rhs - lhs,
            mc_sigma,
            allowance,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        if self.note.is_empty() {
            self.note = note;
        } else if !note.is_empty() {
            self.note = format!("{}; {note}", self.note);
        }
        self
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }

    pub fn csv_header() -> [&'static str; 11] {
        [
            "name",
            "flow",
            "points",
            "params",
            "lhs",
            "rhs",
            "margin",
            "mc_sigma",
            "allowance",
            "verdict",
            "note",
        ]
    }

    /// Row matching [`BoundReport::csv_header`]; floats use the shortest
    /// round-trip decimal form.
    pub fn csv_record(&self) -> Vec<String> {
        let params = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        vec![
            self.name.clone(),
            self.flow.clone(),
            self.points.clone(),
            params,
            self.lhs.to_string(),
            self.rhs.to_string(),
            self.margin.to_string(),
            self.mc_sigma.to_string(),
            self.allowance.to_string(),
            self.verdict.as_str().to_string(),
            self.note.clone(),
        ]
    }
}

pub fn format_point(p: &Point) -> String {
    let parts: Vec<String> = p.as_slice().iter().map(|v| v.to_string()).collect();
    format!("[{}]", parts.join(","))
}

fn default_bandwidth() -> f64 {
    0.1
}

/// How semigroup values and kernel values are obtained.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    Oracle,
    MonteCarlo {
        n_paths: usize,
        step: f64,
        seed: u64,
        /// KDE bandwidth for kernel values.
        #[serde(default = "default_bandwidth")]
        bandwidth: f64,
    },
}

impl Estimator {
    /// `κ · step · (|lhs| + |rhs|)` with `κ = 1`: the weak error budget of the
    /// geodesic random walk.
    fn step_budget(&self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Estimator::Oracle => QUADRATURE_BUDGET * (lhs.abs() + rhs.abs()),
            Estimator::MonteCarlo { step, .. } => step * (lhs.abs() + rhs.abs()),
        }
    }
}

/// Replacements for the curvature constants on the right-hand sides. Lowering
/// `C` or `C̃`, or a positive `tau_slack` (raising `τ`, lowering `τ̲`), only
/// weakens a bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub c: Option<f64>,
    pub c_tilde: Option<f64>,
    #[serde(default)]
    pub tau_slack: f64,
}

impl Overrides {
    fn is_active(&self) -> bool {
        self.c.is_some() || self.c_tilde.is_some() || self.tau_slack != 0.0
    }

    fn note(&self) -> String {
        if !self.is_active() {
            return String::new();
        }
        format!(
            "overrides c={:?} c_tilde={:?} tau_slack={}",
            self.c, self.c_tilde, self.tau_slack
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Options {
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub overrides: Overrides,
}

impl Options {
    pub fn monte_carlo(n_paths: usize, step: f64, seed: u64, bandwidth: f64) -> Self {
        Options {
            estimator: Estimator::MonteCarlo {
                n_paths,
                step,
                seed,
                bandwidth,
            },
            overrides: Overrides::default(),
        }
    }
}

fn check_power(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(FlowError::invalid(format!("power must exceed 1, got {p}")));
    }
    Ok(())
}

fn check_positive_time(flow: &FlowSpec, t: f64) -> Result<()> {
    flow.check_time(t)?;
    if !(t > 0.0) {
        return Err(FlowError::invalid(format!("time {t} must be positive")));
    }
    Ok(())
}

/// The Gaussian-tail arguments need a Ricci flow of a metric with `Ric ≥ 0`
/// (a flat metric is its own static Ricci flow).
fn require_nonnegative_ricci_flow(flow: &FlowSpec) -> Result<()> {
    let k = flow.model.curvature();
    if k < 0.0 {
        return Err(FlowError::HypothesisFailed(format!(
            "{} has negative curvature; the tail estimates assume Ric ≥ 0",
            flow.label()
        )));
    }
    match flow.law {
        FlowLaw::Ricci => Ok(()),
        FlowLaw::Static if k == 0.0 => Ok(()),
        _ => Err(FlowError::HypothesisFailed(format!(
            "{} is not a Ricci flow",
            flow.label()
        ))),
    }
}
