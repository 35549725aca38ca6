use std::fmt;
use std::path::{Path, PathBuf};

use flowkernel::geometry::CRITICAL_GUARD;
use flowkernel::process::MAX_STEP;
use flowkernel::verify::TestFunction;
use flowkernel::{FlowSpec, Point};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    Kernel,
    #[default]
    Verify,
    FullSuite,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Kernel => "kernel",
            Kind::Verify => "verify",
            Kind::FullSuite => "full-suite",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    #[serde(default = "McSettings::default_paths")]
    pub n_paths: usize,
    #[serde(default = "McSettings::default_step")]
    pub step: f64,
    /// KDE bandwidth in `g_0` units.
    #[serde(default = "McSettings::default_bandwidth")]
    pub bandwidth: f64,
}

impl McSettings {
    fn default_paths() -> usize {
        10_000
    }
    fn default_step() -> f64 {
        1e-2
    }
    fn default_bandwidth() -> f64 {
        0.1
    }
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            n_paths: Self::default_paths(),
            step: Self::default_step(),
            bandwidth: Self::default_bandwidth(),
        }
    }
}

/// Parameter grids. Unset point and time grids are derived per flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Tangent offsets `(a, b)` from the model origin (`b` ignored on 1-d models).
    pub points: Option<Vec<Vec<f64>>>,
    pub times: Option<Vec<f64>>,
    #[serde(default = "Grids::default_powers")]
    pub powers: Vec<f64>,
    /// Time ratios `a` of the tail iteration.
    #[serde(default = "Grids::default_ratios")]
    pub ratios: Vec<f64>,
    #[serde(default = "Grids::default_radii")]
    pub radii: Vec<f64>,
    /// Weight scales `A` of the weighted decay.
    #[serde(default = "Grids::default_weight_scales")]
    pub weight_scales: Vec<f64>,
    /// Moment exponents for the coupled-path checks.
    #[serde(default = "Grids::default_betas")]
    pub betas: Vec<f64>,
    /// `g_0` distance between the endpoints of the coupled paths.
    #[serde(default = "Grids::default_coupling_distance")]
    pub coupling_distance: f64,
    #[serde(default = "Grids::default_functions")]
    pub functions: Vec<TestFunction>,
}

impl Grids {
    fn default_powers() -> Vec<f64> {
        vec![1.5, 2.0, 4.0]
    }
    fn default_ratios() -> Vec<f64> {
        vec![1.5, 2.0, 4.0]
    }
    fn default_radii() -> Vec<f64> {
        vec![0.3, 0.6, 1.0, 1.5]
    }
    fn default_weight_scales() -> Vec<f64> {
        vec![1.0, 2.0]
    }
    fn default_betas() -> Vec<f64> {
        vec![1.5, 2.0, 3.0]
    }
    fn default_coupling_distance() -> f64 {
        0.5
    }
    fn default_functions() -> Vec<TestFunction> {
        vec![TestFunction::ClippedFirstCoordinate]
    }

    /// Configured or default offsets, as points on the flow's model.
    pub fn points_for(&self, flow: &FlowSpec) -> Vec<Point> {
        let offsets = self.points.clone().unwrap_or_else(|| {
            if flow.dim() == 1 {
                vec![vec![0.0], vec![0.5], vec![-1.0], vec![1.5], vec![2.5]]
            } else {
                vec![
                    vec![0.0, 0.0],
                    vec![0.5, 0.0],
                    vec![1.0, 0.3],
                    vec![2.0, -0.4],
                    vec![2.9, 0.1],
                ]
            }
        });
        let origin = flow.model.origin();
        offsets
            .iter()
            .map(|o| {
                flow.model
                    .offset(&origin, o[0], o.get(1).copied().unwrap_or(0.0))
            })
            .collect()
    }

    pub fn times_for(&self, flow: &FlowSpec) -> Vec<f64> {
        self.times.clone().unwrap_or_else(|| {
            [0.2, 0.45, 0.7, 0.95]
                .iter()
                .map(|f| f * flow.horizon)
                .collect()
        })
    }
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            points: None,
            times: None,
            powers: Self::default_powers(),
            ratios: Self::default_ratios(),
            radii: Self::default_radii(),
            weight_scales: Self::default_weight_scales(),
            betas: Self::default_betas(),
            coupling_distance: Self::default_coupling_distance(),
            functions: Self::default_functions(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub flow: Vec<FlowSpec>,
    #[serde(default)]
    pub kind: Kind,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub mc: McSettings,
    #[serde(default)]
    pub grid: Grids,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<FlowSpec>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Box<FlowSpec>),
        Many(Vec<FlowSpec>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(f) => vec![*f],
        OneOrMany::Many(v) => v,
    })
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_paths: Option<usize>,
    pub step: Option<f64>,
    pub out: Option<PathBuf>,
    pub kind: Option<Kind>,
}

/// One validation finding, tied to the offending field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(n) = o.n_paths {
            self.mc.n_paths = n;
        }
        if let Some(h) = o.step {
            self.mc.step = h;
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(k) = o.kind {
            self.kind = k;
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("flowkernel-out"))
    }

    /// Findings that would stop [`crate::run`]; empty iff the run can start.
    pub fn validate(&self) -> Vec<ConfigError> {
        let mut errs = Vec::new();
        let mut push = |field: String, message: String| errs.push(ConfigError { field, message });
        if self.seed.is_none() {
            push(
                "seed".into(),
                "missing seed; runs need an explicit seed".into(),
            );
        }
        if self.flow.is_empty() {
            push("flow".into(), "at least one flow is required".into());
        }
        let mc = &self.mc;
        if !(mc.step > 0.0 && mc.step <= MAX_STEP) {
            push(
                "mc.step".into(),
                format!("step {} must lie in (0, {MAX_STEP}]", mc.step),
            );
        }
        if mc.n_paths < 40 {
            push(
                "mc.n_paths".into(),
                format!("{} paths; at least 40 are needed", mc.n_paths),
            );
        }
        if !(mc.bandwidth >= 10.0 * mc.step) {
            push(
                "mc.bandwidth".into(),
                format!(
                    "bandwidth {} is below 10 × step = {}",
                    mc.bandwidth,
                    10.0 * mc.step
                ),
            );
        }
        let g = &self.grid;
        for (i, p) in g.powers.iter().enumerate() {
            if !(*p > 1.0 && p.is_finite()) {
                push(
                    format!("grid.powers[{i}]"),
                    format!("p = {p}: power must exceed 1"),
                );
            }
        }
        for (i, a) in g.ratios.iter().enumerate() {
            if !(*a > 1.0 && a.is_finite()) {
                push(
                    format!("grid.ratios[{i}]"),
                    format!("a = {a} must exceed 1"),
                );
            }
        }
        for (i, r) in g.radii.iter().enumerate() {
            if !(*r > 0.0 && r.is_finite()) {
                push(
                    format!("grid.radii[{i}]"),
                    format!("radius {r} must be positive"),
                );
            }
        }
        for (i, a) in g.weight_scales.iter().enumerate() {
            if !(*a >= 1.0 && a.is_finite()) {
                push(
                    format!("grid.weight_scales[{i}]"),
                    format!("A = {a} must be at least 1"),
                );
            }
        }
        for (i, b) in g.betas.iter().enumerate() {
            if !(*b >= 1.0 && b.is_finite()) {
                push(
                    format!("grid.betas[{i}]"),
                    format!("beta = {b} must be at least 1"),
                );
            }
        }
        if !(g.coupling_distance >= 0.0 && g.coupling_distance.is_finite()) {
            push(
                "grid.coupling_distance".into(),
                "must be a non-negative distance".into(),
            );
        }
        if let Some(points) = &g.points {
            if points.is_empty() {
                push("grid.points".into(), "point grid is empty".into());
            }
            for (i, p) in points.iter().enumerate() {
                if p.is_empty() || p.len() > 2 || p.iter().any(|v| !v.is_finite()) {
                    push(
                        format!("grid.points[{i}]"),
                        "offsets are one or two finite numbers".into(),
                    );
                }
            }
        }
        if let Some(times) = &g.times {
            if times.is_empty() {
                push("grid.times".into(), "time grid is empty".into());
            }
        }
        for (fi, flow) in self.flow.iter().enumerate() {
            if let Err(e) = flow.model.validate() {
                push(format!("flow[{fi}].model"), e.to_string());
                continue;
            }
            let tc = flow.critical_time();
            if flow.horizon >= tc - CRITICAL_GUARD {
                push(
                    format!("flow[{fi}].horizon"),
                    format!("horizon {}: time ≥ T_c = {tc}", flow.horizon),
                );
            } else if let Err(e) = flow.validate() {
                push(format!("flow[{fi}]"), e.to_string());
            }
            for (i, t) in g.times.iter().flatten().enumerate() {
                let field = format!("grid.times[{i}]");
                if !(*t > 0.0) {
                    push(field, format!("time {t} must be positive"));
                } else if *t >= tc - CRITICAL_GUARD {
                    push(
                        field,
                        format!("t = {t}: time ≥ T_c = {tc} for {}", flow.label()),
                    );
                } else if *t > flow.horizon {
                    push(
                        field,
                        format!(
                            "time {t} exceeds the horizon {} of {}",
                            flow.horizon,
                            flow.label()
                        ),
                    );
                }
            }
        }
        errs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPHERE: &str = r#"
        seed = 3
        kind = "verify"
        [flow]
        horizon = 0.9
        model = { type = "sphere", dim = 2, curvature = 1.0 }
        law = { type = "ricci" }
    "#;

    #[test]
    fn parses_single_flow_table() {
        let c = ExperimentConfig::from_toml(SPHERE).unwrap();
        assert_eq!(c.flow.len(), 1);
        assert_eq!(c.kind, Kind::Verify);
        assert_eq!(c.mc, McSettings::default());
        assert!(c.validate().is_empty(), "{:?}", c.validate());
    }

    #[test]
    fn parses_flow_array() {
        let text = r#"
            seed = 1
            kind = "full-suite"
            [[flow]]
            horizon = 1.0
            model = { type = "euclidean", dim = 1 }
            law = { type = "static" }
            [[flow]]
            horizon = 0.5
            model = { type = "flat_torus", periods = [1.0, 1.0] }
            law = { type = "static" }
            [grid]
            times = [0.25, 0.5]
            functions = [{ type = "half_space" }, { type = "gaussian_bump", width = 0.5 }]
        "#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.flow.len(), 2);
        assert_eq!(c.kind, Kind::FullSuite);
        assert_eq!(c.grid.functions.len(), 2);
        assert!(c.validate().is_empty());
    }

    #[test]
    fn time_beyond_critical() {
        let mut c = ExperimentConfig::from_toml(SPHERE).unwrap();
        c.grid.times = Some(vec![0.5, 1.5]);
        let errs = c.validate();
        assert!(
            errs.iter()
                .any(|e| e.field == "grid.times[1]" && e.message.contains("time ≥ T_c = 1")),
            "{errs:?}"
        );
        assert!(!errs.iter().any(|e| e.field == "grid.times[0]"));
        c.flow[0].horizon = 1.5;
        let errs = c.validate();
        assert!(
            errs.iter()
                .any(|e| e.to_string() == "flow[0].horizon: horizon 1.5: time ≥ T_c = 1"),
            "{errs:?}"
        );
    }

    #[test]
    fn power_and_seed_findings() {
        let mut c = ExperimentConfig::from_toml(SPHERE).unwrap();
        c.grid.powers = vec![2.0, 1.0];
        c.seed = None;
        let errs: Vec<String> = c.validate().iter().map(|e| e.to_string()).collect();
        assert!(
            errs.iter().any(|e| e.contains("power must exceed 1")),
            "{errs:?}"
        );
        assert!(errs.iter().any(|e| e.starts_with("seed")), "{errs:?}");
    }

    #[test]
    fn flags_take_precedence() {
        let mut c = ExperimentConfig::from_toml(SPHERE).unwrap();
        c.apply(&Overrides {
            seed: Some(9),
            n_paths: Some(500),
            step: Some(5e-3),
            out: Some("elsewhere".into()),
            kind: Some(Kind::Kernel),
        });
        assert_eq!(c.seed, Some(9));
        assert_eq!(c.mc.n_paths, 500);
        assert_eq!(c.mc.step, 5e-3);
        assert_eq!(c.out_dir(), PathBuf::from("elsewhere"));
        assert_eq!(c.kind, Kind::Kernel);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = format!("{SPHERE}\n[mc]\npaths = 3\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }
}
