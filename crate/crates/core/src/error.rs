use thiserror::Error;

pub type Result<T> = std::result::Result<T, FlowError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("time {t} is at or beyond the critical time T_c = {critical}")]
    HorizonExceeded { t: f64, critical: f64 },

    #[error("step {step} exceeds the maximum step {max}")]
    StepTooLarge { step: f64, max: f64 },

    #[error("points are (nearly) antipodal or equidistant across the cut locus; no unique minimizing geodesic")]
    AntipodalDegeneracy,

    #[error("unsupported model for {operation}: {model}")]
    UnsupportedModel {
        operation: &'static str,
        model: String,
    },

    #[error("bandwidth {bandwidth} is below the minimum {min}")]
    BandwidthDegenerate { bandwidth: f64, min: f64 },

    #[error("hypothesis not satisfied: {0}")]
    HypothesisFailed(String),

    #[error("function is not integrable: {0}")]
    NonIntegrable(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl FlowError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FlowError::InvalidParameter(msg.into())
    }
}
