//! Heat-kernel values: exact static kernels, the time-changed oracle for
//! evolving metrics, and Monte Carlo estimators.
//!
//! Kernel values are densities w.r.t. `μ_0` unless stated otherwise.

mod exact;
mod mc;
mod oracle;

use serde::{Deserialize, Serialize};

pub use exact::{
    circle_eigen_kernel, exact_static_kernel, has_exact_kernel, sphere_truncation,
    unit_sphere_kernel, wrapped_gaussian, SPHERE_TAIL, WRAP_CUTOFF,
};
pub use mc::{conjugate_kernel_mc, kernel_mc, semigroup_mc, Bump, ConjugateWeight, KDE_BATCHES};
pub use oracle::{
    evolving_kernel_oracle, kde_bias, kernel_between, lp_norm, oracle_expectation, refine, Grid,
};

pub(crate) use exact::{radial_kernel, static_kernel_unchecked};
pub(crate) use oracle::{euclidean_extent, kernel_on_grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    McKde,
    ExactSpectral,
    ExactClosedForm,
    TimeChangeOracle,
}

impl KernelMethod {
    pub fn is_exact(&self) -> bool {
        !matches!(self, KernelMethod::McKde)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n_paths: usize,
    pub method: KernelMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemigroupEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n_paths: usize,
}
