//! Domain types shared by the samplers, oracles and diagnostics.

mod kernel;
mod prior;
mod summary;

pub use kernel::{
    kernel_weight, validate_kernel, AbcKernel, Axiom, KernelFamily, KernelProbe, KernelValidation,
    Violation,
};
pub use prior::{prior_density_m3, M3PriorVariant, Prior, PriorSpec};
pub use summary::{
    compute_errors, compute_summaries, quantile_sorted, DiscrepancyPipeline, Summary,
};

use crate::error::{AbcError, Result};
use crate::rng::SimRng;

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(AbcError::Input(format!(
            "{what}: value {i} is not finite ({})",
            values[i]
        ))),
        None => Ok(()),
    }
}

macro_rules! real_vector {
    ($(#[$meta:meta])* $name:ident, $what:literal) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(values: Vec<f64>) -> Result<Self> {
                check_finite(&values, $what)?;
                Ok(Self(values))
            }

            pub fn values(&self) -> &[f64] {
                &self.0
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl std::ops::Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }
    };
}

real_vector!(
    /// Model parameters θ. Coordinate labels live on the model (`GenerativeModel::param_names`).
    ParameterVector,
    "parameter vector"
);
real_vector!(
    /// Values S_1(x), ..., S_K(x) of a pipeline's summaries.
    SummaryVector,
    "summary vector"
);
real_vector!(
    /// Signed per-summary discrepancies ε_k = S_k(x) - S_k(x0).
    ErrorVector,
    "error vector"
);

/// Observed or simulated data.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset(Vec<f64>);

impl Dataset {
    pub fn new(observations: Vec<f64>) -> Result<Self> {
        if observations.is_empty() {
            return Err(AbcError::Input(
                "dataset must contain at least one observation".into(),
            ));
        }
        check_finite(&observations, "dataset")?;
        Ok(Self(observations))
    }

    pub fn observations(&self) -> &[f64] {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.len()
    }
}

/// A data-generating process together with its prior: the object under criticism.
///
/// `simulate` must be a pure function of `(theta, seed)`.
pub trait GenerativeModel: Send + Sync {
    fn label(&self) -> &str;

    fn param_names(&self) -> Vec<String>;

    fn prior(&self) -> &dyn Prior;

    fn simulate(&self, theta: &ParameterVector, seed: u64) -> Result<Dataset>;

    fn theta_dim(&self) -> usize {
        self.prior().dim()
    }

    fn sample_prior(&self, rng: &mut SimRng) -> ParameterVector {
        self.prior().sample(rng)
    }
}
