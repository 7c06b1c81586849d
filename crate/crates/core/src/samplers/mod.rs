//! Monte Carlo engines over the joint (θ, ε) target: rejection, Metropolis-Hastings,
//! and the prior / posterior predictive error samplers.

mod mcmc;
mod predictive;
mod rejection;

pub use mcmc::{init_state, ln_mh_ratio, mh_ratio, run_mcmc, run_mcmc_chain, run_mcmc_chains};
pub use predictive::{
    run_app, run_app_with, run_prior_predictive, run_prior_predictive_with, run_wapp,
    WeightedErrors,
};
pub use rejection::{run_rejection, run_rejection_chain, run_rejection_chains};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{AbcError, Result};
use crate::model::{AbcKernel, ErrorVector, ParameterVector, Prior};
use crate::rng::SimRng;

/// Default fraction of iterations discarded as burn-in.
pub const DEFAULT_BURN_IN: f64 = 0.2;
/// Default proposal step as a fraction of the prior's scale measure.
pub const DEFAULT_STEP_FRACTION: f64 = 0.1;
/// Prior draws allowed when searching for a starting state, unless configured.
pub const DEFAULT_INIT_BUDGET: u64 = 1_000_000;

fn default_burn_in() -> f64 {
    DEFAULT_BURN_IN
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// MCMC: number of proposals. Rejection: number of draws to retain.
    pub iterations: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in_fraction: f64,
    #[serde(default = "one")]
    pub chains: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub thin: usize,
    /// Simulation budget for rejection sampling and for finding an initial state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_simulations: Option<u64>,
}

impl RunConfig {
    pub fn new(iterations: usize, seed: u64) -> Self {
        Self {
            iterations,
            burn_in_fraction: DEFAULT_BURN_IN,
            chains: 1,
            seed,
            thin: 1,
            max_simulations: None,
        }
    }

    pub fn with_chains(mut self, chains: usize) -> Self {
        self.chains = chains;
        self
    }

    pub fn with_burn_in(mut self, fraction: f64) -> Self {
        self.burn_in_fraction = fraction;
        self
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn with_max_simulations(mut self, budget: u64) -> Self {
        self.max_simulations = Some(budget);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(AbcError::Config("iterations must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(AbcError::Config(format!(
                "burn_in_fraction must lie in [0, 1), got {}",
                self.burn_in_fraction
            )));
        }
        if self.chains == 0 || self.thin == 0 {
            return Err(AbcError::Config(
                "chains and thin must be at least 1".into(),
            ));
        }
        if self.max_simulations == Some(0) {
            return Err(AbcError::Config("max_simulations must be positive".into()));
        }
        Ok(())
    }

    pub fn burn_in(&self) -> usize {
        (self.burn_in_fraction * self.iterations as f64).floor() as usize
    }

    fn init_budget(&self) -> u64 {
        self.max_simulations.unwrap_or(DEFAULT_INIT_BUDGET)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProposalFamily {
    /// θ' = θ + N(0, diag(step²)).
    Gaussian,
    /// Each coordinate moves by ±step with probability 1/2.
    Lattice,
}

/// Symmetric random-walk proposal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalSpec {
    pub family: ProposalFamily,
    pub step_scales: Vec<f64>,
}

impl ProposalSpec {
    pub fn new(family: ProposalFamily, step_scales: Vec<f64>) -> Result<Self> {
        let spec = Self {
            family,
            step_scales,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(step_scales: Vec<f64>) -> Result<Self> {
        Self::new(ProposalFamily::Gaussian, step_scales)
    }

    /// Lattice walk on grid priors (step = grid spacing), otherwise Gaussian steps
    /// of 10% of each coordinate's prior scale.
    pub fn default_for(prior: &dyn Prior) -> Self {
        if prior.is_lattice() {
            Self {
                family: ProposalFamily::Lattice,
                step_scales: prior.scales(),
            }
        } else {
            Self {
                family: ProposalFamily::Gaussian,
                step_scales: prior
                    .scales()
                    .iter()
                    .map(|s| s * DEFAULT_STEP_FRACTION)
                    .collect(),
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.step_scales.is_empty()
            || self
                .step_scales
                .iter()
                .any(|s| !(*s > 0.0 && s.is_finite()))
        {
            return Err(AbcError::Config(
                "proposal step scales must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    pub fn propose(&self, theta: &ParameterVector, rng: &mut SimRng) -> ParameterVector {
        let values = theta
            .values()
            .iter()
            .zip(&self.step_scales)
            .map(|(t, s)| match self.family {
                ProposalFamily::Gaussian => {
                    let z: f64 = StandardNormal.sample(rng);
                    t + s * z
                }
                ProposalFamily::Lattice => {
                    if rng.random::<bool>() {
                        t + s
                    } else {
                        t - s
                    }
                }
            })
            .collect();
        ParameterVector::new(values).expect("finite proposal")
    }

    /// `ln q(θ'→θ) - ln q(θ→θ')`; both shipped families are symmetric.
    pub fn ln_q_ratio(&self, _from: &ParameterVector, _to: &ParameterVector) -> f64 {
        0.0
    }
}

/// One augmented state of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub theta: ParameterVector,
    pub eps: ErrorVector,
    pub accepted: bool,
    pub iteration: u64,
}

/// Retained states of one sampler run plus the context that produced them.
#[derive(Clone, Debug)]
pub struct Chain {
    pub states: Vec<ChainState>,
    pub proposals: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub config: RunConfig,
    pub chain_index: usize,
    pub model_label: String,
    pub theta_names: Vec<String>,
    pub eps_names: Vec<String>,
    pub kernel: AbcKernel,
    pub pipeline: String,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn theta_column(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.theta[i]).collect()
    }

    pub fn eps_column(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.eps[k]).collect()
    }

    pub fn thetas(&self) -> Vec<ParameterVector> {
        self.states.iter().map(|s| s.theta.clone()).collect()
    }

    pub fn k(&self) -> usize {
        self.eps_names.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PriorSpec;
    use crate::rng::rng_from_seed;

    #[test]
    fn run_config_validation() {
        assert!(RunConfig::new(0, 1).validate().is_err());
        assert!(RunConfig::new(10, 1).with_burn_in(1.0).validate().is_err());
        assert!(RunConfig::new(10, 1).with_thin(0).validate().is_err());
        assert_eq!(RunConfig::new(10, 1).burn_in(), 2);
    }

    #[test]
    fn default_proposals() {
        let p = ProposalSpec::default_for(&PriorSpec::Normal {
            mean: 0.0,
            variance: 4.0,
        });
        assert_eq!(p.family, ProposalFamily::Gaussian);
        assert!((p.step_scales[0] - 0.2).abs() < 1e-12);
        let grid = PriorSpec::exponential_grid(vec![0.5, 1.0, 1.5], 1.0);
        let p = ProposalSpec::default_for(&grid);
        assert_eq!(p.family, ProposalFamily::Lattice);
        assert_eq!(p.step_scales, vec![0.5]);
    }

    #[test]
    fn lattice_walk_moves_one_step() {
        let p = ProposalSpec::new(ProposalFamily::Lattice, vec![0.5]).unwrap();
        let mut rng = rng_from_seed(1);
        let theta = ParameterVector::new(vec![2.0]).unwrap();
        let mut ups = 0;
        for _ in 0..1000 {
            let next = p.propose(&theta, &mut rng)[0];
            assert!(next == 2.5 || next == 1.5);
            ups += (next == 2.5) as usize;
        }
        assert!((400..600).contains(&ups));
    }
}
