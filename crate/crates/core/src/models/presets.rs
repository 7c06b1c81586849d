//! Named, fully parameterized experiment setups.

use serde::Serialize;

use super::{ModelSpec, ObservedSpec};
use crate::error::{AbcError, Result};
use crate::model::{AbcKernel, KernelFamily, PriorSpec, Summary};
use crate::samplers::{ProposalFamily, ProposalSpec};

/// Seed of the shared Exponential(0.2), n = 100 observed dataset.
pub const DATA_SEED: u64 = 20090;

const N_OBS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub model: ModelSpec,
    pub observed: ObservedSpec,
    pub summaries: Vec<Summary>,
    pub kernel: AbcKernel,
    /// Tuned random-walk steps; `None` falls back to the prior-scale default.
    pub proposal: Option<ProposalSpec>,
}

const NAMES: [&str; 7] = [
    "ex3-tight",
    "ex3-flat",
    "ex5-figA",
    "ex5-figB",
    "appendix",
    "poisson-grid",
    "poisson",
];

pub fn preset_names() -> &'static [&'static str] {
    &NAMES
}

fn exponential_data() -> ObservedSpec {
    ObservedSpec::Exponential {
        rate: 0.2,
        n: N_OBS,
        seed: DATA_SEED,
    }
}

fn gaussian_steps(steps: &[f64]) -> Option<ProposalSpec> {
    Some(ProposalSpec {
        family: ProposalFamily::Gaussian,
        step_scales: steps.to_vec(),
    })
}

fn kernel(family: KernelFamily, tau: f64, k: usize) -> AbcKernel {
    AbcKernel::isotropic(family, tau, k).expect("preset kernel scales are positive")
}

pub fn preset(name: &str) -> Result<Preset> {
    let location = |mean: f64, variance: f64| ModelSpec::GaussianLocation {
        variance: 1.0,
        n_obs: N_OBS,
        prior: PriorSpec::Normal { mean, variance },
    };
    let mean_median = vec![Summary::Mean, Summary::Median];
    let p = match name {
        "ex3-tight" => Preset {
            name: "ex3-tight",
            description: "N(θ,1) location model, strong N(0, 0.1) prior, exponential data",
            model: location(0.0, 0.1),
            observed: exponential_data(),
            summaries: mean_median,
            kernel: kernel(KernelFamily::Laplace, 0.1, 2),
            proposal: gaussian_steps(&[0.2]),
        },
        "ex3-flat" => Preset {
            name: "ex3-flat",
            description: "N(θ,1) location model, nearly flat N(5, 1e5) prior, exponential data",
            model: location(5.0, 1e5),
            observed: exponential_data(),
            summaries: mean_median,
            kernel: kernel(KernelFamily::Laplace, 0.1, 2),
            proposal: gaussian_steps(&[2.0]),
        },
        "ex5-figA" => Preset {
            name: "ex5-figA",
            description: "N(μ,σ²) model, wide uniform μ prior (τ0 = 1000), IG(4, 75) on σ²",
            model: ModelSpec::GaussianTwoParam {
                n_obs: N_OBS,
                prior: PriorSpec::UniformInverseGamma {
                    mu0: 5.0,
                    tau0: 1000.0,
                    alpha0: 4.0,
                    beta0: 75.0,
                },
            },
            observed: exponential_data(),
            summaries: mean_median,
            kernel: kernel(KernelFamily::UniformBox, 1.6, 2),
            proposal: gaussian_steps(&[0.5, 10.0]),
        },
        "ex5-figB" => Preset {
            name: "ex5-figB",
            description: "N(μ,σ²) model, wide uniform μ prior (τ0 = 1000), IG(2, 1000) on σ²",
            model: ModelSpec::GaussianTwoParam {
                n_obs: N_OBS,
                prior: PriorSpec::UniformInverseGamma {
                    mu0: 5.0,
                    tau0: 1000.0,
                    alpha0: 2.0,
                    beta0: 1000.0,
                },
            },
            observed: exponential_data(),
            summaries: mean_median,
            kernel: kernel(KernelFamily::UniformBox, 1.6, 2),
            proposal: gaussian_steps(&[0.5, 100.0]),
        },
        "appendix" => Preset {
            name: "appendix",
            description:
                "N(μ,σ²) model, normal-inverse-gamma(5, 1, 4, 75) prior, mean-minus-median summary",
            model: ModelSpec::GaussianTwoParam {
                n_obs: N_OBS,
                prior: PriorSpec::NormalInverseGamma {
                    mu0: 5.0,
                    n0: 1.0,
                    alpha0: 4.0,
                    beta0: 75.0,
                },
            },
            observed: exponential_data(),
            summaries: vec![Summary::Symm],
            kernel: kernel(KernelFamily::UniformBox, 1.0, 1),
            proposal: None,
        },
        "poisson-grid" => Preset {
            name: "poisson-grid",
            description: "Poisson model on the θ grid 0.5..5.0 with Exp(1) weights, x0 = 3",
            model: ModelSpec::Poisson {
                prior: PriorSpec::exponential_grid((1..=10).map(|i| i as f64 * 0.5).collect(), 1.0),
            },
            observed: ObservedSpec::Values { values: vec![3.0] },
            summaries: vec![Summary::Mean],
            kernel: kernel(KernelFamily::DiscreteGeometric, 1.0, 1),
            proposal: Some(ProposalSpec {
                family: ProposalFamily::Lattice,
                step_scales: vec![0.5],
            }),
        },
        "poisson" => Preset {
            name: "poisson",
            description: "Poisson model with Exp(1) prior, x0 = 1",
            model: ModelSpec::Poisson {
                prior: PriorSpec::Exponential { rate: 1.0 },
            },
            observed: ObservedSpec::Values { values: vec![1.0] },
            summaries: vec![Summary::Mean],
            kernel: kernel(KernelFamily::DiscreteGeometric, 2.0, 1),
            proposal: gaussian_steps(&[0.5]),
        },
        other => {
            return Err(AbcError::Config(format!(
                "unknown preset `{other}`; known presets: {}",
                NAMES.join(", ")
            )))
        }
    };
    Ok(p)
}
