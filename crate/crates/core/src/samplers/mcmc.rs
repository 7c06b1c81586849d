use rand::Rng;

use super::{Chain, ChainState, ProposalSpec, RunConfig};
use crate::error::{AbcError, Result};
use crate::exec::Execution;
use crate::model::{AbcKernel, DiscrepancyPipeline, GenerativeModel, Prior};
use crate::rng::{chain_seed, derive_seed, rng_from_seed, stream_rng};

const INIT_TAG: u64 = 0x1A17;

/// Log of the Metropolis-Hastings ratio
/// `π(θ') q(θ'→θ) π_ε(ε') / (π(θ) q(θ→θ') π_ε(ε))`.
///
/// Returns `-inf` when the candidate lies outside the prior support. The current
/// state must have positive prior density and kernel weight.
pub fn ln_mh_ratio(
    prior: &dyn Prior,
    kernel: &AbcKernel,
    proposal: &ProposalSpec,
    current: &ChainState,
    candidate: &ChainState,
) -> Result<f64> {
    let ln_kernel_current = kernel.ln_shape(current.eps.values());
    let ln_prior_current = prior.ln_density(current.theta.values());
    if ln_kernel_current == f64::NEG_INFINITY || ln_prior_current == f64::NEG_INFINITY {
        return Err(AbcError::InvariantBreach(format!(
            "current state has zero weight (prior {ln_prior_current}, kernel {ln_kernel_current}): {current:?}"
        )));
    }
    let ln_prior_candidate = prior.ln_density(candidate.theta.values());
    if ln_prior_candidate == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let ln_r = ln_prior_candidate - ln_prior_current
        + proposal.ln_q_ratio(&current.theta, &candidate.theta)
        + kernel.ln_shape(candidate.eps.values())
        - ln_kernel_current;
    if ln_r.is_nan() {
        return Err(AbcError::NumericalFault {
            message: "Metropolis-Hastings ratio is NaN".into(),
            state: format!("current={current:?} candidate={candidate:?}"),
        });
    }
    Ok(ln_r)
}

/// The Metropolis-Hastings ratio itself; the acceptance probability is `min(1, ratio)`.
pub fn mh_ratio(
    prior: &dyn Prior,
    kernel: &AbcKernel,
    proposal: &ProposalSpec,
    current: &ChainState,
    candidate: &ChainState,
) -> Result<f64> {
    ln_mh_ratio(prior, kernel, proposal, current, candidate).map(f64::exp)
}

/// Draws θ from the prior and simulates until the error has positive kernel weight.
pub fn init_state(
    model: &dyn GenerativeModel,
    pipeline: &DiscrepancyPipeline,
    kernel: &AbcKernel,
    seed: u64,
    budget: u64,
) -> Result<ChainState> {
    if budget == 0 {
        return Err(AbcError::Config(
            "initialisation budget must be positive".into(),
        ));
    }
    for attempt in 0..budget {
        let mut rng = stream_rng(seed, attempt);
        let theta = model.sample_prior(&mut rng);
        let x = model.simulate(&theta, rng.random())?;
        let eps = pipeline.discrepancy(&x)?;
        if kernel.ln_shape(eps.values()) > f64::NEG_INFINITY {
            return Ok(ChainState {
                theta,
                eps,
                accepted: true,
                iteration: 0,
            });
        }
    }
    Err(AbcError::BudgetExhausted {
        attempts: budget,
        hint: "no prior draw landed inside the kernel support; try a larger tau or a larger budget"
            .into(),
    })
}

fn check_dims(
    model: &dyn GenerativeModel,
    pipeline: &DiscrepancyPipeline,
    kernel: &AbcKernel,
) -> Result<()> {
    if kernel.dim() != pipeline.k() {
        return Err(AbcError::Config(format!(
            "kernel has {} scales but the pipeline has {} summaries",
            kernel.dim(),
            pipeline.k()
        )));
    }
    if model.theta_dim() == 0 {
        return Err(AbcError::Config("model has no parameters".into()));
    }
    Ok(())
}

/// Runs chain `chain_index` of a Metropolis-Hastings sampler over (θ, x, ε).
///
/// Each iteration proposes θ', simulates x' and its error ε', and accepts with
/// probability `min(1, r)`. On rejection the previous (θ, ε) is carried over.
/// Proposals outside the prior support are rejected without simulating.
pub fn run_mcmc_chain(
    model: &dyn GenerativeModel,
    pipeline: &DiscrepancyPipeline,
    kernel: &AbcKernel,
    proposal: &ProposalSpec,
    config: &RunConfig,
    chain_index: usize,
) -> Result<Chain> {
    config.validate()?;
    proposal.validate()?;
    check_dims(model, pipeline, kernel)?;
    if proposal.step_scales.len() != model.theta_dim() {
        return Err(AbcError::Config(format!(
            "proposal has {} step scales but the model has {} parameters",
            proposal.step_scales.len(),
            model.theta_dim()
        )));
    }
    let prior = model.prior();
    let seed = chain_seed(config.seed, chain_index);
    let mut current = init_state(
        model,
        pipeline,
        kernel,
        derive_seed(seed, INIT_TAG),
        config.init_budget(),
    )?;
    let mut rng = rng_from_seed(seed);

    let burn_in = config.burn_in();
    let mut states = Vec::with_capacity((config.iterations - burn_in) / config.thin + 1);
    let mut accepted_total = 0u64;

    for it in 1..=config.iterations {
        let theta = proposal.propose(&current.theta, &mut rng);
        let sim_seed: u64 = rng.random();
        let u: f64 = rng.random();

        let accepted = if prior.in_support(theta.values()) {
            let x = model.simulate(&theta, sim_seed)?;
            let candidate = ChainState {
                eps: pipeline.discrepancy(&x)?,
                theta,
                accepted: true,
                iteration: it as u64,
            };
            let ln_r = ln_mh_ratio(prior, kernel, proposal, &current, &candidate)?;
            if u < ln_r.exp() {
                current = candidate;
                true
            } else {
                false
            }
        } else {
            false
        };
        accepted_total += accepted as u64;
        current.accepted = accepted;
        current.iteration = it as u64;

        if it > burn_in && (it - burn_in - 1).is_multiple_of(config.thin) {
            states.push(current.clone());
        }
    }

    let proposals = config.iterations as u64;
    Ok(Chain {
        states,
        proposals,
        accepted: accepted_total,
        acceptance_rate: accepted_total as f64 / proposals as f64,
        config: config.clone(),
        chain_index,
        model_label: model.label().to_string(),
        theta_names: model.param_names(),
        eps_names: pipeline.names(),
        kernel: kernel.clone(),
        pipeline: pipeline.describe(),
    })
}

/// Chain 0 of [`run_mcmc_chain`].
pub fn run_mcmc(
    model: &dyn GenerativeModel,
    pipeline: &DiscrepancyPipeline,
    kernel: &AbcKernel,
    proposal: &ProposalSpec,
    config: &RunConfig,
) -> Result<Chain> {
    run_mcmc_chain(model, pipeline, kernel, proposal, config, 0)
}

/// `config.chains` independent chains with disjoint seed streams, one per worker.
pub fn run_mcmc_chains(
    model: &dyn GenerativeModel,
    pipeline: &DiscrepancyPipeline,
    kernel: &AbcKernel,
    proposal: &ProposalSpec,
    config: &RunConfig,
    exec: Execution,
) -> Result<Vec<Chain>> {
    config.validate()?;
    exec.try_map(config.chains, |c| {
        run_mcmc_chain(model, pipeline, kernel, proposal, config, c)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dataset, ErrorVector, KernelFamily, ParameterVector, PriorSpec, Summary};
    use crate::models::{GaussianLocationModel, PoissonModel};

    fn state(theta: f64, eps: f64) -> ChainState {
        ChainState {
            theta: ParameterVector::new(vec![theta]).unwrap(),
            eps: ErrorVector::new(vec![eps]).unwrap(),
            accepted: true,
            iteration: 0,
        }
    }

    #[test]
    fn ratio_examples() {
        let flat = PriorSpec::Uniform {
            lower: -10.0,
            upper: 10.0,
        };
        let laplace = AbcKernel::new(KernelFamily::Laplace, vec![0.1]).unwrap();
        let q = ProposalSpec::gaussian(vec![1.0]).unwrap();
        let cur = state(0.0, 0.2);
        assert_eq!(mh_ratio(&flat, &laplace, &q, &cur, &cur).unwrap(), 1.0);
        let r = mh_ratio(&flat, &laplace, &q, &cur, &state(1.0, 0.1)).unwrap();
        assert!((r - 2f64.exp()).abs() < 1e-12 && (r - 7.389).abs() < 1e-3);
        assert_eq!(
            mh_ratio(&flat, &laplace, &q, &cur, &state(11.0, 0.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn flat_prior_symmetric_q_reduces_to_kernel_ratio() {
        let flat = PriorSpec::Uniform {
            lower: -10.0,
            upper: 10.0,
        };
        let g = AbcKernel::new(KernelFamily::Gaussian, vec![0.7]).unwrap();
        let q = ProposalSpec::gaussian(vec![1.0]).unwrap();
        let (a, b) = (state(1.0, 0.3), state(-2.0, 1.1));
        let expected = g.weight(&[1.1]).unwrap() / g.weight(&[0.3]).unwrap();
        assert!((mh_ratio(&flat, &g, &q, &a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_current_state_is_an_invariant_breach() {
        let flat = PriorSpec::Uniform {
            lower: -10.0,
            upper: 10.0,
        };
        let boxk = AbcKernel::new(KernelFamily::UniformBox, vec![1.0]).unwrap();
        let q = ProposalSpec::gaussian(vec![1.0]).unwrap();
        let res = mh_ratio(&flat, &boxk, &q, &state(0.0, 3.0), &state(0.0, 0.0));
        assert!(matches!(res, Err(AbcError::InvariantBreach(_))));
    }

    #[test]
    fn init_state_examples() {
        let model = GaussianLocationModel::with_normal_prior(1.0, 1, 0.0, 1.0).unwrap();
        let pipeline =
            DiscrepancyPipeline::new(vec![Summary::Mean], &Dataset::new(vec![50.0]).unwrap())
                .unwrap();
        let g = AbcKernel::new(KernelFamily::Gaussian, vec![1.0]).unwrap();
        assert!(init_state(&model, &pipeline, &g, 1, 1).is_ok());
        let wide = AbcKernel::new(KernelFamily::UniformBox, vec![1e6]).unwrap();
        assert!(init_state(&model, &pipeline, &wide, 1, 1).is_ok());
        let narrow = AbcKernel::new(KernelFamily::UniformBox, vec![1e-3]).unwrap();
        assert!(matches!(
            init_state(&model, &pipeline, &narrow, 1, 50),
            Err(AbcError::BudgetExhausted { attempts: 50, .. })
        ));
    }

    #[test]
    fn rejected_steps_carry_the_previous_state() {
        let model = PoissonModel::new(PriorSpec::exponential_grid(
            (1..=10).map(|i| i as f64 * 0.5).collect(),
            1.0,
        ))
        .unwrap();
        let pipeline =
            DiscrepancyPipeline::new(vec![Summary::Mean], &Dataset::new(vec![3.0]).unwrap())
                .unwrap();
        let kernel = AbcKernel::new(KernelFamily::DiscreteGeometric, vec![1.0]).unwrap();
        let q = ProposalSpec::default_for(model.prior());
        let cfg = RunConfig::new(5000, 9).with_burn_in(0.0);
        let chain = run_mcmc(&model, &pipeline, &kernel, &q, &cfg).unwrap();
        assert_eq!(chain.len(), 5000);
        for w in chain.states.windows(2) {
            assert_eq!(w[1].iteration, w[0].iteration + 1);
            if !w[1].accepted {
                assert_eq!(w[1].theta, w[0].theta);
                assert_eq!(w[1].eps, w[0].eps);
            }
        }
        let accepted = chain.states.iter().filter(|s| s.accepted).count() as u64;
        assert_eq!(accepted, chain.accepted);
    }

    #[test]
    fn burn_in_and_thinning() {
        let model = PoissonModel::unit_exponential();
        let pipeline =
            DiscrepancyPipeline::new(vec![Summary::Mean], &Dataset::new(vec![1.0]).unwrap())
                .unwrap();
        let kernel = AbcKernel::new(KernelFamily::DiscreteGeometric, vec![2.0]).unwrap();
        let q = ProposalSpec::gaussian(vec![0.5]).unwrap();
        let cfg = RunConfig::new(1000, 1).with_thin(10);
        let chain = run_mcmc(&model, &pipeline, &kernel, &q, &cfg).unwrap();
        assert_eq!(chain.len(), 80);
        assert_eq!(chain.states[0].iteration, 201);
        assert_eq!(chain.states[1].iteration, 211);
    }

    #[test]
    fn kernel_pipeline_dimension_mismatch() {
        let model = PoissonModel::unit_exponential();
        let pipeline =
            DiscrepancyPipeline::new(vec![Summary::Mean], &Dataset::new(vec![1.0]).unwrap())
                .unwrap();
        let kernel = AbcKernel::isotropic(KernelFamily::Gaussian, 1.0, 2).unwrap();
        let q = ProposalSpec::gaussian(vec![0.5]).unwrap();
        assert!(run_mcmc(&model, &pipeline, &kernel, &q, &RunConfig::new(10, 1)).is_err());
    }
}
