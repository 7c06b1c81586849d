use rand::Rng;

use super::{Chain, ChainState, RunConfig};
use crate::error::{AbcError, Result};
use crate::exec::Execution;
use crate::model::{AbcKernel, DiscrepancyPipeline, ErrorVector, GenerativeModel, ParameterVector};
use crate::rng::{chain_seed, stream_rng};

const BATCH: usize = 4096;
/// Simulations allowed per requested draw when no budget is configured.
const DEFAULT_BUDGET_PER_DRAW: u64 = 1000;

fn simulate_one(
    model: &dyn GenerativeModel,
    pipeline: &DiscrepancyPipeline,
    kernel: &AbcKernel,
    seed: u64,
    index: u64,
) -> Result<Option<(ParameterVector, ErrorVector)>> {
    let mut rng = stream_rng(seed, index);
    let theta = model.sample_prior(&mut rng);
    let x = model.simulate(&theta, rng.random())?;
    let eps = pipeline.discrepancy(&x)?;
    let u: f64 = rng.random();
    Ok((u < kernel.acceptance_probability(eps.values())).then_some((theta, eps)))
}

/// Rejection sampler for chain `chain_index`.
///
/// Draws θ from the prior, simulates, and keeps (θ, ε) with probability
/// `weight(ε)/weight(0)`; for the uniform box this is the indicator that every
/// |ε_k| ≤ τ_k/2. Stops after `config.iterations` accepted draws or when the
/// simulation budget runs out. Burn-in and thinning do not apply: draws are i.i.d.
///
/// Simulations are evaluated in parallel batches under `exec`; the result is
/// identical for every execution strategy.
pub fn run_rejection_chain(
    model: &dyn GenerativeModel,
    pipeline: &DiscrepancyPipeline,
    kernel: &AbcKernel,
    config: &RunConfig,
    chain_index: usize,
    exec: Execution,
) -> Result<Chain> {
    config.validate()?;
    if kernel.dim() != pipeline.k() {
        return Err(AbcError::Config(format!(
            "kernel has {} scales but the pipeline has {} summaries",
            kernel.dim(),
            pipeline.k()
        )));
    }
    let seed = chain_seed(config.seed, chain_index);
    let budget = config
        .max_simulations
        .unwrap_or(config.iterations as u64 * DEFAULT_BUDGET_PER_DRAW);

    let mut states = Vec::with_capacity(config.iterations.min(1 << 20));
    let mut simulations = 0u64;
    'outer: while states.len() < config.iterations && simulations < budget {
        let batch = (budget - simulations).min(BATCH as u64) as usize;
        let start = simulations;
        let results = exec.try_map(batch, |j| {
            simulate_one(model, pipeline, kernel, seed, start + j as u64)
        })?;
        for hit in results {
            simulations += 1;
            if let Some((theta, eps)) = hit {
                states.push(ChainState {
                    theta,
                    eps,
                    accepted: true,
                    iteration: simulations,
                });
                if states.len() == config.iterations {
                    break 'outer;
                }
            }
        }
    }
    if states.is_empty() {
        return Err(AbcError::BudgetExhausted {
            attempts: simulations,
            hint: "no simulation was accepted; try a larger tau or a larger max_simulations".into(),
        });
    }
    let accepted = states.len() as u64;
    Ok(Chain {
        states,
        proposals: simulations,
        accepted,
        acceptance_rate: accepted as f64 / simulations as f64,
        config: config.clone(),
        chain_index,
        model_label: model.label().to_string(),
        theta_names: model.param_names(),
        eps_names: pipeline.names(),
        kernel: kernel.clone(),
        pipeline: pipeline.describe(),
    })
}

pub fn run_rejection(
    model: &dyn GenerativeModel,
    pipeline: &DiscrepancyPipeline,
    kernel: &AbcKernel,
    config: &RunConfig,
) -> Result<Chain> {
    run_rejection_chain(model, pipeline, kernel, config, 0, Execution::default())
}

pub fn run_rejection_chains(
    model: &dyn GenerativeModel,
    pipeline: &DiscrepancyPipeline,
    kernel: &AbcKernel,
    config: &RunConfig,
    exec: Execution,
) -> Result<Vec<Chain>> {
    (0..config.chains)
        .map(|c| run_rejection_chain(model, pipeline, kernel, config, c, exec))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dataset, KernelFamily, PriorSpec, Summary};
    use crate::models::{GaussianLocationModel, PoissonModel};

    #[test]
    fn exact_match_kernel_only_keeps_zero_error() {
        let model = PoissonModel::unit_exponential();
        let pipeline =
            DiscrepancyPipeline::new(vec![Summary::Mean], &Dataset::new(vec![3.0]).unwrap())
                .unwrap();
        let kernel = AbcKernel::new(KernelFamily::UniformBox, vec![1.0]).unwrap();
        let chain = run_rejection(&model, &pipeline, &kernel, &RunConfig::new(500, 4)).unwrap();
        assert_eq!(chain.len(), 500);
        assert!(chain.states.iter().all(|s| s.eps[0] == 0.0));
        assert!(chain.acceptance_rate > 0.0 && chain.acceptance_rate < 1.0);
    }

    #[test]
    fn budget_exhaustion_reports_attempts() {
        let model = GaussianLocationModel::new(
            1.0,
            1,
            PriorSpec::Normal {
                mean: 0.0,
                variance: 1.0,
            },
        )
        .unwrap();
        let pipeline =
            DiscrepancyPipeline::new(vec![Summary::Mean], &Dataset::new(vec![100.0]).unwrap())
                .unwrap();
        let kernel = AbcKernel::new(KernelFamily::UniformBox, vec![0.01]).unwrap();
        let cfg = RunConfig::new(10, 1).with_max_simulations(5000);
        match run_rejection(&model, &pipeline, &kernel, &cfg) {
            Err(AbcError::BudgetExhausted { attempts, .. }) => assert_eq!(attempts, 5000),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn execution_strategy_does_not_change_draws() {
        let model = PoissonModel::unit_exponential();
        let pipeline =
            DiscrepancyPipeline::new(vec![Summary::Mean], &Dataset::new(vec![2.0]).unwrap())
                .unwrap();
        let kernel = AbcKernel::new(KernelFamily::DiscreteGeometric, vec![1.0]).unwrap();
        let cfg = RunConfig::new(3000, 8);
        let a = run_rejection_chain(&model, &pipeline, &kernel, &cfg, 0, Execution::Sequential)
            .unwrap();
        let b =
            run_rejection_chain(&model, &pipeline, &kernel, &cfg, 0, Execution::Parallel).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.proposals, b.proposals);
    }
}
