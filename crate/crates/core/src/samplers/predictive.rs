use rand::Rng;

use crate::error::{AbcError, Result};
use crate::exec::Execution;
use crate::model::{AbcKernel, DiscrepancyPipeline, ErrorVector, GenerativeModel, ParameterVector};
use crate::rng::stream_rng;

/// Exact draws from the prior predictive error law: θ ~ prior, x ~ f(·|θ), ε = ρ(S(x), S(x0)).
pub fn run_prior_predictive_with(
    model: &dyn GenerativeModel,
    pipeline: &DiscrepancyPipeline,
    n_draws: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<ErrorVector>> {
    if n_draws == 0 {
        return Err(AbcError::Input("n_draws must be at least 1".into()));
    }
    exec.try_map(n_draws, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let theta = model.sample_prior(&mut rng);
        let x = model.simulate(&theta, rng.random())?;
        pipeline.discrepancy(&x)
    })
}

pub fn run_prior_predictive(
    model: &dyn GenerativeModel,
    pipeline: &DiscrepancyPipeline,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<ErrorVector>> {
    run_prior_predictive_with(model, pipeline, n_draws, seed, Execution::default())
}

/// Approximate posterior predictive (APP) error draws: θ resampled uniformly from
/// `posterior_thetas`, then x ~ f(·|θ) and ε = ρ(S(x), S(x0)).
pub fn run_app_with(
    posterior_thetas: &[ParameterVector],
    model: &dyn GenerativeModel,
    pipeline: &DiscrepancyPipeline,
    n_draws: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<ErrorVector>> {
    if posterior_thetas.is_empty() {
        return Err(AbcError::Input(
            "APP needs at least one posterior θ draw".into(),
        ));
    }
    if n_draws == 0 {
        return Err(AbcError::Input("n_draws must be at least 1".into()));
    }
    exec.try_map(n_draws, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let theta = &posterior_thetas[rng.random_range(0..posterior_thetas.len())];
        let x = model.simulate(theta, rng.random())?;
        pipeline.discrepancy(&x)
    })
}

pub fn run_app(
    posterior_thetas: &[ParameterVector],
    model: &dyn GenerativeModel,
    pipeline: &DiscrepancyPipeline,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<ErrorVector>> {
    run_app_with(
        posterior_thetas,
        model,
        pipeline,
        n_draws,
        seed,
        Execution::default(),
    )
}

/// APP draws paired with kernel weights (wAPP).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedErrors {
    pub draws: Vec<ErrorVector>,
    /// `weight(ε)/weight(0)`, so a flat kernel gives unit weights.
    pub weights: Vec<f64>,
}

impl WeightedErrors {
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|e| e[k]).collect()
    }

    pub fn normalized_weights(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }
}

/// Weighted approximate posterior predictive (wAPP) error sample.
pub fn run_wapp(app_draws: &[ErrorVector], kernel: &AbcKernel) -> Result<WeightedErrors> {
    if app_draws.is_empty() {
        return Err(AbcError::Input("wAPP needs at least one APP draw".into()));
    }
    let mut weights = Vec::with_capacity(app_draws.len());
    for eps in app_draws {
        if eps.len() != kernel.dim() {
            return Err(AbcError::Input(format!(
                "error draw has {} dims, kernel {}",
                eps.len(),
                kernel.dim()
            )));
        }
        weights.push(kernel.acceptance_probability(eps.values()));
    }
    if weights.iter().all(|w| *w == 0.0) {
        return Err(AbcError::DegenerateWeights(
            "every re-simulated error has zero kernel weight; tau is too small for the re-simulation volatility".into(),
        ));
    }
    Ok(WeightedErrors {
        draws: app_draws.to_vec(),
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dataset, KernelFamily, Summary};
    use crate::models::PoissonModel;

    fn setup() -> (PoissonModel, DiscrepancyPipeline) {
        let pipeline =
            DiscrepancyPipeline::new(vec![Summary::Mean], &Dataset::new(vec![1.0]).unwrap())
                .unwrap();
        (PoissonModel::unit_exponential(), pipeline)
    }

    #[test]
    fn constant_summary_gives_identical_errors() {
        let (model, _) = setup();
        let pipeline = DiscrepancyPipeline::new(
            vec![Summary::Constant(4.0)],
            &Dataset::new(vec![1.0]).unwrap(),
        )
        .unwrap();
        let draws = run_prior_predictive(&model, &pipeline, 200, 3).unwrap();
        assert!(draws.iter().all(|e| e[0] == 0.0));
    }

    #[test]
    fn point_mass_app_matches_fixed_theta_simulation() {
        let (model, pipeline) = setup();
        let theta = vec![ParameterVector::new(vec![2.5]).unwrap()];
        let draws = run_app(&theta, &model, &pipeline, 20_000, 7).unwrap();
        let mean: f64 = draws.iter().map(|e| e[0]).sum::<f64>() / draws.len() as f64;
        // ε = x - 1 with x ~ Poisson(2.5)
        assert!((mean - 1.5).abs() < 0.05, "{mean}");
        assert!(draws.iter().all(|e| e[0] >= -1.0 && e[0].fract() == 0.0));
    }

    #[test]
    fn app_requires_thetas() {
        let (model, pipeline) = setup();
        assert!(matches!(
            run_app(&[], &model, &pipeline, 10, 1),
            Err(AbcError::Input(_))
        ));
    }

    #[test]
    fn wapp_weights() {
        let draws: Vec<ErrorVector> = [0.0, 1.0, -2.0]
            .iter()
            .map(|e| ErrorVector::new(vec![*e]).unwrap())
            .collect();
        let flat = AbcKernel::new(KernelFamily::DiscreteGeometric, vec![f64::INFINITY]).unwrap();
        assert_eq!(run_wapp(&draws, &flat).unwrap().weights, vec![1.0; 3]);
        let geo = AbcKernel::new(KernelFamily::DiscreteGeometric, vec![1.0]).unwrap();
        assert_eq!(
            run_wapp(&draws, &geo).unwrap().weights,
            vec![1.0, 0.5, 0.25]
        );
        let single = run_wapp(&draws[1..2], &geo).unwrap();
        assert_eq!(single.normalized_weights(), vec![1.0]);
        let tight = AbcKernel::new(KernelFamily::UniformBox, vec![0.5]).unwrap();
        assert!(matches!(
            run_wapp(&draws[1..], &tight),
            Err(AbcError::DegenerateWeights(_))
        ));
    }
}
