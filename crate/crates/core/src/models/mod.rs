//! Concrete data-generating processes, observed-data sources and named presets.

mod presets;

pub use presets::{preset, preset_names, Preset, DATA_SEED};

use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{AbcError, Result};
use crate::model::{Dataset, GenerativeModel, ParameterVector, Prior, PriorSpec, Summary};
use crate::rng::rng_from_seed;

/// Single count x ~ Poisson(θ).
#[derive(Clone, Debug)]
pub struct PoissonModel {
    prior: PriorSpec,
}

impl PoissonModel {
    pub fn new(prior: PriorSpec) -> Result<Self> {
        prior.validate()?;
        if prior.dim() != 1 {
            return Err(AbcError::Config(
                "poisson model takes a one-dimensional prior".into(),
            ));
        }
        Ok(Self { prior })
    }

    /// Rate prior Exponential(1).
    pub fn unit_exponential() -> Self {
        Self {
            prior: PriorSpec::Exponential { rate: 1.0 },
        }
    }
}

impl GenerativeModel for PoissonModel {
    fn label(&self) -> &str {
        "poisson"
    }

    fn param_names(&self) -> Vec<String> {
        vec!["theta".into()]
    }

    fn prior(&self) -> &dyn Prior {
        &self.prior
    }

    fn simulate(&self, theta: &ParameterVector, seed: u64) -> Result<Dataset> {
        let rate = theta[0];
        if rate < 0.0 {
            return Err(AbcError::Input(format!(
                "poisson rate must be nonnegative, got {rate}"
            )));
        }
        if rate == 0.0 {
            return Dataset::new(vec![0.0]);
        }
        let dist = Poisson::new(rate).map_err(|e| AbcError::Input(e.to_string()))?;
        Dataset::new(vec![dist.sample(&mut rng_from_seed(seed))])
    }
}

/// `n_obs` draws from N(θ, variance) with the variance fixed.
#[derive(Clone, Debug)]
pub struct GaussianLocationModel {
    variance: f64,
    n_obs: usize,
    prior: PriorSpec,
}

impl GaussianLocationModel {
    pub fn new(variance: f64, n_obs: usize, prior: PriorSpec) -> Result<Self> {
        prior.validate()?;
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(AbcError::Config(format!(
                "variance must be positive, got {variance}"
            )));
        }
        if n_obs == 0 || prior.dim() != 1 {
            return Err(AbcError::Config(
                "gaussian location model needs n_obs ≥ 1 and a 1-d prior".into(),
            ));
        }
        Ok(Self {
            variance,
            n_obs,
            prior,
        })
    }

    /// N(θ⋆, h²) prior on the mean.
    pub fn with_normal_prior(
        variance: f64,
        n_obs: usize,
        theta_star: f64,
        h2: f64,
    ) -> Result<Self> {
        Self::new(
            variance,
            n_obs,
            PriorSpec::Normal {
                mean: theta_star,
                variance: h2,
            },
        )
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

impl GenerativeModel for GaussianLocationModel {
    fn label(&self) -> &str {
        "gaussian-location"
    }

    fn param_names(&self) -> Vec<String> {
        vec!["theta".into()]
    }

    fn prior(&self) -> &dyn Prior {
        &self.prior
    }

    fn simulate(&self, theta: &ParameterVector, seed: u64) -> Result<Dataset> {
        let dist = Normal::new(theta[0], self.variance.sqrt())
            .map_err(|e| AbcError::Input(e.to_string()))?;
        let mut rng = rng_from_seed(seed);
        Dataset::new((0..self.n_obs).map(|_| dist.sample(&mut rng)).collect())
    }
}

/// `n_obs` draws from N(μ, σ²) with θ = (μ, σ²).
#[derive(Clone, Debug)]
pub struct GaussianTwoParamModel {
    n_obs: usize,
    prior: PriorSpec,
}

impl GaussianTwoParamModel {
    pub fn new(n_obs: usize, prior: PriorSpec) -> Result<Self> {
        prior.validate()?;
        if n_obs == 0 || prior.dim() != 2 {
            return Err(AbcError::Config(
                "two-parameter gaussian needs n_obs ≥ 1 and a 2-d prior".into(),
            ));
        }
        Ok(Self { n_obs, prior })
    }
}

impl GenerativeModel for GaussianTwoParamModel {
    fn label(&self) -> &str {
        "gaussian-two-param"
    }

    fn param_names(&self) -> Vec<String> {
        vec!["mu".into(), "sigma2".into()]
    }

    fn prior(&self) -> &dyn Prior {
        &self.prior
    }

    fn simulate(&self, theta: &ParameterVector, seed: u64) -> Result<Dataset> {
        let (mu, s2) = (theta[0], theta[1]);
        if s2 < 0.0 {
            return Err(AbcError::Input(format!(
                "variance must be nonnegative, got {s2}"
            )));
        }
        if s2 == 0.0 {
            return Dataset::new(vec![mu; self.n_obs]);
        }
        let dist = Normal::new(mu, s2.sqrt()).map_err(|e| AbcError::Input(e.to_string()))?;
        let mut rng = rng_from_seed(seed);
        Dataset::new((0..self.n_obs).map(|_| dist.sample(&mut rng)).collect())
    }
}

/// Serializable description of a builtin model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Poisson {
        prior: PriorSpec,
    },
    GaussianLocation {
        variance: f64,
        n_obs: usize,
        prior: PriorSpec,
    },
    GaussianTwoParam {
        n_obs: usize,
        prior: PriorSpec,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn GenerativeModel>> {
        Ok(match self {
            ModelSpec::Poisson { prior } => Box::new(PoissonModel::new(prior.clone())?),
            ModelSpec::GaussianLocation {
                variance,
                n_obs,
                prior,
            } => Box::new(GaussianLocationModel::new(
                *variance,
                *n_obs,
                prior.clone(),
            )?),
            ModelSpec::GaussianTwoParam { n_obs, prior } => {
                Box::new(GaussianTwoParamModel::new(*n_obs, prior.clone())?)
            }
        })
    }

    pub fn prior(&self) -> &PriorSpec {
        match self {
            ModelSpec::Poisson { prior }
            | ModelSpec::GaussianLocation { prior, .. }
            | ModelSpec::GaussianTwoParam { prior, .. } => prior,
        }
    }
}

/// i.i.d. Exponential(rate) observations regenerated from a seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialDataSource {
    pub rate: f64,
    pub n: usize,
    pub seed: u64,
}

impl ExponentialDataSource {
    pub fn make_observed_dataset(&self) -> Result<Dataset> {
        make_observed_dataset(self)
    }
}

pub fn make_observed_dataset(source: &ExponentialDataSource) -> Result<Dataset> {
    if !(source.rate > 0.0 && source.rate.is_finite()) {
        return Err(AbcError::Config(format!(
            "rate must be positive, got {}",
            source.rate
        )));
    }
    if source.n == 0 {
        return Err(AbcError::Config("observed dataset needs n ≥ 1".into()));
    }
    let dist = Exp::new(source.rate).map_err(|e| AbcError::Config(e.to_string()))?;
    let mut rng = rng_from_seed(source.seed);
    Dataset::new((0..source.n).map(|_| dist.sample(&mut rng)).collect())
}

/// Where the observed data comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservedSpec {
    Exponential { rate: f64, n: usize, seed: u64 },
    Values { values: Vec<f64> },
}

impl ObservedSpec {
    pub fn dataset(&self) -> Result<Dataset> {
        match self {
            ObservedSpec::Exponential { rate, n, seed } => {
                make_observed_dataset(&ExponentialDataSource {
                    rate: *rate,
                    n: *n,
                    seed: *seed,
                })
            }
            ObservedSpec::Values { values } => Dataset::new(values.clone()),
        }
    }
}

pub fn builtin_summary(kind: Summary, data: &Dataset) -> Result<f64> {
    kind.evaluate(data)
}
