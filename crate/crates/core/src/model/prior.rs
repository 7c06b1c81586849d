use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::ParameterVector;
use crate::error::{AbcError, Result};
use crate::rng::SimRng;

/// Prior over θ: a seeded sampler and a density known up to a constant.
pub trait Prior: Send + Sync {
    fn dim(&self) -> usize;

    fn sample(&self, rng: &mut SimRng) -> ParameterVector;

    /// Log density up to an additive constant; `-inf` off the support.
    fn ln_density(&self, theta: &[f64]) -> f64;

    fn density(&self, theta: &[f64]) -> f64 {
        self.ln_density(theta).exp()
    }

    fn in_support(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && self.ln_density(theta) > f64::NEG_INFINITY
    }

    /// A scale measure per coordinate (standard deviation where finite, width otherwise).
    fn scales(&self) -> Vec<f64>;

    /// True when the support is a finite set of points.
    fn is_lattice(&self) -> bool {
        false
    }
}

/// The priors used by the builtin models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorSpec {
    Exponential {
        rate: f64,
    },
    Normal {
        mean: f64,
        variance: f64,
    },
    Uniform {
        lower: f64,
        upper: f64,
    },
    /// Finite support with masses proportional to `weights`.
    Grid {
        points: Vec<f64>,
        weights: Vec<f64>,
    },
    /// μ ∝ 1{|μ - μ0| ≤ τ0} independent of σ² ~ InvGamma(α0, β0).
    UniformInverseGamma {
        mu0: f64,
        tau0: f64,
        alpha0: f64,
        beta0: f64,
    },
    /// σ² ~ InvGamma(α0, β0), μ | σ² ~ N(μ0, σ²/n0).
    NormalInverseGamma {
        mu0: f64,
        n0: f64,
        alpha0: f64,
        beta0: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(AbcError::Config(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(AbcError::Config(format!("{name} must be finite, got {v}")))
    }
}

fn ln_inverse_gamma(x: f64, alpha: f64, beta: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NEG_INFINITY;
    }
    alpha * beta.ln() - ln_gamma(alpha) - (alpha + 1.0) * x.ln() - beta / x
}

fn ln_normal(x: f64, mean: f64, variance: f64) -> f64 {
    -0.5 * (2.0 * PI * variance).ln() - (x - mean) * (x - mean) / (2.0 * variance)
}

fn inverse_gamma_scale(alpha: f64, beta: f64) -> f64 {
    if alpha > 2.0 {
        beta / ((alpha - 1.0) * (alpha - 2.0).sqrt())
    } else if alpha > 1.0 {
        beta / (alpha - 1.0)
    } else {
        beta / (alpha + 1.0)
    }
}

fn sample_inverse_gamma(rng: &mut SimRng, alpha: f64, beta: f64) -> f64 {
    let g = Gamma::new(alpha, 1.0 / beta).expect("validated gamma parameters");
    1.0 / g.sample(rng)
}

impl PriorSpec {
    /// Exponential(rate) masses restricted to `points`.
    pub fn exponential_grid(points: Vec<f64>, rate: f64) -> Self {
        let weights = points.iter().map(|p| (-rate * p).exp()).collect();
        PriorSpec::Grid { points, weights }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PriorSpec::Exponential { rate } => positive("rate", *rate),
            PriorSpec::Normal { mean, variance } => {
                finite("mean", *mean)?;
                positive("variance", *variance)
            }
            PriorSpec::Uniform { lower, upper } => {
                finite("lower", *lower)?;
                finite("upper", *upper)?;
                if upper > lower {
                    Ok(())
                } else {
                    Err(AbcError::Config(format!(
                        "empty interval [{lower}, {upper}]"
                    )))
                }
            }
            PriorSpec::Grid { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return Err(AbcError::Config(
                        "grid prior needs equally many points and weights".into(),
                    ));
                }
                for p in points {
                    finite("grid point", *p)?;
                }
                for w in weights {
                    positive("grid weight", *w)?;
                }
                Ok(())
            }
            PriorSpec::UniformInverseGamma {
                mu0,
                tau0,
                alpha0,
                beta0,
            } => {
                finite("mu0", *mu0)?;
                positive("tau0", *tau0)?;
                positive("alpha0", *alpha0)?;
                positive("beta0", *beta0)
            }
            PriorSpec::NormalInverseGamma {
                mu0,
                n0,
                alpha0,
                beta0,
            } => {
                finite("mu0", *mu0)?;
                positive("n0", *n0)?;
                positive("alpha0", *alpha0)?;
                positive("beta0", *beta0)
            }
        }
    }

    fn grid_index(points: &[f64], x: f64) -> Option<usize> {
        points
            .iter()
            .position(|p| (p - x).abs() <= 1e-9 * p.abs().max(1.0))
    }
}

impl Prior for PriorSpec {
    fn dim(&self) -> usize {
        match self {
            PriorSpec::UniformInverseGamma { .. } | PriorSpec::NormalInverseGamma { .. } => 2,
            _ => 1,
        }
    }

    fn sample(&self, rng: &mut SimRng) -> ParameterVector {
        let values = match self {
            PriorSpec::Exponential { rate } => {
                vec![Exp::new(*rate).expect("validated rate").sample(rng)]
            }
            PriorSpec::Normal { mean, variance } => {
                vec![Normal::new(*mean, variance.sqrt())
                    .expect("validated normal")
                    .sample(rng)]
            }
            PriorSpec::Uniform { lower, upper } => vec![rng.random_range(*lower..*upper)],
            PriorSpec::Grid { points, weights } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut pick = points.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if u < *w {
                        pick = i;
                        break;
                    }
                    u -= w;
                }
                vec![points[pick]]
            }
            PriorSpec::UniformInverseGamma {
                mu0,
                tau0,
                alpha0,
                beta0,
            } => {
                let mu = rng.random_range(mu0 - tau0..=mu0 + tau0);
                vec![mu, sample_inverse_gamma(rng, *alpha0, *beta0)]
            }
            PriorSpec::NormalInverseGamma {
                mu0,
                n0,
                alpha0,
                beta0,
            } => {
                let s2 = sample_inverse_gamma(rng, *alpha0, *beta0);
                let mu = Normal::new(*mu0, (s2 / n0).sqrt())
                    .expect("positive variance")
                    .sample(rng);
                vec![mu, s2]
            }
        };
        ParameterVector::new(values).expect("prior draws are finite")
    }

    fn ln_density(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.dim() || theta.iter().any(|t| !t.is_finite()) {
            return f64::NEG_INFINITY;
        }
        match self {
            PriorSpec::Exponential { rate } => {
                if theta[0] >= 0.0 {
                    rate.ln() - rate * theta[0]
                } else {
                    f64::NEG_INFINITY
                }
            }
            PriorSpec::Normal { mean, variance } => ln_normal(theta[0], *mean, *variance),
            PriorSpec::Uniform { lower, upper } => {
                if (*lower..=*upper).contains(&theta[0]) {
                    -(upper - lower).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            PriorSpec::Grid { points, weights } => match Self::grid_index(points, theta[0]) {
                Some(i) => (weights[i] / weights.iter().sum::<f64>()).ln(),
                None => f64::NEG_INFINITY,
            },
            PriorSpec::UniformInverseGamma {
                mu0,
                tau0,
                alpha0,
                beta0,
            } => {
                if (theta[0] - mu0).abs() <= *tau0 {
                    ln_inverse_gamma(theta[1], *alpha0, *beta0)
                } else {
                    f64::NEG_INFINITY
                }
            }
            PriorSpec::NormalInverseGamma {
                mu0,
                n0,
                alpha0,
                beta0,
            } => {
                let s2 = theta[1];
                if !(s2 > 0.0) {
                    return f64::NEG_INFINITY;
                }
                ln_inverse_gamma(s2, *alpha0, *beta0) + ln_normal(theta[0], *mu0, s2 / n0)
            }
        }
    }

    fn scales(&self) -> Vec<f64> {
        match self {
            PriorSpec::Exponential { rate } => vec![1.0 / rate],
            PriorSpec::Normal { variance, .. } => vec![variance.sqrt()],
            PriorSpec::Uniform { lower, upper } => vec![upper - lower],
            PriorSpec::Grid { points, .. } => {
                let mut sorted = points.clone();
                sorted.sort_by(f64::total_cmp);
                let step = sorted
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .filter(|d| *d > 0.0)
                    .fold(f64::INFINITY, f64::min);
                vec![if step.is_finite() { step } else { 1.0 }]
            }
            PriorSpec::UniformInverseGamma {
                tau0,
                alpha0,
                beta0,
                ..
            } => {
                vec![2.0 * tau0, inverse_gamma_scale(*alpha0, *beta0)]
            }
            PriorSpec::NormalInverseGamma {
                n0, alpha0, beta0, ..
            } => {
                let s2 = inverse_gamma_scale(*alpha0, *beta0);
                vec![(s2 / n0).sqrt(), s2]
            }
        }
    }

    fn is_lattice(&self) -> bool {
        matches!(self, PriorSpec::Grid { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum M3PriorVariant {
    Independent,
    Conjugate,
}

/// Density (up to a constant) of the two-parameter Gaussian model's prior at
/// `theta = (μ, σ²)`.
///
/// `hyper` is `(μ0, τ0, α0, β0)` for the independent variant and
/// `(μ0, n0, α0, β0)` for the conjugate one. σ² ≤ 0 gives 0.
pub fn prior_density_m3(
    variant: M3PriorVariant,
    theta: &ParameterVector,
    hyper: &ParameterVector,
) -> Result<f64> {
    if hyper.len() != 4 || theta.len() != 2 {
        return Err(AbcError::Input(
            "expected theta = (mu, sigma2) and four hyperparameters".into(),
        ));
    }
    let h = hyper.values();
    let spec = match variant {
        M3PriorVariant::Independent => PriorSpec::UniformInverseGamma {
            mu0: h[0],
            tau0: h[1],
            alpha0: h[2],
            beta0: h[3],
        },
        M3PriorVariant::Conjugate => PriorSpec::NormalInverseGamma {
            mu0: h[0],
            n0: h[1],
            alpha0: h[2],
            beta0: h[3],
        },
    };
    spec.validate()?;
    Ok(spec.density(theta.values()))
}
