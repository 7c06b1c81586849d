//! Closed-form reference quantities for the shifted-Poisson and Gaussian
//! location-family examples.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{AbcError, Result};

/// A Gaussian law for a scalar error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianErrorLaw {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianErrorLaw {
    pub fn pdf(&self, e: f64) -> f64 {
        (-(e - self.mean).powi(2) / (2.0 * self.variance)).exp() / (2.0 * PI * self.variance).sqrt()
    }

    pub fn cdf(&self, e: f64) -> f64 {
        Normal::new(self.mean, self.variance.sqrt())
            .expect("positive variance")
            .cdf(e)
    }
}

/// Probability masses on an integer lattice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscretePmf {
    pub support: Vec<i64>,
    pub masses: Vec<f64>,
}

impl DiscretePmf {
    /// Normalizes `masses`; the support need not be contiguous.
    pub fn from_weights(support: Vec<i64>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() || support.is_empty() {
            return Err(AbcError::Input(
                "pmf support and weights must be nonempty and of equal length".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(AbcError::Input(
                "pmf weights must be finite, nonnegative and not all zero".into(),
            ));
        }
        Ok(Self {
            support,
            masses: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Empirical pmf of integer-valued draws, optionally weighted.
    pub fn empirical(values: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        let mut bins: BTreeMap<i64, f64> = BTreeMap::new();
        for (i, v) in values.iter().enumerate() {
            if v.fract() != 0.0 || !v.is_finite() {
                return Err(AbcError::Input(format!(
                    "value {v} is not on the integer lattice"
                )));
            }
            *bins.entry(*v as i64).or_default() += weights.map_or(1.0, |w| w[i]);
        }
        let (support, weights) = bins.into_iter().unzip();
        Self::from_weights(support, weights)
    }

    pub fn mass(&self, e: i64) -> f64 {
        self.support
            .iter()
            .position(|s| *s == e)
            .map_or(0.0, |i| self.masses[i])
    }

    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.masses)
            .map(|(s, m)| *s as f64 * m)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn as_map(&self) -> BTreeMap<i64, f64> {
        self.support
            .iter()
            .copied()
            .zip(self.masses.iter().copied())
            .collect()
    }
}

fn ln_poisson(x: i64, theta: f64) -> f64 {
    if x < 0 {
        return f64::NEG_INFINITY;
    }
    if theta == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    x as f64 * theta.ln() - theta - ln_gamma(x as f64 + 1.0)
}

/// Shifted Poisson error density: `θ^(x0+ε) e^(-θ) / (x0+ε)!` on `x0 + ε ≥ 0`.
/// No truncation or renormalization in `x0` is applied.
pub fn shifted_poisson_xi(theta: f64, x0: u64, eps: i64) -> f64 {
    ln_poisson(x0 as i64 + eps, theta).exp()
}

/// Prior predictive error law N(θ⋆ - x0, h² + 1) of the unit-variance location model.
pub fn gaussian_prior_predictive_error(theta_star: f64, h2: f64, x0: f64) -> GaussianErrorLaw {
    gaussian_prior_predictive_error_v(theta_star, h2, x0, 1.0)
}

/// As [`gaussian_prior_predictive_error`] for observation variance `v`.
pub fn gaussian_prior_predictive_error_v(
    theta_star: f64,
    h2: f64,
    x0: f64,
    v: f64,
) -> GaussianErrorLaw {
    GaussianErrorLaw {
        mean: theta_star - x0,
        variance: h2 + v,
    }
}

/// Posterior error law under a Gaussian kernel of scale `tau`: the product of
/// N(θ⋆ - x0, h² + 1) and N(0, τ²), with mean `τ²(θ⋆-x0)/(τ²+h²+1)` and variance
/// `(h²+1)τ²/(τ²+h²+1)`. An infinite `tau` returns the prior predictive law.
pub fn gaussian_fitted_posterior_error(
    theta_star: f64,
    h2: f64,
    x0: f64,
    tau: f64,
) -> Result<GaussianErrorLaw> {
    if !(tau > 0.0) || !(h2 >= 0.0) {
        return Err(AbcError::Config(format!(
            "need tau > 0 and h2 ≥ 0, got tau={tau}, h2={h2}"
        )));
    }
    let prior_pred = gaussian_prior_predictive_error(theta_star, h2, x0);
    if tau.is_infinite() {
        return Ok(prior_pred);
    }
    let t2 = tau * tau;
    let s = prior_pred.variance;
    Ok(GaussianErrorLaw {
        mean: t2 * prior_pred.mean / (t2 + s),
        variance: s * t2 / (t2 + s),
    })
}

/// Approximate Bayes factor of the variance-3 location model against the
/// variance-1 model under a Gaussian kernel of variance `tau2`:
/// `sqrt((τ²+h²+1)/(τ²+h²+3)) exp(d²/((τ²+h²+1)(τ²+h²+3)))` with `d = θ⋆ - x0`.
pub fn approx_bayes_factor(x0: f64, theta_star: f64, h2: f64, tau2: f64) -> Result<f64> {
    if !(h2 >= 0.0) || !(tau2 >= 0.0) {
        return Err(AbcError::Config(format!(
            "need h2 ≥ 0 and tau2 ≥ 0, got h2={h2}, tau2={tau2}"
        )));
    }
    let a = tau2 + h2 + 1.0;
    let b = tau2 + h2 + 3.0;
    let d = theta_star - x0;
    Ok((a / b).sqrt() * (d * d / (a * b)).exp())
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 {
        Ok(())
    } else {
        Err(AbcError::Config(format!("tau must be positive, got {tau}")))
    }
}

/// Unnormalized posterior error mass `2^-(x0 + ε + |ε|/τ + 1)` of the Poisson
/// model with Exponential(1) prior and geometric kernel.
fn poisson_error_weight(x0: u64, tau: f64, eps: i64) -> f64 {
    if (x0 as i64) + eps < 0 {
        return 0.0;
    }
    let inv_tau = if tau.is_infinite() { 0.0 } else { 1.0 / tau };
    (-LN_2 * (x0 as f64 + eps as f64 + eps.abs() as f64 * inv_tau + 1.0)).exp()
}

/// Guard band around τ = 1 where the closed form's removable singularity is
/// replaced by its limit.
pub const TAU_ONE_GUARD: f64 = 1e-8;

/// Marginal likelihood of `x0` under the Poisson model with Exponential(1)
/// prior and kernel `∝ 2^(-|ε|/τ)`:
///
/// `2^-(x0+1) ( 1{x0>0} [ (1 - 2^((1-1/τ)(x0+1))) / (1 - 2^(1-1/τ)) - 1 ] + 1/(1 - 2^(-1-1/τ)) )`.
pub fn poisson_marginal_likelihood(x0: u64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let inv_tau = if tau.is_infinite() { 0.0 } else { 1.0 / tau };
    let a = 1.0 - inv_tau;
    let n = x0 as f64 + 1.0;
    let bracket = if x0 == 0 {
        0.0
    } else if a.abs() < TAU_ONE_GUARD {
        x0 as f64
    } else {
        (a * n * LN_2).exp_m1() / (a * LN_2).exp_m1() - 1.0
    };
    let tail = 1.0 / (1.0 - (-(1.0 + inv_tau) * LN_2).exp());
    Ok((-n * LN_2).exp() * (bracket + tail))
}

const PMF_TAIL: f64 = 1e-12;

/// Normalized posterior error pmf of the Poisson model, truncated once the
/// cumulative mass exceeds `1 - 1e-12`.
pub fn poisson_posterior_error(x0: u64, tau: f64) -> Result<DiscretePmf> {
    let z = poisson_marginal_likelihood(x0, tau)?;
    let mut support = Vec::new();
    let mut weights = Vec::new();
    let mut cumulative = 0.0;
    let mut eps = -(x0 as i64);
    while cumulative / z < 1.0 - PMF_TAIL {
        let w = poisson_error_weight(x0, tau, eps);
        support.push(eps);
        weights.push(w);
        cumulative += w;
        eps += 1;
        if eps > x0 as i64 + 100_000 {
            break;
        }
    }
    DiscretePmf::from_weights(support, weights)
}

/// Posterior mean error of the Poisson model. At τ = ∞ this is the prior
/// predictive mean `E[x] - x0 = 1 - x0`, returned exactly.
pub fn poisson_mean_error(x0: u64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if tau.is_infinite() {
        return Ok(1.0 - x0 as f64);
    }
    Ok(poisson_posterior_error(x0, tau)?.mean())
}

/// Fully enumerated joint target over (θ, ε) on a discretized problem.
#[derive(Clone, Debug, Serialize)]
pub struct JointPmf {
    pub thetas: Vec<f64>,
    pub eps: Vec<i64>,
    /// `mass[i][j]` is the probability of `(thetas[i], eps[j])`.
    pub mass: Vec<Vec<f64>>,
}

impl JointPmf {
    pub fn theta_marginal(&self) -> Vec<f64> {
        self.mass.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn eps_marginal(&self) -> DiscretePmf {
        let masses = (0..self.eps.len())
            .map(|j| self.mass.iter().map(|row| row[j]).sum())
            .collect();
        DiscretePmf {
            support: self.eps.clone(),
            masses,
        }
    }

    pub fn theta_index(&self, theta: f64) -> Option<usize> {
        self.thetas
            .iter()
            .position(|t| (t - theta).abs() <= 1e-9 * t.abs().max(1.0))
    }

    pub fn eps_index(&self, eps: f64) -> Option<usize> {
        if eps.fract() != 0.0 {
            return None;
        }
        let first = *self.eps.first()?;
        let j = eps as i64 - first;
        (0..self.eps.len() as i64)
            .contains(&j)
            .then_some(j as usize)
    }
}

const TAIL_TOLERANCE: f64 = 1e-10;

/// Enumerates `prior(θ) ξ(ε) π_ε(ε)` for the Poisson model with prior masses
/// `∝ exp(-θ)` on `theta_grid`, the geometric kernel of scale `tau`, and
/// `x ∈ 0..=x_max`, normalized to one.
pub fn poisson_bruteforce_target(
    theta_grid: &[f64],
    x_max: u64,
    x0: u64,
    tau: f64,
) -> Result<JointPmf> {
    check_tau(tau)?;
    if theta_grid.is_empty() || theta_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(AbcError::Input(
            "theta grid must be nonempty with positive finite points".into(),
        ));
    }
    for &theta in theta_grid {
        let head: f64 = (0..=x_max as i64).map(|x| ln_poisson(x, theta).exp()).sum();
        if 1.0 - head >= TAIL_TOLERANCE {
            return Err(AbcError::Input(format!(
                "x_max = {x_max} leaves Poisson tail mass {:.3e} at θ = {theta}; increase x_max",
                1.0 - head
            )));
        }
    }
    let eps: Vec<i64> = (0..=x_max as i64).map(|x| x - x0 as i64).collect();
    let inv_tau = if tau.is_infinite() { 0.0 } else { 1.0 / tau };
    let mut mass: Vec<Vec<f64>> = theta_grid
        .iter()
        .map(|&theta| {
            eps.iter()
                .map(|&e| {
                    let ln =
                        -theta + ln_poisson(x0 as i64 + e, theta) - LN_2 * e.abs() as f64 * inv_tau;
                    ln.exp()
                })
                .collect()
        })
        .collect();
    let total: f64 = mass.iter().flatten().sum();
    for row in &mut mass {
        for m in row.iter_mut() {
            *m /= total;
        }
    }
    Ok(JointPmf {
        thetas: theta_grid.to_vec(),
        eps,
        mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn xi_examples() {
        assert_relative_eq!(
            shifted_poisson_xi(1.0, 0, 0),
            (-1.0f64).exp(),
            max_relative = 1e-14
        );
        assert!((shifted_poisson_xi(1.0, 0, 0) - 0.367879).abs() < 1e-6);
        assert_eq!(shifted_poisson_xi(1.3, 2, -3), 0.0);
        for (theta, x0) in [(0.5, 0u64), (2.0, 3), (7.5, 10)] {
            let total: f64 = (-(x0 as i64)..200)
                .map(|e| shifted_poisson_xi(theta, x0, e))
                .sum();
            assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn gaussian_laws() {
        assert_eq!(gaussian_prior_predictive_error(3.0, 2.0, 3.0).mean, 0.0);
        assert_eq!(gaussian_prior_predictive_error(0.0, 0.0, 3.0).variance, 1.0);
        assert_eq!(
            gaussian_prior_predictive_error(0.0, 9.0, 5.0),
            GaussianErrorLaw {
                mean: -5.0,
                variance: 10.0
            }
        );

        let fitted = gaussian_fitted_posterior_error(0.0, 9.0, 5.0, 10f64.sqrt()).unwrap();
        assert_relative_eq!(fitted.mean, -2.5, max_relative = 1e-14);
        assert_relative_eq!(fitted.variance, 5.0, max_relative = 1e-14);

        let wide = gaussian_fitted_posterior_error(0.0, 9.0, 5.0, 1e8).unwrap();
        assert!((wide.mean + 5.0).abs() < 1e-6 && (wide.variance - 10.0).abs() < 1e-6);
        assert_eq!(
            gaussian_fitted_posterior_error(0.0, 9.0, 5.0, f64::INFINITY)
                .unwrap()
                .variance,
            10.0
        );

        let flat = gaussian_fitted_posterior_error(0.0, 1e12, 5.0, 2.0).unwrap();
        assert!(flat.mean.abs() < 1e-10 && (flat.variance - 4.0).abs() < 1e-9);
    }

    #[test]
    fn bayes_factor_examples() {
        assert_relative_eq!(
            approx_bayes_factor(1.0, 1.0, 0.0, 0.0).unwrap(),
            (1.0f64 / 3.0).sqrt(),
            max_relative = 1e-14
        );
        assert!((approx_bayes_factor(5.0, 0.0, 1e8, 1.0).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn poisson_pmf_geometric_case() {
        let pmf = poisson_posterior_error(0, 1.0).unwrap();
        assert_relative_eq!(pmf.mass(0), 0.75, max_relative = 1e-11);
        assert_relative_eq!(pmf.mass(1), 3.0 / 16.0, max_relative = 1e-11);
        assert_relative_eq!(pmf.total(), 1.0, max_relative = 1e-12);
        assert_eq!(pmf.support[0], 0);
    }

    #[test]
    fn poisson_pmf_flat_kernel_is_prior_predictive() {
        let x0 = 3u64;
        let pmf = poisson_posterior_error(x0, f64::INFINITY).unwrap();
        for e in -3..10 {
            let expected = 0.5f64.powi((x0 as i64 + e + 1) as i32);
            assert_relative_eq!(pmf.mass(e), expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn poisson_mean_error_values() {
        assert_eq!(poisson_mean_error(1, f64::INFINITY).unwrap(), 0.0);
        // Asymmetric prior predictive: conditioning on magnitude pulls the mean below zero.
        assert!(poisson_mean_error(1, 2.0).unwrap() < 0.0);
        assert!(poisson_mean_error(1, 0.0).is_err());
    }

    #[test]
    fn marginal_likelihood_examples() {
        assert_relative_eq!(
            poisson_marginal_likelihood(0, 1.0).unwrap(),
            2.0 / 3.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            poisson_marginal_likelihood(1, 1.0).unwrap(),
            7.0 / 12.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            poisson_marginal_likelihood(4, f64::INFINITY).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        // inside the guard band the limit branch is used and stays continuous
        let near = poisson_marginal_likelihood(3, 1.0 + 1e-9).unwrap();
        let at = poisson_marginal_likelihood(3, 1.0).unwrap();
        assert_relative_eq!(near, at, max_relative = 1e-8);
    }

    #[test]
    fn bruteforce_target_degenerate_cases() {
        let single = poisson_bruteforce_target(&[2.0], 60, 3, 1.0).unwrap();
        let eps_pmf = single.eps_marginal();
        let weights: Vec<f64> = eps_pmf
            .support
            .iter()
            .map(|&e| shifted_poisson_xi(2.0, 3, e) * 0.5f64.powf(e.abs() as f64))
            .collect();
        let expected = DiscretePmf::from_weights(eps_pmf.support.clone(), weights).unwrap();
        for (a, b) in eps_pmf.masses.iter().zip(&expected.masses) {
            assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-300);
        }

        let grid: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
        let flat = poisson_bruteforce_target(&grid, 60, 3, f64::INFINITY).unwrap();
        let z: f64 = grid.iter().map(|t| (-t).exp()).sum();
        for (m, t) in flat.theta_marginal().iter().zip(&grid) {
            assert_relative_eq!(*m, (-t).exp() / z, max_relative = 1e-9);
        }
        assert!(poisson_bruteforce_target(&grid, 10, 3, 1.0).is_err());
    }
}
