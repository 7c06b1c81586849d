use serde::Serialize;

use crate::error::{AbcError, Result};
use crate::samplers::Chain;

fn mean(x: &[f64]) -> f64 {
    let anchor = x.first().copied().unwrap_or(0.0);
    anchor + x.iter().map(|v| v - anchor).sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Split-R̂ of one coordinate over several chains. Each chain is cut in half
/// (dropping the middle draw of odd-length chains) and the halves are compared
/// through the pooled and within-chain variances.
pub fn split_rhat(chains: &[&[f64]]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(AbcError::InsufficientSample(
            "split-R̂ needs at least 2 chains".into(),
        ));
    }
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0) / 2;
    if n < 2 {
        return Err(AbcError::InsufficientSample(
            "split-R̂ needs at least 4 draws per chain".into(),
        ));
    }
    let mut halves = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let c = &c[..2 * n.min(c.len() / 2)];
        halves.push(&c[..n]);
        halves.push(&c[c.len() - n..]);
    }
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let w = mean(&halves.iter().map(|h| sample_var(h)).collect::<Vec<_>>());
    let b = n as f64 * sample_var(&means);
    if w == 0.0 {
        return Ok(if b == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let nf = n as f64;
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    Ok((var_plus / w).sqrt())
}

fn autocovariance(x: &[f64], m: f64, lag: usize) -> f64 {
    let n = x.len();
    x[..n - lag]
        .iter()
        .zip(&x[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / n as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EssEstimate {
    pub ess: f64,
    /// The raw estimate exceeded the number of draws and was clipped to it.
    pub clipped: bool,
}

/// Effective sample size from Geyer's initial positive (monotone) sequence.
/// The integrated autocorrelation time is floored at `1 / log10(n)`.
pub fn ess(x: &[f64]) -> Result<EssEstimate> {
    let n = x.len();
    if n < 4 {
        return Err(AbcError::InsufficientSample(format!(
            "ESS needs at least 4 draws, got {n}"
        )));
    }
    let m = mean(x);
    let c0 = autocovariance(x, m, 0);
    if c0 == 0.0 {
        return Ok(EssEstimate {
            ess: n as f64,
            clipped: false,
        });
    }
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = (autocovariance(x, m, 2 * k) + autocovariance(x, m, 2 * k + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        k += 1;
    }
    let tau = (2.0 * sum - 1.0).max(1.0 / (n as f64).log10());
    let raw = n as f64 / tau;
    Ok(if raw > n as f64 {
        EssEstimate {
            ess: n as f64,
            clipped: true,
        }
    } else {
        EssEstimate {
            ess: raw,
            clipped: false,
        }
    })
}

/// Batch-means Monte Carlo standard error of the sample mean, with
/// `floor(sqrt(n))` batches.
pub fn batch_means_mcse(x: &[f64]) -> f64 {
    let n = x.len();
    let batches = (n as f64).sqrt().floor() as usize;
    if batches < 2 {
        return 0.0;
    }
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| mean(&x[b * size..(b + 1) * size]))
        .collect();
    (sample_var(&means) / batches as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoordinateDiagnostics {
    pub name: String,
    /// Omitted for a single chain.
    pub rhat: Option<f64>,
    /// Sum of per-chain effective sample sizes.
    pub ess: f64,
    pub ess_clipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub coordinates: Vec<CoordinateDiagnostics>,
    pub acceptance_rates: Vec<f64>,
    pub max_rhat: Option<f64>,
}

/// Split-R̂ and ESS for every θ and ε coordinate, plus per-chain acceptance rates.
pub fn convergence_and_ess(chains: &[Chain]) -> Result<ConvergenceReport> {
    let first = chains
        .first()
        .ok_or_else(|| AbcError::InsufficientSample("no chains to diagnose".into()))?;
    for c in chains {
        if c.theta_names != first.theta_names || c.eps_names != first.eps_names {
            return Err(AbcError::Input(
                "chains disagree on coordinate names".into(),
            ));
        }
    }
    let mut names = Vec::new();
    let mut columns: Vec<Vec<Vec<f64>>> = Vec::new();
    for (i, name) in first.theta_names.iter().enumerate() {
        names.push(format!("theta_{name}"));
        columns.push(chains.iter().map(|c| c.theta_column(i)).collect());
    }
    for (k, name) in first.eps_names.iter().enumerate() {
        names.push(format!("eps_{name}"));
        columns.push(chains.iter().map(|c| c.eps_column(k)).collect());
    }
    let coordinates = names
        .into_iter()
        .zip(columns)
        .map(|(name, cols)| coordinate_diagnostics(name, &cols))
        .collect::<Result<Vec<_>>>()?;
    let max_rhat = coordinates
        .iter()
        .filter_map(|c| c.rhat)
        .fold(None, |acc: Option<f64>, r| {
            Some(acc.map_or(r, |a| a.max(r)))
        });
    Ok(ConvergenceReport {
        coordinates,
        acceptance_rates: chains.iter().map(|c| c.acceptance_rate).collect(),
        max_rhat,
    })
}

pub fn coordinate_diagnostics(name: String, columns: &[Vec<f64>]) -> Result<CoordinateDiagnostics> {
    let slices: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
    let rhat = if slices.len() >= 2 {
        Some(split_rhat(&slices)?)
    } else {
        None
    };
    let mut total = 0.0;
    let mut clipped = false;
    for s in &slices {
        let e = ess(s)?;
        total += e.ess;
        clipped |= e.clipped;
    }
    Ok(CoordinateDiagnostics {
        name,
        rhat,
        ess: total,
        ess_clipped: clipped,
    })
}
