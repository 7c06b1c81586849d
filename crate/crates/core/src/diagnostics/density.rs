use serde::Serialize;

use crate::error::{AbcError, Result};
use crate::model::quantile_sorted;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityMethod {
    Histogram,
    Kde,
}

/// Evaluation grid. `None` fields are derived from the sample.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GridSpec {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub points: Option<usize>,
    pub bandwidth: Option<f64>,
}

const KDE_POINTS: usize = 512;
const KDE_CUTOFF: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityEstimate1D {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    pub method: DensityMethod,
    /// Set when every draw has the same value; the estimate is then a narrow spike.
    pub point_mass: Option<f64>,
}

impl DensityEstimate1D {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    /// Linear interpolation; zero outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        if g.is_empty() || x < g[0] || x > g[g.len() - 1] {
            return 0.0;
        }
        let i = g.partition_point(|p| *p <= x).min(g.len() - 1).max(1);
        let (x0, x1) = (g[i - 1], g[i]);
        if x1 == x0 {
            return self.values[i];
        }
        let t = (x - x0) / (x1 - x0);
        self.values[i - 1] * (1.0 - t) + self.values[i] * t
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Weighted mean and variance with normalized weights.
pub(crate) fn weighted_moments(x: &[f64], w: Option<&[f64]>) -> (f64, f64) {
    match w {
        None => {
            let n = x.len() as f64;
            let mean = x.iter().sum::<f64>() / n;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (mean, var)
        }
        Some(w) => {
            let total: f64 = w.iter().sum();
            let mean = x.iter().zip(w).map(|(v, wi)| v * wi).sum::<f64>() / total;
            let var = x
                .iter()
                .zip(w)
                .map(|(v, wi)| wi * (v - mean).powi(2))
                .sum::<f64>()
                / total;
            (mean, var)
        }
    }
}

fn check_weights(n: usize, weights: Option<&[f64]>) -> Result<Option<&[f64]>> {
    let Some(w) = weights else { return Ok(None) };
    if w.len() != n {
        return Err(AbcError::Input(format!(
            "{} weights for {n} draws",
            w.len()
        )));
    }
    if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(AbcError::Input(
            "weights must be finite and nonnegative".into(),
        ));
    }
    if !(w.iter().sum::<f64>() > 0.0) {
        return Err(AbcError::DegenerateWeights("all weights are zero".into()));
    }
    // flat weights carry no information; dropping them keeps results bit-identical
    if w.iter().all(|v| *v == w[0]) {
        return Ok(None);
    }
    Ok(Some(w))
}

fn effective_n(n: usize, w: Option<&[f64]>) -> f64 {
    match w {
        None => n as f64,
        Some(w) => {
            let s: f64 = w.iter().sum();
            let s2: f64 = w.iter().map(|v| v * v).sum();
            s * s / s2
        }
    }
}

/// Normalized density estimate of a (possibly weighted) sample.
///
/// The KDE uses a Gaussian kernel with bandwidth `1.06 σ n^(-1/5)`, evaluated by
/// linear binning onto the grid followed by a discrete convolution.
pub fn estimate_density_1d(
    draws: &[f64],
    weights: Option<&[f64]>,
    method: DensityMethod,
    spec: GridSpec,
) -> Result<DensityEstimate1D> {
    if draws.len() < 2 {
        return Err(AbcError::InsufficientSample(format!(
            "density estimation needs at least 2 draws, got {}",
            draws.len()
        )));
    }
    if draws.iter().any(|d| !d.is_finite()) {
        return Err(AbcError::Input("draws must be finite".into()));
    }
    let weights = check_weights(draws.len(), weights)?;
    let (_, var) = weighted_moments(draws, weights);
    let (min, max) = draws
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            (lo.min(*d), hi.max(*d))
        });
    if var == 0.0 || min == max {
        let c = draws[0];
        let delta = 1e-6 * c.abs().max(1.0);
        return Ok(DensityEstimate1D {
            grid: vec![c - delta, c, c + delta],
            values: vec![0.0, 1.0 / delta, 0.0],
            bandwidth: delta,
            method,
            point_mass: Some(c),
        });
    }
    let n_eff = effective_n(draws.len(), weights);
    match method {
        DensityMethod::Kde => {
            let h = spec
                .bandwidth
                .unwrap_or(1.06 * var.sqrt() * n_eff.powf(-0.2));
            if !(h > 0.0) {
                return Err(AbcError::Input(format!(
                    "bandwidth must be positive, got {h}"
                )));
            }
            let lo = spec.lower.unwrap_or(min - 3.0 * h);
            let hi = spec.upper.unwrap_or(max + 3.0 * h);
            let m = spec.points.unwrap_or(KDE_POINTS).max(3);
            kde(draws, weights, h, lo, hi, m)
        }
        DensityMethod::Histogram => {
            let lo = spec.lower.unwrap_or(min);
            let hi = spec.upper.unwrap_or(max);
            let bins = spec
                .points
                .unwrap_or_else(|| freedman_diaconis(draws, n_eff, lo, hi));
            histogram(draws, weights, lo, hi, bins.max(1))
        }
    }
}

fn freedman_diaconis(draws: &[f64], n_eff: f64, lo: f64, hi: f64) -> usize {
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    if iqr <= 0.0 {
        return 50;
    }
    let width = 2.0 * iqr * n_eff.powf(-1.0 / 3.0);
    (((hi - lo) / width).ceil() as usize).clamp(10, 200)
}

fn kde(
    draws: &[f64],
    w: Option<&[f64]>,
    h: f64,
    lo: f64,
    hi: f64,
    m: usize,
) -> Result<DensityEstimate1D> {
    if !(hi > lo) {
        return Err(AbcError::Input(format!("empty grid range [{lo}, {hi}]")));
    }
    let delta = (hi - lo) / (m - 1) as f64;
    let grid: Vec<f64> = (0..m).map(|i| lo + i as f64 * delta).collect();
    let mut binned = vec![0.0; m];
    for (i, x) in draws.iter().enumerate() {
        let wi = w.map_or(1.0, |w| w[i]);
        let pos = (x - lo) / delta;
        if pos < 0.0 || pos > (m - 1) as f64 {
            continue;
        }
        let j = (pos.floor() as usize).min(m - 2);
        let t = pos - j as f64;
        binned[j] += wi * (1.0 - t);
        binned[j + 1] += wi * t;
    }
    let reach = ((KDE_CUTOFF * h / delta).ceil() as usize).min(m - 1);
    let taps: Vec<f64> = (0..=reach)
        .map(|l| (-0.5 * (l as f64 * delta / h).powi(2)).exp())
        .collect();
    let mut values = vec![0.0; m];
    for (i, v) in values.iter_mut().enumerate() {
        let a = i.saturating_sub(reach);
        let b = (i + reach).min(m - 1);
        *v = (a..=b).map(|j| binned[j] * taps[i.abs_diff(j)]).sum();
    }
    normalize(grid, values, h, DensityMethod::Kde)
}

fn histogram(
    draws: &[f64],
    w: Option<&[f64]>,
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<DensityEstimate1D> {
    if !(hi > lo) {
        return Err(AbcError::Input(format!("empty grid range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0.0; bins];
    for (i, x) in draws.iter().enumerate() {
        if *x < lo || *x > hi {
            continue;
        }
        let j = (((x - lo) / width) as usize).min(bins - 1);
        counts[j] += w.map_or(1.0, |w| w[i]);
    }
    let grid = (0..bins).map(|j| lo + (j as f64 + 0.5) * width).collect();
    normalize(grid, counts, width, DensityMethod::Histogram)
}

fn normalize(
    grid: Vec<f64>,
    mut values: Vec<f64>,
    bandwidth: f64,
    method: DensityMethod,
) -> Result<DensityEstimate1D> {
    let z = trapezoid(&grid, &values);
    if !(z > 0.0) {
        return Err(AbcError::Input(
            "no draws fall inside the requested grid".into(),
        ));
    }
    for v in &mut values {
        *v /= z;
    }
    Ok(DensityEstimate1D {
        grid,
        values,
        bandwidth,
        method,
        point_mass: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn recovers_standard_normal() {
        let mut rng = rng_from_seed(3);
        let draws: Vec<f64> = (0..1_000_000).map(|_| rng.sample(StandardNormal)).collect();
        let est =
            estimate_density_1d(&draws, None, DensityMethod::Kde, GridSpec::default()).unwrap();
        assert!((est.integral() - 1.0).abs() < 1e-6);
        let worst = est
            .grid
            .iter()
            .zip(&est.values)
            .map(|(x, v)| (v - (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.01, "max deviation {worst}");
    }

    #[test]
    fn constant_sample_is_point_mass() {
        let est =
            estimate_density_1d(&[2.5; 10], None, DensityMethod::Kde, GridSpec::default()).unwrap();
        assert_eq!(est.point_mass, Some(2.5));
        assert!((est.integral() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flat_weights_match_unweighted() {
        let mut rng = rng_from_seed(9);
        let draws: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        for method in [DensityMethod::Kde, DensityMethod::Histogram] {
            let a = estimate_density_1d(&draws, None, method, GridSpec::default()).unwrap();
            let b = estimate_density_1d(&draws, Some(&[0.3; 500]), method, GridSpec::default())
                .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn histogram_normalizes() {
        let draws: Vec<f64> = (0..1000).map(|i| (i as f64 / 37.0).sin()).collect();
        let est = estimate_density_1d(&draws, None, DensityMethod::Histogram, GridSpec::default())
            .unwrap();
        assert!((est.integral() - 1.0).abs() < 1e-9);
        assert!(
            estimate_density_1d(&[1.0], None, DensityMethod::Kde, GridSpec::default()).is_err()
        );
    }
}
