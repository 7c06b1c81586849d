use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{AbcError, Result};
use crate::oracles::{DiscretePmf, JointPmf};

/// One side of a distance computation.
#[derive(Clone, Copy, Debug)]
pub enum DistributionRef<'a> {
    Sample(&'a [f64]),
    WeightedSample(&'a [f64], &'a [f64]),
    Pmf(&'a DiscretePmf),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Total variation between cell probabilities. Continuous samples are
    /// binned on `cells` equal cells over their pooled range; lattice inputs
    /// are compared point by point.
    TvOnGrid {
        cells: usize,
    },
    Ks,
}

fn is_lattice(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite() && v.fract() == 0.0)
}

fn as_pmf(d: DistributionRef<'_>) -> Result<Option<DiscretePmf>> {
    Ok(match d {
        DistributionRef::Pmf(p) => Some(p.clone()),
        DistributionRef::Sample(x) if is_lattice(x) => Some(DiscretePmf::empirical(x, None)?),
        DistributionRef::WeightedSample(x, w) if is_lattice(x) => {
            Some(DiscretePmf::empirical(x, Some(w))?)
        }
        _ => None,
    })
}

/// TV or KS distance between two distributions.
pub fn distribution_distance(
    a: DistributionRef<'_>,
    b: DistributionRef<'_>,
    metric: Metric,
) -> Result<f64> {
    let lattice_needed =
        matches!(a, DistributionRef::Pmf(_)) || matches!(b, DistributionRef::Pmf(_));
    let (pa, pb) = (as_pmf(a)?, as_pmf(b)?);
    match (pa, pb) {
        (Some(pa), Some(pb)) => Ok(match metric {
            Metric::TvOnGrid { .. } => tv_pmf(&pa, &pb),
            Metric::Ks => ks_pmf(&pa, &pb),
        }),
        _ if lattice_needed => Err(AbcError::Input(
            "a pmf can only be compared with another lattice-valued distribution".into(),
        )),
        _ => {
            let (xa, wa) = sample_parts(a);
            let (xb, wb) = sample_parts(b);
            match metric {
                Metric::TvOnGrid { cells } => tv_samples(xa, wa, xb, wb, cells),
                Metric::Ks => ks_weighted(xa, wa, xb, wb),
            }
        }
    }
}

fn sample_parts(d: DistributionRef<'_>) -> (&[f64], Option<&[f64]>) {
    match d {
        DistributionRef::Sample(x) => (x, None),
        DistributionRef::WeightedSample(x, w) => (x, Some(w)),
        DistributionRef::Pmf(_) => unreachable!("pmfs are handled on the lattice path"),
    }
}

/// `½ Σ |p - q|` over the union of supports.
pub fn tv_pmf(a: &DiscretePmf, b: &DiscretePmf) -> f64 {
    let mut diff: BTreeMap<i64, f64> = a.as_map();
    for (s, m) in b.support.iter().zip(&b.masses) {
        *diff.entry(*s).or_default() -= m;
    }
    0.5 * diff.values().map(|d| d.abs()).sum::<f64>()
}

fn ks_pmf(a: &DiscretePmf, b: &DiscretePmf) -> f64 {
    let mut diff: BTreeMap<i64, f64> = a.as_map();
    for (s, m) in b.support.iter().zip(&b.masses) {
        *diff.entry(*s).or_default() -= m;
    }
    let mut cum = 0.0;
    let mut sup: f64 = 0.0;
    for d in diff.values() {
        cum += d;
        sup = sup.max(cum.abs());
    }
    sup
}

fn cell_probabilities(
    x: &[f64],
    w: Option<&[f64]>,
    lo: f64,
    width: f64,
    cells: usize,
) -> Result<Vec<f64>> {
    if let Some(w) = w {
        if w.len() != x.len() {
            return Err(AbcError::Input(format!(
                "{} weights for {} draws",
                w.len(),
                x.len()
            )));
        }
    }
    let mut p = vec![0.0; cells];
    for (i, v) in x.iter().enumerate() {
        let j = (((v - lo) / width).floor().max(0.0) as usize).min(cells - 1);
        p[j] += w.map_or(1.0, |w| w[i]);
    }
    let total: f64 = p.iter().sum();
    if !(total > 0.0) {
        return Err(AbcError::DegenerateWeights(
            "sample carries no weight".into(),
        ));
    }
    Ok(p.into_iter().map(|v| v / total).collect())
}

fn tv_samples(
    xa: &[f64],
    wa: Option<&[f64]>,
    xb: &[f64],
    wb: Option<&[f64]>,
    cells: usize,
) -> Result<f64> {
    if xa.is_empty() || xb.is_empty() || cells == 0 {
        return Err(AbcError::Input(
            "TV needs two nonempty samples and at least one cell".into(),
        ));
    }
    let (lo, hi) = xa
        .iter()
        .chain(xb)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    if lo == hi {
        return Ok(0.0);
    }
    let width = (hi - lo) / cells as f64;
    let pa = cell_probabilities(xa, wa, lo, width, cells)?;
    let pb = cell_probabilities(xb, wb, lo, width, cells)?;
    Ok(0.5 * pa.iter().zip(&pb).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// TV between a sample and a continuous law, on `cells` equal cells spanning
/// the sample range; the law's tails beyond the range join the end cells.
pub fn tv_sample_vs_cdf(x: &[f64], cdf: impl Fn(f64) -> f64, cells: usize) -> Result<f64> {
    tv_weighted_vs_cdf(x, None, cdf, cells)
}

pub fn tv_weighted_vs_cdf(
    x: &[f64],
    w: Option<&[f64]>,
    cdf: impl Fn(f64) -> f64,
    cells: usize,
) -> Result<f64> {
    if x.is_empty() || cells == 0 {
        return Err(AbcError::Input(
            "TV needs a nonempty sample and at least one cell".into(),
        ));
    }
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    if lo == hi {
        return Err(AbcError::Input("sample has zero range".into()));
    }
    let width = (hi - lo) / cells as f64;
    let p = cell_probabilities(x, w, lo, width, cells)?;
    let mut tv = 0.0;
    for (j, pj) in p.iter().enumerate() {
        let left = if j == 0 {
            0.0
        } else {
            cdf(lo + j as f64 * width)
        };
        let right = if j + 1 == cells {
            1.0
        } else {
            cdf(lo + (j + 1) as f64 * width)
        };
        tv += (pj - (right - left)).abs();
    }
    Ok(0.5 * tv)
}

fn sorted_with_weights(x: &[f64], w: Option<&[f64]>) -> Vec<(f64, f64)> {
    let total = w.map_or(x.len() as f64, |w| w.iter().sum());
    let mut v: Vec<(f64, f64)> = x
        .iter()
        .enumerate()
        .map(|(i, v)| (*v, w.map_or(1.0, |w| w[i]) / total))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

fn ks_weighted(xa: &[f64], wa: Option<&[f64]>, xb: &[f64], wb: Option<&[f64]>) -> Result<f64> {
    if xa.is_empty() || xb.is_empty() {
        return Err(AbcError::Input("KS needs two nonempty samples".into()));
    }
    let a = sorted_with_weights(xa, wa);
    let b = sorted_with_weights(xb, wb);
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut sup: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => break,
        };
        while i < a.len() && a[i].0 == next {
            fa += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 == next {
            fb += b[j].1;
            j += 1;
        }
        sup = sup.max((fa - fb).abs());
    }
    Ok(sup)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_samples(a: &[f64], b: &[f64]) -> Result<f64> {
    ks_weighted(a, None, b, None)
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_sample_vs_cdf(x: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if x.is_empty() {
        return Err(AbcError::Input("KS needs a nonempty sample".into()));
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    Ok(s.iter().enumerate().fold(0.0, |sup: f64, (i, v)| {
        let f = cdf(*v);
        sup.max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs())
    }))
}

/// Asymptotic two-sample KS critical value `c(α) sqrt((n+m)/(n m))` with
/// `c(α) = sqrt(-ln(α/2)/2)`; 1.628 at α = 0.01.
pub fn ks_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// TV between the empirical law of lattice-valued `(θ, ε)` pairs and an
/// enumerated joint pmf. Pairs off the enumerated grid are an input error.
pub fn tv_against_joint(thetas: &[f64], eps: &[f64], target: &JointPmf) -> Result<f64> {
    if thetas.len() != eps.len() || thetas.is_empty() {
        return Err(AbcError::Input(
            "need equally many nonempty θ and ε draws".into(),
        ));
    }
    let cols = target.eps.len();
    let mut counts = vec![0.0; target.thetas.len() * cols];
    for (t, e) in thetas.iter().zip(eps) {
        let i = target
            .theta_index(*t)
            .ok_or_else(|| AbcError::Input(format!("θ = {t} is not on the enumerated grid")))?;
        let j = target
            .eps_index(*e)
            .ok_or_else(|| AbcError::Input(format!("ε = {e} is outside the enumerated lattice")))?;
        counts[i * cols + j] += 1.0;
    }
    let n = thetas.len() as f64;
    let tv: f64 = target
        .mass
        .iter()
        .flatten()
        .zip(&counts)
        .map(|(p, c)| (p - c / n).abs())
        .sum();
    Ok(0.5 * tv)
}
