use serde::Serialize;

use super::convergence::batch_means_mcse;
use super::density::{estimate_density_1d, DensityEstimate1D, DensityMethod, GridSpec};
use crate::error::{AbcError, Result};
use crate::model::quantile_sorted;
use crate::oracles::DiscretePmf;
use crate::samplers::Chain;

/// Fewest post-burn-in states accepted by the mean-error and report builders.
pub const MIN_STATES: usize = 100;

pub const HEAT_CELLS: usize = 64;
pub const HEAT_RANGE: (f64, f64) = (0.005, 0.995);
pub const HPD_MASS: f64 = 0.95;
pub const INTERVAL: (f64, f64) = (0.025, 0.975);

/// Two-dimensional histogram of error pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatGrid2D {
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    /// `mass[i][j]` covers `x_edges[i]..x_edges[i+1]` × `y_edges[j]..y_edges[j+1]`.
    pub mass: Vec<Vec<f64>>,
}

fn central_range(x: &[f64], cover: (f64, f64)) -> (f64, f64) {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let (lo, hi) = (quantile_sorted(&s, cover.0), quantile_sorted(&s, cover.1));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn edges(lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    (0..=cells)
        .map(|i| lo + (hi - lo) * i as f64 / cells as f64)
        .collect()
}

fn cell_of(edges: &[f64], v: f64) -> Option<usize> {
    let cells = edges.len() - 1;
    if v < edges[0] || v > edges[cells] {
        return None;
    }
    Some((edges.partition_point(|e| *e <= v).max(1) - 1).min(cells - 1))
}

impl HeatGrid2D {
    /// `cells`×`cells` histogram over the central 99% range of each coordinate.
    /// Pairs outside the range are dropped before normalizing.
    pub fn from_pairs(x: &[f64], y: &[f64], cells: usize) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 || cells == 0 {
            return Err(AbcError::InsufficientSample(
                "heat grid needs at least 2 pairs".into(),
            ));
        }
        let (xl, xh) = central_range(x, HEAT_RANGE);
        let (yl, yh) = central_range(y, HEAT_RANGE);
        let x_edges = edges(xl, xh, cells);
        let y_edges = edges(yl, yh, cells);
        let mut mass = vec![vec![0.0; cells]; cells];
        let mut kept = 0.0;
        for (a, b) in x.iter().zip(y) {
            if let (Some(i), Some(j)) = (cell_of(&x_edges, *a), cell_of(&y_edges, *b)) {
                mass[i][j] += 1.0;
                kept += 1.0;
            }
        }
        if kept == 0.0 {
            return Err(AbcError::InsufficientSample(
                "no pairs inside the heat grid range".into(),
            ));
        }
        for row in &mut mass {
            for m in row.iter_mut() {
                *m /= kept;
            }
        }
        Ok(Self {
            x_edges,
            y_edges,
            mass,
        })
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().flatten().sum()
    }

    /// Mass of the cells strictly heavier than the one holding `(x, y)`: the
    /// smallest highest-mass level whose region contains the point. A point off
    /// the grid or in an empty cell gets the total mass.
    pub fn mass_above(&self, x: f64, y: f64) -> f64 {
        let total = self.total();
        let (Some(i), Some(j)) = (cell_of(&self.x_edges, x), cell_of(&self.y_edges, y)) else {
            return total;
        };
        let m = self.mass[i][j];
        if m == 0.0 {
            return total;
        }
        self.mass.iter().flatten().filter(|v| **v > m).sum()
    }

    /// Whether `(x, y)` lies in the highest-mass region holding `level` of the mass.
    pub fn hpd_contains(&self, x: f64, y: f64, level: f64) -> bool {
        self.mass_above(x, y) < level * self.total()
    }
}

/// Per-dimension marginal: a density for continuous errors, an exact pmf for
/// integer-valued ones.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Marginal {
    Density(DensityEstimate1D),
    Lattice(DiscretePmf),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairGrid {
    pub x: usize,
    pub y: usize,
    pub grid: HeatGrid2D,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroInclusion {
    pub marginal: Vec<bool>,
    pub joint: bool,
}

/// Summary of a posterior (or predictive) error sample.
///
/// Intervals are central empirical intervals of the sampled errors. They carry
/// no frequency guarantee; read them as a descriptive summary of how far the
/// error mass sits from zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorDensityReport {
    pub names: Vec<String>,
    pub states: usize,
    pub marginals: Vec<Marginal>,
    pub heat_grids: Vec<PairGrid>,
    pub mean_error: Vec<f64>,
    pub mcse: Vec<f64>,
    pub intervals: Vec<[f64; 2]>,
    pub zero_inclusion: ZeroInclusion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanError {
    pub mean: Vec<f64>,
    pub mcse: Vec<f64>,
}

/// Mean of the recorded errors with batch-means standard errors.
pub fn posterior_mean_error(chain: &Chain) -> Result<MeanError> {
    let columns: Vec<Vec<f64>> = (0..chain.k()).map(|k| chain.eps_column(k)).collect();
    mean_error_of_columns(&[columns])
}

/// Pooled mean error over chains given as `[chain][dimension][state]`.
/// Standard errors combine per-chain batch means.
pub fn mean_error_of_columns(chains: &[Vec<Vec<f64>>]) -> Result<MeanError> {
    let k = chains.first().map_or(0, |c| c.len());
    let total: usize = chains
        .iter()
        .map(|c| c.first().map_or(0, |d| d.len()))
        .sum();
    if total < MIN_STATES {
        return Err(AbcError::InsufficientSample(format!(
            "mean error needs at least {MIN_STATES} states, got {total}"
        )));
    }
    let mut mean = Vec::with_capacity(k);
    let mut mcse = Vec::with_capacity(k);
    for d in 0..k {
        // shifting by the first value keeps a constant column exact
        let anchor = chains
            .iter()
            .find_map(|c| c[d].first().copied())
            .unwrap_or(0.0);
        let sum: f64 = chains
            .iter()
            .flat_map(|c| c[d].iter())
            .map(|v| v - anchor)
            .sum();
        mean.push(anchor + sum / total as f64);
        let var: f64 = chains
            .iter()
            .map(|c| (c[d].len() as f64 * batch_means_mcse(&c[d])).powi(2))
            .sum();
        mcse.push(var.sqrt() / total as f64);
    }
    Ok(MeanError { mean, mcse })
}

/// Central `[2.5%, 97.5%]` interval.
pub fn central_interval(x: &[f64]) -> [f64; 2] {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    [
        quantile_sorted(&s, INTERVAL.0),
        quantile_sorted(&s, INTERVAL.1),
    ]
}

fn is_lattice(x: &[f64]) -> bool {
    x.iter().all(|v| v.fract() == 0.0)
}

/// Builds the report from chains given as `[chain][dimension][state]`.
pub fn error_report_from_columns(
    names: Vec<String>,
    chains: &[Vec<Vec<f64>>],
) -> Result<ErrorDensityReport> {
    let k = names.len();
    if chains.iter().any(|c| c.len() != k) {
        return Err(AbcError::Input(
            "chains disagree with the error dimension".into(),
        ));
    }
    let me = mean_error_of_columns(chains)?;
    let pooled: Vec<Vec<f64>> = (0..k)
        .map(|d| chains.iter().flat_map(|c| c[d].iter().copied()).collect())
        .collect();
    let mut marginals = Vec::with_capacity(k);
    let mut intervals = Vec::with_capacity(k);
    for col in &pooled {
        marginals.push(if is_lattice(col) {
            Marginal::Lattice(DiscretePmf::empirical(col, None)?)
        } else {
            Marginal::Density(estimate_density_1d(
                col,
                None,
                DensityMethod::Kde,
                GridSpec::default(),
            )?)
        });
        intervals.push(central_interval(col));
    }
    let mut heat_grids = Vec::new();
    for x in 0..k {
        for y in x + 1..k {
            heat_grids.push(PairGrid {
                x,
                y,
                grid: HeatGrid2D::from_pairs(&pooled[x], &pooled[y], HEAT_CELLS)?,
            });
        }
    }
    let mut report = ErrorDensityReport {
        names,
        states: pooled.first().map_or(0, |c| c.len()),
        marginals,
        heat_grids,
        mean_error: me.mean,
        mcse: me.mcse,
        intervals,
        zero_inclusion: ZeroInclusion {
            marginal: vec![],
            joint: false,
        },
    };
    report.zero_inclusion = zero_inclusion(&report);
    Ok(report)
}

pub fn error_report(chains: &[Chain]) -> Result<ErrorDensityReport> {
    let first = chains
        .first()
        .ok_or_else(|| AbcError::InsufficientSample("no chains to report on".into()))?;
    if chains.iter().any(|c| c.eps_names != first.eps_names) {
        return Err(AbcError::Input("chains disagree on error names".into()));
    }
    let columns: Vec<Vec<Vec<f64>>> = chains
        .iter()
        .map(|c| (0..c.k()).map(|k| c.eps_column(k)).collect())
        .collect();
    error_report_from_columns(first.eps_names.clone(), &columns)
}

/// Marginal flags test 0 against the central intervals; the joint flag needs
/// the origin inside the 95% highest-mass region of every pairwise heat grid
/// (or the single marginal interval when there is one dimension).
pub fn zero_inclusion(report: &ErrorDensityReport) -> ZeroInclusion {
    let marginal: Vec<bool> = report
        .intervals
        .iter()
        .map(|[lo, hi]| *lo <= 0.0 && 0.0 <= *hi)
        .collect();
    let joint = if report.heat_grids.is_empty() {
        marginal.iter().all(|b| *b)
    } else {
        report
            .heat_grids
            .iter()
            .all(|g| g.grid.hpd_contains(0.0, 0.0, HPD_MASS))
    };
    ZeroInclusion { marginal, joint }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normal_pairs(seed: u64, n: usize, shift: f64) -> Vec<Vec<f64>> {
        let mut rng = rng_from_seed(seed);
        (0..2)
            .map(|_| {
                (0..n)
                    .map(|_| shift + rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn symmetric_sample_includes_zero() {
        let r = error_report_from_columns(
            vec!["a".into(), "b".into()],
            &[normal_pairs(1, 20_000, 0.0)],
        )
        .unwrap();
        assert_eq!(r.zero_inclusion.marginal, vec![true, true]);
        assert!(r.zero_inclusion.joint);
        assert!((r.heat_grids[0].grid.total() - 1.0).abs() < 1e-9);

        let far = error_report_from_columns(
            vec!["a".into(), "b".into()],
            &[normal_pairs(2, 20_000, 4.0)],
        )
        .unwrap();
        assert_eq!(far.zero_inclusion.marginal, vec![false, false]);
        assert!(!far.zero_inclusion.joint);
    }

    #[test]
    fn constant_errors_have_zero_mcse() {
        let me = mean_error_of_columns(&[vec![vec![0.7; 500]]]).unwrap();
        assert_eq!(me.mean, vec![0.7]);
        assert_eq!(me.mcse, vec![0.0]);
        assert!(matches!(
            mean_error_of_columns(&[vec![vec![0.0; 99]]]),
            Err(AbcError::InsufficientSample(_))
        ));
    }

    #[test]
    fn relabeling_permutes_flags() {
        let mut cols = normal_pairs(3, 5_000, 0.0);
        for v in &mut cols[1] {
            *v += 3.0;
        }
        let a = error_report_from_columns(vec!["a".into(), "b".into()], &[cols.clone()]).unwrap();
        cols.swap(0, 1);
        let b = error_report_from_columns(vec!["b".into(), "a".into()], &[cols]).unwrap();
        let mut flipped = b.zero_inclusion.marginal.clone();
        flipped.reverse();
        assert_eq!(a.zero_inclusion.marginal, flipped);
        assert_eq!(a.zero_inclusion.joint, b.zero_inclusion.joint);
    }

    #[test]
    fn lattice_errors_report_pmfs() {
        let col: Vec<f64> = (0..300).map(|i| (i % 3) as f64 - 1.0).collect();
        let r = error_report_from_columns(vec!["mean".into()], &[vec![col]]).unwrap();
        assert!(matches!(r.marginals[0], Marginal::Lattice(_)));
        assert!(r.zero_inclusion.joint);
    }
}
