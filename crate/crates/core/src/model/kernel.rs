use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use super::ErrorVector;
use crate::error::{AbcError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    /// `(1/τ) 1{|ε| ≤ τ/2}`
    UniformBox,
    /// `(2πτ²)^(-1/2) exp(-ε²/(2τ²))`
    Gaussian,
    /// `(1/τ) exp(-2|ε|/τ)`
    Laplace,
    /// `2^(-|ε|/τ)`, unnormalized; meant for integer-valued errors.
    DiscreteGeometric,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::UniformBox => "uniform-box",
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplace => "laplace",
            KernelFamily::DiscreteGeometric => "discrete-geometric",
        }
    }
}

/// Factorized, zero-centred error weighting with one scale per summary.
///
/// An infinite scale gives a flat factor (taken as 1), the limit in which every
/// simulation is acceptable. Samplers only ever use ratios, through [`AbcKernel::ln_shape`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbcKernel {
    family: KernelFamily,
    tau: Vec<f64>,
}

impl AbcKernel {
    pub fn new(family: KernelFamily, tau: Vec<f64>) -> Result<Self> {
        if tau.is_empty() {
            return Err(AbcError::Config("kernel needs at least one scale".into()));
        }
        if let Some(t) = tau.iter().find(|t| !(**t > 0.0)) {
            return Err(AbcError::Config(format!(
                "kernel scales must be positive, got {t}"
            )));
        }
        Ok(Self { family, tau })
    }

    /// Same scale in every one of `k` dimensions.
    pub fn isotropic(family: KernelFamily, tau: f64, k: usize) -> Result<Self> {
        Self::new(family, vec![tau; k])
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn dim(&self) -> usize {
        self.tau.len()
    }

    pub fn is_flat(&self) -> bool {
        self.tau.iter().all(|t| t.is_infinite())
    }

    /// Normalized one-dimensional factor for dimension `k`.
    pub fn factor_weight(&self, k: usize, e: f64) -> f64 {
        let t = self.tau[k];
        if t.is_infinite() {
            return 1.0;
        }
        match self.family {
            KernelFamily::UniformBox => {
                if e.abs() <= t / 2.0 {
                    1.0 / t
                } else {
                    0.0
                }
            }
            KernelFamily::Gaussian => (-(e * e) / (2.0 * t * t)).exp() / (2.0 * PI * t * t).sqrt(),
            KernelFamily::Laplace => (-2.0 * e.abs() / t).exp() / t,
            KernelFamily::DiscreteGeometric => (-LN_2 * e.abs() / t).exp(),
        }
    }

    /// `ln(factor(e) / factor(0))`: zero at the mode, `-inf` outside the support.
    pub fn ln_factor_shape(&self, k: usize, e: f64) -> f64 {
        let t = self.tau[k];
        if t.is_infinite() {
            return 0.0;
        }
        match self.family {
            KernelFamily::UniformBox => {
                if e.abs() <= t / 2.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            KernelFamily::Gaussian => -(e * e) / (2.0 * t * t),
            KernelFamily::Laplace => -2.0 * e.abs() / t,
            KernelFamily::DiscreteGeometric => -LN_2 * e.abs() / t,
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(AbcError::Input(format!(
                "kernel has {} dimensions but error vector has {}",
                self.dim(),
                n
            )));
        }
        Ok(())
    }

    pub fn weight(&self, eps: &[f64]) -> Result<f64> {
        self.check_len(eps.len())?;
        Ok(eps
            .iter()
            .enumerate()
            .map(|(k, &e)| self.factor_weight(k, e))
            .product())
    }

    /// `ln(weight(ε) / weight(0))`; lengths are assumed to agree.
    pub fn ln_shape(&self, eps: &[f64]) -> f64 {
        debug_assert_eq!(eps.len(), self.dim());
        eps.iter()
            .enumerate()
            .map(|(k, &e)| self.ln_factor_shape(k, e))
            .sum()
    }

    /// Probability with which a rejection sampler keeps a simulation with error `eps`.
    pub fn acceptance_probability(&self, eps: &[f64]) -> f64 {
        self.ln_shape(eps).exp()
    }
}

pub fn kernel_weight(kernel: &AbcKernel, eps: &ErrorVector) -> Result<f64> {
    kernel.weight(eps.values())
}

/// Anything that can be checked against the kernel axioms.
pub trait KernelProbe {
    fn dim(&self) -> usize;
    fn factor(&self, k: usize, e: f64) -> f64;
    fn joint(&self, eps: &[f64]) -> f64;
    /// Probe half-width unit for dimension `k`.
    fn scale(&self, k: usize) -> f64;
    fn lattice(&self) -> bool {
        false
    }
}

impl KernelProbe for AbcKernel {
    fn dim(&self) -> usize {
        AbcKernel::dim(self)
    }

    fn factor(&self, k: usize, e: f64) -> f64 {
        self.factor_weight(k, e)
    }

    fn joint(&self, eps: &[f64]) -> f64 {
        self.weight(eps).unwrap_or(f64::NAN)
    }

    fn scale(&self, k: usize) -> f64 {
        let t = self.tau[k];
        if t.is_finite() {
            t
        } else {
            1.0
        }
    }

    fn lattice(&self) -> bool {
        self.family == KernelFamily::DiscreteGeometric
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Symmetry,
    ModeAtZero,
    Monotone,
    Factorization,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub dimension: Option<usize>,
    pub at: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct KernelValidation {
    pub probes_per_dimension: usize,
    pub violations: Vec<Violation>,
}

impl KernelValidation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violated(&self, axiom: Axiom) -> bool {
        self.violations.iter().any(|v| v.axiom == axiom)
    }
}

const PROBES: usize = 101;
const PROBE_HALF_WIDTH: f64 = 5.0;
const REL_TOL: f64 = 1e-12;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()) || a == b
}

fn probe_grid(kernel: &dyn KernelProbe, k: usize) -> Vec<f64> {
    let half = PROBE_HALF_WIDTH * kernel.scale(k);
    if kernel.lattice() {
        let m = half.round().max(5.0) as i64;
        (-m..=m).map(|i| i as f64).collect()
    } else {
        (0..PROBES)
            .map(|i| -half + 2.0 * half * i as f64 / (PROBES - 1) as f64)
            .collect()
    }
}

/// Checks symmetry, mode at zero, monotone decay in |ε_k| and factorization on a
/// ±5τ probe grid (101 points per dimension, or the integers in that range for
/// lattice kernels). The report lists every violation found.
pub fn validate_kernel(kernel: &dyn KernelProbe) -> KernelValidation {
    let mut report = KernelValidation {
        probes_per_dimension: 0,
        violations: Vec::new(),
    };
    let grids: Vec<Vec<f64>> = (0..kernel.dim()).map(|k| probe_grid(kernel, k)).collect();
    report.probes_per_dimension = grids.first().map_or(0, Vec::len);

    for (k, grid) in grids.iter().enumerate() {
        let at_zero = kernel.factor(k, 0.0);
        for &e in grid {
            let (w, w_neg) = (kernel.factor(k, e), kernel.factor(k, -e));
            if !close(w, w_neg) {
                report.violations.push(Violation {
                    axiom: Axiom::Symmetry,
                    dimension: Some(k),
                    at: e,
                    detail: format!("weight({e}) = {w} but weight({}) = {w_neg}", -e),
                });
                break;
            }
        }
        if let Some(&e) = grid
            .iter()
            .find(|&&e| kernel.factor(k, e) > at_zero * (1.0 + REL_TOL))
        {
            report.violations.push(Violation {
                axiom: Axiom::ModeAtZero,
                dimension: Some(k),
                at: e,
                detail: format!("weight({e}) exceeds weight(0) = {at_zero}"),
            });
        }
        let mut by_magnitude: Vec<f64> = grid.iter().map(|e| e.abs()).collect();
        by_magnitude.sort_by(f64::total_cmp);
        for pair in by_magnitude.windows(2) {
            let (near, far) = (kernel.factor(k, pair[0]), kernel.factor(k, pair[1]));
            if far > near * (1.0 + REL_TOL) {
                report.violations.push(Violation {
                    axiom: Axiom::Monotone,
                    dimension: Some(k),
                    at: pair[1],
                    detail: format!(
                        "weight grows from {near} at |ε|={} to {far} at |ε|={}",
                        pair[0], pair[1]
                    ),
                });
                break;
            }
        }
    }

    // Factorization on a deterministic scatter of grid tuples.
    let n = report.probes_per_dimension;
    for i in 0..n {
        let eps: Vec<f64> = grids
            .iter()
            .enumerate()
            .map(|(k, g)| g[(i * (2 * k + 1) * 37 + k * 11) % g.len()])
            .collect();
        let product: f64 = eps
            .iter()
            .enumerate()
            .map(|(k, &e)| kernel.factor(k, e))
            .product();
        let joint = kernel.joint(&eps);
        if !close(joint, product) {
            report.violations.push(Violation {
                axiom: Axiom::Factorization,
                dimension: None,
                at: eps[0],
                detail: format!(
                    "joint weight {joint} differs from product of factors {product} at {eps:?}"
                ),
            });
            break;
        }
    }
    report
}
