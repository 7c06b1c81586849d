use serde::{Deserialize, Serialize};

use super::{Dataset, ErrorVector, SummaryVector};
use crate::error::{AbcError, Result};

/// Builtin summary statistics.
///
/// Order statistics use the averaged inverted-CDF convention: with `h = n p`,
/// an integral `h` averages the `h`-th and `(h+1)`-th order statistics, any other
/// `h` takes the `ceil(h)`-th. The median of an even sample is therefore the mean
/// of the two middle values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Summary {
    Mean,
    Median,
    Quantile(f64),
    /// Sample standard deviation (n - 1 denominator, 0 for a single observation).
    Sd,
    /// Mean minus median.
    Symm,
    /// Ignores the data. Useful to exhibit summaries that carry no information about θ.
    Constant(f64),
}

impl Summary {
    pub fn name(&self) -> String {
        match self {
            Summary::Mean => "mean".into(),
            Summary::Median => "median".into(),
            Summary::Quantile(p) => format!("q{p}"),
            Summary::Sd => "sd".into(),
            Summary::Symm => "symm".into(),
            Summary::Constant(_) => "const".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Summary::Quantile(p) if !(p > 0.0 && p < 1.0) => Err(AbcError::Config(format!(
                "quantile level must lie in (0, 1), got {p}"
            ))),
            Summary::Constant(c) if !c.is_finite() => {
                Err(AbcError::Config("constant summary must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    fn needs_order(&self) -> bool {
        matches!(self, Summary::Median | Summary::Quantile(_) | Summary::Symm)
    }

    pub fn evaluate(&self, data: &Dataset) -> Result<f64> {
        self.validate()?;
        let sorted = self.needs_order().then(|| sorted_copy(data.observations()));
        Ok(self.evaluate_with(data.observations(), sorted.as_deref()))
    }

    fn evaluate_with(&self, xs: &[f64], sorted: Option<&[f64]>) -> f64 {
        let ordered = || sorted.expect("order statistics requested without a sorted copy");
        match *self {
            Summary::Mean => mean(xs),
            Summary::Median => quantile_sorted(ordered(), 0.5),
            Summary::Quantile(p) => quantile_sorted(ordered(), p),
            Summary::Sd => sample_sd(xs),
            Summary::Symm => mean(xs) - quantile_sorted(ordered(), 0.5),
            Summary::Constant(c) => c,
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Averaged inverted-CDF quantile of an ascending, nonempty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let h = n as f64 * p;
    let j = h.floor();
    if h == j {
        let j = j as usize;
        if j == 0 {
            sorted[0]
        } else if j >= n {
            sorted[n - 1]
        } else {
            0.5 * (sorted[j - 1] + sorted[j])
        }
    } else {
        sorted[(h.ceil() as usize).clamp(1, n) - 1]
    }
}

/// K summary statistics with signed differences against fixed observed summaries.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscrepancyPipeline {
    summaries: Vec<Summary>,
    reference: SummaryVector,
}

impl DiscrepancyPipeline {
    /// Builds the pipeline and evaluates the reference summaries on `observed`.
    pub fn new(summaries: Vec<Summary>, observed: &Dataset) -> Result<Self> {
        if summaries.is_empty() {
            return Err(AbcError::Config(
                "pipeline needs at least one summary".into(),
            ));
        }
        let probe = Self {
            reference: SummaryVector(vec![0.0; summaries.len()]),
            summaries,
        };
        let reference = probe.compute_summaries(observed)?;
        Ok(Self { reference, ..probe })
    }

    pub fn with_reference(summaries: Vec<Summary>, reference: SummaryVector) -> Result<Self> {
        if summaries.is_empty() {
            return Err(AbcError::Config(
                "pipeline needs at least one summary".into(),
            ));
        }
        if summaries.len() != reference.len() {
            return Err(AbcError::Input(format!(
                "{} summaries but {} reference values",
                summaries.len(),
                reference.len()
            )));
        }
        for s in &summaries {
            s.validate()?;
        }
        Ok(Self {
            summaries,
            reference,
        })
    }

    pub fn k(&self) -> usize {
        self.summaries.len()
    }

    pub fn summaries(&self) -> &[Summary] {
        &self.summaries
    }

    pub fn reference(&self) -> &SummaryVector {
        &self.reference
    }

    pub fn names(&self) -> Vec<String> {
        self.summaries.iter().map(Summary::name).collect()
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .summaries
            .iter()
            .zip(self.reference.values())
            .map(|(s, r)| format!("{}(x)-{}", s.name(), r))
            .collect();
        parts.join("; ")
    }

    pub fn compute_summaries(&self, data: &Dataset) -> Result<SummaryVector> {
        for s in &self.summaries {
            s.validate()?;
        }
        let xs = data.observations();
        let sorted = self
            .summaries
            .iter()
            .any(Summary::needs_order)
            .then(|| sorted_copy(xs));
        let values = self
            .summaries
            .iter()
            .map(|s| s.evaluate_with(xs, sorted.as_deref()))
            .collect();
        SummaryVector::new(values)
    }

    pub fn compute_errors(&self, simulated: &SummaryVector) -> Result<ErrorVector> {
        if simulated.len() != self.k() {
            return Err(AbcError::Input(format!(
                "expected {} simulated summaries, got {}",
                self.k(),
                simulated.len()
            )));
        }
        let eps = simulated
            .values()
            .iter()
            .zip(self.reference.values())
            .map(|(s, r)| s - r)
            .collect();
        ErrorVector::new(eps)
    }

    /// Summaries followed by signed differences in one step.
    pub fn discrepancy(&self, data: &Dataset) -> Result<ErrorVector> {
        self.compute_errors(&self.compute_summaries(data)?)
    }
}

pub fn compute_summaries(pipeline: &DiscrepancyPipeline, data: &Dataset) -> Result<SummaryVector> {
    pipeline.compute_summaries(data)
}

pub fn compute_errors(
    pipeline: &DiscrepancyPipeline,
    simulated: &SummaryVector,
) -> Result<ErrorVector> {
    pipeline.compute_errors(simulated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn data(xs: &[f64]) -> Dataset {
        Dataset::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn builtin_summary_examples() {
        assert_eq!(
            Summary::Mean.evaluate(&data(&[1.0, 2.0, 3.0])).unwrap(),
            2.0
        );
        assert_eq!(
            Summary::Median
                .evaluate(&data(&[1.0, 2.0, 3.0, 10.0]))
                .unwrap(),
            2.5
        );
        assert_eq!(
            Summary::Symm.evaluate(&data(&[0.0, 0.0, 3.0])).unwrap(),
            1.0
        );
        assert_eq!(Summary::Sd.evaluate(&data(&[2.0, 2.0, 2.0])).unwrap(), 0.0);
        assert_eq!(
            Summary::Quantile(0.25)
                .evaluate(&data(&[1.0, 2.0, 3.0, 4.0]))
                .unwrap(),
            1.5
        );
        assert_eq!(
            Summary::Symm.evaluate(&data(&[-1.0, 0.0, 1.0])).unwrap(),
            0.0
        );
    }

    #[test]
    fn quantile_non_integral_position_takes_ceiling() {
        // n p = 1.5 -> second order statistic
        assert_eq!(quantile_sorted(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 0.25), 2.0);
        assert_eq!(quantile_sorted(&[7.0], 0.9), 7.0);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(matches!(Dataset::new(vec![]), Err(AbcError::Input(_))));
        assert!(Dataset::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn bad_quantile_level() {
        assert!(Summary::Quantile(1.0).evaluate(&data(&[1.0])).is_err());
        assert!(DiscrepancyPipeline::new(vec![Summary::Quantile(0.0)], &data(&[1.0])).is_err());
    }

    #[test]
    fn errors_are_signed_differences() {
        let p = DiscrepancyPipeline::with_reference(
            vec![Summary::Mean, Summary::Median],
            SummaryVector::new(vec![5.0, 5.0]).unwrap(),
        )
        .unwrap();
        let e = p
            .compute_errors(&SummaryVector::new(vec![5.2, 4.9]).unwrap())
            .unwrap();
        assert!((e[0] - 0.2).abs() < 1e-12 && (e[1] + 0.1).abs() < 1e-12);
        assert!(p
            .compute_errors(&SummaryVector::new(vec![1.0]).unwrap())
            .is_err());
    }

    #[test]
    fn poisson_error_is_shift() {
        let p = DiscrepancyPipeline::new(vec![Summary::Mean], &data(&[1.0])).unwrap();
        assert_eq!(p.discrepancy(&data(&[4.0])).unwrap()[0], 3.0);
    }

    proptest! {
        #[test]
        fn self_discrepancy_is_exactly_zero(xs in prop::collection::vec(-1e3f64..1e3, 1..40), p in 0.01f64..0.99) {
            let d = data(&xs);
            let pipeline = DiscrepancyPipeline::new(
                vec![Summary::Mean, Summary::Median, Summary::Quantile(p), Summary::Sd, Summary::Symm, Summary::Constant(2.0)],
                &d,
            ).unwrap();
            let eps = pipeline.discrepancy(&d).unwrap();
            prop_assert!(eps.values().iter().all(|&e| e == 0.0));
        }
    }
}
