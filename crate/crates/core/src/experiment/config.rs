use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{AbcError, Result};
use crate::model::{AbcKernel, DiscrepancyPipeline, GenerativeModel, KernelFamily, Summary};
use crate::models::{preset, ModelSpec, ObservedSpec};
use crate::samplers::{ProposalSpec, RunConfig};

/// A kernel scale; `"inf"` in JSON stands for a flat factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tau(pub f64);

impl Serialize for Tau {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Tau {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Tau;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Tau, E> {
                Ok(Tau(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Tau, E> {
                Ok(Tau(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Tau, E> {
                Ok(Tau(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Tau, E> {
                match v {
                    "inf" | "infinity" | "Infinity" => Ok(Tau(f64::INFINITY)),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: KernelFamily,
    pub tau: Vec<Tau>,
}

impl KernelConfig {
    pub fn from_kernel(k: &AbcKernel) -> Self {
        Self {
            family: k.family(),
            tau: k.tau().iter().map(|t| Tau(*t)).collect(),
        }
    }

    pub fn build(&self) -> Result<AbcKernel> {
        AbcKernel::new(self.family, self.tau.iter().map(|t| t.0).collect())
            .map_err(|e| AbcError::Config(format!("kernel.tau: {}", strip(e))))
    }
}

fn strip(e: AbcError) -> String {
    match e {
        AbcError::Config(m) | AbcError::Input(m) => m,
        other => other.to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Rejection,
    Mcmc,
    PriorPredictive,
    /// Posterior θ from an MCMC run, then one predictive draw per sampled θ.
    App,
    /// As `App`, with kernel weights attached.
    Wapp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictiveConfig {
    /// Number of predictive draws; defaults to the number of pooled posterior states
    /// (APP/wAPP) or `run.iterations` (prior predictive).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

/// One experiment: a preset or an inline model, the discrepancy pipeline,
/// kernel, sampler and run settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<ObservedSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summaries: Option<Vec<Summary>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    pub sampler: SamplerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal: Option<ProposalSpec>,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictive: Option<PredictiveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

/// A validated experiment ready to run.
pub struct Experiment {
    /// Canonical form: every preset default made explicit.
    pub config: ExperimentConfig,
    pub model: Box<dyn GenerativeModel>,
    pub pipeline: DiscrepancyPipeline,
    pub kernel: AbcKernel,
    pub proposal: Option<ProposalSpec>,
}

fn at(path: &str, e: AbcError) -> AbcError {
    AbcError::Config(format!("{path}: {}", strip(e)))
}

impl ExperimentConfig {
    /// Parses JSON, reporting the path of the first offending field.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." || path.is_empty() {
                AbcError::Config(inner.to_string())
            } else {
                AbcError::Config(format!("{path}: {inner}"))
            }
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AbcError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Fills every field a preset supplies and validates the result. Applying it
    /// twice gives the same value.
    pub fn canonicalize(&self) -> Result<Self> {
        let base = match &self.preset {
            Some(name) => Some(preset(name).map_err(|e| at("preset", e))?),
            None => None,
        };
        let missing =
            |field: &str| AbcError::Config(format!("{field}: required when no preset is given"));
        let model = match (&self.model, &base) {
            (Some(m), _) => m.clone(),
            (None, Some(p)) => p.model.clone(),
            (None, None) => return Err(missing("model")),
        };
        let observed = match (&self.observed, &base) {
            (Some(o), _) => o.clone(),
            (None, Some(p)) => p.observed.clone(),
            (None, None) => return Err(missing("observed")),
        };
        let summaries = match (&self.summaries, &base) {
            (Some(s), _) => s.clone(),
            (None, Some(p)) => p.summaries.clone(),
            (None, None) => return Err(missing("summaries")),
        };
        let kernel = match (&self.kernel, &base) {
            (Some(k), _) => k.clone(),
            (None, Some(p)) => KernelConfig::from_kernel(&p.kernel),
            (None, None) => return Err(missing("kernel")),
        };
        if summaries.is_empty() {
            return Err(AbcError::Config(
                "summaries: at least one summary is required".into(),
            ));
        }
        for (i, s) in summaries.iter().enumerate() {
            s.validate()
                .map_err(|e| at(&format!("summaries[{i}]"), e))?;
        }
        if kernel.tau.len() != summaries.len() {
            return Err(AbcError::Config(format!(
                "kernel.tau: expected {} scales (one per summary), got {}",
                summaries.len(),
                kernel.tau.len()
            )));
        }
        kernel.build()?;
        self.run.validate().map_err(|e| at("run", e))?;
        model.prior().validate().map_err(|e| at("model.prior", e))?;
        let built = model.build().map_err(|e| at("model", e))?;

        let proposal = match self.sampler {
            SamplerKind::Mcmc | SamplerKind::App | SamplerKind::Wapp => {
                let p = self
                    .proposal
                    .clone()
                    .or_else(|| {
                        base.as_ref()
                            .filter(|b| b.model == model)
                            .and_then(|b| b.proposal.clone())
                    })
                    .unwrap_or_else(|| ProposalSpec::default_for(built.prior()));
                p.validate().map_err(|e| at("proposal", e))?;
                if p.step_scales.len() != built.theta_dim() {
                    return Err(AbcError::Config(format!(
                        "proposal.step_scales: expected {} entries, got {}",
                        built.theta_dim(),
                        p.step_scales.len()
                    )));
                }
                Some(p)
            }
            _ => None,
        };
        let predictive = match self.sampler {
            SamplerKind::PriorPredictive | SamplerKind::App | SamplerKind::Wapp => {
                let p = self
                    .predictive
                    .clone()
                    .unwrap_or(PredictiveConfig { draws: None });
                if p.draws == Some(0) {
                    return Err(AbcError::Config(
                        "predictive.draws: must be at least 1".into(),
                    ));
                }
                Some(p)
            }
            _ => None,
        };
        Ok(Self {
            preset: self.preset.clone(),
            model: Some(model),
            observed: Some(observed),
            summaries: Some(summaries),
            kernel: Some(kernel),
            sampler: self.sampler,
            proposal,
            run: self.run.clone(),
            predictive,
            output: self.output.clone(),
        })
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        let c = self.canonicalize()?;
        Ok(serde_json::to_string(&c).expect("config serializes"))
    }

    /// Canonicalizes and instantiates the model, pipeline and kernel.
    pub fn build(&self) -> Result<Experiment> {
        let config = self.canonicalize()?;
        let model = config.model.as_ref().expect("canonical").build()?;
        let data = config
            .observed
            .as_ref()
            .expect("canonical")
            .dataset()
            .map_err(|e| at("observed", e))?;
        let pipeline =
            DiscrepancyPipeline::new(config.summaries.clone().expect("canonical"), &data)
                .map_err(|e| at("summaries", e))?;
        let kernel = config.kernel.as_ref().expect("canonical").build()?;
        let proposal = config.proposal.clone();
        Ok(Experiment {
            config,
            model,
            pipeline,
            kernel,
            proposal,
        })
    }

    /// Short name used for default output directories.
    pub fn label(&self) -> String {
        self.preset.clone().unwrap_or_else(|| "experiment".into())
    }
}
