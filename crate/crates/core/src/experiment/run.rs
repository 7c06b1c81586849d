use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Experiment, ExperimentConfig, SamplerKind};
use super::csvio::{render_chain_csv, render_draws_csv, write_atomic};
use crate::diagnostics::{
    convergence_and_ess, posterior_mean_error, ConvergenceReport, MeanError, MIN_STATES,
};
use crate::error::{AbcError, Result};
use crate::exec::Execution;
use crate::model::ErrorVector;
use crate::rng::derive_seed;
use crate::samplers::{
    run_app_with, run_mcmc_chains, run_prior_predictive_with, run_rejection_chains, run_wapp, Chain,
};

const PREDICTIVE_TAG: u64 = 0x5052_4544;

/// Environment variable naming the default output root.
pub const DATA_DIR_ENV: &str = "ABCMU_DATA_DIR";

pub enum RunOutput {
    Chains(Vec<Chain>),
    Draws {
        eps_names: Vec<String>,
        draws: Vec<ErrorVector>,
        weights: Vec<f64>,
    },
}

/// Runs the configured sampler.
pub fn execute(exp: &Experiment, exec: Execution) -> Result<RunOutput> {
    let cfg = &exp.config;
    let run = &cfg.run;
    let model = exp.model.as_ref();
    let mcmc = || {
        let proposal = exp
            .proposal
            .as_ref()
            .expect("canonical mcmc config has a proposal");
        run_mcmc_chains(model, &exp.pipeline, &exp.kernel, proposal, run, exec)
    };
    let draws_wanted = cfg.predictive.as_ref().and_then(|p| p.draws);
    let pred_seed = derive_seed(run.seed, PREDICTIVE_TAG);
    Ok(match cfg.sampler {
        SamplerKind::Mcmc => RunOutput::Chains(mcmc()?),
        SamplerKind::Rejection => RunOutput::Chains(run_rejection_chains(
            model,
            &exp.pipeline,
            &exp.kernel,
            run,
            exec,
        )?),
        SamplerKind::PriorPredictive => {
            let n = draws_wanted.unwrap_or(run.iterations);
            let draws = run_prior_predictive_with(model, &exp.pipeline, n, pred_seed, exec)?;
            RunOutput::Draws {
                eps_names: exp.pipeline.names(),
                weights: vec![1.0; draws.len()],
                draws,
            }
        }
        SamplerKind::App | SamplerKind::Wapp => {
            let thetas: Vec<_> = mcmc()?.iter().flat_map(|c| c.thetas()).collect();
            let n = draws_wanted.unwrap_or(thetas.len());
            let draws = run_app_with(&thetas, model, &exp.pipeline, n, pred_seed, exec)?;
            let weights = if cfg.sampler == SamplerKind::Wapp {
                run_wapp(&draws, &exp.kernel)?.weights
            } else {
                vec![1.0; draws.len()]
            };
            RunOutput::Draws {
                eps_names: exp.pipeline.names(),
                draws,
                weights,
            }
        }
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainSummary {
    pub index: usize,
    pub file: String,
    pub states: usize,
    pub proposals: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_error: Option<MeanError>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DrawSummary {
    pub file: String,
    pub draws: usize,
    /// Kish effective size of the weights.
    pub effective_draws: f64,
    pub weighted_mean_error: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub tool_version: &'static str,
    pub config: serde_json::Value,
    pub out_dir: PathBuf,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub chains: Vec<ChainSummary>,
    /// Split-R̂ appears per coordinate when more than one chain ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<DrawSummary>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub execution: Option<Execution>,
}

/// Output directory: explicit flag, then the config's `output.dir`, then
/// `$ABCMU_DATA_DIR/<label>`, then `abcmu-data/<label>`.
pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>, label: &str) -> PathBuf {
    if let Some(p) = flag.or(config) {
        return p.to_path_buf();
    }
    let root = std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("abcmu-data"));
    root.join(label)
}

pub fn cmd_run(config_path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let mut cfg = ExperimentConfig::from_path(config_path)?;
    if let Some(seed) = opts.seed {
        cfg.run.seed = seed;
    }
    run_config(&cfg, opts)
}

pub fn run_config(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    let exp = cfg.build()?;
    let canonical = serde_json::to_string(&exp.config).expect("config serializes");
    let out = resolve_out_dir(
        opts.out.as_deref(),
        exp.config.output.as_ref().map(|o| o.dir.as_path()),
        &exp.config.label(),
    );
    let output = execute(&exp, opts.execution.unwrap_or_default())?;
    std::fs::create_dir_all(&out)?;
    let mut summary = RunSummary {
        tool_version: super::csvio::VERSION,
        config: serde_json::from_str(&canonical).expect("canonical json"),
        out_dir: out.clone(),
        chains: vec![],
        convergence: None,
        draws: None,
    };
    match output {
        RunOutput::Chains(chains) => {
            for c in &chains {
                let file = format!("chain_{}.csv", c.chain_index);
                write_atomic(&out.join(&file), render_chain_csv(c, &canonical).as_bytes())?;
                summary.chains.push(ChainSummary {
                    index: c.chain_index,
                    file,
                    states: c.len(),
                    proposals: c.proposals,
                    accepted: c.accepted,
                    acceptance_rate: c.acceptance_rate,
                    mean_error: (c.len() >= MIN_STATES)
                        .then(|| posterior_mean_error(c))
                        .transpose()?,
                });
            }
            if chains.iter().all(|c| c.len() >= 4) {
                summary.convergence = Some(convergence_and_ess(&chains)?);
            }
        }
        RunOutput::Draws {
            eps_names,
            draws,
            weights,
        } => {
            let rows: Vec<Vec<f64>> = draws.iter().map(|d| d.values().to_vec()).collect();
            let total: f64 = weights.iter().sum();
            if !(total > 0.0) {
                return Err(AbcError::DegenerateWeights(
                    "every predictive draw has zero weight".into(),
                ));
            }
            let k = eps_names.len();
            let weighted_mean_error = (0..k)
                .map(|j| {
                    rows.iter()
                        .zip(&weights)
                        .map(|(r, w)| r[j] * w)
                        .sum::<f64>()
                        / total
                })
                .collect();
            let effective_draws = total * total / weights.iter().map(|w| w * w).sum::<f64>();
            write_atomic(
                &out.join("draws.csv"),
                render_draws_csv(&eps_names, &rows, &weights, &canonical).as_bytes(),
            )?;
            summary.draws = Some(DrawSummary {
                file: "draws.csv".into(),
                draws: rows.len(),
                effective_draws,
                weighted_mean_error,
            });
        }
    }
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_atomic(&out.join("summary.json"), json.as_bytes())?;
    Ok(summary)
}
