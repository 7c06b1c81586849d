use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use abcmu::exec::configure_workers;
use abcmu::experiment::{
    cmd_analyze, cmd_oracle, cmd_reproduce, cmd_run, exit_code, resolve_out_dir, RunOptions,
    EXIT_CLAIM,
};
use abcmu::{AbcError, Execution};

#[derive(Parser)]
#[command(
    name = "abcmu",
    version,
    about = "Simulation-based model criticism through per-summary error densities"
)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory (a file for `oracle`). Defaults to $ABCMU_DATA_DIR/<name>.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sampler described by a JSON experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Marginal densities, heat grids and zero-inclusion flags from chain files.
    Analyze {
        /// Chain CSV files or run directories.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Evaluate a closed-form reference, e.g. `oracle poisson-marglik x0=0 tau=1`.
    Oracle {
        name: String,
        /// key=value parameters; `inf` and fractions like `2/3` are accepted.
        params: Vec<String>,
    },
    /// Regenerate the data behind a figure: fig1, fig2, fig3, fig4-5 or fig6.
    Reproduce {
        figure: String,
        /// Multiplies the reference iteration counts.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
}

fn fail(err: AbcError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code(&err) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        configure_workers(jobs);
    }
    let exec = Execution::default();
    match cli.command {
        Command::Run { config } => {
            let opts = RunOptions {
                out: cli.out,
                seed: cli.seed,
                execution: Some(exec),
            };
            match cmd_run(&config, &opts) {
                Ok(s) => {
                    println!("wrote {}", s.out_dir.display());
                    for c in &s.chains {
                        println!(
                            "  {}: {} states, acceptance {:.4}",
                            c.file, c.states, c.acceptance_rate
                        );
                    }
                    if let Some(r) = s.convergence.as_ref().and_then(|c| c.max_rhat) {
                        println!("  max split-R̂ {r:.4}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Analyze { inputs } => {
            let out = cli.out.unwrap_or_else(|| inputs[0].join("analysis"));
            let out = if inputs[0].is_file() && out == inputs[0].join("analysis") {
                inputs[0].with_file_name("analysis")
            } else {
                out
            };
            match cmd_analyze(&inputs, &out) {
                Ok(r) => {
                    println!("wrote {}", out.display());
                    for (i, name) in r.errors.names.iter().enumerate() {
                        let [lo, hi] = r.errors.intervals[i];
                        println!(
                            "  eps_{name}: mean {:.6} ± {:.2e}, 95% [{lo:.6}, {hi:.6}], includes 0: {}",
                            r.errors.mean_error[i], r.errors.mcse[i], r.errors.zero_inclusion.marginal[i]
                        );
                    }
                    println!(
                        "  joint region includes origin: {}",
                        r.errors.zero_inclusion.joint
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Oracle { name, params } => match cmd_oracle(&name, &params) {
            Ok(v) => {
                let text = serde_json::to_string_pretty(&v).expect("json");
                if let Some(path) = cli.out {
                    if let Err(e) = abcmu::experiment::write_atomic(&path, text.as_bytes()) {
                        return fail(e);
                    }
                }
                println!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Reproduce { figure, scale } => {
            let out = resolve_out_dir(cli.out.as_deref(), None, &figure);
            match cmd_reproduce(&figure, scale, cli.seed, &out, exec) {
                Ok(m) => {
                    println!("wrote {} ({} files)", out.display(), m.files.len());
                    for c in &m.claims {
                        println!(
                            "  [{}] {}",
                            if c.passed() { "PASS" } else { "FAIL" },
                            c.description
                        );
                    }
                    if m.passed {
                        ExitCode::SUCCESS
                    } else {
                        eprint!("{}", m.diagnostic());
                        ExitCode::from(EXIT_CLAIM as u8)
                    }
                }
                Err(e) => fail(e),
            }
        }
    }
}
