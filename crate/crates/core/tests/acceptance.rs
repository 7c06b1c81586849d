//! End-to-end acceptance checks. Each criterion prints one `[PASS]` or `[FAIL]`
//! line; the binary exits nonzero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use abcmu::diagnostics::{
    convergence_and_ess, error_report, ks_critical_value, ks_samples, posterior_mean_error,
    tv_against_joint, tv_pmf, tv_sample_vs_cdf,
};
use abcmu::experiment::{appendix_rejection, cmd_run, mcmc_preset, RunOptions, FIG6_TAUS};
use abcmu::model::{
    AbcKernel, Dataset, DiscrepancyPipeline, GenerativeModel, KernelFamily, PriorSpec, Summary,
};
use abcmu::models::{GaussianLocationModel, PoissonModel};
use abcmu::oracles::{
    approx_bayes_factor, gaussian_fitted_posterior_error, poisson_bruteforce_target,
    poisson_marginal_likelihood, poisson_mean_error, DiscretePmf,
};
use abcmu::rng::rng_from_seed;
use abcmu::samplers::{
    run_app, run_mcmc, run_prior_predictive, run_rejection, run_wapp, ProposalSpec, RunConfig,
};
use abcmu::Execution;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

const SEED: u64 = 1;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ln_poisson(x: i64, theta: f64) -> f64 {
    x as f64 * theta.ln() - theta - ln_gamma(x as f64 + 1.0)
}

fn poisson_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.5).collect()
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let chains = mcmc_preset(
        "poisson-grid",
        None,
        1,
        200_000,
        SEED,
        Execution::Sequential,
    )
    .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let target = poisson_bruteforce_target(&poisson_grid(), 60, 3, 1.0).unwrap();
    let c = &chains[0];
    let tv = tv_against_joint(&c.theta_column(0), &c.eps_column(0), &target).unwrap();
    outcome(
        tv <= 0.05 && elapsed < 30.0,
        format!("joint TV {tv:.4} (≤ 0.05), {elapsed:.1}s (< 30s)"),
    )
}

/// Marginal likelihood by summing prior-weighted Poisson masses: with an
/// Exponential(1) prior, ∫ e^-θ θ^x e^-θ / x! dθ = 2^-(x+1).
fn brute_marglik(x0: u64, tau: f64) -> f64 {
    (0..2000i64)
        .map(|x| {
            let e = x - x0 as i64;
            (-(x as f64 + 1.0) * std::f64::consts::LN_2
                - std::f64::consts::LN_2 * e.abs() as f64 / tau)
                .exp()
        })
        .sum()
}

fn ac2() -> Outcome {
    let taus = [0.5, 1.0, 2.0 / 3.0, 2.0, 10.0];
    let mut worst = 0.0f64;
    let mut monotone = true;
    for &tau in &taus {
        let mut prev = f64::INFINITY;
        for x0 in 0..=20u64 {
            let closed = poisson_marginal_likelihood(x0, tau).unwrap();
            let brute = brute_marglik(x0, tau);
            worst = worst.max(((closed - brute) / brute).abs());
            monotone &= closed < prev;
            prev = closed;
        }
    }
    outcome(
        worst <= 1e-10 && monotone,
        format!("max relative error {worst:.2e} (≤ 1e-10), monotone decrease: {monotone}"),
    )
}

fn gaussian_location_run(h2: f64, step: f64) -> abcmu::samplers::Chain {
    let model = GaussianLocationModel::with_normal_prior(1.0, 1, 0.0, h2).unwrap();
    let observed = Dataset::new(vec![5.0]).unwrap();
    let pipeline = DiscrepancyPipeline::new(vec![Summary::Mean], &observed).unwrap();
    let kernel = AbcKernel::isotropic(KernelFamily::Gaussian, 10f64.sqrt(), 1).unwrap();
    let proposal = ProposalSpec::gaussian(vec![step]).unwrap();
    run_mcmc(
        &model,
        &pipeline,
        &kernel,
        &proposal,
        &RunConfig::new(100_000, SEED),
    )
    .unwrap()
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
}

fn ac3() -> Outcome {
    let law = gaussian_fitted_posterior_error(0.0, 9.0, 5.0, 10f64.sqrt()).unwrap();
    let oracle_ok = (law.mean + 2.5).abs() < 1e-12 && (law.variance - 5.0).abs() < 1e-12;
    let start = Instant::now();
    let chain = gaussian_location_run(9.0, 3.0);
    let elapsed = start.elapsed().as_secs_f64();
    let me = posterior_mean_error(&chain).unwrap();
    let var = sample_variance(&chain.eps_column(0));
    let mean_ok = (me.mean[0] + 2.5).abs() <= 3.0 * me.mcse[0];
    let var_ok = (var - 5.0).abs() <= 0.5;
    outcome(
        oracle_ok && mean_ok && var_ok && elapsed < 20.0,
        format!(
            "eps mean {:.4} ± {:.4} (target -2.5 within 3 MCSE), variance {var:.3} (5 ± 10%), {elapsed:.1}s (< 20s)",
            me.mean[0], me.mcse[0]
        ),
    )
}

fn ac4() -> Outcome {
    let chain = gaussian_location_run(1e6, 4.0);
    let normal = statrs::distribution::Normal::new(0.0, 10f64.sqrt()).unwrap();
    let cdf = |e: f64| statrs::distribution::ContinuousCDF::cdf(&normal, e);
    let tv = tv_sample_vs_cdf(&chain.eps_column(0), cdf, 40).unwrap();
    outcome(
        tv <= 0.05,
        format!("eps marginal vs N(0, 10): TV {tv:.4} (≤ 0.05)"),
    )
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Kernel-smoothed evidence of the location model with observation variance
/// `v`: composite Simpson over the simulated observation.
fn smoothed_evidence(x0: f64, theta_star: f64, h2: f64, tau2: f64, v: f64) -> f64 {
    let s = h2 + v;
    let post_var = s * tau2 / (s + tau2);
    let post_mean = (theta_star * tau2 + x0 * s) / (s + tau2);
    let half = 14.0 * post_var.sqrt();
    let (a, b) = (post_mean - half, post_mean + half);
    let n = 4000;
    let h = (b - a) / n as f64;
    let f = |x: f64| normal_pdf(x, theta_star, s) * normal_pdf(x, x0, tau2);
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn ac5() -> Outcome {
    let mut rng = rng_from_seed(SEED);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x0 = rng.random_range(-8.0..8.0);
        let theta_star = rng.random_range(-8.0..8.0);
        let h2 = 10f64.powf(rng.random_range(-2.0..2.0));
        let tau2 = 10f64.powf(rng.random_range(-2.0..2.0));
        let b = approx_bayes_factor(x0, theta_star, h2, tau2).unwrap();
        let q = smoothed_evidence(x0, theta_star, h2, tau2, 3.0)
            / smoothed_evidence(x0, theta_star, h2, tau2, 1.0);
        worst = worst.max(((b - q) / q).abs());
    }
    let far = (approx_bayes_factor(5.0, 0.0, 1e8, 1.0).unwrap() - 1.0).abs();
    outcome(
        worst <= 1e-6 && far < 1e-3,
        format!("max relative error vs quadrature {worst:.2e} (≤ 1e-6), |B - 1| at h2 = 1e8: {far:.2e} (< 1e-3)"),
    )
}

fn ac6() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for preset in ["ex3-tight", "ex3-flat"] {
        let chains = mcmc_preset(preset, None, 4, 10_000, SEED, Execution::default()).unwrap();
        let rhat = convergence_and_ess(&chains).unwrap().max_rhat.unwrap();
        let report = error_report(&chains).unwrap();
        let dim = report.names.iter().position(|n| n == "mean").unwrap();
        let [lo, hi] = report.intervals[dim];
        let excludes = !(lo <= 0.0 && 0.0 <= hi);
        pass &= rhat < 1.1 && excludes;
        parts.push(format!(
            "{preset}: R̂ {rhat:.3}, eps_mean 95% [{lo:.3}, {hi:.3}]"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn ac7() -> Outcome {
    let tight = mcmc_preset("ex5-figB", Some(1.6), 4, 10_000, SEED, Execution::default()).unwrap();
    let excludes = !error_report(&tight).unwrap().zero_inclusion.joint;
    let wide = mcmc_preset("ex5-figB", Some(6.4), 4, 10_000, SEED, Execution::default()).unwrap();
    let includes = error_report(&wide).unwrap().zero_inclusion.joint;
    let (acc, prop) = wide
        .iter()
        .fold((0, 0), |(a, p), c| (a + c.accepted, p + c.proposals));
    let rate = acc as f64 / prop as f64;
    outcome(
        rate > 0.8 && excludes && includes,
        format!(
            "acceptance at tau 6.4: {rate:.3} (> 0.8); origin excluded at tau 1.6: {excludes}; included at tau 6.4: {includes}"
        ),
    )
}

fn ac8() -> Outcome {
    let n = 50_000;
    let model = GaussianLocationModel::new(
        1.0,
        20,
        PriorSpec::Normal {
            mean: 2.0,
            variance: 4.0,
        },
    )
    .unwrap();
    let observed = Dataset::new((0..20).map(|i| i as f64 / 10.0).collect()).unwrap();
    let mut direct = Vec::with_capacity(n);
    let mut rng = rng_from_seed(abcmu::rng::derive_seed(SEED, 7));
    for _ in 0..n {
        direct.push(model.sample_prior(&mut rng)[0]);
    }
    let crit = ks_critical_value(n, n, 0.01);

    let pipeline = DiscrepancyPipeline::new(vec![Summary::Mean], &observed).unwrap();
    let flat = AbcKernel::isotropic(KernelFamily::Gaussian, f64::INFINITY, 1).unwrap();
    let a = run_rejection(&model, &pipeline, &flat, &RunConfig::new(n, SEED)).unwrap();
    let ks_flat = ks_samples(&a.theta_column(0), &direct).unwrap();

    let constant = DiscrepancyPipeline::new(vec![Summary::Constant(1.0)], &observed).unwrap();
    let tight = AbcKernel::isotropic(KernelFamily::UniformBox, 0.01, 1).unwrap();
    let b = run_rejection(&model, &constant, &tight, &RunConfig::new(n, SEED + 1)).unwrap();
    let ks_const = ks_samples(&b.theta_column(0), &direct).unwrap();

    outcome(
        ks_flat < crit && ks_const < crit,
        format!("KS flat kernel {ks_flat:.4}, constant summary {ks_const:.4} (critical {crit:.4})"),
    )
}

fn ac9() -> Outcome {
    let mut vars = Vec::new();
    for &tau in &FIG6_TAUS {
        let chain = appendix_rejection(tau, 20_000, SEED, Execution::default()).unwrap();
        vars.push(sample_variance(&chain.theta_column(0)));
    }
    let increasing = vars.windows(2).all(|w| w[1] > w[0]);
    let shown: Vec<String> = FIG6_TAUS
        .iter()
        .zip(&vars)
        .map(|(t, v)| format!("tau {t}: {v:.2}"))
        .collect();
    outcome(
        increasing,
        format!("var(mu) {} (strictly increasing)", shown.join(", ")),
    )
}

fn ac10() -> Outcome {
    let exact = poisson_mean_error(1, f64::INFINITY).unwrap();
    let model = PoissonModel::unit_exponential();
    let observed = Dataset::new(vec![1.0]).unwrap();
    let pipeline = DiscrepancyPipeline::new(vec![Summary::Mean], &observed).unwrap();
    let draws = run_prior_predictive(&model, &pipeline, 100_000, SEED).unwrap();
    let mc = draws.iter().map(|e| e[0]).sum::<f64>() / draws.len() as f64;
    outcome(
        exact == 0.0 && mc.abs() < 0.02,
        format!("analytic {exact}, Monte Carlo {mc:.4} (|·| < 0.02)"),
    )
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn ac11() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.json");
    std::fs::write(
        &config,
        r#"{"preset": "ex5-figA", "sampler": "mcmc", "run": {"iterations": 3000, "chains": 3, "seed": 11}}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (i, exec) in [Execution::Parallel, Execution::Sequential]
        .into_iter()
        .enumerate()
    {
        let opts = RunOptions {
            out: Some(tmp.path().join(format!("out{i}"))),
            seed: None,
            execution: Some(exec),
        };
        cmd_run(&config, &opts).unwrap();
        outputs.push(read_dir_sorted(&tmp.path().join(format!("out{i}"))));
    }
    let same = outputs[0].len() == 3 && outputs[0] == outputs[1];
    outcome(
        same,
        format!(
            "{} chain CSVs byte-identical across repeated runs: {same}",
            outputs[0].len()
        ),
    )
}

fn ac12() -> Outcome {
    let x0 = 3i64;
    let grid = poisson_grid();
    let model = PoissonModel::new(PriorSpec::exponential_grid(grid.clone(), 1.0)).unwrap();
    let observed = Dataset::new(vec![x0 as f64]).unwrap();
    let pipeline = DiscrepancyPipeline::new(vec![Summary::Mean], &observed).unwrap();
    // a unit box on the integer lattice accepts only exact matches
    let exact = AbcKernel::isotropic(KernelFamily::UniformBox, 1.0, 1).unwrap();
    let posterior =
        run_rejection(&model, &pipeline, &exact, &RunConfig::new(50_000, SEED)).unwrap();
    let app = run_app(&posterior.thetas(), &model, &pipeline, 100_000, SEED).unwrap();
    let app_eps: Vec<f64> = app.iter().map(|e| e[0]).collect();

    // θ posterior ∝ e^-θ Poisson(x0; θ) on the grid, then the shifted-Poisson mixture
    let post: Vec<f64> = grid
        .iter()
        .map(|&t| (-t + ln_poisson(x0, t)).exp())
        .collect();
    let z: f64 = post.iter().sum();
    let support: Vec<i64> = (-x0..=50 - x0).collect();
    let app_mass: Vec<f64> = support
        .iter()
        .map(|&e| {
            grid.iter()
                .zip(&post)
                .map(|(&t, p)| p / z * ln_poisson(x0 + e, t).exp())
                .sum()
        })
        .collect();
    let app_oracle = DiscretePmf::from_weights(support.clone(), app_mass.clone()).unwrap();
    let tv_app = tv_pmf(
        &DiscretePmf::empirical(&app_eps, None).unwrap(),
        &app_oracle,
    );

    let geometric = AbcKernel::isotropic(KernelFamily::DiscreteGeometric, 1.0, 1).unwrap();
    let wapp = run_wapp(&app, &geometric).unwrap();
    let weighted: Vec<f64> = support
        .iter()
        .zip(&app_mass)
        .map(|(&e, m)| m * 2f64.powf(-(e.abs() as f64)))
        .collect();
    let wapp_oracle = DiscretePmf::from_weights(support, weighted).unwrap();
    let tv_wapp = tv_pmf(
        &DiscretePmf::empirical(&wapp.column(0), Some(&wapp.weights)).unwrap(),
        &wapp_oracle,
    );

    let flat = AbcKernel::isotropic(KernelFamily::DiscreteGeometric, f64::INFINITY, 1).unwrap();
    let flat_wapp = run_wapp(&app, &flat).unwrap();
    let identical = flat_wapp.draws == app
        && DiscretePmf::empirical(&flat_wapp.column(0), Some(&flat_wapp.weights)).unwrap()
            == DiscretePmf::empirical(&app_eps, None).unwrap();

    outcome(
        tv_app <= 0.05 && tv_wapp <= 0.05 && identical,
        format!(
            "TV APP {tv_app:.4}, TV wAPP {tv_wapp:.4} (≤ 0.05), flat wAPP equals APP: {identical}"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("Poisson sampler exactness", ac1),
        ("closed-form marginal likelihood", ac2),
        ("Gaussian fitted-model error", ac3),
        ("flat-prior limit", ac4),
        ("approximate Bayes factor", ac5),
        ("exponential data reproduction", ac6),
        ("two-parameter acceptance and joint regions", ac7),
        ("degeneracy laws", ac8),
        ("appendix variance ordering", ac9),
        ("prior predictive mean error", ac10),
        ("determinism", ac11),
        ("APP and wAPP", ac12),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] AC{} {name}: {}", i + 1, o.detail);
        if !o.pass {
            failed.push(format!("AC{}", i + 1));
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: failed {}", failed.join(", "));
        std::process::exit(1);
    }
}
