// SPDX-License-Identifier: MIT OR Apache-2.0

//! `exactseg`: exact posterior analysis of a series, the simulation study
//! and an enumeration cross-check.
//!
//! Exit codes: 0 success, 1 other failure (including a failed oracle check),
//! 2 unreadable or unparseable input, 3 data that does not fit the model,
//! 4 series too long (dense segment table or enumeration guard).

mod input;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use exactseg::oracle::{check_against_engine, ENUMERATION_LIMIT};
use exactseg::simlab::{run_kl_experiment, run_recovery_experiment, SimDesign};
use exactseg::{Analysis, ModelHyper, PosteriorSummary, PriorSpec, SegError, SeriesData};

use crate::input::{read_series, InputError};
use crate::output::{write_analysis, write_experiment, AnalysisMeta};

/// Longest series analyzed without `--force-large-n`; the segment table is dense in `n`.
const MAX_DEFAULT_N: usize = 5000;
const DEFAULT_KMAX: usize = 20;
const ORACLE_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "exactseg",
    version,
    about = "Exact Bayesian posteriors over all segmentations of a series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Posterior quantities, selection report and credibility intervals for one series.
    Analyze(AnalyzeArgs),
    /// Recovery and KL-distance simulation study on piecewise Poisson series.
    Simulate(SimulateArgs),
    /// Compares every engine output with brute-force enumeration (short series only).
    OracleCheck(ModelArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Poisson,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Prior {
    /// Uniform over segmentations given K, uniform over K.
    Uniform,
    /// Segment weights proportional to 1/length.
    Homogeneous,
    /// Uniform over every segmentation with at most kmax segments.
    Flat,
}

impl Prior {
    fn name(self) -> &'static str {
        match self {
            Prior::Uniform => "uniform",
            Prior::Homogeneous => "homogeneous",
            Prior::Flat => "flat",
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Series file: one value per line, optional header.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "poisson")]
    model: Model,
    #[arg(long, value_enum, default_value = "uniform")]
    prior: Prior,
    /// Largest number of segments [default: min(n, 20); n for oracle-check]
    #[arg(long)]
    kmax: Option<usize>,
    /// Gamma shape (Poisson model).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Gamma rate (Poisson model).
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Prior mean (Gaussian model) [default: sample mean]
    #[arg(long)]
    mu0: Option<f64>,
    /// Prior mean pseudo-count (Gaussian model).
    #[arg(long, default_value_t = 0.1)]
    n0: f64,
    /// Precision shape pseudo-count (Gaussian model).
    #[arg(long, default_value_t = 1.0)]
    nu0: f64,
    /// Precision scale (Gaussian model) [default: sample variance, 1 if zero]
    #[arg(long)]
    s0: Option<f64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Credibility level of the change-point intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Allow series longer than 5000 points.
    #[arg(long)]
    force_large_n: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = SimDesign::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = SimDesign::default().replicates)]
    replicates: usize,
    /// Comma-separated contrasts [default: 0,1,2,4,6,8,10]
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Largest number of segments.
    #[arg(long, default_value_t = SimDesign::default().kmax)]
    kmax: usize,
    /// Single alpha = beta value instead of the default grid 0.01,0.1,1 (KL study uses 1 unless set).
    #[arg(long)]
    alpha: Option<f64>,
}

/// Error carrying its process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<SegError>() {
            Some(SegError::ModelMismatch(_)) => 3,
            Some(SegError::TooLarge { .. }) => 4,
            _ => match error.downcast_ref::<InputError>() {
                Some(_) => 2,
                None => 1,
            },
        };
        Self { code, error }
    }
}

impl From<SegError> for Failure {
    fn from(e: SegError) -> Self {
        anyhow::Error::from(e).into()
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn fail(code: u8, msg: String) -> Failure {
    Failure {
        code,
        error: anyhow::anyhow!(msg),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => analyze(&args),
        Command::Simulate(args) => simulate(&args),
        Command::OracleCheck(args) => oracle_check(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load(args: &ModelArgs) -> CliResult<(SeriesData, ModelHyper)> {
    let values = read_series(&args.input)?;
    let data = match args.model {
        Model::Poisson => SeriesData::poisson(&values),
        Model::Gaussian => SeriesData::gaussian(&values),
    }?;
    let hyper = match args.model {
        Model::Poisson => ModelHyper::poisson(args.alpha, args.beta),
        Model::Gaussian => {
            let ModelHyper::Gaussian { mu0, s0, .. } = ModelHyper::gaussian_default_for(&values)? else {
                unreachable!("gaussian defaults are gaussian")
            };
            ModelHyper::gaussian(args.mu0.unwrap_or(mu0), args.n0, args.nu0, args.s0.unwrap_or(s0))
        }
    }
    .context("invalid hyperparameters")?;
    Ok((data, hyper))
}

fn prior_for(args: &ModelArgs, n: usize, kmax: usize) -> CliResult<PriorSpec> {
    if kmax == 0 || kmax > n {
        return Err(fail(1, format!("--kmax must lie in 1..={n} (got {kmax})")));
    }
    let prior = match args.prior {
        Prior::Uniform => PriorSpec::uniform_given_k(kmax),
        Prior::Homogeneous => PriorSpec::homogeneous_lengths(kmax),
        Prior::Flat => PriorSpec::flat_over_segmentations(n, kmax),
    };
    Ok(prior?)
}

fn model_name(m: Model) -> &'static str {
    match m {
        Model::Poisson => "poisson",
        Model::Gaussian => "gaussian",
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> CliResult<()> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(fail(1, format!("--level must lie in (0, 1) (got {})", args.level)));
    }
    let (data, hyper) = load(&args.model)?;
    let n = data.len();
    if n > MAX_DEFAULT_N && !args.force_large_n {
        return Err(fail(
            4,
            format!("series has {n} points; the dense segment table needs --force-large-n above {MAX_DEFAULT_N}"),
        ));
    }
    let kmax = args.model.kmax.unwrap_or(n.min(DEFAULT_KMAX));
    let prior = prior_for(&args.model, n, kmax)?;
    eprintln!(
        "analyze: n={n} kmax={kmax} model={} prior={}",
        model_name(args.model.model),
        args.model.prior.name()
    );

    let analysis = Analysis::new(data, hyper, prior)?;
    let report = analysis.report()?;
    let summaries = (1..=kmax)
        .map(|k| analysis.summary(k, args.level))
        .collect::<exactseg::Result<Vec<PosteriorSummary>>>()?;
    let selected = report.k_icl;

    create_dir(&args.out)?;
    let meta = AnalysisMeta {
        n,
        model: model_name(args.model.model),
        hyper,
        prior: args.model.prior.name(),
        level: args.level,
    };
    let path = write_analysis(&args.out, &meta, &report, &summaries, selected)?;
    eprintln!(
        "analyze: K(ICL)={} K(BIC)={} K(BIC m)={}; report at {}",
        report.k_icl,
        report.k_bic,
        report.k_bic_m,
        path.display()
    );
    Ok(())
}

fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let defaults = SimDesign::default();
    let design = SimDesign {
        lambdas: args.lambda_grid.clone().unwrap_or(defaults.lambdas),
        hypers: args.alpha.map_or(defaults.hypers, |a| vec![a]),
        replicates: args.replicates,
        kmax: args.kmax,
        seed: args.seed,
        ..SimDesign::default()
    };
    eprintln!(
        "simulate: seed={} replicates={} lambdas={:?} alpha=beta in {:?}",
        design.seed, design.replicates, design.lambdas, design.hypers
    );
    let mut res = run_recovery_experiment(&design, design.replicates)?;
    let kl = run_kl_experiment(
        &design,
        &design.lambdas,
        design.kmax,
        design.replicates,
        args.alpha.unwrap_or(1.0),
    )?;
    res.kl = kl.kl;
    create_dir(&args.out)?;
    let (rec, kl) = write_experiment(&args.out, &res)?;
    eprintln!("simulate: wrote {} and {}", rec.display(), kl.display());
    Ok(())
}

fn oracle_check(args: &ModelArgs) -> CliResult<()> {
    let (data, hyper) = load(args)?;
    let n = data.len();
    if n > ENUMERATION_LIMIT {
        return Err(SegError::TooLarge {
            n,
            limit: ENUMERATION_LIMIT,
        }
        .into());
    }
    let prior = prior_for(args, n, args.kmax.unwrap_or(n))?;
    let dev = check_against_engine(&data, &hyper, &prior)?;
    let passed = dev.passes(ORACLE_TOL);

    #[derive(serde::Serialize)]
    struct Verdict<'a> {
        n: usize,
        tolerance: f64,
        max_deviation: f64,
        passed: bool,
        detail: &'a exactseg::oracle::OracleDeviation,
    }
    let verdict = Verdict {
        n,
        tolerance: ORACLE_TOL,
        max_deviation: dev.max_deviation(),
        passed,
        detail: &dev,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&verdict).context("cannot serialize verdict")?
    );
    if !passed {
        return Err(fail(
            1,
            format!("engine deviates from enumeration by {:e}", dev.max_deviation()),
        ));
    }
    eprintln!("oracle-check: max deviation {:e} < {ORACLE_TOL:e}", dev.max_deviation());
    Ok(())
}
