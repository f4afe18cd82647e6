//! `bgsa`: Bayesian gene set analysis from the command line.
//!
//! Subcommands: `fit` (run the sampler on an expression matrix and GMT
//! file), `baseline` (permutation-tested set statistics), `simulate`
//! (write synthetic datasets with ground truth), `benchmark` (ROC/AUC
//! comparison over simulation scenarios) and `demo-prior` (the prior
//! correlation demonstration).
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid usage or input.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use bgsa_core::io::{
    self, files, BaselineSettings, BenchmarkSettings, DemoSettings, RunConfig, RunMetadata,
};
use bgsa_core::{
    gen_prior_correlation_demo, generate, permutation_pvalues, run_benchmark, run_chain,
    summarize, validate_and_bind, BenchmarkConfig, McmcConfig, MethodSpec, ModelVariant,
    PermutationScheme, Scenario, SetStatistic,
};

#[derive(Parser)]
#[command(
    name = "bgsa",
    version,
    about = "Bayesian gene set analysis: hierarchical Gibbs/slice sampler with frequentist \
             baselines, simulation scenarios, and ROC/AUC benchmarking"
)]
struct Cli {
    /// Worker threads for permutations and benchmark cells; overrides the
    /// BGSA_THREADS environment variable (default 1).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sampler on an expression matrix and gene set collection.
    Fit(FitArgs),
    /// Score gene sets with a permutation-tested frequentist statistic.
    Baseline(BaselineArgs),
    /// Generate a synthetic dataset with ground truth files.
    Simulate(SimulateArgs),
    /// Compare methods by mean ROC AUC over replicated scenarios.
    Benchmark(BenchmarkArgs),
    /// Sample the hierarchical prior to demonstrate within-set correlation.
    DemoPrior(DemoPriorArgs),
}

#[derive(Args)]
struct InputFiles {
    /// Expression matrix TSV: header `gene_id<TAB>sample...`, one row per gene.
    #[arg(long)]
    matrix: PathBuf,
    /// Two-column TSV `sample_id<TAB>{0|1}`; 1 marks the treatment class.
    #[arg(long)]
    labels: PathBuf,
    /// Gene sets in GMT format: `name<TAB>description<TAB>gene...`.
    #[arg(long)]
    gmt: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    inputs: InputFiles,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Model variant: `mixture` reports P(v=0|D); `simple` ranks by E[tau^2|D].
    #[arg(long, default_value = "mixture")]
    variant: ModelVariant,
    /// Total MCMC iterations.
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    /// Iterations discarded before summarization.
    #[arg(long, default_value_t = 500)]
    burnin: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Sets with P(v=0|D) at or below this are flagged significant.
    #[arg(long, default_value_t = 0.1)]
    cutoff: f64,
    /// Estimate P(v=0|D) from the Bernoulli probabilities instead of
    /// indicator frequencies.
    #[arg(long)]
    rao_blackwell: bool,
    /// Hold nu fixed instead of sampling it.
    #[arg(long)]
    fix_nu: Option<f64>,
    /// Hold phi0^2 fixed instead of sampling it.
    #[arg(long)]
    fix_phi0: Option<f64>,
    /// Hold phi1^2 fixed instead of sampling it.
    #[arg(long)]
    fix_phi1: Option<f64>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    inputs: InputFiles,
    #[arg(long)]
    out: PathBuf,
    /// Set statistic: maxmean, mean-z, mean-abs-z or ks.
    #[arg(long)]
    method: SetStatistic,
    /// Number of Monte Carlo label permutations.
    #[arg(long, default_value_t = 1000)]
    perms: usize,
    /// Enumerate all distinct class assignments instead (n <= 12 only).
    #[arg(long)]
    exhaustive: bool,
    /// Center and scale statistics by their moments under random gene
    /// reassignment before comparing.
    #[arg(long)]
    restandardize: bool,
    /// Random gene subsets per set size for restandardization.
    #[arg(long, default_value_t = 200)]
    randomizations: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    /// illustrative, all-shifted, or sim1..sim6.
    #[arg(long)]
    scenario: Scenario,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Treatment shift for the illustrative scenario (default 1).
    #[arg(long)]
    shift: Option<f64>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Comma-separated scenarios (default sim1,sim2; sim1..sim6 with --full-scale).
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<Scenario>>,
    /// Comma-separated methods: bgsa, bgsa-simple, maxmean, maxmean-raw,
    /// mean-z, mean-abs-z, ks.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "bgsa,maxmean,mean-z,mean-abs-z,ks"
    )]
    methods: Vec<MethodSpec>,
    /// Datasets generated per scenario (default 20; 100 with --full-scale).
    #[arg(long)]
    replicates: Option<usize>,
    /// MCMC iterations per chain (default 2000; 4000 with --full-scale).
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 500)]
    burnin: usize,
    /// Label permutations per baseline method.
    #[arg(long, default_value_t = 1000)]
    perms: usize,
    /// Random gene subsets per set size for restandardized maxmean.
    #[arg(long, default_value_t = 100)]
    randomizations: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Reproduce the full-size comparison: 100 replicates of sim1..sim6
    /// at 4000 iterations. Long-running.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Args)]
struct DemoPriorArgs {
    /// Number of repetitions (correlation samples).
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Hierarchy draws behind each correlation.
    #[arg(long, default_value_t = 100)]
    draws: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Error that should exit with the usage code.
#[derive(Debug)]
struct UsageError(anyhow::Error);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for UsageError {}

/// Marks an error as invalid input rather than a runtime failure.
fn usage<E: Into<anyhow::Error>>(err: E) -> anyhow::Error {
    UsageError(err.into()).into()
}

fn exit_code_for(err: &anyhow::Error) -> ExitCode {
    if err.downcast_ref::<UsageError>().is_some() {
        return ExitCode::from(2);
    }
    if let Some(e) = err.downcast_ref::<bgsa_core::Error>() {
        if e.is_validation() {
            return ExitCode::from(2);
        }
    }
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = resolve_threads(cli.threads);
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
    {
        eprintln!("error: failed to configure {threads} worker threads: {e}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args, threads),
        Command::Baseline(args) => cmd_baseline(args, threads),
        Command::Simulate(args) => cmd_simulate(args, threads),
        Command::Benchmark(args) => cmd_benchmark(args, threads),
        Command::DemoPrior(args) => cmd_demo_prior(args, threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}

fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("BGSA_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(1)
    .max(1)
}

fn prepare_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| {
        usage(anyhow::anyhow!(
            "cannot create output directory {}: {e}",
            path.display()
        ))
    })
}

fn load_inputs(
    inputs: &InputFiles,
) -> Result<(
    bgsa_core::ExpressionDataset,
    bgsa_core::GeneSetCollection,
    io::GmtWarnings,
)> {
    let data = io::read_matrix(&inputs.matrix, &inputs.labels).map_err(usage)?;
    let (sets, warnings) = io::parse_gmt(&inputs.gmt, &data).map_err(usage)?;
    if warnings.genes_missing > 0 || warnings.sets_dropped > 0 {
        eprintln!(
            "warning: dropped {} unknown gene references and {} undersized sets \
             ({} duplicate gene entries collapsed)",
            warnings.genes_missing, warnings.sets_dropped, warnings.genes_deduplicated
        );
    }
    Ok((data, sets, warnings))
}

fn path_string(p: &Path) -> Option<String> {
    Some(p.display().to_string())
}

fn cmd_fit(args: FitArgs, threads: usize) -> Result<()> {
    if !(args.cutoff > 0.0 && args.cutoff < 1.0) {
        return Err(usage(anyhow::anyhow!(
            "--cutoff must lie strictly inside (0, 1), got {}",
            args.cutoff
        )));
    }
    let mut mcmc =
        McmcConfig::new(args.iters, args.burnin, args.seed, args.variant).map_err(usage)?;
    mcmc.rao_blackwell = args.rao_blackwell;
    mcmc.fixed_nu = args.fix_nu;
    mcmc.fixed_phi0_sq = args.fix_phi0;
    mcmc.fixed_phi1_sq = args.fix_phi1;
    mcmc.validate().map_err(usage)?;

    prepare_out_dir(&args.out)?;
    let (data, sets, warnings) = load_inputs(&args.inputs)?;
    let problem = validate_and_bind(data, sets).map_err(usage)?;

    let trace = run_chain(&problem, &mcmc)?;
    let summary = summarize(&trace, &problem)?;

    io::write_set_table(&summary, args.cutoff, &args.out.join(files::SET_TABLE))?;
    io::write_gene_table(&summary, &args.out.join(files::GENE_TABLE))?;

    let mut config = RunConfig::new("fit", args.seed, threads);
    config.matrix = path_string(&args.inputs.matrix);
    config.labels = path_string(&args.inputs.labels);
    config.gmt = path_string(&args.inputs.gmt);
    config.out = path_string(&args.out);
    config.mcmc = Some(mcmc.clone());
    config.cutoff = Some(args.cutoff);
    let mut meta = RunMetadata::new(config);
    meta.diagnostics = Some(trace.diagnostics);
    meta.gmt_warnings = Some(warnings);
    meta.variant = Some(args.variant);
    io::write_run_metadata(&meta, &args.out.join(files::METADATA))?;

    let flagged = summary
        .sets
        .iter()
        .filter(|s| s.prob_null.is_some_and(|p| p <= args.cutoff))
        .count();
    match args.variant {
        ModelVariant::Mixture => println!(
            "fit complete: {flagged} of {} sets flagged at P(v=0|D) <= {}",
            summary.sets.len(),
            args.cutoff
        ),
        ModelVariant::Simple => println!(
            "fit complete: {} sets ranked by E[tau^2|D]",
            summary.sets.len()
        ),
    }
    println!("results written to {}", args.out.display());
    Ok(())
}

fn cmd_baseline(args: BaselineArgs, threads: usize) -> Result<()> {
    prepare_out_dir(&args.out)?;
    let (data, sets, warnings) = load_inputs(&args.inputs)?;
    let scheme = if args.exhaustive {
        PermutationScheme::Exhaustive
    } else {
        PermutationScheme::MonteCarlo {
            n_permutations: args.perms,
        }
    };
    let result = permutation_pvalues(
        &data,
        &sets,
        args.method,
        scheme,
        args.restandardize.then_some(args.randomizations),
        args.seed,
    )?;
    io::write_baseline_table(&result, &args.out.join(files::BASELINE_TABLE))?;

    let mut config = RunConfig::new("baseline", args.seed, threads);
    config.matrix = path_string(&args.inputs.matrix);
    config.labels = path_string(&args.inputs.labels);
    config.gmt = path_string(&args.inputs.gmt);
    config.out = path_string(&args.out);
    config.baseline = Some(BaselineSettings {
        method: args.method,
        n_permutations: result.n_permutations,
        exhaustive: result.exhaustive,
        restandardize: args.restandardize,
        n_randomizations: result.n_randomizations,
    });
    let mut meta = RunMetadata::new(config);
    meta.gmt_warnings = Some(warnings);
    io::write_run_metadata(&meta, &args.out.join(files::METADATA))?;

    let best = result
        .perm_pvalue
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.total_cmp(b))
        .expect("at least one set");
    println!(
        "baseline {} complete over {} permutations{}: smallest p-value {} ({})",
        args.method.label(),
        result.n_permutations,
        if result.exhaustive { " (exhaustive)" } else { "" },
        best.1,
        result.set_names[best.0]
    );
    println!("results written to {}", args.out.display());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs, threads: usize) -> Result<()> {
    if args.shift.is_some() && args.scenario != Scenario::Illustrative {
        return Err(usage(anyhow::anyhow!(
            "--shift only applies to the illustrative scenario"
        )));
    }
    prepare_out_dir(&args.out)?;
    let (data, sets, truth) = match args.scenario {
        Scenario::Illustrative => bgsa_core::gen_illustrative(args.shift.unwrap_or(1.0), args.seed),
        _ => generate(args.scenario, args.seed).map_err(usage)?,
    };
    io::write_matrix(
        &data,
        &args.out.join(files::MATRIX),
        &args.out.join(files::LABELS),
    )?;
    io::write_gmt(&sets, &data, &args.out.join(files::GMT))?;
    io::write_truth(&truth, &args.out.join(files::TRUTH))?;

    let mut config = RunConfig::new("simulate", args.seed, threads);
    config.out = path_string(&args.out);
    config.scenario = Some(args.scenario);
    config.shift = args.shift;
    io::write_run_metadata(&RunMetadata::new(config), &args.out.join(files::METADATA))?;

    println!(
        "wrote {} dataset ({} genes x {} samples, {} sets) to {}",
        args.scenario.label(),
        data.n_genes(),
        data.n_samples(),
        sets.n_sets(),
        args.out.display()
    );
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs, threads: usize) -> Result<()> {
    let scenarios = args.scenarios.clone().unwrap_or_else(|| {
        if args.full_scale {
            Scenario::ALL_SIMS.to_vec()
        } else {
            vec![Scenario::Sim1, Scenario::Sim2]
        }
    });
    let n_replicates = args
        .replicates
        .unwrap_or(if args.full_scale { 100 } else { 20 });
    let iters = args.iters.unwrap_or(if args.full_scale { 4000 } else { 2000 });

    let mcmc =
        McmcConfig::new(iters, args.burnin, args.seed, ModelVariant::Mixture).map_err(usage)?;
    let cfg = BenchmarkConfig {
        scenarios: scenarios.clone(),
        methods: args.methods.clone(),
        n_replicates,
        mcmc: mcmc.clone(),
        n_permutations: args.perms,
        n_randomizations: args.randomizations,
        seed: args.seed,
    };
    prepare_out_dir(&args.out)?;
    let report = run_benchmark(&cfg)?;

    io::write_benchmark_table(&report, &args.out.join(files::BENCHMARK_TABLE))?;
    io::write_benchmark_detail(&report, &args.out.join(files::BENCHMARK_DETAIL))?;

    let mut config = RunConfig::new("benchmark", args.seed, threads);
    config.out = path_string(&args.out);
    config.mcmc = Some(mcmc);
    config.benchmark = Some(BenchmarkSettings {
        scenarios,
        methods: args.methods,
        n_replicates,
        n_permutations: args.perms,
        n_randomizations: args.randomizations,
    });
    io::write_run_metadata(&RunMetadata::new(config), &args.out.join(files::METADATA))?;

    for cell in &report.cells {
        println!(
            "{}\t{}\tmean AUC {:.1}% (se {:.2})",
            cell.scenario.label(),
            cell.method,
            cell.mean_auc_pct,
            cell.se_pct
        );
    }
    println!("results written to {}", args.out.display());
    Ok(())
}

fn cmd_demo_prior(args: DemoPriorArgs, threads: usize) -> Result<()> {
    if args.reps < 2 || args.draws < 3 {
        return Err(usage(anyhow::anyhow!(
            "demo-prior needs at least 2 reps and 3 draws"
        )));
    }
    prepare_out_dir(&args.out)?;
    let demo = gen_prior_correlation_demo(args.reps, args.draws, args.seed);
    io::write_prior_demo(&demo, &args.out.join(files::PRIOR_DEMO))?;

    let mut config = RunConfig::new("demo-prior", args.seed, threads);
    config.out = path_string(&args.out);
    config.demo = Some(DemoSettings {
        n_reps: args.reps,
        n_draws: args.draws,
    });
    io::write_run_metadata(&RunMetadata::new(config), &args.out.join(files::METADATA))?;

    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    println!(
        "prior correlation demo over {} reps: mean r_within {:.3}, mean r_between {:.3}",
        args.reps,
        mean(&demo.r_within),
        mean(&demo.r_between)
    );
    println!("results written to {}", args.out.display());
    Ok(())
}
