//! Command-line driver: seeded experiment execution and persistence of
//! traces, pulses, and evaluation artifacts.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use agrape::artifacts::{
    read_pulse_json, write_cdf_csv, write_landscape_csv, write_pulse_json, write_summary_csv,
    RunManifest, SummaryRow, TraceWriter,
};
use agrape::config::{Algorithm, AlgorithmParams, ExperimentConfig, ProblemSpec};
use agrape::error::{Error, Result};
use agrape::eval::{confidence_at, estimate_worst_case, landscape, sample_cdf};
use agrape::model::UncertaintyVector;
use agrape::optim::{
    run_best_response, run_better_response, run_bgrape, run_nominal, run_relaxed,
    OptimizationResult, RoundRecord, Termination,
};
use agrape::rng;

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

#[cfg(unix)]
extern "C" fn on_sigint(_: libc::c_int) {
    INTERRUPTED.store(true, Ordering::SeqCst);
}

#[cfg(unix)]
fn install_sigint_handler() {
    unsafe {
        libc::signal(libc::SIGINT, on_sigint as *const () as libc::sighandler_t);
    }
}

#[cfg(not(unix))]
fn install_sigint_handler() {}

fn interrupted() -> bool {
    INTERRUPTED.load(Ordering::SeqCst)
}

#[derive(Parser)]
#[command(name = "agrape", version, about = "Robust quantum gate synthesis and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a synthesis algorithm and write trace.csv, pulse.json, manifest.json
    Synthesize(SynthesizeArgs),
    /// Monte Carlo robustness evaluation of a stored pulse (cdf.csv)
    Evaluate(EvaluateArgs),
    /// 2-D infidelity landscape over two uncertainty components (landscape.csv)
    Landscape(LandscapeArgs),
    /// One synthesis run per parameter value, with summary.csv
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SynthesizeArgs {
    /// Declarative config file (JSON); flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem preset name (two_qubit_cnot | three_qubit_toffoli)
    #[arg(long)]
    problem: Option<String>,
    /// best_response | better_response | relaxed_best | relaxed_better | bgrape | nominal_grape
    #[arg(long)]
    algorithm: Option<String>,
    /// Memory size for best-response modes
    #[arg(long)]
    s: Option<usize>,
    /// Batch size M for better-response
    #[arg(long = "M")]
    batch: Option<usize>,
    /// Retention ratio r
    #[arg(long)]
    r: Option<f64>,
    /// Inner fixed-step iterations n (relaxed modes)
    #[arg(long)]
    n: Option<usize>,
    /// Samples per round m (relaxed modes)
    #[arg(long = "m_samples")]
    m_samples: Option<usize>,
    /// Learning rate α
    #[arg(long)]
    alpha: Option<f64>,
    /// Momentum weight λ (bgrape)
    #[arg(long)]
    lambda: Option<f64>,
    /// Mini-batch size (bgrape)
    #[arg(long = "n_mb")]
    n_mb: Option<usize>,
    /// Outer rounds
    #[arg(long)]
    rounds: Option<usize>,
    /// Iterations (bgrape)
    #[arg(long)]
    iterations: Option<usize>,
    /// Stop once the worst-case estimate falls below this
    #[arg(long = "target_infidelity")]
    target_infidelity: Option<f64>,
    /// Initial pulse amplitude, rad/μs
    #[arg(long = "init_amplitude")]
    init_amplitude: Option<f64>,
    /// Master seed (mandatory; no wall-clock seeding)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "run")]
    out: PathBuf,
    /// Record wall time in the trace (makes trace.csv non-reproducible)
    #[arg(long)]
    timings: bool,
    /// Samples for the post-run worst-case estimate in the manifest
    #[arg(long = "eval_samples", default_value_t = 2000)]
    eval_samples: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    /// pulse.json written by synthesize
    #[arg(long)]
    pulse: PathBuf,
    #[arg(long)]
    problem: String,
    /// Number of uniform uncertainty samples
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "eval")]
    out: PathBuf,
}

#[derive(Args)]
struct LandscapeArgs {
    #[arg(long)]
    pulse: PathBuf,
    #[arg(long)]
    problem: String,
    /// Grid points per axis (endpoints included)
    #[arg(long, default_value_t = 41)]
    resolution: usize,
    /// The two uncertainty components to scan
    #[arg(long, num_args = 2, default_values_t = [0, 1])]
    components: Vec<usize>,
    /// Fixed values for the remaining components (default all zero)
    #[arg(long, num_args = 0.., value_delimiter = ',')]
    fixed: Option<Vec<f64>>,
    #[arg(long, default_value = "landscape")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep config file (JSON): { "base": <run config>, "parameter": ..., "values": [...] }
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "sweep")]
    out: PathBuf,
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    env_logger::init();
    install_sigint_handler();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synthesize(args) => cmd_synthesize(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Landscape(args) => cmd_landscape(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn build_experiment(args: &SynthesizeArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => {
            let problem = args
                .problem
                .clone()
                .ok_or_else(|| Error::InvalidConfig("--problem is required".into()))?;
            let algorithm = args
                .algorithm
                .as_deref()
                .ok_or_else(|| Error::InvalidConfig("--algorithm is required".into()))?;
            let seed = args
                .seed
                .ok_or_else(|| Error::InvalidConfig("--seed is required".into()))?;
            ExperimentConfig {
                problem: ProblemSpec::Preset(problem),
                algorithm: Algorithm::parse(algorithm)?,
                params: AlgorithmParams::default(),
                seed,
            }
        }
    };
    // flag overrides on top of a config file
    if let Some(p) = &args.problem {
        cfg.problem = ProblemSpec::Preset(p.clone());
    }
    if let Some(a) = &args.algorithm {
        cfg.algorithm = Algorithm::parse(a)?;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    let p = &mut cfg.params;
    p.s = args.s.or(p.s);
    p.batch = args.batch.or(p.batch);
    p.r = args.r.or(p.r);
    p.n = args.n.or(p.n);
    p.m_samples = args.m_samples.or(p.m_samples);
    p.alpha = args.alpha.or(p.alpha);
    p.lambda = args.lambda.or(p.lambda);
    p.n_mb = args.n_mb.or(p.n_mb);
    p.rounds = args.rounds.or(p.rounds);
    p.iterations = args.iterations.or(p.iterations);
    p.target_infidelity = args.target_infidelity.or(p.target_infidelity);
    p.init_amplitude = args.init_amplitude.or(p.init_amplitude);
    Ok(cfg)
}

/// Seed tag for the post-run worst-case estimate, distinct from the
/// training-side tags.
const TAG_MANIFEST_EVAL: u64 = 100;

fn run_algorithm(
    cfg: &ExperimentConfig,
    problem: &agrape::model::GateSynthesisProblem,
    trace: &mut TraceWriter,
) -> Result<OptimizationResult> {
    let mut observer = |rec: &RoundRecord| trace.write_row(rec).is_ok() && !interrupted();
    match cfg.algorithm {
        Algorithm::BestResponse => run_best_response(
            problem,
            &cfg.agrape_config()?,
            &cfg.grape_config(),
            &cfg.ga_config(),
            &mut observer,
        ),
        Algorithm::BetterResponse => {
            run_better_response(problem, &cfg.agrape_config()?, &cfg.grape_config(), &mut observer)
        }
        Algorithm::RelaxedBest | Algorithm::RelaxedBetter => {
            run_relaxed(problem, &cfg.agrape_config()?, &mut observer)
        }
        Algorithm::Bgrape => run_bgrape(problem, &cfg.bgrape_config()?, cfg.seed, &mut observer),
        Algorithm::NominalGrape => run_nominal(
            problem,
            &cfg.grape_config(),
            cfg.seed,
            cfg.init_amplitude(),
            &mut observer,
        ),
    }
}

struct SynthOutcome {
    manifest: RunManifest,
    termination: Termination,
    final_l_max: Option<f64>,
    rounds: usize,
}

fn synthesize_into(
    cfg: &ExperimentConfig,
    out: &Path,
    timings: bool,
    eval_samples: usize,
) -> Result<SynthOutcome> {
    std::fs::create_dir_all(out)?;
    let started = Instant::now();
    let mut manifest = RunManifest::new(cfg.echo_json());
    let manifest_path = out.join("manifest.json");

    let problem = match cfg.problem.build() {
        Ok(p) => p,
        Err(e) => {
            manifest.status = "failed".to_string();
            manifest.termination = e.to_string();
            manifest.wall_time_s = started.elapsed().as_secs_f64();
            manifest.write(&manifest_path)?;
            return Err(e);
        }
    };

    let trace_path = out.join("trace.csv");
    let pulse_path = out.join("pulse.json");
    let mut trace = TraceWriter::create(&trace_path, timings)?;
    let result = match run_algorithm(cfg, &problem, &mut trace) {
        Ok(r) => r,
        Err(e) => {
            manifest.status = "failed".to_string();
            manifest.termination = e.to_string();
            manifest.wall_time_s = started.elapsed().as_secs_f64();
            manifest.write(&manifest_path)?;
            return Err(e);
        }
    };
    drop(trace);

    write_pulse_json(&pulse_path, &result.pulse)?;

    let worst = estimate_worst_case(
        &problem,
        &result.pulse,
        eval_samples,
        &mut rng::stream(cfg.seed, &[TAG_MANIFEST_EVAL]),
    )?;

    let term = result.termination;
    manifest.status = if term == Termination::Interrupted {
        "interrupted".to_string()
    } else {
        "completed".to_string()
    };
    manifest.termination = term.as_str().to_string();
    manifest.final_j_min = result.trace.last().map(|r| r.j_min);
    manifest.worst_case_estimate = Some(worst);
    manifest.l_max_semantics = Some(result.l_max_semantics.as_str().to_string());
    manifest.artifacts = vec![trace_path, pulse_path];
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.write(&manifest_path)?;
    Ok(SynthOutcome {
        manifest,
        termination: term,
        final_l_max: result.trace.last().map(|r| r.l_max_estimate),
        rounds: result.trace.len(),
    })
}

fn cmd_synthesize(args: SynthesizeArgs) -> Result<ExitCode> {
    let cfg = build_experiment(&args)?;
    let outcome = synthesize_into(&cfg, &args.out, args.timings, args.eval_samples)?;
    let manifest = &outcome.manifest;
    println!(
        "{}: termination={} final_j_min={} worst_case_estimate={}",
        manifest.status,
        manifest.termination,
        manifest.final_j_min.map_or("n/a".into(), |v| v.to_string()),
        manifest
            .worst_case_estimate
            .map_or("n/a".into(), |v| v.to_string()),
    );
    Ok(if outcome.termination == Termination::Interrupted {
        ExitCode::from(130)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<ExitCode> {
    let problem = agrape::model::preset(&args.problem)?;
    let pulse = read_pulse_json(&args.pulse)?;
    if pulse.channels() != problem.model.channels || pulse.slice_count() != problem.slice_count {
        return Err(Error::DimensionMismatch(format!(
            "pulse is {}x{} but the problem expects {}x{}",
            pulse.slice_count(),
            pulse.channels(),
            problem.slice_count,
            problem.model.channels
        )));
    }
    std::fs::create_dir_all(&args.out)?;
    let started = Instant::now();

    let cdf = sample_cdf(&problem, &pulse, args.n, &mut rng::stream(args.seed, &[0]))?;
    let cdf_path = args.out.join("cdf.csv");
    write_cdf_csv(&cdf_path, &cdf)?;

    for l0 in [1e-2, 1e-3, 1e-4] {
        println!("F({l0:e}) = {:.4}", confidence_at(&cdf, l0));
    }
    let worst = cdf.max();
    println!("worst-case estimate ({} samples) = {worst:e}", args.n);

    let mut manifest = RunManifest::new(serde_json::json!({
        "command": "evaluate",
        "problem": args.problem,
        "pulse": args.pulse,
        "n": args.n,
        "seed": args.seed,
    }));
    manifest.status = "completed".to_string();
    manifest.termination = "done".to_string();
    manifest.worst_case_estimate = Some(worst);
    manifest.artifacts = vec![cdf_path];
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.write(&args.out.join("manifest.json"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_landscape(args: LandscapeArgs) -> Result<ExitCode> {
    let problem = agrape::model::preset(&args.problem)?;
    if problem.uncertainty_dim() < 2 {
        return Err(Error::InvalidConfig(
            "landscape needs a problem with d ≥ 2 uncertainty components".into(),
        ));
    }
    let pulse = read_pulse_json(&args.pulse)?;
    let fixed = UncertaintyVector(
        args.fixed
            .clone()
            .unwrap_or_else(|| vec![0.0; problem.uncertainty_dim()]),
    );
    let grid = landscape(
        &problem,
        &pulse,
        (args.components[0], args.components[1]),
        args.resolution,
        &fixed,
    )?;
    std::fs::create_dir_all(&args.out)?;
    write_landscape_csv(&args.out.join("landscape.csv"), &grid)?;
    println!(
        "landscape max over {}x{} grid = {:e}",
        args.resolution,
        args.resolution,
        grid.max()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(serde::Deserialize)]
struct SweepConfig {
    base: ExperimentConfig,
    /// Name of the swept parameter (s | M | r | n | m_samples | alpha | lambda | n_mb | rounds | iterations)
    parameter: String,
    values: Vec<serde_json::Value>,
}

fn apply_sweep_value(
    cfg: &mut ExperimentConfig,
    parameter: &str,
    value: &serde_json::Value,
) -> Result<()> {
    let as_usize = || -> Result<usize> {
        value
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| Error::InvalidConfig(format!("parameter {parameter} needs an integer")))
    };
    let as_f64 = || -> Result<f64> {
        value
            .as_f64()
            .ok_or_else(|| Error::InvalidConfig(format!("parameter {parameter} needs a number")))
    };
    let p = &mut cfg.params;
    match parameter {
        "s" => p.s = Some(as_usize()?),
        "M" => p.batch = Some(as_usize()?),
        "r" => p.r = Some(as_f64()?),
        "n" => p.n = Some(as_usize()?),
        "m_samples" => p.m_samples = Some(as_usize()?),
        "alpha" => p.alpha = Some(as_f64()?),
        "lambda" => p.lambda = Some(as_f64()?),
        "n_mb" => p.n_mb = Some(as_usize()?),
        "rounds" => p.rounds = Some(as_usize()?),
        "iterations" => p.iterations = Some(as_usize()?),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown sweep parameter '{other}'"
            )))
        }
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let sweep: SweepConfig = serde_json::from_str(&std::fs::read_to_string(&args.config)?)?;
    std::fs::create_dir_all(&args.out)?;
    let master_seed = sweep.base.seed;
    let mut rows = Vec::new();
    for value in &sweep.values {
        let label = value.to_string();
        let mut cfg = sweep.base.clone();
        apply_sweep_value(&mut cfg, &sweep.parameter, value)?;
        // per-run seed from (master seed, parameter value): adding values
        // never perturbs existing runs
        cfg.seed = rng::derive_seed(master_seed, &[rng::hash_str(&format!(
            "{}={label}",
            sweep.parameter
        ))]);
        let run_dir = args.out.join(format!("{}_{}", sweep.parameter, label.replace('.', "p")));
        match synthesize_into(&cfg, &run_dir, args.timings, 2000) {
            Ok(outcome) => rows.push(SummaryRow {
                param: label,
                l_max_final: outcome.final_l_max.unwrap_or(f64::NAN),
                worst_case_final: outcome.manifest.worst_case_estimate.unwrap_or(f64::NAN),
                rounds: outcome.rounds,
            }),
            Err(e) => {
                eprintln!("sweep value {label} failed: {e}");
                rows.push(SummaryRow {
                    param: label,
                    l_max_final: f64::NAN,
                    worst_case_final: f64::NAN,
                    rounds: 0,
                });
            }
        }
    }
    write_summary_csv(&args.out.join("summary.csv"), &rows)?;
    println!("sweep complete: {} runs", rows.len());
    Ok(ExitCode::SUCCESS)
}
