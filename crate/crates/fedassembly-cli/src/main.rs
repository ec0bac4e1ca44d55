//! Command-line driver: generate and validate instances, run the selection
//! algorithms, verify guarantees by Monte Carlo, optimize distributions for
//! general DAGs, and sweep the random-instance grid.

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fedassembly::instance::{
    generate_instance_with, generate_laminar_instance, generate_semilaminar_instance,
    Classification, GeneratorConfig, Instance,
};
use fedassembly::optimizer::{self, OptimizerError};
use fedassembly::selection;
use fedassembly::verifier::{self, EdgeSlack, McConfig};
use fedassembly::io;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

/// Exit codes per failure class.
const EXIT_INVALID_INSTANCE: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_NO_CONVERGENCE: u8 = 4;

#[derive(Parser)]
#[command(name = "fedassembly", version, about = "Federated assembly selection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance as JSON.
    Generate(GenerateArgs),
    /// Validate an instance file.
    Validate(ValidateArgs),
    /// Select one assembly assignment.
    Select(SelectArgs),
    /// Monte Carlo verification of the representation guarantees.
    Verify(VerifyArgs),
    /// Column-generation optimization of a randomized assignment.
    Optimize(OptimizeArgs),
    /// Sweep the random-instance grid through the optimizer.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Shape {
    General,
    Laminar,
    Semilaminar,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    classes: usize,
    #[arg(long)]
    federations: usize,
    #[arg(long)]
    seed: u64,
    /// Mean of the exponential class-size distribution.
    #[arg(long, default_value_t = 100.0)]
    mean_class_size: f64,
    #[arg(long, value_enum, default_value_t = Shape::General)]
    shape: Shape,
    /// Assembly size the instance should comfortably support
    /// (laminar/semilaminar shapes only).
    #[arg(long, default_value_t = 12)]
    n: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Also flag nodes whose population cannot seat this assembly size.
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Priority,
    Laminar,
    Semilaminar,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    seed: u64,
    /// Restart budget for the priority algorithm.
    #[arg(long, default_value_t = 10_000)]
    max_attempts: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifySelector {
    Priority,
    Laminar,
    Semilaminar,
    /// Sample from a randomized assignment file (see --randomized).
    Randomized,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    algo: VerifySelector,
    /// Randomized assignment JSON, required with --algo randomized.
    #[arg(long)]
    randomized: Option<PathBuf>,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 4.0)]
    sigma: f64,
    #[arg(long, default_value_t = 10_000)]
    max_attempts: u64,
    /// Report JSON path; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Optional flat CSV of the per-statistic rows.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    n: u64,
    /// Every ex ante deviation must fall below tolerance * n.
    #[arg(long, default_value_t = optimizer::DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long, default_value_t = optimizer::DEFAULT_MAX_ITERATIONS)]
    max_iters: usize,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Iteration trace CSV (iteration, support_size, loss, wall_time_ms).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Comma-separated class/federation counts, e.g. 2,5.
    #[arg(long, default_value = "2,5")]
    grid: String,
    #[arg(long, default_value = "2,5")]
    n_values: String,
    /// Instances per (classes, federations, n) cell.
    #[arg(long, default_value_t = 25)]
    per_cell: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = optimizer::DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long, default_value_t = optimizer::DEFAULT_MAX_ITERATIONS)]
    max_iters: usize,
    /// Worker threads; defaults to FEDASSEMBLY_JOBS or the CPU count.
    #[arg(long)]
    jobs: Option<usize>,
    /// Abort on the first non-converging instance instead of recording it.
    #[arg(long)]
    fail_fast: bool,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Validate(args) => validate(args),
        Command::Select(args) => select(args),
        Command::Verify(args) => verify(args),
        Command::Optimize(args) => optimize(args),
        Command::Experiment(args) => experiment(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn write_output(path: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, bytes)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(bytes).context("writing stdout")?;
            Ok(())
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, (u8, anyhow::Error)> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| (1, e))?;
    io::parse_instance(&bytes)
        .map_err(|e| (EXIT_INVALID_INSTANCE, anyhow!("invalid instance: {e}")))
}

fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let instance = match args.shape {
        Shape::General => generate_instance_with(
            &GeneratorConfig { mean_class_size: args.mean_class_size, min_class_size: 1 },
            args.classes,
            args.federations,
            args.seed,
        ),
        Shape::Laminar => generate_laminar_instance(args.classes, args.n, 10 * args.n, args.seed),
        Shape::Semilaminar => generate_semilaminar_instance(args.n, args.seed),
    };
    write_output(&args.output, &io::serialize_instance(&instance))?;
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode> {
    let bytes = std::fs::read(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let raw = match io::parse_raw_instance(&bytes) {
        Ok(raw) => raw,
        Err(err) => {
            eprintln!("parse error: {err}");
            return Ok(ExitCode::from(EXIT_INVALID_INSTANCE));
        }
    };
    let report = raw.validate(args.n);
    println!("{}", serde_json::to_string_pretty(&report)?);
    if report.is_valid() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_INVALID_INSTANCE))
    }
}

fn select(args: SelectArgs) -> Result<ExitCode> {
    let instance = match load_instance(&args.instance) {
        Ok(i) => i,
        Err((code, err)) => {
            eprintln!("error: {err:#}");
            return Ok(ExitCode::from(code));
        }
    };
    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
    let selected = match args.algo {
        Algo::Priority => {
            selection::select_priority_with_restart(&instance, args.n, &mut rng, args.max_attempts)
        }
        Algo::Laminar => selection::select_laminar(&instance, args.n, &mut rng),
        Algo::Semilaminar => selection::select_semilaminar(&instance, args.n, &mut rng),
    };
    match selected {
        Ok(assignment) => {
            write_output(&args.output, &io::serialize_assignment(&instance, &assignment))?;
            Ok(ExitCode::SUCCESS)
        }
        Err(err) => {
            eprintln!("refused: {err}");
            Ok(ExitCode::from(EXIT_PRECONDITION))
        }
    }
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let instance = match load_instance(&args.instance) {
        Ok(i) => i,
        Err((code, err)) => {
            eprintln!("error: {err:#}");
            return Ok(ExitCode::from(code));
        }
    };
    // the priority algorithm does not promise overlap floors, and the
    // semi-laminar one is allowed one seat of slack on region-tree edges
    let slack = match (instance.classify(), args.algo) {
        (_, VerifySelector::Priority) => EdgeSlack::ignore_overlaps(),
        (Classification::SemiLaminar(structure), VerifySelector::Semilaminar) => {
            EdgeSlack::semilaminar(&instance, &structure)
        }
        _ => EdgeSlack::none(),
    };
    let config = McConfig { sigma: args.sigma, slack, ..McConfig::default() };
    let randomized = match args.algo {
        VerifySelector::Randomized => {
            let path = args
                .randomized
                .as_ref()
                .ok_or_else(|| anyhow!("--algo randomized requires --randomized FILE"))?;
            let bytes = std::fs::read(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Some(io::parse_randomized(&instance, &bytes).map_err(|e| anyhow!("{e}"))?)
        }
        _ => None,
    };
    let n = args.n;
    let max_attempts = args.max_attempts;
    let report = verifier::monte_carlo_ex_ante_with(
        &config,
        |rng| match args.algo {
            VerifySelector::Priority => {
                selection::select_priority_with_restart(&instance, n, rng, max_attempts)
                    .map_err(|e| e.to_string())
            }
            VerifySelector::Laminar => {
                selection::select_laminar(&instance, n, rng).map_err(|e| e.to_string())
            }
            VerifySelector::Semilaminar => {
                selection::select_semilaminar(&instance, n, rng).map_err(|e| e.to_string())
            }
            VerifySelector::Randomized => Ok(optimizer::sample_from_randomized(
                randomized.as_ref().expect("loaded above"),
                &instance,
                rng,
            )),
        },
        &instance,
        args.n,
        args.trials,
        args.seed,
    );
    let json = serde_json::to_vec_pretty(&report)?;
    write_output(&args.report, &json)?;
    if args.report.is_some() {
        println!(
            "verify: {} trials, {} failures, {} ex post violations, bands {}",
            report.trials,
            report.selector_failures,
            report.ex_post_violations.len(),
            if report.meets_guarantees() { "ok" } else { "VIOLATED" }
        );
    }
    if let Some(csv) = &args.csv {
        std::fs::write(csv, report.to_csv())
            .with_context(|| format!("writing {}", csv.display()))?;
    }
    let statistics_ok = match args.algo {
        // priority and laminar selection realize the population-share overlap
        // in expectation; the semi-laminar aggregator edges and optimizer
        // output only promise the quota floors
        VerifySelector::Priority | VerifySelector::Laminar => report.all_within_bands(),
        VerifySelector::Semilaminar | VerifySelector::Randomized => report.meets_guarantees(),
    };
    if report.clean() && statistics_ok {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_NO_CONVERGENCE))
    }
}

fn optimize(args: OptimizeArgs) -> Result<ExitCode> {
    let instance = match load_instance(&args.instance) {
        Ok(i) => i,
        Err((code, err)) => {
            eprintln!("error: {err:#}");
            return Ok(ExitCode::from(code));
        }
    };
    let outcome = optimizer::column_generation(&instance, args.n, args.tolerance, args.max_iters);
    let (randomized, trace) = match outcome {
        Ok(out) => {
            eprintln!(
                "converged: loss {:.3e}, max deviation {:.3e}, support {}",
                out.loss,
                out.max_deviation,
                out.randomized.support.len()
            );
            (Some(out.randomized), out.trace)
        }
        Err(OptimizerError::IterationCap { loss, trace }) => {
            eprintln!("did not converge: iteration cap at loss {loss:.3e}");
            (None, trace)
        }
        Err(OptimizerError::Stationary { loss, trace }) => {
            eprintln!("did not converge: stationary at loss {loss:.3e}");
            (None, trace)
        }
        Err(OptimizerError::SearchBudget { expansions }) => {
            eprintln!("did not converge: best-response budget ({expansions} expansions)");
            (None, Vec::new())
        }
        Err(err) => return Err(anyhow!("optimize failed: {err}")),
    };
    if let Some(path) = &args.trace {
        let mut csv = String::from("iteration,support_size,loss,wall_time_ms\n");
        for row in &trace {
            csv.push_str(&format!(
                "{},{},{:.9e},{:.3}\n",
                row.iteration, row.support_size, row.loss, row.wall_ms
            ));
        }
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    match randomized {
        Some(randomized) => {
            write_output(&args.output, &io::serialize_randomized(&instance, &randomized))?;
            Ok(ExitCode::SUCCESS)
        }
        None => Ok(ExitCode::from(EXIT_NO_CONVERGENCE)),
    }
}

fn parse_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|e| anyhow!("bad list entry {x:?}: {e}")))
        .collect()
}

struct ExperimentRow {
    classes: u64,
    federations: u64,
    n: u64,
    instance_id: usize,
    seed: u64,
    terminated: bool,
    wall_time_ms: f64,
    support_size: usize,
    loss: f64,
    iterations: usize,
}

fn experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let grid = parse_list(&args.grid)?;
    let n_values = parse_list(&args.n_values)?;
    let jobs = args
        .jobs
        .or_else(|| std::env::var("FEDASSEMBLY_JOBS").ok().and_then(|j| j.parse().ok()))
        .unwrap_or_else(|| std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1))
        .max(1);

    // work items: one per (classes, federations, n, instance)
    let mut items = Vec::new();
    let mut id = 0usize;
    for &classes in &grid {
        for &federations in &grid {
            for &n in &n_values {
                for rep in 0..args.per_cell {
                    items.push((classes, federations, n, rep, id));
                    id += 1;
                }
            }
        }
    }
    let queue = Mutex::new(items);
    let rows: Mutex<Vec<ExperimentRow>> = Mutex::new(Vec::new());
    let abort = std::sync::atomic::AtomicBool::new(false);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                if abort.load(std::sync::atomic::Ordering::Relaxed) {
                    return;
                }
                let item = { queue.lock().unwrap().pop() };
                let Some((classes, federations, n, rep, id)) = item else { return };
                // deterministic instance seed per cell member; redraw until
                // every population can seat n
                let mut attempt = 0u64;
                let (instance, seed) = loop {
                    let seed = args
                        .seed
                        .wrapping_add(id as u64)
                        .wrapping_mul(1_000_003)
                        .wrapping_add(rep as u64)
                        .wrapping_add(attempt * 7_919);
                    let candidate = fedassembly::generate_instance(
                        classes as usize,
                        federations as usize,
                        seed,
                    );
                    if candidate.nodes().all(|v| candidate.population(v) >= n) {
                        break (candidate, seed);
                    }
                    attempt += 1;
                };
                let start = Instant::now();
                let outcome =
                    optimizer::column_generation(&instance, n, args.tolerance, args.max_iters);
                let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
                let row = match outcome {
                    Ok(out) => ExperimentRow {
                        classes,
                        federations,
                        n,
                        instance_id: id,
                        seed,
                        terminated: true,
                        wall_time_ms,
                        support_size: out.randomized.support.len(),
                        loss: out.loss,
                        iterations: out.trace.len(),
                    },
                    Err(OptimizerError::SearchBudget { .. }) => ExperimentRow {
                        classes,
                        federations,
                        n,
                        instance_id: id,
                        seed,
                        terminated: false,
                        wall_time_ms,
                        support_size: 0,
                        loss: f64::NAN,
                        iterations: 0,
                    },
                    Err(OptimizerError::IterationCap { loss, trace })
                    | Err(OptimizerError::Stationary { loss, trace }) => ExperimentRow {
                        classes,
                        federations,
                        n,
                        instance_id: id,
                        seed,
                        terminated: false,
                        wall_time_ms,
                        support_size: trace.last().map(|t| t.support_size).unwrap_or(0),
                        loss,
                        iterations: trace.len(),
                    },
                    Err(err) => {
                        eprintln!("instance {id}: optimizer error: {err}");
                        ExperimentRow {
                            classes,
                            federations,
                            n,
                            instance_id: id,
                            seed,
                            terminated: false,
                            wall_time_ms,
                            support_size: 0,
                            loss: f64::NAN,
                            iterations: 0,
                        }
                    }
                };
                if !row.terminated && args.fail_fast {
                    abort.store(true, std::sync::atomic::Ordering::Relaxed);
                }
                rows.lock().unwrap().push(row);
            });
        }
    });

    let mut rows = rows.into_inner().unwrap();
    rows.sort_by_key(|r| r.instance_id);
    let mut csv = String::from(
        "classes,federations,n,instance_id,seed,terminated,wall_time_ms,support_size,loss,iterations\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{:.3},{},{:.9e},{}\n",
            r.classes,
            r.federations,
            r.n,
            r.instance_id,
            r.seed,
            r.terminated,
            r.wall_time_ms,
            r.support_size,
            r.loss,
            r.iterations
        ));
    }
    write_output(&args.output, csv.as_bytes())?;
    let failed = rows.iter().filter(|r| !r.terminated).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs did not converge", rows.len());
        return Ok(ExitCode::from(EXIT_NO_CONVERGENCE));
    }
    Ok(ExitCode::SUCCESS)
}
