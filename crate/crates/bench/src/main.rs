use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpfree_bench::plots::render_plots;
use gpfree_bench::runner::{load_runs, merged_front};
use gpfree_bench::summary::format_table;
use gpfree_bench::{run_experiment, BenchError, DataSource, ExperimentId, ExperimentSpec, Variant};
use gpfree_core::TaskType;

#[derive(Parser)]
#[command(name = "gpfree", version, about = "Run and inspect composite-pipeline GP experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its results.
    Run(RunArgs),
    /// Re-render the plots of a results directory.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print a variant's Pareto front (merged over repetitions) as CSV.
    Pareto {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        variant: String,
        /// Only this repetition instead of the merged front.
        #[arg(long)]
        rep: Option<usize>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// exp1, exp2, exp3 or baseline.
    #[arg(long)]
    experiment: Option<String>,
    /// CSV path or synth:kind:n:noise.
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed_base: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Wall-time limit per run in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    generations: Option<usize>,
    /// JSON experiment spec; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV target column (name or index); defaults to the last column.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    task: Option<String>,
    /// Fill the elapsed_s trace column.
    #[arg(long)]
    record_timing: bool,
}

fn build_spec(args: &RunArgs) -> Result<ExperimentSpec, BenchError> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
            ExperimentSpec::from_json(&text)?
        }
        None => {
            let (Some(exp), Some(data)) = (&args.experiment, &args.data) else {
                return Err(BenchError::Config("--experiment and --data are required without --config".into()));
            };
            ExperimentSpec::new(exp.parse()?, data.parse()?)
        }
    };
    if let Some(exp) = &args.experiment {
        spec.experiment = exp.parse::<ExperimentId>()?;
    }
    if let Some(data) = &args.data {
        spec.data = data.parse::<DataSource>()?;
    }
    if let Some(reps) = args.reps {
        spec.repetitions = reps;
        if spec.seeds.as_ref().is_some_and(|s| s.len() != reps) {
            spec.seeds = None;
        }
    }
    if let Some(seed) = args.seed_base {
        spec.seed_base = seed;
    }
    if let Some(t) = args.time_limit {
        spec.budget.time_limit_s = Some(t);
        if args.generations.is_none() {
            spec.budget.generations = None;
        }
    }
    if let Some(g) = args.generations {
        spec.budget.generations = Some(g);
    }
    if let Some(t) = &args.target {
        spec.target = Some(t.clone());
    }
    if let Some(t) = &args.task {
        spec.task = Some(t.parse::<TaskType>().map_err(|e| BenchError::Config(e.to_string()))?);
    }
    spec.record_timing |= args.record_timing;
    spec.validate()?;
    Ok(spec)
}

fn execute(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Run(args) => {
            let spec = build_spec(&args)?;
            let report = run_experiment(&spec, Some(&args.out))?;
            print!("{}", format_table(&report.summary, report.train.task));
            eprintln!("results written to {}", args.out.display());
        }
        Command::Plot { input } => {
            let (_, task, runs) = load_runs(&input)?;
            render_plots(&runs, task, &input.join("plots"))?;
        }
        Command::Pareto { input, variant, rep } => {
            let variant: Variant = variant.parse()?;
            let front = merged_front(&input, variant, rep)?;
            gpfree_core::objectives::write_pareto_csv(&front, std::io::stdout().lock())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
