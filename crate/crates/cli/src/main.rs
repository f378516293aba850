use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;

use gridlab::pipeline::{run_grid, BaseInputs, RunOptions, SOLAR_SHAPE_FILE, TIMESERIES_FILE};
use gridlab::report::{write_outputs, RunManifest};
use gridlab::scenario::ParamGrid;

#[derive(Parser)]
#[command(name = "gridlab", version, about = "Half-hourly grid balancing scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario grid and write the result files.
    Run(RunArgs),
    /// Print the four-axis 189-point grid as a config file.
    StandardGrid,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["data", "synthetic"]))]
struct RunArgs {
    /// JSON grid config; without it the default parameters run once.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding timeseries.csv and solar_shape.csv.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Use the synthetic base year generated from this seed.
    #[arg(long)]
    synthetic: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    /// Write slot-level files for this year of the grid's base scenario.
    #[arg(long)]
    year_detail: Option<i32>,
    /// Check config and data, then exit without running.
    #[arg(long)]
    validate_only: bool,
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let started = Instant::now();
    let grid = match &args.config {
        Some(path) => ParamGrid::from_path(path).with_context(|| format!("reading config {}", path.display()))?,
        None => ParamGrid::new(),
    };
    let scenarios = grid.expand()?;
    if let Some(y) = args.year_detail {
        if !gridlab::horizon().any(|h| h == y) {
            bail!("--year-detail {y} is outside {}-{}", gridlab::FIRST_YEAR, gridlab::LAST_YEAR);
        }
    }

    let (base, input_paths) = match (&args.data, args.synthetic) {
        (Some(dir), _) => {
            let base = BaseInputs::from_dir(dir).with_context(|| format!("loading data from {}", dir.display()))?;
            (base, vec![dir.join(TIMESERIES_FILE), dir.join(SOLAR_SHAPE_FILE)])
        }
        (None, Some(seed)) => (BaseInputs::synthetic(seed), Vec::new()),
        (None, None) => unreachable!("clap requires a data source"),
    };

    if args.validate_only {
        let mut invalid = 0;
        for s in &scenarios {
            let checked = s.params.validate().and_then(|_| base.clean(&s.params).map(|_| ()));
            if let Err(e) = checked {
                eprintln!("scenario {} ({}): {e}", s.index, s.key());
                invalid += 1;
            }
        }
        println!(
            "{} scenarios, {invalid} invalid; base year {} with {} gaps",
            scenarios.len(),
            base.year(),
            base.raw.gaps.len()
        );
        return Ok(if invalid == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE });
    }

    let opts = RunOptions {
        parallelism: args.parallelism,
        detail_year: args.year_detail,
        detail_scenario: grid.base_index(),
    };
    let outcomes = run_grid(&base, &scenarios, &opts)?;
    let written = write_outputs(&args.out, &outcomes)?;
    let failures: Vec<_> = outcomes.iter().filter(|o| o.result.is_err()).collect();

    let mut inputs = input_paths;
    inputs.extend(args.config.iter().cloned());
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").into(),
        config: args.config.clone(),
        out_dir: args.out.clone(),
        inputs: RunManifest::digest_inputs(&inputs)?,
        synthetic_seed: args.synthetic,
        scenarios: scenarios.len(),
        failures: failures.len(),
        parallelism: args.parallelism,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    manifest.write(&args.out)?;
    info!("wrote {} files to {}", written.len() + 1, args.out.display());

    for f in &failures {
        if let Err(e) = &f.result {
            eprintln!("scenario {} ({}) failed: {e}", f.index, f.key);
        }
    }
    println!(
        "{} scenarios, {} failed, {:.1}s; results in {}",
        scenarios.len(),
        failures.len(),
        manifest.wall_seconds,
        args.out.display()
    );
    Ok(if failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRIDLAB_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::StandardGrid => serde_json::to_string_pretty(&ParamGrid::standard().to_json())
            .map(|s| {
                println!("{s}");
                ExitCode::SUCCESS
            })
            .map_err(Into::into),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
