use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nsdo_cli::{
    load_config, run_experiment, sweep_table, ConfigError, RunFlags, SweepAxis,
};

#[derive(Parser)]
#[command(
    name = "nsdo",
    about = "Simulated distributed non-smooth optimization experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment a JSON config describes (one run per seed).
    Run(RunArgs),
    /// Closed-form time-to-precision sweep along one axis.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment config (JSON).
    config: PathBuf,
    /// Override the config's seed list, e.g. --seeds 1,2,3
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory (default: the config's output_dir, else ".").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the derived algorithm constants and exit.
    #[arg(long)]
    print_constants: bool,
    /// Skip the oracle solve and the bounds report.
    #[arg(long)]
    no_bounds: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Path to the base experiment config (JSON).
    config: PathBuf,
    /// Axis to vary: epsilon | dimension | eigengap.
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values (may be empty).
    #[arg(long, value_delimiter = ',', num_args = 0.., default_value = "")]
    values: Vec<String>,
    /// Output directory for sweep_<axis>.csv (default: stdout only).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config_exit(err: &ConfigError) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        ConfigError::Field { .. } | ConfigError::Parse(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn run(args: RunArgs) -> ExitCode {
    let config = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => return config_exit(&e),
    };
    let flags = RunFlags {
        seeds_override: args.seeds,
        out_override: args.out,
        print_constants: args.print_constants,
        no_bounds: args.no_bounds,
    };

    if flags.print_constants {
        let inst = match nsdo_cli::instantiate(&config, true) {
            Ok(i) => i,
            Err(e) => return config_exit(&e),
        };
        match nsdo_cli::constants_lines(&config, &inst) {
            Ok(lines) => {
                for line in lines {
                    println!("{line}");
                }
                return ExitCode::SUCCESS;
            }
            Err(e) => return config_exit(&e),
        }
    }

    match run_experiment(&config, &flags) {
        Ok(output) => {
            println!(
                "wrote {} trace file(s), summary.json{} to {}",
                output.trace_paths.len(),
                if output.bounds.is_some() {
                    ", bounds.json"
                } else {
                    ""
                },
                output.out_dir.display()
            );
            if let Some(report) = &output.bounds {
                println!(
                    "bounds: {} upper / {} lower violations over {} samples",
                    report.upper_violations,
                    report.lower_violations,
                    report.samples.len()
                );
            }
            if let (Some(gap), Some(se)) =
                (output.summary.final_mean_gap, output.summary.final_stderr)
            {
                println!("final mean gap {gap} (stderr {se})");
            }
            println!("total simulated time {}", output.summary.total_simulated_time);
            ExitCode::SUCCESS
        }
        Err(e) => config_exit(&e),
    }
}

fn sweep(args: SweepArgs) -> ExitCode {
    let config = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => return config_exit(&e),
    };
    let axis = match SweepAxis::parse(&args.axis) {
        Ok(a) => a,
        Err(e) => return config_exit(&e),
    };
    let values: Result<Vec<f64>, _> = args
        .values
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>())
        .collect();
    let values = match values {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: values: {e}");
            return ExitCode::from(2);
        }
    };

    match sweep_table(&config, axis, &values) {
        Ok(rows) => {
            let csv = nsdo_cli::sweep_csv(axis, &rows);
            print!("{csv}");
            if let Some(dir) = args.out {
                if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| {
                    std::fs::write(dir.join(format!("sweep_{}.csv", axis.name())), &csv)
                }) {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => config_exit(&e),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
    }
}
