use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use genmud::config::{load_estimate, load_experiment, load_train, output_path};
use genmud::estimate::{run_estimate, write_estimate_file};
use genmud::plot::emit_plot_data;
use genmud::sweep::{read_csv, run_sweep_with_model_file, write_csv_file};
use genmud::training::run_training;
use genmud::Error;

#[derive(Parser)]
#[command(name = "genmud", version, about = "Grant-free NOMA multi-user detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a generator and write the model file plus its loss curve.
    Train {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run detectors over a scenario grid and write the result CSV.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate the sparsity estimator over a grid.
    Estimate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Turn a sweep CSV into per-detector TSV series.
    Plotdata {
        csv: PathBuf,
        #[arg(long)]
        figure: String,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train { config, seed, steps, model, log } => {
            let mut spec = load_train(&config)?;
            spec.seed = seed.unwrap_or(spec.seed);
            spec.max_steps = steps.unwrap_or(spec.max_steps);
            spec.model = model.unwrap_or(spec.model);
            spec.log = log.unwrap_or(spec.log);
            let trained = run_training(&spec)?;
            let last = trained.log.steps.last();
            println!(
                "trained {} steps, final L_G {:.4}, L_H {:.4}, alpha {:.5}",
                trained.log.steps.len(),
                last.map_or(f64::NAN, |e| e.l_g),
                last.map_or(f64::NAN, |e| e.l_h),
                trained.model.alpha
            );
        }
        Command::Sweep { config, seed, trials, model, output } => {
            let mut spec = load_experiment(&config)?;
            spec.seed = seed.unwrap_or(spec.seed);
            spec.trials = trials.unwrap_or(spec.trials);
            spec.model = model.or(spec.model);
            spec.output = output.unwrap_or(spec.output);
            spec.validate().map_err(|m| Error::Config { path: config.clone(), message: m })?;
            let rows = run_sweep_with_model_file(&spec)?;
            let path = output_path(&spec.output);
            write_csv_file(&rows, &path)?;
            println!("{} rows written to {}", rows.len(), path.display());
        }
        Command::Estimate { config, seed, trials, output } => {
            let mut spec = load_estimate(&config)?;
            spec.seed = seed.unwrap_or(spec.seed);
            spec.trials = trials.unwrap_or(spec.trials);
            spec.output = output.unwrap_or(spec.output);
            let rows = run_estimate(&spec)?;
            let path = output_path(&spec.output);
            write_estimate_file(&rows, spec.seed, &path)?;
            println!("{} rows written to {}", rows.len(), path.display());
        }
        Command::Plotdata { csv, figure, out } => {
            let rows = read_csv(&csv)?;
            for path in emit_plot_data(&rows, &figure, &output_path(&out))? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
