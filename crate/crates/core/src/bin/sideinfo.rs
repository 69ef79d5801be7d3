use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sideinfo::harness::acceptance::{results_csv, AcceptOptions, Acceptance, DEFAULT_SEED};
use sideinfo::harness::config::Sweep;
use sideinfo::harness::output::VERSION;
use sideinfo::harness::{run_experiment, write_run, ExperimentConfig};
use sideinfo::info::{parse_law, search_gp, search_wz, write_gp_law, write_wz_law, GridSpec, LawFile};
use sideinfo::Error;

/// Simulation laboratory for feedback and feedforward coding with side
/// information.
///
/// Exit status: 0 on success, 1 on a configuration or input error, 2 when an
/// acceptance criterion fails.
#[derive(Parser, Debug)]
#[command(name = "sideinfo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment and write `<scheme>.csv` and `meta.txt`.
    Run {
        /// Experiment config file.
        #[arg(long)]
        config: PathBuf,
        /// Master seed; defaults to the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the config once per value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Parameter to vary.
        #[arg(long)]
        axis: String,
        /// Comma-separated values, e.g. `5,10,15`.
        #[arg(long)]
        values: String,
        /// Master seed; defaults to the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, created if missing.
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
    },
    /// Run the acceptance suite and write `acceptance.csv` and `meta.txt`.
    Accept {
        /// Smaller Monte Carlo samples for the Gaussian checks.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "acceptance-out")]
        out: PathBuf,
    },
    /// Grid-search the auxiliary law for a law table and print the result
    /// as a law table.
    Optimize {
        /// Law table (`kind gp` or `kind wz`).
        #[arg(long)]
        law: PathBuf,
        /// Probability grid step.
        #[arg(long, default_value_t = 0.05)]
        grid_step: f64,
        /// Auxiliary alphabet size; defaults to the table's `u=`.
        #[arg(long)]
        aux_size: Option<usize>,
        /// Distortion limit for wz tables.
        #[arg(long, default_value_t = 0.1)]
        max_distortion: f64,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Acceptance,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn execute(cfg: &ExperimentConfig, command: &str, out: &Path) -> Result<(), Failure> {
    let rows = run_experiment(cfg)?;
    let path = write_run(out, command, cfg, &rows)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}

fn optimize(
    law: &Path,
    grid_step: f64,
    aux_size: Option<usize>,
    max_distortion: f64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let text = std::fs::read_to_string(law).map_err(|e| Failure::Config(format!("{}: {e}", law.display())))?;
    let table = parse_law(&text).map_err(|e| Failure::Config(format!("{}: {e}", law.display())))?;
    let (summary, body) = match table {
        LawFile::Gp {
            channel, aux_size: u, ..
        } => {
            let best = search_gp(&channel, &GridSpec::new(grid_step, aux_size.unwrap_or(u)))?;
            (
                format!(
                    "# I(U;Y) - I(U;S) = {:?} over {} candidates\n",
                    best.objective, best.evaluated
                ),
                write_gp_law(&best.law),
            )
        }
        LawFile::Wz {
            source, aux_size: u, ..
        } => {
            let best = search_wz(
                &source,
                max_distortion,
                &GridSpec::new(grid_step, aux_size.unwrap_or(u)),
            )?;
            (
                format!(
                    "# I(U;X) - I(U;Y) = {:?} at distortion {:?} over {} candidates\n",
                    best.objective.rate, best.objective.distortion, best.evaluated
                ),
                write_wz_law(&best.law),
            )
        }
    };
    let text = summary + &body;
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            println!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn accept(quick: bool, seed: u64, out: &Path) -> Result<(), Failure> {
    let results = Acceptance::new(AcceptOptions { quick, seed }).run_all();
    for r in &results {
        println!("{}", r.line());
    }
    std::fs::create_dir_all(out).map_err(Error::from)?;
    std::fs::write(out.join("acceptance.csv"), results_csv(&results)).map_err(Error::from)?;
    let meta = format!("tool = sideinfo {VERSION}\ncommand = accept\nseed = {seed}\nquick = {quick}\n");
    std::fs::write(out.join("meta.txt"), meta).map_err(Error::from)?;
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        return Err(Failure::Acceptance);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, seed, out } => execute(&load(&config, seed)?, "run", &out),
        Command::Sweep {
            config,
            axis,
            values,
            seed,
            out,
        } => {
            let values = Sweep::parse_values(&values).map_err(Failure::Config)?;
            let cfg = load(&config, seed)?.with_sweep(&axis, values)?;
            execute(&cfg, "sweep", &out)
        }
        Command::Accept { quick, seed, out } => accept(quick, seed, &out),
        Command::Optimize {
            law,
            grid_step,
            aux_size,
            max_distortion,
            out,
        } => optimize(&law, grid_step, aux_size, max_distortion, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Acceptance) => ExitCode::from(2),
    }
}
