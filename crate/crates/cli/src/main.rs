use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isolab::config::ExperimentConfig;
use isolab::runner::{list_experiments, run_to_dir};

#[derive(Parser)]
#[command(name = "isolab", version, about = "Weighted isoperimetric stability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write report.json, scalars.csv, one CSV per table and config.toml.
    ///
    /// Exits 0 iff every verdict passes. CSV floats use 17 significant digits.
    #[command(after_long_help = csv_help())]
    Run {
        /// TOML config file (`.json` is read as JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; defaults to `<ISOLAB_OUT>/<experiment>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Sphere-rule resolution.
        #[arg(long)]
        resolution: Option<usize>,
        /// Experiment name; overrides the config.
        #[arg(long)]
        experiment: Option<String>,
        /// Root for default output directories.
        #[arg(long, env = "ISOLAB_OUT", default_value = "isolab-out")]
        out_root: PathBuf,
    },
    /// List experiments with their modules and the results they probe.
    List,
}

fn csv_help() -> String {
    let mut s = String::from("CSV outputs per experiment (scalars.csv always has columns name, value, error):\n");
    for e in list_experiments() {
        s.push_str(&format!("\n  {}:\n", e.name));
        if e.csv.is_empty() {
            s.push_str("    <prefix>.* tables only in report.json; see scalars.csv\n");
        }
        for (table, cols) in e.csv {
            s.push_str(&format!("    {table}.csv: {cols}\n"));
        }
    }
    s
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for e in list_experiments() {
                println!("{:<20} {:<14} {}  [{}]", e.name, e.module, e.description, e.anchor);
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            seed,
            resolution,
            experiment,
            out_root,
        } => {
            let mut cfg = match config {
                Some(path) => match ExperimentConfig::load(&path) {
                    Ok(c) => c,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                },
                None => ExperimentConfig::new(""),
            };
            if let Some(name) = experiment {
                cfg.experiment = name;
            }
            if cfg.experiment.is_empty() {
                eprintln!("error: no experiment given (use --experiment or a config file)");
                return ExitCode::from(2);
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = resolution {
                cfg.quadrature.get_or_insert_with(Default::default).resolution = r;
            }
            let dir = out
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| out_root.join(&cfg.experiment));
            match run_to_dir(&cfg, &dir) {
                Ok((rep, _)) => {
                    for v in &rep.verdicts {
                        println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
                    }
                    println!("wrote {}", dir.display());
                    if rep.all_passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e} (details in {})", dir.join("error.json").display());
                    ExitCode::from(2)
                }
            }
        }
    }
}
