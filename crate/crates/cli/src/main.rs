//! `d2dmimo` command-line driver.
//!
//! Exit status: 0 on success, 1 for invalid input, 2 for runtime failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use d2dmimo::harness::{format_csv, PRESET_NAMES};
use d2dmimo::{
    emit_csv, optimize_pzf, preset, run_bounds, run_experiment, run_selftest, Error,
    ExperimentConfig, PzfObjective, SeResult,
};

#[derive(Parser)]
#[command(
    name = "d2dmimo",
    version,
    about = "Massive-MIMO uplink with an underlaid D2D layer: simulation and bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep with the matching analytical column.
    Simulate {
        #[command(flatten)]
        setup: Setup,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analytical column only, averaged over the same drops.
    Bounds {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search for the sum-SE maximizing (m_c, m_d) at the first sweep value.
    OptimizePzf {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1, 2, 3, 4])]
        m_c: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1, 2, 3, 4, 6, 8])]
        m_d: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Objective::Simulated)]
        objective: Objective,
        /// Table destination (`m_c,m_d,sum_se`); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prints the resolved configuration as a config file.
    Config {
        #[command(flatten)]
        setup: Setup,
    },
    /// Lists the built-in presets.
    Presets,
    /// Runs the built-in consistency checks.
    Selftest,
}

#[derive(Args)]
struct Setup {
    /// Built-in preset to start from.
    #[arg(long)]
    preset: Option<String>,
    /// Config file applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `section.key=value`, applied last; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    Simulated,
    Bound,
}

enum Failure {
    Input(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Input(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl Setup {
    fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.preset {
            Some(name) => preset(name)?,
            None => ExperimentConfig::default(),
        };
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::Input(format!("cannot read config {}: {e}", path.display()))
            })?;
            cfg.merge_text(&text)?;
        }
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(workers) = self.workers {
            cfg.workers = workers;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_output(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Writes the rows, then fails with an input error if no sweep point could
/// be evaluated.
fn emit(rows: &[SeResult], out: Option<&Path>) -> Result<(), Failure> {
    for r in rows {
        if let Some(e) = &r.error {
            eprintln!("warning: sweep value {}: {e}", r.sweep);
        }
    }
    match out {
        Some(path) => emit_csv(rows, path)?,
        None => write_output(&format_csv(rows), None)?,
    }
    if rows.iter().all(|r| r.error.is_some()) {
        return Err(Failure::Input("no sweep point could be evaluated".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { setup, out } => {
            emit(&run_experiment(&setup.resolve()?)?, out.as_deref())
        }
        Command::Bounds { setup, out } => emit(&run_bounds(&setup.resolve()?)?, out.as_deref()),
        Command::OptimizePzf {
            setup,
            m_c,
            m_d,
            objective,
            out,
        } => {
            let objective = match objective {
                Objective::Simulated => PzfObjective::Simulated,
                Objective::Bound => PzfObjective::Bound,
            };
            let choice = optimize_pzf(&setup.resolve()?, &m_c, &m_d, objective)?;
            let mut table = String::from("m_c,m_d,sum_se\n");
            for (c, d, v) in &choice.table {
                table.push_str(&format!(
                    "{c},{d},{}\n",
                    d2dmimo::harness::csv::format_sig9(*v)
                ));
            }
            write_output(&table, out.as_deref())?;
            eprintln!(
                "best (m_c, m_d) = ({}, {}) with sum SE {:.4} bits/s/Hz",
                choice.cancel_cellular, choice.cancel_d2d, choice.sum_se
            );
            Ok(())
        }
        Command::Config { setup } => write_output(&setup.resolve()?.to_text(), None),
        Command::Presets => write_output(&(PRESET_NAMES.join("\n") + "\n"), None),
        Command::Selftest => {
            let checks = run_selftest();
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "ok  " } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} self-checks failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
