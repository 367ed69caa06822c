use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hetnet_cli::run::{exit_code, ResultRow};
use hetnet_cli::{cmd_generate, cmd_run, cmd_sweep, summary_table, Algorithm, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "hetnet", version, about = "Joint BS activation and coordinated beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded drop and write it as JSON.
    Generate(Common),
    /// Run algorithms on one instance.
    Run {
        #[command(flatten)]
        common: Common,
        /// Instance file; a fresh drop is generated if omitted.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Average power versus SINR target over seeded drops.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Number of drops.
        #[arg(long)]
        drops: Option<usize>,
    },
}

/// Flags override the config file, which overrides the defaults.
#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    users: Option<usize>,
    /// SINR target in dB; repeat for several.
    #[arg(long = "sinr-db", allow_negative_numbers = true)]
    sinr_db: Vec<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Cap on conic solves per run.
    #[arg(long)]
    solve_budget: Option<usize>,
    /// Comma-separated algorithm list.
    #[arg(long, value_delimiter = ',')]
    algos: Vec<Algorithm>,
    /// Relative channel error radius for robust-benders.
    #[arg(long)]
    robust_theta: Option<f64>,
    #[arg(long)]
    cells: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::read(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.users {
            cfg.users = v;
        }
        if !self.sinr_db.is_empty() {
            cfg.sinr_targets_db = self.sinr_db;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if self.max_iters.is_some() {
            cfg.max_iters = self.max_iters;
        }
        if self.solve_budget.is_some() {
            cfg.solve_budget = self.solve_budget;
        }
        if !self.algos.is_empty() {
            cfg.algorithms = self.algos;
        }
        if let Some(v) = self.robust_theta {
            cfg.robust_theta = v;
        }
        if let Some(v) = self.cells {
            cfg.channel.cells = v;
        }
        if let Some(v) = self.out {
            cfg.out = v;
        }
        Ok(cfg)
    }
}

fn print_rows(rows: &[ResultRow]) {
    println!("{:<15} {:>8} {:<16} {:>14} {:<10} {:>6} {:>7}", "algorithm", "sinr_dB", "status", "objective[W]", "active", "iters", "solves");
    for r in rows {
        println!(
            "{:<15} {:>8} {:<16} {:>14.6e} {:<10} {:>6} {:>7}",
            r.algorithm,
            r.sinr_db,
            format!("{:?}", r.status),
            r.objective,
            r.activation,
            r.iterations,
            r.solves
        );
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Generate(common) => {
            let cfg = common.resolve()?;
            let (inst, path) = cmd_generate(&cfg)?;
            print!("{}", summary_table(&inst));
            println!("wrote {}", path.display());
            Ok(0)
        }
        Command::Run { common, instance } => {
            let cfg = common.resolve()?;
            let rows = cmd_run(&cfg, instance.as_deref())?;
            print_rows(&rows);
            Ok(exit_code(&rows))
        }
        Command::Sweep { common, drops } => {
            let mut cfg = common.resolve()?;
            if let Some(d) = drops {
                cfg.drops = d;
            }
            let agg = cmd_sweep(&cfg)?;
            println!("{:>8} {:<15} {:>9} {:>14} {:>14}", "sinr_dB", "algorithm", "feasible", "mean[W]", "std[W]");
            for r in &agg {
                println!(
                    "{:>8} {:<15} {:>4}/{:<4} {:>14.6e} {:>14.6e}",
                    r.sinr_db, r.algorithm, r.feasible_drops, r.drops, r.mean_power, r.std_power
                );
            }
            if agg.iter().all(|r| r.feasible_drops == 0) {
                Ok(2)
            } else {
                Ok(0)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
