//! Experiment harness: instance generation, algorithm runs and sweeps.

use std::path::{Path, PathBuf};

use hetnet_core::model::{generate_hexnet, NetworkInstance};
use hetnet_core::multicell::apply_serving_mask;

pub mod config;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{Algorithm, ExperimentConfig};

pub const INSTANCE_FILE: &str = "instance.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_RUNS_FILE: &str = "sweep_runs.csv";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {1}", .0.display())]
    Io(PathBuf, std::io::Error),
    #[error("{}: {1}", .0.display())]
    Csv(PathBuf, String),
    #[error(transparent)]
    Core(#[from] hetnet_core::Error),
}

/// Per-BS and per-user summary of an instance.
pub fn summary_table(inst: &NetworkInstance) -> String {
    let mut s = format!("{} BSs, {} users, {} cells\n", inst.num_bs(), inst.num_users(), inst.num_cells());
    s.push_str("bs  cell  antennas  p_max[W]  pi[W]\n");
    for l in 0..inst.num_bs() {
        s.push_str(&format!(
            "{l:>2}  {:>4}  {:>8}  {:>8.3}  {:>5.3}\n",
            inst.cell_of_bs[l], inst.antennas[l], inst.p_max[l], inst.pi[l]
        ));
    }
    s.push_str("user  cell  sinr[dB]  best_bs  gain[dB]\n");
    for k in 0..inst.num_users() {
        let (best, gain) = (0..inst.num_bs())
            .map(|l| (l, inst.h[l][k].iter().map(|v| v.norm_sqr()).sum::<f64>()))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        s.push_str(&format!(
            "{k:>4}  {:>4}  {:>8.2}  {best:>7}  {:>8.2}\n",
            inst.cell_of_user[k],
            10.0 * inst.gamma[k].log10(),
            10.0 * (gain / inst.sigma2[k]).log10()
        ));
    }
    s
}

/// Generates the configured drop and writes `<out>/instance.json`.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<(NetworkInstance, PathBuf), CliError> {
    cfg.validate()?;
    let inst = generate_hexnet(cfg.seed, cfg.users, &cfg.channel_for_generation());
    apply_serving_mask(&inst)?;
    output::ensure_dir(&cfg.out)?;
    let path = cfg.out.join(INSTANCE_FILE);
    inst.write_json(&path)?;
    Ok((inst, path))
}

/// Runs every configured algorithm at every target on one instance: the
/// given file, or a fresh drop (also written to `<out>`) if `None`.
pub fn cmd_run(cfg: &ExperimentConfig, instance: Option<&Path>) -> Result<Vec<run::ResultRow>, CliError> {
    cfg.validate()?;
    let inst = match instance {
        Some(p) => NetworkInstance::read_json(p)?,
        None => cmd_generate(cfg)?.0,
    };
    apply_serving_mask(&inst)?;
    let records = run::run_all(&inst, cfg, cfg.seed);
    output::write_records(&cfg.out, &records, output::RESULTS_FILE, false)?;
    Ok(records.into_iter().map(|r| r.row).collect())
}

/// Runs `cfg.drops` seeded drops and writes per-run and aggregated CSVs.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<sweep::SweepRow>, CliError> {
    cfg.validate()?;
    let records = sweep::run_drops(cfg);
    output::write_records(&cfg.out, &records, SWEEP_RUNS_FILE, true)?;
    let agg = sweep::aggregate(cfg, &records);
    output::write_csv(&cfg.out.join(SWEEP_FILE), &agg)?;
    Ok(agg)
}
