//! Power versus SINR target, averaged over seeded drops.

use hetnet_core::model::generate_hexnet;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::run::{run_all, RunRecord};

/// One line of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sinr_db: f64,
    pub algorithm: &'static str,
    pub drops: usize,
    pub feasible_drops: usize,
    /// Mean objective over feasible drops; NaN if there are none.
    pub mean_power: f64,
    /// Sample standard deviation over feasible drops (0 for a single drop).
    pub std_power: f64,
    pub mean_transmit_power: f64,
    pub mean_solves: f64,
}

/// Seeds `cfg.seed .. cfg.seed + cfg.drops`, solved in parallel and
/// returned in seed order.
pub fn run_drops(cfg: &ExperimentConfig) -> Vec<RunRecord> {
    let channel = cfg.channel_for_generation();
    let per_drop: Vec<Vec<RunRecord>> = (0..cfg.drops as u64)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.seed + r;
            run_all(&generate_hexnet(seed, cfg.users, &channel), cfg, seed)
        })
        .collect();
    per_drop.into_iter().flatten().collect()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn sample_std(v: &[f64]) -> f64 {
    match v.len() {
        0 => f64::NAN,
        1 => 0.0,
        n => {
            let m = mean(v);
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
    }
}

/// Aggregates per target and algorithm, in config order.
pub fn aggregate(cfg: &ExperimentConfig, records: &[RunRecord]) -> Vec<SweepRow> {
    let mut out = Vec::new();
    for &t in &cfg.sinr_targets_db {
        for &algo in &cfg.algorithms {
            let rows: Vec<_> = records.iter().map(|r| &r.row).filter(|r| r.sinr_db == t && r.algorithm == algo.name()).collect();
            let feasible: Vec<_> = rows.iter().filter(|r| r.feasible).collect();
            let power: Vec<f64> = feasible.iter().map(|r| r.objective).collect();
            let tx: Vec<f64> = feasible.iter().map(|r| r.transmit_power).collect();
            let solves: Vec<f64> = rows.iter().map(|r| r.solves as f64).collect();
            out.push(SweepRow {
                sinr_db: t,
                algorithm: algo.name(),
                drops: rows.len(),
                feasible_drops: feasible.len(),
                mean_power: mean(&power),
                std_power: sample_std(&power),
                mean_transmit_power: mean(&tx),
                mean_solves: mean(&solves),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Algorithm;
    use hetnet_core::model::ChannelConfig;

    fn cfg(drops: usize) -> ExperimentConfig {
        ExperimentConfig {
            users: 2,
            drops,
            seed: 4,
            sinr_targets_db: vec![0.0, 120.0],
            algorithms: vec![Algorithm::Oracle, Algorithm::Rba],
            channel: ChannelConfig { cells: 1, ..ChannelConfig::default() },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_drop_reduces_to_run_values() {
        let c = cfg(1);
        let records = run_drops(&c);
        let agg = aggregate(&c, &records);
        assert_eq!(agg.len(), 4);
        for (a, r) in agg.iter().zip(&records) {
            assert_eq!(a.algorithm, r.row.algorithm);
            if r.row.feasible {
                assert_eq!(a.mean_power, r.row.objective);
                assert_eq!(a.std_power, 0.0);
            }
        }
    }

    #[test]
    fn infeasible_targets_give_nan_with_count() {
        let c = cfg(2);
        let agg = aggregate(&c, &run_drops(&c));
        let high: Vec<_> = agg.iter().filter(|r| r.sinr_db == 120.0).collect();
        assert!(high.iter().all(|r| r.mean_power.is_nan() && r.feasible_drops == 0 && r.drops == 2));
        let low = agg.iter().find(|r| r.sinr_db == 0.0 && r.algorithm == "oracle").unwrap();
        let rba = agg.iter().find(|r| r.sinr_db == 0.0 && r.algorithm == "rba").unwrap();
        assert_eq!(low.feasible_drops, 2);
        assert!(rba.mean_power >= low.mean_power - 1e-9);
    }
}
