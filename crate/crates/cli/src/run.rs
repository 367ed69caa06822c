//! One algorithm on one instance, reduced to a result row and a trace.

use std::time::Instant;

use hetnet_core::benders::{run_benders, run_benders_with, BendersOptions, BendersOutput, TraceKind};
use hetnet_core::conic::DEFAULT_TOL;
use hetnet_core::model::{BeamformingSolution, NetworkInstance};
use hetnet_core::oracle::{enumerate_optimal, rba_baseline, EntryStatus, ReportRow};
use hetnet_core::robust::{worst_case_margin, RobustInstance, RobustSubproblem};
use hetnet_core::subgrad::{run_subgradient, SubgradOptions, TraceRow as SubgradTraceRow};
use hetnet_core::Error;
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig};

/// Relative slack used by the feasibility flag.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Randomized-rounding draws per robust subproblem.
const ROBUST_SAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Certified optimal (to epsilon).
    Optimal,
    /// Feasible, no optimality claim.
    Feasible,
    Infeasible,
    /// Budget or iteration cap hit; the row carries the incumbent if any.
    IterationLimit,
    Failed,
}

/// One line of `results.csv`. Deliberately free of wall-clock data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    /// Seed of the drop the instance came from.
    pub seed: u64,
    pub algorithm: &'static str,
    pub sinr_db: f64,
    pub status: RunStatus,
    pub feasible: bool,
    /// Transmit power plus implementation power of active BSs.
    pub objective: f64,
    pub transmit_power: f64,
    pub activation: String,
    pub iterations: usize,
    pub solves: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub note: String,
}

/// Benders trace as written to disk: the core row without its timing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BendersTraceRow {
    pub iteration: usize,
    #[serde(rename = "LB")]
    pub lb: f64,
    #[serde(rename = "UB")]
    pub ub: f64,
    pub kind: TraceKind,
    pub activation: String,
    pub subproblem_value: f64,
    pub cumulative_socp_solves: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trace {
    Benders(Vec<BendersTraceRow>),
    Subgrad(Vec<SubgradTraceRow>),
    Oracle(Vec<ReportRow>),
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub row: ResultRow,
    pub trace: Option<Trace>,
    pub millis: u128,
}

struct Partial {
    status: RunStatus,
    solution: Option<BeamformingSolution>,
    iterations: usize,
    solves: usize,
    bounds: (f64, f64),
    note: String,
    trace: Option<Trace>,
}

impl Partial {
    fn from_error(e: Error) -> Self {
        let nan = (f64::NAN, f64::NAN);
        let (status, solution, bounds, iterations, solves) = match e {
            Error::Infeasible(_) | Error::SinrInfeasible => (RunStatus::Infeasible, None, nan, 0, 0),
            Error::IterationLimit { ref best, lb, ub, iterations, solves } => {
                (RunStatus::IterationLimit, best.as_deref().cloned(), (lb, ub), iterations, solves)
            }
            _ => (RunStatus::Failed, None, nan, 0, 0),
        };
        Self { status, solution, iterations, solves, bounds, note: e.to_string(), trace: None }
    }
}

fn benders_trace(out: &BendersOutput) -> Trace {
    Trace::Benders(
        out.trace
            .iter()
            .map(|r| BendersTraceRow {
                iteration: r.iteration,
                lb: r.lb,
                ub: r.ub,
                kind: r.kind,
                activation: r.activation.clone(),
                subproblem_value: r.subproblem_value,
                cumulative_socp_solves: r.cumulative_socp_solves,
            })
            .collect(),
    )
}

fn from_benders(out: BendersOutput) -> Partial {
    let trace = Some(benders_trace(&out));
    Partial {
        status: RunStatus::Optimal,
        iterations: out.iterations,
        solves: out.solves,
        bounds: (out.lb, out.ub),
        note: String::new(),
        trace,
        solution: Some(out.solution),
    }
}

fn benders_options(cfg: &ExperimentConfig) -> BendersOptions {
    let d = BendersOptions::default();
    BendersOptions {
        epsilon: cfg.epsilon,
        max_iters: cfg.max_iters.unwrap_or(d.max_iters),
        solve_budget: cfg.solve_budget,
        tol: DEFAULT_TOL,
    }
}

fn subgrad_options(cfg: &ExperimentConfig) -> SubgradOptions {
    let d = SubgradOptions::default();
    SubgradOptions {
        epsilon: cfg.epsilon,
        max_iters: cfg.max_iters.unwrap_or(d.max_iters),
        solve_budget: cfg.solve_budget,
        ..d
    }
}

fn run_partial(algo: Algorithm, inst: &NetworkInstance, cfg: &ExperimentConfig, seed: u64) -> Partial {
    let result = match algo {
        Algorithm::Benders => run_benders(inst, &benders_options(cfg)).map(from_benders),
        Algorithm::RobustBenders => RobustInstance::from_theta(inst, cfg.robust_theta).and_then(|r| {
            let sub = RobustSubproblem { rinst: &r, tol: DEFAULT_TOL, samples: ROBUST_SAMPLES, seed };
            run_benders_with(&sub, &benders_options(cfg)).map(from_benders)
        }),
        Algorithm::Subgrad => run_subgradient(inst, None, &subgrad_options(cfg)).map(|out| Partial {
            status: RunStatus::Feasible,
            iterations: out.iterations,
            solves: out.solves,
            bounds: (out.best_dual, out.solution.objective),
            note: format!("local search moves {}", out.moves),
            trace: Some(Trace::Subgrad(out.trace)),
            solution: Some(out.solution),
        }),
        Algorithm::Oracle => enumerate_optimal(inst, DEFAULT_TOL).map(|rep| {
            let rows = rep.rows();
            Partial {
                status: RunStatus::Optimal,
                iterations: rows.iter().filter(|r| r.status != EntryStatus::Pruned).count(),
                solves: rep.solves,
                bounds: (rep.optimum, rep.optimum),
                note: String::new(),
                trace: Some(Trace::Oracle(rows)),
                solution: Some(rep.solution),
            }
        }),
        Algorithm::Rba => rba_baseline(inst, seed, DEFAULT_TOL).map(|r| Partial {
            status: RunStatus::Feasible,
            iterations: r.draws,
            solves: r.solves,
            bounds: (f64::NAN, r.solution.objective),
            note: if r.draws == 0 { "fell back to all BSs active".into() } else { String::new() },
            trace: None,
            solution: Some(r.solution),
        }),
    };
    result.unwrap_or_else(Partial::from_error)
}

/// Feasibility of a returned solution; worst-case SINR for robust runs.
fn check_feasible(algo: Algorithm, inst: &NetworkInstance, cfg: &ExperimentConfig, sol: &BeamformingSolution) -> bool {
    if algo != Algorithm::RobustBenders {
        return sol.is_feasible(inst, FEASIBILITY_TOL, FEASIBILITY_TOL);
    }
    let Ok(r) = RobustInstance::from_theta(inst, cfg.robust_theta) else { return false };
    sol.max_cap_excess(inst) <= FEASIBILITY_TOL
        && (0..inst.num_users()).all(|k| worst_case_margin(&r, &sol.w, k) >= -FEASIBILITY_TOL)
}

/// Runs `algo` on `inst` (whose targets are already set to `sinr_db`).
/// Solver errors become tagged rows; nothing here panics on bad instances.
pub fn run_algorithm(algo: Algorithm, inst: &NetworkInstance, sinr_db: f64, cfg: &ExperimentConfig, seed: u64) -> RunRecord {
    let start = Instant::now();
    let p = run_partial(algo, inst, cfg, seed);
    let millis = start.elapsed().as_millis();
    let feasible = p.solution.as_ref().is_some_and(|s| check_feasible(algo, inst, cfg, s));
    let (objective, transmit_power, activation) = match &p.solution {
        Some(s) => (s.objective, s.transmit_power(), s.activation.to_string()),
        None => (f64::NAN, f64::NAN, String::new()),
    };
    let row = ResultRow {
        seed,
        algorithm: algo.name(),
        sinr_db,
        status: p.status,
        feasible,
        objective,
        transmit_power,
        activation,
        iterations: p.iterations,
        solves: p.solves,
        lower_bound: p.bounds.0,
        upper_bound: p.bounds.1,
        note: p.note,
    };
    RunRecord { row, trace: p.trace, millis }
}

/// Every configured algorithm at every configured target, in config order.
pub fn run_all(inst: &NetworkInstance, cfg: &ExperimentConfig, seed: u64) -> Vec<RunRecord> {
    let mut out = Vec::new();
    for &t in &cfg.sinr_targets_db {
        let at = inst.with_sinr_db(t);
        for &algo in &cfg.algorithms {
            out.push(run_algorithm(algo, &at, t, cfg, seed));
        }
    }
    out
}

/// Process exit code for a set of rows: 0 if anything is feasible, 2 if
/// every row is infeasible, 1 otherwise.
pub fn exit_code(rows: &[ResultRow]) -> i32 {
    if rows.iter().any(|r| r.feasible) {
        0
    } else if !rows.is_empty() && rows.iter().all(|r| r.status == RunStatus::Infeasible) {
        2
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hetnet_core::model::{generate_hexnet, ChannelConfig};

    fn small() -> NetworkInstance {
        generate_hexnet(3, 3, &ChannelConfig::default()).select_bs(&[0, 1, 2, 3])
    }

    #[test]
    fn oracle_and_benders_agree() {
        let cfg = ExperimentConfig::default();
        let inst = small();
        let b = run_algorithm(Algorithm::Benders, &inst, 5.0, &cfg, 0).row;
        let o = run_algorithm(Algorithm::Oracle, &inst, 5.0, &cfg, 0).row;
        assert_eq!(b.status, RunStatus::Optimal);
        assert!(b.feasible && o.feasible);
        assert!((b.objective - o.objective).abs() <= cfg.epsilon + 1e-6);
    }

    #[test]
    fn small_budget_is_flagged_with_incumbent() {
        let cfg = ExperimentConfig { solve_budget: Some(2), ..ExperimentConfig::default() };
        let inst = generate_hexnet(0, 6, &ChannelConfig::default());
        let b = run_algorithm(Algorithm::Benders, &inst, 5.0, &cfg, 0).row;
        assert_eq!(b.status, RunStatus::IterationLimit);
        assert!(b.feasible, "{b:?}");
        assert!(b.objective.is_finite());
    }

    #[test]
    fn infeasible_targets_become_tagged_rows() {
        let cfg = ExperimentConfig::default();
        let inst = small().with_sinr_db(60.0);
        let rows: Vec<ResultRow> = [Algorithm::Benders, Algorithm::Oracle, Algorithm::Rba, Algorithm::Subgrad]
            .iter()
            .map(|&a| run_algorithm(a, &inst, 60.0, &cfg, 0).row)
            .collect();
        for r in &rows {
            assert_eq!(r.status, RunStatus::Infeasible, "{r:?}");
            assert!(!r.feasible);
        }
        assert_eq!(exit_code(&rows), 2);
    }
}
