//! Ground truth by exhaustive enumeration, and the random-association baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::conic::{solve_subproblem, SubproblemStatus};
use crate::error::{Error, Result};
use crate::model::{ActivationVector, BeamformingSolution, NetworkInstance};

/// Largest `L` accepted by [`enumerate_optimal`].
pub const MAX_ENUMERATION_BS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    Optimal,
    Infeasible,
    /// Below a known infeasible activation, hence infeasible without a solve.
    Pruned,
    Failed,
}

/// One activation in the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub activation: String,
    pub status: EntryStatus,
    /// Transmit power `v(a)`; NaN unless optimal.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct EnumerationReport {
    /// Indexed by activation mask (BS `l` is bit `l`).
    pub status: Vec<EntryStatus>,
    pub value: Vec<f64>,
    pub argmin: ActivationVector,
    /// `min_a v(a) + a'pi`.
    pub optimum: f64,
    pub solution: BeamformingSolution,
    pub solves: usize,
}

impl EnumerationReport {
    pub fn num_bs(&self) -> usize {
        self.argmin.len()
    }

    pub fn is_feasible(&self, a: &ActivationVector) -> bool {
        self.status[a.to_mask()] == EntryStatus::Optimal
    }

    /// Full objective `v(a) + a'pi`, if `a` is feasible.
    pub fn objective(&self, inst: &NetworkInstance, a: &ActivationVector) -> Option<f64> {
        self.is_feasible(a).then(|| self.value[a.to_mask()] + a.dot(&inst.pi))
    }

    /// Rows in mask order.
    pub fn rows(&self) -> Vec<ReportRow> {
        let n = self.num_bs();
        (0..self.status.len())
            .map(|m| ReportRow {
                activation: ActivationVector::from_mask(m, n).to_string(),
                status: self.status[m],
                value: self.value[m],
            })
            .collect()
    }
}

/// Solves the subproblem for every activation, largest first, skipping
/// subsets of infeasible activations.
pub fn enumerate_optimal(inst: &NetworkInstance, tol: f64) -> Result<EnumerationReport> {
    inst.validate()?;
    let n = inst.num_bs();
    if n > MAX_ENUMERATION_BS {
        return Err(Error::TooLarge(n));
    }
    let total = 1usize << n;
    let mut status = vec![EntryStatus::Failed; total];
    let mut value = vec![f64::NAN; total];
    let mut solutions: Vec<Option<BeamformingSolution>> = vec![None; total];
    let mut solves = 0;

    for level in (0..=n).rev() {
        let (pruned, todo): (Vec<usize>, Vec<usize>) = (0..total)
            .filter(|m| m.count_ones() as usize == level)
            .partition(|&m| {
                (0..n).any(|l| m & (1 << l) == 0 && matches!(status[m | 1 << l], EntryStatus::Infeasible | EntryStatus::Pruned))
            });
        for m in pruned {
            status[m] = EntryStatus::Pruned;
        }
        let results: Vec<_> = todo
            .par_iter()
            .map(|&m| (m, solve_subproblem(inst, &ActivationVector::from_mask(m, n), tol)))
            .collect();
        for (m, out) in results {
            let out = out?;
            solves += out.solves;
            status[m] = match out.status {
                SubproblemStatus::Optimal => {
                    value[m] = out.value;
                    solutions[m] = out.solution;
                    EntryStatus::Optimal
                }
                SubproblemStatus::Infeasible => EntryStatus::Infeasible,
                SubproblemStatus::SinrInfeasible => {
                    return Err(Error::Infeasible("SINR targets cannot be met at any power".into()));
                }
                SubproblemStatus::NumericalFailure => EntryStatus::Failed,
            };
        }
    }

    let mut best: Option<(usize, f64)> = None;
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by_key(|&m| ActivationVector::from_mask(m, n));
    for m in order {
        if status[m] == EntryStatus::Optimal {
            let obj = value[m] + ActivationVector::from_mask(m, n).dot(&inst.pi);
            if best.map_or(true, |(_, b)| obj < b) {
                best = Some((m, obj));
            }
        }
    }
    let (m, optimum) = best.ok_or_else(|| Error::Infeasible("no activation admits a feasible beamformer".into()))?;
    let solution = solutions[m].take().expect("optimal entry keeps its solution");
    Ok(EnumerationReport {
        status,
        value,
        argmin: ActivationVector::from_mask(m, n),
        optimum,
        solution,
        solves,
    })
}

/// Random BS association.
#[derive(Debug, Clone)]
pub struct RbaResult {
    pub solution: BeamformingSolution,
    /// Random draws used; zero when falling back to all-ones.
    pub draws: usize,
    pub solves: usize,
}

/// Maximum resampling attempts before falling back to all-ones.
pub const RBA_MAX_DRAWS: usize = 50;

/// Activates each BS independently with probability 1/2, resampling until
/// the subproblem is feasible, then falls back to all BSs on.
pub fn rba_baseline(inst: &NetworkInstance, seed: u64, tol: f64) -> Result<RbaResult> {
    inst.validate()?;
    let n = inst.num_bs();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut solves = 0;
    for draw in 1..=RBA_MAX_DRAWS {
        let a = ActivationVector::new((0..n).map(|_| rng.gen_bool(0.5)).collect());
        let out = solve_subproblem(inst, &a, tol)?;
        solves += out.solves;
        match out.status {
            SubproblemStatus::Optimal => {
                return Ok(RbaResult { solution: out.solution.expect("optimal"), draws: draw, solves });
            }
            SubproblemStatus::SinrInfeasible => {
                return Err(Error::Infeasible("SINR targets cannot be met at any power".into()));
            }
            _ => {}
        }
    }
    let out = solve_subproblem(inst, &ActivationVector::all_ones(n), tol)?;
    solves += out.solves;
    match out.solution {
        Some(solution) if out.is_optimal() => Ok(RbaResult { solution, draws: 0, solves }),
        _ => Err(Error::Infeasible("all-ones activation is infeasible".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::DEFAULT_TOL;
    use crate::model::{generate_hexnet, ChannelConfig};
    use num_complex::Complex64;

    fn scalar(p: f64) -> NetworkInstance {
        NetworkInstance {
            antennas: vec![1],
            gamma: vec![1.0],
            sigma2: vec![1.0],
            p_max: vec![p],
            pi: vec![0.5],
            cell_of_bs: vec![0],
            cell_of_user: vec![0],
            h: vec![vec![vec![Complex64::new(1.0, 0.0)]]],
        }
    }

    #[test]
    fn single_bs_picks_on_iff_feasible() {
        let r = enumerate_optimal(&scalar(2.0), DEFAULT_TOL).unwrap();
        assert_eq!(r.argmin.to_string(), "1");
        assert!((r.optimum - 1.5).abs() < 1e-6);
        assert_eq!(r.status[0], EntryStatus::Infeasible);
        assert!(matches!(enumerate_optimal(&scalar(0.5), DEFAULT_TOL), Err(Error::Infeasible(_))));
    }

    #[test]
    fn all_off_is_infeasible_and_pruning_is_sound() {
        let inst = generate_hexnet(4, 5, &ChannelConfig { sinr_db: 15.0, ..ChannelConfig::default() });
        let r = enumerate_optimal(&inst, DEFAULT_TOL).unwrap();
        assert_ne!(r.status[0], EntryStatus::Optimal);
        let pruned: Vec<usize> = (0..128).filter(|&m| r.status[m] == EntryStatus::Pruned).collect();
        for &m in pruned.iter().step_by((pruned.len() / 10).max(1)) {
            let out = solve_subproblem(&inst, &ActivationVector::from_mask(m, 7), DEFAULT_TOL).unwrap();
            assert_eq!(out.status, SubproblemStatus::Infeasible, "pruned {m:07b}");
        }
        let check = r.solution.objective;
        assert!((check - r.optimum).abs() < 1e-9);
        assert_eq!(r.rows().len(), 128);
    }

    #[test]
    fn guard_rejects_large_networks() {
        let mut inst = scalar(1.0);
        for _ in 0..24 {
            inst.antennas.push(1);
            inst.p_max.push(1.0);
            inst.pi.push(0.5);
            inst.cell_of_bs.push(0);
            inst.h.push(vec![vec![Complex64::new(1.0, 0.0)]]);
        }
        assert!(matches!(enumerate_optimal(&inst, DEFAULT_TOL), Err(Error::TooLarge(25))));
    }

    #[test]
    fn rba_is_deterministic_and_never_beats_the_optimum() {
        let inst = generate_hexnet(1, 4, &ChannelConfig::default());
        let opt = enumerate_optimal(&inst, DEFAULT_TOL).unwrap();
        let a = rba_baseline(&inst, 9, DEFAULT_TOL).unwrap();
        let b = rba_baseline(&inst, 9, DEFAULT_TOL).unwrap();
        assert_eq!(a.solution.activation, b.solution.activation);
        assert!(a.solution.objective >= opt.optimum - 1e-6);
        let one = rba_baseline(&scalar(2.0), 3, DEFAULT_TOL).unwrap();
        assert_eq!(one.solution.activation.to_string(), "1");
    }
}
