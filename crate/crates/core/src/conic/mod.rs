//! Fixed-activation beamforming subproblems as conic programs.
//!
//! For a fixed activation `a` the problem is the SOCP
//!
//! ```text
//! minimize   sum_k ||w_k||^2
//! subject to ||(h_k^H w_i)_{i != k}, sigma_k|| <= Re(h_k^H w_k) / sqrt(gamma_k),
//!            Im(h_k^H w_k) = 0,
//!            sum_k ||w_lk||^2 <= a_l P_l.
//! ```
//!
//! Besides the primal solution the routines here expose the dual quantities
//! the decomposition methods need: power-constraint multipliers for
//! optimality cuts, a simplex-normalized infeasibility certificate from the
//! phase-1 probe, and weighted-power minima over the SINR set.

pub mod program;
mod socp;

pub use program::{AffineRow, ConeBlock, ConeKind, ConeProgram, EngineSettings, EngineSolution, EngineStatus};
pub use socp::{build as build_program, power_multiplier, Layout, NominalProgram, PowerMode};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ActivationVector, BeamformingSolution, NetworkInstance};

/// Default relative accuracy handed to the interior-point engine.
pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubproblemStatus {
    Optimal,
    Infeasible,
    /// The SINR targets cannot be met at any power.
    SinrInfeasible,
    NumericalFailure,
}

/// Result of one fixed-activation solve.
#[derive(Debug, Clone)]
pub struct ConicOutcome {
    pub status: SubproblemStatus,
    pub solution: Option<BeamformingSolution>,
    /// Multipliers of `||W_l||^2 <= a_l P_l`; zero for inactive BSs.
    pub mu: Vec<f64>,
    /// For inactive BSs, the norm of the multiplier of the eliminated block
    /// `W_l = 0`; zero for active BSs.
    pub nu: Vec<f64>,
    /// Simplex-normalized certificate (Infeasible only).
    pub lambda: Vec<f64>,
    /// Transmit power `v(a)` (Optimal only).
    pub value: f64,
    /// Optimal phase-1 slack, when the probe ran.
    pub probe_value: Option<f64>,
    /// Engine invocations spent on this outcome.
    pub solves: usize,
    pub message: Option<String>,
}

impl ConicOutcome {
    fn bare(status: SubproblemStatus, l: usize, solves: usize) -> Self {
        Self {
            status,
            solution: None,
            mu: vec![0.0; l],
            nu: vec![0.0; l],
            lambda: Vec::new(),
            value: f64::NAN,
            probe_value: None,
            solves,
            message: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SubproblemStatus::Optimal
    }

    /// Full objective `v(a) + a'pi`.
    pub fn full_objective(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.objective)
    }
}

fn settings(tol: f64) -> EngineSettings {
    EngineSettings { tol, ..EngineSettings::default() }
}

/// Runs the engine, short-circuiting programs without variables.
fn run(np: &NominalProgram, tol: f64) -> (EngineSolution, usize) {
    if np.trivially_infeasible {
        return (
            EngineSolution { status: EngineStatus::Infeasible, x: vec![], z: vec![], objective: f64::NAN },
            0,
        );
    }
    if np.program.num_vars == 0 {
        return (
            EngineSolution { status: EngineStatus::Solved, x: vec![], z: vec![0.0; np.program.num_rows()], objective: 0.0 },
            0,
        );
    }
    (np.program.solve(&settings(tol)), 1)
}

fn check_activation(inst: &NetworkInstance, a: &ActivationVector) -> Result<()> {
    if a.len() != inst.num_bs() {
        return Err(Error::Dimension(format!("activation of length {} for {} BSs", a.len(), inst.num_bs())));
    }
    Ok(())
}

/// The fixed-activation SOCP with inactive BSs eliminated.
pub fn build_subproblem(inst: &NetworkInstance, a: &ActivationVector) -> Result<ConeProgram> {
    check_activation(inst, a)?;
    Ok(socp::build(inst, &PowerMode::Capped(a.clone()))?.program)
}

/// Solves the fixed-activation subproblem; on infeasibility runs the phase-1
/// probe to obtain a certificate valid over the full (uneliminated) space.
pub fn solve_subproblem(inst: &NetworkInstance, a: &ActivationVector, tol: f64) -> Result<ConicOutcome> {
    check_activation(inst, a)?;
    let l = inst.num_bs();
    let np = socp::build(inst, &PowerMode::Capped(a.clone()))?;
    let (sol, solves) = run(&np, tol);
    match sol.status {
        EngineStatus::Solved => {
            let w = np.layout.beamformers(inst, &sol.x);
            let solution = BeamformingSolution::new(inst, a.clone(), w)?;
            let mut mu = vec![0.0; l];
            for (bs, blk) in np.power_block.iter().enumerate() {
                if let Some(b) = blk {
                    mu[bs] = power_multiplier(sol.block_duals(&np.program, *b)).max(0.0);
                }
            }
            let mut nu = np.elimination_multipliers(inst, &sol.z);
            for (bs, v) in nu.iter_mut().enumerate() {
                if a.is_active(bs) {
                    *v = 0.0;
                }
            }
            let mut out = ConicOutcome::bare(SubproblemStatus::Optimal, l, solves);
            out.value = solution.transmit_power();
            out.solution = Some(solution);
            out.mu = mu;
            out.nu = nu;
            Ok(out)
        }
        EngineStatus::Infeasible => match infeasibility_probe(inst, a, tol) {
            Ok(probe) if probe.t_star > 0.0 => {
                let mut out = ConicOutcome::bare(SubproblemStatus::Infeasible, l, solves + probe.solves);
                out.lambda = probe.lambda;
                out.probe_value = Some(probe.t_star);
                Ok(out)
            }
            Ok(probe) => {
                let mut out = ConicOutcome::bare(SubproblemStatus::NumericalFailure, l, solves + probe.solves);
                out.probe_value = Some(probe.t_star);
                out.message = Some(format!(
                    "subproblem reported infeasible but phase-1 slack is {:e}",
                    probe.t_star
                ));
                Ok(out)
            }
            Err(Error::SinrInfeasible) => Ok(ConicOutcome::bare(SubproblemStatus::SinrInfeasible, l, solves + 1)),
            Err(e) => Err(e),
        },
        EngineStatus::Unbounded | EngineStatus::Failed(_) => {
            let mut out = ConicOutcome::bare(SubproblemStatus::NumericalFailure, l, solves);
            out.message = Some(format!("{:?}", sol.status));
            Ok(out)
        }
    }
}

/// Outcome of the phase-1 program `min t s.t. W in SINR set, ||W_l||^2 <= a_l P_l + t`.
#[derive(Debug, Clone)]
pub struct ProbeResult {
    pub t_star: f64,
    /// Power-constraint duals normalized onto the simplex.
    pub lambda: Vec<f64>,
    pub solves: usize,
}

pub fn infeasibility_probe(inst: &NetworkInstance, a: &ActivationVector, tol: f64) -> Result<ProbeResult> {
    check_activation(inst, a)?;
    let caps: Vec<f64> = (0..inst.num_bs()).map(|l| if a.is_active(l) { inst.p_max[l] } else { 0.0 }).collect();
    probe_with_caps(inst, caps, tol)
}

fn probe_with_caps(inst: &NetworkInstance, caps: Vec<f64>, tol: f64) -> Result<ProbeResult> {
    let np = socp::build(inst, &PowerMode::Phase1 { caps })?;
    let (sol, solves) = run(&np, tol);
    match sol.status {
        EngineStatus::Solved => {
            let t = np.layout.slack.expect("phase-1 slack");
            let raw: Vec<f64> = np
                .power_block
                .iter()
                .map(|b| power_multiplier(sol.block_duals(&np.program, b.expect("all BSs present"))).max(0.0))
                .collect();
            let total: f64 = raw.iter().sum();
            if !(total > 0.0) {
                return Err(Error::NumericalFailure("phase-1 duals vanish".into()));
            }
            Ok(ProbeResult { t_star: sol.x[t], lambda: raw.iter().map(|v| v / total).collect(), solves })
        }
        EngineStatus::Infeasible => Err(Error::SinrInfeasible),
        other => Err(Error::NumericalFailure(format!("phase-1 probe: {other:?}"))),
    }
}

/// Minimizer of a weighted per-BS power over the SINR set.
#[derive(Debug, Clone)]
pub struct WeightedMin {
    /// `sum_l weights_l * bs_power_l`.
    pub value: f64,
    pub w: Vec<Vec<Complex64>>,
    pub bs_power: Vec<f64>,
    pub solves: usize,
}

/// `min_{W in SINR set} sum_l weights_l sum_k ||w_lk||^2`.
///
/// With `weights = 1 + mu` this is the optimality-cut constant `C1(mu)`, and
/// with simplex weights it is the feasibility-cut constant `C2(lambda)`.
pub fn weighted_power_min(inst: &NetworkInstance, weights: &[f64], tol: f64) -> Result<WeightedMin> {
    if weights.len() != inst.num_bs() {
        return Err(Error::Dimension(format!("{} weights for {} BSs", weights.len(), inst.num_bs())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidInstance("weights must be finite and nonnegative".into()));
    }
    let np = socp::build(inst, &PowerMode::Weighted(weights.to_vec()))?;
    let (sol, solves) = run(&np, tol);
    match sol.status {
        EngineStatus::Solved => {
            let w = np.layout.beamformers(inst, &sol.x);
            let bs_power: Vec<f64> = (0..inst.num_bs())
                .map(|l| {
                    let r = inst.block_range(l);
                    w.iter().map(|wk| crate::model::norm_sqr(&wk[r.clone()])).sum()
                })
                .collect();
            let value = weights.iter().zip(&bs_power).map(|(a, b)| a * b).sum();
            Ok(WeightedMin { value, w, bs_power, solves })
        }
        EngineStatus::Infeasible => Err(Error::SinrInfeasible),
        other => Err(Error::NumericalFailure(format!("weighted power minimization: {other:?}"))),
    }
}

/// Fails with [`Error::SinrInfeasible`] when no beamformer meets the SINR
/// targets even without power caps. Returns the engine invocations used.
pub fn check_sinr_feasible(inst: &NetworkInstance, tol: f64) -> Result<usize> {
    weighted_power_min(inst, &vec![1.0; inst.num_bs()], tol).map(|m| m.solves)
}
