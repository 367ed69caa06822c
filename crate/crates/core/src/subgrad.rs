//! Lagrangian dual-subgradient ascent on the power-cap coupling.
//!
//! Relaxing `||W_l||^2 <= a_l P_l` with multipliers `lambda` separates the
//! problem: beamformers solve a weighted power minimization with weights
//! `1 + lambda`, and the activation has the closed form
//! `a_l = 1 iff pi_l <= lambda_l P_l`. The last iterate is made primal
//! feasible by re-solving at its activation, adding BSs greedily if needed.
//!
//! The dual optimum sits at the activation tie point `lambda = pi / P`, where
//! the recovered activation carries little information. An optional local
//! search over single flips and swaps then polishes the restored activation.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::conic::{solve_subproblem, weighted_power_min, SubproblemStatus, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::model::{ActivationVector, BeamformingSolution, NetworkInstance};

/// Guard for the relative-change test when `lambda = 0`.
pub const DELTA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Constant(f64),
    /// `s0 / sqrt(j + 1)`.
    Diminishing(f64),
}

impl StepRule {
    pub fn step(&self, j: usize) -> f64 {
        match *self {
            StepRule::Constant(s) => s,
            StepRule::Diminishing(s0) => s0 / ((j + 1) as f64).sqrt(),
        }
    }

    /// Diminishing rule with `s0 = 1 / max_l P_l`.
    pub fn default_for(inst: &NetworkInstance) -> Self {
        StepRule::Diminishing(1.0 / inst.p_max.iter().cloned().fold(f64::MIN, f64::max))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub iteration: usize,
    pub rule: StepRule,
    /// Dual values `D(lambda(j))` seen so far.
    pub history: Vec<f64>,
}

impl DualState {
    pub fn new(lambda: Vec<f64>, rule: StepRule) -> Self {
        Self { lambda, iteration: 0, rule, history: Vec::new() }
    }

    /// `lambda(0) = pi / P`, the activation tie point.
    pub fn initial(inst: &NetworkInstance, rule: StepRule) -> Self {
        Self::new(inst.pi.iter().zip(&inst.p_max).map(|(pi, p)| pi / p).collect(), rule)
    }
}

/// `a_l = 1` iff `pi_l <= lambda_l P_l`.
pub fn activation_from_duals(inst: &NetworkInstance, lambda: &[f64]) -> ActivationVector {
    ActivationVector::new((0..inst.num_bs()).map(|l| inst.pi[l] <= lambda[l] * inst.p_max[l]).collect())
}

/// Per-BS transmit power of stacked beamformers.
fn bs_powers(inst: &NetworkInstance, w: &[Vec<Complex64>]) -> Vec<f64> {
    (0..inst.num_bs())
        .map(|l| {
            let r = inst.block_range(l);
            w.iter().map(|wk| crate::model::norm_sqr(&wk[r.clone()])).sum()
        })
        .collect()
}

/// `g_l = ||W_l||^2 - a_l P_l`.
pub fn subgradient(inst: &NetworkInstance, w: &[Vec<Complex64>], a: &ActivationVector) -> Vec<f64> {
    bs_powers(inst, w)
        .iter()
        .enumerate()
        .map(|(l, p)| p - if a.is_active(l) { inst.p_max[l] } else { 0.0 })
        .collect()
}

/// Projected step `lambda <- max(0, lambda + s(j) g)`.
pub fn subgradient_step(inst: &NetworkInstance, state: &DualState, w: &[Vec<Complex64>], a: &ActivationVector) -> DualState {
    let g = subgradient(inst, w, a);
    let s = state.rule.step(state.iteration);
    DualState {
        lambda: state.lambda.iter().zip(&g).map(|(l, g)| (l + s * g).max(0.0)).collect(),
        iteration: state.iteration + 1,
        rule: state.rule,
        history: state.history.clone(),
    }
}

/// `D(lambda) = C1(lambda) + sum_l min(0, pi_l - lambda_l P_l)`.
pub fn dual_value(inst: &NetworkInstance, lambda: &[f64], c1: f64) -> f64 {
    c1 + (0..inst.num_bs()).map(|l| (inst.pi[l] - lambda[l] * inst.p_max[l]).min(0.0)).sum::<f64>()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub j: usize,
    pub dual_value: f64,
    pub g_norm: f64,
    pub lambda_norm: f64,
    pub activation: String,
    pub stepsize: f64,
}

/// How the returned solution was obtained from the last iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Restoration {
    /// The last iterate was already primal feasible.
    None,
    /// Re-solved at the last activation.
    Fixed,
    /// BSs were added greedily before the re-solve succeeded.
    Greedy { added: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgradOptions {
    pub epsilon: f64,
    pub max_iters: usize,
    /// `None` uses [`StepRule::default_for`].
    pub rule: Option<StepRule>,
    pub solve_budget: Option<usize>,
    /// Polish the restored activation by flip/swap local search.
    pub local_search: bool,
    pub tol: f64,
}

impl Default for SubgradOptions {
    fn default() -> Self {
        Self { epsilon: 1e-4, max_iters: 500, rule: None, solve_budget: None, local_search: true, tol: DEFAULT_TOL }
    }
}

#[derive(Debug, Clone)]
pub struct SubgradOutput {
    pub solution: BeamformingSolution,
    pub state: DualState,
    pub iterations: usize,
    pub converged: bool,
    /// Largest dual value seen; a lower bound on the optimum.
    pub best_dual: f64,
    /// Largest `||lambda||` over the run.
    pub max_lambda_norm: f64,
    pub restoration: Restoration,
    /// Improving moves accepted by the local search.
    pub moves: usize,
    pub solves: usize,
    pub trace: Vec<TraceRow>,
}

/// Runs dual ascent from `lambda0` (default `pi / P`) and restores a primal
/// feasible point.
pub fn run_subgradient(inst: &NetworkInstance, lambda0: Option<Vec<f64>>, opts: &SubgradOptions) -> Result<SubgradOutput> {
    inst.validate()?;
    if !(opts.epsilon >= 0.0) {
        return Err(Error::InvalidInstance("epsilon must be nonnegative".into()));
    }
    let rule = opts.rule.unwrap_or_else(|| StepRule::default_for(inst));
    let mut state = match lambda0 {
        Some(l) if l.len() == inst.num_bs() => DualState::new(l, rule),
        Some(l) => return Err(Error::Dimension(format!("lambda0 has length {}", l.len()))),
        None => DualState::initial(inst, rule),
    };
    if state.lambda.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::InvalidInstance("lambda0 must be nonnegative".into()));
    }

    let mut trace = Vec::new();
    let mut solves = 0;
    let mut best_dual = f64::NEG_INFINITY;
    let mut max_lambda_norm = norm(&state.lambda);
    let mut converged = false;
    let mut last: Option<(Vec<Vec<Complex64>>, ActivationVector)> = None;

    while state.iteration < opts.max_iters && !opts.solve_budget.is_some_and(|b| solves >= b) {
        let weights: Vec<f64> = state.lambda.iter().map(|l| 1.0 + l).collect();
        let m = match weighted_power_min(inst, &weights, opts.tol) {
            Ok(m) => m,
            Err(Error::SinrInfeasible) => {
                return Err(Error::Infeasible("SINR targets cannot be met at any power".into()));
            }
            Err(e) => return Err(e),
        };
        solves += m.solves;
        let a = activation_from_duals(inst, &state.lambda);
        let d = dual_value(inst, &state.lambda, m.value);
        best_dual = best_dual.max(d);
        let g = subgradient(inst, &m.w, &a);
        let s = rule.step(state.iteration);
        let mut next = subgradient_step(inst, &state, &m.w, &a);
        next.history.push(d);
        trace.push(TraceRow {
            j: state.iteration,
            dual_value: d,
            g_norm: norm(&g),
            lambda_norm: norm(&state.lambda),
            activation: a.to_string(),
            stepsize: s,
        });
        let change: Vec<f64> = next.lambda.iter().zip(&state.lambda).map(|(x, y)| x - y).collect();
        let rel = norm(&change) / norm(&state.lambda).max(DELTA);
        last = Some((m.w, a));
        max_lambda_norm = max_lambda_norm.max(norm(&next.lambda));
        state = next;
        if rel <= opts.epsilon {
            converged = true;
            break;
        }
    }

    let (w, a) = match last {
        Some(pair) => pair,
        None => (Vec::new(), activation_from_duals(inst, &state.lambda)),
    };
    let (mut solution, restoration, extra) = restore(inst, &state.lambda, w, a, opts.tol)?;
    solves += extra;
    let mut moves = 0;
    if opts.local_search {
        let (best, m, extra) = local_search(inst, solution, opts.tol)?;
        solution = best;
        moves = m;
        solves += extra;
    }
    Ok(SubgradOutput {
        solution,
        iterations: state.iteration,
        state,
        converged,
        best_dual,
        max_lambda_norm,
        restoration,
        moves,
        solves,
        trace,
    })
}

/// Steepest descent over the activations one flip or one swap away.
/// Returns the final solution, the accepted moves and the solves spent.
pub fn local_search(inst: &NetworkInstance, start: BeamformingSolution, tol: f64) -> Result<(BeamformingSolution, usize, usize)> {
    let n = inst.num_bs();
    let mut current = start;
    let (mut moves, mut solves) = (0, 0);
    loop {
        let a = &current.activation;
        let mut neighbors = Vec::new();
        for i in 0..n {
            let mut b = a.clone();
            b.set(i, !a.is_active(i));
            neighbors.push(b);
        }
        for i in (0..n).filter(|&i| a.is_active(i)) {
            for j in (0..n).filter(|&j| !a.is_active(j)) {
                let mut b = a.clone();
                b.set(i, false);
                b.set(j, true);
                neighbors.push(b);
            }
        }
        let outcomes: Vec<_> = neighbors.par_iter().map(|b| solve_subproblem(inst, b, tol)).collect();
        let mut best: Option<BeamformingSolution> = None;
        for out in outcomes {
            let out = out?;
            solves += out.solves;
            if let Some(sol) = out.solution.filter(|_| out.status == SubproblemStatus::Optimal) {
                let better = match &best {
                    None => true,
                    Some(b) => sol.objective < b.objective || (sol.objective == b.objective && sol.activation < b.activation),
                };
                if better {
                    best = Some(sol);
                }
            }
        }
        match best {
            Some(b) if b.objective < current.objective - 1e-9 * current.objective.abs() => {
                current = b;
                moves += 1;
            }
            _ => return Ok((current, moves, solves)),
        }
    }
}

/// Primal feasibility restoration for the last iterate.
fn restore(
    inst: &NetworkInstance,
    lambda: &[f64],
    w: Vec<Vec<Complex64>>,
    a: ActivationVector,
    tol: f64,
) -> Result<(BeamformingSolution, Restoration, usize)> {
    if !w.is_empty() {
        let powers = bs_powers(inst, &w);
        let within_caps = (0..inst.num_bs()).all(|l| {
            let cap = if a.is_active(l) { inst.p_max[l] } else { 0.0 };
            powers[l] <= cap + 1e-9 * inst.p_max[l]
        });
        if within_caps {
            let sol = BeamformingSolution::new(inst, a.clone(), w)?;
            if sol.min_sinr_margin(inst) >= -1e-6 {
                return Ok((sol, Restoration::None, 0));
            }
        }
    }

    let mut order: Vec<usize> = (0..inst.num_bs()).filter(|&l| !a.is_active(l)).collect();
    order.sort_by(|&x, &y| {
        let sx = lambda[x] * inst.p_max[x] - inst.pi[x];
        let sy = lambda[y] * inst.p_max[y] - inst.pi[y];
        sy.total_cmp(&sx).then(x.cmp(&y))
    });
    let mut current = a;
    let mut solves = 0;
    for added in 0..=order.len() {
        if added > 0 {
            current.set(order[added - 1], true);
        }
        let out = solve_subproblem(inst, &current, tol)?;
        solves += out.solves;
        match out.status {
            SubproblemStatus::Optimal => {
                let how = if added == 0 { Restoration::Fixed } else { Restoration::Greedy { added } };
                return Ok((out.solution.expect("optimal"), how, solves));
            }
            SubproblemStatus::SinrInfeasible => break,
            _ => {}
        }
    }
    Err(Error::Infeasible("no restoration activation is feasible".into()))
}
