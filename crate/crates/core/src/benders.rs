//! Generalized Benders decomposition over the activation vector.
//!
//! The master keeps `a0` as the full objective `v(a) + a'pi` and minimizes the
//! pointwise maximum of the optimality cuts over the binary activations that
//! satisfy every feasibility cut. For fixed `a` the optimal `a0` is exactly
//! that maximum, so the min-max form has the same optimum as a bisection on
//! `a0` with a binary feasibility program.
//!
//! Besides the cuts, the master remembers the exact objective of every visited
//! activation and excludes visited infeasible ones. Both are valid
//! restrictions, and they guarantee termination even when a subproblem
//! returns a cut that is not tight.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::conic::{solve_subproblem, weighted_power_min, ConicOutcome, SubproblemStatus, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::model::{ActivationVector, BeamformingSolution, NetworkInstance};

/// Slack factor of the `a0` box: `a0 <= sum_l (pi_l + KAPPA * P_l)`.
pub const KAPPA: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CutKind {
    Optimality,
    Feasibility,
}

/// An affine cut in the activation variables.
///
/// Optimality: `a0 >= coeff'a + constant`. Feasibility: `coeff'a >= constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub kind: CutKind,
    pub coeff: Vec<f64>,
    pub constant: f64,
    pub source_iteration: usize,
}

impl Cut {
    /// `coeff'a + constant` for optimality cuts, `coeff'a` for feasibility cuts.
    pub fn eval(&self, a: &ActivationVector) -> f64 {
        let lin = a.dot(&self.coeff);
        match self.kind {
            CutKind::Optimality => lin + self.constant,
            CutKind::Feasibility => lin,
        }
    }

    /// Whether `a` satisfies a feasibility cut up to `tol`. Optimality cuts
    /// never exclude an activation.
    pub fn admits(&self, a: &ActivationVector, tol: f64) -> bool {
        match self.kind {
            CutKind::Optimality => true,
            CutKind::Feasibility => self.eval(a) >= self.constant - tol,
        }
    }
}

/// Optimality cut from an optimal subproblem at `a_hat`.
///
/// Active BSs contribute `pi_l - mu_l P_l`. For an inactive BS the quadratic
/// cap multiplier is not attained, so the cut uses the norm form
/// `||W_l|| <= sqrt(a_l P_l)` whose multiplier `nu_l` is recovered from the
/// eliminated columns, giving `pi_l - nu_l sqrt(P_l)`. The constant follows
/// from tightness at `a_hat`.
pub fn make_optimality_cut(inst: &NetworkInstance, a_hat: &ActivationVector, outcome: &ConicOutcome) -> Result<Cut> {
    if !outcome.is_optimal() {
        return Err(Error::WrongStatus(format!("{:?}", outcome.status)));
    }
    let coeff: Vec<f64> = (0..inst.num_bs())
        .map(|l| {
            if a_hat.is_active(l) {
                inst.pi[l] - outcome.mu[l] * inst.p_max[l]
            } else {
                inst.pi[l] - outcome.nu[l] * inst.p_max[l].sqrt()
            }
        })
        .collect();
    let full = outcome.value + a_hat.dot(&inst.pi);
    let constant = full - a_hat.dot(&coeff);
    Ok(Cut { kind: CutKind::Optimality, coeff, constant, source_iteration: 0 })
}

/// Feasibility cut `a'(lambda o P) >= C2(lambda)` from a simplex certificate.
pub fn make_feasibility_cut(inst: &NetworkInstance, a_hat: &ActivationVector, lambda_hat: &[f64], tol: f64) -> Result<Cut> {
    if a_hat.len() != inst.num_bs() || lambda_hat.len() != inst.num_bs() {
        return Err(Error::Dimension("activation and certificate must have one entry per BS".into()));
    }
    let c2 = weighted_power_min(inst, lambda_hat, tol)?.value;
    let coeff = lambda_hat.iter().zip(&inst.p_max).map(|(l, p)| l * p).collect();
    Ok(Cut { kind: CutKind::Feasibility, coeff, constant: c2, source_iteration: 0 })
}

/// Feasibility cut with `C2(lambda)` read off the phase-1 probe instead of a
/// separate solve. The probe dual is `C2(lambda) - lambda'c` with caps
/// `c = a_hat o P`, so at the probe optimum `C2 = t* + lambda'c`; the
/// constant is lowered by `FEASIBILITY_MARGIN (1 + lambda'c)` to absorb the
/// engine's duality gap.
pub fn feasibility_cut_from_probe(inst: &NetworkInstance, a_hat: &ActivationVector, lambda_hat: &[f64], t_star: f64) -> Result<Cut> {
    if a_hat.len() != inst.num_bs() || lambda_hat.len() != inst.num_bs() {
        return Err(Error::Dimension("activation and certificate must have one entry per BS".into()));
    }
    let coeff: Vec<f64> = lambda_hat.iter().zip(&inst.p_max).map(|(l, p)| l * p).collect();
    let used = a_hat.dot(&coeff);
    let constant = t_star + used - FEASIBILITY_MARGIN * (1.0 + used.abs());
    Ok(Cut { kind: CutKind::Feasibility, coeff, constant, source_iteration: 0 })
}

/// Relative slack subtracted from probe-derived feasibility cut constants.
pub const FEASIBILITY_MARGIN: f64 = 1e-6;

/// Result of evaluating one activation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub status: SubproblemStatus,
    /// Full objective `v(a) + a'pi` when optimal.
    pub objective: f64,
    pub solution: Option<BeamformingSolution>,
    pub cut: Option<Cut>,
    /// Phase-1 slack when infeasible.
    pub probe_value: Option<f64>,
    pub solves: usize,
    pub message: Option<String>,
}

/// Fixed-activation oracle driven by the decomposition loop.
pub trait Subproblem {
    fn num_bs(&self) -> usize;
    fn pi(&self) -> &[f64];
    fn p_max(&self) -> &[f64];
    fn evaluate(&self, a: &ActivationVector) -> Result<Evaluation>;
}

/// The nominal SOCP subproblem.
#[derive(Debug, Clone, Copy)]
pub struct NominalSubproblem<'a> {
    pub inst: &'a NetworkInstance,
    pub tol: f64,
}

impl Subproblem for NominalSubproblem<'_> {
    fn num_bs(&self) -> usize {
        self.inst.num_bs()
    }

    fn pi(&self) -> &[f64] {
        &self.inst.pi
    }

    fn p_max(&self) -> &[f64] {
        &self.inst.p_max
    }

    fn evaluate(&self, a: &ActivationVector) -> Result<Evaluation> {
        let out = solve_subproblem(self.inst, a, self.tol)?;
        let mut ev = Evaluation {
            status: out.status,
            objective: f64::NAN,
            solution: None,
            cut: None,
            probe_value: out.probe_value,
            solves: out.solves,
            message: out.message.clone(),
        };
        match out.status {
            SubproblemStatus::Optimal => {
                ev.cut = Some(make_optimality_cut(self.inst, a, &out)?);
                ev.objective = out.value + a.dot(&self.inst.pi);
                ev.solution = out.solution;
            }
            SubproblemStatus::Infeasible => {
                let t_star = out.probe_value.expect("infeasible outcome carries the probe value");
                ev.cut = Some(feasibility_cut_from_probe(self.inst, a, &out.lambda, t_star)?);
            }
            SubproblemStatus::SinrInfeasible | SubproblemStatus::NumericalFailure => {}
        }
        Ok(ev)
    }
}

/// Exact knowledge about visited activations: `Some(objective)` if feasible,
/// `None` if excluded.
pub type PointBounds = BTreeMap<ActivationVector, Option<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub a_hat: ActivationVector,
    pub a0_hat: f64,
}

/// Tolerance for feasibility-cut satisfaction in the master.
fn admit_tol(cut: &Cut) -> f64 {
    1e-9 * (1.0 + cut.constant.abs())
}

/// Master value at a full activation, or `None` if excluded.
pub fn master_value(cuts: &[Cut], a: &ActivationVector, a0_lo: f64, points: &PointBounds) -> Option<f64> {
    if cuts.iter().any(|c| !c.admits(a, admit_tol(c))) {
        return None;
    }
    let mut v = a0_lo;
    for c in cuts.iter().filter(|c| c.kind == CutKind::Optimality) {
        v = v.max(c.eval(a));
    }
    match points.get(a) {
        Some(None) => None,
        Some(Some(exact)) => Some(v.max(*exact)),
        None => Some(v),
    }
}

/// `min_a max(lo, max_j cut_j(a))` over activations admitted by the
/// feasibility cuts, with `a0 <= hi`. Ties go to the lexicographically
/// smallest `a` (BS 0 most significant, off before on).
pub fn solve_master(cuts: &[Cut], inst: &NetworkInstance, a0_bounds: (f64, f64)) -> Option<MasterSolution> {
    solve_master_with(cuts, inst.num_bs(), a0_bounds, &PointBounds::new())
}

/// Depth-first branch and bound over `a`, off-branch first.
pub fn solve_master_with(cuts: &[Cut], num_bs: usize, a0_bounds: (f64, f64), points: &PointBounds) -> Option<MasterSolution> {
    let opt: Vec<&Cut> = cuts.iter().filter(|c| c.kind == CutKind::Optimality).collect();
    let feas: Vec<&Cut> = cuts.iter().filter(|c| c.kind == CutKind::Feasibility).collect();
    // Suffix sums of the most favorable free-variable contributions.
    let suffix = |c: &Cut, f: fn(f64) -> f64| {
        let mut s = vec![0.0; num_bs + 1];
        for l in (0..num_bs).rev() {
            s[l] = s[l + 1] + f(c.coeff[l]);
        }
        s
    };
    let opt_free: Vec<Vec<f64>> = opt.iter().map(|c| suffix(c, |v| v.min(0.0))).collect();
    let feas_free: Vec<Vec<f64>> = feas.iter().map(|c| suffix(c, |v| v.max(0.0))).collect();

    struct Search<'s> {
        cuts: &'s [Cut],
        opt: Vec<&'s Cut>,
        feas: Vec<&'s Cut>,
        opt_free: Vec<Vec<f64>>,
        feas_free: Vec<Vec<f64>>,
        bounds: (f64, f64),
        points: &'s PointBounds,
        bits: Vec<bool>,
        best: Option<MasterSolution>,
    }

    impl Search<'_> {
        fn visit(&mut self, depth: usize, opt_fixed: &mut Vec<f64>, feas_fixed: &mut Vec<f64>) {
            let n = self.bits.len();
            for (j, c) in self.feas.iter().enumerate() {
                if feas_fixed[j] + self.feas_free[j][depth] < c.constant - admit_tol(c) {
                    return;
                }
            }
            let mut bound = self.bounds.0;
            for (j, c) in self.opt.iter().enumerate() {
                bound = bound.max(c.constant + opt_fixed[j] + self.opt_free[j][depth]);
            }
            if bound > self.bounds.1 + 1e-9 * (1.0 + self.bounds.1.abs()) {
                return;
            }
            if let Some(best) = &self.best {
                if bound > best.a0_hat + 1e-9 * (1.0 + best.a0_hat.abs()) {
                    return;
                }
            }
            if depth == n {
                let a = ActivationVector::new(self.bits.clone());
                if let Some(v) = master_value(self.cuts, &a, self.bounds.0, self.points) {
                    if v <= self.bounds.1 && self.best.as_ref().map_or(true, |b| v < b.a0_hat) {
                        self.best = Some(MasterSolution { a_hat: a, a0_hat: v });
                    }
                }
                return;
            }
            self.visit(depth + 1, opt_fixed, feas_fixed);
            self.bits[depth] = true;
            for (j, c) in self.opt.iter().enumerate() {
                opt_fixed[j] += c.coeff[depth];
            }
            for (j, c) in self.feas.iter().enumerate() {
                feas_fixed[j] += c.coeff[depth];
            }
            self.visit(depth + 1, opt_fixed, feas_fixed);
            for (j, c) in self.opt.iter().enumerate() {
                opt_fixed[j] -= c.coeff[depth];
            }
            for (j, c) in self.feas.iter().enumerate() {
                feas_fixed[j] -= c.coeff[depth];
            }
            self.bits[depth] = false;
        }
    }

    let mut opt_fixed = vec![0.0; opt.len()];
    let mut feas_fixed = vec![0.0; feas.len()];
    let mut search = Search {
        cuts,
        opt,
        feas,
        opt_free,
        feas_free,
        bounds: a0_bounds,
        points,
        bits: vec![false; num_bs],
        best: None,
    };
    search.visit(0, &mut opt_fixed, &mut feas_fixed);
    search.best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Optimality,
    Feasibility,
    /// The engine failed; the activation was excluded without a cut.
    Failure,
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    #[serde(rename = "LB")]
    pub lb: f64,
    #[serde(rename = "UB")]
    pub ub: f64,
    pub kind: TraceKind,
    pub activation: String,
    /// Full objective if feasible, phase-1 slack if infeasible.
    pub subproblem_value: f64,
    pub cumulative_socp_solves: usize,
    pub millis: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `v(a_hat) + a_hat'pi <= LB + epsilon` after a subproblem.
    SubproblemBound,
    /// `UB <= a0_hat + epsilon` after a master solve.
    MasterBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BendersOptions {
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stop once this many conic solves have been spent.
    pub solve_budget: Option<usize>,
    pub tol: f64,
}

impl Default for BendersOptions {
    fn default() -> Self {
        Self { epsilon: 1e-4, max_iters: 200, solve_budget: None, tol: DEFAULT_TOL }
    }
}

#[derive(Debug, Clone)]
pub struct BendersOutput {
    pub solution: BeamformingSolution,
    pub lb: f64,
    pub ub: f64,
    pub iterations: usize,
    pub solves: usize,
    pub termination: Termination,
    pub trace: Vec<TraceRow>,
    pub cuts: Vec<Cut>,
}

/// Runs the decomposition on the nominal SOCP subproblem.
pub fn run_benders(inst: &NetworkInstance, opts: &BendersOptions) -> Result<BendersOutput> {
    inst.validate()?;
    run_benders_with(&NominalSubproblem { inst, tol: opts.tol }, opts)
}

/// Runs the decomposition against any fixed-activation oracle.
pub fn run_benders_with<S: Subproblem + ?Sized>(sub: &S, opts: &BendersOptions) -> Result<BendersOutput> {
    if !(opts.epsilon >= 0.0) {
        return Err(Error::InvalidInstance("epsilon must be nonnegative".into()));
    }
    let n = sub.num_bs();
    let lo = 0.0;
    let hi: f64 = sub.pi().iter().zip(sub.p_max()).map(|(pi, p)| pi + KAPPA * p).sum();
    let start = Instant::now();

    let mut a_hat = ActivationVector::all_ones(n);
    let mut cuts: Vec<Cut> = Vec::new();
    let mut points = PointBounds::new();
    let mut trace = Vec::new();
    let (mut lb, mut ub) = (lo, f64::INFINITY);
    let mut incumbent: Option<BeamformingSolution> = None;
    let mut solves = 0;

    for iteration in 1..=opts.max_iters {
        if opts.solve_budget.is_some_and(|b| solves >= b) {
            break;
        }
        let ev = sub.evaluate(&a_hat)?;
        solves += ev.solves;
        let (kind, value) = match ev.status {
            SubproblemStatus::Optimal => {
                let sol = ev.solution.expect("optimal evaluation carries a solution");
                if ev.objective < ub {
                    ub = ev.objective;
                    incumbent = Some(sol);
                }
                points.insert(a_hat.clone(), Some(ev.objective));
                let mut cut = ev.cut.expect("optimal evaluation carries a cut");
                cut.source_iteration = iteration;
                cuts.push(cut);
                (TraceKind::Optimality, ev.objective)
            }
            SubproblemStatus::Infeasible => {
                points.insert(a_hat.clone(), None);
                if let Some(mut cut) = ev.cut {
                    cut.source_iteration = iteration;
                    cuts.push(cut);
                }
                (TraceKind::Feasibility, ev.probe_value.unwrap_or(f64::NAN))
            }
            SubproblemStatus::SinrInfeasible => {
                return Err(Error::Infeasible("SINR targets cannot be met at any power".into()));
            }
            SubproblemStatus::NumericalFailure => {
                points.insert(a_hat.clone(), None);
                (TraceKind::Failure, f64::NAN)
            }
        };
        let mut row = TraceRow {
            iteration,
            lb,
            ub,
            kind,
            activation: a_hat.to_string(),
            subproblem_value: value,
            cumulative_socp_solves: solves,
            millis: 0,
        };

        let mut done = None;
        if kind == TraceKind::Optimality && value <= lb + opts.epsilon {
            done = Some(Termination::SubproblemBound);
        } else {
            match solve_master_with(&cuts, n, (lo, hi), &points) {
                None => {
                    if let Some(best) = incumbent {
                        // Only reachable if the incumbent itself sits above the box.
                        return Err(Error::IterationLimit { best: Some(Box::new(best)), lb, ub, iterations: iteration, solves });
                    }
                    return Err(Error::Infeasible("feasibility cuts exclude every activation".into()));
                }
                Some(m) => {
                    lb = lb.max(m.a0_hat);
                    row.lb = lb;
                    if ub <= m.a0_hat + opts.epsilon {
                        done = Some(Termination::MasterBound);
                    }
                    a_hat = m.a_hat;
                }
            }
        }
        row.millis = start.elapsed().as_millis();
        trace.push(row);
        if let Some(termination) = done {
            let solution = incumbent.expect("termination implies an incumbent");
            return Ok(BendersOutput { solution, lb, ub, iterations: iteration, solves, termination, trace, cuts });
        }
    }
    Err(Error::IterationLimit { best: incumbent.map(Box::new), lb, ub, iterations: trace.len(), solves })
}
