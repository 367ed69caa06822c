//! Worst-case SINR design under bounded channel errors.
//!
//! With `X_k = w_k w_k^H` and the rank constraint dropped, the requirement
//! `SINR_k >= gamma_k` for every `h_k = h~_k + d`, `||d|| <= xi_k`, becomes by
//! the S-procedure the linear matrix inequality
//!
//! ```text
//! [ Y_k + tau_k I      Y_k g_k             ]
//! [ g_k^H Y_k          g_k^H Y_k g_k - 1 - tau_k rho_k^2 ]  >= 0,   tau_k >= 0,
//! ```
//!
//! with `Y_k = X_k / gamma_k - sum_{i != k} X_i`, written here in units of the
//! noise: `g_k = h~_k / sigma_k` and `rho_k = xi_k / sigma_k`. Hermitian
//! blocks are handed to the engine through the real embedding
//! `[[Re, -Im], [Im, Re]]`. At `xi_k = 0` the LMI is replaced by its limit
//! `g_k^H Y_k g_k >= 1`.

mod recovery;

pub use recovery::{
    extract_rank_one, monte_carlo_violations, randomized_rounding, scale_to_robust_feasibility, worst_case_margin,
    RANK_ONE_RATIO,
};

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::Value;

use crate::benders::{Cut, CutKind, Evaluation, Subproblem};
use crate::conic::{AffineRow, ConeKind, ConeProgram, EngineSettings, EngineStatus, SubproblemStatus};
use crate::error::{Error, Result};
use crate::model::io::{decode_vec, encode_vec, InstanceFile};
use crate::model::{ActivationVector, BeamformingSolution, NetworkInstance};
use crate::multicell::apply_serving_mask;

/// Instance with channel estimates and per-user uncertainty radii.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustInstance {
    pub inst: NetworkInstance,
    /// Stacked channel estimate of each user.
    pub h_tilde: Vec<Vec<Complex64>>,
    /// Euclidean radius of each user's uncertainty ball.
    pub xi: Vec<f64>,
}

impl RobustInstance {
    pub fn new(inst: NetworkInstance, h_tilde: Vec<Vec<Complex64>>, xi: Vec<f64>) -> Result<Self> {
        let r = Self { inst, h_tilde, xi };
        r.validate()?;
        Ok(r)
    }

    /// Estimates equal to the instance channels, `xi_k = theta ||h_k||`.
    pub fn from_theta(inst: &NetworkInstance, theta: f64) -> Result<Self> {
        let h_tilde: Vec<Vec<Complex64>> = (0..inst.num_users()).map(|k| inst.stacked_channel(k)).collect();
        let xi = h_tilde.iter().map(|h| theta * crate::model::norm_sqr(h).sqrt()).collect();
        Self::new(inst.clone(), h_tilde, xi)
    }

    pub fn validate(&self) -> Result<()> {
        self.inst.validate()?;
        let (k, n) = (self.inst.num_users(), self.inst.total_antennas());
        if self.h_tilde.len() != k || self.h_tilde.iter().any(|h| h.len() != n) {
            return Err(Error::InvalidInstance(format!("h_tilde must hold {k} vectors of length {n}")));
        }
        if self.xi.len() != k {
            return Err(Error::InvalidInstance(format!("xi has length {}, expected {k}", self.xi.len())));
        }
        if let Some(i) = self.xi.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidInstance(format!("xi[{i}] must be finite and nonnegative")));
        }
        Ok(())
    }

    /// Estimate in noise units, `h~_k / sigma_k`.
    fn g(&self, k: usize) -> Vec<Complex64> {
        let s = self.inst.sigma2[k].sqrt();
        self.h_tilde[k].iter().map(|h| h / s).collect()
    }

    /// Radius in noise units, `xi_k / sigma_k`.
    fn rho(&self, k: usize) -> f64 {
        self.xi[k] / self.inst.sigma2[k].sqrt()
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(InstanceFile::from(&self.inst)).expect("instance serializes");
        let map = v.as_object_mut().expect("object");
        map.insert("h_tilde".into(), serde_json::to_value(self.h_tilde.iter().map(|h| encode_vec(h)).collect::<Vec<_>>()).expect("h_tilde"));
        map.insert("xi".into(), serde_json::to_value(&self.xi).expect("xi"));
        serde_json::to_string(&v).expect("robust instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut v: Value = serde_json::from_str(s)?;
        let map = v
            .as_object_mut()
            .ok_or_else(|| Error::InvalidInstance("robust instance must be a JSON object".into()))?;
        let take = |map: &mut serde_json::Map<String, Value>, key: &str| {
            map.remove(key).ok_or_else(|| Error::InvalidInstance(format!("missing field `{key}`")))
        };
        let h_tilde: Vec<Vec<[f64; 2]>> = serde_json::from_value(take(map, "h_tilde")?)?;
        let xi: Vec<f64> = serde_json::from_value(take(map, "xi")?)?;
        let base: InstanceFile = serde_json::from_value(v)?;
        Self::new(base.try_into()?, h_tilde.iter().map(|h| decode_vec(h)).collect(), xi)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = self.to_json();
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// How the per-BS power terms enter the SDP; mirrors the nominal modes.
#[derive(Debug, Clone, PartialEq)]
pub enum RobustMode {
    /// Minimize `sum_k tr(X_k)` with `tr(B_l X) <= a_l P_l`; inactive BSs eliminated.
    Capped(ActivationVector),
    /// Minimize `t` with `tr(B_l X) <= caps_l + t` for every BS.
    Phase1 { caps: Vec<f64> },
    /// Minimize `sum_l weights_l tr(B_l X)` without caps.
    Weighted(Vec<f64>),
}

/// Real and imaginary parts of an affine complex expression.
#[derive(Debug, Clone, Default)]
struct CAff {
    re: AffineRow,
    im: AffineRow,
}

fn axpy(dst: &mut AffineRow, s: f64, src: &AffineRow) {
    if s == 0.0 {
        return;
    }
    dst.constant += s * src.constant;
    for &(v, c) in &src.terms {
        dst.terms.push((v, s * c));
    }
}

/// Merges repeated variables.
fn compact(row: AffineRow) -> AffineRow {
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    for (v, c) in row.terms {
        *acc.entry(v).or_insert(0.0) += c;
    }
    AffineRow { constant: row.constant, terms: acc.into_iter().filter(|&(_, c)| c != 0.0).collect() }
}

impl CAff {
    /// `self += s * x`, `s` real.
    fn add_scaled(&mut self, s: f64, x: &CAff) {
        axpy(&mut self.re, s, &x.re);
        axpy(&mut self.im, s, &x.im);
    }

    /// `self += c * x`, `c` complex.
    fn add_mul(&mut self, c: Complex64, x: &CAff) {
        axpy(&mut self.re, c.re, &x.re);
        axpy(&mut self.re, -c.im, &x.im);
        axpy(&mut self.im, c.im, &x.re);
        axpy(&mut self.im, c.re, &x.im);
    }

    fn conj(&self) -> CAff {
        CAff { re: self.re.clone(), im: self.im.clone().scaled(-1.0) }
    }
}

/// Variable bookkeeping of one robust SDP.
#[derive(Debug, Clone)]
pub struct RobustLayout {
    /// Full antenna indices carried by the program.
    pub active: Vec<usize>,
    /// `support[k]`: positions in `active` that user `k` may use.
    pub support: Vec<Vec<usize>>,
    /// `xvars[k][(p, q)]`, `p <= q` local indices: `(re, im)`; `im` is `None` on the diagonal.
    xvars: Vec<BTreeMap<(usize, usize), (usize, Option<usize>)>>,
    pub tau: Vec<Option<usize>>,
    pub slack: Option<usize>,
    pub num_vars: usize,
}

impl RobustLayout {
    fn x_entry(&self, k: usize, p: usize, q: usize) -> CAff {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let (re, im) = self.xvars[k][&(lo, hi)];
        let e = CAff {
            re: AffineRow::default().term(re, 1.0),
            im: im.map_or_else(AffineRow::default, |v| AffineRow::default().term(v, 1.0)),
        };
        if p <= q {
            e
        } else {
            e.conj()
        }
    }

    /// Unpacks `X_k` into full-dimension Hermitian matrices.
    pub fn matrices(&self, n: usize, x: &[f64]) -> Vec<DMatrix<Complex64>> {
        (0..self.support.len())
            .map(|k| {
                let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
                let sup = &self.support[k];
                for (&(p, q), &(re, im)) in &self.xvars[k] {
                    let v = Complex64::new(x[re], im.map_or(0.0, |i| x[i]));
                    let (a, b) = (self.active[sup[p]], self.active[sup[q]]);
                    m[(a, b)] = v;
                    m[(b, a)] = v.conj();
                }
                m
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RobustProgram {
    pub program: ConeProgram,
    pub layout: RobustLayout,
    /// Block index of the power row of each BS, if present.
    pub power_block: Vec<Option<usize>>,
    /// Some user has no usable antenna, so the SINR set is empty.
    pub trivially_infeasible: bool,
}

/// Adds the PSD constraint on the real embedding of a Hermitian matrix.
fn add_hermitian_psd(program: &mut ConeProgram, m: usize, entry: impl Fn(usize, usize) -> CAff, label: String) -> usize {
    program.add_psd(
        2 * m,
        |i, j| {
            let row = match (i < m, j < m) {
                (true, true) => entry(i, j).re,
                (true, false) => entry(i, j - m).im.scaled(-1.0),
                (false, false) => entry(i - m, j - m).re,
                (false, true) => unreachable!("upper triangle only"),
            };
            compact(row)
        },
        label,
    )
}

/// Builds the robust SDP for the given power mode.
pub fn build_robust_program(rinst: &RobustInstance, mode: &RobustMode) -> Result<RobustProgram> {
    let inst = &rinst.inst;
    let (ll, kk) = (inst.num_bs(), inst.num_users());
    let mask = apply_serving_mask(inst)?;
    let present: Vec<bool> = match mode {
        RobustMode::Capped(a) => (0..ll).map(|l| a.is_active(l)).collect(),
        _ => vec![true; ll],
    };
    let mut active = Vec::new();
    let mut owner = Vec::new();
    for l in (0..ll).filter(|&l| present[l]) {
        for n in inst.block_range(l) {
            active.push(n);
            owner.push(l);
        }
    }
    let support: Vec<Vec<usize>> =
        (0..kk).map(|k| (0..active.len()).filter(|&p| mask.allows(owner[p], k)).collect()).collect();
    let trivially_infeasible = support.iter().any(|s| s.is_empty());

    let mut num_vars = 0;
    let mut next = || {
        num_vars += 1;
        num_vars - 1
    };
    let mut xvars = Vec::with_capacity(kk);
    for sup in &support {
        let mut map = BTreeMap::new();
        for q in 0..sup.len() {
            for p in 0..=q {
                let re = next();
                let im = (p != q).then(&mut next);
                map.insert((p, q), (re, im));
            }
        }
        xvars.push(map);
    }
    let tau: Vec<Option<usize>> = (0..kk).map(|k| (rinst.xi[k] > 0.0).then(&mut next)).collect();
    let slack = matches!(mode, RobustMode::Phase1 { .. }).then(&mut next);
    let layout = RobustLayout { active, support, xvars, tau, slack, num_vars };
    let mut program = ConeProgram::new(layout.num_vars);
    let na = layout.active.len();

    for k in 0..kk {
        // Embedding of X_k itself.
        let m = layout.support[k].len();
        if m > 0 {
            add_hermitian_psd(&mut program, m, |p, q| layout.x_entry(k, p, q), format!("x{k}"));
        }
        if na == 0 {
            continue;
        }
        // Y_k over all active antennas.
        let mut pos: Vec<Vec<Option<usize>>> = vec![vec![None; na]; kk];
        for (i, sup) in layout.support.iter().enumerate() {
            for (local, &p) in sup.iter().enumerate() {
                pos[i][p] = Some(local);
            }
        }
        let mut y = vec![vec![CAff::default(); na]; na];
        for (a, row) in y.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                for i in 0..kk {
                    if let (Some(p), Some(q)) = (pos[i][a], pos[i][b]) {
                        let s = if i == k { 1.0 / inst.gamma[k] } else { -1.0 };
                        cell.add_scaled(s, &layout.x_entry(i, p, q));
                    }
                }
            }
        }
        let g: Vec<Complex64> = {
            let full = rinst.g(k);
            layout.active.iter().map(|&n| full[n]).collect()
        };
        let mut yg = vec![CAff::default(); na];
        for (a, out) in yg.iter_mut().enumerate() {
            for b in 0..na {
                out.add_mul(g[b], &y[a][b]);
            }
        }
        let mut gyg = AffineRow::constant(-1.0);
        for a in 0..na {
            // Re(conj(g_a) * (Y g)_a)
            axpy(&mut gyg, g[a].re, &yg[a].re);
            axpy(&mut gyg, g[a].im, &yg[a].im);
        }
        match layout.tau[k] {
            None => {
                program.add_block(ConeKind::NonNeg, vec![compact(gyg)], format!("sinr{k}"));
            }
            Some(t) => {
                let rho2 = rinst.rho(k).powi(2);
                let corner = CAff { re: gyg.term(t, -rho2), im: AffineRow::default() };
                let entry = |p: usize, q: usize| -> CAff {
                    match (p < na, q < na) {
                        (true, true) => {
                            let mut e = y[p][q].clone();
                            if p == q {
                                e.re.add_term(t, 1.0);
                            }
                            e
                        }
                        (true, false) => yg[p].clone(),
                        (false, true) => yg[q].conj(),
                        (false, false) => corner.clone(),
                    }
                };
                add_hermitian_psd(&mut program, na + 1, entry, format!("gamma{k}"));
                program.add_block(ConeKind::NonNeg, vec![AffineRow::default().term(t, 1.0)], format!("tau{k}"));
            }
        }
    }

    // tr(B_l X) over all users.
    let bs_trace = |l: usize| {
        let mut r = AffineRow::default();
        for k in 0..kk {
            for (local, &p) in layout.support[k].iter().enumerate() {
                if owner[p] == l {
                    r.add_term(layout.xvars[k][&(local, local)].0, 1.0);
                }
            }
        }
        r
    };
    let mut power_block = vec![None; ll];
    match mode {
        RobustMode::Capped(_) => {
            for l in (0..ll).filter(|&l| present[l]) {
                let row = bs_trace(l).scaled(-1.0);
                let row = AffineRow { constant: inst.p_max[l], ..row };
                power_block[l] = Some(program.add_block(ConeKind::NonNeg, vec![row], format!("power{l}")));
                for (v, c) in bs_trace(l).terms {
                    program.linear[v] += c;
                }
            }
        }
        RobustMode::Phase1 { caps } => {
            let t = layout.slack.expect("phase-1 slack");
            for l in 0..ll {
                let row = AffineRow { constant: caps[l], ..bs_trace(l).scaled(-1.0) }.term(t, 1.0);
                power_block[l] = Some(program.add_block(ConeKind::NonNeg, vec![row], format!("power{l}")));
            }
            program.linear[t] = 1.0;
        }
        RobustMode::Weighted(weights) => {
            for l in 0..ll {
                for (v, c) in bs_trace(l).terms {
                    program.linear[v] += weights[l] * c;
                }
            }
        }
    }
    Ok(RobustProgram { program, layout, power_block, trivially_infeasible })
}

/// The fixed-activation robust SDP.
pub fn build_robust_subproblem(rinst: &RobustInstance, a: &ActivationVector) -> Result<ConeProgram> {
    Ok(build_robust_program(rinst, &RobustMode::Capped(a.clone()))?.program)
}

/// Optimal point of a robust SDP.
#[derive(Debug, Clone)]
pub struct RobustSolution {
    /// Full-dimension Hermitian `X_k`.
    pub x: Vec<DMatrix<Complex64>>,
    pub tau: Vec<f64>,
    /// Rank-one beamformers, when every `X_k` passed the ratio test.
    pub w: Option<Vec<Vec<Complex64>>>,
    /// `sum_k tr(X_k) + a'pi`.
    pub objective: f64,
    /// `lambda_2 / lambda_1` per user.
    pub rank_report: Vec<f64>,
    pub activation: ActivationVector,
}

impl RobustSolution {
    pub fn trace_power(&self) -> f64 {
        self.x.iter().map(|m| m.trace().re).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RobustOutcome {
    pub status: SubproblemStatus,
    pub solution: Option<RobustSolution>,
    /// Multipliers of the trace caps of active BSs.
    pub mu: Vec<f64>,
    /// Simplex-normalized certificate (Infeasible only).
    pub lambda: Vec<f64>,
    /// `sum_k tr(X_k)` when optimal.
    pub value: f64,
    pub probe_value: Option<f64>,
    pub solves: usize,
}

impl RobustOutcome {
    fn bare(status: SubproblemStatus, l: usize, solves: usize) -> Self {
        Self { status, solution: None, mu: vec![0.0; l], lambda: Vec::new(), value: f64::NAN, probe_value: None, solves }
    }
}

fn run(rp: &RobustProgram, unit: f64, tol: f64) -> (crate::conic::EngineSolution, usize) {
    use crate::conic::EngineSolution;
    if rp.trivially_infeasible {
        return (EngineSolution { status: EngineStatus::Infeasible, x: vec![], z: vec![], objective: f64::NAN }, 0);
    }
    let settings = EngineSettings { tol, ..EngineSettings::default() };
    let mut solves = 0;
    let mut last = None;
    for f in UNIT_LADDER {
        let sol = rp.program.solve_in_units(&settings, f * unit);
        solves += 1;
        if !matches!(sol.status, EngineStatus::Failed(_)) {
            return (sol, solves);
        }
        last = Some(sol);
    }
    (last.expect("ladder is nonempty"), solves)
}

/// Multiples of the power unit tried in turn when the engine stalls.
const UNIT_LADDER: [f64; 3] = [10.0, 3.0, 30.0];

/// Total matched-filter power `sum_k gamma_k / ||g_k||^2`, the variable unit
/// of the robust programs.
fn power_unit(rinst: &RobustInstance) -> f64 {
    let u: f64 = (0..rinst.inst.num_users())
        .map(|k| rinst.inst.gamma[k] / crate::model::norm_sqr(&rinst.g(k)).max(f64::MIN_POSITIVE))
        .sum();
    if u.is_finite() && u > 0.0 {
        u
    } else {
        1.0
    }
}

/// Solves the robust SDP at `a`; on infeasibility runs the phase-1 probe.
pub fn solve_robust_fixed(rinst: &RobustInstance, a: &ActivationVector, tol: f64) -> Result<RobustOutcome> {
    let inst = &rinst.inst;
    if a.len() != inst.num_bs() {
        return Err(Error::Dimension(format!("activation of length {} for {} BSs", a.len(), inst.num_bs())));
    }
    let l = inst.num_bs();
    let rp = build_robust_program(rinst, &RobustMode::Capped(a.clone()))?;
    let (sol, solves) = run(&rp, power_unit(rinst), tol);
    match sol.status {
        EngineStatus::Solved => {
            let x = rp.layout.matrices(inst.total_antennas(), &sol.x);
            let mut mu = vec![0.0; l];
            for (bs, blk) in rp.power_block.iter().enumerate() {
                if let Some(b) = blk {
                    mu[bs] = sol.block_duals(&rp.program, *b)[0].max(0.0);
                }
            }
            let tau = rp.layout.tau.iter().map(|t| t.map_or(0.0, |v| sol.x[v])).collect();
            let mut ranks = Vec::with_capacity(x.len());
            let mut ws = Vec::with_capacity(x.len());
            for m in &x {
                match extract_rank_one(m, RANK_ONE_RATIO) {
                    Ok(w) => {
                        ranks.push(recovery::eigen_ratio(m));
                        ws.push(Some(w));
                    }
                    Err(Error::NotRankOne { ratio }) => {
                        ranks.push(ratio);
                        ws.push(None);
                    }
                    Err(e) => return Err(e),
                }
            }
            let w = ws.into_iter().collect::<Option<Vec<_>>>();
            let value: f64 = x.iter().map(|m| m.trace().re).sum();
            let solution = RobustSolution {
                x,
                tau,
                w,
                objective: value + a.dot(&inst.pi),
                rank_report: ranks,
                activation: a.clone(),
            };
            let mut out = RobustOutcome::bare(SubproblemStatus::Optimal, l, solves);
            out.value = value;
            out.solution = Some(solution);
            out.mu = mu;
            Ok(out)
        }
        EngineStatus::Infeasible => {
            let caps = (0..l).map(|b| if a.is_active(b) { inst.p_max[b] } else { 0.0 }).collect();
            match robust_probe(rinst, caps, tol) {
                Ok((t, lambda, n)) if t > 0.0 => {
                    let mut out = RobustOutcome::bare(SubproblemStatus::Infeasible, l, solves + n);
                    out.lambda = lambda;
                    out.probe_value = Some(t);
                    Ok(out)
                }
                Ok((t, _, n)) => {
                    let mut out = RobustOutcome::bare(SubproblemStatus::NumericalFailure, l, solves + n);
                    out.probe_value = Some(t);
                    Ok(out)
                }
                Err(Error::SinrInfeasible) => Ok(RobustOutcome::bare(SubproblemStatus::SinrInfeasible, l, solves + 1)),
                Err(e) => Err(e),
            }
        }
        _ => Ok(RobustOutcome::bare(SubproblemStatus::NumericalFailure, l, solves)),
    }
}

/// Phase-1 SDP: `(t*, simplex duals, solves)`.
fn robust_probe(rinst: &RobustInstance, caps: Vec<f64>, tol: f64) -> Result<(f64, Vec<f64>, usize)> {
    let rp = build_robust_program(rinst, &RobustMode::Phase1 { caps })?;
    let (sol, solves) = run(&rp, power_unit(rinst), tol);
    match sol.status {
        EngineStatus::Solved => {
            let raw: Vec<f64> = rp
                .power_block
                .iter()
                .map(|b| sol.block_duals(&rp.program, b.expect("all BSs present"))[0].max(0.0))
                .collect();
            let total: f64 = raw.iter().sum();
            if !(total > 0.0) {
                return Err(Error::NumericalFailure("phase-1 duals vanish".into()));
            }
            let t = sol.x[rp.layout.slack.expect("slack")];
            Ok((t, raw.iter().map(|v| v / total).collect(), solves))
        }
        EngineStatus::Infeasible => Err(Error::SinrInfeasible),
        other => Err(Error::NumericalFailure(format!("robust phase-1 probe: {other:?}"))),
    }
}

/// `min sum_l weights_l tr(B_l X)` over the robust SINR set: `(value, solves)`.
pub fn robust_weighted_min(rinst: &RobustInstance, weights: &[f64], tol: f64) -> Result<(f64, usize)> {
    if weights.len() != rinst.inst.num_bs() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidInstance("weights must be finite, nonnegative, one per BS".into()));
    }
    let rp = build_robust_program(rinst, &RobustMode::Weighted(weights.to_vec()))?;
    let (sol, solves) = run(&rp, power_unit(rinst), tol);
    match sol.status {
        EngineStatus::Solved => Ok((rp.program.objective_value(&sol.x), solves)),
        EngineStatus::Infeasible => Err(Error::SinrInfeasible),
        other => Err(Error::NumericalFailure(format!("robust weighted minimization: {other:?}"))),
    }
}

/// Beamformers for a solved robust SDP: the rank-one factors if available,
/// otherwise randomized rounding. Either way the result is scaled to exact
/// worst-case feasibility.
pub fn recover_beamformers(rinst: &RobustInstance, sol: &RobustSolution, samples: usize, seed: u64) -> Result<BeamformingSolution> {
    let a = &sol.activation;
    match &sol.w {
        Some(w) => {
            let w = scale_to_robust_feasibility(rinst, w.clone()).ok_or(Error::RoundingFailed { samples: 0 })?;
            let out = BeamformingSolution::new(&rinst.inst, a.clone(), w)?;
            if out.max_cap_excess(&rinst.inst) > 1e-6 {
                return randomized_rounding(rinst, a, &sol.x, samples, seed);
            }
            Ok(out)
        }
        None => randomized_rounding(rinst, a, &sol.x, samples, seed),
    }
}

/// Factor on the cap multipliers used for eliminated BSs in robust cuts.
pub const PENALTY_FACTOR: f64 = 10.0;

/// Robust SDP subproblem for the decomposition loop.
///
/// Optimality cuts use the trace-cap duals for active BSs and a large
/// penalty multiplier `M` for eliminated ones; the constant `C1` is then
/// obtained by an explicit weighted SDP solve, which keeps the cut a valid
/// lower bound by weak duality although it need not be tight.
#[derive(Debug, Clone)]
pub struct RobustSubproblem<'a> {
    pub rinst: &'a RobustInstance,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Subproblem for RobustSubproblem<'_> {
    fn num_bs(&self) -> usize {
        self.rinst.inst.num_bs()
    }

    fn pi(&self) -> &[f64] {
        &self.rinst.inst.pi
    }

    fn p_max(&self) -> &[f64] {
        &self.rinst.inst.p_max
    }

    fn evaluate(&self, a: &ActivationVector) -> Result<Evaluation> {
        let inst = &self.rinst.inst;
        let out = solve_robust_fixed(self.rinst, a, self.tol)?;
        let mut ev = Evaluation {
            status: out.status,
            objective: f64::NAN,
            solution: None,
            cut: None,
            probe_value: out.probe_value,
            solves: out.solves,
            message: None,
        };
        match out.status {
            SubproblemStatus::Optimal => {
                let sol = out.solution.as_ref().expect("optimal");
                match recover_beamformers(self.rinst, sol, self.samples, self.seed) {
                    Ok(bf) => ev.solution = Some(bf),
                    Err(e) => {
                        ev.status = SubproblemStatus::NumericalFailure;
                        ev.message = Some(e.to_string());
                        return Ok(ev);
                    }
                }
                let big = PENALTY_FACTOR
                    * out
                        .mu
                        .iter()
                        .cloned()
                        .chain(inst.pi.iter().zip(&inst.p_max).map(|(pi, p)| pi / p))
                        .fold(0.0, f64::max);
                let mu: Vec<f64> = (0..inst.num_bs()).map(|l| if a.is_active(l) { out.mu[l] } else { big }).collect();
                let weights: Vec<f64> = mu.iter().map(|m| 1.0 + m).collect();
                let (c1, n) = robust_weighted_min(self.rinst, &weights, self.tol)?;
                ev.solves += n;
                let coeff = (0..inst.num_bs()).map(|l| inst.pi[l] - mu[l] * inst.p_max[l]).collect();
                ev.cut = Some(Cut { kind: CutKind::Optimality, coeff, constant: c1, source_iteration: 0 });
                ev.objective = sol.objective;
            }
            SubproblemStatus::Infeasible => match robust_weighted_min(self.rinst, &out.lambda, self.tol) {
                Ok((c2, n)) => {
                    ev.solves += n;
                    let coeff = out.lambda.iter().zip(&inst.p_max).map(|(l, p)| l * p).collect();
                    ev.cut = Some(Cut { kind: CutKind::Feasibility, coeff, constant: c2, source_iteration: 0 });
                }
                Err(Error::SinrInfeasible) => ev.status = SubproblemStatus::SinrInfeasible,
                Err(e) => return Err(e),
            },
            _ => {}
        }
        Ok(ev)
    }
}

#[cfg(test)]
mod tests;
