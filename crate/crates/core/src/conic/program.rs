//! Canonical cone program and the interior-point backend.
//!
//! Constraints are affine rows grouped into cone blocks: a block with rows
//! `e_1(x), ..., e_m(x)` requires `(e_1(x), ..., e_m(x))` to lie in the block's
//! cone. Dual multipliers `z` follow the convention
//! `grad f(x) = sum_i z_i grad e_i(x)` with `z` in the dual cone.

use std::fmt::{self, Write as _};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

/// `constant + sum coeff * x[var]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineRow {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl AffineRow {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn term(mut self, var: usize, coeff: f64) -> Self {
        if coeff != 0.0 {
            self.terms.push((var, coeff));
        }
        self
    }

    pub fn add_term(&mut self, var: usize, coeff: f64) {
        if coeff != 0.0 {
            self.terms.push((var, coeff));
        }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.constant *= s;
        for t in &mut self.terms {
            t.1 *= s;
        }
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    /// Every row equals zero.
    Zero,
    /// Every row is nonnegative.
    NonNeg,
    /// `row_0 >= ||(row_1, ..., row_m)||`.
    Soc,
    /// Rows are the column-major upper triangle of a symmetric matrix of the
    /// given order, off-diagonals scaled by `sqrt(2)`.
    Psd(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub rows: Vec<AffineRow>,
    /// Free-form tag used by debug dumps.
    pub label: String,
}

/// Minimize `0.5 x'Qx + c'x` subject to cone blocks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConeProgram {
    pub num_vars: usize,
    /// Upper-triangular entries of `Q`.
    pub quad: Vec<(usize, usize, f64)>,
    pub linear: Vec<f64>,
    pub blocks: Vec<ConeBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineSettings {
    /// Relative accuracy for gap and feasibility residuals.
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for EngineSettings {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EngineStatus {
    Solved,
    Infeasible,
    Unbounded,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct EngineSolution {
    pub status: EngineStatus,
    pub x: Vec<f64>,
    /// One multiplier per row, blocks concatenated in order.
    pub z: Vec<f64>,
    pub objective: f64,
}

impl EngineSolution {
    pub fn block_duals<'a>(&'a self, program: &ConeProgram, block: usize) -> &'a [f64] {
        let start: usize = program.blocks[..block].iter().map(|b| b.rows.len()).sum();
        &self.z[start..start + program.blocks[block].rows.len()]
    }
}

impl ConeProgram {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, quad: Vec::new(), linear: vec![0.0; num_vars], blocks: Vec::new() }
    }

    pub fn add_block(&mut self, kind: ConeKind, rows: Vec<AffineRow>, label: impl Into<String>) -> usize {
        self.blocks.push(ConeBlock { kind, rows, label: label.into() });
        self.blocks.len() - 1
    }

    /// Adds a PSD constraint on the symmetric matrix whose `(i, j)` entry,
    /// `i <= j`, is `entry(i, j)`.
    pub fn add_psd(
        &mut self,
        order: usize,
        mut entry: impl FnMut(usize, usize) -> AffineRow,
        label: impl Into<String>,
    ) -> usize {
        let mut rows = Vec::with_capacity(order * (order + 1) / 2);
        for j in 0..order {
            for i in 0..=j {
                let r = entry(i, j);
                rows.push(if i == j { r } else { r.scaled(std::f64::consts::SQRT_2) });
            }
        }
        self.add_block(ConeKind::Psd(order), rows, label)
    }

    pub fn num_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.rows.len()).sum()
    }

    pub fn count_blocks(&self, kind: fn(&ConeKind) -> bool) -> usize {
        self.blocks.iter().filter(|b| kind(&b.kind)).count()
    }

    /// Checks dimensions and variable references.
    pub fn check(&self) -> Result<(), String> {
        if self.linear.len() != self.num_vars {
            return Err(format!("objective has {} entries for {} variables", self.linear.len(), self.num_vars));
        }
        if let Some(&(i, j, _)) = self.quad.iter().find(|&&(i, j, _)| i > j || j >= self.num_vars) {
            return Err(format!("quadratic entry ({i}, {j}) out of range or below diagonal"));
        }
        for b in &self.blocks {
            let expected = match b.kind {
                ConeKind::Psd(n) => Some(n * (n + 1) / 2),
                ConeKind::Soc => None,
                _ => None,
            };
            if let Some(e) = expected {
                if b.rows.len() != e {
                    return Err(format!("block '{}' has {} rows, expected {e}", b.label, b.rows.len()));
                }
            }
            if b.kind == ConeKind::Soc && b.rows.is_empty() {
                return Err(format!("block '{}' is an empty cone", b.label));
            }
            for r in &b.rows {
                if let Some(&(j, _)) = r.terms.iter().find(|&&(j, _)| j >= self.num_vars) {
                    return Err(format!("block '{}' references variable {j}", b.label));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let quad: f64 = self
            .quad
            .iter()
            .map(|&(i, j, v)| if i == j { 0.5 * v * x[i] * x[i] } else { v * x[i] * x[j] })
            .sum();
        quad + self.linear.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Runs the interior-point method.
    pub fn solve(&self, settings: &EngineSettings) -> EngineSolution {
        if let Err(e) = self.check() {
            return EngineSolution { status: EngineStatus::Failed(e), x: vec![], z: vec![], objective: f64::NAN };
        }
        let n = self.num_vars;
        let m = self.num_rows();
        let (mut pi, mut pj, mut pv) = (Vec::new(), Vec::new(), Vec::new());
        for &(i, j, v) in &self.quad {
            pi.push(i);
            pj.push(j);
            pv.push(v);
        }
        let p = CscMatrix::new_from_triplets(n, n, pi, pj, pv);

        // Engine form: A x + s = b, s in K; with s = e(x) this is A = -coeff, b = constant.
        let (mut ai, mut aj, mut av) = (Vec::new(), Vec::new(), Vec::new());
        let mut b = Vec::with_capacity(m);
        let mut cones = Vec::with_capacity(self.blocks.len());
        let mut row = 0;
        for blk in &self.blocks {
            for r in &blk.rows {
                for &(j, c) in &r.terms {
                    ai.push(row);
                    aj.push(j);
                    av.push(-c);
                }
                b.push(r.constant);
                row += 1;
            }
            let dim = blk.rows.len();
            cones.push(match blk.kind {
                ConeKind::Zero => SupportedConeT::ZeroConeT(dim),
                ConeKind::NonNeg => SupportedConeT::NonnegativeConeT(dim),
                ConeKind::Soc => SupportedConeT::SecondOrderConeT(dim),
                ConeKind::Psd(order) => SupportedConeT::PSDTriangleConeT(order),
            });
        }
        let a = CscMatrix::new_from_triplets(m, n, ai, aj, av);

        let engine_settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(settings.max_iter)
            .tol_gap_abs(settings.tol)
            .tol_gap_rel(settings.tol)
            .tol_feas(settings.tol)
            .direct_solve_method("faer".into())
            .tol_infeas_abs(settings.tol)
            .tol_infeas_rel(settings.tol)
            .presolve_enable(false)
            .build()
            .expect("engine settings are valid");
        let mut solver = match DefaultSolver::new(&p, &self.linear, &a, &b, &cones, engine_settings) {
            Ok(s) => s,
            Err(e) => {
                return EngineSolution {
                    status: EngineStatus::Failed(format!("{e:?}")),
                    x: vec![],
                    z: vec![],
                    objective: f64::NAN,
                }
            }
        };
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => EngineStatus::Solved,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => EngineStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => EngineStatus::Unbounded,
            other => EngineStatus::Failed(format!("{other:?}")),
        };
        EngineSolution { status, x: sol.x.clone(), z: sol.z.clone(), objective: sol.obj_val }
    }

    /// Solves in the variables `x / unit`. Multipliers and the objective are
    /// unchanged by the substitution; `x` is mapped back.
    pub fn solve_in_units(&self, settings: &EngineSettings, unit: f64) -> EngineSolution {
        let mut scaled = self.clone();
        scaled.quad.iter_mut().for_each(|q| q.2 *= unit * unit);
        scaled.linear.iter_mut().for_each(|c| *c *= unit);
        for blk in &mut scaled.blocks {
            for r in &mut blk.rows {
                r.terms.iter_mut().for_each(|t| t.1 *= unit);
            }
        }
        let mut sol = scaled.solve(settings);
        sol.x.iter_mut().for_each(|v| *v *= unit);
        sol
    }
}

impl fmt::Display for ConeProgram {
    /// Sparse text dump: a header line, the objective, then one constraint per
    /// line as `<cone> <label> | row ; row ; ...` with rows written
    /// `c [+ coeff*x<j>]...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars {} rows {} blocks {}", self.num_vars, self.num_rows(), self.blocks.len())?;
        let mut obj = String::from("objective");
        for &(i, j, v) in &self.quad {
            write!(obj, " q({i},{j})={v:e}").unwrap();
        }
        for (j, &c) in self.linear.iter().enumerate().filter(|(_, c)| **c != 0.0) {
            write!(obj, " c({j})={c:e}").unwrap();
        }
        writeln!(f, "{obj}")?;
        for b in &self.blocks {
            let kind = match b.kind {
                ConeKind::Zero => "zero".to_string(),
                ConeKind::NonNeg => "nonneg".to_string(),
                ConeKind::Soc => "soc".to_string(),
                ConeKind::Psd(n) => format!("psd{n}"),
            };
            let rows: Vec<String> = b
                .rows
                .iter()
                .map(|r| {
                    let mut s = format!("{:e}", r.constant);
                    for &(j, c) in &r.terms {
                        write!(s, " + {c:e}*x{j}").unwrap();
                    }
                    s
                })
                .collect();
            writeln!(f, "{kind} {} | {}", b.label, rows.join(" ; "))?;
        }
        Ok(())
    }
}
