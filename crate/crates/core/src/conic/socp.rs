//! Real-valued SOCP encodings of the beamforming subproblems.
//!
//! Every complex beamformer entry becomes an interleaved `(re, im)` pair of
//! columns. Blocks forbidden by the serving mask never get columns; blocks of
//! inactive BSs get *ghost* columns that are kept out of the engine but whose
//! coefficients are remembered so that the multiplier of the implicit
//! `w_lk = 0` constraint can be recovered after the solve.

use num_complex::Complex64;

use super::program::{AffineRow, ConeKind, ConeProgram};
use crate::error::Result;
use crate::model::{ActivationVector, NetworkInstance};
use crate::multicell::apply_serving_mask;

/// How the per-BS power terms enter the program.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerMode {
    /// Minimize transmit power subject to `||W_l||^2 <= a_l P_l`;
    /// inactive BSs are eliminated.
    Capped(ActivationVector),
    /// Minimize `t` subject to `||W_l||^2 <= caps_l + t`.
    Phase1 { caps: Vec<f64> },
    /// Minimize `sum_l weights_l ||W_l||^2` without caps.
    Weighted(Vec<f64>),
}

/// Column bookkeeping for one program.
#[derive(Debug, Clone)]
pub struct Layout {
    /// `start[k][l]`: first full column of block `(l, k)`, `None` if masked.
    start: Vec<Vec<Option<usize>>>,
    /// Full column -> engine column (`None` for ghosts).
    to_engine: Vec<Option<usize>>,
    /// BS owning each full column.
    owner: Vec<usize>,
    pub num_engine: usize,
    /// Engine column of the phase-1 slack.
    pub slack: Option<usize>,
}

impl Layout {
    fn new(inst: &NetworkInstance, eliminated: &[bool], with_slack: bool) -> Result<Self> {
        let mask = apply_serving_mask(inst)?;
        let (kk, ll) = (inst.num_users(), inst.num_bs());
        let mut start = vec![vec![None; ll]; kk];
        let mut to_engine = Vec::new();
        let mut owner = Vec::new();
        let mut num_engine = 0;
        for (k, row) in start.iter_mut().enumerate() {
            for (l, slot) in row.iter_mut().enumerate() {
                if !mask.allows(l, k) {
                    continue;
                }
                *slot = Some(to_engine.len());
                for _ in 0..2 * inst.antennas[l] {
                    owner.push(l);
                    if eliminated[l] {
                        to_engine.push(None);
                    } else {
                        to_engine.push(Some(num_engine));
                        num_engine += 1;
                    }
                }
            }
        }
        let slack = with_slack.then(|| {
            num_engine += 1;
            num_engine - 1
        });
        Ok(Self { start, to_engine, owner, num_engine, slack })
    }

    /// Full column of the real part of antenna `n` in block `(l, k)`.
    fn col(&self, k: usize, l: usize, n: usize) -> Option<usize> {
        self.start[k][l].map(|s| s + 2 * n)
    }

    /// Engine columns of BS `l` across all users, `(re, im)` interleaved.
    pub fn engine_cols_of_bs(&self, l: usize) -> Vec<usize> {
        self.owner
            .iter()
            .zip(&self.to_engine)
            .filter(|(&o, e)| o == l && e.is_some())
            .map(|(_, e)| e.unwrap())
            .collect()
    }

    /// Unpacks engine variables into stacked complex beamformers.
    pub fn beamformers(&self, inst: &NetworkInstance, x: &[f64]) -> Vec<Vec<Complex64>> {
        let n = inst.total_antennas();
        (0..inst.num_users())
            .map(|k| {
                let mut wk = vec![Complex64::new(0.0, 0.0); n];
                for l in 0..inst.num_bs() {
                    let base = inst.block_range(l).start;
                    for a in 0..inst.antennas[l] {
                        if let Some(c) = self.col(k, l, a) {
                            if let (Some(re), Some(im)) = (self.to_engine[c], self.to_engine[c + 1]) {
                                wk[base + a] = Complex64::new(x[re], x[im]);
                            }
                        }
                    }
                }
                wk
            })
            .collect()
    }
}

/// Affine rows over *full* columns; remapped to engine columns on insertion.
struct RowBuilder<'a> {
    layout: &'a Layout,
    /// `(engine row, full ghost column, coefficient)`.
    ghosts: Vec<(usize, usize, f64)>,
    next_row: usize,
}

impl RowBuilder<'_> {
    fn push(&mut self, program: &mut ConeProgram, kind: ConeKind, rows: Vec<Vec<(usize, f64)>>, constants: Vec<f64>, label: String) -> usize {
        let mut out = Vec::with_capacity(rows.len());
        for (i, (terms, c)) in rows.into_iter().zip(constants).enumerate() {
            let mut r = AffineRow::constant(c);
            for (full, coeff) in terms {
                match self.layout.to_engine.get(full).copied().flatten() {
                    Some(e) => r.add_term(e, coeff),
                    None if full < self.layout.to_engine.len() => {
                        if coeff != 0.0 {
                            self.ghosts.push((self.next_row + i, full, coeff));
                        }
                    }
                    None => unreachable!("column out of range"),
                }
            }
            out.push(r);
        }
        self.next_row += out.len();
        program.add_block(kind, out, label)
    }
}

/// Terms of `Re(h^H w)` and `Im(h^H w)` for user `i`'s beamformer, scaled.
fn channel_terms(
    inst: &NetworkInstance,
    layout: &Layout,
    k: usize,
    i: usize,
    scale: f64,
) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
    let (mut re, mut im) = (Vec::new(), Vec::new());
    for l in 0..inst.num_bs() {
        for (n, h) in inst.h[l][k].iter().enumerate() {
            if let Some(c) = layout.col(i, l, n) {
                // h^H w = (hr - j hi)(wr + j wi)
                re.push((c, scale * h.re));
                re.push((c + 1, scale * h.im));
                im.push((c, -scale * h.im));
                im.push((c + 1, scale * h.re));
            }
        }
    }
    (re, im)
}

/// A built nominal program plus the metadata needed to read its duals.
#[derive(Debug, Clone)]
pub struct NominalProgram {
    pub program: ConeProgram,
    pub layout: Layout,
    /// Block index of the power cone of each BS, if present.
    pub power_block: Vec<Option<usize>>,
    /// `(row, ghost full column, coefficient)` entries dropped by elimination.
    ghosts: Vec<(usize, usize, f64)>,
    /// Set when some user has no signal column, which empties the SINR set.
    pub trivially_infeasible: bool,
}

impl NominalProgram {
    /// Norm of the multiplier of `W_l = 0` for every eliminated BS, computed
    /// from stationarity in the ghost columns: `y = -A_ghost' z`.
    pub fn elimination_multipliers(&self, inst: &NetworkInstance, z: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.layout.to_engine.len()];
        for &(row, col, coeff) in &self.ghosts {
            y[col] += coeff * z[row];
        }
        let mut nu = vec![0.0; inst.num_bs()];
        for (col, v) in y.iter().enumerate() {
            nu[self.layout.owner[col]] += v * v;
        }
        nu.iter().map(|s| s.sqrt()).collect()
    }
}

/// Builds the real-valued SOCP for the given power mode.
pub fn build(inst: &NetworkInstance, mode: &PowerMode) -> Result<NominalProgram> {
    let (ll, kk) = (inst.num_bs(), inst.num_users());
    let eliminated: Vec<bool> = match mode {
        PowerMode::Capped(a) => (0..ll).map(|l| !a.is_active(l)).collect(),
        _ => vec![false; ll],
    };
    let layout = Layout::new(inst, &eliminated, matches!(mode, PowerMode::Phase1 { .. }))?;
    let mut program = ConeProgram::new(layout.num_engine);
    let mut rb = RowBuilder { layout: &layout, ghosts: Vec::new(), next_row: 0 };

    let mut trivially_infeasible = false;
    for k in 0..kk {
        let sigma = inst.sigma2[k].sqrt();
        let scale = 1.0 / sigma;
        let (sig_re, sig_im) = channel_terms(inst, &layout, k, k, scale);
        let has_signal = sig_re.iter().any(|&(c, _)| layout.to_engine[c].is_some());
        if !has_signal {
            trivially_infeasible = true;
        }
        let mut rows = vec![sig_re.iter().map(|&(c, v)| (c, v / inst.gamma[k].sqrt())).collect::<Vec<_>>()];
        let mut constants = vec![0.0];
        for i in (0..kk).filter(|&i| i != k) {
            let (re, im) = channel_terms(inst, &layout, k, i, scale);
            rows.push(re);
            rows.push(im);
            constants.push(0.0);
            constants.push(0.0);
        }
        rows.push(Vec::new());
        constants.push(1.0);
        rb.push(&mut program, ConeKind::Soc, rows, constants, format!("sinr{k}"));
        rb.push(&mut program, ConeKind::Zero, vec![sig_im], vec![0.0], format!("phase{k}"));
    }

    let mut power_block = vec![None; ll];
    match mode {
        PowerMode::Capped(a) => {
            for l in (0..ll).filter(|&l| a.is_active(l)) {
                power_block[l] = Some(push_power_cone(&mut program, &mut rb, l, inst.p_max[l], None));
            }
            for e in 0..layout.num_engine {
                program.quad.push((e, e, 2.0));
            }
        }
        PowerMode::Phase1 { caps } => {
            let t = layout.slack.expect("phase-1 layout has a slack column");
            for l in 0..ll {
                power_block[l] = Some(push_power_cone(&mut program, &mut rb, l, caps[l], Some(t)));
            }
            program.linear[t] = 1.0;
        }
        PowerMode::Weighted(weights) => {
            for l in 0..ll {
                if weights[l] != 0.0 {
                    for e in layout.engine_cols_of_bs(l) {
                        program.quad.push((e, e, 2.0 * weights[l]));
                    }
                }
            }
        }
    }
    let ghosts = rb.ghosts;
    Ok(NominalProgram { program, layout, power_block, ghosts, trivially_infeasible })
}

/// `||W_l||^2 <= cap (+ t)` as `||(2 W_l, cap + t - 1)|| <= cap + t + 1`.
fn push_power_cone(
    program: &mut ConeProgram,
    rb: &mut RowBuilder<'_>,
    l: usize,
    cap: f64,
    slack: Option<usize>,
) -> usize {
    let cols = rb.layout.engine_cols_of_bs(l);
    let with_t = |r: AffineRow| match slack {
        Some(t) => r.term(t, 1.0),
        None => r,
    };
    let mut rows = vec![with_t(AffineRow::constant(cap + 1.0))];
    rows.extend(cols.iter().map(|&c| AffineRow::default().term(c, 2.0)));
    rows.push(with_t(AffineRow::constant(cap - 1.0)));
    rb.next_row += rows.len();
    program.add_block(ConeKind::Soc, rows, format!("power{l}"))
}

/// Sensitivity multiplier of `||W_l||^2 <= c` from the rotated-cone duals:
/// `-dV/dc = z_0 + z_last`.
pub fn power_multiplier(z_block: &[f64]) -> f64 {
    z_block[0] + z_block[z_block.len() - 1]
}
