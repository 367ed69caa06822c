use num_complex::Complex64;

use super::{norm_sqr, ActivationVector, NetworkInstance};
use crate::error::{Error, Result};

/// Stacked beamformers together with their activation pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    /// `w[k]` has length `total_antennas()`.
    pub w: Vec<Vec<Complex64>>,
    /// Per-BS transmit power, watts.
    pub tx_power: Vec<f64>,
    /// Transmit power plus implementation power of active BSs.
    pub objective: f64,
    pub activation: ActivationVector,
}

impl BeamformingSolution {
    /// Builds a solution, zeroing the blocks of inactive BSs and recomputing
    /// the derived power figures.
    pub fn new(inst: &NetworkInstance, activation: ActivationVector, mut w: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = inst.total_antennas();
        if activation.len() != inst.num_bs() {
            return Err(Error::Dimension(format!(
                "activation has length {}, expected {}",
                activation.len(),
                inst.num_bs()
            )));
        }
        if w.len() != inst.num_users() || w.iter().any(|wk| wk.len() != n) {
            return Err(Error::Dimension(format!(
                "expected {} beamformers of length {n}",
                inst.num_users()
            )));
        }
        for l in 0..inst.num_bs() {
            if !activation.is_active(l) {
                let r = inst.block_range(l);
                for wk in w.iter_mut() {
                    wk[r.clone()].fill(Complex64::new(0.0, 0.0));
                }
            }
        }
        let tx_power: Vec<f64> = (0..inst.num_bs())
            .map(|l| {
                let r = inst.block_range(l);
                w.iter().map(|wk| norm_sqr(&wk[r.clone()])).sum()
            })
            .collect();
        let objective = tx_power.iter().sum::<f64>() + activation.dot(&inst.pi);
        Ok(Self { w, tx_power, objective, activation })
    }

    pub fn transmit_power(&self) -> f64 {
        self.tx_power.iter().sum()
    }

    /// Smallest `SINR_k / gamma_k - 1` over users; nonnegative iff all targets hold.
    pub fn min_sinr_margin(&self, inst: &NetworkInstance) -> f64 {
        (0..inst.num_users())
            .map(|k| super::eval_sinr(inst, self, k).map_or(f64::NEG_INFINITY, |s| s / inst.gamma[k] - 1.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `tx_power_l / (a_l P_l) - 1`, with inactive BSs counted as
    /// violating whenever they transmit.
    pub fn max_cap_excess(&self, inst: &NetworkInstance) -> f64 {
        (0..inst.num_bs())
            .map(|l| {
                if self.activation.is_active(l) {
                    self.tx_power[l] / inst.p_max[l] - 1.0
                } else if self.tx_power[l] > 0.0 {
                    f64::INFINITY
                } else {
                    -1.0
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Primal feasibility with relative SINR slack `sinr_tol` and cap slack `cap_tol`.
    pub fn is_feasible(&self, inst: &NetworkInstance, sinr_tol: f64, cap_tol: f64) -> bool {
        self.min_sinr_margin(inst) >= -sinr_tol && self.max_cap_excess(inst) <= cap_tol
    }
}
