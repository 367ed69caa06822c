//! Problem data for joint base-station activation and coordinated beamforming.
//!
//! A [`NetworkInstance`] holds everything the solvers need: per-link channel
//! vectors, per-user SINR targets and noise powers, per-BS power caps and
//! implementation powers. Beamformers are stored stacked per user, i.e. user
//! `k`'s vector concatenates the blocks of every BS in index order; the block
//! of BS `l` occupies [`NetworkInstance::block_range`].

mod activation;
mod hexnet;
pub(crate) mod io;
mod solution;

pub use activation::ActivationVector;
pub use hexnet::{generate_hexnet, ChannelConfig, PowerModel, ShadowingConvention};
pub use solution::BeamformingSolution;

use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Full problem datum for one network snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    /// Antennas per BS.
    pub antennas: Vec<usize>,
    /// Linear SINR target per user.
    pub gamma: Vec<f64>,
    /// Noise power per user, watts.
    pub sigma2: Vec<f64>,
    /// Transmit power cap per BS, watts.
    pub p_max: Vec<f64>,
    /// Incremental implementation power of an active BS.
    pub pi: Vec<f64>,
    pub cell_of_bs: Vec<usize>,
    pub cell_of_user: Vec<usize>,
    /// `h[l][k]` is the channel from BS `l` to user `k`, length `antennas[l]`.
    pub h: Vec<Vec<Vec<Complex64>>>,
}

impl NetworkInstance {
    pub fn num_bs(&self) -> usize {
        self.antennas.len()
    }

    pub fn num_users(&self) -> usize {
        self.gamma.len()
    }

    /// Total antenna count, i.e. the length of a stacked beamformer.
    pub fn total_antennas(&self) -> usize {
        self.antennas.iter().sum()
    }

    /// Index range of BS `l` inside a stacked vector.
    pub fn block_range(&self, l: usize) -> Range<usize> {
        let start: usize = self.antennas[..l].iter().sum();
        start..start + self.antennas[l]
    }

    /// Stacked channel of user `k` across all BSs.
    pub fn stacked_channel(&self, k: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.total_antennas());
        for l in 0..self.num_bs() {
            out.extend_from_slice(&self.h[l][k]);
        }
        out
    }

    /// Number of distinct cells referenced by the BS map.
    pub fn num_cells(&self) -> usize {
        self.cell_of_bs.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Copy of the instance with every user's target replaced.
    pub fn with_sinr_db(&self, sinr_db: f64) -> Self {
        let mut out = self.clone();
        out.gamma = vec![db_to_linear(sinr_db); self.num_users()];
        out
    }

    /// Sub-network made of the listed BSs, in the given order.
    pub fn select_bs(&self, keep: &[usize]) -> Self {
        let pick = |xs: &[f64]| keep.iter().map(|&l| xs[l]).collect();
        Self {
            antennas: keep.iter().map(|&l| self.antennas[l]).collect(),
            gamma: self.gamma.clone(),
            sigma2: self.sigma2.clone(),
            p_max: pick(&self.p_max),
            pi: pick(&self.pi),
            cell_of_bs: keep.iter().map(|&l| self.cell_of_bs[l]).collect(),
            cell_of_user: self.cell_of_user.clone(),
            h: keep.iter().map(|&l| self.h[l].clone()).collect(),
        }
    }

    /// Checks every structural and sign invariant.
    pub fn validate(&self) -> Result<()> {
        let l = self.num_bs();
        let k = self.num_users();
        if l == 0 {
            return Err(Error::InvalidInstance("no base stations".into()));
        }
        let check_len = |name: &str, got: usize, want: usize| {
            if got != want {
                Err(Error::InvalidInstance(format!("{name} has length {got}, expected {want}")))
            } else {
                Ok(())
            }
        };
        check_len("sigma2", self.sigma2.len(), k)?;
        check_len("cell_of_user", self.cell_of_user.len(), k)?;
        check_len("P", self.p_max.len(), l)?;
        check_len("pi", self.pi.len(), l)?;
        check_len("cell_of_bs", self.cell_of_bs.len(), l)?;
        check_len("h", self.h.len(), l)?;
        for (bs, row) in self.h.iter().enumerate() {
            check_len(&format!("h[{bs}]"), row.len(), k)?;
            for (user, v) in row.iter().enumerate() {
                check_len(&format!("h[{bs}][{user}]"), v.len(), self.antennas[bs])?;
                if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                    return Err(Error::InvalidInstance(format!("h[{bs}][{user}] not finite")));
                }
            }
        }
        if let Some(bs) = self.antennas.iter().position(|&n| n == 0) {
            return Err(Error::InvalidInstance(format!("BS {bs} has no antennas")));
        }
        let positive = |name: &str, xs: &[f64]| {
            match xs.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
                Some(i) => Err(Error::InvalidInstance(format!("{name}[{i}] must be positive"))),
                None => Ok(()),
            }
        };
        positive("gamma", &self.gamma)?;
        positive("sigma2", &self.sigma2)?;
        positive("P", &self.p_max)?;
        if let Some(i) = self.pi.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidInstance(format!("pi[{i}] must be nonnegative")));
        }
        Ok(())
    }
}

/// `h^H w` for equally long complex vectors.
pub fn inner(h: &[Complex64], w: &[Complex64]) -> Complex64 {
    h.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Linear SINR of user `k` under stacked beamformers `sol.w`.
pub fn eval_sinr(inst: &NetworkInstance, sol: &BeamformingSolution, k: usize) -> Result<f64> {
    sinr_with_channel(inst, &sol.w, k, &inst.stacked_channel(k))
}

/// SINR of user `k` when its stacked channel is replaced by `hk`.
pub fn sinr_with_channel(
    inst: &NetworkInstance,
    w: &[Vec<Complex64>],
    k: usize,
    hk: &[Complex64],
) -> Result<f64> {
    let n = inst.total_antennas();
    if w.len() != inst.num_users() || k >= w.len() {
        return Err(Error::Dimension(format!(
            "{} beamformers for {} users (user {k})",
            w.len(),
            inst.num_users()
        )));
    }
    if hk.len() != n || w.iter().any(|wi| wi.len() != n) {
        return Err(Error::Dimension(format!("stacked vectors must have length {n}")));
    }
    let signal = inner(hk, &w[k]).norm_sqr();
    let interference: f64 = w
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .map(|(_, wi)| inner(hk, wi).norm_sqr())
        .sum();
    Ok(signal / (interference + inst.sigma2[k]))
}

/// Objective value: beamformer power plus implementation power of active BSs.
pub fn total_power(inst: &NetworkInstance, sol: &BeamformingSolution) -> f64 {
    let tx: f64 = sol.w.iter().map(|wk| norm_sqr(wk)).sum();
    tx + sol.activation.dot(&inst.pi)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sinr_invariant_to_phase_rotation(seed in 0u64..500, k in 0usize..4, phi in 0.0f64..std::f64::consts::TAU) {
            let inst = generate_hexnet(seed, 4, &ChannelConfig::default());
            let n = inst.total_antennas();
            let mut w: Vec<Vec<Complex64>> = (0..4)
                .map(|i| (0..n).map(|j| Complex64::new((i * n + j) as f64 * 0.01 + 0.1, 0.03 * j as f64 - 0.05)).collect())
                .collect();
            let before = sinr_with_channel(&inst, &w, k, &inst.stacked_channel(k)).unwrap();
            let rot = Complex64::from_polar(1.0, phi);
            for c in w[k].iter_mut() {
                *c *= rot;
            }
            let after = sinr_with_channel(&inst, &w, k, &inst.stacked_channel(k)).unwrap();
            prop_assert!((before - after).abs() <= 1e-9 * before.abs().max(1e-300));
        }

        #[test]
        fn idle_blocks_do_not_change_power(seed in 0u64..200, mask in 0usize..128) {
            let inst = generate_hexnet(seed, 3, &ChannelConfig::default());
            let a = ActivationVector::from_mask(mask, 7);
            let n = inst.total_antennas();
            let w: Vec<Vec<Complex64>> = (0..3)
                .map(|i| (0..n).map(|j| Complex64::new(1.0 + i as f64, j as f64)).collect())
                .collect();
            let sol = BeamformingSolution::new(&inst, a.clone(), w).unwrap();
            for l in 0..7 {
                if !a.is_active(l) {
                    for wk in &sol.w {
                        prop_assert!(wk[inst.block_range(l)].iter().all(|c| c.re == 0.0 && c.im == 0.0));
                    }
                }
            }
            let tx: f64 = sol.tx_power.iter().sum();
            prop_assert!((total_power(&inst, &sol) - tx - a.dot(&inst.pi)).abs() < 1e-9 * (1.0 + tx));
        }
    }
}
