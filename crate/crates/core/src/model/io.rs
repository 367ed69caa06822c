//! JSON instance files.
//!
//! Complex numbers are `[re, im]` pairs. `h` lists the per-link channel
//! vectors BS-major: entry `l * K + k` is the channel from BS `l` to user `k`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::NetworkInstance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct InstanceFile {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub gamma: Vec<f64>,
    pub sigma2: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    pub pi: Vec<f64>,
    pub cell_of_bs: Vec<usize>,
    pub cell_of_user: Vec<usize>,
    pub h: Vec<Vec<[f64; 2]>>,
}

pub(crate) fn encode_vec(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

pub(crate) fn decode_vec(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

impl From<&NetworkInstance> for InstanceFile {
    fn from(inst: &NetworkInstance) -> Self {
        Self {
            l: inst.num_bs(),
            k: inst.num_users(),
            n: inst.antennas.clone(),
            gamma: inst.gamma.clone(),
            sigma2: inst.sigma2.clone(),
            p: inst.p_max.clone(),
            pi: inst.pi.clone(),
            cell_of_bs: inst.cell_of_bs.clone(),
            cell_of_user: inst.cell_of_user.clone(),
            h: inst.h.iter().flat_map(|row| row.iter().map(|v| encode_vec(v))).collect(),
        }
    }
}

impl TryFrom<InstanceFile> for NetworkInstance {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Self> {
        if f.n.len() != f.l || f.gamma.len() != f.k {
            return Err(Error::InvalidInstance(format!(
                "L = {} and K = {} disagree with N ({}) or gamma ({})",
                f.l,
                f.k,
                f.n.len(),
                f.gamma.len()
            )));
        }
        if f.h.len() != f.l * f.k {
            return Err(Error::InvalidInstance(format!("h must hold L*K = {} vectors", f.l * f.k)));
        }
        let h = (0..f.l).map(|l| (0..f.k).map(|k| decode_vec(&f.h[l * f.k + k])).collect()).collect();
        let inst = NetworkInstance {
            antennas: f.n,
            gamma: f.gamma,
            sigma2: f.sigma2,
            p_max: f.p,
            pi: f.pi,
            cell_of_bs: f.cell_of_bs,
            cell_of_user: f.cell_of_user,
            h,
        };
        inst.validate()?;
        Ok(inst)
    }
}

impl NetworkInstance {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: InstanceFile = serde_json::from_str(s)?;
        f.try_into()
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
