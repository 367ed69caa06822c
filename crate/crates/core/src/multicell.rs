//! Cell-restricted serving.
//!
//! In a multi-cell network user `k` may only be served by BSs of its own cell,
//! while interference still couples all cells. The restriction is realized
//! by removing the forbidden beamformer blocks from every subproblem; the
//! solvers themselves are unchanged.

use crate::error::{Error, Result};
use crate::model::NetworkInstance;

/// `allowed[l][k]` is true iff BS `l` may carry data for user `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServingMask {
    allowed: Vec<Vec<bool>>,
}

impl ServingMask {
    pub fn allows(&self, l: usize, k: usize) -> bool {
        self.allowed[l][k]
    }

    pub fn is_full(&self) -> bool {
        self.allowed.iter().all(|row| row.iter().all(|&b| b))
    }

    /// Number of (BS, user) pairs that may be served.
    pub fn count_allowed(&self) -> usize {
        self.allowed.iter().flatten().filter(|&&b| b).count()
    }
}

/// Derives the serving mask from the instance's cell maps.
pub fn apply_serving_mask(inst: &NetworkInstance) -> Result<ServingMask> {
    for (k, &cell) in inst.cell_of_user.iter().enumerate() {
        if !inst.cell_of_bs.contains(&cell) {
            return Err(Error::InvalidInstance(format!("user {k} belongs to cell {cell} which has no BS")));
        }
    }
    let allowed = inst
        .cell_of_bs
        .iter()
        .map(|&cb| inst.cell_of_user.iter().map(|&cu| cu == cb).collect())
        .collect();
    Ok(ServingMask { allowed })
}

/// Copy of `inst` with every BS and user placed in one cell.
pub fn as_single_cell(inst: &NetworkInstance) -> NetworkInstance {
    let mut out = inst.clone();
    out.cell_of_bs.fill(0);
    out.cell_of_user.fill(0);
    out
}
