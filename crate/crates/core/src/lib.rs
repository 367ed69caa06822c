//! Joint base-station activation and coordinated downlink beamforming.
//!
//! The crate solves
//!
//! ```text
//! minimize   sum_k ||w_k||^2 + a'pi
//! subject to SINR_k(W) >= gamma_k,  sum_k ||w_lk||^2 <= a_l P_l,  a in {0,1}^L
//! ```
//!
//! exactly with generalized Benders decomposition ([`benders`]) and
//! approximately with a dual-subgradient method ([`subgrad`]). The
//! fixed-activation subproblems are conic programs ([`conic`]); [`robust`]
//! swaps them for S-procedure SDPs under bounded channel errors, and
//! [`multicell`] restricts serving to a user's own cell. [`oracle`] holds
//! the enumeration ground truth and the random-association baseline.

// Links the system BLAS/LAPACK used by the SDP path of the conic engine.
use openblas_src as _;

pub mod benders;
pub mod conic;
pub mod error;
pub mod model;
pub mod multicell;
pub mod oracle;
pub mod robust;
pub mod subgrad;

pub use error::{Error, Result};
