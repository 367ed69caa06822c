//! Beamformer recovery from SDP solutions and worst-case SINR checks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::RobustInstance;
use crate::error::{Error, Result};
use crate::model::{sinr_with_channel, ActivationVector, BeamformingSolution};

/// Default `lambda_2 / lambda_1` threshold for rank-one extraction.
pub const RANK_ONE_RATIO: f64 = 1e-6;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Eigenpairs of a Hermitian matrix, eigenvalues in decreasing order.
fn eigen_desc(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = m.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// `lambda_2 / lambda_1` with negative eigenvalues clamped to zero.
pub(crate) fn eigen_ratio(m: &DMatrix<Complex64>) -> f64 {
    let (vals, _) = eigen_desc(m);
    match (vals.first(), vals.get(1)) {
        (Some(&l1), Some(&l2)) if l1 > 0.0 => l2.max(0.0) / l1,
        (Some(&l1), None) if l1 > 0.0 => 0.0,
        _ => f64::INFINITY,
    }
}

/// `sqrt(lambda_1) u_1` if `lambda_2 / lambda_1 <= tol_ratio`.
pub fn extract_rank_one(x: &DMatrix<Complex64>, tol_ratio: f64) -> Result<Vec<Complex64>> {
    let ratio = eigen_ratio(x);
    if !(ratio <= tol_ratio) {
        return Err(Error::NotRankOne { ratio });
    }
    let (vals, vecs) = eigen_desc(x);
    let s = vals[0].sqrt();
    Ok(vecs.column(0).iter().map(|v| v * s).collect())
}

/// `min_{||u|| <= rho} (g + u)^H Y (g + u)` for Hermitian `Y`.
fn trust_region_min(y: &DMatrix<Complex64>, g: &[Complex64], rho: f64) -> f64 {
    let gv = DVector::from_column_slice(g);
    if rho == 0.0 {
        return (gv.adjoint() * y * &gv)[(0, 0)].re;
    }
    let (d, v) = eigen_desc(y);
    let c: Vec<f64> = (0..d.len()).map(|i| (v.column(i).adjoint() * &gv)[(0, 0)].norm_sqr()).collect();
    let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
    // With x = g + u, y = V^H x and stationarity y_i = nu c_i / (d_i + nu),
    // ||u||^2 = phi(nu) = sum_i c_i d_i^2 / (d_i + nu)^2.
    let phi = |nu: f64| d.iter().zip(&c).map(|(di, ci)| ci * (di / (di + nu)).powi(2)).sum::<f64>();
    let value = |nu: f64| d.iter().zip(&c).map(|(di, ci)| di * ci * (nu / (di + nu)).powi(2)).sum::<f64>();
    let lo = (-dmin).max(0.0);
    if dmin >= 0.0 && c.iter().sum::<f64>() <= rho * rho {
        // The ball contains the origin, where the PSD form vanishes.
        return 0.0;
    }
    let scale = d.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let near = lo + 1e-14 * scale;
    if dmin < 0.0 && phi(near) < rho * rho {
        // Hard case: the leftover radius goes along the bottom eigenvector.
        let partial: f64 = d
            .iter()
            .zip(&c)
            .filter(|(di, _)| **di > dmin)
            .map(|(di, ci)| di * ci * (lo / (di + lo)).powi(2))
            .sum();
        let used: f64 = d.iter().zip(&c).filter(|(di, _)| **di > dmin).map(|(di, ci)| ci * (di / (di + lo)).powi(2)).sum();
        let cmin: f64 = d.iter().zip(&c).filter(|(di, _)| **di == dmin).map(|(_, ci)| ci).sum();
        let t = (rho * rho - used).max(0.0).sqrt();
        return partial + dmin * (cmin.sqrt() + t).powi(2);
    }
    let mut hi = lo.max(scale);
    while phi(hi) > rho * rho {
        hi *= 2.0;
    }
    let mut lo_b = near;
    for _ in 0..200 {
        let mid = 0.5 * (lo_b + hi);
        if phi(mid) > rho * rho {
            lo_b = mid;
        } else {
            hi = mid;
        }
    }
    value(hi)
}

fn y_matrix(rinst: &RobustInstance, w: &[Vec<Complex64>], k: usize) -> DMatrix<Complex64> {
    let n = rinst.inst.total_antennas();
    let mut y = DMatrix::from_element(n, n, czero());
    for (i, wi) in w.iter().enumerate() {
        let s = if i == k { 1.0 / rinst.inst.gamma[k] } else { -1.0 };
        let v = DVector::from_column_slice(wi);
        y += (&v * v.adjoint()) * Complex64::new(s, 0.0);
    }
    y
}

/// Worst-case margin of user `k`: `min_{||d|| <= xi_k} F_k(d) / sigma_k^2`.
/// Nonnegative iff the worst-case SINR meets the target.
pub fn worst_case_margin(rinst: &RobustInstance, w: &[Vec<Complex64>], k: usize) -> f64 {
    trust_region_min(&y_matrix(rinst, w, k), &rinst.g(k), rinst.rho(k)) - 1.0
}

/// Scales all beamformers by the smallest common factor meeting every
/// worst-case SINR constraint; `None` if some user cannot be fixed by scaling.
pub fn scale_to_robust_feasibility(rinst: &RobustInstance, w: Vec<Vec<Complex64>>) -> Option<Vec<Vec<Complex64>>> {
    let mut c2: f64 = 0.0;
    for k in 0..w.len() {
        let m = worst_case_margin(rinst, &w, k) + 1.0;
        if !(m > 0.0) {
            return None;
        }
        c2 = c2.max(1.0 / m);
    }
    let c = (c2 * (1.0 + 1e-9)).sqrt();
    Some(w.into_iter().map(|wk| wk.into_iter().map(|v| v * c).collect()).collect())
}

fn complex_normal(rng: &mut ChaCha20Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Gaussian randomization: draws `w_k ~ CN(0, X_k)`, rescales each draw to
/// worst-case feasibility and keeps the least-power draw within the caps.
pub fn randomized_rounding(
    rinst: &RobustInstance,
    a: &ActivationVector,
    x: &[DMatrix<Complex64>],
    samples: usize,
    seed: u64,
) -> Result<BeamformingSolution> {
    let inst = &rinst.inst;
    if samples == 0 {
        return Err(Error::RoundingFailed { samples });
    }
    if let Some(w) = x.iter().map(|m| extract_rank_one(m, RANK_ONE_RATIO).ok()).collect::<Option<Vec<_>>>() {
        if let Some(w) = scale_to_robust_feasibility(rinst, w) {
            let sol = BeamformingSolution::new(inst, a.clone(), w)?;
            if sol.max_cap_excess(inst) <= 1e-6 {
                return Ok(sol);
            }
        }
    }
    let factors: Vec<DMatrix<Complex64>> = x
        .iter()
        .map(|m| {
            let (vals, vecs) = eigen_desc(m);
            let mut f = vecs;
            for (j, v) in vals.iter().enumerate() {
                let s = v.max(0.0).sqrt();
                f.column_mut(j).iter_mut().for_each(|e| *e *= s);
            }
            f
        })
        .collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut best: Option<BeamformingSolution> = None;
    for _ in 0..samples {
        let w: Vec<Vec<Complex64>> = factors
            .iter()
            .map(|f| {
                let z = DVector::from_fn(f.ncols(), |_, _| complex_normal(&mut rng));
                (f * z).iter().cloned().collect()
            })
            .collect();
        let Some(w) = scale_to_robust_feasibility(rinst, w) else { continue };
        let sol = BeamformingSolution::new(inst, a.clone(), w)?;
        if sol.max_cap_excess(inst) > 1e-9 {
            continue;
        }
        if best.as_ref().map_or(true, |b| sol.objective < b.objective) {
            best = Some(sol);
        }
    }
    best.ok_or(Error::RoundingFailed { samples })
}

/// Samples `samples` errors per user uniformly in the uncertainty ball and
/// counts SINR values below `gamma_k (1 - slack)`.
pub fn monte_carlo_violations(rinst: &RobustInstance, sol: &BeamformingSolution, samples: usize, seed: u64, slack: f64) -> Result<usize> {
    let inst = &rinst.inst;
    let n = inst.total_antennas();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut violations = 0;
    for k in 0..inst.num_users() {
        for _ in 0..samples {
            let dir: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng)).collect();
            let norm = crate::model::norm_sqr(&dir).sqrt();
            let u: f64 = rng.gen();
            let r = rinst.xi[k] * u.powf(1.0 / (2 * n) as f64);
            let hk: Vec<Complex64> = rinst.h_tilde[k].iter().zip(&dir).map(|(h, d)| h + d * (r / norm)).collect();
            if sinr_with_channel(inst, &sol.w, k, &hk)? < inst.gamma[k] * (1.0 - slack) {
                violations += 1;
            }
        }
    }
    Ok(violations)
}
