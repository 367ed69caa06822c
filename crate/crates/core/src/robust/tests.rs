use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::*;
use crate::benders::{run_benders_with, BendersOptions};
use crate::conic::{solve_subproblem, ConeKind, DEFAULT_TOL};
use crate::model::{generate_hexnet, ChannelConfig};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn seed0(users: usize, sinr_db: f64) -> NetworkInstance {
    generate_hexnet(0, users, &ChannelConfig { sinr_db, ..ChannelConfig::default() })
}

fn scalar(h: Complex64, xi: f64) -> RobustInstance {
    let inst = NetworkInstance {
        antennas: vec![1],
        gamma: vec![2.0],
        sigma2: vec![1.0],
        p_max: vec![100.0],
        pi: vec![0.1],
        cell_of_bs: vec![0],
        cell_of_user: vec![0],
        h: vec![vec![vec![h]]],
    };
    RobustInstance::new(inst, vec![vec![h]], vec![xi]).unwrap()
}

#[test]
fn lmi_dimension_per_user() {
    let r = RobustInstance::from_theta(&seed0(2, 5.0), 0.01).unwrap();
    let p = build_robust_subproblem(&r, &ActivationVector::all_ones(7)).unwrap();
    // Gamma_k is (N + 1) square over the complex numbers, N = 14.
    assert_eq!(p.count_blocks(|k| *k == ConeKind::Psd(30)), 2);
    assert_eq!(p.count_blocks(|k| *k == ConeKind::Psd(28)), 2);
    let zero = RobustInstance::from_theta(&seed0(2, 5.0), 0.0).unwrap();
    let p = build_robust_subproblem(&zero, &ActivationVector::all_ones(7)).unwrap();
    assert_eq!(p.count_blocks(|k| *k == ConeKind::Psd(30)), 0);
}

#[test]
fn scalar_robust_power_closed_form() {
    // Need |h - xi|^2 p / gamma >= sigma2: p = gamma / (|h| - xi)^2.
    let r = scalar(c(0.0, 2.0), 0.5);
    let out = solve_robust_fixed(&r, &ActivationVector::all_ones(1), 1e-9).unwrap();
    assert_eq!(out.status, SubproblemStatus::Optimal);
    assert_relative_eq!(out.value, 2.0 / 1.5f64.powi(2), max_relative = 1e-6);
}

#[test]
fn trust_region_scalar_cases() {
    let r = scalar(c(3.0, 4.0), 1.0);
    let w = vec![vec![c(0.6, -0.8)]];
    // Y = |w|^2 / gamma = 0.5; worst point shrinks |g| from 5 to 4.
    assert_relative_eq!(worst_case_margin(&r, &w, 0), 0.5 * 16.0 - 1.0, max_relative = 1e-9);
}

#[test]
fn trust_region_indefinite_case_against_sampling() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let inst = NetworkInstance {
        antennas: vec![2],
        gamma: vec![1.0, 1.0],
        sigma2: vec![1.0, 1.0],
        p_max: vec![10.0],
        pi: vec![0.0],
        cell_of_bs: vec![0],
        cell_of_user: vec![0, 0],
        h: vec![vec![vec![c(2.0, 0.0), c(0.5, 1.0)], vec![c(0.0, 1.0), c(1.0, 0.0)]]],
    };
    let r = RobustInstance::from_theta(&inst, 0.3).unwrap();
    let w = vec![vec![c(1.0, 0.2), c(0.1, 0.0)], vec![c(0.0, 0.3), c(-0.2, 0.1)]];
    let exact = worst_case_margin(&r, &w, 0) + 1.0;
    let g = &r.h_tilde[0];
    let mut sampled = f64::INFINITY;
    for _ in 0..20000 {
        let d: Vec<Complex64> = (0..2).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let nd = crate::model::norm_sqr(&d).sqrt();
        let u: Vec<Complex64> = d.iter().map(|v| v * (r.xi[0] / nd)).collect();
        let x: Vec<Complex64> = g.iter().zip(&u).map(|(a, b)| a + b).collect();
        let s = crate::model::inner(&x, &w[0]).norm_sqr() - crate::model::inner(&x, &w[1]).norm_sqr();
        sampled = sampled.min(s);
    }
    assert!(exact <= sampled + 1e-9);
    assert!(sampled - exact <= 1e-2 * exact.abs().max(1.0));
}

#[test]
fn rank_one_extraction() {
    let w = DVector::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 0.3)]);
    let x = &w * w.adjoint();
    let got = extract_rank_one(&x, RANK_ONE_RATIO).unwrap();
    let phase = crate::model::inner(&got, w.as_slice());
    assert_relative_eq!(phase.norm(), w.norm_squared(), max_relative = 1e-9);
    let eye = DMatrix::<Complex64>::identity(3, 3);
    assert!(matches!(extract_rank_one(&eye, RANK_ONE_RATIO), Err(Error::NotRankOne { .. })));
}

#[test]
fn zero_radius_matches_nominal() {
    let inst = seed0(4, 10.0);
    let ones = ActivationVector::all_ones(7);
    let nominal = solve_subproblem(&inst, &ones, 1e-9).unwrap();
    let r = RobustInstance::from_theta(&inst, 0.0).unwrap();
    let robust = solve_robust_fixed(&r, &ones, DEFAULT_TOL).unwrap();
    assert_eq!(robust.status, SubproblemStatus::Optimal);
    assert_relative_eq!(robust.value, nominal.value, max_relative = 1e-3);
    // The relaxation can only be cheaper, up to the engine tolerance.
    assert!(robust.value <= nominal.value * (1.0 + 1e-5));
}

#[test]
fn radius_increases_power_and_solution_is_sound() {
    let inst = seed0(4, 10.0);
    let ones = ActivationVector::all_ones(7);
    let nominal = solve_subproblem(&inst, &ones, 1e-9).unwrap().value;
    let mut prev = nominal;
    for theta in [0.01, 0.02] {
        let r = RobustInstance::from_theta(&inst, theta).unwrap();
        let out = solve_robust_fixed(&r, &ones, DEFAULT_TOL).unwrap();
        assert_eq!(out.status, SubproblemStatus::Optimal);
        assert!(out.value > prev);
        prev = out.value;
        let sol = out.solution.unwrap();
        let bf = recover_beamformers(&r, &sol, 100, 1).unwrap();
        for k in 0..4 {
            assert!(worst_case_margin(&r, &bf.w, k) >= -1e-9);
        }
        assert_eq!(monte_carlo_violations(&r, &bf, 1000, 7, 1e-6).unwrap(), 0);
    }
}

#[test]
fn rounding_examples() {
    let inst = seed0(3, 5.0);
    let ones = ActivationVector::all_ones(7);
    let r = RobustInstance::from_theta(&inst, 0.01).unwrap();
    let full = solve_robust_fixed(&r, &ones, DEFAULT_TOL).unwrap().solution.unwrap();
    assert!(matches!(randomized_rounding(&r, &ones, &full.x, 0, 1), Err(Error::RoundingFailed { samples: 0 })));

    // A second feasible rank-one point: the optimum with BS 0 switched off.
    let mut partial = ones.clone();
    partial.set(0, false);
    let other = solve_robust_fixed(&r, &partial, DEFAULT_TOL).unwrap().solution.unwrap();
    let mixed: Vec<DMatrix<Complex64>> =
        full.x.iter().zip(&other.x).map(|(a, b)| (a + b) * Complex64::new(0.5, 0.0)).collect();
    assert!(mixed.iter().any(|m| extract_rank_one(m, RANK_ONE_RATIO).is_err()));
    let tr: f64 = mixed.iter().map(|m| m.trace().re).sum();
    let sol = randomized_rounding(&r, &ones, &mixed, 200, 5).unwrap();
    for k in 0..3 {
        assert!(worst_case_margin(&r, &sol.w, k) >= -1e-9);
    }
    assert!(sol.transmit_power() <= 1.1 * tr, "{} vs {tr}", sol.transmit_power());
}

#[test]
fn json_round_trip_and_schema() {
    let r = RobustInstance::from_theta(&seed0(2, 5.0), 0.02).unwrap();
    let back = RobustInstance::from_json(&r.to_json()).unwrap();
    assert_eq!(back, r);
    let mut v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    v.as_object_mut().unwrap().insert("extra".into(), serde_json::Value::Null);
    assert!(RobustInstance::from_json(&v.to_string()).is_err());
    v.as_object_mut().unwrap().remove("extra");
    v.as_object_mut().unwrap().remove("xi");
    assert!(RobustInstance::from_json(&v.to_string()).is_err());
}

#[test]
fn robust_benders_matches_enumeration() {
    let inst = seed0(3, 10.0).select_bs(&[0, 1, 2, 3]);
    let r = RobustInstance::from_theta(&inst, 0.02).unwrap();
    let mut best = f64::INFINITY;
    for m in 1..16 {
        let a = ActivationVector::from_mask(m, 4);
        let out = solve_robust_fixed(&r, &a, DEFAULT_TOL).unwrap();
        if let Some(s) = out.solution {
            best = best.min(s.objective);
        }
    }
    let sub = RobustSubproblem { rinst: &r, tol: DEFAULT_TOL, samples: 100, seed: 0 };
    let out = run_benders_with(&sub, &BendersOptions::default()).unwrap();
    assert!((out.ub - best).abs() <= 1e-4 + 1e-6 * best, "{} vs {best}", out.ub);
    for k in 0..3 {
        assert!(worst_case_margin(&r, &out.solution.w, k) >= -1e-9);
    }
}
