//! Acceptance suite: one pass/fail line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hetnet_core::benders::{run_benders, run_benders_with, BendersOptions, CutKind};
use hetnet_core::conic::{solve_subproblem, DEFAULT_TOL};
use hetnet_core::model::{generate_hexnet, ActivationVector, BeamformingSolution, ChannelConfig, NetworkInstance};
use hetnet_core::multicell::apply_serving_mask;
use hetnet_core::oracle::enumerate_optimal;
use hetnet_core::robust::{monte_carlo_violations, recover_beamformers, solve_robust_fixed, worst_case_margin, RobustInstance, RobustSubproblem};
use hetnet_core::subgrad::{activation_from_duals, run_subgradient, SubgradOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPSILON: f64 = 1e-4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn drop(seed: u64, bs: usize, users: usize, sinr_db: f64) -> NetworkInstance {
    let cfg = ChannelConfig { sinr_db, ..ChannelConfig::default() };
    generate_hexnet(seed, users, &cfg).select_bs(&(0..bs).collect::<Vec<_>>())
}

/// Seeds 0..20 with L = 3 + s mod 5 and K = 2 + 3s mod 5.
fn suite(sinr_db: f64) -> Vec<NetworkInstance> {
    (0..20u64).map(|s| drop(s, 3 + (s as usize) % 5, 2 + (3 * s as usize) % 5, sinr_db)).collect()
}

fn optimality() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut iters = Vec::new();
    for (i, inst) in suite(5.0).iter().enumerate() {
        let oracle = enumerate_optimal(inst, DEFAULT_TOL).expect("suite instances are feasible");
        let out = run_benders(inst, &BendersOptions { epsilon: EPSILON, ..BendersOptions::default() }).expect("benders converges");
        let diff = (out.solution.objective - oracle.optimum).abs();
        if diff > EPSILON + 1e-6 || out.iterations > 2 << inst.num_bs() {
            bad.push(format!("#{i} diff {diff:.2e} iters {}", out.iterations));
        }
        iters.push(out.iterations);
    }
    let secs = start.elapsed().as_secs_f64();
    let mean = iters.iter().sum::<usize>() as f64 / iters.len() as f64;
    outcome(
        bad.is_empty(),
        format!(
            "{}/20 match enumeration within eps + 1e-6; iterations mean {mean:.1}, max {}; {secs:.1} s total{}",
            20 - bad.len(),
            iters.iter().max().unwrap(),
            if bad.is_empty() { String::new() } else { format!("; failures: {}", bad.join(", ")) }
        ),
    )
}

fn bounds() -> Outcome {
    let inst = generate_hexnet(0, 6, &ChannelConfig { sinr_db: 15.0, ..ChannelConfig::default() });
    let out = run_benders(&inst, &BendersOptions { epsilon: EPSILON, ..BendersOptions::default() }).expect("benders converges");
    let monotone = out.trace.windows(2).all(|p| p[1].lb >= p[0].lb);
    let ordered = out.trace.iter().all(|r| r.ub >= r.lb);
    let closed = out.ub - out.lb <= EPSILON;
    let oracle = enumerate_optimal(&inst, DEFAULT_TOL).expect("seed-0 is feasible");

    let mut within = 0;
    let mut counts = Vec::new();
    for seed in 0..20u64 {
        let i = generate_hexnet(seed, 6, &ChannelConfig { sinr_db: 15.0, ..ChannelConfig::default() });
        let solves = match run_benders(&i, &BendersOptions { epsilon: EPSILON, ..BendersOptions::default() }) {
            Ok(o) => o.solves,
            Err(_) => usize::MAX,
        };
        if solves <= 128 {
            within += 1;
        }
        counts.push(solves);
    }
    let pass = monotone && ordered && closed && within * 10 >= 20 * 8;
    outcome(
        pass,
        format!(
            "seed-0 L=7 K=6 15 dB: {} iterations, LB monotone {monotone}, UB >= LB {ordered}, final gap {:.2e}; \
             conic solves {} vs enumeration {}; solves <= 128 on {within}/20 seeds (max {})",
            out.iterations,
            out.ub - out.lb,
            out.solves,
            oracle.solves,
            counts.iter().max().unwrap()
        ),
    )
}

fn subgradient() -> Outcome {
    let mut gaps = Vec::new();
    let mut plain = Vec::new();
    let mut infeasible = 0;
    for inst in suite(5.0) {
        let opt = enumerate_optimal(&inst, DEFAULT_TOL).expect("suite instances are feasible").optimum;
        let out = run_subgradient(&inst, None, &SubgradOptions::default()).expect("subgradient restores");
        let s = &out.solution;
        if s.min_sinr_margin(&inst) < -1e-6 || s.max_cap_excess(&inst) > 1e-6 {
            infeasible += 1;
        }
        gaps.push((s.objective - opt) / opt);
        let p = run_subgradient(&inst, None, &SubgradOptions { local_search: false, ..SubgradOptions::default() })
            .expect("subgradient restores");
        plain.push((p.solution.objective - opt) / opt);
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let mean_plain = plain.iter().sum::<f64>() / plain.len() as f64;
    outcome(
        infeasible == 0 && mean <= 0.05,
        format!(
            "{}/20 feasible; mean gap {:.2}% (bound 5%), max {:.2}%; without local search {:.2}%",
            20 - infeasible,
            100.0 * mean,
            100.0 * gaps.iter().cloned().fold(0.0, f64::max),
            100.0 * mean_plain
        ),
    )
}

fn cut_validity() -> Outcome {
    let mut checked = 0;
    let mut violations = 0;
    for sinr in [5.0, 15.0] {
        for inst in suite(sinr).into_iter().filter(|i| i.num_bs() <= 5) {
            let Ok(oracle) = enumerate_optimal(&inst, DEFAULT_TOL) else { continue };
            let out = run_benders(&inst, &BendersOptions { epsilon: 0.0, ..BendersOptions::default() }).expect("benders converges");
            let l = inst.num_bs();
            for m in 0..1usize << l {
                let a = ActivationVector::from_mask(m, l);
                let Some(f) = oracle.objective(&inst, &a) else { continue };
                for cut in &out.cuts {
                    let ok = match cut.kind {
                        CutKind::Optimality => cut.eval(&a) <= f + 1e-6 * (1.0 + f.abs()),
                        CutKind::Feasibility => cut.admits(&a, 1e-9),
                    };
                    checked += 1;
                    if !ok {
                        violations += 1;
                    }
                }
            }
        }
    }
    outcome(violations == 0 && checked > 0, format!("{checked} (cut, feasible activation) pairs checked, {violations} violations"))
}

fn closed_forms() -> Outcome {
    let h = vec![Complex64::new(0.7, -0.4), Complex64::new(-1.1, 0.3)];
    let (gamma, sigma2) = (3.0, 0.5);
    let inst = NetworkInstance {
        antennas: vec![2],
        gamma: vec![gamma],
        sigma2: vec![sigma2],
        p_max: vec![100.0],
        pi: vec![1.0],
        cell_of_bs: vec![0],
        cell_of_user: vec![0],
        h: vec![vec![h.clone()]],
    };
    let expect = gamma * sigma2 / h.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let got = solve_subproblem(&inst, &ActivationVector::all_ones(1), DEFAULT_TOL).expect("solves").value;
    let rel = (got - expect).abs() / expect;

    let base = generate_hexnet(0, 6, &ChannelConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut mismatches = 0;
    for _ in 0..100 {
        let lambda: Vec<f64> = (0..7).map(|l| rng.gen_range(0.0..2.0) * base.pi[l] / base.p_max[l]).collect();
        let rule = activation_from_duals(&base, &lambda);
        let brute = (0..128usize)
            .map(|m| ActivationVector::from_mask(m, 7))
            .min_by(|x, y| {
                let f = |a: &ActivationVector| (0..7).map(|l| (base.pi[l] - lambda[l] * base.p_max[l]) * a.as_f64()[l]).sum::<f64>();
                f(x).total_cmp(&f(y))
            })
            .unwrap();
        if rule != brute {
            mismatches += 1;
        }
    }
    outcome(
        rel <= 1e-6 && mismatches == 0,
        format!("single-link power rel. error {rel:.1e} (bound 1e-6); activation rule vs brute force: {mismatches}/100 mismatches"),
    )
}

fn robust() -> Outcome {
    let inst = generate_hexnet(0, 4, &ChannelConfig { sinr_db: 10.0, ..ChannelConfig::default() });
    let ones = ActivationVector::all_ones(7);
    let nominal = solve_subproblem(&inst, &ones, DEFAULT_TOL).expect("nominal solves").value;
    let zero = RobustInstance::from_theta(&inst, 0.0).unwrap();
    let at_zero = solve_robust_fixed(&zero, &ones, DEFAULT_TOL).expect("robust solves").value;
    let rel = (at_zero - nominal).abs() / nominal;

    let mut values = Vec::new();
    let mut violations = 0;
    let mut sound = true;
    for theta in [0.01, 0.02] {
        let r = RobustInstance::from_theta(&inst, theta).unwrap();
        let out = solve_robust_fixed(&r, &ones, DEFAULT_TOL).expect("robust solves");
        values.push(out.value);
        match out.solution.map(|s| recover_beamformers(&r, &s, 200, 1)) {
            Some(Ok(bf)) => {
                sound &= (0..4).all(|k| worst_case_margin(&r, &bf.w, k) >= -1e-9);
                violations += monte_carlo_violations(&r, &bf, 1000, 7, 1e-6).expect("valid solution");
            }
            _ => sound = false,
        }
    }
    let monotone = values[1] > values[0] && values[0] >= at_zero;

    // Reported only: robust vs nominal Benders optimum at 12 dB.
    let small = drop(0, 4, 3, 12.0);
    let r = RobustInstance::from_theta(&small, 0.02).unwrap();
    let sub = RobustSubproblem { rinst: &r, tol: DEFAULT_TOL, samples: 200, seed: 0 };
    let robust_opt = run_benders_with(&sub, &BendersOptions::default()).map(|o| (o.solution.transmit_power(), o.solution.activation));
    let report = match (robust_opt, run_benders(&small, &BendersOptions::default())) {
        (Ok((rp, ra)), Ok(n)) => format!(
            "; 12 dB, theta 0.02 (L=4, K=3): transmit power {:.3e} W robust ({ra}) vs {:.3e} W nominal ({}), +{:.1}%",
            rp,
            n.solution.transmit_power(),
            n.solution.activation,
            100.0 * (rp / n.solution.transmit_power() - 1.0)
        ),
        _ => "; 12 dB comparison unavailable".into(),
    };
    outcome(
        rel <= 1e-3 && monotone && sound && violations == 0,
        format!(
            "xi=0 vs nominal rel. diff {rel:.1e} (bound 1e-3); theta 0.01 -> 0.02: {:.4e} -> {:.4e} W; \
             Monte-Carlo violations {violations}/8000, worst-case margins sound {sound}{report}",
            values[0], values[1]
        ),
    )
}

fn masked_zero(inst: &NetworkInstance, sol: &BeamformingSolution) -> bool {
    let mask = apply_serving_mask(inst).unwrap();
    sol.w.iter().enumerate().all(|(k, wk)| {
        (0..inst.num_bs()).filter(|&l| !mask.allows(l, k)).all(|l| wk[inst.block_range(l)].iter().all(|v| v.re == 0.0 && v.im == 0.0))
    })
}

fn multicell() -> Outcome {
    let mut equal = 0;
    let mut max_diff: f64 = 0.0;
    for seed in 0..5u64 {
        let single = drop(seed, 5, 3, 5.0);
        let mut one_cell = single.clone();
        one_cell.cell_of_bs.fill(2);
        one_cell.cell_of_user.fill(2);
        let a = run_benders(&single, &BendersOptions::default()).expect("converges");
        let b = run_benders(&one_cell, &BendersOptions::default()).expect("converges");
        let d = (a.solution.objective - b.solution.objective).abs();
        max_diff = max_diff.max(d);
        if a.solution.activation == b.solution.activation && d <= 1e-6 {
            equal += 1;
        }
    }
    let mut zero = true;
    for seed in 0..3u64 {
        let cfg = ChannelConfig { sinr_db: 5.0, cells: 2, ..ChannelConfig::default() };
        let inst = generate_hexnet(seed, 4, &cfg).select_bs(&[0, 1, 2, 3, 4]);
        if let Ok(o) = run_benders(&inst, &BendersOptions::default()) {
            zero &= masked_zero(&inst, &o.solution);
        }
        if let Ok(o) = run_subgradient(&inst, None, &SubgradOptions::default()) {
            zero &= masked_zero(&inst, &o.solution);
        }
        if let Ok(o) = enumerate_optimal(&inst, DEFAULT_TOL) {
            zero &= masked_zero(&inst, &o.solution);
        }
    }
    outcome(
        equal == 5 && zero,
        format!("M=1 vs single cell: {equal}/5 identical activations, max objective diff {max_diff:.1e}; masked blocks exactly zero {zero}"),
    )
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "timings.csv" {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn reproducibility() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_hetnet");
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"seed": 3, "users": 3, "sinr_targets_db": [0.0, 5.0], "drops": 3,
            "algorithms": ["benders", "subgrad", "oracle", "rba"]}"#,
    )
    .unwrap();
    let mut trees = Vec::new();
    let mut ok = true;
    for run in 0..2 {
        let out = tmp.path().join(format!("run{run}"));
        for (cmd, sub) in [("generate", "gen"), ("run", "run"), ("sweep", "sweep")] {
            let status = Command::new(bin)
                .args([cmd, "--config", config.to_str().unwrap(), "--out", out.join(sub).to_str().unwrap()])
                .output()
                .expect("binary runs");
            ok &= status.status.success();
        }
        trees.push(read_dir_sorted(&out));
    }
    let files = trees[0].len();
    let identical = trees[0] == trees[1];
    outcome(ok && identical && files > 0, format!("two runs of generate/run/sweep: {files} files compared, byte-identical {identical}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("optimality vs enumeration", optimality),
        ("bound behavior", bounds),
        ("subgradient near-optimality", subgradient),
        ("cut validity", cut_validity),
        ("closed forms", closed_forms),
        ("robust consistency", robust),
        ("multi-cell reduction", multicell),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {name}: {} ({:.1} s) {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {}/8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
