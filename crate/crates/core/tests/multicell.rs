use hetnet_core::benders::{run_benders, BendersOptions};
use hetnet_core::conic::{solve_subproblem, DEFAULT_TOL};
use hetnet_core::model::{generate_hexnet, ActivationVector, BeamformingSolution, ChannelConfig, NetworkInstance};
use hetnet_core::multicell::{apply_serving_mask, as_single_cell};
use hetnet_core::oracle::enumerate_optimal;
use hetnet_core::robust::{solve_robust_fixed, RobustInstance};
use hetnet_core::subgrad::{run_subgradient, SubgradOptions};

fn drop(seed: u64, users: usize, cells: usize, bs: usize) -> NetworkInstance {
    let cfg = ChannelConfig { sinr_db: 5.0, cells, ..ChannelConfig::default() };
    generate_hexnet(seed, users, &cfg).select_bs(&(0..bs).collect::<Vec<_>>())
}

fn assert_masked_blocks_zero(inst: &NetworkInstance, sol: &BeamformingSolution) {
    let mask = apply_serving_mask(inst).unwrap();
    for (k, wk) in sol.w.iter().enumerate() {
        for l in 0..inst.num_bs() {
            if !mask.allows(l, k) {
                assert!(wk[inst.block_range(l)].iter().all(|v| v.re == 0.0 && v.im == 0.0), "block ({l}, {k})");
            }
        }
    }
}

#[test]
fn one_cell_matches_single_cell_run() {
    for seed in 0..3 {
        let single = drop(seed, 3, 1, 5);
        // Same drop with a non-zero cell label: still one cell.
        let mut relabeled = drop(seed, 3, 2, 5);
        relabeled.cell_of_bs.fill(4);
        relabeled.cell_of_user.fill(4);
        assert_eq!(as_single_cell(&relabeled), single);
        assert!(apply_serving_mask(&relabeled).unwrap().is_full());

        let a = run_benders(&single, &BendersOptions::default()).unwrap();
        let b = run_benders(&relabeled, &BendersOptions::default()).unwrap();
        assert_eq!(a.solution.activation, b.solution.activation);
        assert!((a.solution.objective - b.solution.objective).abs() <= 1e-6);
    }
}

#[test]
fn masked_blocks_are_zero_in_every_solver() {
    let inst = drop(1, 4, 2, 5);
    assert!(!apply_serving_mask(&inst).unwrap().is_full());
    let benders = run_benders(&inst, &BendersOptions::default()).unwrap();
    assert_masked_blocks_zero(&inst, &benders.solution);
    let sg = run_subgradient(&inst, None, &SubgradOptions::default()).unwrap();
    assert_masked_blocks_zero(&inst, &sg.solution);
    let oracle = enumerate_optimal(&inst, DEFAULT_TOL).unwrap();
    assert_masked_blocks_zero(&inst, &oracle.solution);

    let small = drop(1, 2, 2, 4);
    let r = RobustInstance::from_theta(&small, 0.01).unwrap();
    let out = solve_robust_fixed(&r, &ActivationVector::all_ones(4), DEFAULT_TOL).unwrap();
    let sol = out.solution.unwrap();
    if let Some(w) = sol.w {
        let bf = BeamformingSolution::new(&small, ActivationVector::all_ones(4), w).unwrap();
        assert_masked_blocks_zero(&small, &bf);
    }
}

#[test]
fn restriction_never_lowers_the_optimum() {
    let full = generate_hexnet(0, 4, &ChannelConfig { sinr_db: 5.0, ..ChannelConfig::default() });
    let masked = generate_hexnet(0, 4, &ChannelConfig { sinr_db: 5.0, cells: 2, ..ChannelConfig::default() });
    let a = enumerate_optimal(&full, DEFAULT_TOL).unwrap();
    let b = enumerate_optimal(&masked, DEFAULT_TOL).unwrap();
    assert!(b.optimum >= a.optimum * (1.0 - 1e-6), "{} < {}", b.optimum, a.optimum);
}

#[test]
fn one_bs_per_cell_serves_each_user_alone() {
    // Users join the cell of their nearest site.
    let cfg = ChannelConfig { sinr_db: 0.0, cells: 7, ..ChannelConfig::default() };
    let inst = generate_hexnet(2, 7, &cfg);
    let out = solve_subproblem(&inst, &ActivationVector::all_ones(7), DEFAULT_TOL).unwrap();
    let sol = out.solution.unwrap_or_else(|| panic!("{:?} {:?}", out.status, out.message));
    for (k, wk) in sol.w.iter().enumerate() {
        for l in 0..7 {
            let zero = wk[inst.block_range(l)].iter().all(|v| v.norm() == 0.0);
            assert_eq!(zero, l != inst.cell_of_user[k]);
        }
    }
}
