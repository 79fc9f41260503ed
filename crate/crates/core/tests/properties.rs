//! Property tests over randomly generated passive nodes and trajectories.

mod common;

use common::{random_matrix, random_passive_node, random_problem, rng};
use dyniter::discrete::{
    apply_m, apply_shifted_m, cayley_n, check_discrete_monotonicity, monotonicity_slack, resolve_m,
};
use dyniter::linalg::{min_sym_eigenvalue, sym_part};
use dyniter::models::{build_wave1d, PortMode, Wave1dParams};
use dyniter::node::{check_dissipativity, compose_diagonal, estimate_psop_epsilon, transfer_function, NodeBlocks};
use dyniter::splitting::{init_state, iterate_pair, Splitter};
use dyniter::trajectory::{l2_inner, lincomb, weighted_norm};
use dyniter::{GridTrajectory, Sampling, SystemNode, TimeGrid};
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

fn traj(seed: u64, steps: usize, dim: usize, sampling: Sampling) -> GridTrajectory {
    let grid = TimeGrid::new(1.5, steps).unwrap();
    let rows = match sampling {
        Sampling::Node => steps + 1,
        Sampling::Midpoint => steps,
    };
    GridTrajectory::new(grid, sampling, random_matrix(&mut rng(seed), rows, dim)).unwrap()
}

fn spd(seed: u64, n: usize) -> DMatrix<f64> {
    let l = random_matrix(&mut rng(seed), n, n);
    &l * l.transpose() + DMatrix::identity(n, n) * 0.1
}

/// Same node in coordinates `x = √α x̃`: energy weight `αH`, input map
/// `B/√α`, output map `√α C`.
fn rescaled(node: &SystemNode, alpha: f64) -> SystemNode {
    let s = alpha.sqrt();
    let b = node.blocks();
    let blocks = NodeBlocks {
        a: b.a.clone(),
        b_ext: &b.b_ext / s,
        b_int: &b.b_int / s,
        c_ext: &b.c_ext * s,
        c_int: &b.c_int * s,
        d: b.d.clone(),
    };
    SystemNode::assemble(blocks, node.h() * alpha).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weighted_norm_is_equivalent_to_plain(seed in any::<u64>(), omega in 0.0..4.0_f64, dim in 1usize..4) {
        for sampling in [Sampling::Node, Sampling::Midpoint] {
            let a = traj(seed, 12, dim, sampling);
            let w = spd(seed ^ 1, dim);
            let plain = weighted_norm(&a, 0.0, &w).unwrap();
            let weighted = weighted_norm(&a, omega, &w).unwrap();
            let t = a.grid().t_final();
            prop_assert!(weighted <= plain * (1.0 + 1e-12));
            prop_assert!((-omega * t).exp() * plain <= weighted * (1.0 + 1e-12));
        }
    }

    #[test]
    fn inner_product_obeys_cauchy_schwarz(seed in any::<u64>(), dim in 1usize..4) {
        let a = traj(seed, 9, dim, Sampling::Node);
        let b = traj(seed.wrapping_add(7), 9, dim, Sampling::Node);
        let w = spd(seed ^ 3, dim);
        let ab = l2_inner(&a, &b, &w).unwrap();
        let na = weighted_norm(&a, 0.0, &w).unwrap();
        let nb = weighted_norm(&b, 0.0, &w).unwrap();
        prop_assert!(ab.abs() <= na * nb + 1e-12);
    }

    #[test]
    fn inner_product_is_bilinear(seed in any::<u64>(), alpha in -3.0..3.0_f64, beta in -3.0..3.0_f64) {
        let a = traj(seed, 7, 2, Sampling::Midpoint);
        let b = traj(seed.wrapping_add(1), 7, 2, Sampling::Midpoint);
        let c = traj(seed.wrapping_add(2), 7, 2, Sampling::Midpoint);
        let w = spd(seed ^ 5, 2);
        let lhs = l2_inner(&lincomb(alpha, &a, beta, &b).unwrap(), &c, &w).unwrap();
        let rhs = alpha * l2_inner(&a, &c, &w).unwrap() + beta * l2_inner(&b, &c, &w).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        let sym = l2_inner(&c, &a, &w).unwrap() - l2_inner(&a, &c, &w).unwrap();
        prop_assert!(sym.abs() <= 1e-12);
    }

    #[test]
    fn dissipativity_verdict_survives_energy_rescaling(seed in any::<u64>(), alpha in 0.1..10.0_f64, damping in 0.0..1.0_f64) {
        let mut r = rng(seed);
        let passive = random_passive_node(&mut r, 4, 1, 2, damping);
        let scaled = rescaled(&passive, alpha);
        prop_assert!(check_dissipativity(&passive, 1e-10).is_dissipative);
        prop_assert!(check_dissipativity(&scaled, 1e-10).is_dissipative);

        // a node with a clearly active direction stays non-passive
        let mut blocks = passive.blocks().clone();
        blocks.a += DMatrix::identity(4, 4);
        let active = SystemNode::assemble(blocks, passive.h().clone()).unwrap();
        prop_assert!(!check_dissipativity(&active, 1e-10).is_dissipative);
        prop_assert!(!check_dissipativity(&rescaled(&active, alpha), 1e-10).is_dissipative);
    }

    #[test]
    fn composition_keeps_the_worst_component(seed in any::<u64>(), shift in -0.5..0.5_f64) {
        let mut r = rng(seed);
        let first = random_passive_node(&mut r, 3, 1, 1, 0.5);
        let mut blocks = random_passive_node(&mut r, 2, 0, 2, 0.2).blocks().clone();
        blocks.a += DMatrix::identity(2, 2) * shift;
        let second = SystemNode::assemble(blocks, DMatrix::identity(2, 2)).unwrap();
        let composed = compose_diagonal(&[first.clone(), second.clone()]).unwrap();
        let parts = check_dissipativity(&first, 0.0).max_sym_eig.max(check_dissipativity(&second, 0.0).max_sym_eig);
        let whole = check_dissipativity(&composed, 0.0).max_sym_eig;
        prop_assert!((whole - parts).abs() <= 1e-12 * (1.0 + parts.abs()), "{whole} vs {parts}");
    }

    #[test]
    fn transfer_function_is_positive_real(seed in any::<u64>(), re in 1e-3..2.0_f64, im in -5.0..5.0_f64) {
        let node = random_passive_node(&mut rng(seed), 4, 1, 2, 0.3);
        let g = transfer_function(&node, Complex::new(re, im)).unwrap();
        let m = g.nrows();
        // real form of the Hermitian part
        let mut real = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                let v = g[(i, j)];
                real[(i, j)] = v.re;
                real[(i + m, j + m)] = v.re;
                real[(i, j + m)] = -v.im;
                real[(i + m, j)] = v.im;
            }
        }
        prop_assert!(min_sym_eigenvalue(&sym_part(&real)) >= -1e-10);
    }

    #[test]
    fn resolvent_of_m_contracts(seed in any::<u64>(), lambda in prop::sample::select(vec![0.1, 1.0, 10.0])) {
        let problem = random_problem(seed, 3, 1, 2, 0.3, 8);
        let mut r = rng(seed ^ 11);
        let q1 = problem.random_image(&mut r);
        let q2 = problem.random_image(&mut r);
        let p1 = resolve_m(&problem, lambda, &q1).unwrap();
        let p2 = resolve_m(&problem, lambda, &q2).unwrap();
        let dq = problem.image_norm(&q1.lincomb(1.0, &q2, -1.0), 0.0);
        let ip1 = problem.embed(&p1);
        let ip2 = problem.embed(&p2);
        let dp = problem.image_norm(&ip1.lincomb(1.0, &ip2, -1.0), 0.0);
        prop_assert!(dp <= dq * (1.0 + 1e-10));
        // Cayley map 2ι∘R − I
        let c1 = ip1.lincomb(2.0, &q1, -1.0);
        let c2 = ip2.lincomb(2.0, &q2, -1.0);
        prop_assert!(problem.image_norm(&c1.lincomb(1.0, &c2, -1.0), 0.0) <= dq * (1.0 + 1e-10));
    }

    #[test]
    fn cayley_of_coupling_is_nonexpansive(seed in any::<u64>(), lambda in 0.01..20.0_f64) {
        let problem = random_problem(seed, 2, 0, 3, 0.0, 6);
        let mut r = rng(seed ^ 13);
        let q1 = problem.random_image(&mut r);
        let q2 = problem.random_image(&mut r);
        let d_in = problem.image_norm(&q1.lincomb(1.0, &q2, -1.0), 0.0);
        let c1 = cayley_n(&problem, lambda, &q1).unwrap();
        let c2 = cayley_n(&problem, lambda, &q2).unwrap();
        prop_assert!(problem.image_norm(&c1.lincomb(1.0, &c2, -1.0), 0.0) <= d_in * (1.0 + 1e-12));
    }

    #[test]
    fn m_differences_ignore_data(seed in any::<u64>()) {
        let problem = random_problem(seed, 3, 2, 1, 0.4, 7);
        let homogeneous = problem.homogeneous();
        let mut r = rng(seed ^ 17);
        let p1 = problem.random_pair(&mut r);
        let p2 = problem.random_pair(&mut r);
        let d = apply_m(&problem, &p1).unwrap().lincomb(1.0, &apply_m(&problem, &p2).unwrap(), -1.0);
        let d0 = apply_m(&homogeneous, &p1).unwrap().lincomb(1.0, &apply_m(&homogeneous, &p2).unwrap(), -1.0);
        let diff = d.lincomb(1.0, &d0, -1.0);
        prop_assert!(diff.w.values().amax() <= 1e-10 && diff.z.values().amax() <= 1e-10);
    }

    #[test]
    fn lossless_nodes_meet_monotonicity_with_equality(seed in any::<u64>()) {
        let problem = random_problem(seed, 3, 0, 2, 0.0, 6);
        let mut r = rng(seed ^ 19);
        for _ in 0..4 {
            let p1 = problem.random_pair(&mut r);
            let p2 = problem.random_pair(&mut r);
            prop_assert!(monotonicity_slack(&problem, &p1, &p2).unwrap().abs() <= 1e-12);
        }
        let damped = random_problem(seed, 3, 1, 2, 0.5, 6);
        prop_assert!(check_discrete_monotonicity(&damped, 8, seed).unwrap().pass);
    }

    #[test]
    fn shadow_and_resolvent_forms_agree(seed in any::<u64>(), lambda in prop::sample::select(vec![0.1, 1.0, 10.0])) {
        let problem = random_problem(seed, 3, 1, 2, 0.2, 8);
        let mut state = init_state(&problem, lambda, 0.0).unwrap();
        state.pair = problem.random_pair(&mut rng(seed ^ 23));
        state.shadow = apply_shifted_m(&problem, lambda, &state.pair).unwrap();
        let shadow_form = Splitter::new(&problem, lambda).unwrap().step(&state).unwrap();
        let pair_form = iterate_pair(&problem, lambda, &state.pair).unwrap();
        let dx = (shadow_form.pair.x.values() - pair_form.x.values()).amax();
        let du = (shadow_form.pair.u.values() - pair_form.u.values()).amax();
        prop_assert!(dx.max(du) <= 1e-10 * (1.0 + pair_form.x.values().amax()));
    }
}

#[test]
fn psop_margin_grows_with_damping() {
    let mut last = -1.0;
    for d in [0.0, 0.5, 1.0] {
        let mut p = Wave1dParams::uniform(8, 1.0, 1.0, d);
        p.left = dyniter::models::LeftBoundary::ExternalForce;
        let eps = estimate_psop_epsilon(&build_wave1d(&p, PortMode::VelocityInForceOut).unwrap())
            .unwrap()
            .epsilon;
        assert!(eps >= last, "{eps} after {last}");
        last = eps;
    }
}
