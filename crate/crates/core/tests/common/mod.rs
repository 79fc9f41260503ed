//! Shared builders for the integration tests.
#![allow(dead_code)]

use dyniter::node::{NodeBlocks, SystemNode};
use dyniter::{CoupledProblem, CouplingOperator, GridTrajectory, Sampling, TimeGrid};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..=1.0))
}

pub fn random_skew(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let m = random_matrix(rng, n, n);
    (&m - m.transpose()) * 0.5
}

/// Passive node by construction: `HA = J − R`, `B = H⁻¹Cᵀ`, `D = skew + S`
/// with `R, S ≽ 0` scaled by `damping`.
pub fn random_passive_node(rng: &mut impl Rng, n: usize, me: usize, mi: usize, damping: f64) -> SystemNode {
    let l = random_matrix(rng, n, n);
    let h = &l * l.transpose() + DMatrix::identity(n, n) * 0.5;
    let h_inv = h.clone().try_inverse().expect("SPD");
    let q = random_matrix(rng, n, n);
    let r = &q * q.transpose() * damping;
    let a = &h_inv * (random_skew(rng, n) - r);
    let c = random_matrix(rng, me + mi, n);
    let b = &h_inv * c.transpose();
    let p = random_matrix(rng, me + mi, me + mi);
    let d = random_skew(rng, me + mi) + &p * p.transpose() * damping;

    let mut blocks = NodeBlocks::zeros(n, me, mi);
    blocks.a = a;
    blocks.b_ext = b.columns(0, me).into_owned();
    blocks.b_int = b.columns(me, mi).into_owned();
    blocks.c_ext = c.rows(0, me).into_owned();
    blocks.c_int = c.rows(me, mi).into_owned();
    blocks.d = d;
    SystemNode::assemble(blocks, h).expect("valid node")
}

/// Random passive node closed by a random skew coupling, with random
/// initial state and external input.
pub fn random_problem(seed: u64, n: usize, me: usize, mi: usize, damping: f64, steps: usize) -> CoupledProblem {
    let mut rng = rng(seed);
    let node = random_passive_node(&mut rng, n, me, mi, damping);
    let coupling = CouplingOperator::new(random_skew(&mut rng, mi)).expect("square");
    let grid = TimeGrid::new(1.0, steps).expect("grid");
    let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0));
    let u_ext = GridTrajectory::new(grid, Sampling::Midpoint, random_matrix(&mut rng, steps, me)).expect("rows");
    CoupledProblem::new(node, coupling, grid, x0, u_ext).expect("certified")
}

/// Undamped string clamped at both ends: the right-end force is the internal
/// input and the coupling `y = 0 · u` forces the end velocity to vanish, so
/// no power crosses the port.
pub fn closed_wave_problem(cells: usize, t_final: f64, steps: usize) -> CoupledProblem {
    use dyniter::models::{build_wave1d, PortMode, Wave1dParams};
    use std::f64::consts::PI;
    let params = Wave1dParams::uniform(cells, 1.0, 1.0, 0.0);
    let mode = PortMode::ForceInVelocityOut;
    let node = build_wave1d(&params, mode).expect("wave");
    let x0 = params.initial_state(mode, |z| (PI * z).sin(), |z| (2.0 * PI * z).cos());
    let grid = TimeGrid::new(t_final, steps).expect("grid");
    CoupledProblem::new(
        node,
        CouplingOperator::new(DMatrix::zeros(1, 1)).expect("square"),
        grid,
        x0,
        GridTrajectory::zeros(grid, Sampling::Midpoint, 0),
    )
    .expect("certified")
}
