//! Monolithic solve of the discretized closed loop `M(x, u) + N(x, u) = 0`.
//!
//! Uses exactly the discretization of [`crate::discrete`], so its result is
//! the fixed point of the splitting iteration and not merely close to it.

use nalgebra::{DMatrix, DVector};

use crate::discrete::{apply_m, CoupledProblem};
use crate::error::{Error, Result};
use crate::linalg::{put, Factorized};
use crate::trajectory::{GridTrajectory, Sampling, TrajPair};

/// Marches the closed loop in time. Per step the unknowns are the midpoint
/// state and the internal input:
///
/// ```text
/// [ 2I/τ − A    −B_int      ] [x_{j+1/2}]   [ 2x_j/τ + B_ext 𝔲 ]
/// [ C_int       D22 − N_c   ] [u_{j+1/2}] = [ −D21 𝔲           ]
/// ```
pub fn solve_monolithic(problem: &CoupledProblem) -> Result<TrajPair> {
    let node = problem.node();
    let grid = problem.grid();
    let (n, mi) = (node.n(), node.m_int());
    let tau = grid.tau();

    let mut s = DMatrix::zeros(n + mi, n + mi);
    put(&mut s, 0, 0, &(DMatrix::identity(n, n) * (2.0 / tau) - node.a()));
    put(&mut s, 0, n, &(-node.b_int()));
    put(&mut s, n, 0, node.c_int());
    put(&mut s, n, n, &(node.d22() - problem.coupling().matrix()));
    let step = Factorized::new(s).ok_or(Error::SingularClosedLoop { step: 0 })?;

    let mut x = GridTrajectory::zeros(*grid, Sampling::Node, n);
    let mut u = GridTrajectory::zeros(*grid, Sampling::Midpoint, mi);
    x.set_row(0, problem.x0());
    let mut xj = problem.x0().clone();
    let mut b = DVector::zeros(n + mi);
    for j in 0..grid.steps() {
        let ue = problem.u_ext().row(j);
        b.rows_mut(0, n).copy_from(&(&xj * (2.0 / tau) + node.b_ext() * &ue));
        b.rows_mut(n, mi).copy_from(&(-(node.d21() * &ue)));
        let sol = step.solve(&b);
        let next = sol.rows(0, n) * 2.0 - &xj;
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularClosedLoop { step: j });
        }
        x.set_row(j + 1, &next);
        u.set_row(j, &sol.rows(n, mi).into_owned());
        xj = next;
    }
    Ok(TrajPair { x, u })
}

/// `‖M(p) + N(p)‖ / max(1, ‖ι(p)‖)` in the image-space norm.
pub fn closed_loop_residual(problem: &CoupledProblem, p: &TrajPair) -> Result<f64> {
    let mut r = apply_m(problem, p)?;
    let nu = p.u.values() * problem.coupling().matrix().transpose();
    *r.z.values_mut() -= nu;
    let scale = problem.image_norm(&problem.embed(p), 0.0).max(1.0);
    Ok(problem.image_norm(&r, 0.0) / scale)
}
