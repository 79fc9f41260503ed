//! Time-discrete versions of the two operators of the splitting.
//!
//! `M` maps a trajectory pair `(x, u)` to the residual of the subsystem
//! dynamics and the internal output; `N` is the interconnection
//! `(x, u) ↦ (0, −N_c u)`. Time is discretized by the implicit midpoint rule:
//! states live on grid nodes, everything else on midpoints.
//!
//! Both operators act on the same Hilbert space of midpoint pairs `(w, z)`
//! with inner product `τ Σ_j (w_jᵀ H w_j + z_jᵀ z_j)`. A trajectory pair is
//! embedded there by averaging its state to midpoints (with the initial state
//! pinned) and keeping its input, see [`CoupledProblem::embed`].

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{put, Factorized};
use crate::node::{check_coupling_monotone, check_dissipativity, CouplingOperator, SystemNode, DISSIPATIVITY_TOL};
use crate::trajectory::{GridTrajectory, Sampling, TimeGrid, TrajPair};

/// Composed node, interconnection, initial state, external input and grid.
#[derive(Debug, Clone)]
pub struct CoupledProblem {
    node: SystemNode,
    coupling: CouplingOperator,
    grid: TimeGrid,
    x0: DVector<f64>,
    u_ext: GridTrajectory,
}

/// A point `(w, z)` of the image space; both parts midpoint-sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorImage {
    pub w: GridTrajectory,
    pub z: GridTrajectory,
}

impl OperatorImage {
    pub fn zeros(grid: TimeGrid, n: usize, m_int: usize) -> Self {
        Self {
            w: GridTrajectory::zeros(grid, Sampling::Midpoint, n),
            z: GridTrajectory::zeros(grid, Sampling::Midpoint, m_int),
        }
    }

    /// `α self + β other`.
    pub fn lincomb(&self, alpha: f64, other: &OperatorImage, beta: f64) -> OperatorImage {
        let mut out = self.clone();
        *out.w.values_mut() = self.w.values() * alpha + other.w.values() * beta;
        *out.z.values_mut() = self.z.values() * alpha + other.z.values() * beta;
        out
    }
}

impl CoupledProblem {
    pub fn new(
        node: SystemNode,
        coupling: CouplingOperator,
        grid: TimeGrid,
        x0: DVector<f64>,
        u_ext: GridTrajectory,
    ) -> Result<Self> {
        let report = check_dissipativity(&node, DISSIPATIVITY_TOL);
        if !report.is_dissipative {
            return Err(Error::NotDissipative {
                max_sym_eig: report.max_sym_eig,
            });
        }
        if coupling.dim() != node.m_int() {
            return Err(Error::DimensionMismatch(format!(
                "coupling acts on {} ports, node has {}",
                coupling.dim(),
                node.m_int()
            )));
        }
        if !check_coupling_monotone(&coupling, DISSIPATIVITY_TOL) {
            return Err(Error::CouplingNotMonotone {
                max_sym_eig: crate::linalg::max_sym_eigenvalue(&crate::linalg::sym_part(coupling.matrix())),
            });
        }
        if x0.len() != node.n() {
            return Err(Error::DimensionMismatch(format!(
                "initial state has length {}, node has {} states",
                x0.len(),
                node.n()
            )));
        }
        if u_ext.sampling() != Sampling::Midpoint {
            return Err(Error::SamplingMismatch {
                expected: "midpoint",
            });
        }
        if *u_ext.grid() != grid {
            return Err(Error::GridMismatch("external input is on another grid".into()));
        }
        if u_ext.dim() != node.m_ext() {
            return Err(Error::DimensionMismatch(format!(
                "external input has dimension {}, node has {} external ports",
                u_ext.dim(),
                node.m_ext()
            )));
        }
        Ok(Self {
            node,
            coupling,
            grid,
            x0,
            u_ext,
        })
    }

    pub fn node(&self) -> &SystemNode {
        &self.node
    }
    pub fn coupling(&self) -> &CouplingOperator {
        &self.coupling
    }
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }
    pub fn u_ext(&self) -> &GridTrajectory {
        &self.u_ext
    }

    /// Same problem with the initial state and external input set to zero.
    pub fn homogeneous(&self) -> CoupledProblem {
        CoupledProblem {
            x0: DVector::zeros(self.node.n()),
            u_ext: GridTrajectory::zeros(self.grid, Sampling::Midpoint, self.node.m_ext()),
            ..self.clone()
        }
    }

    fn check_pair(&self, p: &TrajPair) -> Result<()> {
        if *p.x.grid() != self.grid || *p.u.grid() != self.grid {
            return Err(Error::GridMismatch("pair is on another grid".into()));
        }
        if p.x.sampling() != Sampling::Node {
            return Err(Error::SamplingMismatch { expected: "node" });
        }
        if p.u.sampling() != Sampling::Midpoint {
            return Err(Error::SamplingMismatch {
                expected: "midpoint",
            });
        }
        if p.x.dim() != self.node.n() || p.u.dim() != self.node.m_int() {
            return Err(Error::DimensionMismatch(format!(
                "pair dimensions ({}, {}), expected ({}, {})",
                p.x.dim(),
                p.u.dim(),
                self.node.n(),
                self.node.m_int()
            )));
        }
        Ok(())
    }

    fn check_image(&self, q: &OperatorImage) -> Result<()> {
        if *q.w.grid() != self.grid || *q.z.grid() != self.grid {
            return Err(Error::GridMismatch("image is on another grid".into()));
        }
        if q.w.sampling() != Sampling::Midpoint || q.z.sampling() != Sampling::Midpoint {
            return Err(Error::SamplingMismatch {
                expected: "midpoint",
            });
        }
        if q.w.dim() != self.node.n() || q.z.dim() != self.node.m_int() {
            return Err(Error::DimensionMismatch(format!(
                "image dimensions ({}, {}), expected ({}, {})",
                q.w.dim(),
                q.z.dim(),
                self.node.n(),
                self.node.m_int()
            )));
        }
        Ok(())
    }

    /// State at node `j` with the initial state substituted for row 0.
    fn pinned(&self, x: &GridTrajectory, j: usize) -> DVector<f64> {
        if j == 0 {
            self.x0.clone()
        } else {
            x.row(j)
        }
    }

    /// Midpoint states `(x_j + x_{j+1}) / 2` with `x_0` pinned.
    pub fn state_midpoints(&self, x: &GridTrajectory) -> GridTrajectory {
        let mut xm = x.to_midpoints();
        if self.grid.steps() > 0 && self.node.n() > 0 {
            let first = (&self.x0 + x.row(1)) * 0.5;
            xm.set_row(0, &first);
        }
        xm
    }

    /// Embedding of a trajectory pair into the image space.
    pub fn embed(&self, p: &TrajPair) -> OperatorImage {
        OperatorImage {
            w: self.state_midpoints(&p.x),
            z: p.u.clone(),
        }
    }

    /// Weighted norm `(τ Σ_j e^{-2ω t_{j+1/2}} (w_jᵀ H w_j + |z_j|²))^{1/2}`.
    pub fn image_norm(&self, q: &OperatorImage, omega: f64) -> f64 {
        self.image_inner(q, q, omega).max(0.0).sqrt()
    }

    pub fn image_inner(&self, a: &OperatorImage, b: &OperatorImage, omega: f64) -> f64 {
        let h = self.node.h();
        let hb = b.w.values() * h.transpose();
        let mut sum = 0.0;
        for j in 0..self.grid.steps() {
            let s = a.w.values().row(j).dot(&hb.row(j)) + a.z.values().row(j).dot(&b.z.values().row(j));
            sum += (-2.0 * omega * self.grid.mid_time(j)).exp() * s;
        }
        self.grid.tau() * sum
    }

    /// External output `C_ext x + D11 𝔲 + D12 u` at midpoints.
    pub fn external_output(&self, p: &TrajPair) -> GridTrajectory {
        let xm = self.state_midpoints(&p.x);
        let vals = xm.values() * self.node.c_ext().transpose()
            + self.u_ext.values() * self.node.d11().transpose()
            + p.u.values() * self.node.d12().transpose();
        GridTrajectory::new(self.grid, Sampling::Midpoint, vals).expect("row count is fixed by the grid")
    }

    /// Internal output `C_int x + D21 𝔲 + D22 u` at midpoints.
    pub fn internal_output(&self, p: &TrajPair) -> GridTrajectory {
        let xm = self.state_midpoints(&p.x);
        let vals = xm.values() * self.node.c_int().transpose()
            + self.u_ext.values() * self.node.d21().transpose()
            + p.u.values() * self.node.d22().transpose();
        GridTrajectory::new(self.grid, Sampling::Midpoint, vals).expect("row count is fixed by the grid")
    }

    /// Uniform `[-1, 1]` entries in every free sample (row 0 of `x` is the
    /// initial state).
    pub fn random_pair(&self, rng: &mut impl Rng) -> TrajPair {
        let mut x = GridTrajectory::zeros(self.grid, Sampling::Node, self.node.n());
        let mut u = GridTrajectory::zeros(self.grid, Sampling::Midpoint, self.node.m_int());
        x.set_row(0, &self.x0);
        for v in x.values_mut().rows_mut(1, self.grid.steps()).iter_mut() {
            *v = rng.gen_range(-1.0..=1.0);
        }
        for v in u.values_mut().iter_mut() {
            *v = rng.gen_range(-1.0..=1.0);
        }
        TrajPair { x, u }
    }

    pub fn random_image(&self, rng: &mut impl Rng) -> OperatorImage {
        let mut q = OperatorImage::zeros(self.grid, self.node.n(), self.node.m_int());
        for v in q.w.values_mut().iter_mut().chain(q.z.values_mut().iter_mut()) {
            *v = rng.gen_range(-1.0..=1.0);
        }
        q
    }
}

/// Midpoint-rule residual of the subsystem dynamics and the internal output.
pub fn apply_m(problem: &CoupledProblem, p: &TrajPair) -> Result<OperatorImage> {
    problem.check_pair(p)?;
    let node = problem.node();
    let grid = problem.grid();
    let tau = grid.tau();
    let xm = problem.state_midpoints(&p.x);
    let mut w = GridTrajectory::zeros(*grid, Sampling::Midpoint, node.n());
    for j in 0..grid.steps() {
        let dx = (p.x.row(j + 1) - problem.pinned(&p.x, j)) / tau;
        let rhs = node.a() * xm.row(j) + node.b_ext() * problem.u_ext().row(j) + node.b_int() * p.u.row(j);
        w.set_row(j, &(dx - rhs));
    }
    Ok(OperatorImage {
        w,
        z: problem.internal_output(p),
    })
}

/// `(I + λM)(p) = ι(p) + λ M(p)`.
pub fn apply_shifted_m(problem: &CoupledProblem, lambda: f64, p: &TrajPair) -> Result<OperatorImage> {
    let m = apply_m(problem, p)?;
    Ok(problem.embed(p).lincomb(1.0, &m, lambda))
}

/// Factorized per-step matrix of `(I + λM)⁻¹`, reusable across calls.
pub struct MResolvent {
    lambda: f64,
    step: Factorized,
}

impl MResolvent {
    /// The step matrix in the unknowns `(x_{j+1/2}, u_{j+1/2})`:
    /// `[[(1 + 2λ/τ) I − λA, −λB_int], [λC_int, I + λD22]]`.
    pub fn new(problem: &CoupledProblem, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::BadParams(format!("lambda must be positive, got {lambda}")));
        }
        let node = problem.node();
        let (n, mi) = (node.n(), node.m_int());
        let tau = problem.grid().tau();
        let mut s = DMatrix::zeros(n + mi, n + mi);
        let top = DMatrix::identity(n, n) * (1.0 + 2.0 * lambda / tau) - node.a() * lambda;
        put(&mut s, 0, 0, &top);
        put(&mut s, 0, n, &(node.b_int() * -lambda));
        put(&mut s, n, 0, &(node.c_int() * lambda));
        put(&mut s, n, n, &(DMatrix::identity(mi, mi) + node.d22() * lambda));
        let step = Factorized::new(s).ok_or(Error::SingularStep { step: 0 })?;
        Ok(Self { lambda, step })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Solves `(I + λM) p = rhs` by marching in time.
    pub fn solve(&self, problem: &CoupledProblem, rhs: &OperatorImage) -> Result<TrajPair> {
        problem.check_image(rhs)?;
        let node = problem.node();
        let grid = problem.grid();
        let (n, mi) = (node.n(), node.m_int());
        let lambda = self.lambda;
        let c = 2.0 * lambda / grid.tau();
        let mut x = GridTrajectory::zeros(*grid, Sampling::Node, n);
        let mut u = GridTrajectory::zeros(*grid, Sampling::Midpoint, mi);
        x.set_row(0, problem.x0());
        let mut xj = problem.x0().clone();
        let mut b = DVector::zeros(n + mi);
        for j in 0..grid.steps() {
            let ue = problem.u_ext().row(j);
            let top = rhs.w.row(j) + node.b_ext() * &ue * lambda + &xj * c;
            let bottom = rhs.z.row(j) - node.d21() * &ue * lambda;
            b.rows_mut(0, n).copy_from(&top);
            b.rows_mut(n, mi).copy_from(&bottom);
            let sol = self.step.solve(&b);
            let xm = sol.rows(0, n).into_owned();
            let next = &xm * 2.0 - &xj;
            if !next.iter().all(|v| v.is_finite()) {
                return Err(Error::SingularStep { step: j });
            }
            x.set_row(j + 1, &next);
            u.set_row(j, &sol.rows(n, mi).into_owned());
            xj = next;
        }
        Ok(TrajPair { x, u })
    }
}

/// One-shot `(I + λM)⁻¹`.
pub fn resolve_m(problem: &CoupledProblem, lambda: f64, rhs: &OperatorImage) -> Result<TrajPair> {
    MResolvent::new(problem, lambda)?.solve(problem, rhs)
}

/// Factorized `I − λN_c` for the pointwise coupling maps.
pub struct CouplingResolvent {
    lambda: f64,
    n_c: DMatrix<f64>,
    factor: Factorized,
}

impl CouplingResolvent {
    pub fn new(coupling: &CouplingOperator, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::BadParams(format!("lambda must be positive, got {lambda}")));
        }
        let m = coupling.dim();
        let shifted = DMatrix::identity(m, m) - coupling.matrix() * lambda;
        let factor = Factorized::new(shifted).ok_or(Error::SingularCoupling)?;
        Ok(Self {
            lambda,
            n_c: coupling.matrix().clone(),
            factor,
        })
    }

    /// `(w, z) ↦ (w, (I − λN_c)⁻¹ z)`.
    pub fn resolvent(&self, q: &OperatorImage) -> OperatorImage {
        let mut out = q.clone();
        if self.n_c.nrows() > 0 {
            let zt = self.factor.solve_mat(&q.z.values().transpose());
            *out.z.values_mut() = zt.transpose();
        }
        out
    }

    /// `(w, z) ↦ (w, (I + λN_c)(I − λN_c)⁻¹ z)`.
    pub fn cayley(&self, q: &OperatorImage) -> OperatorImage {
        let mut out = self.resolvent(q);
        if self.n_c.nrows() > 0 {
            let r = out.z.values().clone();
            *out.z.values_mut() = &r + &r * self.n_c.transpose() * self.lambda;
        }
        out
    }
}

pub fn apply_resolvent_n(problem: &CoupledProblem, lambda: f64, q: &OperatorImage) -> Result<OperatorImage> {
    problem.check_image(q)?;
    Ok(CouplingResolvent::new(problem.coupling(), lambda)?.resolvent(q))
}

pub fn cayley_n(problem: &CoupledProblem, lambda: f64, q: &OperatorImage) -> Result<OperatorImage> {
    problem.check_image(q)?;
    Ok(CouplingResolvent::new(problem.coupling(), lambda)?.cayley(q))
}

/// Slack statistics of the discrete monotonicity inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    pub samples: usize,
    /// `min (⟨ιΔp, MΔp⟩ − ½‖Δx_N‖²_H) / (1 + ‖ιΔp‖‖MΔp‖)`.
    pub min_slack: f64,
    pub pass: bool,
}

pub const MONOTONICITY_TOL: f64 = 1e-12;

/// Monotonicity slack of one pair of trajectories, normalized by the size of
/// the pairing.
pub fn monotonicity_slack(problem: &CoupledProblem, p1: &TrajPair, p2: &TrajPair) -> Result<f64> {
    let m1 = apply_m(problem, p1)?;
    let m2 = apply_m(problem, p2)?;
    let dm = m1.lincomb(1.0, &m2, -1.0);
    let dp = problem.embed(p1).lincomb(1.0, &problem.embed(p2), -1.0);
    let pairing = problem.image_inner(&dp, &dm, 0.0);
    let last = problem.grid().steps();
    let dx = p1.x.row(last) - p2.x.row(last);
    let end = 0.5 * dx.dot(&(problem.node().h() * &dx));
    let scale = 1.0 + problem.image_norm(&dp, 0.0) * problem.image_norm(&dm, 0.0);
    Ok((pairing - end) / scale)
}

/// Samples `n_samples` random pairs and records the smallest slack.
pub fn check_discrete_monotonicity(problem: &CoupledProblem, n_samples: usize, seed: u64) -> Result<MonotonicityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..n_samples {
        let p1 = problem.random_pair(&mut rng);
        let p2 = problem.random_pair(&mut rng);
        min_slack = min_slack.min(monotonicity_slack(problem, &p1, &p2)?);
    }
    Ok(MonotonicityReport {
        samples: n_samples,
        min_slack,
        pass: min_slack >= -MONOTONICITY_TOL,
    })
}

/// Supply-rate residuals `r_J = ‖x_J‖²_H − ‖x_0‖²_H − 2τ Σ_{i<J} ⟨v_i, y_i⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBalance {
    pub residuals: Vec<f64>,
    pub max_violation: f64,
    pub initial_energy: f64,
    pub pass: bool,
}

pub const ENERGY_TOL: f64 = 1e-10;

/// Checks the dissipation inequality along a state trajectory driven by the
/// port values `ports` (external ports first, then internal).
pub fn discrete_energy_balance(node: &SystemNode, x: &GridTrajectory, ports: &GridTrajectory) -> Result<EnergyBalance> {
    if x.sampling() != Sampling::Node {
        return Err(Error::SamplingMismatch { expected: "node" });
    }
    if ports.sampling() != Sampling::Midpoint {
        return Err(Error::SamplingMismatch {
            expected: "midpoint",
        });
    }
    if x.grid() != ports.grid() {
        return Err(Error::GridMismatch("state and port grids differ".into()));
    }
    let m = node.m_ext() + node.m_int();
    if x.dim() != node.n() || ports.dim() != m {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} and port dimension {}, expected {} and {}",
            x.dim(),
            ports.dim(),
            node.n(),
            m
        )));
    }
    let h = node.h();
    let energy = |v: DVector<f64>| v.dot(&(h * &v));
    let grid = x.grid();
    let tau = grid.tau();
    let xm = x.to_midpoints();
    let outputs = xm.values() * node.c_full().transpose() + ports.values() * node.d().transpose();
    let e0 = energy(x.row(0));
    let mut supplied = 0.0;
    let mut residuals = vec![0.0];
    for j in 0..grid.steps() {
        supplied += 2.0 * tau * ports.values().row(j).dot(&outputs.row(j));
        residuals.push(energy(x.row(j + 1)) - e0 - supplied);
    }
    let max_violation = residuals.iter().copied().fold(0.0_f64, f64::max);
    Ok(EnergyBalance {
        pass: max_violation <= ENERGY_TOL * (1.0 + e0),
        residuals,
        max_violation,
        initial_energy: e0,
    })
}

/// Energy balance of every component of a composed node along a trajectory
/// pair of `problem`. Each component sees its slice of the external input
/// and of the internal input `u`.
///
/// Iterates of the splitting solve the dynamics only up to the state part
/// `f` of `M(p)`. That residual is booked as one more port with input `f` and
/// output `H x`, supplying `⟨f, x⟩_H`; it vanishes on closed-loop solutions.
pub fn subsystem_energy_balances(problem: &CoupledProblem, p: &TrajPair) -> Result<Vec<EnergyBalance>> {
    let residual = apply_m(problem, p)?.w;
    let node = problem.node();
    let grid = *problem.grid();
    let mut out = Vec::with_capacity(node.spans().len());
    for (i, span) in node.spans().iter().enumerate() {
        let sub = node.subsystem(i).ok_or(Error::EmptyList)?;
        let (n, se, si) = (span.state.len(), span.ext.len(), span.int.len());
        let forced = with_source_port(&sub)?;

        let mut ports = DMatrix::zeros(grid.steps(), se + n + si);
        put(&mut ports, 0, 0, &problem.u_ext().values().columns(span.ext.start, se).into_owned());
        put(&mut ports, 0, se, &residual.values().columns(span.state.start, n).into_owned());
        put(&mut ports, 0, se + n, &p.u.values().columns(span.int.start, si).into_owned());
        let mut xs = p.x.values().columns(span.state.start, n).into_owned();
        xs.row_mut(0).copy_from(&problem.x0().rows(span.state.start, n).transpose());
        let x = GridTrajectory::new(grid, Sampling::Node, xs)?;
        let ports = GridTrajectory::new(grid, Sampling::Midpoint, ports)?;
        out.push(discrete_energy_balance(&forced, &x, &ports)?);
    }
    Ok(out)
}

/// Appends an external port `(f, H x)` behind the existing external ports.
fn with_source_port(node: &SystemNode) -> Result<SystemNode> {
    let (n, me, mi) = (node.n(), node.m_ext(), node.m_int());
    let mut b_ext = DMatrix::zeros(n, me + n);
    put(&mut b_ext, 0, 0, node.b_ext());
    put(&mut b_ext, 0, me, &DMatrix::identity(n, n));
    let mut c_ext = DMatrix::zeros(me + n, n);
    put(&mut c_ext, 0, 0, node.c_ext());
    put(&mut c_ext, me, 0, node.h());
    let mut d = DMatrix::zeros(me + n + mi, me + n + mi);
    put(&mut d, 0, 0, node.d11());
    put(&mut d, 0, me + n, node.d12());
    put(&mut d, me + n, 0, node.d21());
    put(&mut d, me + n, me + n, node.d22());
    let blocks = crate::node::NodeBlocks {
        a: node.a().clone(),
        b_ext,
        b_int: node.b_int().clone(),
        c_ext,
        c_int: node.c_int().clone(),
        d,
    };
    SystemNode::assemble(blocks, node.h().clone())
}
