//! Heat conduction with a fading-memory flux on `(0, 1)`:
//! `w_t = w_ζζ + ∫₀^∞ g(s) w_ζζ(t − s) ds`, `w(1) = 0`.
//!
//! For the exponential kernel `g(s) = e^{−s}` the memory term is
//! `m(t) = ∫₀^∞ e^{−s} w(t − s) ds`, which obeys `m_t = w − m`, so that
//! `w_t = (w + m)_ζζ`. Both fields are discretized with linear finite
//! elements on the nodes `ζ_i = i h`, `i < N` (the node at `ζ = 1` is
//! removed by the Dirichlet condition) and a lumped mass matrix.
//!
//! The storage function `½ wᵀ M w + ½ mᵀ K m` has rate
//! `−wᵀKw − mᵀKm + u y`, where the port is the boundary flux
//! `u = −(w + m)_ζ(0)` with collocated output `y = w(0)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::put;
use crate::node::{NodeBlocks, SystemNode};

/// Memory kernel of the heat flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    /// `g(s) = e^{−s}`.
    #[default]
    Exponential,
}

impl Kernel {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            Kernel::Exponential => (-s).exp(),
        }
    }

    /// `∫₀^∞ g(s) ds`, in closed form.
    pub fn total_mass(self) -> f64 {
        match self {
            Kernel::Exponential => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatCgParams {
    /// Unknown nodes `ζ_i = i/N`, `i = 0..N`.
    pub nodes: usize,
    pub kernel: Kernel,
}

impl HeatCgParams {
    pub fn new(nodes: usize) -> Self {
        Self {
            nodes,
            kernel: Kernel::Exponential,
        }
    }

    pub fn h(&self) -> f64 {
        1.0 / self.nodes as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    /// State `(w, m)` for an initial temperature profile and zero memory.
    pub fn initial_state(&self, temperature: impl Fn(f64) -> f64) -> DVector<f64> {
        let n = self.nodes;
        let mut x = DVector::zeros(2 * n);
        for i in 0..n {
            x[i] = temperature(self.node(i));
        }
        x
    }

    /// Lumped mass `diag(h/2, h, …, h)` and stiffness of the Dirichlet problem.
    pub fn mass_and_stiffness(&self) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.nodes;
        let h = self.h();
        let mut mass = DVector::from_element(n, h);
        mass[0] = 0.5 * h;
        // element e couples nodes e and e+1; node n is the Dirichlet node
        let mut k = DMatrix::zeros(n, n);
        for e in 0..n {
            k[(e, e)] += 1.0 / h;
            if e + 1 < n {
                k[(e + 1, e + 1)] += 1.0 / h;
                k[(e, e + 1)] -= 1.0 / h;
                k[(e + 1, e)] -= 1.0 / h;
            }
        }
        (mass, k)
    }
}

pub fn build_heat_cg1d(params: &HeatCgParams) -> Result<SystemNode> {
    let n = params.nodes;
    if n < 2 {
        return Err(Error::BadParams(format!("heat model needs at least 2 nodes, got {n}")));
    }
    let (mass, k) = params.mass_and_stiffness();
    let inv_mass = DMatrix::from_diagonal(&mass.map(|v| 1.0 / v));
    let mk = &inv_mass * &k;

    let mut b = NodeBlocks::zeros(2 * n, 0, 1);
    put(&mut b.a, 0, 0, &(-&mk));
    put(&mut b.a, 0, n, &(-&mk));
    put(&mut b.a, n, 0, &DMatrix::identity(n, n));
    put(&mut b.a, n, n, &(-DMatrix::identity(n, n)));
    b.b_int[(0, 0)] = 1.0 / mass[0];
    b.c_int[(0, 0)] = 1.0;

    let mut h = DMatrix::zeros(2 * n, 2 * n);
    put(&mut h, 0, 0, &DMatrix::from_diagonal(&mass));
    put(&mut h, n, n, &k);
    SystemNode::assemble(b, h)
}
