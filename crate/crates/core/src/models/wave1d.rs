//! One-dimensional wave equation `ρ v_tt = (T v_ζ)_ζ − d v_t` on `(−1, 0)`
//! in first-order form on a staggered grid.
//!
//! Momenta `p_j = ρ_j v_t` live at the `N` cell centers, strains `q_f = v_ζ`
//! at the faces `f = 0..=N`. Interior faces are always states. A boundary
//! face is a state when the velocity is prescribed there (clamped end or
//! velocity input); with a prescribed force it is eliminated. The energy is
//! `½ Σ h p_j² / ρ_j + ½ Σ w_f T_f q_f²` with `w_f = h` inside and `h/2` on
//! the boundary.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::node::{NodeBlocks, SystemNode};

/// Condition at `ζ = −1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeftBoundary {
    /// `v_t = 0`.
    Clamped,
    /// External port: velocity in, force out.
    ExternalVelocity,
    /// External port: force in, velocity out.
    ExternalForce,
}

/// Orientation of the internal port at `ζ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortMode {
    /// Input `v_t(0)`, output `T v_ζ(0)`.
    VelocityInForceOut,
    /// Input `T v_ζ(0)`, output `v_t(0)`.
    ForceInVelocityOut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wave1dParams {
    pub rho: Vec<f64>,
    pub tension: Vec<f64>,
    pub damping: Vec<f64>,
    pub left: LeftBoundary,
}

impl Wave1dParams {
    pub fn uniform(cells: usize, rho: f64, tension: f64, damping: f64) -> Self {
        Self {
            rho: vec![rho; cells],
            tension: vec![tension; cells],
            damping: vec![damping; cells],
            left: LeftBoundary::Clamped,
        }
    }

    pub fn cells(&self) -> usize {
        self.rho.len()
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        -1.0 + (j as f64 + 0.5) * self.h()
    }

    pub fn face(&self, f: usize) -> f64 {
        -1.0 + f as f64 * self.h()
    }

    fn validate(&self) -> Result<()> {
        let n = self.cells();
        if n < 2 {
            return Err(Error::BadParams(format!("wave needs at least 2 cells, got {n}")));
        }
        if self.tension.len() != n || self.damping.len() != n {
            return Err(Error::BadParams("coefficient arrays differ in length".into()));
        }
        if self.rho.iter().chain(&self.tension).any(|v| !(*v > 0.0)) {
            return Err(Error::BadParams("density and tension must be positive".into()));
        }
        if self.damping.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::BadParams("damping must be non-negative".into()));
        }
        Ok(())
    }

    /// Faces carried as states, in increasing order.
    pub fn state_faces(&self, mode: PortMode) -> Vec<usize> {
        let n = self.cells();
        let left = self.left != LeftBoundary::ExternalForce;
        let right = mode == PortMode::VelocityInForceOut;
        (0..=n)
            .filter(|&f| (f > 0 && f < n) || (f == 0 && left) || (f == n && right))
            .collect()
    }

    fn face_tension(&self, f: usize) -> f64 {
        let n = self.cells();
        match f {
            0 => self.tension[0],
            f if f == n => self.tension[n - 1],
            f => 0.5 * (self.tension[f - 1] + self.tension[f]),
        }
    }

    /// State vector for initial velocity `v_t(ζ, 0)` and strain `v_ζ(ζ, 0)`.
    pub fn initial_state(&self, mode: PortMode, velocity: impl Fn(f64) -> f64, strain: impl Fn(f64) -> f64) -> DVector<f64> {
        let faces = self.state_faces(mode);
        let n = self.cells();
        let mut x = DVector::zeros(n + faces.len());
        for j in 0..n {
            x[j] = self.rho[j] * velocity(self.center(j));
        }
        for (k, &f) in faces.iter().enumerate() {
            x[n + k] = strain(self.face(f));
        }
        x
    }
}

/// Assembles the staggered-grid node. External port (if any) sits at the left
/// end, the single internal port at the right end.
pub fn build_wave1d(params: &Wave1dParams, mode: PortMode) -> Result<SystemNode> {
    params.validate()?;
    let n = params.cells();
    let h = params.h();
    let faces = params.state_faces(mode);
    let dim = n + faces.len();
    let slot = |f: usize| faces.iter().position(|&g| g == f).map(|k| n + k);
    let m_ext = usize::from(params.left != LeftBoundary::Clamped);
    let mut b = NodeBlocks::zeros(dim, m_ext, 1);
    let mut weight = DVector::zeros(dim);

    for j in 0..n {
        let rho = params.rho[j];
        weight[j] = h / rho;
        b.a[(j, j)] = -params.damping[j] / rho;
        // p_j' = (σ_{j+1} − σ_j)/h with σ_f = T_f q_f
        if let Some(s) = slot(j + 1) {
            b.a[(j, s)] += params.face_tension(j + 1) / h;
        }
        if let Some(s) = slot(j) {
            b.a[(j, s)] -= params.face_tension(j) / h;
        }
    }
    for &f in &faces {
        let s = slot(f).expect("listed face");
        let t = params.face_tension(f);
        if f > 0 && f < n {
            weight[s] = h * t;
            b.a[(s, f)] += 1.0 / (h * params.rho[f]);
            b.a[(s, f - 1)] -= 1.0 / (h * params.rho[f - 1]);
        } else if f == 0 {
            weight[s] = 0.5 * h * t;
            b.a[(s, 0)] += 2.0 / (h * params.rho[0]);
        } else {
            weight[s] = 0.5 * h * t;
            b.a[(s, n - 1)] -= 2.0 / (h * params.rho[n - 1]);
        }
    }

    match params.left {
        LeftBoundary::Clamped => {}
        LeftBoundary::ExternalVelocity => {
            let s = slot(0).expect("velocity-type left face is a state");
            b.b_ext[(s, 0)] = -2.0 / h;
            b.c_ext[(0, s)] = -params.face_tension(0);
        }
        LeftBoundary::ExternalForce => {
            b.b_ext[(0, 0)] = 1.0 / h;
            b.c_ext[(0, 0)] = 1.0 / params.rho[0];
        }
    }
    match mode {
        PortMode::VelocityInForceOut => {
            let s = slot(n).expect("velocity-type right face is a state");
            b.b_int[(s, 0)] = 2.0 / h;
            b.c_int[(0, s)] = params.face_tension(n);
        }
        PortMode::ForceInVelocityOut => {
            b.b_int[(n - 1, 0)] = 1.0 / h;
            b.c_int[(0, n - 1)] = 1.0 / params.rho[n - 1];
        }
    }
    SystemNode::assemble(b, DMatrix::from_diagonal(&weight))
}
