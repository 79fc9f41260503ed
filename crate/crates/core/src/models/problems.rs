//! Ready-made coupled problems.
//!
//! * wave–heat: a string on `(−1, 0)` driven at `ζ = 0` by the temperature of
//!   a heat conductor with memory on `(0, 1)`, which in turn receives the
//!   string's stress as boundary flux (`u₁ = y₂`, `u₂ = −y₁`).
//! * L-shape: the membrane on `(0,1)×(0,2) ∪ (1,2)×(0,1)` split along
//!   `{1}×(0,1)`, with a stress input on the top edge `(0,1)×{2}`. The left
//!   piece takes the interface stress, the right piece the interface velocity
//!   (`u₁ = −y₂`, `u₂ = y₁`).
//! * scalar demo: `ẋ = −x + u`, `y = x`, closed by `u = −y`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::discrete::CoupledProblem;
use crate::error::Result;
use crate::models::heat::{build_heat_cg1d, HeatCgParams};
use crate::models::signal::InputSignal;
use crate::models::wave1d::{build_wave1d, LeftBoundary, PortMode, Wave1dParams};
use crate::models::wave2d::{build_wave2d_rect, check_interface, EdgeSegment, FaceKind, PortGroup, Side, Wave2dParams};
use crate::node::{compose_diagonal, CouplingOperator, NodeBlocks, SystemNode};
use crate::trajectory::{GridTrajectory, TimeGrid};

/// Composes string and heat conductor and closes the loop with
/// `y = [[0, −1], [1, 0]] u`.
pub fn build_wave_heat_problem_from(
    wave: &Wave1dParams,
    heat: &HeatCgParams,
    grid: TimeGrid,
    x0: DVector<f64>,
    u_ext: GridTrajectory,
) -> Result<CoupledProblem> {
    let node = compose_diagonal(&[build_wave1d(wave, PortMode::VelocityInForceOut)?, build_heat_cg1d(heat)?])?;
    CoupledProblem::new(node, CouplingOperator::skew_pair(1, -1.0), grid, x0, u_ext)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveHeatParams {
    pub wave_cells: usize,
    pub heat_nodes: usize,
    pub rho: f64,
    pub tension: f64,
    pub damping: f64,
    pub left: LeftBoundary,
    pub t_final: f64,
    pub steps: usize,
    /// Force or velocity applied at the string's left end, if it is a port.
    pub input: InputSignal,
}

impl Default for WaveHeatParams {
    fn default() -> Self {
        Self {
            wave_cells: 16,
            heat_nodes: 16,
            rho: 1.0,
            tension: 1.0,
            damping: 0.0,
            left: LeftBoundary::Clamped,
            t_final: 2.0,
            steps: 200,
            input: InputSignal::Zero,
        }
    }
}

impl WaveHeatParams {
    /// Damped string with a force input `sin(πt)` at its left end.
    pub fn damped_with_force() -> Self {
        Self {
            damping: 1.0,
            left: LeftBoundary::ExternalForce,
            input: InputSignal::Sine {
                amplitude: 1.0,
                frequency: 0.5,
            },
            ..Self::default()
        }
    }

    pub fn wave(&self) -> Wave1dParams {
        Wave1dParams {
            left: self.left,
            ..Wave1dParams::uniform(self.wave_cells, self.rho, self.tension, self.damping)
        }
    }

    pub fn heat(&self) -> HeatCgParams {
        HeatCgParams::new(self.heat_nodes)
    }

    /// String velocity `sin(π(ζ+1)/2)` at rest strain, temperature
    /// `cos(πζ/2)`, no memory. Both profiles meet the coupling conditions at
    /// the junction: `v_t(0) = w(0) = 1` and `v_ζ(0) = w_ζ(0) = 0`.
    pub fn initial_state(&self) -> DVector<f64> {
        let xw = self
            .wave()
            .initial_state(PortMode::VelocityInForceOut, |z| (0.5 * PI * (z + 1.0)).sin(), |_| 0.0);
        let xh = self.heat().initial_state(|z| (0.5 * PI * z).cos());
        let mut x = DVector::zeros(xw.len() + xh.len());
        x.rows_mut(0, xw.len()).copy_from(&xw);
        x.rows_mut(xw.len(), xh.len()).copy_from(&xh);
        x
    }
}

pub fn build_wave_heat_problem(params: &WaveHeatParams) -> Result<CoupledProblem> {
    let grid = TimeGrid::new(params.t_final, params.steps)?;
    let m_ext = usize::from(params.left != LeftBoundary::Clamped);
    let u_ext = params.input.sample(grid, &vec![1.0; m_ext]);
    build_wave_heat_problem_from(&params.wave(), &params.heat(), grid, params.initial_state(), u_ext)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LshapeParams {
    /// Cells per unit length in both directions.
    pub cells_per_unit: usize,
    pub rho: f64,
    pub tension: f64,
    pub damping: f64,
    pub t_final: f64,
    pub steps: usize,
    /// Traction on the top edge; each face receives traction times its length.
    pub input: InputSignal,
}

impl Default for LshapeParams {
    fn default() -> Self {
        Self {
            cells_per_unit: 4,
            rho: 1.0,
            tension: 1.0,
            damping: 0.0,
            t_final: 1.0,
            steps: 100,
            input: InputSignal::Sine {
                amplitude: 1.0,
                frequency: 0.5,
            },
        }
    }
}

impl LshapeParams {
    /// The two rectangles with their boundary designations.
    pub fn pieces(&self) -> (Wave2dParams, Wave2dParams) {
        let c = self.cells_per_unit;
        let upper = Wave2dParams {
            origin: (0.0, 0.0),
            extent: (1.0, 2.0),
            cells: (c, 2 * c),
            rho: self.rho,
            tension: self.tension,
            damping: self.damping,
            edges: vec![
                EdgeSegment {
                    side: Side::Top,
                    faces: 0..c,
                    kind: FaceKind::StressPort(PortGroup::External),
                },
                EdgeSegment {
                    side: Side::Right,
                    faces: 0..c,
                    kind: FaceKind::StressPort(PortGroup::Internal),
                },
            ],
        };
        let right = Wave2dParams {
            origin: (1.0, 0.0),
            extent: (1.0, 1.0),
            cells: (c, c),
            edges: vec![EdgeSegment {
                side: Side::Left,
                faces: 0..c,
                kind: FaceKind::VelocityPort(PortGroup::Internal),
            }],
            ..upper.clone()
        };
        (upper, right)
    }
}

/// Composes the two pieces after checking that their interface faces match,
/// and closes the loop with `y = [[0, I], [−I, 0]] u`. The input signal is a
/// traction, scaled by each external face's length.
pub fn build_lshape_problem_from(
    first: &Wave2dParams,
    second: &Wave2dParams,
    grid: TimeGrid,
    x0: Option<DVector<f64>>,
    input: InputSignal,
) -> Result<CoupledProblem> {
    let a = build_wave2d_rect(first)?;
    let b = build_wave2d_rect(second)?;
    check_interface(&a.int_faces, &b.int_faces)?;
    let lengths: Vec<f64> = a.ext_faces.iter().chain(&b.ext_faces).map(|f| f.length).collect();
    let node = compose_diagonal(&[a.node, b.node])?;
    let x0 = x0.unwrap_or_else(|| DVector::zeros(node.n()));
    let k = a.int_faces.len();
    CoupledProblem::new(node, CouplingOperator::skew_pair(k, 1.0), grid, x0, input.sample(grid, &lengths))
}

pub fn build_lshape_problem(params: &LshapeParams) -> Result<CoupledProblem> {
    let (first, second) = params.pieces();
    let grid = TimeGrid::new(params.t_final, params.steps)?;
    build_lshape_problem_from(&first, &second, grid, None, params.input)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarDemoParams {
    pub t_final: f64,
    pub steps: usize,
    pub x0: f64,
}

impl Default for ScalarDemoParams {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            steps: 20,
            x0: 1.0,
        }
    }
}

/// `ẋ = −x + u`, `y = x`, `y = −u`: the closed loop decays like `e^{−2t}`.
pub fn build_scalar_demo(params: &ScalarDemoParams) -> Result<CoupledProblem> {
    let mut b = NodeBlocks::zeros(1, 0, 1);
    b.a[(0, 0)] = -1.0;
    b.b_int[(0, 0)] = 1.0;
    b.c_int[(0, 0)] = 1.0;
    let node = SystemNode::assemble(b, DMatrix::identity(1, 1))?;
    let grid = TimeGrid::new(params.t_final, params.steps)?;
    CoupledProblem::new(
        node,
        CouplingOperator::new(DMatrix::from_element(1, 1, -1.0))?,
        grid,
        DVector::from_element(1, params.x0),
        GridTrajectory::zeros(grid, crate::trajectory::Sampling::Midpoint, 0),
    )
}
