//! Two-dimensional wave equation `ρ z_tt = div(T ∇z) − d z_t` on an
//! axis-aligned rectangle, staggered in space.
//!
//! Momenta `p = ρ z_t` sit at cell centers, strains `q_x = z_x` on vertical
//! faces and `q_y = z_y` on horizontal faces. Boundary faces are grouped into
//! [`EdgeSegment`]s; a face is a state unless a stress is prescribed on it.
//! Port values are integrated over the face: a stress port takes the force
//! `length · traction` and returns the cell velocity, a velocity port takes
//! the boundary velocity and returns the outward force.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::node::{NodeBlocks, SystemNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortGroup {
    External,
    Internal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// Zero velocity.
    Wall,
    /// Force in, velocity out.
    StressPort(PortGroup),
    /// Velocity in, force out.
    VelocityPort(PortGroup),
}

/// Consecutive faces of one side, counted by increasing coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSegment {
    pub side: Side,
    pub faces: Range<usize>,
    pub kind: FaceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wave2dParams {
    /// Lower-left corner.
    pub origin: (f64, f64),
    pub extent: (f64, f64),
    pub cells: (usize, usize),
    pub rho: f64,
    pub tension: f64,
    pub damping: f64,
    /// Faces not covered by a segment are walls.
    pub edges: Vec<EdgeSegment>,
}

/// Geometry of one port face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortFace {
    pub side: Side,
    pub center: (f64, f64),
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct Wave2d {
    pub node: SystemNode,
    pub ext_faces: Vec<PortFace>,
    pub int_faces: Vec<PortFace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Face {
    /// Vertical face `(i, j)`, `i = 0..=nx`.
    X(usize, usize),
    /// Horizontal face `(i, j)`, `j = 0..=ny`.
    Y(usize, usize),
}

impl Wave2dParams {
    fn h(&self) -> (f64, f64) {
        (self.extent.0 / self.cells.0 as f64, self.extent.1 / self.cells.1 as f64)
    }

    fn side_len(&self, side: Side) -> usize {
        match side {
            Side::Left | Side::Right => self.cells.1,
            Side::Bottom | Side::Top => self.cells.0,
        }
    }

    fn boundary_face(&self, side: Side, k: usize) -> Face {
        let (nx, ny) = self.cells;
        match side {
            Side::Left => Face::X(0, k),
            Side::Right => Face::X(nx, k),
            Side::Bottom => Face::Y(k, 0),
            Side::Top => Face::Y(k, ny),
        }
    }

    fn face_geometry(&self, side: Side, k: usize) -> PortFace {
        let (hx, hy) = self.h();
        let (x0, y0) = self.origin;
        let (w, ht) = self.extent;
        let along = |h: f64| (k as f64 + 0.5) * h;
        let (center, length) = match side {
            Side::Left => ((x0, y0 + along(hy)), hy),
            Side::Right => ((x0 + w, y0 + along(hy)), hy),
            Side::Bottom => ((x0 + along(hx), y0), hx),
            Side::Top => ((x0 + along(hx), y0 + ht), hx),
        };
        PortFace { side, center, length }
    }

    /// Kind of every boundary face, per side in the order left, right, bottom, top.
    fn face_kinds(&self) -> Result<Vec<(Side, Vec<FaceKind>)>> {
        let mut sides: Vec<(Side, Vec<Option<FaceKind>>)> = [Side::Left, Side::Right, Side::Bottom, Side::Top]
            .into_iter()
            .map(|s| (s, vec![None; self.side_len(s)]))
            .collect();
        for seg in &self.edges {
            let slots = &mut sides.iter_mut().find(|(s, _)| *s == seg.side).expect("all sides listed").1;
            if seg.faces.end > slots.len() || seg.faces.start >= seg.faces.end {
                return Err(Error::BadParams(format!(
                    "segment {:?} {:?} outside 0..{}",
                    seg.side,
                    seg.faces,
                    slots.len()
                )));
            }
            for slot in &mut slots[seg.faces.clone()] {
                if slot.is_some() {
                    return Err(Error::BadParams(format!("overlapping segments on {:?}", seg.side)));
                }
                *slot = Some(seg.kind);
            }
        }
        Ok(sides
            .into_iter()
            .map(|(s, v)| (s, v.into_iter().map(|k| k.unwrap_or(FaceKind::Wall)).collect()))
            .collect())
    }
}

pub fn build_wave2d_rect(params: &Wave2dParams) -> Result<Wave2d> {
    let (nx, ny) = params.cells;
    if nx < 2 || ny < 2 {
        return Err(Error::BadParams(format!("need at least 2x2 cells, got {nx}x{ny}")));
    }
    if !(params.rho > 0.0 && params.tension > 0.0 && params.damping >= 0.0) {
        return Err(Error::BadParams("density and tension must be positive, damping non-negative".into()));
    }
    if !(params.extent.0 > 0.0 && params.extent.1 > 0.0) {
        return Err(Error::BadParams("rectangle extent must be positive".into()));
    }
    let kinds = params.face_kinds()?;
    let boundary_kind = |f: Face| -> Option<(Side, usize, FaceKind)> {
        let (side, k) = match f {
            Face::X(0, j) => (Side::Left, j),
            Face::X(i, j) if i == nx => (Side::Right, j),
            Face::Y(i, 0) => (Side::Bottom, i),
            Face::Y(i, j) if j == ny => (Side::Top, i),
            _ => return None,
        };
        let list = &kinds.iter().find(|(s, _)| *s == side).expect("side").1;
        Some((side, k, list[k]))
    };

    let (hx, hy) = params.h();
    let cell = |i: usize, j: usize| j * nx + i;
    let n_cells = nx * ny;

    // state faces: all interior faces, boundary faces unless stress-driven
    let mut faces = Vec::new();
    for j in 0..ny {
        for i in 0..=nx {
            faces.push(Face::X(i, j));
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            faces.push(Face::Y(i, j));
        }
    }
    faces.retain(|&f| !matches!(boundary_kind(f), Some((_, _, FaceKind::StressPort(_)))));
    let dim = n_cells + faces.len();

    // ports in the order of the segment list, faces by increasing coordinate
    let mut ext = Vec::new();
    let mut int = Vec::new();
    for seg in &params.edges {
        let group = match seg.kind {
            FaceKind::Wall => continue,
            FaceKind::StressPort(g) | FaceKind::VelocityPort(g) => g,
        };
        for k in seg.faces.clone() {
            let entry = (seg.side, k, seg.kind);
            match group {
                PortGroup::External => ext.push(entry),
                PortGroup::Internal => int.push(entry),
            }
        }
    }

    let mut b = NodeBlocks::zeros(dim, ext.len(), int.len());
    let mut weight = DVector::zeros(dim);
    let (rho, t, d) = (params.rho, params.tension, params.damping);
    let area = hx * hy;
    for k in 0..n_cells {
        weight[k] = area / rho;
        b.a[(k, k)] = -d / rho;
    }
    for (s, &f) in faces.iter().enumerate() {
        let s = n_cells + s;
        let on_boundary = boundary_kind(f).is_some();
        weight[s] = if on_boundary { 0.5 * area * t } else { area * t };
        // strain rate = velocity difference over the (half) spacing, and the
        // matching stress divergence in the adjacent momenta
        match f {
            Face::X(i, j) => {
                let hh = if on_boundary { 0.5 * hx } else { hx };
                if i < nx {
                    b.a[(s, cell(i, j))] += 1.0 / (hh * rho);
                    b.a[(cell(i, j), s)] -= t / hx;
                }
                if i > 0 {
                    b.a[(s, cell(i - 1, j))] -= 1.0 / (hh * rho);
                    b.a[(cell(i - 1, j), s)] += t / hx;
                }
            }
            Face::Y(i, j) => {
                let hh = if on_boundary { 0.5 * hy } else { hy };
                if j < ny {
                    b.a[(s, cell(i, j))] += 1.0 / (hh * rho);
                    b.a[(cell(i, j), s)] -= t / hy;
                }
                if j > 0 {
                    b.a[(s, cell(i, j - 1))] -= 1.0 / (hh * rho);
                    b.a[(cell(i, j - 1), s)] += t / hy;
                }
            }
        }
    }

    let state_slot = |f: Face| faces.iter().position(|&g| g == f).map(|k| n_cells + k);
    let adjacent_cell = |side: Side, k: usize| match side {
        Side::Left => cell(0, k),
        Side::Right => cell(nx - 1, k),
        Side::Bottom => cell(k, 0),
        Side::Top => cell(k, ny - 1),
    };
    // +1 where the outward normal points along the positive axis
    let outward = |side: Side| match side {
        Side::Left | Side::Bottom => -1.0,
        Side::Right | Side::Top => 1.0,
    };
    let half = |side: Side| match side {
        Side::Left | Side::Right => 0.5 * hx,
        Side::Bottom | Side::Top => 0.5 * hy,
    };
    let fill = |bm: &mut DMatrix<f64>, cm: &mut DMatrix<f64>, col: usize, (side, k, kind): (Side, usize, FaceKind)| {
        let geo = params.face_geometry(side, k);
        match kind {
            FaceKind::StressPort(_) => {
                let c = adjacent_cell(side, k);
                bm[(c, col)] = 1.0 / area;
                cm[(col, c)] = 1.0 / rho;
            }
            FaceKind::VelocityPort(_) => {
                let s = state_slot(params.boundary_face(side, k)).expect("velocity faces are states");
                bm[(s, col)] = outward(side) / half(side);
                cm[(col, s)] = outward(side) * geo.length * t;
            }
            FaceKind::Wall => unreachable!("walls carry no port"),
        }
    };
    for (col, &e) in ext.iter().enumerate() {
        fill(&mut b.b_ext, &mut b.c_ext, col, e);
    }
    for (col, &e) in int.iter().enumerate() {
        fill(&mut b.b_int, &mut b.c_int, col, e);
    }

    let node = SystemNode::assemble(b, DMatrix::from_diagonal(&weight))?;
    Ok(Wave2d {
        node,
        ext_faces: ext.iter().map(|&(s, k, _)| params.face_geometry(s, k)).collect(),
        int_faces: int.iter().map(|&(s, k, _)| params.face_geometry(s, k)).collect(),
    })
}

/// Two port lists describe the same interface faces, in the same order.
pub fn check_interface(a: &[PortFace], b: &[PortFace]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::NonconformingInterface(format!("{} faces against {}", a.len(), b.len())));
    }
    let tol = 1e-12;
    for (k, (fa, fb)) in a.iter().zip(b).enumerate() {
        let dc = (fa.center.0 - fb.center.0).abs().max((fa.center.1 - fb.center.1).abs());
        if dc > tol || (fa.length - fb.length).abs() > tol {
            return Err(Error::NonconformingInterface(format!(
                "face {k}: center {:?} length {} against center {:?} length {}",
                fa.center, fa.length, fb.center, fb.length
            )));
        }
    }
    Ok(())
}
