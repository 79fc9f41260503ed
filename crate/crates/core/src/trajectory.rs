//! Trajectories on a uniform time grid and the norms used to monitor the
//! iteration.
//!
//! States are sampled at grid nodes `t_j = jτ`, port and residual signals at
//! midpoints `t_{j+1/2}`. Every L² pairing uses the midpoint rule; node
//! samples are averaged to midpoints first.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Uniform grid on `[0, T]` with `N_t` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::BadParams(format!("final time must be positive, got {t_final}")));
        }
        if steps == 0 {
            return Err(Error::BadParams("step count must be at least 1".into()));
        }
        Ok(Self { t_final, steps })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }
    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn tau(&self) -> f64 {
        self.t_final / self.steps as f64
    }
    pub fn node_time(&self, j: usize) -> f64 {
        j as f64 * self.tau()
    }
    pub fn mid_time(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.tau()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Node,
    Midpoint,
}

/// Values of a vector-valued function on a [`TimeGrid`], one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTrajectory {
    grid: TimeGrid,
    sampling: Sampling,
    values: DMatrix<f64>,
}

impl GridTrajectory {
    pub fn new(grid: TimeGrid, sampling: Sampling, values: DMatrix<f64>) -> Result<Self> {
        let rows = match sampling {
            Sampling::Node => grid.steps + 1,
            Sampling::Midpoint => grid.steps,
        };
        if values.nrows() != rows {
            return Err(Error::GridMismatch(format!(
                "{} rows for {} samples",
                values.nrows(),
                rows
            )));
        }
        Ok(Self {
            grid,
            sampling,
            values,
        })
    }

    pub fn zeros(grid: TimeGrid, sampling: Sampling, dim: usize) -> Self {
        let rows = match sampling {
            Sampling::Node => grid.steps + 1,
            Sampling::Midpoint => grid.steps,
        };
        Self {
            grid,
            sampling,
            values: DMatrix::zeros(rows, dim),
        }
    }

    /// Samples `f(t)` at the times of the given sampling.
    pub fn from_fn(
        grid: TimeGrid,
        sampling: Sampling,
        dim: usize,
        mut f: impl FnMut(f64) -> DVector<f64>,
    ) -> Self {
        let mut out = Self::zeros(grid, sampling, dim);
        for j in 0..out.len() {
            let v = f(out.time(j));
            out.set_row(j, &v);
        }
        out
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    pub fn sampling(&self) -> Sampling {
        self.sampling
    }
    pub fn dim(&self) -> usize {
        self.values.ncols()
    }
    /// Number of samples.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }
    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.values
    }

    pub fn time(&self, j: usize) -> f64 {
        match self.sampling {
            Sampling::Node => self.grid.node_time(j),
            Sampling::Midpoint => self.grid.mid_time(j),
        }
    }

    pub fn row(&self, j: usize) -> DVector<f64> {
        self.values.row(j).transpose()
    }

    pub fn set_row(&mut self, j: usize, v: &DVector<f64>) {
        self.values.row_mut(j).copy_from(&v.transpose());
    }

    /// Node → midpoint averaging; midpoint trajectories are returned as is.
    pub fn to_midpoints(&self) -> GridTrajectory {
        match self.sampling {
            Sampling::Midpoint => self.clone(),
            Sampling::Node => {
                let n = self.grid.steps;
                let v = (self.values.rows(0, n) + self.values.rows(1, n)) * 0.5;
                GridTrajectory {
                    grid: self.grid,
                    sampling: Sampling::Midpoint,
                    values: v,
                }
            }
        }
    }

    fn check_compatible(&self, other: &GridTrajectory) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("different time grids".into()));
        }
        if self.sampling != other.sampling {
            return Err(Error::GridMismatch("different sampling".into()));
        }
        if self.dim() != other.dim() {
            return Err(Error::GridMismatch(format!(
                "dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    /// CSV with header `t,v0,...` and one row per sample time.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for i in 0..self.dim() {
            let _ = write!(s, ",v{i}");
        }
        s.push('\n');
        for j in 0..self.len() {
            let _ = write!(s, "{:.16e}", self.time(j));
            for v in self.values.row(j).iter() {
                let _ = write!(s, ",{v:.16e}");
            }
            s.push('\n');
        }
        s
    }
}

/// State (node-sampled) and internal input (midpoint-sampled) on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajPair {
    pub x: GridTrajectory,
    pub u: GridTrajectory,
}

impl TrajPair {
    pub fn new(x: GridTrajectory, u: GridTrajectory) -> Result<Self> {
        if x.sampling != Sampling::Node {
            return Err(Error::SamplingMismatch { expected: "node" });
        }
        if u.sampling != Sampling::Midpoint {
            return Err(Error::SamplingMismatch {
                expected: "midpoint",
            });
        }
        if x.grid != u.grid {
            return Err(Error::GridMismatch("state and input grids differ".into()));
        }
        Ok(Self { x, u })
    }
}

/// Midpoint-rule pairing `τ Σ_j e^{-2ω t_{j+1/2}} ⟨a_{j+1/2}, W b_{j+1/2}⟩`.
fn weighted_inner(a: &GridTrajectory, b: &GridTrajectory, omega: f64, weight: &DMatrix<f64>) -> Result<f64> {
    a.check_compatible(b)?;
    if weight.shape() != (a.dim(), a.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "weight is {}x{}, trajectory dimension {}",
            weight.nrows(),
            weight.ncols(),
            a.dim()
        )));
    }
    let am = a.to_midpoints();
    let bm = b.to_midpoints();
    let wb = &bm.values * weight.transpose();
    let grid = a.grid;
    let mut sum = 0.0;
    for j in 0..grid.steps {
        let row: f64 = am.values.row(j).dot(&wb.row(j));
        sum += (-2.0 * omega * grid.mid_time(j)).exp() * row;
    }
    Ok(grid.tau() * sum)
}

/// Plain L² inner product with spatial weight `W`.
pub fn l2_inner(a: &GridTrajectory, b: &GridTrajectory, weight: &DMatrix<f64>) -> Result<f64> {
    weighted_inner(a, b, 0.0, weight)
}

/// `‖a‖_{2,ω}` with spatial weight `W`.
pub fn weighted_norm(a: &GridTrajectory, omega: f64, weight: &DMatrix<f64>) -> Result<f64> {
    if omega < 0.0 {
        return Err(Error::NegativeOmega(omega));
    }
    Ok(weighted_inner(a, a, omega, weight)?.max(0.0).sqrt())
}

/// `max_j ‖x_j‖_W` over grid nodes.
pub fn sup_norm(x: &GridTrajectory, weight: &DMatrix<f64>) -> Result<f64> {
    if x.sampling != Sampling::Node {
        return Err(Error::SamplingMismatch { expected: "node" });
    }
    let mut best = 0.0_f64;
    for j in 0..x.len() {
        let r = x.row(j);
        best = best.max(r.dot(&(weight * &r)).max(0.0).sqrt());
    }
    Ok(best)
}

/// `α a + β b`.
pub fn lincomb(alpha: f64, a: &GridTrajectory, beta: f64, b: &GridTrajectory) -> Result<GridTrajectory> {
    a.check_compatible(b)?;
    Ok(GridTrajectory {
        grid: a.grid,
        sampling: a.sampling,
        values: &a.values * alpha + &b.values * beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(grid: TimeGrid, s: Sampling, f: impl Fn(f64) -> f64) -> GridTrajectory {
        GridTrajectory::from_fn(grid, s, 1, |t| DVector::from_element(1, f(t)))
    }

    fn eye1() -> DMatrix<f64> {
        DMatrix::identity(1, 1)
    }

    #[test]
    fn constant_function_inner() {
        let g = TimeGrid::new(1.0, 7).unwrap();
        let a = scalar(g, Sampling::Midpoint, |_| 1.0);
        assert!((l2_inner(&a, &a, &eye1()).unwrap() - 1.0).abs() < 1e-15);
        let z = scalar(g, Sampling::Midpoint, |_| 0.0);
        assert_eq!(l2_inner(&z, &a, &eye1()).unwrap(), 0.0);
    }

    #[test]
    fn linear_function_integrated_exactly() {
        let g = TimeGrid::new(1.0, 100).unwrap();
        let a = scalar(g, Sampling::Node, |t| t);
        let b = scalar(g, Sampling::Node, |_| 1.0);
        assert!((l2_inner(&a, &b, &eye1()).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn weighted_norm_of_constant() {
        let g = TimeGrid::new(1.0, 200).unwrap();
        let a = scalar(g, Sampling::Midpoint, |_| 1.0);
        let exact = ((1.0 - (-2.0_f64).exp()) / 2.0).sqrt();
        let got = weighted_norm(&a, 1.0, &eye1()).unwrap();
        // midpoint rule error ~ τ²/24 · max|f''| with f'' = 4e^{-2t}
        assert!((got - exact).abs() < 1e-5, "{got} vs {exact}");
        let plain = l2_inner(&a, &a, &eye1()).unwrap().sqrt();
        assert_eq!(weighted_norm(&a, 0.0, &eye1()).unwrap(), plain);
        assert_eq!(
            weighted_norm(&a, -0.1, &eye1()).unwrap_err(),
            Error::NegativeOmega(-0.1)
        );
    }

    #[test]
    fn sup_norm_cases() {
        let g = TimeGrid::new(2.0, 4).unwrap();
        let mut x = GridTrajectory::zeros(g, Sampling::Node, 2);
        let w = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert_eq!(sup_norm(&x, &w).unwrap(), 0.0);
        x.set_row(3, &DVector::from_vec(vec![1.0, 1.0]));
        assert!((sup_norm(&x, &w).unwrap() - 3.0_f64.sqrt()).abs() < 1e-15);
        let m = GridTrajectory::zeros(g, Sampling::Midpoint, 2);
        assert!(matches!(sup_norm(&m, &w), Err(Error::SamplingMismatch { .. })));
    }

    #[test]
    fn lincomb_identities() {
        let g = TimeGrid::new(1.0, 5).unwrap();
        let a = scalar(g, Sampling::Node, |t| t.sin());
        let b = scalar(g, Sampling::Node, |t| t * t);
        assert_eq!(lincomb(1.0, &a, -1.0, &a).unwrap().values().amax(), 0.0);
        assert_eq!(lincomb(1.0, &a, 0.0, &b).unwrap(), a);
        let back = lincomb(2.0, &a, -1.0, &a).unwrap();
        assert!((back.values() - a.values()).amax() < 1e-15);
        let m = scalar(g, Sampling::Midpoint, |t| t);
        assert!(matches!(lincomb(1.0, &a, 1.0, &m), Err(Error::GridMismatch(_))));
        let g2 = TimeGrid::new(1.0, 6).unwrap();
        let c = scalar(g2, Sampling::Node, |t| t);
        assert!(matches!(l2_inner(&a, &c, &eye1()), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn row_count_is_validated() {
        let g = TimeGrid::new(1.0, 3).unwrap();
        assert!(GridTrajectory::new(g, Sampling::Node, DMatrix::zeros(3, 1)).is_err());
        assert!(GridTrajectory::new(g, Sampling::Midpoint, DMatrix::zeros(3, 1)).is_ok());
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let g = TimeGrid::new(1.0, 2).unwrap();
        let a = scalar(g, Sampling::Midpoint, |t| t);
        let csv = a.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,v0");
        assert_eq!(lines.len(), 3);
        let fields: Vec<f64> = lines[2].split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields, vec![0.75, 0.75]);
    }
}
