//! Scalar time signals used as external inputs.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::trajectory::{GridTrajectory, Sampling, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InputSignal {
    #[default]
    Zero,
    Constant(f64),
    /// `amplitude · sin(2π · frequency · t)`.
    Sine { amplitude: f64, frequency: f64 },
}

impl InputSignal {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            InputSignal::Zero => 0.0,
            InputSignal::Constant(c) => c,
            InputSignal::Sine { amplitude, frequency } => amplitude * (2.0 * PI * frequency * t).sin(),
        }
    }

    /// Midpoint samples, port `i` scaled by `weights[i]`.
    pub fn sample(&self, grid: TimeGrid, weights: &[f64]) -> GridTrajectory {
        GridTrajectory::from_fn(grid, Sampling::Midpoint, weights.len(), |t| {
            let v = self.value(t);
            DVector::from_iterator(weights.len(), weights.iter().map(|w| w * v))
        })
    }
}
