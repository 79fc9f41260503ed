//! Discretized example systems: a damped string, heat conduction with
//! memory, rectangular membranes, and the problems assembled from them.

pub mod heat;
pub mod problems;
pub mod signal;
pub mod wave1d;
pub mod wave2d;

pub use heat::{build_heat_cg1d, HeatCgParams, Kernel};
pub use problems::{
    build_lshape_problem, build_scalar_demo, build_wave_heat_problem, build_wave_heat_problem_from, LshapeParams,
    ScalarDemoParams, WaveHeatParams,
};
pub use signal::InputSignal;
pub use wave1d::{build_wave1d, LeftBoundary, PortMode, Wave1dParams};
pub use wave2d::{build_wave2d_rect, check_interface, EdgeSegment, FaceKind, PortFace, PortGroup, Side, Wave2d, Wave2dParams};
