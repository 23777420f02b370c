//! Time stepping and mild-solution quadrature for the mode-wise memory equation.

pub mod forcing;
pub mod grid;
pub mod linear;
pub mod mild;
pub mod quadrature;
pub mod semilinear;
pub mod weights;

pub use forcing::ForcingSpec;
pub use grid::{GridKind, TimeGrid};
pub use linear::{step_linear_mode, LinearStepper};
pub use mild::{mild_quadrature, Trajectory, TrajectoryMeta};
pub use semilinear::simulate_semilinear;
pub use weights::{conv_weights, ConvWeights, ConvolutionKernel};
