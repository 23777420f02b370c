//! Control signals sampled on a time grid.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volterra::TimeGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    pub grid: TimeGrid,
    /// Coefficient vector (length M_u) at each grid node.
    pub values: Vec<DVector<f64>>,
    /// `int ||u||^2 dt` by the trapezoid rule.
    pub energy: f64,
}

impl ControlSignal {
    pub fn new(grid: TimeGrid, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.len() != grid.steps() + 1 {
            return Err(Error::DimensionMismatch { expected: grid.steps() + 1, found: values.len() });
        }
        if let Some(first) = values.first() {
            if let Some(bad) = values.iter().find(|v| v.len() != first.len()) {
                return Err(Error::DimensionMismatch { expected: first.len(), found: bad.len() });
            }
        }
        let energy = trapezoid_energy(&grid, &values);
        Ok(Self { grid, values, energy })
    }

    pub fn zero(grid: &TimeGrid, dim: usize) -> Self {
        let values = vec![DVector::zeros(dim); grid.steps() + 1];
        Self { grid: grid.clone(), values, energy: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }
}

fn trapezoid_energy(grid: &TimeGrid, values: &[DVector<f64>]) -> f64 {
    grid.trapezoid_weights(grid.steps()).iter().zip(values).map(|(w, u)| w * u.norm_squared()).sum()
}
