//! Time grids on `[0, T]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GridKind {
    Uniform,
    /// `t_k = T (k/K)^exponent`
    Graded { exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    kind: GridKind,
    nodes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    horizon: f64,
    steps: usize,
    kind: GridKind,
}

impl TryFrom<RawGrid> for TimeGrid {
    type Error = Error;
    fn try_from(r: RawGrid) -> Result<Self> {
        TimeGrid::new(r.horizon, r.steps, r.kind)
    }
}

impl From<TimeGrid> for RawGrid {
    fn from(g: TimeGrid) -> Self {
        RawGrid { horizon: g.horizon, steps: g.steps, kind: g.kind }
    }
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize, kind: GridKind) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive (got {horizon})")));
        }
        if steps < 2 {
            return Err(Error::InvalidArgument(format!("a grid needs at least 2 steps (got {steps})")));
        }
        let kf = steps as f64;
        let nodes: Vec<f64> = match kind {
            GridKind::Uniform => (0..=steps).map(|k| if k == steps { horizon } else { horizon * k as f64 / kf }).collect(),
            GridKind::Graded { exponent } => {
                if !(exponent >= 1.0 && exponent.is_finite()) {
                    return Err(Error::InvalidArgument(format!("grading exponent must be at least 1 (got {exponent})")));
                }
                (0..=steps).map(|k| if k == steps { horizon } else { horizon * (k as f64 / kf).powf(exponent) }).collect()
            }
        };
        Ok(Self { horizon, steps, kind, nodes })
    }

    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        Self::new(horizon, steps, GridKind::Uniform)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, GridKind::Uniform)
    }

    /// Step `t_k - t_{k-1}` for k >= 1.
    pub fn step(&self, k: usize) -> f64 {
        self.nodes[k] - self.nodes[k - 1]
    }

    /// Trapezoid weights for `int_0^{t_k}`.
    pub fn trapezoid_weights(&self, k: usize) -> Vec<f64> {
        let mut w = vec![0.0; k + 1];
        for i in 1..=k {
            let h = self.step(i);
            w[i - 1] += 0.5 * h;
            w[i] += 0.5 * h;
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.trapezoid_weights(4), vec![0.125, 0.25, 0.25, 0.25, 0.125]);
    }

    #[test]
    fn graded_nodes() {
        let g = TimeGrid::new(2.0, 4, GridKind::Graded { exponent: 2.0 }).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.125, 0.5, 1.125, 2.0]);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn invalid_grids() {
        assert!(TimeGrid::uniform(0.0, 4).is_err());
        assert!(TimeGrid::uniform(1.0, 1).is_err());
        assert!(TimeGrid::new(1.0, 4, GridKind::Graded { exponent: 0.5 }).is_err());
    }

    #[test]
    fn serde_roundtrip() {
        let g = TimeGrid::new(1.5, 8, GridKind::Graded { exponent: 4.0 }).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: TimeGrid = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
