//! Right-hand sides `h(t, w)` for the mild equation.

use nalgebra::DVector;

use crate::control::{ControlOperator, ControlSignal, Nonlinearity};
use crate::error::{Error, Result};
use crate::spectral::SpectralSystem;

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    Zero,
    ConstantVector(DVector<f64>),
    /// One spectral vector per grid node.
    TimeSeries(Vec<DVector<f64>>),
    ControlDriven(ControlOperator, ControlSignal),
    Nonlinear(Nonlinearity),
}

impl ForcingSpec {
    /// `h` at node `k` (time `t`) and state `w`.
    pub fn eval(&self, k: usize, t: f64, w: &DVector<f64>, system: &SpectralSystem) -> Result<DVector<f64>> {
        match self {
            ForcingSpec::Zero => Ok(DVector::zeros(w.len())),
            ForcingSpec::ConstantVector(v) => Ok(v.clone()),
            ForcingSpec::TimeSeries(vs) => {
                vs.get(k).cloned().ok_or_else(|| Error::DimensionMismatch { expected: k + 1, found: vs.len() })
            }
            ForcingSpec::ControlDriven(b, u) => {
                let uk = u.values.get(k).ok_or_else(|| Error::DimensionMismatch { expected: k + 1, found: u.values.len() })?;
                if uk.len() != b.control_dim() {
                    return Err(Error::DimensionMismatch { expected: b.control_dim(), found: uk.len() });
                }
                Ok(&b.matrix * uk)
            }
            ForcingSpec::Nonlinear(f) => f.eval(t, w, system),
        }
    }

    pub fn depends_on_state(&self) -> bool {
        matches!(self, ForcingSpec::Nonlinear(f) if !f.is_zero())
    }

    /// Per-node samples for state-independent forcing.
    pub fn sample(&self, nodes: &[f64], modes: usize, system: &SpectralSystem) -> Result<Vec<DVector<f64>>> {
        if self.depends_on_state() {
            return Err(Error::InvalidArgument("state-dependent forcing cannot be sampled without a trajectory".into()));
        }
        let zero = DVector::zeros(modes);
        nodes.iter().enumerate().map(|(k, &t)| self.eval(k, t, &zero, system)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volterra::TimeGrid;

    #[test]
    fn zero_and_control_driven() {
        let s = SpectralSystem::new(3, 9, 2.0).unwrap();
        let w = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(ForcingSpec::Zero.eval(4, 0.3, &w, &s).unwrap(), DVector::zeros(3));
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        let vals: Vec<DVector<f64>> = (0..5).map(|k| DVector::from_element(3, k as f64)).collect();
        let u = ControlSignal::new(g.clone(), vals).unwrap();
        let b = ControlOperator::identity(3).with_zeroed_modes(&[2]).unwrap();
        let f = ForcingSpec::ControlDriven(b, u);
        assert_eq!(f.eval(2, 0.5, &w, &s).unwrap(), DVector::from_vec(vec![2.0, 0.0, 2.0]));
        assert_eq!(f.sample(g.nodes(), 3, &s).unwrap().len(), 5);
        assert!(ForcingSpec::Nonlinear(Nonlinearity::ExpDecayLinear { mu: 1.0 }).sample(g.nodes(), 3, &s).is_err());
    }
}
