//! Controllability machinery on the truncated sine basis.

pub mod criteria;
pub mod duality;
pub mod feasibility;
pub mod gramian;
pub mod nonlinearity;
pub mod operator;
pub mod picard;
pub mod resolve;
pub mod signal;
pub mod synthesis;

pub use criteria::{
    adjoint_vanishing_test, approx_criterion, approx_criterion_horizons, gramian_growth_check, rank_condition, AdjointReport, AdjointVerdict,
    GramianGrowth, CriterionTable, CriterionVerdict, RankReport,
};
pub use duality::{duality_map, duality_map_spectral, pairing_defects, PairingDefects};
pub use feasibility::{decay_probe, feasibility_check, DecayProbe, FeasibilityInput, FeasibilityReport, GammaL1};
pub use gramian::{assemble_gramian, assemble_gramian_at, Gramian};
pub use nonlinearity::Nonlinearity;
pub use operator::{control_operator_matrix, ControlOperator, ControlOperatorKind, KernelQuadrature};
pub use picard::{closed_loop_picard, cost_functional, CostBreakdown, SteeringProblem, SteeringResult};
pub use resolve::regularized_resolvent;
pub use signal::ControlSignal;
pub use synthesis::{control_from_dual, synthesize_control, target_offset, SynthesizedControl};
