//! Scalar resolvent functions `s_m(t)` of the memory equation and tables of them.

pub mod contour;
pub mod symbol;
pub mod series;
pub mod table;

pub use contour::{scalar_resolvent_contour, scalar_resolvent_contour_with, TalbotOptions};
pub use series::{scalar_resolvent_ml, scalar_resolvent_ml_with, SeriesOptions};
pub use symbol::laplace_symbol;
pub use table::{apply_resolvent, build_resolvent_table, build_resolvent_table_with, ResolventTable, TableOptions, TableRoute};
pub mod diagnostics;
pub use diagnostics::{decay_diagnostics, verify_resolvent_equation, DecayReport, QuadRule};
