//! Special functions: Gamma family, double-double arithmetic and the
//! three-parameter (Prabhakar) Mittag-Leffler function.

pub mod dd;
pub mod gamma;
pub mod ml3;

pub use dd::{DoubleDouble, DD_EPSILON};
pub use gamma::{gamma, ln_gamma, lower_incomplete_gamma, rgamma, scaled_lower_gamma, sin_pi};
pub use ml3::{ml3_eval, ml3_eval_with, ml3_series, ml3_series_complex, ml3_term, EvalResult, EvalRoute, Ml3Options};
