//! Executable checks of the identities and limit statements behind the
//! measurement scheme.

pub mod bch;
pub mod counterexample;
pub mod moments;
pub mod stirling;

pub use bch::{bch_coefficients, bch_matrix_check, bch_random_trials, BchInput, BchOutput};
pub use counterexample::{k_counterexample_report, CounterexampleReport};
pub use moments::{moment_condition_report, observable_moment, MomentReport, Verdict};
pub use stirling::{stirling_density_bounds, stirling_first_kind, StirlingTable};
