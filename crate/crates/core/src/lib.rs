//! Preamplified heterodyne detection: heterodyne marginals of phase-space
//! functions, ideal observable amplifiers, and numerical checks of the
//! infinite-gain limit.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amplifiers;
pub mod density;
pub mod error;
pub mod fock;
pub mod gauss;
pub mod grid;
pub mod heterodyne;
pub mod poly;
pub mod special;
pub mod states;
pub mod verification;

pub use amplifiers::{
    k_amplifier_apply, number_amplify, number_amplify_into, preamp_moment, preamp_number_density,
    preamp_number_weight, preamp_quadrature_density, quadrature_amplifier_apply, AmplifierSpec,
    MonteCarloOptions, PreampDensity,
};
pub use density::{DensityMethod, OutcomeDensity};
pub use error::{Error, Result};
pub use fock::{
    anti_normal_operator, coherent_state, expectation, k_operator, ladder_operators, number_operator,
    quadrature_operator, squeezed_vacuum, CMatrix, CVector, DensityOperator, FockDim, FockOperator, StateVector,
};
pub use grid::{default_grid, fock_to_grid, grid_to_fock, make_grid, GridSpec, GridWavefunction};
pub use heterodyne::{
    heterodyne_moment, heterodyne_sample, q_function, ComplexOutcomeSample, Efficiency, MarginalMethod,
    MarginalOptions,
};
pub use num_complex::Complex64;
pub use poly::PhaseSpacePolynomial;
pub use states::StateSpec;
pub use verification::{MomentReport, Verdict};
