//! Discrete Malliavin calculus on finite product probability spaces.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod decompose;
pub mod error;
pub mod ewens;
pub mod inequalities;
pub mod limits;
pub mod random;
pub mod semigroup;
pub mod space;
pub mod stein;
pub mod ustat;

pub use calculus::{
    anova, divergence, gradient, gradient_at, invert_number_operator, number_operator, trace_form,
    AnovaDecomposition, CoordinateField, IdentityCheck,
};
pub use decompose::{
    clark, clark_reverse, clark_symmetric, covariance_identity, helmholtz, poincare,
    DecompositionReport, Helmholtz,
};
pub use error::{Error, Result};
pub use ewens::{gamma_inverse, gamma_map, EwensModel, Permutation};
pub use inequalities::{concentration, log_sobolev, Concentration, LogSobolev};
pub use limits::{
    poisson_scheme, walk_form_exact, walk_limit, Density, PartitionScheme, PathFunctional,
    PointConfiguration, PointFunctional, WalkScheme,
};
pub use semigroup::{mehler_apply, resolvent, simulate};
pub use space::{
    build_space, conditional_drop, conditional_on, conditional_prefix, expectation, expectation_mc,
    Configuration, Coordinate, DepSet, Functional, McEstimate, Outcome, ProductSpace,
};
pub use stein::{
    contractions, gamma_bound, gaussian_bound, homogeneous_gamma_bound, lyapounov_bound,
    KernelMatrix, SteinReport, Target,
};
pub use ustat::{hoeffding_decompose, u_statistic, SymmetricKernel};
