//! Convex inner approximations of the solvability region of affinely
//! parameterized quadratic systems `f(x, u) = 0`.
//!
//! Given a nominal solution `(x*, u*)` with invertible Jacobian, the
//! [`certificate`] module evaluates explicit conditions on `u` under which a
//! solution `x` is guaranteed to exist, optionally within a norm ball around
//! `x*`. The [`powerflow`] module specializes the construction to the AC
//! power-flow equations of a MATPOWER case, and [`scan`] runs random
//! direction experiments comparing the resulting loadability margins.
//! [`oracle`] provides independent ground truth (multistart Newton, closed
//! form scalar regions) used to validate every certificate.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below fix the common double-precision instantiation.

// Comparisons are written as `!(a <= b)` where NaN must fail the check, and
// triangular solves index rows directly.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod certificate;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod powerflow;
pub mod quadform;
pub mod scalar;
pub mod scan;
pub mod testing;

pub use certificate::{
    boundary_along, certify_in_ball, certify_unbounded, compute_terms, tightness_bounds,
    BallCertificate, CertificateTerms, TightnessBounds,
};
pub use error::{Error, ParseErrorKind, Result};
pub use linalg::{inf_norm_induced, inf_norm_vec, lu_factor, solve, DenseMatrix, LuFactorization};
pub use oracle::{newton_multistart, region_scan_2d, scalar_quadratic_region, SolveReport};
pub use powerflow::{
    build_model, kappa, kappa_prime, parse_matpower, picard_solve, zeta, GridCase, PowerFlowModel,
};
pub use quadform::{
    make_nominal, make_nominal_block, JacobianForm, NominalPoint, QuadraticSystem, SystemSpec,
};
pub use scalar::{Real, C};
pub use scan::{
    direction_scan, merge_relaxation, random_directions, rotation_scan, InjectionDirection,
    ScanRecord,
};

pub type DenseMatrix64 = DenseMatrix<f64>;
pub type DenseMatrix32 = DenseMatrix<f32>;
pub type QuadraticSystem64 = QuadraticSystem<f64>;
pub type QuadraticSystem32 = QuadraticSystem<f32>;
pub type NominalPoint64 = NominalPoint<f64>;
pub type NominalPoint32 = NominalPoint<f32>;
pub type CertificateTerms64 = CertificateTerms<f64>;
pub type BallCertificate64 = BallCertificate<f64>;
pub type PowerFlowModel64 = powerflow::PowerFlowModel<f64>;
pub type PowerFlowModel32 = powerflow::PowerFlowModel<f32>;
pub type Complex64 = C<f64>;
