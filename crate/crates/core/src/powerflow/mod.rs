//! AC power flow on radial and meshed networks given as MATPOWER cases.
//!
//! [`build_model`] reduces the network around the slack bus to the
//! fixed-point form `V = w + Z diag(conj(V))^-1 conj(s)`; [`kappa`] then
//! certifies existence of a solution for an injection `s` when
//! `kappa(s) <= 1`, and [`kappa_prime`] is the older, more conservative
//! condition it is compared against.

mod matpower;
mod model;

pub use matpower::{parse_matpower, write_matpower, Branch, Bus, BusType, Gen, GridCase};
pub use model::{
    build_model, epfl_system, injection_params, kappa, kappa_pair, kappa_prime, picard_solve, zeta,
    ModelSummary, PicardOutcome, PowerFlowModel, NO_LOAD_MIN, PICARD_MAX_ITER, PICARD_TOL,
};

use std::path::Path;

use crate::error::Result;

/// Reads and parses a case file.
pub fn read_case(path: impl AsRef<Path>) -> Result<GridCase> {
    parse_matpower(&std::fs::read_to_string(path)?)
}
