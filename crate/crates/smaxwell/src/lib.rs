//! Variational workbench for the semilinear curl-curl equation
//! `δ d A = f'(<A, A>) A` on a periodic box in even dimension.
//!
//! The solver splits `A = u + ∇w` with `δ u = 0`, minimizes the strictly
//! convex inner energy over the scalar potential `w`, and runs a
//! mountain-pass path deformation on the reduced energy of `u` over the
//! divergence-free, rotation-equivariant subspace. A certification layer
//! measures the growth and convexity constants of the nonlinearity and
//! checks every discrete-calculus identity the construction relies on.

pub mod error;
pub mod fields;
pub mod inner_solver;
pub mod nonlinearity;
pub mod orlicz;
pub mod outer_solver;
pub mod report;
pub mod trace;

pub use error::{Error, Result};
pub use fields::{Calculus, GridSpec, OneForm, ScalarField, SeedProfile, Symmetrizer, TwoForm};
pub use nonlinearity::NonlinearityParams;
pub use orlicz::OrliczPair;

/// Thread budget for sharded certification sweeps. Defaults to 1; the
/// `SMAXWELL_THREADS` environment variable raises it. Results do not depend
/// on the value (fixed shard seeds, in-order merges).
pub fn thread_cap() -> usize {
    std::env::var("SMAXWELL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .map(|v| v.clamp(1, 64))
        .unwrap_or(1)
}
