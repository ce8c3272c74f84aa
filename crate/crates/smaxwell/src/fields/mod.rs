//! Periodic-box fields and their exact discrete calculus.

pub mod calculus;
pub mod grid;
pub mod io;
pub mod spectral;
pub mod symmetry;
pub mod types;

pub use calculus::Calculus;
pub use grid::GridSpec;
pub use symmetry::{sample_seed, seed_form, SeedProfile, Symmetrizer};
pub use types::{OneForm, ScalarField, TwoForm};
