//! Strength and signed strength of geometric simplices in any dimension.
//!
//! A simplex on `n + 1` ordered points of `R^n` has the strength
//! `sigma = vol^2 / p^(2n-1)`, where `p` is half the sum of its pairwise
//! vertex distances. Unlike the bare volume, the strength is Lipschitz
//! continuous under vertex perturbations (with explicit per-dimension
//! constants), vanishes exactly on degenerate simplices, is invariant under
//! isometry, and scales linearly under uniform scaling. The signed variant
//! `s = sign * sigma` additionally distinguishes mirror images and is
//! invariant under rigid motion.
//!
//! Modules:
//! - [`geometry`]: simplex and distance-matrix types, orientation sign;
//! - [`cayley_menger`]: the bordered squared-distance determinant, squared
//!   volume, and its analytic distance derivative;
//! - [`strength`]: the invariant itself plus closed triangle forms;
//! - [`bounds`]: rencontre numbers and the per-dimension bound tables;
//! - [`verify`]: randomized, deterministic-by-seed verification suites.
//!
//! The `parallel` feature (on by default) runs verification trials on a
//! rayon thread pool; reports are bit-identical to sequential runs.

pub mod bounds;
pub mod cayley_menger;
mod error;
pub mod geometry;
mod mat;
pub mod strength;
pub mod verify;

pub use bounds::{c_n_bound, lambda_bound, lemma_bounds, rencontre, BoundTable};
pub use cayley_menger::{hat_partial_derivative, squared_volume, HatMatrix};
pub use error::{Error, Result};
pub use geometry::{DistanceMatrix, PointCloudSimplex, DEGENERACY_TOL};
pub use strength::{
    normalized_triangle_strength, section_a_eq_b, section_b_eq_c, signed_strength,
    strength_from_distances, triangle_strength_heron, StrengthResult,
};
pub use verify::{
    run_invariance_suite, run_lemma_suite, run_lipschitz_suite, CheckRecord, Execution,
    TrialConfig, TrialReport, TrialSample,
};
