//! Shared numeric tolerances and their defaults.

use serde::{Deserialize, Serialize};

/// Absolute/relative tolerance pair used across the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-9,
        }
    }
}

/// Relative constant of the degenerate band `|det| ≤ c·(1+‖A‖+‖B‖)^{2n}`.
pub const DEGENERATE_REL: f64 = 1e-9;

/// Clustering tolerance for eigenvalues of `A·conj(A)`.
pub const CLUSTER_TOL: f64 = 1e-7;

/// Default number of determinant samples per homotopy segment.
pub const SAMPLES_PER_SEGMENT: usize = 2001;

/// Default lower bound on the reciprocal condition number of the block
/// matrix at every certification sample.
pub const CERTIFY_TOL: f64 = 1e-10;
