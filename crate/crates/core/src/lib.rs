//! Quadratic germs of complex points of real codimension-2 submanifolds.
//!
//! A complex point of `Y ⊂ ℂⁿ⁺¹` is written locally as the graph
//! `w = conj(z)ᵀ A z + Re(zᵀ B z) + o(|z|²)`. This crate classifies such pairs
//! `(A, B)` as elliptic or hyperbolic, reduces them to canonical forms, builds
//! certified nondegenerate homotopies to the two normal forms, glues those
//! homotopies into local graph surfaces, and checks the Levi forms of the model
//! neighborhood functions numerically.

pub mod canonical;
pub mod cmatrix;
pub mod consim;
pub mod error;
pub mod graph;
pub mod homotopy;
pub mod json;
pub mod levi;
pub mod quadric;
pub mod random;
pub mod tol;

pub use cmatrix::{c, CMatrix, Complex};
pub use error::{Error, Result};
pub use quadric::{ClassTag, GElement, PointClass, QuadricPair};
