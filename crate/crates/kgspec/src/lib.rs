//! Finite-truncation spectral triples for higher-rank graph C*-algebras.
//!
//! The crate models a finite strongly connected k-graph combinatorially,
//! computes its Perron-Frobenius measure, realizes the generators S_lambda
//! and their adjoints as matrices between level truncations of the weighted
//! L^2 space of infinite paths, and numerically verifies the Cuntz-Krieger
//! relations, the wavelet decomposition, and the spectral properties of the
//! Dirac operator built from the level filtration.

pub mod degree;
pub mod dirac;
pub mod kgraph;
pub mod par;
pub mod parse;
pub mod pf;
pub mod report;
pub mod repspace;
pub mod wavelets;

pub use degree::Degree;
pub use kgraph::{validate_kgraph, KGraph, Path};
pub use pf::{cylinder_measure, perron_frobenius, PFData};
