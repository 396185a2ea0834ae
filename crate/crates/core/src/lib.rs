//! Multi-scale analysis of quasi-periodic Schrödinger operators
//! H(θ) = εΔ + v(θ + x·ω)δ_{x,y} on finite regions of Z^d.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigencurve;
pub mod error;
pub mod export;
pub mod frequency;
pub mod geometry;
pub mod green;
pub mod lattice;
pub mod linalg;
pub mod msa;
pub mod operator;
pub mod potential;
pub mod spectral;
pub mod torus;

pub use error::{Error, Result};
pub use frequency::{verify_diophantine, DiophantineReport, FrequencyVector};
pub use lattice::{boundary_coupling, BoundaryCoupling, Center, LatticeRegion, Site};
pub use operator::{assemble, AffineFamily, OperatorSlice, ParametricOperator, QpFamily};
pub use potential::{PotentialKind, PotentialProfile};
pub use torus::{torus_norm, TorusPhase};
