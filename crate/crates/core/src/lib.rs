//! Desk-scale numerical laboratory for spectral flow, truncated eta invariants,
//! regularized (b-)traces and cyclic-homology Chern characters on 1D models.
//!
//! The library is organized around finite Hermitian matrices ([`operator`]),
//! discretized 1D geometries with cylindrical ends ([`bgeom`]), cyclic chains
//! over matrix algebras ([`cyclic`]), simplex-integral heat brackets ([`jlo`])
//! and spectral-flow machinery ([`sflow`]). Everything is plain dense/banded
//! linear algebra; no randomness is used outside of tests and the CLI driver.

pub mod dd;
pub mod error;
pub mod linalg;
pub mod policy;
pub mod quad;

pub mod operator;

pub mod bgeom;
pub mod cyclic;
pub mod jlo;
pub mod sflow;

pub use error::{Error, Result};
pub use policy::NumericPolicy;
