//! Construction and verification of group-divisible designs (GDDs),
//! pairwise balanced designs (PBDs) and transversal designs (TDs).
//!
//! The crate builds TDs from mutually orthogonal latin squares, affine and
//! projective planes over small finite fields, cyclic BIBDs from searched
//! difference families, and composes them with Wilson's Fundamental
//! Construction. The [`pipeline`] module turns a truncated TD into a PBD that
//! contains an explicit parallel class, and re-reads that class as the groups
//! of a new GDD. Every construction is checked by the pair-counting verifier
//! in [`design`].

pub mod base;
pub mod design;
pub mod difference;
pub mod disjoint;
pub mod error;
pub mod gf;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod wfc;

pub use design::{
    compute_type, verify_gdd, verify_parallel_class, verify_pbd, BlockSizeSet, Design, GddType, VerificationReport,
};
pub use error::{Error, Result};
