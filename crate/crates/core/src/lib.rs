//! Latin squares, Latin hypercubes and their transversals.
//!
//! The crate covers five areas:
//!
//! * [`latin`], [`mols`], [`sampler`]: Latin square types, validation,
//!   cyclic squares, orthogonal pairs and a Jacobson–Matthews sampler.
//! * [`hypercube`]: Latin hypercubes in 0-1 representation with brute-force
//!   transversal counting.
//! * [`counting`]: exact transversal counting/enumeration and a sequential
//!   importance sampling estimator.
//! * [`construction`]: the block construction of an order-`N` square from a
//!   structure square, its special transversals, and padding to order `N'`.
//! * [`bounds`]: the entropy upper bound on transversal counts and checkers
//!   for the two counting claims behind it.
//!
//! [`io`] and [`experiment`] provide file formats and the reporting harness
//! used by the `latrans` binary.

pub mod bounds;
pub mod construction;
pub mod counting;
pub mod error;
pub mod experiment;
pub mod hypercube;
pub mod io;
pub mod latin;
pub mod mols;
pub mod par;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use latin::{cyclic_square, relabel, transversal_decomposition, validate_latin, LatinSquare, Transversal, ValidationReport, Violation, ViolationKind};
