//! Discovery and verification of single equational axioms for lattice theory.
//!
//! The crate covers each stage of the search: enumerating candidate absorption
//! equations ([`enumerate`]), discarding non-identities with the free-lattice word
//! problem ([`free_lattice`]), discarding equations with small nonlattice models
//! ([`algebra`]), and proving that survivors entail a lattice basis ([`prover`]),
//! with proofs checked by an independent kernel ([`kernel`]). [`pipeline`] ties the
//! stages together.

pub mod algebra;
pub mod enumerate;
pub mod exec;
pub mod free_lattice;
pub mod kernel;
pub mod pipeline;
pub mod prover;
pub mod term;

pub use exec::Execution;
pub use term::{Equation, Term, VarId};
