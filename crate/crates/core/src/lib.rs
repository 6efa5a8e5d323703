//! Quantale-valued behavioural distances via Kantorovich liftings.
//!
//! Distances live in a quantale ([`quantale`]); predicates and distances are
//! related by the α ⊣ γ Galois connection ([`galois`]); functors are lifted
//! to V-graphs through sets of evaluation maps ([`polyfunctor`],
//! [`monadlift`]); EM-laws determinize coalgebras ([`distlaw`]); and
//! behavioural distances are bounded from both sides, by trace oracles and
//! by up-to certificates ([`behaviour`]). All arithmetic is exact.

// Error values carry exact rationals and are only built on failure paths.
#![allow(clippy::result_large_err)]

pub mod behaviour;
pub mod distlaw;
pub mod galois;
pub mod monadlift;
pub mod polyfunctor;
pub mod quantale;
pub mod report;
pub mod simplex;
pub mod vgraph;

pub use quantale::{QValue, Quantale, Rat};
pub use vgraph::{Carrier, FiniteMap, VGraph};
