//! Numerical core for skill-emergence analysis.
//!
//! The crate is organized around one pipeline: a scaling law turns model
//! scale into excess cross-entropy ([`scaling`]), excess entropy turns into
//! an error fraction θ over abstract text-pieces, the mixing inequality
//! turns (θ, k) into certified performance curves ([`curves`]), and seeded
//! random bipartite skill graphs let every certificate be checked by Monte
//! Carlo or exhaustive enumeration ([`graph`]). [`entropy`] holds the
//! underlying information-theoretic primitives.
//!
//! All randomness flows through explicit 64-bit seeds ([`seeding`]);
//! identical inputs produce bit-identical outputs.

pub mod curves;
pub mod entropy;
pub mod graph;
pub mod scaling;
pub mod seeding;
