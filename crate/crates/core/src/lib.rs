//! Driven-dissipative three-level Rydberg lattices with emergent
//! predator-prey population cycles: mean-field phase analysis, a
//! small-system exact master-equation oracle, a stochastic semiclassical
//! lattice engine, and the post-processing that connects them.

pub mod classical;
pub mod config;
pub mod error;
pub mod exact;
pub mod mat3;
pub mod meanfield;
pub mod model;
pub mod observables;
pub mod series;
pub mod twa;
