//! Exact random-walk quantities for lazy random walks on finite graphs and
//! general reversible chains: spectra, hitting times, Green's functions,
//! effective resistances, survival against moving targets, and a
//! coalescing random walk simulator. Every quantity comes with a verifier
//! that evaluates the corresponding inequality or identity on an instance
//! and records the outcome as a [`BoundCheck`].

pub mod chain;
pub mod check;
pub mod coalescing;
pub mod error;
pub mod generators;
pub mod graph;
pub mod hitting;
pub mod linalg;
pub mod meeting;
pub mod network;
pub mod report;
pub mod rng;

pub use chain::{lazy_walk_chain, spectrum, star_chain, Chain, Spectrum};
pub use check::{BoundCheck, Relation};
pub use error::{Result, WalkError};
pub use generators::{generate, Family, FamilySpec};
pub use graph::{DegreeStats, Graph};
pub use hitting::{hitting_times, HittingProfile};
