//! Repulsive Gibbs point processes through hard-core models on random graphs.
//!
//! A point process on a box with fugacity `lambda` and a repulsive pair
//! potential `phi` is approximated by drawing `n` uniform points, joining each
//! pair `{i, j}` with probability `1 - exp(-phi(x_i, x_j))`, and running the
//! hard-core model at activity `lambda * vol / n` on the resulting graph.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: boxes, metrics and uniform sampling.
//! * [`potential`]: pair potentials, edge probabilities and the temperedness
//!   constant.
//! * [`graph`]: the random graph model and graph utilities.
//! * [`hardcore`]: exact and Monte Carlo tools for two-state spin systems.
//! * [`gpp`]: the continuous side, partition function oracles, the
//!   approximation pipeline and the sampler.
//! * [`weitz`]: self-avoiding-walk and Weitz trees, connective constants and
//!   spatial mixing tables.
//! * [`experiments`]: seeded batch runs used by the CLI and the acceptance
//!   suite.

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod gpp;
pub mod graph;
pub mod hardcore;
pub mod potential;
pub mod rng;
pub mod stats;
pub mod weitz;

pub use error::{Error, Result};
pub use geometry::{Boundary, Point, Region};
pub use gpp::{GppInstance, NMode, PointConfiguration, SamplerKind};
pub use graph::LabeledGraph;
pub use hardcore::{Estimate, SpinConfiguration, SpinSystemParams};
pub use potential::PotentialSpec;
