//! Multi-objective genetic programming over composite model pipelines.
//!
//! A pipeline is a rooted tree of atomic learners ([`pipeline`]). The
//! optimizers in [`optimizer`] evolve such trees against a quality objective
//! and a structural complexity objective, keeping a Pareto archive
//! ([`objectives`]) of the trade-offs found.

pub mod data;
pub mod error;
mod individual;
pub mod models;
pub mod objectives;
pub mod operators;
pub mod optimizer;
pub mod par;
pub mod pipeline;
pub mod rng;

pub use data::{Dataset, Matrix, SynthKind, TaskType};
pub use error::{Error, Result};
pub use individual::Individual;
pub use models::ModelKind;
pub use objectives::{ObjectiveVector, ParetoArchive, PenaltyWeights};
pub use operators::{MutationKind, Population, Selection};
pub use pipeline::{NodeSpec, PipelineGraph};
