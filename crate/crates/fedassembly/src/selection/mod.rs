//! The three selection algorithms.

mod laminar;
mod priority;
mod semilaminar;

pub use laminar::{select_laminar, LaminarSelector};
pub use priority::{
    attempt_priority_draw, failure_probability_bound, priority_draw_succeeds, select_priority,
    select_priority_with_restart, PriorityDraw, PriorityDrawFailure,
};
pub use semilaminar::{
    check_regularity, round_and_sample, sample_from_children, sample_leaves, select_semilaminar,
    ChildTopicInput, LeafClass, LeafRegionSampler, RegularityReport, SemiLaminarSelector,
    TopicSets,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error(
        "class {class} has {size} members but the assembly size is {n}; \
         use the restart variant for small classes"
    )]
    ClassSmallerThanAssembly { class: usize, size: u64, n: u64 },
    #[error("node {node:?} has population {population} < assembly size {n}")]
    PopulationTooSmall { node: String, population: u64, n: u64 },
    #[error("draw failed {attempts} times (limit {attempts}); {failures} rank overflows seen")]
    RestartsExhausted { attempts: u64, failures: u64 },
    #[error("instance is not laminar (classified as {0})")]
    NotLaminar(&'static str),
    #[error("instance is not semi-laminar (classified as {0})")]
    NotSemiLaminar(&'static str),
    #[error("regularity conditions fail: {0}")]
    Irregular(String),
    #[error("sampling from {context} needs {needed} members but only {available} are available")]
    SamplingInfeasible { context: String, needed: u64, available: u64 },
    #[error("rounding failed: {0}")]
    Rounding(#[from] crate::rounding::RoundingError),
}
