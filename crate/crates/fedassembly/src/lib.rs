//! Randomized selection of federated assemblies.
//!
//! A federated assembly is a DAG of assemblies in which every parent draws
//! its members from its children's assemblies. This crate models such
//! instances, selects assignments with three selection algorithms (priority
//! orders for general DAGs, top-down seat rounding for laminar trees, and a
//! selectable/unselectable partition scheme for region-by-topic products),
//! optimizes a distribution over assignments for arbitrary DAGs by column
//! generation, and verifies the representation guarantees by ex post checks,
//! Monte Carlo estimation, and exact small-instance oracles.

pub mod instance;
pub mod io;
pub mod optimizer;
pub mod rational;
pub mod rounding;
pub mod sampling;
pub mod selection;
pub mod verifier;

pub use instance::{
    appendix_c_fixture, generate_instance, generate_instance_with, generate_laminar_instance,
    generate_semilaminar_instance, AssemblyAssignment, CanonicalAssignment, Classification,
    ClassId, EquivalenceClass, Instance, Member, NodeId, RawInstance, SemiLaminarStructure,
    ValidationReport,
};
pub use rational::Rational;
