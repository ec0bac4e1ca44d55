//! Problem instances: the assembly DAG, equivalence classes, and every
//! derived population quantity.
//!
//! People are represented implicitly. An equivalence class is a set of
//! interchangeable people signed up for exactly the same leaf assemblies, so
//! a population is a multiset of (class, count) and a concrete person is a
//! `(class, index)` pair. All weights and quotas are exact rationals.

mod assignment;
mod classify;
mod generate;
mod raw;

pub use assignment::{AssemblyAssignment, CanonicalAssignment, CanonicalViolation};
pub use classify::{Classification, SemiLaminarStructure};
pub use generate::{
    appendix_c_fixture, generate_instance, generate_instance_with, generate_laminar_instance,
    generate_semilaminar_instance, semilaminar_raw, GeneratorConfig, SemiLaminarSpec,
};
pub use raw::{RawClass, RawInstance, RawNode, ValidationError, ValidationReport};

use crate::rational::{rat_u64, Rational};
use std::collections::BTreeSet;
use thiserror::Error;

/// A node of the assembly graph, identified by its dense index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// An equivalence class, identified by its index in the instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(pub usize);

/// One person, as a position within their equivalence class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Member {
    pub class: ClassId,
    pub index: u64,
}

/// All people signed up for exactly the leaf set `leaves`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceClass {
    pub leaves: BTreeSet<NodeId>,
    pub size: u64,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("node {child} is not a child of {parent}")]
    NotAChild { parent: String, child: String },
    #[error("node {0} is not a federation")]
    NotAFederation(String),
}

/// A validated instance with precomputed derived data.
#[derive(Clone, Debug)]
pub struct Instance {
    names: Vec<String>,
    children: Vec<Vec<NodeId>>,
    parents: Vec<Vec<NodeId>>,
    classes: Vec<EquivalenceClass>,
    /// Leaf descendants per node (a leaf's set is itself).
    descendants: Vec<BTreeSet<NodeId>>,
    /// Classes contained in each node's population, ascending by id.
    node_classes: Vec<Vec<ClassId>>,
    population: Vec<u64>,
    /// Every node, children before parents.
    topo_bottom_up: Vec<NodeId>,
    leaves: Vec<NodeId>,
    federations: Vec<NodeId>,
}

impl Instance {
    pub(crate) fn from_parts(
        names: Vec<String>,
        children: Vec<Vec<NodeId>>,
        parents: Vec<Vec<NodeId>>,
        classes: Vec<EquivalenceClass>,
        topo_bottom_up: Vec<NodeId>,
    ) -> Self {
        let n = names.len();
        let mut descendants: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
        for &v in &topo_bottom_up {
            if children[v.0].is_empty() {
                descendants[v.0].insert(v);
            } else {
                let mut set = BTreeSet::new();
                for &c in &children[v.0] {
                    set.extend(descendants[c.0].iter().copied());
                }
                descendants[v.0] = set;
            }
        }
        let mut node_classes: Vec<Vec<ClassId>> = vec![Vec::new(); n];
        for v in 0..n {
            for (ci, class) in classes.iter().enumerate() {
                if class.leaves.iter().any(|l| descendants[v].contains(l)) {
                    node_classes[v].push(ClassId(ci));
                }
            }
        }
        let population = node_classes
            .iter()
            .map(|cs| cs.iter().map(|c| classes[c.0].size).sum())
            .collect();
        let leaves = (0..n).filter(|&v| children[v].is_empty()).map(NodeId).collect();
        let federations = (0..n).filter(|&v| !children[v].is_empty()).map(NodeId).collect();
        Instance {
            names,
            children,
            parents,
            classes,
            descendants,
            node_classes,
            population,
            topo_bottom_up,
            leaves,
            federations,
        }
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn name(&self, v: NodeId) -> &str {
        &self.names[v.0]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.names.iter().position(|n| n == name).map(NodeId)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len()).map(NodeId)
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v.0]
    }

    pub fn parents(&self, v: NodeId) -> &[NodeId] {
        &self.parents[v.0]
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.children[v.0].is_empty()
    }

    pub fn is_federation(&self, v: NodeId) -> bool {
        !self.children[v.0].is_empty()
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn federations(&self) -> &[NodeId] {
        &self.federations
    }

    /// Leaf nodes reachable from `v`; for a leaf, the singleton of itself.
    pub fn leaf_descendants(&self, v: NodeId) -> &BTreeSet<NodeId> {
        &self.descendants[v.0]
    }

    pub fn class(&self, c: ClassId) -> &EquivalenceClass {
        &self.classes[c.0]
    }

    pub fn classes(&self) -> &[EquivalenceClass] {
        &self.classes
    }

    /// Classes whose members all belong to `v`'s population.
    pub fn classes_of(&self, v: NodeId) -> &[ClassId] {
        &self.node_classes[v.0]
    }

    pub fn contains_class(&self, v: NodeId, c: ClassId) -> bool {
        self.node_classes[v.0].binary_search(&c).is_ok()
    }

    /// Position of class `c` within `classes_of(v)`, if contained.
    pub fn class_slot(&self, v: NodeId, c: ClassId) -> Option<usize> {
        self.node_classes[v.0].binary_search(&c).ok()
    }

    pub fn population(&self, v: NodeId) -> u64 {
        self.population[v.0]
    }

    /// Every node, children strictly before parents.
    pub fn topo_bottom_up(&self) -> &[NodeId] {
        &self.topo_bottom_up
    }

    /// Number of children of `f` whose population contains class `c`.
    pub fn multiplicity(&self, c: ClassId, f: NodeId) -> u64 {
        self.children[f.0]
            .iter()
            .filter(|&&child| self.contains_class(child, c))
            .count() as u64
    }

    /// Weighted population of child `c` at federation `f`: each person's unit
    /// of weight is split equally across the children of `f` containing them.
    pub fn weighted_population(&self, f: NodeId, c: NodeId) -> Result<Rational, InstanceError> {
        if self.is_leaf(f) {
            return Err(InstanceError::NotAFederation(self.names[f.0].clone()));
        }
        if !self.children[f.0].contains(&c) {
            return Err(InstanceError::NotAChild {
                parent: self.names[f.0].clone(),
                child: self.names[c.0].clone(),
            });
        }
        let mut total = Rational::from_integer(0.into());
        for &class in &self.node_classes[c.0] {
            let m = self.multiplicity(class, f);
            debug_assert!(m >= 1);
            total += rat_u64(self.classes[class.0].size) / rat_u64(m);
        }
        Ok(total)
    }

    /// The fraction of `f`'s seats that child `c` deserves.
    pub fn quota(&self, f: NodeId, c: NodeId) -> Result<Rational, InstanceError> {
        Ok(self.weighted_population(f, c)? / rat_u64(self.population(f)))
    }

    /// Quotas of every child of `f`, in child order. They sum to one exactly.
    pub fn quotas(&self, f: NodeId) -> Result<Vec<(NodeId, Rational)>, InstanceError> {
        self.children[f.0]
            .iter()
            .map(|&c| Ok((c, self.quota(f, c)?)))
            .collect()
    }

    /// All federation-child edges, in bottom-up federation order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for &v in &self.topo_bottom_up {
            for &c in &self.children[v.0] {
                out.push((v, c));
            }
        }
        out
    }

    pub fn classify(&self) -> Classification {
        classify::classify(self)
    }
}
