//! Unvalidated instance data and its validation.

use super::{EquivalenceClass, Instance, NodeId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

/// Instance data as parsed from JSON, prior to any validation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    pub nodes: Vec<RawNode>,
    pub edges: Vec<(String, String)>,
    pub classes: Vec<RawClass>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNode {
    pub id: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawClass {
    pub leaves: Vec<String>,
    pub size: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("instance declares no nodes")]
    NoNodes,
    #[error("instance declares no equivalence classes")]
    NoClasses,
    #[error("duplicate node id {0:?}")]
    DuplicateNodeId(String),
    #[error("edge references undeclared node {0:?}")]
    UnknownEdgeNode(String),
    #[error("duplicate edge {0:?} -> {1:?}")]
    DuplicateEdge(String, String),
    #[error("edge relation contains a cycle through {0:?}")]
    Cycle(Vec<String>),
    #[error("class {index} has an empty leaf set")]
    EmptyLeafSet { index: usize },
    #[error("class {index} has size zero")]
    ZeroClassSize { index: usize },
    #[error("class {index} references undeclared node {node:?}")]
    UnknownClassLeaf { index: usize, node: String },
    #[error("class {index} signs up for {node:?}, which is a federation, not a leaf")]
    ClassOnFederation { index: usize, node: String },
    #[error("classes {first} and {second} have the same leaf set")]
    DuplicateLeafSet { first: usize, second: usize },
    #[error("leaf {0:?} appears in no class")]
    UncoveredLeaf(String),
    #[error("node {0:?} has an empty population")]
    EmptyPopulation(String),
}

/// Outcome of validating a [`RawInstance`]: hard errors plus advisory notes.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            write!(f, "valid")?;
        } else {
            writeln!(f, "{} error(s):", self.errors.len())?;
            for e in &self.errors {
                writeln!(f, "  error: {e}")?;
            }
        }
        for w in &self.warnings {
            writeln!(f)?;
            write!(f, "  warning: {w}")?;
        }
        Ok(())
    }
}

struct Checked {
    index: HashMap<String, usize>,
    children: Vec<Vec<NodeId>>,
    parents: Vec<Vec<NodeId>>,
    topo_bottom_up: Vec<NodeId>,
    classes: Vec<EquivalenceClass>,
}

impl RawInstance {
    /// Validate the instance, optionally flagging nodes whose population is
    /// below `min_population` (the intended assembly size).
    pub fn validate(&self, min_population: Option<u64>) -> ValidationReport {
        let mut report = ValidationReport::default();
        match self.check(&mut report) {
            Some(checked) => {
                self.derived_warnings(&checked, min_population, &mut report);
                report
            }
            None => report,
        }
    }

    /// Validate and build an [`Instance`], failing with the full report.
    pub fn build(&self) -> Result<Instance, ValidationReport> {
        let mut report = ValidationReport::default();
        let checked = self.check(&mut report);
        match checked {
            Some(c) if report.is_valid() => Ok(Instance::from_parts(
                self.nodes.iter().map(|n| n.id.clone()).collect(),
                c.children,
                c.parents,
                c.classes,
                c.topo_bottom_up,
            )),
            _ => Err(report),
        }
    }

    fn check(&self, report: &mut ValidationReport) -> Option<Checked> {
        let mut push = |e: ValidationError| report.errors.push(e.to_string());

        if self.nodes.is_empty() {
            push(ValidationError::NoNodes);
            return None;
        }
        if self.classes.is_empty() {
            push(ValidationError::NoClasses);
        }

        let mut index: HashMap<String, usize> = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                push(ValidationError::DuplicateNodeId(node.id.clone()));
            }
        }

        let n = self.nodes.len();
        let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        let mut parents: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        let mut seen_edges = BTreeSet::new();
        let mut edges_ok = true;
        for (p, c) in &self.edges {
            let (pi, ci) = match (index.get(p), index.get(c)) {
                (Some(&pi), Some(&ci)) => (pi, ci),
                (None, _) => {
                    push(ValidationError::UnknownEdgeNode(p.clone()));
                    edges_ok = false;
                    continue;
                }
                (_, None) => {
                    push(ValidationError::UnknownEdgeNode(c.clone()));
                    edges_ok = false;
                    continue;
                }
            };
            if !seen_edges.insert((pi, ci)) {
                push(ValidationError::DuplicateEdge(p.clone(), c.clone()));
                edges_ok = false;
                continue;
            }
            children[pi].push(NodeId(ci));
            parents[ci].push(NodeId(pi));
        }

        // Kahn's algorithm over reversed edges yields children-first order
        // and detects cycles.
        let mut remaining_out: Vec<usize> = children.iter().map(|c| c.len()).collect();
        let mut queue: Vec<usize> =
            (0..n).filter(|&v| remaining_out[v] == 0).collect();
        let mut topo_bottom_up: Vec<NodeId> = Vec::with_capacity(n);
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            topo_bottom_up.push(NodeId(v));
            for &p in &parents[v] {
                remaining_out[p.0] -= 1;
                if remaining_out[p.0] == 0 {
                    queue.push(p.0);
                }
            }
        }
        if topo_bottom_up.len() != n {
            let stuck: Vec<String> = (0..n)
                .filter(|&v| remaining_out[v] > 0)
                .map(|v| self.nodes[v].id.clone())
                .collect();
            push(ValidationError::Cycle(stuck));
            return None;
        }
        if !edges_ok {
            return None;
        }

        let mut classes: Vec<EquivalenceClass> = Vec::with_capacity(self.classes.len());
        let mut leaf_sets: HashMap<BTreeSet<NodeId>, usize> = HashMap::new();
        for (i, class) in self.classes.iter().enumerate() {
            if class.leaves.is_empty() {
                push(ValidationError::EmptyLeafSet { index: i });
                continue;
            }
            if class.size == 0 {
                push(ValidationError::ZeroClassSize { index: i });
            }
            let mut leaves = BTreeSet::new();
            let mut well_formed = true;
            for leaf in &class.leaves {
                match index.get(leaf) {
                    None => {
                        push(ValidationError::UnknownClassLeaf { index: i, node: leaf.clone() });
                        well_formed = false;
                    }
                    Some(&v) if !children[v].is_empty() => {
                        push(ValidationError::ClassOnFederation { index: i, node: leaf.clone() });
                        well_formed = false;
                    }
                    Some(&v) => {
                        leaves.insert(NodeId(v));
                    }
                }
            }
            if !well_formed {
                continue;
            }
            if let Some(&first) = leaf_sets.get(&leaves) {
                push(ValidationError::DuplicateLeafSet { first, second: i });
                continue;
            }
            leaf_sets.insert(leaves.clone(), i);
            classes.push(EquivalenceClass { leaves, size: class.size });
        }

        // every leaf must be covered by some class
        for (v, kids) in children.iter().enumerate() {
            if kids.is_empty() && !classes.iter().any(|c| c.leaves.contains(&NodeId(v))) {
                push(ValidationError::UncoveredLeaf(self.nodes[v].id.clone()));
            }
        }

        Some(Checked { index, children, parents, topo_bottom_up, classes })
    }

    fn derived_warnings(
        &self,
        checked: &Checked,
        min_population: Option<u64>,
        report: &mut ValidationReport,
    ) {
        let n = self.nodes.len();
        // leaf descendants, bottom-up
        let mut descendants: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &v in &checked.topo_bottom_up {
            if checked.children[v.0].is_empty() {
                descendants[v.0].insert(v.0);
            } else {
                let mut set = BTreeSet::new();
                for &c in &checked.children[v.0] {
                    set.extend(descendants[c.0].iter().copied());
                }
                descendants[v.0] = set;
            }
        }
        let populations: Vec<u64> = (0..n)
            .map(|v| {
                checked
                    .classes
                    .iter()
                    .filter(|cl| cl.leaves.iter().any(|l| descendants[v].contains(&l.0)))
                    .map(|cl| cl.size)
                    .sum()
            })
            .collect();
        for (v, &population) in populations.iter().enumerate() {
            if population == 0 {
                report
                    .errors
                    .push(ValidationError::EmptyPopulation(self.nodes[v].id.clone()).to_string());
            }
        }

        // reachability of classes from root federations
        let root_feds: Vec<usize> = (0..n)
            .filter(|&v| checked.parents[v].is_empty() && !checked.children[v].is_empty())
            .collect();
        if !root_feds.is_empty() {
            let mut reachable: BTreeSet<usize> = BTreeSet::new();
            for &r in &root_feds {
                reachable.extend(descendants[r].iter().copied());
            }
            for (i, class) in checked.classes.iter().enumerate() {
                if !class.leaves.iter().any(|l| reachable.contains(&l.0)) {
                    report.warnings.push(format!(
                        "class {i} is not reachable from any root federation"
                    ));
                }
            }
        }

        if let Some(min) = min_population {
            for (v, &population) in populations.iter().enumerate() {
                if population < min {
                    report.warnings.push(format!(
                        "node {:?} has population {} < requested assembly size {min}",
                        self.nodes[v].id, population
                    ));
                }
            }
        }
        let _ = &checked.index;
    }
}
