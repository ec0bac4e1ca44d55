//! JSON schemas for instances, assignments, and randomized assignments.
//!
//! Instance: `{"nodes": [{"id": str}], "edges": [[parent, child]],
//! "classes": [{"leaves": [str], "size": int}]}`.
//!
//! Assignment: `{"n": int, "assemblies": {nodeId: [[classIndex,
//! memberIndex]]}}` where `classIndex` refers to the instance's class list.
//!
//! Randomized assignment: `{"n": int, "support": [{"counts": {nodeId:
//! {classIndex: seats}}}], "weights": [decimal strings]}`.

use crate::instance::{
    AssemblyAssignment, CanonicalAssignment, ClassId, Instance, Member, RawInstance,
    ValidationReport,
};
use crate::optimizer::RandomizedAssignment;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid instance:\n{0}")]
    Invalid(ValidationReport),
    #[error("assignment references unknown node {0:?}")]
    UnknownNode(String),
    #[error("assignment is missing node {0:?}")]
    MissingNode(String),
    #[error("class index {0} out of range")]
    ClassIndexOutOfRange(usize),
    #[error("member index {index} out of range for class {class} (size {size})")]
    MemberIndexOutOfRange { class: usize, index: u64, size: u64 },
    #[error("class {0} has no seats at node {1:?}")]
    ClassNotAtNode(usize, String),
    #[error("weight {0:?} is not a decimal number")]
    BadWeight(String),
    #[error("support has {support} columns but {weights} weights")]
    WeightCountMismatch { support: usize, weights: usize },
}

fn parse_error(err: serde_json::Error) -> IoError {
    IoError::Parse { line: err.line(), column: err.column(), message: err.to_string() }
}

/// Parse instance JSON without validating.
pub fn parse_raw_instance(bytes: &[u8]) -> Result<RawInstance, IoError> {
    serde_json::from_slice(bytes).map_err(parse_error)
}

/// Parse and validate instance JSON.
pub fn parse_instance(bytes: &[u8]) -> Result<Instance, IoError> {
    parse_raw_instance(bytes)?.build().map_err(IoError::Invalid)
}

pub fn serialize_instance(instance: &Instance) -> Vec<u8> {
    let raw = instance_to_raw(instance);
    let mut out = serde_json::to_vec_pretty(&raw).expect("serializable");
    out.push(b'\n');
    out
}

pub fn instance_to_raw(instance: &Instance) -> RawInstance {
    use crate::instance::{RawClass, RawNode};
    RawInstance {
        nodes: instance
            .nodes()
            .map(|v| RawNode { id: instance.name(v).to_string() })
            .collect(),
        edges: instance
            .nodes()
            .flat_map(|v| {
                instance
                    .children(v)
                    .iter()
                    .map(move |&c| (instance.name(v).to_string(), instance.name(c).to_string()))
            })
            .collect(),
        classes: instance
            .classes()
            .iter()
            .map(|cl| RawClass {
                leaves: cl.leaves.iter().map(|&l| instance.name(l).to_string()).collect(),
                size: cl.size,
            })
            .collect(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignmentJson {
    n: u64,
    assemblies: BTreeMap<String, Vec<(usize, u64)>>,
}

pub fn serialize_assignment(instance: &Instance, assignment: &AssemblyAssignment) -> Vec<u8> {
    let assemblies = instance
        .nodes()
        .map(|v| {
            let mut members: Vec<(usize, u64)> =
                assignment.assembly(v).iter().map(|m| (m.class.0, m.index)).collect();
            members.sort_unstable();
            (instance.name(v).to_string(), members)
        })
        .collect();
    let mut out =
        serde_json::to_vec_pretty(&AssignmentJson { n: assignment.n, assemblies })
            .expect("serializable");
    out.push(b'\n');
    out
}

pub fn parse_assignment(
    instance: &Instance,
    bytes: &[u8],
) -> Result<AssemblyAssignment, IoError> {
    let json: AssignmentJson = serde_json::from_slice(bytes).map_err(parse_error)?;
    let mut assemblies = vec![Vec::new(); instance.node_count()];
    for (name, members) in &json.assemblies {
        let node = instance
            .node_by_name(name)
            .ok_or_else(|| IoError::UnknownNode(name.clone()))?;
        assemblies[node.0] = members
            .iter()
            .map(|&(class, index)| {
                if class >= instance.class_count() {
                    return Err(IoError::ClassIndexOutOfRange(class));
                }
                let size = instance.class(ClassId(class)).size;
                if index >= size {
                    return Err(IoError::MemberIndexOutOfRange { class, index, size });
                }
                Ok(Member { class: ClassId(class), index })
            })
            .collect::<Result<_, _>>()?;
    }
    for v in instance.nodes() {
        if !json.assemblies.contains_key(instance.name(v)) {
            return Err(IoError::MissingNode(instance.name(v).to_string()));
        }
    }
    Ok(AssemblyAssignment { n: json.n, assemblies })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomizedJson {
    n: u64,
    support: Vec<CanonicalJson>,
    weights: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalJson {
    counts: BTreeMap<String, BTreeMap<String, u64>>,
}

pub fn serialize_randomized(
    instance: &Instance,
    randomized: &RandomizedAssignment,
) -> Vec<u8> {
    let support = randomized
        .support
        .iter()
        .map(|column| {
            let counts = instance
                .nodes()
                .map(|v| {
                    let per_node: BTreeMap<String, u64> = instance
                        .classes_of(v)
                        .iter()
                        .enumerate()
                        .filter(|(slot, _)| column.counts[v.0][*slot] > 0)
                        .map(|(slot, class)| (class.0.to_string(), column.counts[v.0][slot]))
                        .collect();
                    (instance.name(v).to_string(), per_node)
                })
                .collect();
            CanonicalJson { counts }
        })
        .collect();
    let weights = randomized.weights.iter().map(|w| format!("{w:.17}")).collect();
    let mut out =
        serde_json::to_vec_pretty(&RandomizedJson { n: randomized.n, support, weights })
            .expect("serializable");
    out.push(b'\n');
    out
}

pub fn parse_randomized(
    instance: &Instance,
    bytes: &[u8],
) -> Result<RandomizedAssignment, IoError> {
    let json: RandomizedJson = serde_json::from_slice(bytes).map_err(parse_error)?;
    if json.support.len() != json.weights.len() {
        return Err(IoError::WeightCountMismatch {
            support: json.support.len(),
            weights: json.weights.len(),
        });
    }
    let mut support = Vec::with_capacity(json.support.len());
    for column_json in &json.support {
        let mut column = CanonicalAssignment::zero(instance, json.n);
        for (name, per_node) in &column_json.counts {
            let node = instance
                .node_by_name(name)
                .ok_or_else(|| IoError::UnknownNode(name.clone()))?;
            for (class_str, &seats) in per_node {
                let class: usize = class_str
                    .parse()
                    .map_err(|_| IoError::ClassIndexOutOfRange(usize::MAX))?;
                if class >= instance.class_count() {
                    return Err(IoError::ClassIndexOutOfRange(class));
                }
                let slot = instance
                    .class_slot(node, ClassId(class))
                    .ok_or_else(|| IoError::ClassNotAtNode(class, name.clone()))?;
                column.counts[node.0][slot] = seats;
            }
        }
        support.push(column);
    }
    let weights = json
        .weights
        .iter()
        .map(|w| w.trim().parse::<f64>().map_err(|_| IoError::BadWeight(w.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RandomizedAssignment { n: json.n, support, weights })
}
