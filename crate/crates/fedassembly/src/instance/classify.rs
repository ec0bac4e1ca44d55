//! Structural classification of instances.
//!
//! Laminar: the graph is a tree and every class is signed up for a single
//! leaf. Semi-laminar: the node set factors exactly as a region tree crossed
//! with a topic set, plus one aggregator node per region whose children are
//! that region's topic nodes. Anything else is general. Detection is exact
//! structural matching; near-misses classify as general.

use super::{Instance, NodeId};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classification {
    Laminar,
    SemiLaminar(SemiLaminarStructure),
    General,
}

impl Classification {
    pub fn kind(&self) -> &'static str {
        match self {
            Classification::Laminar => "laminar",
            Classification::SemiLaminar(_) => "semi-laminar",
            Classification::General => "general",
        }
    }
}

/// The discovered region x topic factorization of a semi-laminar instance.
///
/// Regions index a tree; topic `t` of region `r` lives at node
/// `topic_node[r][t]`, and `star[r]` is the per-region aggregator whose
/// children are exactly that region's topic nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemiLaminarStructure {
    pub num_topics: usize,
    pub star: Vec<NodeId>,
    pub topic_node: Vec<Vec<NodeId>>,
    pub region_parent: Vec<Option<usize>>,
    pub region_children: Vec<Vec<usize>>,
    /// Regions with no children in the region tree.
    pub leaf_regions: Vec<usize>,
    /// Every region, children before parents.
    pub region_topo_bottom_up: Vec<usize>,
}

impl SemiLaminarStructure {
    pub fn num_regions(&self) -> usize {
        self.star.len()
    }

    /// Region and topic of a topic node, if `v` is one.
    pub fn locate(&self, v: NodeId) -> Option<(usize, usize)> {
        for (r, row) in self.topic_node.iter().enumerate() {
            if let Some(t) = row.iter().position(|&n| n == v) {
                return Some((r, t));
            }
        }
        None
    }

    pub fn is_region_tree_edge(&self, parent: NodeId, child: NodeId) -> bool {
        match (self.locate(parent), self.locate(child)) {
            (Some((rp, tp)), Some((rc, tc))) => {
                tp == tc && self.region_parent[rc] == Some(rp)
            }
            _ => false,
        }
    }
}

pub(super) fn classify(instance: &Instance) -> Classification {
    if is_laminar(instance) {
        return Classification::Laminar;
    }
    match detect_semilaminar(instance) {
        Some(structure) => Classification::SemiLaminar(structure),
        None => Classification::General,
    }
}

fn is_laminar(instance: &Instance) -> bool {
    if instance.classes().iter().any(|c| c.leaves.len() != 1) {
        return false;
    }
    // a tree: exactly one root, every other node exactly one parent
    let mut roots = 0;
    for v in instance.nodes() {
        match instance.parents(v).len() {
            0 => roots += 1,
            1 => {}
            _ => return false,
        }
    }
    roots == 1
}

fn detect_semilaminar(instance: &Instance) -> Option<SemiLaminarStructure> {
    let n = instance.node_count();
    // stars are exactly the parentless nodes
    let stars: Vec<NodeId> = instance
        .nodes()
        .filter(|&v| instance.parents(v).is_empty())
        .collect();
    let num_regions = stars.len();
    // a single-region product is just a flat federation over its topic
    // leaves; only a nontrivial region tree counts as semi-laminar
    if num_regions < 2 {
        return None;
    }
    let star_set: BTreeSet<NodeId> = stars.iter().copied().collect();

    // every star is a federation over non-star children, and all stars agree
    // on the topic count
    let num_topics = instance.children(stars[0]).len();
    if num_topics == 0 {
        return None;
    }
    if n != num_regions * (num_topics + 1) {
        return None;
    }
    let mut region_of: BTreeMap<NodeId, usize> = BTreeMap::new();
    for (r, &s) in stars.iter().enumerate() {
        let kids = instance.children(s);
        if kids.len() != num_topics {
            return None;
        }
        for &k in kids {
            if star_set.contains(&k) {
                return None;
            }
            if region_of.insert(k, r).is_some() {
                // a topic node fed by two stars
                return None;
            }
        }
    }
    // every non-star node must belong to exactly one star
    if region_of.len() != n - num_regions {
        return None;
    }

    // region-level edges from topic-copy edges between non-stars
    let mut region_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut copy_edge_count = 0usize;
    for v in instance.nodes() {
        if star_set.contains(&v) {
            continue;
        }
        for &c in instance.children(v) {
            if star_set.contains(&c) {
                return None;
            }
            let (rv, rc) = (region_of[&v], region_of[&c]);
            if rv == rc {
                return None;
            }
            region_edges.insert((rv, rc));
            copy_edge_count += 1;
        }
    }
    if region_edges.len() != num_regions.saturating_sub(1)
        || copy_edge_count != (num_regions - 1) * num_topics
    {
        return None;
    }

    // the region graph must be a tree
    let mut region_parent: Vec<Option<usize>> = vec![None; num_regions];
    let mut region_children: Vec<Vec<usize>> = vec![Vec::new(); num_regions];
    for &(p, c) in &region_edges {
        if region_parent[c].is_some() {
            return None;
        }
        region_parent[c] = Some(p);
        region_children[p].push(c);
    }
    let roots: Vec<usize> = (0..num_regions).filter(|&r| region_parent[r].is_none()).collect();
    if roots.len() != 1 {
        return None;
    }
    let root = roots[0];
    // connectivity + bottom-up order by walking from the root
    let mut order_top_down = vec![root];
    let mut head = 0;
    while head < order_top_down.len() {
        let r = order_top_down[head];
        head += 1;
        order_top_down.extend(region_children[r].iter().copied());
    }
    if order_top_down.len() != num_regions {
        return None;
    }
    let region_topo_bottom_up: Vec<usize> = order_top_down.iter().rev().copied().collect();

    // propagate topic labels from the root region outward
    let mut topic_node: Vec<Vec<Option<NodeId>>> = vec![vec![None; num_topics]; num_regions];
    let mut topic_of: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut root_kids: Vec<NodeId> = instance.children(stars[root]).to_vec();
    root_kids.sort();
    for (t, &v) in root_kids.iter().enumerate() {
        topic_node[root][t] = Some(v);
        topic_of.insert(v, t);
    }
    for &r in &order_top_down {
        for &v in instance.children(stars[r]) {
            let t = *topic_of.get(&v)?;
            for &c in instance.children(v) {
                let rc = region_of[&c];
                if region_parent[rc] != Some(r) {
                    return None;
                }
                if topic_of.insert(c, t).is_some() {
                    return None;
                }
                if topic_node[rc][t].is_some() {
                    return None;
                }
                topic_node[rc][t] = Some(c);
            }
        }
    }
    let topic_node: Vec<Vec<NodeId>> = topic_node
        .into_iter()
        .map(|row| row.into_iter().collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()?;

    let leaf_regions: Vec<usize> =
        (0..num_regions).filter(|&r| region_children[r].is_empty()).collect();

    // leaves of G must be exactly the leaf regions' topic nodes; internal
    // regions' topic nodes are federations via copy edges
    for (r, row) in topic_node.iter().enumerate() {
        for &v in row {
            if region_children[r].is_empty() != instance.is_leaf(v) {
                return None;
            }
        }
    }

    // each class confined to a single leaf region's topic nodes
    for class in instance.classes() {
        let mut class_regions = BTreeSet::new();
        for leaf in &class.leaves {
            let r = *region_of.get(leaf)?;
            class_regions.insert(r);
        }
        if class_regions.len() != 1 {
            return None;
        }
        let r = *class_regions.iter().next().unwrap();
        if !region_children[r].is_empty() {
            return None;
        }
    }

    Some(SemiLaminarStructure {
        num_topics,
        star: stars,
        topic_node,
        region_parent,
        region_children,
        leaf_regions,
        region_topo_bottom_up,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{semilaminar_raw, RawClass, RawInstance, RawNode, SemiLaminarSpec};

    #[test]
    fn path_tree_with_singleton_classes_is_laminar() {
        let raw = RawInstance {
            nodes: vec![
                RawNode { id: "root".into() },
                RawNode { id: "mid".into() },
                RawNode { id: "leaf".into() },
            ],
            edges: vec![("root".into(), "mid".into()), ("mid".into(), "leaf".into())],
            classes: vec![RawClass { leaves: vec!["leaf".into()], size: 10 }],
        };
        let inst = raw.build().unwrap();
        assert_eq!(inst.classify(), Classification::Laminar);
    }

    #[test]
    fn region_topic_construction_is_semilaminar() {
        // region tree: root + 2 leaf regions, 2 topics
        let spec = SemiLaminarSpec {
            region_parent: vec![None, Some(0), Some(0)],
            num_topics: 2,
            classes: vec![
                (1, vec![0], 4),
                (1, vec![1], 4),
                (1, vec![0, 1], 4),
                (2, vec![0], 6),
                (2, vec![1], 6),
                (2, vec![0, 1], 6),
            ],
        };
        let inst = semilaminar_raw(&spec).build().unwrap();
        match inst.classify() {
            Classification::SemiLaminar(s) => {
                assert_eq!(s.num_regions(), 3);
                assert_eq!(s.num_topics, 2);
                assert_eq!(s.leaf_regions.len(), 2);
            }
            other => panic!("expected semi-laminar, got {}", other.kind()),
        }
    }

    #[test]
    fn multi_leaf_class_on_flat_federation_is_general() {
        let inst = crate::instance::appendix_c_fixture(1, 2);
        assert_eq!(inst.classify(), Classification::General);
    }
}
