//! Random instance generators and hand-built fixtures.

use super::{Instance, RawClass, RawInstance, RawNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Knobs for the random DAG generator.
#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    /// Mean of the exponential class-size distribution, before rounding.
    pub mean_class_size: f64,
    /// Sizes are clamped below by this value.
    pub min_class_size: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { mean_class_size: 100.0, min_class_size: 1 }
    }
}

fn exponential_size<R: Rng + ?Sized>(mean: f64, min: u64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let x = -(1.0 - u).ln() * mean;
    (x.round() as u64).max(min)
}

/// Random instance: leaf classes with exponential sizes, then federations
/// drawing a random set of already-defined nodes as children. Arbitrary DAGs
/// arise because a node may be picked by several later federations.
pub fn generate_instance(num_classes: usize, num_federations: usize, seed: u64) -> Instance {
    generate_instance_with(&GeneratorConfig::default(), num_classes, num_federations, seed)
}

pub fn generate_instance_with(
    config: &GeneratorConfig,
    num_classes: usize,
    num_federations: usize,
    seed: u64,
) -> Instance {
    assert!(num_classes >= 1 && num_federations >= 1);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut nodes: Vec<RawNode> = Vec::new();
    let mut classes: Vec<RawClass> = Vec::new();
    for i in 0..num_classes {
        let id = format!("leaf{i}");
        nodes.push(RawNode { id: id.clone() });
        classes.push(RawClass {
            leaves: vec![id],
            size: exponential_size(config.mean_class_size, config.min_class_size, &mut rng),
        });
    }
    let mut edges: Vec<(String, String)> = Vec::new();
    for i in 0..num_federations {
        let available = num_classes + i;
        let lo = 2.min(available);
        let count = rng.random_range(lo..=available);
        let picks = crate::sampling::uniform_subset(available as u64, count as u64, &mut rng);
        let id = format!("fed{i}");
        for p in picks {
            let child = if (p as usize) < num_classes {
                format!("leaf{p}")
            } else {
                format!("fed{}", p as usize - num_classes)
            };
            edges.push((id.clone(), child));
        }
        nodes.push(RawNode { id });
    }
    RawInstance { nodes, edges, classes }
        .build()
        .expect("generated instance is valid")
}

/// Random laminar instance: a tree with `num_leaves` leaves and one singleton
/// class per leaf, sizes uniform in `[min_size, max_size]`.
pub fn generate_laminar_instance(
    num_leaves: usize,
    min_size: u64,
    max_size: u64,
    seed: u64,
) -> Instance {
    assert!(num_leaves >= 1 && min_size >= 1 && min_size <= max_size);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut nodes = vec![RawNode { id: "root".into() }];
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut classes: Vec<RawClass> = Vec::new();
    // attach each new internal-or-leaf node under a random existing
    // internal node; leaves are added last so every internal node ends up
    // with at least one child
    let internal_target = if num_leaves >= 3 { rng.random_range(0..num_leaves / 2) } else { 0 };
    let mut internal_ids = vec!["root".to_string()];
    for i in 0..internal_target {
        let parent = internal_ids[rng.random_range(0..internal_ids.len())].clone();
        let id = format!("mid{i}");
        nodes.push(RawNode { id: id.clone() });
        edges.push((parent, id.clone()));
        internal_ids.push(id);
    }
    for i in 0..num_leaves {
        let parent = internal_ids[rng.random_range(0..internal_ids.len())].clone();
        let id = format!("leaf{i}");
        nodes.push(RawNode { id: id.clone() });
        edges.push((parent, id.clone()));
        classes.push(RawClass {
            leaves: vec![id],
            size: rng.random_range(min_size..=max_size),
        });
    }
    // internal nodes that received no children would be childless leaves
    // without a class; give each one a fresh leaf
    let childless: Vec<String> = internal_ids
        .iter()
        .filter(|id| !edges.iter().any(|(p, _)| p == *id))
        .cloned()
        .collect();
    for (j, parent) in childless.into_iter().enumerate() {
        let id = format!("extra{j}");
        nodes.push(RawNode { id: id.clone() });
        edges.push((parent, id.clone()));
        classes.push(RawClass {
            leaves: vec![id],
            size: rng.random_range(min_size..=max_size),
        });
    }
    RawInstance { nodes, edges, classes }
        .build()
        .expect("generated laminar instance is valid")
}

/// Blueprint for building a semi-laminar instance directly from its
/// factorization.
#[derive(Clone, Debug)]
pub struct SemiLaminarSpec {
    /// Parent of each region in the region tree (index 0.. regions).
    pub region_parent: Vec<Option<usize>>,
    pub num_topics: usize,
    /// (leaf region, topic subset, size) per equivalence class.
    pub classes: Vec<(usize, Vec<usize>, u64)>,
}

/// Materialize a semi-laminar instance: per (region, topic) one node in a
/// copy of the region tree, plus one aggregator node per region.
pub fn semilaminar_raw(spec: &SemiLaminarSpec) -> RawInstance {
    let regions = spec.region_parent.len();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let node_id = |r: usize, t: usize| format!("r{r}t{t}");
    for r in 0..regions {
        nodes.push(RawNode { id: format!("r{r}star") });
        for t in 0..spec.num_topics {
            nodes.push(RawNode { id: node_id(r, t) });
            edges.push((format!("r{r}star"), node_id(r, t)));
            if let Some(p) = spec.region_parent[r] {
                edges.push((node_id(p, t), node_id(r, t)));
            }
        }
    }
    let classes = spec
        .classes
        .iter()
        .map(|(r, topics, size)| RawClass {
            leaves: topics.iter().map(|&t| node_id(*r, t)).collect(),
            size: *size,
        })
        .collect();
    RawInstance { nodes, edges, classes }
}

/// Random semi-laminar instance with regularity margins independent of the
/// drawn sizes: three topics, and per leaf region three single-topic classes
/// of size `s` plus one all-topics class of size `3s`. That profile pins the
/// selectable fraction at exactly one half and the aggregator child ratio at
/// two thirds, so the structural conditions reduce to `n >= 12` once all
/// populations reach `4n`.
pub fn generate_semilaminar_instance(n: u64, seed: u64) -> Instance {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let num_leaf_regions = rng.random_range(2..=4usize);
    // region 0 is the root; all leaf regions hang directly off it
    let mut region_parent = vec![None];
    for _ in 0..num_leaf_regions {
        region_parent.push(Some(0));
    }
    let mut classes = Vec::new();
    for r in 1..=num_leaf_regions {
        let s = rng.random_range(n.max(2)..=2 * n.max(2));
        for t in 0..3 {
            classes.push((r, vec![t], s));
        }
        classes.push((r, vec![0, 1, 2], 3 * s));
    }
    let spec = SemiLaminarSpec { region_parent, num_topics: 3, classes };
    semilaminar_raw(&spec).build().expect("generated semi-laminar instance is valid")
}

/// Flat federation over `2n` leaves: one size-`k` class per leaf plus a
/// class of size `(2n-1)k` signed up for every leaf. Every child's quota is
/// exactly `1/(2n)`, but topologically iterative selection schemes cannot
/// satisfy individual representation here.
pub fn appendix_c_fixture(n: u64, k: u64) -> Instance {
    assert!(n >= 1 && k >= 1);
    let mut nodes = vec![RawNode { id: "f".into() }];
    let mut edges = Vec::new();
    let mut classes = Vec::new();
    let mut all_leaves = Vec::new();
    for j in 0..2 * n {
        let id = format!("c{j}");
        nodes.push(RawNode { id: id.clone() });
        edges.push(("f".to_string(), id.clone()));
        classes.push(RawClass { leaves: vec![id.clone()], size: k });
        all_leaves.push(id);
    }
    classes.push(RawClass { leaves: all_leaves, size: (2 * n - 1) * k });
    RawInstance { nodes, edges, classes }
        .build()
        .expect("fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn generator_is_deterministic() {
        let a = generate_instance(5, 5, 7);
        let b = generate_instance(5, 5, 7);
        assert_eq!(a.node_count(), b.node_count());
        assert_eq!(a.classes(), b.classes());
        for v in a.nodes() {
            assert_eq!(a.children(v), b.children(v));
        }
    }

    #[test]
    fn generator_shape() {
        let inst = generate_instance(2, 2, 3);
        assert_eq!(inst.class_count(), 2);
        assert_eq!(inst.federations().len(), 2);
        assert_eq!(inst.leaves().len(), 2);
    }

    #[test]
    fn generator_grid_is_valid() {
        // a slice of the full sweep; the acceptance suite covers 1000 seeds
        for &classes in &[2usize, 5, 10, 20] {
            for &feds in &[2usize, 5, 10, 20] {
                for seed in 0..4 {
                    let inst = generate_instance(classes, feds, seed);
                    for v in inst.nodes() {
                        assert!(inst.population(v) > 0);
                    }
                }
            }
        }
    }

    #[test]
    fn fixture_minimal_shape() {
        let inst = appendix_c_fixture(1, 2);
        assert_eq!(inst.leaves().len(), 2);
        let sizes: Vec<u64> = inst.classes().iter().map(|c| c.size).collect();
        assert_eq!(sizes, vec![2, 2, 2]);
        let f = inst.node_by_name("f").unwrap();
        for &c in inst.children(f) {
            assert_eq!(inst.quota(f, c).unwrap(), rat(1, 2));
        }
    }

    #[test]
    fn fixture_shared_class_size() {
        let inst = appendix_c_fixture(2, 3);
        assert_eq!(inst.leaves().len(), 4);
        let shared = inst.classes().iter().find(|c| c.leaves.len() == 4).unwrap();
        assert_eq!(shared.size, 9);
        let f = inst.node_by_name("f").unwrap();
        for &c in inst.children(f) {
            assert_eq!(inst.quota(f, c).unwrap(), rat(1, 4));
        }
    }

    #[test]
    fn laminar_generator_classifies_laminar() {
        for seed in 0..20 {
            let inst = generate_laminar_instance(4, 10, 50, seed);
            assert_eq!(inst.classify(), crate::instance::Classification::Laminar);
        }
    }

    #[test]
    fn semilaminar_generator_classifies_semilaminar() {
        for seed in 0..20 {
            let inst = generate_semilaminar_instance(12, seed);
            assert!(matches!(
                inst.classify(),
                crate::instance::Classification::SemiLaminar(_)
            ));
        }
    }
}
