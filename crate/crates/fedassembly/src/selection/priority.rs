//! Priority-order selection for general DAGs.
//!
//! Conceptually: draw independent uniform orders over the whole population,
//! one per seat, plus one shared tie-break order; each node seats the
//! top-ranked member of its population under each seat order, replacing
//! repeats with the next people from the same equivalence class.
//!
//! People are never materialized. Within one seat order, only the class of
//! the top member of each population matters, and the class minima of a
//! uniform order behave exactly like a race of exponential clocks with rates
//! equal to the class sizes. Drawing one clock per class and taking the
//! argmin over each node's classes reproduces the joint winner distribution
//! across all nodes, which is what the inheritance argument needs. The
//! shared tie-break order restricted to one class is just a uniform
//! permutation, realized lazily as a prefix.

use super::SelectionError;
use crate::instance::{AssemblyAssignment, ClassId, Instance, Member, NodeId};
use crate::sampling::permutation_prefix;
use rand::Rng;

/// Outcome of one internal draw: per-node per-class seat ranks plus the
/// assembled assignment.
#[derive(Clone, Debug)]
pub struct PriorityDraw {
    /// Seats class `classes_of(v)[slot]` won at node `v`, aligned with
    /// `Instance::classes_of`.
    pub ranks: Vec<Vec<u64>>,
    pub assignment: AssemblyAssignment,
}

/// A draw needed more members of a class than exist.
#[derive(Clone, Debug)]
pub struct PriorityDrawFailure {
    pub node: NodeId,
    pub class: ClassId,
    pub needed: u64,
    pub size: u64,
}

/// One internal draw of the priority algorithm. Fails exactly when some
/// node's rank for a class exceeds the class size.
pub fn attempt_priority_draw<R: Rng + ?Sized>(
    instance: &Instance,
    n: u64,
    rng: &mut R,
) -> Result<PriorityDraw, PriorityDrawFailure> {
    let num_classes = instance.class_count();
    let mut ranks: Vec<Vec<u64>> = instance
        .nodes()
        .map(|v| vec![0u64; instance.classes_of(v).len()])
        .collect();
    let mut clocks = vec![0f64; num_classes];
    for _ in 0..n {
        for (c, clock) in clocks.iter_mut().enumerate() {
            let u: f64 = rng.random();
            *clock = -(1.0 - u).ln() / instance.class(ClassId(c)).size as f64;
        }
        for v in instance.nodes() {
            let slots = instance.classes_of(v);
            debug_assert!(!slots.is_empty());
            let mut best = 0usize;
            let mut best_clock = clocks[slots[0].0];
            for (slot, &class) in slots.iter().enumerate().skip(1) {
                if clocks[class.0] < best_clock {
                    best = slot;
                    best_clock = clocks[class.0];
                }
            }
            ranks[v.0][best] += 1;
        }
    }

    // ranks at any node are bounded by the ranks at some leaf below it, so
    // overflow can only appear at leaves; checking every node is as cheap
    let mut max_rank = vec![0u64; num_classes];
    for v in instance.nodes() {
        for (slot, &class) in instance.classes_of(v).iter().enumerate() {
            let r = ranks[v.0][slot];
            if r > instance.class(class).size {
                return Err(PriorityDrawFailure {
                    node: v,
                    class,
                    needed: r,
                    size: instance.class(class).size,
                });
            }
            max_rank[class.0] = max_rank[class.0].max(r);
        }
    }

    // one shared uniform permutation per class; every node takes a prefix
    let prefixes: Vec<Vec<u64>> = (0..num_classes)
        .map(|c| permutation_prefix(instance.class(ClassId(c)).size, max_rank[c], rng))
        .collect();
    let assemblies = instance
        .nodes()
        .map(|v| {
            let mut assembly = Vec::with_capacity(n as usize);
            for (slot, &class) in instance.classes_of(v).iter().enumerate() {
                for &index in &prefixes[class.0][..ranks[v.0][slot] as usize] {
                    assembly.push(Member { class, index });
                }
            }
            assembly
        })
        .collect();
    Ok(PriorityDraw { ranks, assignment: AssemblyAssignment { n, assemblies } })
}

/// Whether one internal draw would succeed, without materializing the
/// assignment. Rank overflow is monotone along inheritance, so checking the
/// leaves is exact; this is the cheap probe behind failure-rate estimates.
pub fn priority_draw_succeeds<R: Rng + ?Sized>(
    instance: &Instance,
    n: u64,
    rng: &mut R,
) -> bool {
    let num_classes = instance.class_count();
    let mut ranks: Vec<Vec<u64>> = instance
        .leaves()
        .iter()
        .map(|&l| vec![0u64; instance.classes_of(l).len()])
        .collect();
    let mut clocks = vec![0f64; num_classes];
    for _ in 0..n {
        for (c, clock) in clocks.iter_mut().enumerate() {
            let u: f64 = rng.random();
            *clock = -(1.0 - u).ln() / instance.class(ClassId(c)).size as f64;
        }
        for (li, &leaf) in instance.leaves().iter().enumerate() {
            let slots = instance.classes_of(leaf);
            let mut best = 0usize;
            let mut best_clock = clocks[slots[0].0];
            for (slot, &class) in slots.iter().enumerate().skip(1) {
                if clocks[class.0] < best_clock {
                    best = slot;
                    best_clock = clocks[class.0];
                }
            }
            ranks[li][best] += 1;
        }
    }
    instance.leaves().iter().enumerate().all(|(li, &leaf)| {
        instance
            .classes_of(leaf)
            .iter()
            .enumerate()
            .all(|(slot, &class)| ranks[li][slot] <= instance.class(class).size)
    })
}

/// Priority-order selection. Requires every class to hold at least `n`
/// people, which rules out internal failures.
pub fn select_priority<R: Rng + ?Sized>(
    instance: &Instance,
    n: u64,
    rng: &mut R,
) -> Result<AssemblyAssignment, SelectionError> {
    for (c, class) in instance.classes().iter().enumerate() {
        if class.size < n {
            return Err(SelectionError::ClassSmallerThanAssembly {
                class: c,
                size: class.size,
                n,
            });
        }
    }
    let draw = attempt_priority_draw(instance, n, rng)
        .expect("draw cannot fail when every class holds at least n people");
    Ok(draw.assignment)
}

/// Reject-and-restart variant: rerun the whole draw whenever a rank
/// overflows its class, up to `max_attempts` times.
pub fn select_priority_with_restart<R: Rng + ?Sized>(
    instance: &Instance,
    n: u64,
    rng: &mut R,
    max_attempts: u64,
) -> Result<AssemblyAssignment, SelectionError> {
    assert!(max_attempts >= 1);
    for v in instance.nodes() {
        if instance.population(v) < n {
            return Err(SelectionError::PopulationTooSmall {
                node: instance.name(v).to_string(),
                population: instance.population(v),
                n,
            });
        }
    }
    let mut failures = 0u64;
    for _ in 0..max_attempts {
        match attempt_priority_draw(instance, n, rng) {
            Ok(draw) => return Ok(draw.assignment),
            Err(_) => failures += 1,
        }
    }
    Err(SelectionError::RestartsExhausted { attempts: max_attempts, failures })
}

/// Union bound on the probability that one draw fails: for each leaf and
/// each class signed up for it, a Chernoff term `(e*n/|N_leaf|)^{|C|}`,
/// summed and clipped to [0, 1].
pub fn failure_probability_bound(instance: &Instance, n: u64) -> f64 {
    let mut bound = 0f64;
    for &leaf in instance.leaves() {
        let population = instance.population(leaf) as f64;
        for &class in instance.classes_of(leaf) {
            // only classes signed up for this exact leaf can overflow here
            if !instance.class(class).leaves.contains(&leaf) {
                continue;
            }
            let size = instance.class(class).size;
            bound += (std::f64::consts::E * n as f64 / population).powf(size as f64);
        }
    }
    bound.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{NodeId, RawClass, RawInstance, RawNode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn two_class_node() -> (Instance, NodeId) {
        // a node whose population splits into classes of sizes 1 and 2
        let instance = RawInstance {
            nodes: vec![
                RawNode { id: "f".into() },
                RawNode { id: "x".into() },
                RawNode { id: "y".into() },
            ],
            edges: vec![("f".into(), "x".into()), ("f".into(), "y".into())],
            classes: vec![
                RawClass { leaves: vec!["x".into()], size: 1 },
                RawClass { leaves: vec!["y".into()], size: 2 },
            ],
        }
        .build()
        .unwrap();
        let f = instance.node_by_name("f").unwrap();
        (instance, f)
    }

    #[test]
    fn winner_class_frequencies_match_sizes() {
        let (instance, f) = two_class_node();
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let trials = 200_000u64;
        let mut class0 = 0u64;
        for _ in 0..trials {
            let assignment = select_priority(&instance, 1, &mut rng).unwrap();
            if assignment.assembly(f)[0].class == ClassId(0) {
                class0 += 1;
            }
        }
        let freq = class0 as f64 / trials as f64;
        let sigma = (1.0f64 / 3.0 * 2.0 / 3.0 / trials as f64).sqrt();
        assert!((freq - 1.0 / 3.0).abs() <= 4.0 * sigma, "freq {freq}");
    }

    #[test]
    fn inheritance_holds_on_every_draw() {
        let instance = crate::instance::generate_instance(4, 3, 99);
        let n = 2;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..2_000 {
            let assignment =
                select_priority_with_restart(&instance, n, &mut rng, 1_000).unwrap();
            for &f in instance.federations() {
                for member in assignment.assembly(f) {
                    let inherited = instance
                        .children(f)
                        .iter()
                        .any(|&c| assignment.assembly(c).contains(member));
                    assert!(inherited, "member not drawn from any child assembly");
                }
            }
            for v in instance.nodes() {
                assert_eq!(assignment.assembly(v).len() as u64, n);
            }
        }
    }

    #[test]
    fn child_equals_parent_with_population_share() {
        // disjoint children of sizes 30 and 70; with n = 1 the parent's
        // member comes from the size-30 child with probability 0.3
        let instance = RawInstance {
            nodes: vec![
                RawNode { id: "f".into() },
                RawNode { id: "a".into() },
                RawNode { id: "b".into() },
            ],
            edges: vec![("f".into(), "a".into()), ("f".into(), "b".into())],
            classes: vec![
                RawClass { leaves: vec!["a".into()], size: 30 },
                RawClass { leaves: vec!["b".into()], size: 70 },
            ],
        }
        .build()
        .unwrap();
        let a = instance.node_by_name("a").unwrap();
        let f = instance.node_by_name("f").unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let trials = 200_000u64;
        let mut same = 0u64;
        for _ in 0..trials {
            let assignment = select_priority(&instance, 1, &mut rng).unwrap();
            if assignment.assembly(f) == assignment.assembly(a) {
                same += 1;
            }
        }
        let freq = same as f64 / trials as f64;
        let sigma = (0.3f64 * 0.7 / trials as f64).sqrt();
        assert!((freq - 0.3).abs() <= 4.0 * sigma, "freq {freq}");
    }

    #[test]
    fn precondition_failure_points_to_restart_variant() {
        let (instance, _) = two_class_node();
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let err = select_priority(&instance, 2, &mut rng).unwrap_err();
        assert!(err.to_string().contains("restart"));
    }

    #[test]
    fn compliant_instances_never_restart() {
        let instance = RawInstance {
            nodes: vec![RawNode { id: "l".into() }],
            edges: vec![],
            classes: vec![RawClass { leaves: vec!["l".into()], size: 5 }],
        }
        .build()
        .unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        for _ in 0..1_000 {
            assert!(attempt_priority_draw(&instance, 5, &mut rng).is_ok());
        }
    }

    #[test]
    fn bound_evaluates_the_chernoff_term() {
        // leaf a holds 1000 people, 3 of whom also sign up for the huge
        // leaf b; with n = 5 the bound is dominated by (5e/1000)^3
        let instance = RawInstance {
            nodes: vec![RawNode { id: "a".into() }, RawNode { id: "b".into() }],
            edges: vec![],
            classes: vec![
                RawClass { leaves: vec!["a".into()], size: 997 },
                RawClass { leaves: vec!["a".into(), "b".into()], size: 3 },
                RawClass { leaves: vec!["b".into()], size: 1_000_000 },
            ],
        }
        .build()
        .unwrap();
        let bound = failure_probability_bound(&instance, 5);
        let small_term = (5.0 * std::f64::consts::E / 1000.0f64).powi(3);
        assert!((small_term - 2.51e-6).abs() < 0.02e-6, "term {small_term}");
        assert!((bound - small_term).abs() < 1e-10, "bound {bound}");
    }

    #[test]
    fn expected_ranks_match_class_shares() {
        // E[rank of class at node] = n * |C| / |N_v|
        let (instance, f) = two_class_node();
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let trials = 100_000u64;
        let n = 1u64;
        let mut total = [0u64; 2];
        for _ in 0..trials {
            let draw = attempt_priority_draw(&instance, n, &mut rng).unwrap();
            total[0] += draw.ranks[f.0][0];
            total[1] += draw.ranks[f.0][1];
        }
        let mean0 = total[0] as f64 / trials as f64;
        let target = n as f64 * 1.0 / 3.0;
        let sigma = (target * (1.0 - target) / trials as f64).sqrt();
        assert!((mean0 - target).abs() <= 4.0 * sigma, "mean {mean0}");
    }
}
