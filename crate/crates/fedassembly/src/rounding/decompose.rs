//! Flow-cycle decomposition behind the rounding API.
//!
//! The two constraint groups become two forests whose nodes are constraint
//! sets, with a virtual root each. Coordinate `i` is an edge between its
//! smallest containing set in each group; each set has an edge to its parent
//! carrying the set's marginal sum; a final edge ties the two roots. Flow
//! conservation holds at every vertex, so the subgraph of
//! not-yet-integral edges never has a degree-one vertex and always contains a
//! cycle while nonempty.
//!
//! Values are scaled by the common denominator of the marginals so that all
//! mass shifts happen in integer arithmetic: u128 when it fits, BigUint
//! otherwise. Branch probabilities are therefore exact, and the
//! decomposition order is a deterministic function of the current values.

use crate::rational::Rational;
use crate::sampling::sample_below;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use std::collections::BTreeMap;

use super::{ConstraintSet, Group};

#[derive(Clone, Debug)]
pub(crate) struct Prepared {
    num_coords: usize,
    /// Canonical flow direction (from, to) per edge; coordinate edges come
    /// first, so edge id < num_coords identifies an output coordinate.
    edges: Vec<(usize, usize)>,
    /// Edge ids incident to each vertex, ascending.
    adjacency: Vec<Vec<usize>>,
    denominator: BigUint,
    initial: Vec<BigUint>,
    small: Option<SmallMirror>,
}

#[derive(Clone, Debug)]
struct SmallMirror {
    denominator: u128,
    initial: Vec<u128>,
}

/// Union-find over coordinates; sets with two or more indices merge their
/// members, everything else stays alone. Coordinates in different components
/// share no constraint, so their roundings must come out independent: each
/// component gets its own pair of virtual roots and its own slack edge, and
/// no cycle can cross components.
fn coordinate_components(num_coords: usize, sets: &[ConstraintSet]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..num_coords).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for set in sets {
        let mut iter = set.indices.iter();
        if let Some(&first) = iter.next() {
            for &other in iter {
                let a = find(&mut parent, first);
                let b = find(&mut parent, other);
                parent[a] = b;
            }
        }
    }
    // relabel roots as dense component ids, ordered by smallest member
    let mut component = vec![usize::MAX; num_coords];
    let mut next = 0usize;
    for i in 0..num_coords {
        let root = find(&mut parent, i);
        if component[root] == usize::MAX {
            component[root] = next;
            next += 1;
        }
        component[i] = component[root];
    }
    component
}

struct ForestLayout {
    /// vertex id per set (sets listed in `set_ids` order)
    set_vertex: Vec<usize>,
    /// parent vertex per set (another set's vertex or the component root)
    parent_vertex: Vec<usize>,
    /// hosting vertex per coordinate (smallest containing set or the root)
    host: Vec<usize>,
    /// indices into the normalized set list, in layout order
    set_ids: Vec<usize>,
}

fn layout_group(
    sets: &[ConstraintSet],
    group: Group,
    num_coords: usize,
    component: &[usize],
    roots: &[usize],
    next_vertex: &mut usize,
) -> ForestLayout {
    let mut set_ids: Vec<usize> = sets
        .iter()
        .enumerate()
        .filter(|(_, s)| s.group == group)
        .map(|(i, _)| i)
        .collect();
    // smallest sets first so "first superset" is the minimal one
    set_ids.sort_by_key(|&i| (sets[i].indices.len(), i));
    let set_vertex: Vec<usize> = set_ids
        .iter()
        .map(|_| {
            let v = *next_vertex;
            *next_vertex += 1;
            v
        })
        .collect();
    let set_root = |sid: usize| {
        let &first = sets[sid].indices.iter().next().expect("nonempty set");
        roots[component[first]]
    };
    let parent_vertex: Vec<usize> = set_ids
        .iter()
        .enumerate()
        .map(|(pos, &sid)| {
            for (ppos, &pid) in set_ids.iter().enumerate().skip(pos + 1) {
                if sets[sid].indices.len() < sets[pid].indices.len()
                    && sets[sid].indices.is_subset(&sets[pid].indices)
                {
                    return set_vertex[ppos];
                }
            }
            set_root(sid)
        })
        .collect();
    let host: Vec<usize> = (0..num_coords)
        .map(|i| {
            set_ids
                .iter()
                .position(|&sid| sets[sid].indices.contains(&i))
                .map(|pos| set_vertex[pos])
                .unwrap_or(roots[component[i]])
        })
        .collect();
    ForestLayout { set_vertex, parent_vertex, host, set_ids }
}

impl Prepared {
    pub(crate) fn build(marginals: &[Rational], sets: &[ConstraintSet]) -> Prepared {
        let num_coords = marginals.len();
        let component = coordinate_components(num_coords, sets);
        let num_components = component.iter().copied().max().map_or(0, |m| m + 1);
        let mut next_vertex = 0usize;
        let mut roots_one = Vec::with_capacity(num_components);
        let mut roots_two = Vec::with_capacity(num_components);
        for _ in 0..num_components {
            roots_one.push(next_vertex);
            roots_two.push(next_vertex + 1);
            next_vertex += 2;
        }
        let one =
            layout_group(sets, Group::One, num_coords, &component, &roots_one, &mut next_vertex);
        let two =
            layout_group(sets, Group::Two, num_coords, &component, &roots_two, &mut next_vertex);

        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut values: Vec<Rational> = Vec::new();
        // coordinate edges: group-one host -> group-two host
        for (i, marginal) in marginals.iter().enumerate() {
            edges.push((one.host[i], two.host[i]));
            values.push(marginal.clone());
        }
        // group-one tree edges carry flow parent -> set
        for (pos, &sid) in one.set_ids.iter().enumerate() {
            edges.push((one.parent_vertex[pos], one.set_vertex[pos]));
            values.push(sets[sid].indices.iter().map(|&i| marginals[i].clone()).sum());
        }
        // group-two tree edges carry flow set -> parent
        for (pos, &sid) in two.set_ids.iter().enumerate() {
            edges.push((two.set_vertex[pos], two.parent_vertex[pos]));
            values.push(sets[sid].indices.iter().map(|&i| marginals[i].clone()).sum());
        }
        // per component, its total mass returns from root two to root one
        for comp in 0..num_components {
            edges.push((roots_two[comp], roots_one[comp]));
            values.push(
                marginals
                    .iter()
                    .zip(&component)
                    .filter(|(_, &c)| c == comp)
                    .map(|(m, _)| m.clone())
                    .sum(),
            );
        }

        let mut adjacency = vec![Vec::new(); next_vertex];
        for (eid, &(a, b)) in edges.iter().enumerate() {
            adjacency[a].push(eid);
            if b != a {
                adjacency[b].push(eid);
            }
        }

        let mut denominator = BigUint::one();
        for v in &values {
            denominator = denominator.lcm(&v.denom().to_biguint().expect("positive denominator"));
        }
        let denom_int = BigInt::from(denominator.clone());
        let initial: Vec<BigUint> = values
            .iter()
            .map(|v| {
                let scaled = v.numer() * (&denom_int / v.denom());
                scaled.to_biguint().expect("nonnegative value")
            })
            .collect();

        let small = {
            let fits = denominator.to_u128().filter(|&d| d < u128::MAX / 8).and_then(|d| {
                let max = initial.iter().max().cloned().unwrap_or_default();
                max.to_u128().filter(|&m| m < u128::MAX / 8).map(|_| d)
            });
            fits.map(|denominator| SmallMirror {
                denominator,
                initial: initial.iter().map(|v| v.to_u128().unwrap()).collect(),
            })
        };

        Prepared { num_coords, edges, adjacency, denominator, initial, small }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let mut scratch = WalkScratch::new(self.edges.len(), self.adjacency.len());
        if let Some(small) = &self.small {
            let mut values = small.initial.clone();
            loop {
                match find_branch(self, &values, &small.denominator, &mut scratch) {
                    None => {
                        return values[..self.num_coords]
                            .iter()
                            .map(|&v| (v / small.denominator) as u64)
                            .collect();
                    }
                    Some((eps_plus, eps_minus)) => {
                        let go_plus = rng.random_range(0..eps_plus + eps_minus) < eps_minus;
                        let eps = if go_plus { eps_plus } else { eps_minus };
                        apply(&mut values, &scratch.cycle, &eps, go_plus);
                    }
                }
            }
        } else {
            let mut values = self.initial.clone();
            loop {
                match find_branch(self, &values, &self.denominator, &mut scratch) {
                    None => {
                        return values[..self.num_coords]
                            .iter()
                            .map(|v| (v / &self.denominator).to_u64().expect("fits u64"))
                            .collect();
                    }
                    Some((eps_plus, eps_minus)) => {
                        let total = &eps_plus + &eps_minus;
                        let go_plus = sample_below(&total, rng) < eps_minus;
                        let eps = if go_plus { eps_plus } else { eps_minus };
                        apply(&mut values, &scratch.cycle, &eps, go_plus);
                    }
                }
            }
        }
    }

    /// Breadth-first symbolic exploration of the decomposition, merging
    /// identical intermediate states.
    pub(crate) fn enumerate(&self) -> BTreeMap<Vec<u64>, Rational> {
        let mut scratch = WalkScratch::new(self.edges.len(), self.adjacency.len());
        let mut frontier: BTreeMap<Vec<BigUint>, Rational> = BTreeMap::new();
        frontier.insert(self.initial.clone(), Rational::one());
        let mut done: BTreeMap<Vec<u64>, Rational> = BTreeMap::new();
        while !frontier.is_empty() {
            let mut next: BTreeMap<Vec<BigUint>, Rational> = BTreeMap::new();
            for (values, prob) in frontier {
                match find_branch(self, &values, &self.denominator, &mut scratch) {
                    None => {
                        let outcome: Vec<u64> = values[..self.num_coords]
                            .iter()
                            .map(|v| (v / &self.denominator).to_u64().expect("fits u64"))
                            .collect();
                        *done.entry(outcome).or_insert_with(Rational::zero) += prob;
                    }
                    Some((eps_plus, eps_minus)) => {
                        let total =
                            Rational::from_integer(BigInt::from(&eps_plus + &eps_minus));
                        let p_plus =
                            Rational::from_integer(BigInt::from(eps_minus.clone()))
                                / total.clone();
                        let p_minus =
                            Rational::from_integer(BigInt::from(eps_plus.clone())) / total;
                        let mut plus_values = values.clone();
                        apply(&mut plus_values, &scratch.cycle, &eps_plus, true);
                        *next.entry(plus_values).or_insert_with(Rational::zero) +=
                            &prob * p_plus;
                        let mut minus_values = values;
                        apply(&mut minus_values, &scratch.cycle, &eps_minus, false);
                        *next.entry(minus_values).or_insert_with(Rational::zero) +=
                            &prob * p_minus;
                    }
                }
            }
            frontier = next;
        }
        done
    }

}

/// Arithmetic shared by the u128 fast path and the BigUint fallback.
trait Mass: Clone + Ord {
    fn modulo(&self, d: &Self) -> Self;
    fn is_zero_mass(&self) -> bool;
    fn add_assign_mass(&mut self, other: &Self);
    fn sub_assign_mass(&mut self, other: &Self);
    fn sub_mass(a: &Self, b: &Self) -> Self;
}

impl Mass for u128 {
    fn modulo(&self, d: &Self) -> Self {
        self % d
    }
    fn is_zero_mass(&self) -> bool {
        *self == 0
    }
    fn add_assign_mass(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign_mass(&mut self, other: &Self) {
        *self -= other;
    }
    fn sub_mass(a: &Self, b: &Self) -> Self {
        a - b
    }
}

impl Mass for BigUint {
    fn modulo(&self, d: &Self) -> Self {
        self % d
    }
    fn is_zero_mass(&self) -> bool {
        self.is_zero()
    }
    fn add_assign_mass(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign_mass(&mut self, other: &Self) {
        *self -= other;
    }
    fn sub_mass(a: &Self, b: &Self) -> Self {
        a - b
    }
}

/// Reusable buffers for the cycle walk; one per sampling session.
struct WalkScratch {
    fractional: Vec<bool>,
    /// walk position per vertex, valid when stamped with the current epoch
    position: Vec<usize>,
    stamp: Vec<u32>,
    epoch: u32,
    path_vertices: Vec<usize>,
    path_edges: Vec<usize>,
    /// (edge id, true when the traversal runs along the canonical direction)
    cycle: Vec<(usize, bool)>,
}

impl WalkScratch {
    fn new(num_edges: usize, num_vertices: usize) -> WalkScratch {
        WalkScratch {
            fractional: vec![false; num_edges],
            position: vec![0; num_vertices],
            stamp: vec![0; num_vertices],
            epoch: 0,
            path_vertices: Vec::with_capacity(num_vertices),
            path_edges: Vec::with_capacity(num_vertices),
            cycle: Vec::with_capacity(num_vertices),
        }
    }
}

/// Locate a cycle of fractional edges (left in `scratch.cycle`) and the
/// largest mass shift in each rotation direction. Returns None when every
/// edge is integral.
fn find_branch<M: Mass>(
    prep: &Prepared,
    values: &[M],
    denom: &M,
    scratch: &mut WalkScratch,
) -> Option<(M, M)> {
    let mut start_edge = None;
    for (e, v) in values.iter().enumerate() {
        let fractional = !v.modulo(denom).is_zero_mass();
        scratch.fractional[e] = fractional;
        if fractional && start_edge.is_none() {
            start_edge = Some(e);
        }
    }
    let start_edge = start_edge?;

    // walk the fractional subgraph, always leaving by the lowest-id unused
    // fractional edge; conservation guarantees degree >= 2 at every touched
    // vertex, so the walk closes a cycle within |V| steps
    scratch.epoch += 1;
    scratch.path_vertices.clear();
    scratch.path_edges.clear();
    let start_vertex = prep.edges[start_edge].0;
    scratch.path_vertices.push(start_vertex);
    scratch.position[start_vertex] = 0;
    scratch.stamp[start_vertex] = scratch.epoch;
    let mut current = start_vertex;
    let mut arrived_by = usize::MAX;
    loop {
        let next_edge = prep.adjacency[current]
            .iter()
            .copied()
            .find(|&e| scratch.fractional[e] && e != arrived_by)
            .expect("fractional subgraph has no degree-one vertex");
        let (a, b) = prep.edges[next_edge];
        let next_vertex = if a == current { b } else { a };
        scratch.path_edges.push(next_edge);
        if scratch.stamp[next_vertex] == scratch.epoch {
            // cycle closes: edges from the first visit onward
            let first = scratch.position[next_vertex];
            scratch.cycle.clear();
            let mut eps_plus: Option<M> = None;
            let mut eps_minus: Option<M> = None;
            for (step, &e) in scratch.path_edges[first..].iter().enumerate() {
                let from = scratch.path_vertices[first + step];
                let along = prep.edges[e].0 == from;
                scratch.cycle.push((e, along));
                // a "plus" rotation pushes mass along the traversal: edges
                // traversed with their flow direction rise toward the next
                // multiple of the denominator, edges against it fall
                let rem = values[e].modulo(denom);
                let (room_plus, room_minus) = if along {
                    (M::sub_mass(denom, &rem), rem)
                } else {
                    (rem.clone(), M::sub_mass(denom, &rem))
                };
                eps_plus = Some(match eps_plus {
                    None => room_plus,
                    Some(cur) => cur.min(room_plus),
                });
                eps_minus = Some(match eps_minus {
                    None => room_minus,
                    Some(cur) => cur.min(room_minus),
                });
            }
            return Some((
                eps_plus.expect("nonempty cycle"),
                eps_minus.expect("nonempty cycle"),
            ));
        }
        scratch.stamp[next_vertex] = scratch.epoch;
        scratch.position[next_vertex] = scratch.path_vertices.len();
        scratch.path_vertices.push(next_vertex);
        current = next_vertex;
        arrived_by = next_edge;
    }
}

fn apply<M: Mass>(values: &mut [M], cycle: &[(usize, bool)], eps: &M, plus: bool) {
    for &(e, along) in cycle {
        let increase = along == plus;
        if increase {
            values[e].add_assign_mass(eps);
        } else {
            values[e].sub_assign_mass(eps);
        }
    }
}

/// Sum of the probabilities in an exact distribution.
pub fn total_probability(dist: &BTreeMap<Vec<u64>, Rational>) -> Rational {
    dist.values().cloned().sum()
}
