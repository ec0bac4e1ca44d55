//! Top-down selection for laminar instances.
//!
//! Leaves draw uniform subsets of their population. Each federation, taken
//! bottom-up, rounds its children's fractional seat shares `n * q` to an
//! integral seat vector with exact expectations and the quota floors as hard
//! lower bounds, then fills each child's seats uniformly from that child's
//! already-selected assembly.

use super::SelectionError;
use crate::instance::{AssemblyAssignment, ClassId, Classification, Instance, Member, NodeId};
use crate::rational::{floor_u64, rat_u64};
use crate::rounding::{fixed_sum_problem, RoundingProblem};
use crate::sampling::{permutation_prefix, uniform_subset_of};
use rand::Rng;

/// A laminar instance prepared for repeated selection: the per-federation
/// seat roundings are fixed by the quotas, so they are built once.
pub struct LaminarSelector<'a> {
    instance: &'a Instance,
    n: u64,
    /// Per leaf: its single class.
    leaf_class: Vec<Option<ClassId>>,
    /// Per federation, bottom-up: children and the seat rounding.
    federations: Vec<(NodeId, Vec<NodeId>, RoundingProblem)>,
}

impl<'a> LaminarSelector<'a> {
    pub fn new(instance: &'a Instance, n: u64) -> Result<Self, SelectionError> {
        match instance.classify() {
            Classification::Laminar => {}
            other => return Err(SelectionError::NotLaminar(other.kind())),
        }
        for v in instance.nodes() {
            if instance.population(v) < n {
                return Err(SelectionError::PopulationTooSmall {
                    node: instance.name(v).to_string(),
                    population: instance.population(v),
                    n,
                });
            }
        }
        let mut leaf_class = vec![None; instance.node_count()];
        for &leaf in instance.leaves() {
            // laminar leaves hold exactly one class
            leaf_class[leaf.0] = Some(instance.classes_of(leaf)[0]);
        }
        let mut federations = Vec::new();
        for &v in instance.topo_bottom_up() {
            if instance.is_leaf(v) {
                continue;
            }
            let quotas = instance.quotas(v).expect("federation quotas");
            let marginals: Vec<_> = quotas.iter().map(|(_, q)| rat_u64(n) * q).collect();
            let floors: Vec<u64> = marginals.iter().map(floor_u64).collect();
            let problem = fixed_sum_problem(&marginals, &floors)?;
            let children = quotas.into_iter().map(|(c, _)| c).collect();
            federations.push((v, children, problem));
        }
        Ok(LaminarSelector { instance, n, leaf_class, federations })
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> AssemblyAssignment {
        let mut assemblies: Vec<Vec<Member>> = vec![Vec::new(); self.instance.node_count()];
        for &leaf in self.instance.leaves() {
            let class = self.leaf_class[leaf.0].expect("leaf class");
            let size = self.instance.class(class).size;
            assemblies[leaf.0] = permutation_prefix(size, self.n, rng)
                .into_iter()
                .map(|index| Member { class, index })
                .collect();
        }
        for (v, children, problem) in &self.federations {
            let seats = problem.round(rng);
            let mut assembly = Vec::with_capacity(self.n as usize);
            for (child, &s) in children.iter().zip(&seats) {
                assembly.extend(uniform_subset_of(&assemblies[child.0], s, rng));
            }
            assemblies[v.0] = assembly;
        }
        AssemblyAssignment { n: self.n, assemblies }
    }
}

pub fn select_laminar<R: Rng + ?Sized>(
    instance: &Instance,
    n: u64,
    rng: &mut R,
) -> Result<AssemblyAssignment, SelectionError> {
    Ok(LaminarSelector::new(instance, n)?.select(rng))
}
