//! Concrete and canonical assembly assignments.

use super::{ClassId, Instance, Member, NodeId};
use crate::rational::{floor_u64, rat_u64};

/// One assembly per node, each of the target size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssemblyAssignment {
    pub n: u64,
    /// Members per node, indexed by `NodeId`.
    pub assemblies: Vec<Vec<Member>>,
}

impl AssemblyAssignment {
    pub fn assembly(&self, v: NodeId) -> &[Member] {
        &self.assemblies[v.0]
    }

    /// Number of members of `v`'s assembly that fall in class `c`.
    pub fn class_count(&self, v: NodeId, c: ClassId) -> u64 {
        self.assemblies[v.0].iter().filter(|m| m.class == c).count() as u64
    }

    /// Size of the intersection of two assemblies.
    pub fn overlap(&self, a: NodeId, b: NodeId) -> u64 {
        let smaller = &self.assemblies[a.0];
        let larger = &self.assemblies[b.0];
        smaller.iter().filter(|m| larger.contains(m)).count() as u64
    }
}

/// An assignment up to within-class symmetry: per-(node, class) seat counts.
///
/// Lifting to an [`AssemblyAssignment`] draws one uniform permutation per
/// class and fills each node's seats with the per-class prefix, so a
/// federation's prefix is contained in any child holding at least as many
/// seats of that class. Counts are stored aligned with
/// `Instance::classes_of(v)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalAssignment {
    pub n: u64,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CanonicalViolation {
    WrongAssemblySize { node: NodeId, total: u64 },
    SeatsExceedClass { node: NodeId, class: ClassId, seats: u64, size: u64 },
    PrefixInheritance { federation: NodeId, class: ClassId, seats: u64, max_child: u64 },
    OverlapFloor { federation: NodeId, child: NodeId, overlap: u64, floor: u64 },
}

impl CanonicalAssignment {
    pub fn zero(instance: &Instance, n: u64) -> Self {
        CanonicalAssignment {
            n,
            counts: instance.nodes().map(|v| vec![0; instance.classes_of(v).len()]).collect(),
        }
    }

    pub fn seats(&self, instance: &Instance, v: NodeId, c: ClassId) -> u64 {
        match instance.class_slot(v, c) {
            Some(slot) => self.counts[v.0][slot],
            None => 0,
        }
    }

    /// Intersection size of the lifted assemblies of `f` and `c`: per class,
    /// prefixes overlap in the shorter prefix.
    pub fn overlap(&self, instance: &Instance, f: NodeId, c: NodeId) -> u64 {
        instance
            .classes_of(f)
            .iter()
            .map(|&class| self.seats(instance, f, class).min(self.seats(instance, c, class)))
            .sum()
    }

    /// Check every ex post constraint a support column must satisfy.
    pub fn check(&self, instance: &Instance) -> Vec<CanonicalViolation> {
        let mut violations = Vec::new();
        for v in instance.nodes() {
            let total: u64 = self.counts[v.0].iter().sum();
            if total != self.n {
                violations.push(CanonicalViolation::WrongAssemblySize { node: v, total });
            }
            for (slot, &class) in instance.classes_of(v).iter().enumerate() {
                let seats = self.counts[v.0][slot];
                let size = instance.class(class).size;
                if seats > size {
                    violations.push(CanonicalViolation::SeatsExceedClass {
                        node: v,
                        class,
                        seats,
                        size,
                    });
                }
            }
        }
        for &f in instance.federations() {
            for (slot, &class) in instance.classes_of(f).iter().enumerate() {
                let seats = self.counts[f.0][slot];
                if seats == 0 {
                    continue;
                }
                let max_child = instance
                    .children(f)
                    .iter()
                    .map(|&c| self.seats(instance, c, class))
                    .max()
                    .unwrap_or(0);
                if seats > max_child {
                    violations.push(CanonicalViolation::PrefixInheritance {
                        federation: f,
                        class,
                        seats,
                        max_child,
                    });
                }
            }
            for &c in instance.children(f) {
                let quota = instance.quota(f, c).expect("child quota");
                let floor = floor_u64(&(rat_u64(self.n) * quota));
                let overlap = self.overlap(instance, f, c);
                if overlap < floor {
                    violations.push(CanonicalViolation::OverlapFloor {
                        federation: f,
                        child: c,
                        overlap,
                        floor,
                    });
                }
            }
        }
        violations
    }

    /// Class counts of a concrete assignment.
    pub fn project(instance: &Instance, assignment: &AssemblyAssignment) -> Self {
        let counts = instance
            .nodes()
            .map(|v| {
                instance
                    .classes_of(v)
                    .iter()
                    .map(|&c| assignment.class_count(v, c))
                    .collect()
            })
            .collect();
        CanonicalAssignment { n: assignment.n, counts }
    }
}
