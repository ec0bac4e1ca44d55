//! Selection for semi-laminar (region x topic) instances.
//!
//! Every (region, topic) assembly is split into a selectable part, whose
//! size is an unbiased rounding of the topic's weighted share, and an
//! unselectable remainder. Selectable parts of one region are pairwise
//! disjoint across topics, so the per-region aggregator can draw its members
//! from them without ever picking the same person twice through two topics.
//! People signed up for many topics are proportionally less likely to be
//! selectable in each one, which keeps their aggregate chance at the
//! aggregator equal to everyone else's.
//!
//! All roundings are bihierarchy roundings, so floors, ceilings, and exact
//! expectations hold by construction; the feasibility of every subsequent
//! subset draw is guaranteed by the regularity conditions checked up front.
//! The drawn selectable sizes take at most two values per (region, topic),
//! so [`SemiLaminarSelector`] precomputes one prepared rounding problem per
//! corner of that hypercube and repeated draws never rebuild them.

use super::SelectionError;
use crate::instance::{
    AssemblyAssignment, Classification, ClassId, Instance, Member, NodeId, SemiLaminarStructure,
};
use crate::rational::{ceil_u64, floor_u64, is_integer, rat_u64, to_f64, Rational};
use crate::rounding::{fixed_sum_problem, ConstraintSet, Group, RoundingProblem};
use crate::sampling::{
    bernoulli_exact, permutation_prefix, uniform_subset_excluding, uniform_subset_of,
};
use num_traits::Zero;
use rand::Rng;
use std::collections::HashMap;

/// One equivalence class of a leaf region: which topics it signs up for.
#[derive(Clone, Debug)]
pub struct LeafClass {
    pub class: ClassId,
    /// Ascending topic indices, nonempty.
    pub topics: Vec<usize>,
    pub size: u64,
}

/// Selectable/unselectable split of one (region, topic) assembly.
#[derive(Clone, Debug, Default)]
pub struct TopicSets {
    pub selectable: Vec<Member>,
    pub unselectable: Vec<Member>,
}

/// Child data consumed when an internal region samples one topic.
#[derive(Clone, Debug)]
pub struct ChildTopicInput<'a> {
    pub selectable: &'a [Member],
    pub unselectable: &'a [Member],
    /// Weighted population of the child's topic node at its aggregator.
    pub weight: Rational,
    pub population: u64,
}

/// Outcome of checking the structural conditions for this algorithm.
#[derive(Clone, Debug)]
pub struct RegularityReport {
    /// Largest eps with eps*|N| <= w <= (1-eps)*|N| at every topic node.
    pub epsilon: Rational,
    /// Largest delta with |N_child|/|N_parent| <= 1-delta on every edge.
    pub delta: Rational,
    pub satisfied: bool,
    pub reasons: Vec<String>,
}

impl RegularityReport {
    /// Smallest assembly size the margin conditions admit, if any.
    pub fn required_n(&self) -> Option<u64> {
        if self.epsilon.is_zero() || self.delta.is_zero() {
            return None;
        }
        Some(ceil_u64(&(rat_u64(2) / (&self.epsilon * &self.delta))))
    }
}

fn weight_of(instance: &Instance, node: NodeId) -> Rational {
    instance
        .classes_of(node)
        .iter()
        .map(|&c| {
            let class = instance.class(c);
            rat_u64(class.size) / rat_u64(class.leaves.len() as u64)
        })
        .sum()
}

/// Check the margin conditions: weighted shares bounded away from 0 and 1 by
/// eps, child populations bounded away from their parents by delta,
/// n >= 2/(eps*delta), populations at least 4n, and classes of size >= 2.
pub fn check_regularity(instance: &Instance, n: u64) -> Result<RegularityReport, SelectionError> {
    let structure = match instance.classify() {
        Classification::SemiLaminar(s) => s,
        other => return Err(SelectionError::NotSemiLaminar(other.kind())),
    };
    let mut reasons = Vec::new();
    let one = Rational::from_integer(1.into());
    let mut epsilon = crate::rational::rat(1, 2);
    for row in &structure.topic_node {
        for &node in row {
            let lambda = weight_of(instance, node) / rat_u64(instance.population(node));
            epsilon = epsilon.min(lambda.clone()).min(&one - &lambda);
        }
    }
    if epsilon.is_zero() {
        reasons.push("a topic node's weighted share sits at 0 or 1".to_string());
    }
    let mut delta = one.clone();
    for &f in instance.federations() {
        for &c in instance.children(f) {
            let ratio = rat_u64(instance.population(c)) / rat_u64(instance.population(f));
            delta = delta.min(&one - &ratio);
        }
    }
    if delta.is_zero() {
        reasons.push("a child population equals its parent's".to_string());
    }
    if !epsilon.is_zero() && !delta.is_zero() {
        let bound = rat_u64(2) / (&epsilon * &delta);
        if rat_u64(n) < bound {
            reasons.push(format!(
                "n = {n} is below 2/(eps*delta) = {:.2}",
                to_f64(&bound)
            ));
        }
    }
    for v in instance.nodes() {
        if instance.population(v) < 4 * n {
            reasons.push(format!(
                "population of {:?} is {} < 4n = {}",
                instance.name(v),
                instance.population(v),
                4 * n
            ));
        }
    }
    for (i, class) in instance.classes().iter().enumerate() {
        if class.size < 2 {
            reasons.push(format!("class {i} has fewer than 2 members"));
        }
    }
    Ok(RegularityReport { epsilon, delta, satisfied: reasons.is_empty(), reasons })
}

/// Prepared roundings for one leaf region under one fixed vector of
/// selectable sizes. Build once, sample many times.
pub struct LeafRegionSampler {
    classes: Vec<LeafClass>,
    s: Vec<u64>,
    /// (class position, topic) pairs behind the joint selectable rounding.
    coords: Vec<(usize, usize)>,
    alpha_problem: RoundingProblem,
    /// Per topic: classes involved and the unselectable seat rounding; None
    /// when that topic has no unselectable mass.
    beta: Vec<Option<(Vec<usize>, RoundingProblem)>>,
}

impl LeafRegionSampler {
    pub fn new(classes: &[LeafClass], s: &[u64], n: u64) -> Result<LeafRegionSampler, SelectionError> {
        let num_topics = s.len();
        let mut weight = vec![Rational::zero(); num_topics];
        let mut population = vec![0u64; num_topics];
        for class in classes {
            debug_assert!(!class.topics.is_empty());
            for &t in &class.topics {
                weight[t] += rat_u64(class.size) / rat_u64(class.topics.len() as u64);
                population[t] += class.size;
            }
        }
        for (t, &s_t) in s.iter().enumerate() {
            if s_t > 0 && weight[t].is_zero() {
                return Err(SelectionError::SamplingInfeasible {
                    context: format!("selectable seats for topic {t} with zero weight"),
                    needed: s_t,
                    available: 0,
                });
            }
            if s_t > n {
                return Err(SelectionError::SamplingInfeasible {
                    context: format!("topic {t} requests more selectable seats than n"),
                    needed: s_t,
                    available: n,
                });
            }
        }

        // joint rounding of all selectable marginals: per-topic sums are
        // fixed at s_t, per-class sums stay below their ceilings
        let mut coords: Vec<(usize, usize)> = Vec::new();
        for (j, class) in classes.iter().enumerate() {
            for &t in &class.topics {
                coords.push((j, t));
            }
        }
        let marginals: Vec<Rational> = coords
            .iter()
            .map(|&(j, t)| {
                if weight[t].is_zero() {
                    Rational::zero()
                } else {
                    rat_u64(classes[j].size) / rat_u64(classes[j].topics.len() as u64)
                        / weight[t].clone()
                        * rat_u64(s[t])
                }
            })
            .collect();
        let mut sets = Vec::new();
        for t in 0..num_topics {
            sets.push(ConstraintSet::both(
                coords.iter().enumerate().filter(|(_, &(_, ct))| ct == t).map(|(i, _)| i),
                Group::One,
            ));
        }
        for j in 0..classes.len() {
            sets.push(ConstraintSet::ceil_only(
                coords.iter().enumerate().filter(|(_, &(cj, _))| cj == j).map(|(i, _)| i),
                Group::Two,
            ));
        }
        let alpha_problem = RoundingProblem::new(marginals, sets)?;

        let mut beta = Vec::with_capacity(num_topics);
        for t in 0..num_topics {
            let uns_seats = n - s[t];
            let uns_mass = rat_u64(population[t]) - weight[t].clone();
            if uns_mass.is_zero() {
                if uns_seats > 0 {
                    return Err(SelectionError::SamplingInfeasible {
                        context: format!("unselectable seats for topic {t} with zero mass"),
                        needed: uns_seats,
                        available: 0,
                    });
                }
                beta.push(None);
                continue;
            }
            let members: Vec<usize> = classes
                .iter()
                .enumerate()
                .filter(|(_, c)| c.topics.contains(&t))
                .map(|(j, _)| j)
                .collect();
            let q: Vec<Rational> = members
                .iter()
                .map(|&j| {
                    let share = rat_u64(classes[j].size)
                        * (Rational::from_integer(1.into())
                            - Rational::new(1.into(), (classes[j].topics.len() as i64).into()));
                    share / uns_mass.clone() * rat_u64(uns_seats)
                })
                .collect();
            let problem = fixed_sum_problem(&q, &vec![0; q.len()])?;
            beta.push(Some((members, problem)));
        }
        Ok(LeafRegionSampler {
            classes: classes.to_vec(),
            s: s.to_vec(),
            coords,
            alpha_problem,
            beta,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<TopicSets>, SelectionError> {
        let classes = &self.classes;
        let num_topics = self.s.len();
        let alpha = self.alpha_problem.round(rng);
        let mut out: Vec<TopicSets> = (0..num_topics).map(|_| TopicSets::default()).collect();

        // per class: one permutation, consecutive disjoint blocks per topic
        let mut blocks: Vec<Vec<Vec<u64>>> = Vec::with_capacity(classes.len());
        for (j, class) in classes.iter().enumerate() {
            let per_topic: Vec<u64> = class
                .topics
                .iter()
                .map(|&t| {
                    self.coords
                        .iter()
                        .zip(&alpha)
                        .find(|(&(cj, ct), _)| cj == j && ct == t)
                        .map(|(_, &a)| a)
                        .unwrap_or(0)
                })
                .collect();
            let total: u64 = per_topic.iter().sum();
            if total > class.size {
                return Err(SelectionError::SamplingInfeasible {
                    context: format!("selectable blocks of class {}", class.class.0),
                    needed: total,
                    available: class.size,
                });
            }
            let prefix = permutation_prefix(class.size, total, rng);
            let mut offset = 0usize;
            let mut class_blocks = Vec::with_capacity(class.topics.len());
            for (&t, &a) in class.topics.iter().zip(&per_topic) {
                let block: Vec<u64> = prefix[offset..offset + a as usize].to_vec();
                offset += a as usize;
                out[t].selectable.extend(
                    block.iter().map(|&index| Member { class: class.class, index }),
                );
                class_blocks.push(block);
            }
            blocks.push(class_blocks);
        }

        // unselectable seats avoid only their own topic's block
        for (t, topic_sets) in out.iter_mut().enumerate() {
            let Some((members, problem)) = &self.beta[t] else { continue };
            let beta = problem.round(rng);
            for (&j, &b) in members.iter().zip(&beta) {
                let topic_pos = classes[j].topics.iter().position(|&ct| ct == t).unwrap();
                let own_block = &blocks[j][topic_pos];
                let available = classes[j].size - own_block.len() as u64;
                if b > available {
                    return Err(SelectionError::SamplingInfeasible {
                        context: format!("unselectable draw from class {}", classes[j].class.0),
                        needed: b,
                        available,
                    });
                }
                let picks = uniform_subset_excluding(classes[j].size, own_block, b, rng);
                topic_sets.unselectable.extend(
                    picks.into_iter().map(|index| Member { class: classes[j].class, index }),
                );
            }
        }
        Ok(out)
    }
}

/// Split one leaf region into selectable/unselectable sets per topic, given
/// the already-drawn selectable sizes `s`.
///
/// Selectable seats for topic `t` go to class `C` with marginal
/// `(|C|/|topics|) / w_t * s_t`; within a class the topics' blocks are
/// disjoint segments of one uniform permutation. Unselectable seats use the
/// complementary weights and may only avoid their own topic's block.
pub fn sample_leaves<R: Rng + ?Sized>(
    classes: &[LeafClass],
    s: &[u64],
    n: u64,
    rng: &mut R,
) -> Result<Vec<TopicSets>, SelectionError> {
    LeafRegionSampler::new(classes, s, n)?.sample(rng)
}

/// Prepared joint rounding for one internal (region, topic) node under one
/// fixed selectable size.
struct ChildSampler {
    s: u64,
    n: u64,
    problem: RoundingProblem,
}

impl ChildSampler {
    fn new(
        s: u64,
        n: u64,
        children: &[(Rational, u64)],
    ) -> Result<ChildSampler, SelectionError> {
        let sel_mass: Rational = children.iter().map(|(w, _)| w.clone()).sum();
        let uns_mass: Rational =
            children.iter().map(|(w, p)| rat_u64(*p) - w.clone()).sum();
        if sel_mass.is_zero() && s > 0 {
            return Err(SelectionError::SamplingInfeasible {
                context: "selectable mass of children".into(),
                needed: s,
                available: 0,
            });
        }
        if uns_mass.is_zero() && n - s > 0 {
            return Err(SelectionError::SamplingInfeasible {
                context: "unselectable mass of children".into(),
                needed: n - s,
                available: 0,
            });
        }
        let mut marginals = Vec::with_capacity(2 * children.len());
        for (weight, population) in children {
            let x_sel = if sel_mass.is_zero() {
                Rational::zero()
            } else {
                rat_u64(s) * weight.clone() / sel_mass.clone()
            };
            let x_uns = if uns_mass.is_zero() {
                Rational::zero()
            } else {
                rat_u64(n - s) * (rat_u64(*population) - weight.clone()) / uns_mass.clone()
            };
            marginals.push(x_sel);
            marginals.push(x_uns);
        }
        let mut sets = Vec::new();
        for c in 0..children.len() {
            // joint floor per child carries the ex post guarantee
            sets.push(ConstraintSet::floor_only([2 * c, 2 * c + 1], Group::One));
        }
        sets.push(ConstraintSet::both((0..children.len()).map(|c| 2 * c), Group::Two));
        sets.push(ConstraintSet::both((0..children.len()).map(|c| 2 * c + 1), Group::Two));
        Ok(ChildSampler { s, n, problem: RoundingProblem::new(marginals, sets)? })
    }

    fn sample<R: Rng + ?Sized>(
        &self,
        children: &[ChildTopicInput<'_>],
        rng: &mut R,
    ) -> Result<TopicSets, SelectionError> {
        let gamma = self.problem.round(rng);
        let mut out = TopicSets {
            selectable: Vec::with_capacity(self.s as usize),
            unselectable: Vec::with_capacity((self.n - self.s) as usize),
        };
        for (c, child) in children.iter().enumerate() {
            let (take_sel, take_uns) = (gamma[2 * c], gamma[2 * c + 1]);
            if take_sel > child.selectable.len() as u64 {
                return Err(SelectionError::SamplingInfeasible {
                    context: format!("selectable members of child {c}"),
                    needed: take_sel,
                    available: child.selectable.len() as u64,
                });
            }
            if take_uns > child.unselectable.len() as u64 {
                return Err(SelectionError::SamplingInfeasible {
                    context: format!("unselectable members of child {c}"),
                    needed: take_uns,
                    available: child.unselectable.len() as u64,
                });
            }
            out.selectable.extend(uniform_subset_of(child.selectable, take_sel, rng));
            out.unselectable.extend(uniform_subset_of(child.unselectable, take_uns, rng));
        }
        Ok(out)
    }
}

/// Fill one internal (region, topic) node from its children's splits.
///
/// Selectable and unselectable counts are rounded jointly: the selectable
/// counts sum to `s`, the unselectable ones to `n - s`, and each child's
/// pair is floored at the floor of its combined share, which is what the ex
/// post guarantee up to one seat rests on.
pub fn sample_from_children<R: Rng + ?Sized>(
    s: u64,
    n: u64,
    children: &[ChildTopicInput<'_>],
    rng: &mut R,
) -> Result<TopicSets, SelectionError> {
    let weights: Vec<(Rational, u64)> =
        children.iter().map(|c| (c.weight.clone(), c.population)).collect();
    ChildSampler::new(s, n, &weights)?.sample(children, rng)
}

/// Aggregate a region: proportional shares of `size` over the weighted
/// sets, rounded to neighbors with the exact sum, then uniform subsets.
pub fn round_and_sample<R: Rng + ?Sized>(
    size: u64,
    sets: &[(&[Member], Rational)],
    rng: &mut R,
) -> Result<Vec<Member>, SelectionError> {
    let total: Rational = sets.iter().map(|(_, x)| x.clone()).sum();
    if total.is_zero() {
        if size == 0 {
            return Ok(Vec::new());
        }
        return Err(SelectionError::SamplingInfeasible {
            context: "aggregation over zero total weight".into(),
            needed: size,
            available: 0,
        });
    }
    let shares: Vec<Rational> =
        sets.iter().map(|(_, x)| rat_u64(size) * x.clone() / total.clone()).collect();
    let problem = fixed_sum_problem(&shares, &vec![0; shares.len()])?;
    sample_aggregate(&problem, sets, size, rng)
}

fn sample_aggregate<R: Rng + ?Sized>(
    problem: &RoundingProblem,
    sets: &[(&[Member], Rational)],
    size: u64,
    rng: &mut R,
) -> Result<Vec<Member>, SelectionError> {
    let gamma = problem.round(rng);
    let mut out = Vec::with_capacity(size as usize);
    for ((members, _), &g) in sets.iter().zip(&gamma) {
        if g > members.len() as u64 {
            return Err(SelectionError::SamplingInfeasible {
                context: "aggregation draw from a selectable set".into(),
                needed: g,
                available: members.len() as u64,
            });
        }
        out.extend(uniform_subset_of(members, g, rng));
    }
    Ok(out)
}

/// Per-(region, topic) data computed once per selector.
struct TopicNode {
    node: NodeId,
    weight: Rational,
    population: u64,
}

/// The selectable size of one (region, topic): fixed when the share is
/// integral, otherwise a coin between floor and ceiling.
enum SizeDraw {
    Fixed(u64),
    Coin { floor: u64, up_probability: Rational },
}

impl SizeDraw {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            SizeDraw::Fixed(v) => *v,
            SizeDraw::Coin { floor, up_probability } => {
                if bernoulli_exact(up_probability, rng) {
                    floor + 1
                } else {
                    *floor
                }
            }
        }
    }

    fn options(&self) -> Vec<u64> {
        match self {
            SizeDraw::Fixed(v) => vec![*v],
            SizeDraw::Coin { floor, .. } => vec![*floor, floor + 1],
        }
    }
}

/// A semi-laminar instance prepared for repeated selection: structure,
/// weights, and every rounding problem any reachable draw can need.
pub struct SemiLaminarSelector<'a> {
    instance: &'a Instance,
    structure: SemiLaminarStructure,
    n: u64,
    info: Vec<Vec<TopicNode>>,
    size_draws: Vec<Vec<SizeDraw>>,
    /// Per leaf region: one sampler per reachable s-vector.
    leaf_samplers: Vec<HashMap<Vec<u64>, LeafRegionSampler>>,
    /// Per internal region and topic: one sampler per reachable s value.
    child_samplers: Vec<Vec<HashMap<u64, ChildSampler>>>,
    /// Per region: the aggregator rounding (its shares do not depend on s).
    star_problems: Vec<RoundingProblem>,
}

impl<'a> SemiLaminarSelector<'a> {
    pub fn new(instance: &'a Instance, n: u64) -> Result<Self, SelectionError> {
        let structure = match instance.classify() {
            Classification::SemiLaminar(s) => s,
            other => return Err(SelectionError::NotSemiLaminar(other.kind())),
        };
        let regularity = check_regularity(instance, n)?;
        if !regularity.satisfied {
            return Err(SelectionError::Irregular(regularity.reasons.join("; ")));
        }
        let num_regions = structure.num_regions();
        let num_topics = structure.num_topics;
        let info: Vec<Vec<TopicNode>> = (0..num_regions)
            .map(|r| {
                (0..num_topics)
                    .map(|t| {
                        let node = structure.topic_node[r][t];
                        TopicNode {
                            node,
                            weight: weight_of(instance, node),
                            population: instance.population(node),
                        }
                    })
                    .collect()
            })
            .collect();
        let size_draws: Vec<Vec<SizeDraw>> = info
            .iter()
            .map(|row| {
                row.iter()
                    .map(|tn| {
                        let share = rat_u64(n) * tn.weight.clone() / rat_u64(tn.population);
                        if is_integer(&share) {
                            SizeDraw::Fixed(floor_u64(&share))
                        } else {
                            SizeDraw::Coin {
                                floor: floor_u64(&share),
                                up_probability: share.clone() - share.floor(),
                            }
                        }
                    })
                    .collect()
            })
            .collect();

        let mut leaf_samplers: Vec<HashMap<Vec<u64>, LeafRegionSampler>> =
            (0..num_regions).map(|_| HashMap::new()).collect();
        let mut child_samplers: Vec<Vec<HashMap<u64, ChildSampler>>> =
            (0..num_regions).map(|_| (0..num_topics).map(|_| HashMap::new()).collect()).collect();
        for r in 0..num_regions {
            if structure.region_children[r].is_empty() {
                let region_classes = leaf_classes_of_region(instance, &structure, r);
                // all corners of this region's s-hypercube
                let mut corners: Vec<Vec<u64>> = vec![Vec::new()];
                for draw in &size_draws[r] {
                    let mut next = Vec::new();
                    for corner in &corners {
                        for option in draw.options() {
                            let mut extended = corner.clone();
                            extended.push(option);
                            next.push(extended);
                        }
                    }
                    corners = next;
                }
                for corner in corners {
                    let sampler = LeafRegionSampler::new(&region_classes, &corner, n)?;
                    leaf_samplers[r].insert(corner, sampler);
                }
            } else {
                for t in 0..num_topics {
                    let children: Vec<(Rational, u64)> = structure.region_children[r]
                        .iter()
                        .map(|&c| (info[c][t].weight.clone(), info[c][t].population))
                        .collect();
                    for option in size_draws[r][t].options() {
                        child_samplers[r][t]
                            .insert(option, ChildSampler::new(option, n, &children)?);
                    }
                }
            }
        }
        let star_problems: Vec<RoundingProblem> = (0..num_regions)
            .map(|r| {
                let region_total: Rational =
                    (0..num_topics).map(|t| info[r][t].weight.clone()).sum();
                let shares: Vec<Rational> = (0..num_topics)
                    .map(|t| rat_u64(n) * info[r][t].weight.clone() / region_total.clone())
                    .collect();
                fixed_sum_problem(&shares, &vec![0; shares.len()])
            })
            .collect::<Result<_, _>>()?;
        Ok(SemiLaminarSelector {
            instance,
            structure,
            n,
            info,
            size_draws,
            leaf_samplers,
            child_samplers,
            star_problems,
        })
    }

    pub fn structure(&self) -> &SemiLaminarStructure {
        &self.structure
    }

    pub fn select<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<AssemblyAssignment, SelectionError> {
        let num_regions = self.structure.num_regions();
        let num_topics = self.structure.num_topics;
        // selectable sizes are drawn once, independently, up front
        let s: Vec<Vec<u64>> = self
            .size_draws
            .iter()
            .map(|row| row.iter().map(|d| d.draw(rng)).collect())
            .collect();

        let mut topic_sets: Vec<Vec<TopicSets>> = (0..num_regions)
            .map(|_| (0..num_topics).map(|_| TopicSets::default()).collect())
            .collect();
        for &r in &self.structure.region_topo_bottom_up {
            if self.structure.region_children[r].is_empty() {
                let sampler = self.leaf_samplers[r]
                    .get(&s[r])
                    .expect("every reachable corner is prepared");
                topic_sets[r] = sampler.sample(rng)?;
            } else {
                let mut region_sets = Vec::with_capacity(num_topics);
                for t in 0..num_topics {
                    let inputs: Vec<ChildTopicInput<'_>> = self.structure.region_children[r]
                        .iter()
                        .map(|&c| ChildTopicInput {
                            selectable: &topic_sets[c][t].selectable,
                            unselectable: &topic_sets[c][t].unselectable,
                            weight: self.info[c][t].weight.clone(),
                            population: self.info[c][t].population,
                        })
                        .collect();
                    let sampler = self.child_samplers[r][t]
                        .get(&s[r][t])
                        .expect("every reachable size is prepared");
                    region_sets.push(sampler.sample(&inputs, rng)?);
                }
                topic_sets[r] = region_sets;
            }
        }

        let mut assemblies: Vec<Vec<Member>> = vec![Vec::new(); self.instance.node_count()];
        for r in 0..num_regions {
            for t in 0..num_topics {
                let mut assembly = topic_sets[r][t].selectable.clone();
                assembly.extend(topic_sets[r][t].unselectable.iter().copied());
                debug_assert_eq!(assembly.len() as u64, self.n);
                assemblies[self.info[r][t].node.0] = assembly;
            }
            let weighted_sets: Vec<(&[Member], Rational)> = (0..num_topics)
                .map(|t| (topic_sets[r][t].selectable.as_slice(), self.info[r][t].weight.clone()))
                .collect();
            assemblies[self.structure.star[r].0] =
                sample_aggregate(&self.star_problems[r], &weighted_sets, self.n, rng)?;
        }
        Ok(AssemblyAssignment { n: self.n, assemblies })
    }
}

pub fn select_semilaminar<R: Rng + ?Sized>(
    instance: &Instance,
    n: u64,
    rng: &mut R,
) -> Result<AssemblyAssignment, SelectionError> {
    SemiLaminarSelector::new(instance, n)?.select(rng)
}

/// The classes of one leaf region, with leaf nodes translated to topics.
fn leaf_classes_of_region(
    instance: &Instance,
    structure: &SemiLaminarStructure,
    region: usize,
) -> Vec<LeafClass> {
    let row = &structure.topic_node[region];
    (0..instance.class_count())
        .filter_map(|c| {
            let class = instance.class(ClassId(c));
            let mut topics: Vec<usize> = class
                .leaves
                .iter()
                .filter_map(|leaf| row.iter().position(|n| n == leaf))
                .collect();
            if topics.len() != class.leaves.len() {
                return None; // class belongs to a different region
            }
            topics.sort_unstable();
            Some(LeafClass { class: ClassId(c), topics, size: class.size })
        })
        .collect()
}
