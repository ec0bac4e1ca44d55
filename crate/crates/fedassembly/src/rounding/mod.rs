//! Dependent randomized rounding under bihierarchy constraints.
//!
//! A rounding problem carries nonnegative rational marginals and a family of
//! index sets split into two groups; within each group any two sets must be
//! nested or disjoint. The rounder is exact: every coordinate lands on its
//! floor or ceiling, every constrained set's sum stays within the floor and
//! ceiling of its marginal sum, and expectations equal the marginals as
//! rationals.
//!
//! Internally the two groups become two forests glued at the coordinates,
//! forming a flow whose fractional edges always contain a cycle; shifting
//! mass around a cycle until an edge hits an integer, with the branch
//! probability chosen to preserve expectations, decomposes the marginal
//! vector step by step. The same walk, explored symbolically instead of
//! sampled, yields the exact outcome distribution.

mod decompose;

use crate::rational::{is_integer, rat_u64, Rational};
use decompose::Prepared;
use num_traits::{Signed, Zero};
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Which half of the bihierarchy a constraint set belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Group {
    One,
    Two,
}

/// An index set whose rounded sum must respect the floor and/or ceiling of
/// its marginal sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSet {
    pub indices: BTreeSet<usize>,
    pub group: Group,
    pub floor: bool,
    pub ceil: bool,
}

impl ConstraintSet {
    pub fn both(indices: impl IntoIterator<Item = usize>, group: Group) -> Self {
        ConstraintSet { indices: indices.into_iter().collect(), group, floor: true, ceil: true }
    }

    pub fn floor_only(indices: impl IntoIterator<Item = usize>, group: Group) -> Self {
        ConstraintSet { indices: indices.into_iter().collect(), group, floor: true, ceil: false }
    }

    pub fn ceil_only(indices: impl IntoIterator<Item = usize>, group: Group) -> Self {
        ConstraintSet { indices: indices.into_iter().collect(), group, floor: false, ceil: true }
    }
}

#[derive(Clone, Debug, Error)]
pub enum RoundingError {
    #[error("marginal {index} is negative")]
    NegativeMarginal { index: usize },
    #[error("constraint references index {index} out of range (marginals: {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("sets {a:?} and {b:?} in the same group are neither nested nor disjoint")]
    NotBihierarchy { a: BTreeSet<usize>, b: BTreeSet<usize> },
    #[error("marginals sum to the non-integer {total}")]
    NonIntegralSum { total: String },
    #[error("lower bound {bound} exceeds floor({marginal}) at index {index}")]
    InfeasibleLowerBound { index: usize, bound: u64, marginal: String },
    #[error("negative input to round_single")]
    NegativeInput,
    #[error("problem has {size} coordinates; exact enumeration is guarded at {max}")]
    DimensionGuard { size: usize, max: usize },
}

/// A verified rounding problem, ready to be sampled repeatedly.
#[derive(Clone, Debug)]
pub struct RoundingProblem {
    marginals: Vec<Rational>,
    sets: Vec<ConstraintSet>,
    prepared: Prepared,
}

impl RoundingProblem {
    pub fn new(
        marginals: Vec<Rational>,
        sets: Vec<ConstraintSet>,
    ) -> Result<Self, RoundingError> {
        for (index, p) in marginals.iter().enumerate() {
            if p.is_negative() {
                return Err(RoundingError::NegativeMarginal { index });
            }
        }
        let len = marginals.len();
        let mut normalized: Vec<ConstraintSet> = Vec::new();
        for set in &sets {
            if set.indices.is_empty() {
                continue;
            }
            if let Some(&index) = set.indices.iter().find(|&&i| i >= len) {
                return Err(RoundingError::IndexOutOfRange { index, len });
            }
            match normalized
                .iter_mut()
                .find(|s| s.group == set.group && s.indices == set.indices)
            {
                Some(existing) => {
                    existing.floor |= set.floor;
                    existing.ceil |= set.ceil;
                }
                None => normalized.push(set.clone()),
            }
        }
        for group in [Group::One, Group::Two] {
            let members: Vec<&ConstraintSet> =
                normalized.iter().filter(|s| s.group == group).collect();
            for (i, a) in members.iter().enumerate() {
                for b in members.iter().skip(i + 1) {
                    let nested = a.indices.is_subset(&b.indices)
                        || b.indices.is_subset(&a.indices);
                    let disjoint = a.indices.is_disjoint(&b.indices);
                    if !nested && !disjoint {
                        return Err(RoundingError::NotBihierarchy {
                            a: a.indices.clone(),
                            b: b.indices.clone(),
                        });
                    }
                }
            }
        }
        let prepared = Prepared::build(&marginals, &normalized);
        Ok(RoundingProblem { marginals, sets: normalized, prepared })
    }

    pub fn marginals(&self) -> &[Rational] {
        &self.marginals
    }

    pub fn sets(&self) -> &[ConstraintSet] {
        &self.sets
    }

    /// Sample one integral rounding with exact marginals.
    pub fn round<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        self.prepared.sample(rng)
    }

    /// The exact distribution the sampler draws from.
    pub fn exact_outcome_distribution(
        &self,
    ) -> Result<BTreeMap<Vec<u64>, Rational>, RoundingError> {
        const MAX_COORDS: usize = 12;
        if self.marginals.len() > MAX_COORDS {
            return Err(RoundingError::DimensionGuard {
                size: self.marginals.len(),
                max: MAX_COORDS,
            });
        }
        Ok(self.prepared.enumerate())
    }

    /// Check an outcome against every requested floor/ceiling side.
    pub fn satisfies_requested_sides(&self, outcome: &[u64]) -> bool {
        for set in &self.sets {
            let sum: u64 = set.indices.iter().map(|&i| outcome[i]).sum();
            let marginal_sum: Rational =
                set.indices.iter().map(|&i| self.marginals[i].clone()).sum();
            if set.floor && rat_u64(sum) < marginal_sum.floor() {
                return false;
            }
            if set.ceil && rat_u64(sum) > marginal_sum.ceil() {
                return false;
            }
        }
        // coordinates always land on their own floor or ceiling
        outcome.iter().zip(&self.marginals).all(|(&x, p)| {
            rat_u64(x) >= p.floor() && rat_u64(x) <= p.ceil()
        })
    }
}

/// Sample one integral rounding of a verified bihierarchy problem.
pub fn round_bihierarchy<R: Rng + ?Sized>(problem: &RoundingProblem, rng: &mut R) -> Vec<u64> {
    problem.round(rng)
}

/// Round a single nonnegative value to a neighboring integer, unbiased.
pub fn round_single<R: Rng + ?Sized>(x: &Rational, rng: &mut R) -> Result<u64, RoundingError> {
    if x.is_negative() {
        return Err(RoundingError::NegativeInput);
    }
    let floor = crate::rational::floor_u64(x);
    if is_integer(x) {
        return Ok(floor);
    }
    let frac = x - x.floor();
    Ok(if crate::sampling::bernoulli_exact(&frac, rng) { floor + 1 } else { floor })
}

/// Round a vector with an integral sum to integers: each coordinate lands on
/// its floor or ceiling, the sum is preserved exactly, and expectations equal
/// the marginals. `lower_bounds` must not exceed the floors.
pub fn round_fixed_sum<R: Rng + ?Sized>(
    marginals: &[Rational],
    lower_bounds: &[u64],
    rng: &mut R,
) -> Result<Vec<u64>, RoundingError> {
    let problem = fixed_sum_problem(marginals, lower_bounds)?;
    Ok(problem.round(rng))
}

/// The bihierarchy formulation backing [`round_fixed_sum`]: singletons in one
/// group, the full index set in the other.
pub fn fixed_sum_problem(
    marginals: &[Rational],
    lower_bounds: &[u64],
) -> Result<RoundingProblem, RoundingError> {
    let total: Rational = marginals.iter().cloned().sum();
    if !is_integer(&total) {
        return Err(RoundingError::NonIntegralSum { total: total.to_string() });
    }
    for (index, (p, &bound)) in marginals.iter().zip(lower_bounds).enumerate() {
        if p.is_negative() {
            return Err(RoundingError::NegativeMarginal { index });
        }
        if rat_u64(bound) > p.floor() {
            return Err(RoundingError::InfeasibleLowerBound {
                index,
                bound,
                marginal: p.to_string(),
            });
        }
    }
    let mut sets: Vec<ConstraintSet> =
        (0..marginals.len()).map(|i| ConstraintSet::both([i], Group::One)).collect();
    sets.push(ConstraintSet::both(0..marginals.len(), Group::Two));
    RoundingProblem::new(marginals.to_vec(), sets)
}

/// Expected value of each coordinate under the exact distribution.
pub fn distribution_expectations(dist: &BTreeMap<Vec<u64>, Rational>) -> Vec<Rational> {
    let k = dist.keys().next().map(|v| v.len()).unwrap_or(0);
    let mut expectations = vec![Rational::zero(); k];
    for (outcome, prob) in dist {
        for (i, &x) in outcome.iter().enumerate() {
            expectations[i] += prob * rat_u64(x);
        }
    }
    expectations
}

pub use decompose::total_probability;

#[cfg(test)]
mod tests;
