//! Column generation over ex-post-feasible canonical assignments.
//!
//! The ex ante guarantees are linear functionals of a distribution over
//! canonical assignments: per-(node, class) expected seat counts must equal
//! `n |C| / |N_v|`, and per-edge expected overlaps must reach `n q`. A
//! convex loss (squared error on the equalities, squared hinge on the
//! overlap floors) is minimized by alternating a simplex-constrained
//! quadratic solve over the current support with an exact integer best
//! response that adds the steepest new column.

mod best_response;
mod oracle;
mod restricted;

pub use best_response::best_response;
pub use oracle::{feasibility_oracle, OracleVerdict, DEFAULT_ORACLE_CAP};
pub use restricted::solve_restricted;

use crate::instance::{AssemblyAssignment, CanonicalAssignment, Instance, Member, NodeId};
use crate::rational::{floor_u64, rat_u64, to_f64, Rational};
use crate::sampling::permutation_prefix;
use rand::Rng;
use std::time::Instant;
use thiserror::Error;

/// A finite-support distribution over canonical assignments.
#[derive(Clone, Debug)]
pub struct RandomizedAssignment {
    pub n: u64,
    pub support: Vec<CanonicalAssignment>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("no assignment satisfies the ex post constraints")]
    ExPostInfeasible,
    #[error("restricted solve stalled with optimality gap {gap:.3e}")]
    RestrictedStalled { gap: f64 },
    #[error("iteration cap reached at loss {loss:.3e} (support {})", trace.len())]
    IterationCap { loss: f64, trace: Vec<IterationStats> },
    #[error("stationary at loss {loss:.3e} above tolerance (support {})", trace.len())]
    Stationary { loss: f64, trace: Vec<IterationStats> },
    #[error("canonical assignment enumeration exceeded the cap of {cap}")]
    EnumerationCap { cap: usize },
    #[error("best-response search exhausted its budget after {expansions} expansions")]
    SearchBudget { expansions: u64 },
}

/// The linear functionals every randomized assignment is measured against.
#[derive(Clone, Debug)]
pub struct ExAnteTargets {
    pub n: u64,
    /// (node, class slot) pairs in node-major order.
    pub coords: Vec<(NodeId, usize)>,
    coord_base: Vec<usize>,
    /// Federation-child edges, in bottom-up federation order.
    pub edges: Vec<(NodeId, NodeId)>,
    /// Exact equality targets n|C|/|N_v| per coordinate.
    pub class_target: Vec<Rational>,
    /// Exact floor targets n*q per edge.
    pub overlap_target: Vec<Rational>,
    /// Integral ex post floors per edge.
    pub overlap_floor: Vec<u64>,
    pub class_target_f: Vec<f64>,
    pub overlap_target_f: Vec<f64>,
}

impl ExAnteTargets {
    pub fn new(instance: &Instance, n: u64) -> Self {
        let mut coords = Vec::new();
        let mut coord_base = Vec::with_capacity(instance.node_count());
        for v in instance.nodes() {
            coord_base.push(coords.len());
            for slot in 0..instance.classes_of(v).len() {
                coords.push((v, slot));
            }
        }
        let class_target: Vec<Rational> = coords
            .iter()
            .map(|&(v, slot)| {
                let class = instance.classes_of(v)[slot];
                rat_u64(n) * rat_u64(instance.class(class).size)
                    / rat_u64(instance.population(v))
            })
            .collect();
        let edges = instance.edges();
        let overlap_target: Vec<Rational> = edges
            .iter()
            .map(|&(f, c)| rat_u64(n) * instance.quota(f, c).expect("edge quota"))
            .collect();
        let overlap_floor = overlap_target.iter().map(floor_u64).collect();
        let class_target_f = class_target.iter().map(to_f64).collect();
        let overlap_target_f = overlap_target.iter().map(to_f64).collect();
        ExAnteTargets {
            n,
            coords,
            coord_base,
            edges,
            class_target,
            overlap_target,
            overlap_floor,
            class_target_f,
            overlap_target_f,
        }
    }

    pub fn coord_of(&self, v: NodeId, slot: usize) -> usize {
        self.coord_base[v.0] + slot
    }

    /// Flatten a column into its coordinate and overlap contributions.
    pub fn column_stats(
        &self,
        instance: &Instance,
        column: &CanonicalAssignment,
    ) -> (Vec<f64>, Vec<f64>) {
        let counts = self
            .coords
            .iter()
            .map(|&(v, slot)| column.counts[v.0][slot] as f64)
            .collect();
        let overlaps = self
            .edges
            .iter()
            .map(|&(f, c)| column.overlap(instance, f, c) as f64)
            .collect();
        (counts, overlaps)
    }

    /// Expected coordinate values and overlaps under the distribution.
    pub fn expectations(
        &self,
        instance: &Instance,
        randomized: &RandomizedAssignment,
    ) -> (Vec<f64>, Vec<f64>) {
        let mut e_class = vec![0f64; self.coords.len()];
        let mut e_overlap = vec![0f64; self.edges.len()];
        for (column, &w) in randomized.support.iter().zip(&randomized.weights) {
            let (counts, overlaps) = self.column_stats(instance, column);
            for (e, x) in e_class.iter_mut().zip(&counts) {
                *e += w * x;
            }
            for (e, x) in e_overlap.iter_mut().zip(&overlaps) {
                *e += w * x;
            }
        }
        (e_class, e_overlap)
    }

    /// Largest ex ante deviation: absolute for the equality targets, hinge
    /// for the overlap floors.
    pub fn max_deviation(&self, e_class: &[f64], e_overlap: &[f64]) -> f64 {
        let class_dev = e_class
            .iter()
            .zip(&self.class_target_f)
            .map(|(e, t)| (e - t).abs())
            .fold(0f64, f64::max);
        let overlap_dev = e_overlap
            .iter()
            .zip(&self.overlap_target_f)
            .map(|(e, u)| (u - e).max(0.0))
            .fold(0f64, f64::max);
        class_dev.max(overlap_dev)
    }
}

pub(crate) fn loss_from_expectations(
    targets: &ExAnteTargets,
    e_class: &[f64],
    e_overlap: &[f64],
) -> f64 {
    let equality: f64 = e_class
        .iter()
        .zip(&targets.class_target_f)
        .map(|(e, t)| (e - t) * (e - t))
        .sum();
    let hinge: f64 = e_overlap
        .iter()
        .zip(&targets.overlap_target_f)
        .map(|(e, u)| {
            let d = (u - e).max(0.0);
            d * d
        })
        .sum();
    equality + hinge
}

/// Squared distance of a randomized assignment from the ex ante guarantees;
/// zero exactly when all of them hold.
pub fn loss(
    instance: &Instance,
    targets: &ExAnteTargets,
    randomized: &RandomizedAssignment,
) -> f64 {
    let (e_class, e_overlap) = targets.expectations(instance, randomized);
    loss_from_expectations(targets, &e_class, &e_overlap)
}

/// Gradient of the loss with respect to the expectation vector, used as the
/// best-response objective.
#[derive(Clone, Debug)]
pub struct LossGradient {
    pub class_coord: Vec<f64>,
    pub overlap_coord: Vec<f64>,
}

impl LossGradient {
    pub fn at(targets: &ExAnteTargets, e_class: &[f64], e_overlap: &[f64]) -> Self {
        let class_coord =
            e_class.iter().zip(&targets.class_target_f).map(|(e, t)| 2.0 * (e - t)).collect();
        let overlap_coord = e_overlap
            .iter()
            .zip(&targets.overlap_target_f)
            .map(|(e, u)| -2.0 * (u - e).max(0.0))
            .collect();
        LossGradient { class_coord, overlap_coord }
    }

    pub fn zero(targets: &ExAnteTargets) -> Self {
        LossGradient {
            class_coord: vec![0.0; targets.coords.len()],
            overlap_coord: vec![0.0; targets.edges.len()],
        }
    }

    /// Linearized loss of a column under this gradient.
    pub fn score(&self, counts: &[f64], overlaps: &[f64]) -> f64 {
        let a: f64 = self.class_coord.iter().zip(counts).map(|(g, x)| g * x).sum();
        let b: f64 = self.overlap_coord.iter().zip(overlaps).map(|(g, x)| g * x).sum();
        a + b
    }
}

/// One row of the column-generation trace.
#[derive(Clone, Debug)]
pub struct IterationStats {
    pub iteration: usize,
    pub support_size: usize,
    pub loss: f64,
    pub wall_ms: f64,
}

/// Result of a converged run.
#[derive(Clone, Debug)]
pub struct OptimizeOutcome {
    pub randomized: RandomizedAssignment,
    pub trace: Vec<IterationStats>,
    pub loss: f64,
    pub max_deviation: f64,
}

/// Convergence means every ex ante deviation is at most `tolerance * n`.
pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_MAX_ITERATIONS: usize = 300;

/// Alternate the restricted quadratic solve with the exact best response
/// until every ex ante deviation falls below `tolerance * n`.
pub fn column_generation(
    instance: &Instance,
    n: u64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<OptimizeOutcome, OptimizerError> {
    let targets = ExAnteTargets::new(instance, n);
    let start = Instant::now();
    let mut trace: Vec<IterationStats> = Vec::new();

    let first = best_response(&LossGradient::zero(&targets), instance, n)?;
    debug_assert!(first.check(instance).is_empty());
    let mut support = vec![first];
    let mut stats: Vec<(Vec<f64>, Vec<f64>)> =
        support.iter().map(|c| targets.column_stats(instance, c)).collect();

    let threshold = tolerance * n as f64;
    for iteration in 0..max_iterations {
        // function-value backtracking cannot certify gaps much below
        // sqrt(eps), so ask for just enough accuracy for the deviation check
        let weights = solve_restricted_stats(&stats, &targets, 3e-8)?;
        let (e_class, e_overlap) = mix(&stats, &weights, &targets);
        let current_loss = loss_from_expectations(&targets, &e_class, &e_overlap);
        trace.push(IterationStats {
            iteration,
            support_size: support.len(),
            loss: current_loss,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        let deviation = targets.max_deviation(&e_class, &e_overlap);
        if deviation <= threshold {
            return Ok(OptimizeOutcome {
                randomized: RandomizedAssignment { n, support, weights },
                trace,
                loss: current_loss,
                max_deviation: deviation,
            });
        }

        let gradient = LossGradient::at(&targets, &e_class, &e_overlap);
        let column = best_response(&gradient, instance, n)?;
        debug_assert!(column.check(instance).is_empty());
        let (counts, overlaps) = targets.column_stats(instance, &column);
        // Frank-Wolfe improvement of the linearization: current point minus
        // the new vertex
        let improvement =
            gradient.score(&e_class, &e_overlap) - gradient.score(&counts, &overlaps);
        if improvement < 1e-12 || support.contains(&column) {
            return Err(OptimizerError::Stationary { loss: current_loss, trace });
        }
        support.push(column);
        stats.push((counts, overlaps));
    }
    let final_loss = trace.last().map(|t| t.loss).unwrap_or(f64::INFINITY);
    Err(OptimizerError::IterationCap { loss: final_loss, trace })
}

fn mix(
    stats: &[(Vec<f64>, Vec<f64>)],
    weights: &[f64],
    targets: &ExAnteTargets,
) -> (Vec<f64>, Vec<f64>) {
    let mut e_class = vec![0f64; targets.coords.len()];
    let mut e_overlap = vec![0f64; targets.edges.len()];
    for ((counts, overlaps), &w) in stats.iter().zip(weights) {
        for (e, x) in e_class.iter_mut().zip(counts) {
            *e += w * x;
        }
        for (e, x) in e_overlap.iter_mut().zip(overlaps) {
            *e += w * x;
        }
    }
    (e_class, e_overlap)
}

pub(crate) fn solve_restricted_stats(
    stats: &[(Vec<f64>, Vec<f64>)],
    targets: &ExAnteTargets,
    tolerance: f64,
) -> Result<Vec<f64>, OptimizerError> {
    restricted::solve_restricted_inner(stats, targets, tolerance)
}

/// Draw a concrete assignment: pick a support column by weight, then one
/// uniform permutation per class; each node seats that class's prefix.
pub fn sample_from_randomized<R: Rng + ?Sized>(
    randomized: &RandomizedAssignment,
    instance: &Instance,
    rng: &mut R,
) -> AssemblyAssignment {
    let total: f64 = randomized.weights.iter().sum();
    let mut pick: f64 = rng.random::<f64>() * total;
    let mut chosen = randomized.support.len() - 1;
    for (j, &w) in randomized.weights.iter().enumerate() {
        if pick < w {
            chosen = j;
            break;
        }
        pick -= w;
    }
    let column = &randomized.support[chosen];

    let mut max_prefix = vec![0u64; instance.class_count()];
    for v in instance.nodes() {
        for (slot, &class) in instance.classes_of(v).iter().enumerate() {
            max_prefix[class.0] = max_prefix[class.0].max(column.counts[v.0][slot]);
        }
    }
    let prefixes: Vec<Vec<u64>> = max_prefix
        .iter()
        .enumerate()
        .map(|(c, &len)| {
            permutation_prefix(instance.class(crate::instance::ClassId(c)).size, len, rng)
        })
        .collect();
    let assemblies = instance
        .nodes()
        .map(|v| {
            let mut assembly = Vec::with_capacity(randomized.n as usize);
            for (slot, &class) in instance.classes_of(v).iter().enumerate() {
                for &index in &prefixes[class.0][..column.counts[v.0][slot] as usize] {
                    assembly.push(Member { class, index });
                }
            }
            assembly
        })
        .collect();
    AssemblyAssignment { n: randomized.n, assemblies }
}
