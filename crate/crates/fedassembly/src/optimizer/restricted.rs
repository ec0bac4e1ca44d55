//! Simplex-constrained quadratic minimization over a fixed support.
//!
//! Projected gradient descent with backtracking; the loss is smooth and
//! convex (squared error plus squared hinge), so the Frank-Wolfe gap bounds
//! the suboptimality and doubles as the stopping criterion. Deterministic:
//! uniform start, fixed step adaptation.

use super::{loss_from_expectations, ExAnteTargets, OptimizerError};
use crate::instance::{CanonicalAssignment, Instance};

/// Weights on the probability simplex bringing the restricted loss within
/// `tolerance` of the restricted optimum.
pub fn solve_restricted(
    instance: &Instance,
    support: &[CanonicalAssignment],
    targets: &ExAnteTargets,
    tolerance: f64,
) -> Result<Vec<f64>, OptimizerError> {
    let stats: Vec<(Vec<f64>, Vec<f64>)> =
        support.iter().map(|c| targets.column_stats(instance, c)).collect();
    solve_restricted_inner(&stats, targets, tolerance)
}

pub(crate) fn solve_restricted_inner(
    stats: &[(Vec<f64>, Vec<f64>)],
    targets: &ExAnteTargets,
    tolerance: f64,
) -> Result<Vec<f64>, OptimizerError> {
    assert!(!stats.is_empty(), "support must be nonempty");
    let k = stats.len();
    if k == 1 {
        return Ok(vec![1.0]);
    }
    let mut weights = vec![1.0 / k as f64; k];
    let mut step = 1.0f64;
    let max_iterations = 200_000usize;
    let mut gap = f64::INFINITY;
    for _ in 0..max_iterations {
        let (e_class, e_overlap) = super::mix(stats, &weights, targets);
        let value = loss_from_expectations(targets, &e_class, &e_overlap);
        let grad = gradient(stats, targets, &e_class, &e_overlap);

        // Frank-Wolfe gap: how much the linearization could still improve
        // within the simplex; bounds the primal suboptimality
        let dot: f64 = grad.iter().zip(&weights).map(|(g, w)| g * w).sum();
        let min_grad = grad.iter().cloned().fold(f64::INFINITY, f64::min);
        gap = dot - min_grad;
        if gap <= tolerance {
            return Ok(weights);
        }

        // backtracking proximal step
        loop {
            let candidate = project_to_simplex(
                &weights.iter().zip(&grad).map(|(w, g)| w - step * g).collect::<Vec<_>>(),
            );
            let (c_class, c_overlap) = super::mix(stats, &candidate, targets);
            let candidate_value = loss_from_expectations(targets, &c_class, &c_overlap);
            let diff: Vec<f64> =
                candidate.iter().zip(&weights).map(|(c, w)| c - w).collect();
            let linear: f64 = grad.iter().zip(&diff).map(|(g, d)| g * d).sum();
            let quad: f64 = diff.iter().map(|d| d * d).sum::<f64>() / (2.0 * step);
            if candidate_value <= value + linear + quad + 1e-13 * (1.0 + value.abs()) {
                weights = candidate;
                step *= 1.25;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                // descent stalled at the floating-point floor; accept when
                // the gap bound is far below any tolerance the caller could
                // meaningfully check against (1e-7 relative)
                if gap <= 1e-7 * (1.0 + value.abs()) {
                    return Ok(weights);
                }
                return Err(OptimizerError::RestrictedStalled { gap });
            }
        }
    }
    Err(OptimizerError::RestrictedStalled { gap })
}

fn gradient(
    stats: &[(Vec<f64>, Vec<f64>)],
    targets: &ExAnteTargets,
    e_class: &[f64],
    e_overlap: &[f64],
) -> Vec<f64> {
    // d loss / d w_j = 2 (E_class - t) . counts_j - 2 relu(u - E_olap) . overlaps_j
    let class_residual: Vec<f64> =
        e_class.iter().zip(&targets.class_target_f).map(|(e, t)| 2.0 * (e - t)).collect();
    let overlap_residual: Vec<f64> = e_overlap
        .iter()
        .zip(&targets.overlap_target_f)
        .map(|(e, u)| -2.0 * (u - e).max(0.0))
        .collect();
    stats
        .iter()
        .map(|(counts, overlaps)| {
            let a: f64 = class_residual.iter().zip(counts).map(|(r, x)| r * x).sum();
            let b: f64 = overlap_residual.iter().zip(overlaps).map(|(r, x)| r * x).sum();
            a + b
        })
        .collect()
}

/// Euclidean projection onto the probability simplex.
fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite weights"));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}
