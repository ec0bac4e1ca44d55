//! Ground-truth feasibility for tiny instances.
//!
//! Enumerates every ex-post-feasible canonical assignment and solves the
//! exact ex ante feasibility problem over them with a phase-one simplex in
//! rational arithmetic (Bland's rule, so termination is guaranteed). This is
//! the reference the column-generation loop is validated against.

use super::best_response::enumerate_feasible;
use super::{ExAnteTargets, OptimizerError};
use crate::instance::Instance;
use crate::rational::{rat_u64, Rational};
use num_traits::{One, Zero};

#[derive(Clone, Debug)]
pub enum OracleVerdict {
    /// Weights over the enumerated assignments meeting every target.
    Feasible(Vec<Rational>),
    Infeasible,
}

pub const DEFAULT_ORACLE_CAP: usize = 1_000_000;

pub fn feasibility_oracle(
    instance: &Instance,
    n: u64,
    cap: usize,
) -> Result<OracleVerdict, OptimizerError> {
    let columns = enumerate_feasible(instance, n, cap)?;
    if columns.is_empty() {
        return Ok(OracleVerdict::Infeasible);
    }
    let targets = ExAnteTargets::new(instance, n);

    // exact column data
    let num_cols = columns.len();
    let coord_rows = targets.coords.len();
    let edge_rows = targets.edges.len();
    let rows = coord_rows + edge_rows + 1;

    // variables: lambda | surplus (one per edge row) | artificial (one per row)
    let num_vars = num_cols + edge_rows + rows;
    let mut tableau: Vec<Vec<Rational>> =
        vec![vec![Rational::zero(); num_vars + 1]; rows];
    for (j, column) in columns.iter().enumerate() {
        for (i, &(v, slot)) in targets.coords.iter().enumerate() {
            tableau[i][j] = rat_u64(column.counts[v.0][slot]);
        }
        for (e, &(f, c)) in targets.edges.iter().enumerate() {
            tableau[coord_rows + e][j] = rat_u64(column.overlap(instance, f, c));
        }
        tableau[rows - 1][j] = Rational::one();
    }
    for (i, target) in targets.class_target.iter().enumerate() {
        tableau[i][num_vars] = target.clone();
    }
    for e in 0..edge_rows {
        tableau[coord_rows + e][num_cols + e] = -Rational::one();
        tableau[coord_rows + e][num_vars] = targets.overlap_target[e].clone();
    }
    tableau[rows - 1][num_vars] = Rational::one();
    for (i, row) in tableau.iter_mut().enumerate() {
        row[num_cols + edge_rows + i] = Rational::one();
    }
    let mut basis: Vec<usize> = (0..rows).map(|i| num_cols + edge_rows + i).collect();
    let is_artificial = |var: usize| var >= num_cols + edge_rows;

    // phase one: minimize the sum of artificials
    loop {
        // reduced cost of column j: c_j - sum over artificial basis rows
        // Bland: enter the first column with a negative reduced cost
        let entering = (0..num_vars).find(|&j| {
            let c_j = if is_artificial(j) { Rational::one() } else { Rational::zero() };
            let mut reduced = c_j;
            for (i, &b) in basis.iter().enumerate() {
                if is_artificial(b) {
                    reduced -= &tableau[i][j];
                }
            }
            reduced < Rational::zero()
        });
        let Some(j) = entering else { break };
        let mut leaving: Option<usize> = None;
        let mut best_ratio: Option<Rational> = None;
        for i in 0..rows {
            if tableau[i][j] > Rational::zero() {
                let ratio = &tableau[i][num_vars] / &tableau[i][j];
                let better = match &best_ratio {
                    None => true,
                    Some(b) => {
                        ratio < *b || (ratio == *b && basis[i] < basis[leaving.unwrap()])
                    }
                };
                if better {
                    best_ratio = Some(ratio);
                    leaving = Some(i);
                }
            }
        }
        let Some(r) = leaving else {
            // unbounded phase-one cannot happen with artificials present
            break;
        };
        pivot(&mut tableau, r, j);
        basis[r] = j;
    }

    let objective: Rational = basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| is_artificial(b))
        .map(|(i, _)| tableau[i][num_vars].clone())
        .sum();
    if !objective.is_zero() {
        return Ok(OracleVerdict::Infeasible);
    }
    let mut weights = vec![Rational::zero(); num_cols];
    for (i, &b) in basis.iter().enumerate() {
        if b < num_cols {
            weights[b] = tableau[i][num_vars].clone();
        }
    }
    debug_assert_eq!(weights.iter().cloned().sum::<Rational>(), Rational::one());
    Ok(OracleVerdict::Feasible(weights))
}

fn pivot(tableau: &mut [Vec<Rational>], r: usize, j: usize) {
    let divisor = tableau[r][j].clone();
    for x in tableau[r].iter_mut() {
        *x /= divisor.clone();
    }
    let pivot_row = tableau[r].clone();
    for (i, row) in tableau.iter_mut().enumerate() {
        if i == r || row[j].is_zero() {
            continue;
        }
        let factor = row[j].clone();
        for (x, p) in row.iter_mut().zip(&pivot_row) {
            *x -= &factor * p;
        }
    }
}
