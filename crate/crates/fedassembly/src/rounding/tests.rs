use super::*;
use crate::rational::rat;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn dist_of(problem: &RoundingProblem) -> BTreeMap<Vec<u64>, Rational> {
    problem.exact_outcome_distribution().expect("within guard")
}

#[test]
fn round_single_integer_is_fixed() {
    let mut rng = ChaCha12Rng::seed_from_u64(0);
    for _ in 0..100 {
        assert_eq!(round_single(&rat(2, 1), &mut rng).unwrap(), 2);
    }
}

#[test]
fn round_single_rejects_negative() {
    let mut rng = ChaCha12Rng::seed_from_u64(0);
    assert!(round_single(&rat(-1, 2), &mut rng).is_err());
}

#[test]
fn round_single_hits_both_neighbors() {
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let x = rat(23, 10);
    let trials = 100_000u64;
    let mut threes = 0u64;
    for _ in 0..trials {
        match round_single(&x, &mut rng).unwrap() {
            3 => threes += 1,
            2 => {}
            other => panic!("unexpected value {other}"),
        }
    }
    let freq = threes as f64 / trials as f64;
    // 4-sigma band around 0.3 at 1e5 draws
    assert!((freq - 0.3).abs() < 4.0 * (0.3f64 * 0.7 / trials as f64).sqrt(), "freq {freq}");
}

#[test]
fn round_single_mean_over_a_million_draws() {
    let mut rng = ChaCha12Rng::seed_from_u64(2);
    let x = rat(1, 2);
    let trials = 1_000_000u64;
    let total: u64 = (0..trials).map(|_| round_single(&x, &mut rng).unwrap()).sum();
    let mean = total as f64 / trials as f64;
    assert!((0.498..=0.502).contains(&mean), "mean {mean}");
}

#[test]
fn fixed_sum_half_integer_pair() {
    let problem = fixed_sum_problem(&[rat(5, 2), rat(3, 2)], &[2, 1]).unwrap();
    let dist = dist_of(&problem);
    // the unique distribution on {floor,ceil} supports with these marginals
    assert_eq!(dist.len(), 2);
    assert_eq!(dist[&vec![3, 1]], rat(1, 2));
    assert_eq!(dist[&vec![2, 2]], rat(1, 2));
}

#[test]
fn fixed_sum_integral_input_is_point_mass() {
    let problem = fixed_sum_problem(&[rat(3, 1), rat(2, 1)], &[0, 0]).unwrap();
    let dist = dist_of(&problem);
    assert_eq!(dist.len(), 1);
    assert_eq!(dist[&vec![3, 2]], rat(1, 1));
}

#[test]
fn fixed_sum_four_halves() {
    let marginals = vec![rat(1, 2); 4];
    let problem = fixed_sum_problem(&marginals, &[0; 4]).unwrap();
    let dist = dist_of(&problem);
    assert_eq!(total_probability(&dist), rat(1, 1));
    for outcome in dist.keys() {
        assert_eq!(outcome.iter().sum::<u64>(), 2, "sum preserved in {outcome:?}");
    }
    let expectations = distribution_expectations(&dist);
    for e in expectations {
        assert_eq!(e, rat(1, 2));
    }
}

#[test]
fn fixed_sum_validates_inputs() {
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let err = round_fixed_sum(&[rat(1, 2), rat(1, 4)], &[0, 0], &mut rng);
    assert!(matches!(err, Err(RoundingError::NonIntegralSum { .. })));
    let err = round_fixed_sum(&[rat(5, 2), rat(3, 2)], &[3, 0], &mut rng);
    assert!(matches!(err, Err(RoundingError::InfeasibleLowerBound { index: 0, .. })));
}

#[test]
fn singleton_family_rounds_independently() {
    // two unconstrained coordinates must behave as independent coins
    let problem = RoundingProblem::new(
        vec![rat(1, 2), rat(1, 2)],
        vec![
            ConstraintSet::both([0], Group::One),
            ConstraintSet::both([1], Group::One),
        ],
    )
    .unwrap();
    let dist = dist_of(&problem);
    assert_eq!(dist.len(), 4);
    for prob in dist.values() {
        assert_eq!(*prob, rat(1, 4));
    }
}

#[test]
fn doubly_stochastic_half_table_gives_permutation_matrices() {
    // 2x2 table of 1/2s, rows in one group, columns in the other; flattened
    // row-major as indices 0..4
    let problem = RoundingProblem::new(
        vec![rat(1, 2); 4],
        vec![
            ConstraintSet::both([0, 1], Group::One),
            ConstraintSet::both([2, 3], Group::One),
            ConstraintSet::both([0, 2], Group::Two),
            ConstraintSet::both([1, 3], Group::Two),
        ],
    )
    .unwrap();
    let dist = dist_of(&problem);
    assert_eq!(dist.len(), 2);
    assert_eq!(dist[&vec![1, 0, 0, 1]], rat(1, 2));
    assert_eq!(dist[&vec![0, 1, 1, 0]], rat(1, 2));
}

#[test]
fn non_bihierarchy_is_rejected_with_the_pair() {
    let err = RoundingProblem::new(
        vec![rat(1, 2); 3],
        vec![
            ConstraintSet::both([0, 1], Group::One),
            ConstraintSet::both([1, 2], Group::One),
        ],
    );
    match err {
        Err(RoundingError::NotBihierarchy { a, b }) => {
            assert!(a.contains(&1) && b.contains(&1));
        }
        other => panic!("expected bihierarchy rejection, got {other:?}"),
    }
}

#[test]
fn sample_leaves_shaped_family_is_accepted() {
    // the per-topic equality sets and per-subset ceiling sets used when
    // sampling leaf regions: indices are (topic, subset) pairs flattened as
    // topic-major over subsets {0},{1},{0,1}
    // coordinates: (t0,{0})=0, (t0,{0,1})=1, (t1,{1})=2, (t1,{0,1})=3
    let problem = RoundingProblem::new(
        vec![rat(3, 4), rat(1, 4), rat(1, 2), rat(1, 2)],
        vec![
            ConstraintSet::both([0, 1], Group::One), // topic 0 total = s_0
            ConstraintSet::both([2, 3], Group::One), // topic 1 total = s_1
            ConstraintSet::ceil_only([1, 3], Group::Two), // subset {0,1} ceiling
        ],
    );
    assert!(problem.is_ok());
}

#[test]
fn every_draw_satisfies_requested_sides() {
    let mut rng = ChaCha12Rng::seed_from_u64(9);
    let problem = RoundingProblem::new(
        vec![rat(7, 5), rat(3, 5), rat(4, 5), rat(6, 5)],
        vec![
            ConstraintSet::both([0, 1], Group::One),
            ConstraintSet::both([2, 3], Group::One),
            ConstraintSet::both([0, 1, 2, 3], Group::Two),
            ConstraintSet::floor_only([0, 2], Group::Two),
        ],
    )
    .unwrap();
    for _ in 0..100_000 {
        let outcome = problem.round(&mut rng);
        assert!(problem.satisfies_requested_sides(&outcome), "violated by {outcome:?}");
    }
}

#[test]
fn exact_distribution_matches_marginals_exactly() {
    let marginals = vec![rat(7, 5), rat(3, 5), rat(4, 5), rat(6, 5)];
    let problem = fixed_sum_problem(&marginals, &[0; 4]).unwrap();
    let dist = dist_of(&problem);
    assert_eq!(total_probability(&dist), rat(1, 1));
    assert_eq!(distribution_expectations(&dist), marginals);
}

#[test]
fn fixed_sum_agrees_with_general_bihierarchy_form() {
    // round_fixed_sum must be the singletons+full-set special case
    let marginals = vec![rat(1, 3), rat(5, 6), rat(1, 2), rat(4, 3)];
    let via_fixed = fixed_sum_problem(&marginals, &[0; 4]).unwrap();
    let mut sets: Vec<ConstraintSet> =
        (0..4).map(|i| ConstraintSet::both([i], Group::One)).collect();
    sets.push(ConstraintSet::both(0..4, Group::Two));
    let via_general = RoundingProblem::new(marginals, sets).unwrap();
    assert_eq!(dist_of(&via_fixed), dist_of(&via_general));
}

#[test]
fn dimension_guard_applies() {
    let marginals = vec![rat(1, 2); 13];
    let problem = RoundingProblem::new(marginals, vec![]).unwrap();
    assert!(matches!(
        problem.exact_outcome_distribution(),
        Err(RoundingError::DimensionGuard { .. })
    ));
}

#[test]
fn monte_carlo_matches_exact_distribution() {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let marginals = vec![rat(5, 2), rat(3, 2), rat(1, 1)];
    let problem = fixed_sum_problem(&marginals, &[0; 3]).unwrap();
    let dist = dist_of(&problem);
    let trials = 200_000u64;
    let mut counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    for _ in 0..trials {
        *counts.entry(problem.round(&mut rng)).or_default() += 1;
    }
    for (outcome, prob) in &dist {
        let p = crate::rational::to_f64(prob);
        let freq = counts.get(outcome).copied().unwrap_or(0) as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((freq - p).abs() <= 4.0 * sigma, "outcome {outcome:?}: {freq} vs {p}");
    }
    // no outcomes outside the exact support
    for outcome in counts.keys() {
        assert!(dist.contains_key(outcome), "stray outcome {outcome:?}");
    }
}
