//! Acceptance suite: every representation guarantee checked end to end.
//!
//! Each test prints a single PASS/FAIL line for its criterion (run with
//! `--nocapture` to see them stream) and fails loudly with the offending
//! statistic otherwise. All seeds are fixed, so the suite is deterministic.

use fedassembly::instance::{
    appendix_c_fixture, generate_instance, generate_instance_with, generate_laminar_instance,
    generate_semilaminar_instance, Classification, GeneratorConfig, Instance,
};
use fedassembly::optimizer::{
    column_generation, feasibility_oracle, sample_from_randomized, ExAnteTargets,
    OptimizeOutcome, OracleVerdict,
};
use fedassembly::rational::{rat, to_f64, Rational};
use fedassembly::rounding::{
    distribution_expectations, fixed_sum_problem, ConstraintSet, Group, RoundingProblem,
};
use fedassembly::selection::{
    failure_probability_bound, priority_draw_succeeds, select_priority,
    select_priority_with_restart, LaminarSelector, SemiLaminarSelector,
};
use fedassembly::verifier::{
    exact_rounding_check, monte_carlo_ex_ante, monte_carlo_ex_ante_with, EdgeSlack,
    ExPostChecker, McConfig, VerificationReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

const MC_TRIALS: u64 = 1_000_000;
const TOLERANCE: f64 = 1e-3;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("{} criterion {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion}: {detail}");
}

/// General instances whose every class holds at least `n` people.
fn compliant_general_instances(count: usize, n: u64, base_seed: u64) -> Vec<Instance> {
    let config = GeneratorConfig { mean_class_size: 30.0, min_class_size: n };
    (0..count as u64)
        .map(|i| generate_instance_with(&config, 3 + (i as usize % 3), 2 + (i as usize % 3), base_seed + i))
        .collect()
}

/// General instances where populations can seat `n` but classes may be
/// smaller, so the restart path is exercised.
fn restartable_general_instances(count: usize, n: u64, base_seed: u64) -> Vec<Instance> {
    let config = GeneratorConfig { mean_class_size: 20.0, min_class_size: 1 };
    let mut out = Vec::new();
    let mut seed = base_seed;
    while out.len() < count {
        let candidate =
            generate_instance_with(&config, 2 + (seed as usize % 4), 2 + (seed as usize % 3), seed);
        seed += 1;
        if candidate.nodes().all(|v| candidate.population(v) >= n) {
            out.push(candidate);
        }
    }
    out
}

fn laminar_instances(count: usize, n: u64, base_seed: u64) -> Vec<Instance> {
    (0..count as u64)
        .map(|i| generate_laminar_instance(3 + (i as usize % 4), n, 8 * n, base_seed + i))
        .collect()
}

fn semilaminar_instances(count: usize, n: u64, base_seed: u64) -> Vec<Instance> {
    (0..count as u64).map(|i| generate_semilaminar_instance(n, base_seed + i)).collect()
}

fn tiny_optimizer_instances(count: usize, n: u64, base_seed: u64) -> Vec<Instance> {
    let mut out = Vec::new();
    let mut seed = base_seed;
    while out.len() < count {
        let candidate = generate_instance(2 + (seed as usize % 2), 2, seed);
        seed += 1;
        if candidate.nodes().all(|v| candidate.population(v) >= n) {
            out.push(candidate);
        }
    }
    out
}

struct McGroup {
    instances: Vec<Instance>,
    reports: Vec<VerificationReport>,
    n: u64,
}

fn priority_mc() -> &'static McGroup {
    static GROUP: OnceLock<McGroup> = OnceLock::new();
    GROUP.get_or_init(|| {
        let n = 3;
        let instances = compliant_general_instances(5, n, 9100);
        let config =
            McConfig { slack: EdgeSlack::ignore_overlaps(), ..McConfig::default() };
        let reports = instances
            .iter()
            .enumerate()
            .map(|(i, instance)| {
                monte_carlo_ex_ante_with(
                    &config,
                    |rng| select_priority(instance, n, rng).map_err(|e| e.to_string()),
                    instance,
                    n,
                    MC_TRIALS,
                    9200 + i as u64,
                )
            })
            .collect();
        McGroup { instances, reports, n }
    })
}

fn laminar_mc() -> &'static McGroup {
    static GROUP: OnceLock<McGroup> = OnceLock::new();
    GROUP.get_or_init(|| {
        let n = 4;
        let instances = laminar_instances(5, n, 9300);
        let reports = instances
            .iter()
            .enumerate()
            .map(|(i, instance)| {
                let selector = LaminarSelector::new(instance, n).expect("laminar instance");
                monte_carlo_ex_ante(
                    |rng| Ok(selector.select(rng)),
                    instance,
                    n,
                    MC_TRIALS,
                    9400 + i as u64,
                )
            })
            .collect();
        McGroup { instances, reports, n }
    })
}

fn semilaminar_mc() -> &'static McGroup {
    static GROUP: OnceLock<McGroup> = OnceLock::new();
    GROUP.get_or_init(|| {
        let n = 12;
        let instances = semilaminar_instances(5, n, 9500);
        let reports = instances
            .iter()
            .enumerate()
            .map(|(i, instance)| {
                let structure = match instance.classify() {
                    Classification::SemiLaminar(s) => s,
                    _ => unreachable!("generator emits semi-laminar instances"),
                };
                let config = McConfig {
                    slack: EdgeSlack::semilaminar(instance, &structure),
                    ..McConfig::default()
                };
                let selector = SemiLaminarSelector::new(instance, n).expect("regular instance");
                monte_carlo_ex_ante_with(
                    &config,
                    |rng| selector.select(rng).map_err(|e| e.to_string()),
                    instance,
                    n,
                    MC_TRIALS,
                    9600 + i as u64,
                )
            })
            .collect();
        McGroup { instances, reports, n }
    })
}

struct OptimizerMcGroup {
    reports: Vec<VerificationReport>,
    n: u64,
}

fn optimizer_mc() -> &'static OptimizerMcGroup {
    static GROUP: OnceLock<OptimizerMcGroup> = OnceLock::new();
    GROUP.get_or_init(|| {
        let n = 2;
        let instances = tiny_optimizer_instances(5, n, 9700);
        let outcomes: Vec<OptimizeOutcome> = instances
            .iter()
            .map(|instance| {
                column_generation(instance, n, TOLERANCE, 300).expect("desk-scale convergence")
            })
            .collect();
        let reports = instances
            .iter()
            .zip(&outcomes)
            .enumerate()
            .map(|(i, (instance, outcome))| {
                monte_carlo_ex_ante(
                    |rng| Ok(sample_from_randomized(&outcome.randomized, instance, rng)),
                    instance,
                    n,
                    MC_TRIALS,
                    9800 + i as u64,
                )
            })
            .collect();
        OptimizerMcGroup { reports, n }
    })
}

// ---------------------------------------------------------------------------
// criterion 1: zero ex post violations over 10^4 draws per algorithm on 20
// instances each
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_ex_post_suite() {
    let start = Instant::now();
    let draws = 10_000u64;
    let mut violations = 0u64;
    let mut checked = 0u64;

    // priority with restarts: sizes, membership, and inheritance hold every
    // draw; overlap floors are not part of its guarantee set
    {
        let n = 3;
        for (i, instance) in restartable_general_instances(20, n, 1100).iter().enumerate() {
            let checker = ExPostChecker::new(instance, n, &EdgeSlack::ignore_overlaps());
            let mut rng = ChaCha12Rng::seed_from_u64(1200 + i as u64);
            for _ in 0..draws {
                let assignment =
                    select_priority_with_restart(instance, n, &mut rng, 100_000).unwrap();
                violations += checker.check(&assignment).len() as u64;
                checked += 1;
            }
        }
    }
    // laminar
    {
        let n = 4;
        for (i, instance) in laminar_instances(20, n, 1300).iter().enumerate() {
            let checker = ExPostChecker::new(instance, n, &EdgeSlack::none());
            let selector = LaminarSelector::new(instance, n).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(1400 + i as u64);
            for _ in 0..draws {
                let assignment = selector.select(&mut rng);
                violations += checker.check(&assignment).len() as u64;
                checked += 1;
            }
        }
    }
    // semi-laminar: slack one on region-tree edges
    {
        let n = 12;
        for (i, instance) in semilaminar_instances(20, n, 1500).iter().enumerate() {
            let structure = match instance.classify() {
                Classification::SemiLaminar(s) => s,
                _ => unreachable!("generator emits semi-laminar instances"),
            };
            let checker =
                ExPostChecker::new(instance, n, &EdgeSlack::semilaminar(instance, &structure));
            let selector = SemiLaminarSelector::new(instance, n).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(1600 + i as u64);
            for _ in 0..draws {
                let assignment = selector.select(&mut rng).unwrap();
                violations += checker.check(&assignment).len() as u64;
                checked += 1;
            }
        }
    }
    // optimizer-sampled
    {
        let n = 2;
        for (i, instance) in tiny_optimizer_instances(20, n, 1700).iter().enumerate() {
            let checker = ExPostChecker::new(instance, n, &EdgeSlack::none());
            let outcome = column_generation(instance, n, TOLERANCE, 300).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(1800 + i as u64);
            for _ in 0..draws {
                let assignment = sample_from_randomized(&outcome.randomized, instance, &mut rng);
                violations += checker.check(&assignment).len() as u64;
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "1 (ex post suite)",
        violations == 0 && elapsed < 300.0,
        &format!("{checked} draws across 80 instances, {violations} violations, {elapsed:.1}s"),
    );
}

// ---------------------------------------------------------------------------
// criterion 2: individual representation within 4 sigma at every node
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_individual_representation() {
    let mut bad = Vec::new();
    let mut statistics = 0usize;
    for (label, group) in
        [("priority", priority_mc()), ("laminar", laminar_mc()), ("semilaminar", semilaminar_mc())]
    {
        for (i, mc) in group.reports.iter().enumerate() {
            assert!(mc.clean(), "{label} instance {i} had failures or violations");
            for row in &mc.class_frequencies {
                statistics += 1;
                if !row.within_band {
                    bad.push(format!(
                        "{label} instance {i} node {} class {}: {} vs {} (band {})",
                        row.node, row.class, row.frequency, row.target, row.band
                    ));
                }
            }
        }
    }
    report(
        "2 (individual representation)",
        bad.is_empty(),
        &format!("{statistics} class frequencies over 15 instances x 10^6 draws {bad:?}"),
    );
}

// ---------------------------------------------------------------------------
// criterion 3: ex ante child representation
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_ex_ante_child_representation() {
    let mut bad = Vec::new();
    let mut statistics = 0usize;
    // the selection algorithms hit the population-share target exactly
    for (label, group, equality) in [
        ("priority", priority_mc(), true),
        ("laminar", laminar_mc(), true),
        ("semilaminar", semilaminar_mc(), false),
    ] {
        for (i, mc) in group.reports.iter().enumerate() {
            for row in &mc.overlaps {
                statistics += 1;
                let ok = if equality { row.within_band } else { row.meets_floor };
                if !ok {
                    bad.push(format!(
                        "{label} instance {i} edge {}->{}: mean {} vs {}/{} (band {})",
                        row.federation,
                        row.child,
                        row.mean,
                        row.equality_target,
                        row.floor_target,
                        row.band
                    ));
                }
            }
        }
    }
    // optimizer output promises the floors up to the convergence tolerance
    let group = optimizer_mc();
    for (i, mc) in group.reports.iter().enumerate() {
        let allowance = TOLERANCE * group.n as f64;
        for row in &mc.overlaps {
            statistics += 1;
            if row.mean < row.floor_target - row.band - allowance {
                bad.push(format!(
                    "optimizer instance {i} edge {}->{}: mean {} below floor {}",
                    row.federation, row.child, row.mean, row.floor_target
                ));
            }
        }
    }
    report(
        "3 (ex ante child representation)",
        bad.is_empty(),
        &format!("{statistics} overlap means over 20 instances {bad:?}"),
    );
}

// ---------------------------------------------------------------------------
// criterion 4: rounding oracle equivalence on >= 50 problems
// ---------------------------------------------------------------------------

fn random_rounding_problem(seed: u64) -> RoundingProblem {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // up to 6 coordinates, counting the padding one added below
    let k = 2 + (seed % 4) as usize;
    let denominator = 2 + (seed % 5) as i64;
    let marginals: Vec<Rational> = (0..k)
        .map(|_| rat(rng.random_range(0..3 * denominator), denominator))
        .collect();
    match seed % 3 {
        0 => {
            // fixed sum: pad with the fractional remainder so the total is
            // integral
            let total: Rational = marginals.iter().cloned().sum();
            let pad = total.ceil() - total;
            let mut padded = marginals;
            padded.push(pad);
            fixed_sum_problem(&padded, &vec![0; padded.len()]).unwrap()
        }
        1 => {
            // nested chain in one group, full set in the other
            let mut sets: Vec<ConstraintSet> = (2..=k)
                .map(|len| ConstraintSet::both(0..len, Group::One))
                .collect();
            sets.push(ConstraintSet::both(0..k, Group::Two));
            RoundingProblem::new(marginals, sets).unwrap()
        }
        _ => {
            // disjoint pairs in one group, singletons in the other
            let mut sets: Vec<ConstraintSet> = (0..k / 2)
                .map(|p| ConstraintSet::both([2 * p, 2 * p + 1], Group::One))
                .collect();
            sets.extend((0..k).map(|i| ConstraintSet::ceil_only([i], Group::Two)));
            RoundingProblem::new(marginals, sets).unwrap()
        }
    }
}

#[test]
fn criterion_4_rounding_oracle_equivalence() {
    let problems = 50u64;
    let mc_draws = 1_000_000u64;
    let mut bad = Vec::new();
    for seed in 0..problems {
        let problem = random_rounding_problem(4000 + seed);
        let check = exact_rounding_check(&problem).unwrap();
        if !check.pass {
            bad.push(format!("problem {seed}: {:?}", check.counterexample));
            continue;
        }
        let dist = problem.exact_outcome_distribution().unwrap();
        // marginal exactness is part of exact_rounding_check; cross-check the
        // sampler against the enumerated probabilities
        let mut counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
        let mut rng = ChaCha12Rng::seed_from_u64(4100 + seed);
        for _ in 0..mc_draws {
            *counts.entry(problem.round(&mut rng)).or_default() += 1;
        }
        for outcome in counts.keys() {
            if !dist.contains_key(outcome) {
                bad.push(format!("problem {seed}: sampled {outcome:?} outside the support"));
            }
        }
        for (outcome, probability) in &dist {
            let p = to_f64(probability);
            let freq = counts.get(outcome).copied().unwrap_or(0) as f64 / mc_draws as f64;
            let sigma = (p * (1.0 - p) / mc_draws as f64).sqrt();
            if (freq - p).abs() > 4.0 * sigma {
                bad.push(format!(
                    "problem {seed} outcome {outcome:?}: {freq} vs {p} (sigma {sigma})"
                ));
            }
        }
        let expectations = distribution_expectations(&dist);
        if &expectations[..] != problem.marginals() {
            bad.push(format!("problem {seed}: expectations drifted"));
        }
    }
    report(
        "4 (rounding oracle equivalence)",
        bad.is_empty(),
        &format!("{problems} problems, 10^6 draws each {bad:?}"),
    );
}

// ---------------------------------------------------------------------------
// criterion 5: optimizer desk-scale sweep
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_optimizer_sweep() {
    let start = Instant::now();
    let per_cell = 25usize;
    let mut runs = 0usize;
    let mut converged = 0usize;
    let mut worst_deviation = 0f64;
    for &classes in &[2usize, 5] {
        for &federations in &[2usize, 5] {
            for &n in &[2u64, 5] {
                let mut produced = 0usize;
                let mut seed =
                    5000 + (classes * 1000 + federations * 100) as u64 + n * 10_000;
                while produced < per_cell {
                    let instance = generate_instance(classes, federations, seed);
                    seed += 1;
                    if instance.nodes().any(|v| instance.population(v) < n) {
                        continue;
                    }
                    produced += 1;
                    runs += 1;
                    if let Ok(outcome) = column_generation(&instance, n, TOLERANCE, 300) {
                        converged += 1;
                        assert!(
                            outcome.max_deviation <= TOLERANCE * n as f64,
                            "converged outcome exceeds the deviation bound"
                        );
                        worst_deviation = worst_deviation.max(outcome.max_deviation);
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let rate = converged as f64 / runs as f64;
    report(
        "5 (optimizer sweep)",
        rate >= 0.99 && elapsed < 1800.0,
        &format!(
            "{converged}/{runs} converged ({:.1}%), worst deviation {worst_deviation:.2e}, {elapsed:.1}s",
            rate * 100.0
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 6: the flat-federation fixture with a dominant shared class
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_fixture_feasible_and_solvable() {
    let mut bad = Vec::new();
    for n in [1u64, 2] {
        for k in [2u64, 3] {
            let instance = appendix_c_fixture(n, k);
            match feasibility_oracle(&instance, n, 1_000_000).unwrap() {
                OracleVerdict::Feasible(weights) => {
                    let total: Rational = weights.iter().cloned().sum();
                    assert_eq!(total, rat(1, 1));
                }
                OracleVerdict::Infeasible => {
                    bad.push(format!("fixture ({n},{k}): oracle says infeasible"));
                    continue;
                }
            }
            let outcome = match column_generation(&instance, n, TOLERANCE, 300) {
                Ok(outcome) => outcome,
                Err(e) => {
                    bad.push(format!("fixture ({n},{k}): solver failed: {e}"));
                    continue;
                }
            };
            // sampled output passes the ex post and ex ante criteria
            let mc = monte_carlo_ex_ante(
                |rng| Ok(sample_from_randomized(&outcome.randomized, &instance, rng)),
                &instance,
                n,
                MC_TRIALS,
                6000 + n * 10 + k,
            );
            if !mc.clean() {
                bad.push(format!(
                    "fixture ({n},{k}): {} ex post violations",
                    mc.ex_post_violations.len()
                ));
            }
            let allowance = TOLERANCE * n as f64;
            for row in &mc.class_frequencies {
                // the per-person allowance is the seat tolerance spread over
                // the class
                let class_size = instance
                    .classes()
                    .iter()
                    .enumerate()
                    .find(|(c, _)| *c == row.class)
                    .map(|(_, cl)| cl.size)
                    .unwrap() as f64;
                if (row.frequency - row.target).abs() > row.band + allowance / class_size {
                    bad.push(format!(
                        "fixture ({n},{k}) {} class {}: {} vs {}",
                        row.node, row.class, row.frequency, row.target
                    ));
                }
            }
            for row in &mc.overlaps {
                if row.mean < row.floor_target - row.band - allowance {
                    bad.push(format!(
                        "fixture ({n},{k}) edge {}->{}: {} below {}",
                        row.federation, row.child, row.mean, row.floor_target
                    ));
                }
            }
        }
    }
    report("6 (impossibility fixture)", bad.is_empty(), &format!("4 fixtures solved {bad:?}"));
}

// ---------------------------------------------------------------------------
// criterion 7: restart failure rate vs the union bound, 10^7 attempts each
// ---------------------------------------------------------------------------

/// Instances with small shared classes (sizes >= 3) inside large leaf
/// populations (>= 100 n), where internal draws can genuinely fail.
fn bound_test_instance(seed: u64, n: u64) -> Instance {
    use fedassembly::instance::{RawClass, RawInstance, RawNode};
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let big = rng.random_range(100 * n..160 * n);
    let small = rng.random_range(3u64..=4);
    let tiny = rng.random_range(3u64..=5);
    RawInstance {
        nodes: vec![
            RawNode { id: "f".into() },
            RawNode { id: "a".into() },
            RawNode { id: "b".into() },
        ],
        edges: vec![("f".into(), "a".into()), ("f".into(), "b".into())],
        classes: vec![
            RawClass { leaves: vec!["a".into()], size: big },
            RawClass { leaves: vec!["a".into(), "b".into()], size: small },
            RawClass { leaves: vec!["b".into()], size: big + tiny },
        ],
    }
    .build()
    .unwrap()
}

#[test]
fn criterion_7_failure_bound() {
    let attempts = 10_000_000u64;
    let instances: Vec<(Instance, u64)> = (0..20u64)
        .map(|i| {
            let n = if i % 2 == 0 { 2 } else { 5 };
            (bound_test_instance(7000 + i, n), n)
        })
        .collect();
    let results = std::sync::Mutex::new(Vec::new());
    let queue = std::sync::Mutex::new((0..instances.len()).collect::<Vec<_>>());
    std::thread::scope(|scope| {
        for _ in 0..std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1) {
            scope.spawn(|| loop {
                let Some(i) = queue.lock().unwrap().pop() else { return };
                let (instance, n) = &instances[i];
                let bound = failure_probability_bound(instance, *n);
                let mut rng = ChaCha12Rng::seed_from_u64(7100 + i as u64);
                let failures = (0..attempts)
                    .filter(|_| !priority_draw_succeeds(instance, *n, &mut rng))
                    .count();
                let rate = failures as f64 / attempts as f64;
                results.lock().unwrap().push((i, rate, bound));
            });
        }
    });
    let results = results.into_inner().unwrap();
    assert_eq!(results.len(), 20);
    let bad: Vec<String> = results
        .iter()
        .filter(|(_, rate, bound)| rate > bound)
        .map(|(i, rate, bound)| format!("instance {i}: rate {rate} > bound {bound}"))
        .collect();
    let max_ratio = results
        .iter()
        .filter(|(_, _, bound)| *bound > 0.0)
        .map(|(_, rate, bound)| rate / bound)
        .fold(0f64, f64::max);
    report(
        "7 (failure probability bound)",
        bad.is_empty(),
        &format!("20 instances x 10^7 attempts, worst rate/bound {max_ratio:.3} {bad:?}"),
    );
}

// ---------------------------------------------------------------------------
// criterion 8: optimizer marginals agree with the laminar algorithm
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_cross_algorithm_consistency() {
    let group = laminar_mc();
    let mut bad = Vec::new();
    let mut statistics = 0usize;
    for (i, (instance, mc)) in group.instances.iter().zip(&group.reports).enumerate() {
        let outcome = column_generation(instance, group.n, TOLERANCE, 300)
            .expect("laminar instances converge");
        let targets = ExAnteTargets::new(instance, group.n);
        let (e_class, e_overlap) = targets.expectations(instance, &outcome.randomized);
        let allowance = TOLERANCE * group.n as f64;
        // per-class marginals: the optimizer's exact expectation against the
        // Monte Carlo estimate of the selection algorithm
        for (coord, &(v, slot)) in targets.coords.iter().enumerate() {
            let class = instance.classes_of(v)[slot];
            let size = instance.class(class).size as f64;
            let optimizer_freq = e_class[coord] / size;
            let row = mc
                .class_frequencies
                .iter()
                .find(|r| r.node == instance.name(v) && r.class == class.0)
                .expect("statistic exists");
            statistics += 1;
            if (row.frequency - optimizer_freq).abs() > row.band + allowance / size {
                bad.push(format!(
                    "instance {i} node {} class {}: mc {} vs optimizer {}",
                    row.node, row.class, row.frequency, optimizer_freq
                ));
            }
        }
        for (e, &(f, c)) in targets.edges.iter().enumerate() {
            let row = mc
                .overlaps
                .iter()
                .find(|r| r.federation == instance.name(f) && r.child == instance.name(c))
                .expect("statistic exists");
            statistics += 1;
            if (row.mean - e_overlap[e]).abs() > row.band + allowance {
                bad.push(format!(
                    "instance {i} edge {}->{}: mc {} vs optimizer {}",
                    row.federation, row.child, row.mean, e_overlap[e]
                ));
            }
        }
    }
    report(
        "8 (cross-algorithm consistency)",
        bad.is_empty(),
        &format!("{statistics} marginals compared on 5 laminar instances {bad:?}"),
    );
}
