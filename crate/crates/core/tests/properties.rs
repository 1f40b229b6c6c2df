//! Randomized invariant checks across the library's building blocks.
//! Each property encodes a structural guarantee the optimizers rely on:
//! mixing matrices that are symmetric, stochastic, and contractive;
//! partitions that permute the sample set; oracles whose analytic
//! gradients match finite differences; and the strong-convexity sandwich
//! that ties the optimality gap to the mean-square error.

use nalgebra::DVector;
use proptest::prelude::*;

use peergrad::consensus::{disagreement, mix, network_mean};
use peergrad::dataset::{partition, synthetic_blobs, BlobConfig, PartitionMode};
use peergrad::objective::central_difference_gradient;
use peergrad::{
    spectral_gap, ComponentOracle, Exec, GraphKind, LogisticProblem, QuadraticProblem,
    StepSchedule, Topology, WeightMatrix, WeightRule,
};

/// Random connected topology over the generator kinds. Geometric draws
/// can come out disconnected; those cases are discarded.
fn topologies() -> impl Strategy<Value = Topology> {
    let shaped = (0..3u8, 1..20usize).prop_map(|(kind, n)| match kind {
        0 => Topology::ring(n).unwrap(),
        1 => Topology::complete(n).unwrap(),
        _ => Topology::exponential(n).unwrap(),
    });
    let geometric = (4..24usize, 0..200u64).prop_filter_map(
        "geometric draw must be connected",
        |(n, seed)| Topology::random_geometric(n, 0.7, seed).ok(),
    );
    prop_oneof![3 => shaped, 1 => geometric]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn weight_matrices_are_symmetric_stochastic_and_patterned(
        topo in topologies(),
        lazy in proptest::bool::ANY,
    ) {
        let rule = if lazy { WeightRule::LazyMetropolis } else { WeightRule::Metropolis };
        let w = WeightMatrix::build(&topo, rule).unwrap();
        let n = topo.n();
        let dense = w.to_dense();
        for i in 0..n {
            let mut row_sum = 0.0;
            for r in 0..n {
                let entry = dense[(i, r)];
                prop_assert!(entry >= 0.0, "negative weight at ({i},{r})");
                prop_assert!((entry - dense[(r, i)]).abs() < 1e-15, "asymmetric at ({i},{r})");
                if i != r && entry != 0.0 {
                    prop_assert!(topo.is_edge(i, r), "weight off the edge pattern at ({i},{r})");
                }
                row_sum += entry;
            }
            prop_assert!((row_sum - 1.0).abs() < 1e-12, "row {i} sums to {row_sum}");
            if lazy {
                prop_assert!(dense[(i, i)] >= 0.5 - 1e-15, "lazy diagonal below 1/2 at {i}");
            }
        }
        let info = spectral_gap(&w).unwrap();
        prop_assert!(info.lambda < 1.0, "non-mixing lambda {}", info.lambda);
        prop_assert!(info.lambda >= -1e-12);
    }

    #[test]
    fn mixing_preserves_the_mean_and_contracts_disagreement(
        topo in topologies(),
        dim in 1..6usize,
        seed_vals in proptest::collection::vec(-50.0..50.0f64, 1..120),
    ) {
        let w = WeightMatrix::metropolis(&topo).unwrap();
        let lambda = spectral_gap(&w).unwrap().lambda;
        let n = topo.n();
        let states: Vec<DVector<f64>> = (0..n)
            .map(|i| DVector::from_fn(dim, |l, _| seed_vals[(i * dim + l) % seed_vals.len()]))
            .collect();
        let scale = states.iter().map(|b| b.norm()).fold(1.0, f64::max);
        let before_mean = network_mean(&states);
        let before_dis = disagreement(&states);
        let mixed = mix(&w, &states, &Exec::serial()).unwrap();
        let after_mean = network_mean(&mixed);
        let after_dis = disagreement(&mixed);

        prop_assert!((&before_mean - after_mean).norm() <= 1e-12 * (1.0 + before_mean.norm()));
        // Symmetric doubly stochastic mixing contracts the deviation space
        // by lambda; the additive slack absorbs summation rounding.
        prop_assert!(after_dis <= lambda * before_dis + 1e-10 * scale);
    }

    #[test]
    fn partitions_permute_the_sample_set(
        samples in 24..160usize,
        n in 1..12usize,
        unbalanced in proptest::bool::ANY,
        seed in 0..500u64,
    ) {
        let data = synthetic_blobs(&BlobConfig {
            samples,
            dim: 3,
            separation: 2.0,
            noise: 1.0,
            seed,
        }).unwrap();
        let mode = if unbalanced {
            PartitionMode::UnbalancedSingleClass
        } else {
            PartitionMode::BalancedHomogeneous
        };
        // Single-class splits need at least one node per class worth of
        // samples on each side; the generator alternates labels so any
        // n <= samples/2 works.
        prop_assume!(!unbalanced || n >= 2);
        prop_assume!(n <= samples / 2);
        let part = partition(&data, n, mode, seed).unwrap();

        let mut seen = vec![false; samples];
        for i in 0..n {
            for &s in part.node(i) {
                prop_assert!(!seen[s], "sample {s} assigned twice");
                seen[s] = true;
            }
        }
        prop_assert!(seen.iter().all(|&b| b), "some sample was dropped");

        if unbalanced {
            for i in 0..n {
                let classes: std::collections::BTreeSet<i64> =
                    part.node(i).iter().map(|&s| data.labels[s]).collect();
                prop_assert_eq!(classes.len(), 1, "node {} mixes classes", i);
            }
        } else {
            let sizes = part.sizes();
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "balanced sizes {:?}", sizes);
        }
    }

    #[test]
    fn normalized_samples_sit_on_the_unit_sphere(
        samples in 1..60usize,
        seed in 0..300u64,
    ) {
        let data = synthetic_blobs(&BlobConfig {
            samples,
            dim: 4,
            separation: 3.0,
            noise: 0.5,
            seed,
        }).unwrap();
        let unit = data.normalize_unit().unwrap();
        for s in 0..samples {
            let norm = unit.features.row(s).norm();
            prop_assert!((norm - 1.0).abs() < 1e-12, "row {s} has norm {norm}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadratic_gradients_match_finite_differences(
        seed in 0..400u64,
        node in 0..3usize,
        j in 0..4usize,
        coords in proptest::collection::vec(-2.0..2.0f64, 3),
    ) {
        let q = QuadraticProblem::random(3, 4, 3, (0.5, 2.0), 1.0, 1.0, 0.1, seed).unwrap();
        let theta = DVector::from_vec(coords);
        let analytic = q.component_gradient(&theta, node, j);
        let numeric = central_difference_gradient(
            |t| q.component_value(t, node, j),
            &theta,
            1e-5,
        );
        prop_assert!((analytic - numeric).norm() < 1e-6);
    }

    #[test]
    fn logistic_gradients_match_finite_differences(
        seed in 0..400u64,
        node in 0..2usize,
        j in 0..5usize,
        coords in proptest::collection::vec(-1.5..1.5f64, 4),
    ) {
        let data = synthetic_blobs(&BlobConfig {
            samples: 20,
            dim: 3,
            separation: 2.0,
            noise: 1.0,
            seed,
        }).unwrap();
        let part = partition(&data, 2, PartitionMode::BalancedHomogeneous, seed).unwrap();
        let problem = LogisticProblem::new(&data, &part, 0.05).unwrap();
        let theta = DVector::from_vec(coords);
        let analytic = problem.component_gradient(&theta, node, j);
        let numeric = central_difference_gradient(
            |t| problem.component_value(t, node, j),
            &theta,
            1e-6,
        );
        prop_assert!((analytic - numeric).norm() < 1e-6);
    }

    #[test]
    fn gap_sits_inside_the_strong_convexity_sandwich(
        seed in 0..300u64,
        coords in proptest::collection::vec(-3.0..3.0f64, 3),
    ) {
        let q = QuadraticProblem::random(2, 3, 3, (0.5, 2.0), 1.0, 1.0, 0.2, seed).unwrap();
        let star = q.minimizer().unwrap();
        let f_star = q.global_value(&star);
        let sm = q.smoothness();
        let theta = DVector::from_vec(coords);
        let gap = q.global_value(&theta) - f_star;
        let d2 = (&theta - &star).norm_squared();
        let slack = 1e-9 * (1.0 + d2);
        prop_assert!(gap >= 0.5 * sm.mu * d2 - slack, "gap {gap} below mu/2 bound");
        prop_assert!(gap <= 0.5 * sm.global_l * d2 + slack, "gap {gap} above L/2 bound");
    }

    #[test]
    fn harmonic_schedules_decay_from_c(
        c in 0.01..50.0f64,
        k in 0..10_000u64,
    ) {
        let sched = StepSchedule::harmonic(c).unwrap();
        prop_assert_eq!(sched.at(0), c);
        let now = sched.at(k);
        let next = sched.at(k + 1);
        prop_assert!(now > 0.0 && next < now);
        prop_assert!((now - c / (k as f64 + 1.0)).abs() < 1e-15 * c);
    }
}

#[test]
fn exponential_graphs_match_their_documented_degree() {
    // Spot anchor for the generator family used in the figures: 16 nodes,
    // hops at every power of two below 16, so 4 neighbors per side before
    // dedup, degree 2 * 4 - 1 = 7 (the +/- 8 hop coincide).
    let t = Topology::exponential(16).unwrap();
    assert_eq!(t.kind(), GraphKind::Exponential);
    for i in 0..16 {
        assert_eq!(t.degree(i), 7, "node {i}");
    }
}
