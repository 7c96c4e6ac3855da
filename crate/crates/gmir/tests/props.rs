//! Property tests for the algebraic invariants.

use proptest::prelude::*;

use gmir::data::{generate_domain, split, Domain, DomainSpec, Generator};
use gmir::net::{sgd_step, GradVector, ParamVector};
use gmir::replay::interference_score;
use gmir::strategies::agem_project;

fn vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0..10.0f64, len..=len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn score_is_bounded_scale_invariant_and_antisymmetric(
        a in vector(16),
        b in vector(16),
        c in 0.01..100.0f64,
        d in 0.01..100.0f64,
    ) {
        let g = GradVector::from_values(a);
        let gi = GradVector::from_values(b);
        if let Some(score) = interference_score(&g, &gi) {
            prop_assert!(score.abs() <= 1.0 + 1e-12);

            let mut gc = g.clone();
            gc.scale(c);
            let mut gid = gi.clone();
            gid.scale(d);
            let scaled = interference_score(&gc, &gid);
            if let Some(scaled) = scaled {
                prop_assert!((scaled - score).abs() < 1e-12);
            }

            let mut neg = gi.clone();
            neg.scale(-1.0);
            let flipped = interference_score(&g, &neg).unwrap();
            prop_assert!((flipped + score).abs() < 1e-12);
        }
    }

    #[test]
    fn agem_projection_never_conflicts(a in vector(12), b in vector(12)) {
        let g = GradVector::from_values(a);
        let g_ref = GradVector::from_values(b);
        let out = agem_project(&g, &g_ref);
        prop_assert!(out.dot(&g_ref) >= -1e-10);
        if g.dot(&g_ref) >= 0.0 {
            prop_assert_eq!(&out, &g);
        }
    }

    #[test]
    fn sgd_step_is_elementwise_axpy(p in vector(20), g in vector(20), lr in 0.0..1.0f64) {
        let params = ParamVector::from_values(p.clone());
        let grad = GradVector::from_values(g.clone());
        let stepped = sgd_step(&params, &grad, lr);
        for i in 0..p.len() {
            prop_assert_eq!(stepped.values()[i], p[i] - lr * g[i]);
        }
    }

    #[test]
    fn splits_partition_any_dataset(
        size in 40usize..400,
        gen_seed in 0u64..500,
        split_seed in 0u64..500,
    ) {
        let spec = DomainSpec {
            generator: Generator::TwoMoons,
            offset: [0.0, 0.0],
            rotation: 0.0,
            sigma: 0.2,
            size,
            seed: gen_seed,
        };
        let d = generate_domain(&spec, Domain::Old, 7).unwrap();
        let (train, val, test) = split(&d, (0.6, 0.15, 0.25), split_seed).unwrap();

        use std::collections::BTreeSet;
        let union: BTreeSet<u64> = train.ids().chain(val.ids()).chain(test.ids()).collect();
        let original: BTreeSet<u64> = d.ids().collect();
        prop_assert_eq!(union.len(), train.len() + val.len() + test.len()); // disjoint
        prop_assert_eq!(union, original); // covering

        // sizes within one sample of the exact proportions
        prop_assert!((train.len() as f64 - 0.6 * size as f64).abs() <= 1.0);
        prop_assert!((val.len() as f64 - 0.15 * size as f64).abs() <= 1.0);
        prop_assert!((test.len() as f64 - 0.25 * size as f64).abs() <= 1.0);
    }

    #[test]
    fn random_buffers_are_unique_and_in_pool(
        size in 20usize..120,
        k_frac in 0.05..1.0f64,
        seed in 0u64..1000,
    ) {
        let spec = DomainSpec {
            generator: Generator::GaussianClusters,
            offset: [0.0, 0.0],
            rotation: 0.0,
            sigma: 0.3,
            size,
            seed,
        };
        let pool = generate_domain(&spec, Domain::Old, 0).unwrap();
        let k = ((k_frac * size as f64) as usize).max(1);
        let buf = gmir::replay::random_select(&pool, k, seed, 0).unwrap();
        prop_assert_eq!(buf.sample_ids.len(), k);
        let unique: std::collections::BTreeSet<u64> = buf.sample_ids.iter().copied().collect();
        prop_assert_eq!(unique.len(), k);
        prop_assert!(buf.sample_ids.iter().all(|&id| pool.contains_id(id)));
    }
}
