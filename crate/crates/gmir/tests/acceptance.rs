//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! Oracles here are written independently of the library code paths they
//! check: finite differences for gradients, naive score-and-sort for the
//! selectors, closed-form arithmetic for the transfer metrics.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gmir::config::ExperimentConfig;
use gmir::data::{generate_domain, Dataset, Domain, DomainSpec, Generator};
use gmir::experiment::run_experiment;
use gmir::metrics::{time_reduction, transfer_metrics, DomainResult};
use gmir::net::{self, init_params, Activation, GradVector, ModelConfig, ParamVector};
use gmir::replay::{
    average_new_domain_gradient, gmir_select, interference_score,
};
use gmir::report::ExperimentReport;
use gmir::strategies::{
    agem_project, ewc_fisher, ewc_penalty_grad, gss_select, mir_epoch_select, StrategyConfig,
    StrategyKind,
};
use gmir::trainer::{finetune, pretrain, train_scratch, TrainConfig};

fn pass(criterion: u32, what: &str) {
    println!("acceptance criterion {criterion:2}: PASS - {what}");
}

// --- shared fixtures -------------------------------------------------------

fn moons(size: usize, seed: u64, rotation: f64, sigma: f64, domain: Domain, first_id: u64) -> Dataset {
    generate_domain(
        &DomainSpec {
            generator: Generator::TwoMoons,
            offset: [0.0, 0.0],
            rotation,
            sigma,
            size,
            seed,
        },
        domain,
        first_id,
    )
    .unwrap()
}

fn random_params(config: &ModelConfig, rng: &mut ChaCha8Rng) -> ParamVector {
    let values = (0..config.param_count())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    ParamVector::from_values(values)
}

fn random_gv(len: usize, rng: &mut ChaCha8Rng) -> GradVector {
    GradVector::from_values((0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// Test-local cosine; the oracle side of every selector check.
fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// The default two-domain task at full size, as in configs/default.toml.
fn default_task_config(strategies: &str, seeds: &str) -> ExperimentConfig {
    let text = format!(
        r#"
        [data.old]
        generator = "two-moons"
        size = 3631
        seed = 11
        sigma = 0.15

        [data.new]
        generator = "two-moons"
        size = 3365
        seed = 12
        sigma = 0.225
        rotation_deg = 30.0

        [data]
        split_seed = 13

        [experiment]
        seeds = {seeds}
        {strategies}
        "#
    );
    toml::from_str(&text).expect("fixture config parses")
}

/// Criteria 8-10 share one multi-seed experiment.
fn behavioral_report() -> &'static ExperimentReport {
    static REPORT: OnceLock<ExperimentReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let config = default_task_config(
            r#"
            [[strategies]]
            kind = "naive"

            [[strategies]]
            kind = "fixed-sampling"

            [[strategies]]
            kind = "random-resampling"

            [[strategies]]
            kind = "gmir"
            "#,
            "[1, 2, 3, 4, 5]",
        );
        run_experiment(&config, 1).expect("behavioral experiment runs").report
    })
}

// 1 ------------------------------------------------------------------------

#[test]
fn criterion_01_gradient_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let configs = [
        ModelConfig::default(),
        ModelConfig {
            input_dim: 3,
            hidden_dims: vec![5, 4],
            num_classes: 3,
            activation: Activation::Tanh,
        },
        ModelConfig {
            input_dim: 2,
            hidden_dims: vec![7],
            num_classes: 2,
            activation: Activation::Tanh,
        },
    ];
    let h = 1e-5;
    let mut draws = 0;
    while draws < 21 {
        let config = &configs[draws % configs.len()];
        let params = random_params(config, &mut rng);
        let sample = gmir::data::Sample {
            id: 0,
            features: (0..config.input_dim)
                .map(|_| rng.random_range(-1.5..1.5))
                .collect(),
            label: rng.random_range(0..config.num_classes),
            domain: Domain::Old,
        };
        let analytic = net::grad(config, &params, &[&sample]).unwrap();
        for i in 0..params.len() {
            let mut plus = params.values().to_vec();
            plus[i] += h;
            let mut minus = params.values().to_vec();
            minus[i] -= h;
            let lp = net::sample_loss(config, &ParamVector::from_values(plus), &sample).unwrap();
            let lm = net::sample_loss(config, &ParamVector::from_values(minus), &sample).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let g = analytic.values()[i];
            let denom = g.abs().max(fd.abs());
            if denom > 1e-7 {
                assert!(
                    ((g - fd) / denom).abs() < 1e-4,
                    "draw {draws} coord {i}: analytic {g} vs fd {fd}"
                );
            } else {
                assert!((g - fd).abs() < 1e-7, "draw {draws} coord {i}: {g} vs {fd}");
            }
        }
        draws += 1;
    }
    pass(1, "21 random (params, sample) draws match central finite differences");
}

// 2 ------------------------------------------------------------------------

#[test]
fn criterion_02_interference_score_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let len = rng.random_range(2..40);
        let g = random_gv(len, &mut rng);
        let gi = random_gv(len, &mut rng);
        let Some(score) = interference_score(&g, &gi) else {
            continue;
        };
        assert!(score.abs() <= 1.0 + 1e-12, "bounds violated: {score}");
        // scale invariance for positive scales
        let (c, d) = (rng.random_range(0.1..10.0), rng.random_range(0.1..10.0));
        let mut gc = g.clone();
        gc.scale(c);
        let mut gid = gi.clone();
        gid.scale(d);
        let scaled = interference_score(&gc, &gid).unwrap();
        assert!((scaled - score).abs() < 1e-12, "scale invariance: {score} vs {scaled}");
        // sign antisymmetry
        let mut neg = gi.clone();
        neg.scale(-1.0);
        let flipped = interference_score(&g, &neg).unwrap();
        assert!((flipped + score).abs() < 1e-12, "antisymmetry: {score} vs {flipped}");
    }
    let g = GradVector::from_values(vec![0.3, -1.2, 0.8]);
    assert!((interference_score(&g, &g).unwrap() + 1.0).abs() < 1e-12);
    let mut neg = g.clone();
    neg.scale(-2.5);
    assert!((interference_score(&g, &neg).unwrap() - 1.0).abs() < 1e-12);
    let a = GradVector::from_values(vec![1.0, 0.0]);
    let b = GradVector::from_values(vec![0.0, 1.0]);
    assert!(interference_score(&a, &b).unwrap().abs() < 1e-12);
    pass(2, "score bounds, scale invariance, antisymmetry and cosine cases hold");
}

// 3 ------------------------------------------------------------------------

#[test]
fn criterion_03_gmir_oracle_equivalence() {
    let config = ModelConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for instance in 0..10u64 {
        let pool = moons(50, 100 + instance, 0.3, 0.25, Domain::Old, 0);
        let new = moons(40, 200 + instance, 0.8, 0.25, Domain::New, 1000);
        let params = random_params(&config, &mut rng);

        // brute-force oracle: every score naively, full sort, top 5
        let brute = |g: &GradVector| -> Vec<u64> {
            let mut scored: Vec<(f64, u64)> = pool
                .samples()
                .iter()
                .map(|s| {
                    let gi = net::grad(&config, &params, &[s]).unwrap();
                    (-cosine(g.values(), gi.values()), s.id)
                })
                .collect();
            scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            let mut ids: Vec<u64> = scored.iter().take(5).map(|(_, id)| *id).collect();
            ids.sort_unstable();
            ids
        };

        // GMIR driven by a random update gradient
        let g = random_gv(config.param_count(), &mut rng);
        let buf = gmir_select(&g, &config, &params, &pool, 5, 0, 1).unwrap();
        let mut got = buf.sample_ids.clone();
        got.sort_unstable();
        assert_eq!(got, brute(&g), "gmir instance {instance}");

        // GMIR+ driven by the averaged new-domain gradient
        let mut avg = vec![0.0; config.param_count()];
        for s in new.samples() {
            let gi = net::grad(&config, &params, &[s]).unwrap();
            for (a, v) in avg.iter_mut().zip(gi.values()) {
                *a += v / new.len() as f64;
            }
        }
        let g_plus = average_new_domain_gradient(&config, &params, &new).unwrap();
        for (a, b) in avg.iter().zip(g_plus.values()) {
            assert!((a - b).abs() < 1e-12, "averaged gradient mismatch");
        }
        let buf_plus = gmir_select(&g_plus, &config, &params, &pool, 5, 0, 1).unwrap();
        let mut got_plus = buf_plus.sample_ids.clone();
        got_plus.sort_unstable();
        assert_eq!(got_plus, brute(&g_plus), "gmir+ instance {instance}");
    }
    pass(3, "gmir and gmir+ match the brute-force score-and-sort oracle on 10 instances");
}

// 4 ------------------------------------------------------------------------

#[test]
fn criterion_04_mir_and_gss_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);

    // MIR-epoch vs a brute-force delta sort, 50-sample ledgers
    for instance in 0..8 {
        let ids: Vec<u64> = (0..50).map(|i| i * 3 + 1).collect();
        let prev: BTreeMap<u64, f64> = ids
            .iter()
            .map(|&id| (id, rng.random_range(0.0..2.0)))
            .collect();
        let curr: BTreeMap<u64, f64> = ids
            .iter()
            .map(|&id| (id, rng.random_range(0.0..2.0)))
            .collect();
        let k = 7;
        let buf = mir_epoch_select(&prev, &curr, k, 0).unwrap();
        let mut deltas: Vec<(f64, u64)> =
            ids.iter().map(|&id| (curr[&id] - prev[&id], id)).collect();
        deltas.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut want: Vec<u64> = deltas.iter().take(k).map(|(_, id)| *id).collect();
        want.sort_unstable();
        let mut got = buf.sample_ids.clone();
        got.sort_unstable();
        assert_eq!(got, want, "mir instance {instance}");
    }

    // GSS at param_fraction = 1.0 vs an O(n^2) pairwise oracle
    let config = ModelConfig::default();
    for instance in 0..6u64 {
        let pool = moons(30, 300 + instance, 0.2, 0.3, Domain::Old, 0);
        let params = random_params(&config, &mut rng);
        let k = 6;
        let buf = gss_select(&config, &params, &pool, k, 1.0, 9, 0).unwrap();

        let grads: Vec<Vec<f64>> = pool
            .samples()
            .iter()
            .map(|s| net::grad(&config, &params, &[s]).unwrap().values().to_vec())
            .collect();
        let mut scored: Vec<(f64, u64)> = Vec::new();
        for (i, s) in pool.samples().iter().enumerate() {
            let max_sim = (0..grads.len())
                .filter(|&j| j != i)
                .map(|j| cosine(&grads[i], &grads[j]))
                .fold(f64::NEG_INFINITY, f64::max);
            scored.push((max_sim, s.id));
        }
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut want: Vec<u64> = scored.iter().take(k).map(|(_, id)| *id).collect();
        want.sort_unstable();
        let mut got = buf.sample_ids.clone();
        got.sort_unstable();
        assert_eq!(got, want, "gss instance {instance}");
    }
    pass(4, "mir-epoch and gss match their brute-force oracles exactly");
}

// 5 ------------------------------------------------------------------------

#[test]
fn criterion_05_agem_projection_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for trial in 0..1000 {
        let len = rng.random_range(2..50);
        let g = random_gv(len, &mut rng);
        let g_ref = random_gv(len, &mut rng);
        let out = agem_project(&g, &g_ref);
        assert!(
            out.dot(&g_ref) >= -1e-10,
            "trial {trial}: projected dot {}",
            out.dot(&g_ref)
        );
        if g.dot(&g_ref) >= 0.0 {
            assert_eq!(out, g, "trial {trial}: no-op case must be bitwise");
        }
        let again = agem_project(&out, &g_ref);
        for (a, b) in out.values().iter().zip(again.values()) {
            assert!((a - b).abs() < 1e-12, "trial {trial}: idempotence");
        }
    }
    pass(5, "1000 random pairs satisfy the projection contract and idempotence");
}

// 6 ------------------------------------------------------------------------

#[test]
fn criterion_06_ewc_penalty() {
    assert_eq!(StrategyConfig::new(StrategyKind::Ewc).ewc_lambda, 0.4);

    let config = ModelConfig::default();
    let anchor = init_params(&config, 77).unwrap();
    let pool = moons(40, 6, 0.0, 0.2, Domain::Old, 0);
    let fisher = ewc_fisher(&config, &anchor, &pool).unwrap();

    let at_anchor = ewc_penalty_grad(&anchor, &fisher, 0.4);
    assert!(at_anchor.values().iter().all(|&v| v == 0.0), "nonzero at anchor");

    let moved = init_params(&config, 78).unwrap();
    let lambda = 0.4;
    let g = ewc_penalty_grad(&moved, &fisher, lambda);
    let penalty = |values: &[f64]| -> f64 {
        0.5 * lambda
            * values
                .iter()
                .zip(fisher.reference_params())
                .zip(fisher.values())
                .map(|((p, p_star), f)| f * (p - p_star) * (p - p_star))
                .sum::<f64>()
    };
    // quadratic penalty: central differences are truncation-free
    let h = 1e-3;
    for i in 0..moved.len() {
        let mut plus = moved.values().to_vec();
        plus[i] += h;
        let mut minus = moved.values().to_vec();
        minus[i] -= h;
        let fd = (penalty(&plus) - penalty(&minus)) / (2.0 * h);
        let gi = g.values()[i];
        let denom = gi.abs().max(fd.abs());
        if denom > 1e-10 {
            assert!(((gi - fd) / denom).abs() < 1e-6, "coord {i}: {gi} vs {fd}");
        } else {
            assert!((gi - fd).abs() < 1e-10);
        }
    }
    pass(6, "ewc penalty gradient is zero at the anchor and matches finite differences");
}

// 7 ------------------------------------------------------------------------

#[test]
fn criterion_07_published_transfer_arithmetic() {
    let lb_old = 43.85;
    let lb_new = 43.12;
    // (label, old, new, printed bwt, printed fwt)
    let rows = [
        ("naive", 42.81, 43.26, -1.04, 0.14),
        ("low-lr", 43.51, 43.63, -0.34, 0.51),
        ("ewc", 43.06, 43.06, -0.79, -0.06),
        ("mir", 43.85, 43.42, 0.00, 0.30),
        ("agem", 43.94, 43.45, 0.09, 0.33),
        ("agem-plus", 43.75, 43.65, -0.10, 0.53),
        ("gss", 43.21, 43.39, -0.64, 0.27),
        ("fixed-sampling", 43.16, 43.38, -0.69, 0.26),
        ("random-resampling", 42.72, 43.19, -1.13, 0.07),
        ("gmir", 44.88, 43.81, 1.03, 0.69),
        ("gmir-plus", 44.10, 44.28, 0.25, 1.16),
    ];
    let tol = 0.005 + 1e-9; // printing precision
    for (label, old, new, bwt, fwt) in rows {
        let t = transfer_metrics(
            &DomainResult {
                run_label: label.to_string(),
                old_metric: old,
                new_metric: new,
            },
            lb_old,
            lb_new,
        );
        assert!(
            (t.backward_transfer - bwt).abs() <= tol,
            "{label}: bwt {} vs printed {bwt}",
            t.backward_transfer
        );
        assert!(
            (t.forward_transfer - fwt).abs() <= tol,
            "{label}: fwt {} vs printed {fwt}",
            t.forward_transfer
        );
    }

    // training-time reductions relative to the 16.0h scratch baseline
    for (hours, printed) in [
        (13.4, 16.25),
        (20.2, -26.25),
        (11.2, 30.0),
        (11.6, 27.5),
        (14.9, 6.88),
        (8.6, 46.25),
    ] {
        let r = time_reduction(16.0, hours).unwrap();
        assert!((r - printed).abs() <= tol, "{hours}h: {r} vs printed {printed}");
    }
    pass(7, "published transfer values and time reductions reproduce exactly");
}

// 8 ------------------------------------------------------------------------

#[test]
fn criterion_08_naive_finetuning_forgets() {
    let report = behavioral_report();
    let naive = report.row("naive").expect("naive row");
    let bwt = naive.backward_transfer.expect("transfer present");
    assert!(
        bwt.mean < 0.0,
        "naive mean BWT {} is not negative over {} seeds",
        bwt.mean,
        report.seeds.len()
    );
    pass(8, "naive finetuning shows forgetting (mean BWT < 0 over 5 seeds)");
}

// 9 ------------------------------------------------------------------------

/// Paired mean difference and its standard error over shared seeds.
fn paired_bwt_diff(report: &ExperimentReport, a: &str, b: &str) -> (f64, f64) {
    let row_a = report.row(a).unwrap();
    let row_b = report.row(b).unwrap();
    let diffs: Vec<f64> = row_a
        .per_seed
        .iter()
        .zip(&row_b.per_seed)
        .map(|(x, y)| {
            assert_eq!(x.seed, y.seed);
            x.backward_transfer.unwrap() - y.backward_transfer.unwrap()
        })
        .collect();
    let (mean, std) = gmir::metrics::mean_std(&diffs);
    (mean, std / (diffs.len() as f64).sqrt())
}

#[test]
fn criterion_09_gmir_mitigates_forgetting() {
    let report = behavioral_report();
    let (d_naive, se_naive) = paired_bwt_diff(report, "gmir", "naive");
    assert!(
        d_naive > se_naive,
        "BWT(gmir) - BWT(naive) = {d_naive:.3} does not exceed one se ({se_naive:.3})"
    );
    let (d_rand, se_rand) = paired_bwt_diff(report, "gmir", "random-resampling");
    assert!(
        d_rand > se_rand,
        "BWT(gmir) - BWT(random) = {d_rand:.3} does not exceed one se ({se_rand:.3})"
    );
    pass(9, "gmir beats naive and random resampling on BWT by more than one se");
}

// 10 -----------------------------------------------------------------------

#[test]
fn criterion_10_gmir_mean_weak_dominance() {
    let report = behavioral_report();
    let gmir_mean = report.row("gmir").unwrap().mean_metric.mean;
    let fixed_mean = report.row("fixed-sampling").unwrap().mean_metric.mean;
    assert!(
        gmir_mean >= fixed_mean - 0.5,
        "gmir mean {gmir_mean:.2} below fixed-sampling {fixed_mean:.2} - 0.5"
    );
    pass(10, "gmir both-domain mean is within 0.5 of fixed-sampling or better");
}

// 11 -----------------------------------------------------------------------

#[test]
fn criterion_11_work_counter_scaling() {
    let config = default_task_config("", "[1]");
    let data = gmir::experiment::SplitData::build(&config, Some(1)).unwrap();
    let train_cfg = TrainConfig {
        model: config.model.clone(),
        epochs: 80,
        batch_size: 8,
        lr: 0.01,
        seed: gmir::seeds::derive(1, "train", 0),
        eval_every: 5,
    };
    let pre = pretrain(&train_cfg, &data.old_train, &data.old_val).unwrap();

    let mut gmir_full = StrategyConfig::new(StrategyKind::Gmir);
    gmir_full.d_fraction = 1.0;
    let mut gmir_fifth = gmir_full.clone();
    gmir_fifth.d_fraction = 0.2;

    let run = |s: &StrategyConfig| {
        finetune(
            &train_cfg,
            s,
            &pre.best,
            &data.new_train,
            &data.new_val,
            &data.old_train,
            &data.old_val,
            1,
        )
        .unwrap()
    };
    let full = run(&gmir_full);
    let fifth = run(&gmir_fifth);

    let events = full.ledger.resample_events;
    assert_eq!(events, fifth.ledger.resample_events);
    assert!(events > 0);
    // scoring work scales linearly in d_fraction, within one sample per event
    let expected = 0.2 * full.ledger.scoring_sample_grads as f64;
    let got = fifth.ledger.scoring_sample_grads as f64;
    assert!(
        (got - expected).abs() <= events as f64,
        "scoring at D=20% is {got}, expected {expected} +- {events}"
    );

    // and GMIR(D=20%) does strictly less total gradient work than scratch-all
    let all_train = gmir::data::merge(&data.old_train, &data.new_train).unwrap();
    let scratch_all = train_scratch(
        &train_cfg,
        &all_train,
        &[&data.old_val, &data.new_val],
        "scratch-all",
    )
    .unwrap();
    assert!(
        fifth.ledger.total_gradient_work() < scratch_all.ledger.train_sample_grads,
        "gmir(D=20%) work {} not below scratch-all {}",
        fifth.ledger.total_gradient_work(),
        scratch_all.ledger.train_sample_grads
    );
    pass(11, "scoring work scales with D and gmir(D=20%) undercuts scratch-all");
}

// 12 -----------------------------------------------------------------------

#[test]
fn criterion_12_resampling_schedule() {
    let old = moons(500, 21, 0.0, 0.15, Domain::Old, 0);
    let new = moons(465, 22, 0.52, 0.225, Domain::New, 10_000);
    let (old_train, old_val, _) = gmir::data::split(&old, (0.6, 0.15, 0.25), 1).unwrap();
    let (new_train, new_val, _) = gmir::data::split(&new, (0.6, 0.15, 0.25), 2).unwrap();
    let cfg = TrainConfig {
        model: ModelConfig::default(),
        epochs: 80,
        batch_size: 8,
        lr: 0.01,
        seed: 5,
        eval_every: 10,
    };
    let pre = pretrain(&cfg, &old_train, &old_val).unwrap();
    let run = |kind: StrategyKind| {
        let mut s = StrategyConfig::new(kind);
        s.n_resample = 10;
        finetune(&cfg, &s, &pre.best, &new_train, &new_val, &old_train, &old_val, 1).unwrap()
    };

    let gmir_out = run(StrategyKind::Gmir);
    let fired: Vec<usize> = gmir_out.log.resample_records().map(|r| r.epoch).collect();
    assert_eq!(fired, vec![10, 20, 30, 40, 50, 60, 70], "gmir schedule");

    let fixed_out = run(StrategyKind::FixedSampling);
    assert_eq!(fixed_out.ledger.resample_events, 0, "fixed-sampling events");

    let mir_out = run(StrategyKind::MirEpoch);
    assert_eq!(mir_out.ledger.resample_events, 80, "mir-epoch fires once per epoch");
    pass(12, "gmir fires at multiples of 10 before the end; fixed 0; mir 80/80");
}

// 13 -----------------------------------------------------------------------

#[test]
fn criterion_13_end_to_end_determinism() {
    let config: ExperimentConfig = toml::from_str(
        r#"
        [data.old]
        generator = "two-moons"
        size = 120
        sigma = 0.15

        [data.new]
        generator = "two-moons"
        size = 110
        sigma = 0.225
        rotation_deg = 30.0

        [pretrain]
        epochs = 8
        eval_every = 4

        [finetune]
        epochs = 12
        eval_every = 4

        [experiment]
        seeds = [3, 4]

        [[strategies]]
        kind = "gmir"
        k = 5
        n_resample = 4

        [[strategies]]
        kind = "agem"
        k = 5

        [[strategies]]
        kind = "ewc"
        "#,
    )
    .unwrap();
    let a = run_experiment(&config, 1).unwrap();
    let b = run_experiment(&config, 1).unwrap();
    assert_eq!(a.report.to_json(), b.report.to_json(), "report.json differs");
    assert_eq!(a.report.render_text(), b.report.render_text(), "report.txt differs");
    for (ra, rb) in a.runs.iter().zip(&b.runs) {
        assert_eq!(
            serde_json::to_string(&ra.log).unwrap(),
            serde_json::to_string(&rb.log).unwrap(),
            "run log differs for {}",
            ra.label
        );
        assert_eq!(ra.checkpoint, rb.checkpoint, "checkpoint differs for {}", ra.label);
    }
    pass(13, "identical config and seeds give bitwise-identical reports");
}
