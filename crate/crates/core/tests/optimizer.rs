use gpfree_core::data::{synth_dataset, train_test_split};
use gpfree_core::objectives::non_dominated_indices;
use gpfree_core::optimizer::{
    run_parameter_free, run_single_objective, run_steady_state_mo, Budget, Evaluator, FibonacciIterator,
    ParameterFreeConfig, RunResult, SingleObjectiveConfig, SteadyStateConfig,
};
use gpfree_core::pipeline::random_pipeline;
use gpfree_core::rng::seeded;
use gpfree_core::{Dataset, ModelKind, PenaltyWeights, Selection, SynthKind};

fn xor(n: usize) -> Dataset {
    let d = synth_dataset(SynthKind::NoisyXor, n, 0.05, 3).unwrap();
    train_test_split(&d, 0.7, 3).unwrap().0
}

fn pf(generations: usize) -> ParameterFreeConfig {
    ParameterFreeConfig {
        budget: Budget::generations(generations),
        ..Default::default()
    }
}

fn assert_monotone_hv(r: &RunResult) {
    let hv = r.trace.hv();
    assert!(hv.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{hv:?}");
}

#[test]
fn parameter_free_state_invariants() {
    let data = xor(160);
    let seq = FibonacciIterator::default();
    for seed in 0..3 {
        let r = run_parameter_free(&data, &ModelKind::ALL, &pf(12), seed).unwrap();
        let rec = &r.trace.records;
        assert_eq!(rec.len(), 13);
        assert_eq!(rec[0].mu, 2);
        assert_eq!(rec[0].max_depth, 2);
        for w in rec.windows(2) {
            assert_eq!(w[1].lambda, seq.prev(w[0].mu));
            assert_eq!(w[1].evaluations, w[1].lambda);
        }
        for g in rec {
            assert!(seq.contains(g.mu) && g.mu >= 2);
            assert!((g.cross_rate + g.mut_rate - 1.0).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&g.cross_rate));
            assert!(g.max_depth <= 6);
        }
        assert_eq!(r.evaluations, rec.iter().map(|g| g.evaluations).sum::<usize>());
        assert!(r.final_state.max_std >= r.final_state.current_std);
        assert_monotone_hv(&r);
    }
}

#[test]
fn seeded_runs_are_reproducible() {
    let data = xor(120);
    let a = run_parameter_free(&data, &ModelKind::ALL, &pf(6), 11).unwrap();
    let b = run_parameter_free(&data, &ModelKind::ALL, &pf(6), 11).unwrap();
    let strip = |r: &RunResult| {
        let mut recs = r.trace.records.clone();
        recs.iter_mut().for_each(|g| g.elapsed_s = None);
        recs
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(a.archive.entries().len(), b.archive.entries().len());
    for (x, y) in a.archive.entries().iter().zip(b.archive.entries()) {
        assert_eq!((&x.key, x.objectives), (&y.key, y.objectives));
    }
}

#[test]
fn batch_evaluation_matches_sequential() {
    let data = xor(120);
    let ev = Evaluator::new(&data, 1, false).unwrap();
    let mut rng = seeded(4);
    let graphs: Vec<_> = (0..16)
        .map(|_| random_pipeline(&ModelKind::ALL, data.task, 3, &mut rng).unwrap())
        .collect();
    let seeds: Vec<u64> = (0..16).collect();
    let par = ev.evaluate_batch(&graphs, &seeds).unwrap();
    let seq = ev.evaluate_batch_sequential(&graphs, &seeds).unwrap();
    for (p, s) in par.iter().zip(&seq) {
        assert_eq!((&p.key, p.objectives), (&s.key, s.objectives));
    }
}

#[test]
fn zero_generations_keeps_initial_front() {
    let data = xor(100);
    let cfg = SteadyStateConfig {
        budget: Budget::generations(0),
        ..Default::default()
    };
    let r = run_steady_state_mo(&data, &ModelKind::ALL, &cfg, 2).unwrap();
    assert_eq!(r.trace.len(), 1);
    assert_eq!(r.population.len(), 20);
    let pts: Vec<Vec<f64>> = r.population.iter().map(|m| m.objectives.values()).collect();
    let mut expected: Vec<_> = non_dominated_indices(&pts)
        .into_iter()
        .map(|i| (r.population[i].objectives.values(), r.population[i].key.clone()))
        .collect();
    expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
    expected.dedup();
    let mut got: Vec<_> = r.archive.entries().iter().map(|e| (e.objectives.values(), e.key.clone())).collect();
    got.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(got, expected);
}

#[test]
fn steady_state_defaults_and_selection_plumbing() {
    let data = xor(120);
    let cfg = SteadyStateConfig {
        budget: Budget::generations(4),
        ..Default::default()
    };
    let r = run_steady_state_mo(&data, &ModelKind::ALL, &cfg, 9).unwrap();
    assert!(r.trace.records.iter().all(|g| g.mu == 20 && g.lambda == 20));
    assert_eq!(r.evaluations, 20 * 5);
    assert_monotone_hv(&r);

    let nsga = SteadyStateConfig {
        selection: Selection::Nsga2,
        ..cfg.clone()
    };
    let n = run_steady_state_mo(&data, &ModelKind::ALL, &nsga, 9).unwrap();
    assert_eq!(n.trace.records[0].best_q, r.trace.records[0].best_q);
}

#[test]
fn zero_penalty_equals_plain_quality_run() {
    let data = xor(100);
    let base = SingleObjectiveConfig {
        budget: Budget::generations(4),
        ..Default::default()
    };
    let zero = SingleObjectiveConfig {
        penalty: Some(PenaltyWeights::new(0.0, 0.0).unwrap()),
        ..base.clone()
    };
    let a = run_single_objective(&data, &ModelKind::ALL, &base, 5).unwrap();
    let b = run_single_objective(&data, &ModelKind::ALL, &zero, 5).unwrap();
    assert_eq!(a.best.key, b.best.key);
    assert_eq!(a.run.trace.best_q(), b.run.trace.best_q());
    assert!(a.run.trace.best_q().windows(2).all(|w| w[1] <= w[0]));
    assert_monotone_hv(&a.run);
}

#[test]
fn penalty_prefers_small_models_when_one_node_suffices() {
    let d = synth_dataset(SynthKind::LinearRegression, 80, 0.0, 1).unwrap();
    let (train, _) = train_test_split(&d, 0.7, 1).unwrap();
    let cfg = |penalty| SingleObjectiveConfig {
        penalty,
        budget: Budget::generations(8),
        ..Default::default()
    };
    let wins = (0..10)
        .filter(|&seed| {
            let plain = run_single_objective(&train, &ModelKind::ALL, &cfg(None), seed).unwrap();
            let pen = run_single_objective(&train, &ModelKind::ALL, &cfg(Some(PenaltyWeights::default())), seed).unwrap();
            pen.best.graph.size() <= plain.best.graph.size()
        })
        .count();
    assert!(wins >= 7, "{wins}/10");
}

#[test]
fn fixed_depth_is_never_exceeded() {
    let data = xor(120);
    let cfg = ParameterFreeConfig {
        fixed_depth: Some(3),
        ..pf(10)
    };
    let r = run_parameter_free(&data, &ModelKind::ALL, &cfg, 8).unwrap();
    assert!(r.trace.records.iter().all(|g| g.max_depth == 3));
    assert!(r.archive.entries().iter().all(|e| e.graph.depth() <= 3));
}

#[test]
fn time_limited_run_stops() {
    let data = xor(100);
    let cfg = ParameterFreeConfig {
        budget: Budget::time_limit(0.5),
        ..Default::default()
    };
    let t = std::time::Instant::now();
    let r = run_parameter_free(&data, &ModelKind::ALL, &cfg, 1).unwrap();
    assert!(t.elapsed().as_secs_f64() < 30.0);
    assert!(r.trace.len() >= 2);
    assert!(r.trace.records.iter().all(|g| g.elapsed_s.is_some()));
}
