use gpfree_core::operators::{mutate, one_point_crossover, reproduce, subtree_crossover, MutationKind, Variation};
use gpfree_core::pipeline::{random_pipeline, validate, DEPTH_HARD_CAP};
use gpfree_core::rng::seeded;
use gpfree_core::{ModelKind, TaskType};
use rand::Rng as _;

#[test]
fn ten_thousand_operator_applications_stay_valid() {
    let mut rng = seeded(99);
    let mut applied = 0;
    for task in [TaskType::BinaryClassification, TaskType::Regression] {
        for _ in 0..2_500 {
            let depth = rng.random_range(1..=DEPTH_HARD_CAP);
            let a = random_pipeline(&ModelKind::ALL, task, depth, &mut rng).unwrap();
            let b = random_pipeline(&ModelKind::ALL, task, depth, &mut rng).unwrap();
            let kind = [MutationKind::Simple, MutationKind::Growth, MutationKind::Reduce][rng.random_range(0..3)];
            let mut outs = vec![mutate(&a, kind, &ModelKind::ALL, task, depth, &mut rng)];
            let (c1, c2) = subtree_crossover(&a, &b, task, depth, &mut rng);
            let (o1, o2) = one_point_crossover(&a, &b, task, depth, &mut rng);
            outs.extend([c1, c2, o1, o2]);
            for g in &outs {
                let report = validate(g, task, depth);
                assert!(report.is_valid(), "{g}: {report:?}");
                applied += 1;
            }
        }
    }
    assert!(applied >= 10_000);
}

#[test]
fn reproduce_respects_size_and_depth() {
    let mut rng = seeded(5);
    let task = TaskType::BinaryClassification;
    let parents: Vec<_> = (0..6)
        .map(|_| random_pipeline(&ModelKind::ALL, task, 3, &mut rng).unwrap())
        .collect();
    for (cross_rate, mut_rate) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.5, 0.5)] {
        let v = Variation {
            cross_rate,
            mut_rate,
            max_depth: 3,
            task,
        };
        let kids = reproduce(&parents, 13, &v, &ModelKind::ALL, &mut rng);
        assert_eq!(kids.len(), 13);
        assert!(kids.iter().all(|k| validate(k, task, 3).is_valid()));
        if cross_rate == 0.0 && mut_rate == 0.0 {
            assert!(kids.iter().all(|k| parents.contains(k)));
        }
    }
}
