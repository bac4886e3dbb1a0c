use gpfree_core::objectives::{dominates, hypervolume_values, roc_auc, ParetoArchive};
use gpfree_core::rng::seeded;
use gpfree_core::{Individual, ModelKind, ObjectiveVector, PipelineGraph};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng as _;

fn ind(q: f64, s: f64, kind: ModelKind) -> Individual {
    Individual::new(PipelineGraph::single(kind), ObjectiveVector::new(q, s), 0.0)
}

fn grid() -> impl Strategy<Value = f64> {
    // Coarse values so ties and equal components actually occur.
    (0u8..6).prop_map(|v| v as f64 * 0.5)
}

proptest! {
    #[test]
    fn dominance_is_a_strict_partial_order(
        a in (grid(), grid()), b in (grid(), grid()), c in (grid(), grid())
    ) {
        let (a, b, c) = (
            ObjectiveVector::new(a.0, a.1),
            ObjectiveVector::new(b.0, b.1),
            ObjectiveVector::new(c.0, c.1),
        );
        prop_assert!(!dominates(&a, &a).unwrap());
        if dominates(&a, &b).unwrap() {
            prop_assert!(!dominates(&b, &a).unwrap());
            if dominates(&b, &c).unwrap() {
                prop_assert!(dominates(&a, &c).unwrap());
            }
        }
    }

    #[test]
    fn auc_invariant_under_increasing_transforms(
        data in prop::collection::vec((any::<bool>(), -5.0f64..5.0), 4..40)
    ) {
        let y: Vec<f64> = data.iter().map(|d| d.0 as u8 as f64).collect();
        prop_assume!(y.contains(&0.0) && y.contains(&1.0));
        let s: Vec<f64> = data.iter().map(|d| d.1).collect();
        let base = roc_auc(&y, &s).unwrap();
        let cubed: Vec<f64> = s.iter().map(|v| v * v * v + 2.0 * v).collect();
        let expd: Vec<f64> = s.iter().map(|v| v.exp()).collect();
        prop_assert!((roc_auc(&y, &cubed).unwrap() - base).abs() < 1e-12);
        prop_assert!((roc_auc(&y, &expd).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn archive_update_idempotent_and_order_free(
        pts in prop::collection::vec((grid(), grid(), 0usize..3), 1..30),
        shuffle_seed in any::<u64>()
    ) {
        let kinds = [ModelKind::DecisionTree, ModelKind::KNearestNeighbors, ModelKind::LinearRegression];
        let cands: Vec<Individual> = pts.iter().map(|&(q, s, k)| ind(q, s, kinds[k])).collect();
        let mut a = ParetoArchive::new();
        a.update(&cands);
        let mut again = a.clone();
        prop_assert!(!again.update(&cands));
        prop_assert_eq!(again.entries(), a.entries());

        let mut shuffled = cands.clone();
        shuffled.shuffle(&mut seeded(shuffle_seed));
        let mut b = ParetoArchive::new();
        for c in &shuffled {
            b.update([c]);
        }
        prop_assert_eq!(b.entries(), a.entries());
    }
}

#[test]
fn hypervolume_matches_monte_carlo_in_three_dimensions() {
    let mut rng = seeded(31);
    for _ in 0..10 {
        let n = rng.random_range(1..8);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let exact = hypervolume_values(&pts, &[1.0, 1.0, 1.0]).unwrap();
        let samples = 100_000;
        let hits = (0..samples)
            .filter(|_| {
                let z: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
                pts.iter().any(|p| p.iter().zip(&z).all(|(a, b)| a <= b))
            })
            .count();
        assert!((hits as f64 / samples as f64 - exact).abs() < 1e-2);
    }
}
