//! Parameter-free control: population-size walk, rate adaptation and depth
//! adaptation.

use serde::{Deserialize, Serialize};

use super::fibonacci::FibonacciIterator;
use crate::objectives::{ObjectiveVector, ParetoArchive};
use crate::operators::Population;

/// Improvement threshold against the archive minima.
pub const IMPROVEMENT_TOL: f64 = 1e-12;

/// Evolution parameters that change during a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveState {
    pub mu: usize,
    pub lambda: usize,
    pub cross_rate: f64,
    pub mut_rate: f64,
    pub max_depth: usize,
    pub stagnation_cnt: usize,
    pub current_std: f64,
    pub max_std: f64,
}

/// Constants of the adaptation rules.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationRules {
    pub sequence: FibonacciIterator,
    pub mu_min: usize,
    pub stagnation_threshold: usize,
    pub depth_cap: usize,
}

impl Default for AdaptationRules {
    fn default() -> Self {
        Self {
            sequence: FibonacciIterator::default(),
            mu_min: 2,
            stagnation_threshold: 5,
            depth_cap: crate::pipeline::DEPTH_HARD_CAP,
        }
    }
}

/// Whether any offspring strictly improves the archive minimum of quality and
/// of structural complexity.
pub fn objective_improvements(offspring: &[ObjectiveVector], archive: &ParetoArchive) -> (bool, bool) {
    let Some(min) = archive.minima() else {
        return (!offspring.is_empty(), !offspring.is_empty());
    };
    let q = offspring.iter().any(|o| o.q < min[0] - IMPROVEMENT_TOL);
    let s = offspring.iter().any(|o| o.s < min[1] - IMPROVEMENT_TOL);
    (q, s)
}

/// No improvement in either objective: grow `mu` one step and set
/// `mut_rate = 1 - current_std / max_std`, `cross_rate = current_std / max_std`
/// (rates are kept when `max_std` is zero). Both objectives improved: shrink
/// `mu` one step, not below `mu_min`. Otherwise nothing changes.
/// `archive` must not yet contain the offspring.
pub fn adapted_evo_params(
    offspring: &[ObjectiveVector],
    archive: &ParetoArchive,
    state: &AdaptiveState,
    rules: &AdaptationRules,
) -> AdaptiveState {
    let mut next = state.clone();
    match objective_improvements(offspring, archive) {
        (false, false) => {
            next.mu = rules.sequence.next(state.mu);
            if state.max_std > 0.0 {
                let ratio = (state.current_std / state.max_std).clamp(0.0, 1.0);
                next.mut_rate = 1.0 - ratio;
                next.cross_rate = ratio;
            }
        }
        (true, true) => {
            next.mu = rules.sequence.prev(state.mu).max(rules.mu_min);
        }
        _ => {}
    }
    next
}

/// Counts generations without archive changes; after `stagnation_threshold`
/// of them the depth limit grows by one (up to `depth_cap`) and the counter
/// restarts.
pub fn depth_adaptation(state: &AdaptiveState, archive_changed: bool, rules: &AdaptationRules) -> AdaptiveState {
    let mut next = state.clone();
    if archive_changed {
        next.stagnation_cnt = 0;
        return next;
    }
    next.stagnation_cnt += 1;
    if next.stagnation_cnt >= rules.stagnation_threshold {
        next.max_depth = (next.max_depth + 1).min(rules.depth_cap);
        next.stagnation_cnt = 0;
    }
    next
}

/// Population standard deviation of the quality objective.
pub fn quality_std(pop: &Population) -> f64 {
    std_of(pop.members.iter().map(|m| m.objectives.q))
}

pub(crate) fn std_of(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
}
