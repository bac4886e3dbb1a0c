use serde::{Deserialize, Serialize};

use super::adaptive::{std_of, AdaptiveState};
use super::{Budget, RunContext, RunResult, FIXED_DEPTH};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::individual::Individual;
use crate::models::ModelKind;
use crate::objectives::{penalty_fitness, PenaltyWeights};
use crate::operators::{reproduce, tournament_indices, Variation};
use crate::pipeline::PipelineGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleObjectiveConfig {
    /// Penalized fitness when set, plain quality otherwise.
    pub penalty: Option<PenaltyWeights>,
    pub pop_size: usize,
    pub budget: Budget,
    pub tournament_size: usize,
    pub cross_rate: f64,
    pub mut_rate: f64,
    pub max_depth: usize,
    pub time_objective: bool,
}

impl Default for SingleObjectiveConfig {
    fn default() -> Self {
        Self {
            penalty: None,
            pop_size: 20,
            budget: Budget::default(),
            tournament_size: 2,
            cross_rate: 0.5,
            mut_rate: 0.5,
            max_depth: FIXED_DEPTH,
            time_objective: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SingleObjectiveResult {
    /// Lowest scalar fitness over the run.
    pub best: Individual,
    pub run: RunResult,
}

/// Tournament-selection (mu + lambda) GP on a scalar fitness. A Pareto archive
/// of (quality, size) is kept alongside for reporting.
pub fn run_single_objective(
    data: &Dataset,
    catalog: &[ModelKind],
    config: &SingleObjectiveConfig,
    seed: u64,
) -> Result<SingleObjectiveResult> {
    if config.pop_size == 0 {
        return Err(Error::InvalidPipeline("population size must be positive".into()));
    }
    let fitness = |m: &Individual| match &config.penalty {
        Some(w) => penalty_fitness(&m.objectives, w),
        None => m.objectives.q,
    };
    let mut ctx = RunContext::new(data, catalog, seed, config.time_objective)?;
    let mu = config.pop_size;
    let mut state = AdaptiveState {
        mu,
        lambda: mu,
        cross_rate: config.cross_rate,
        mut_rate: config.mut_rate,
        max_depth: config.max_depth,
        stagnation_cnt: 0,
        current_std: 0.0,
        max_std: 0.0,
    };
    let mut pop = ctx.initial_population(mu, config.max_depth)?;
    ctx.update_archive(&pop);
    state.current_std = std_of(pop.iter().map(|m| m.objectives.q));
    state.max_std = state.current_std;
    ctx.record(0, &state, pop.len());

    let mut gen = 0;
    while !config.budget.exhausted(gen, &ctx.start) {
        gen += 1;
        let f: Vec<f64> = pop.iter().map(fitness).collect();
        let parents: Vec<PipelineGraph> = tournament_indices(&f, mu, config.tournament_size, &mut ctx.rng)
            .into_iter()
            .map(|i| pop[i].graph.clone())
            .collect();
        let variation = Variation {
            cross_rate: config.cross_rate,
            mut_rate: config.mut_rate,
            max_depth: config.max_depth,
            task: ctx.task(),
        };
        let graphs = reproduce(&parents, mu, &variation, ctx.catalog, &mut ctx.rng);
        let offspring = ctx.evaluate(&graphs, gen)?;
        ctx.update_archive(&offspring);

        let mut pool = pop;
        pool.extend(offspring);
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by(|&a, &b| fitness(&pool[a]).total_cmp(&fitness(&pool[b])).then(a.cmp(&b)));
        pop = order.into_iter().take(mu).map(|i| pool[i].clone()).collect();
        state.current_std = std_of(pop.iter().map(|m| m.objectives.q));
        state.max_std = state.max_std.max(state.current_std);
        ctx.record(gen, &state, graphs.len());
    }
    if gen == 0 && config.budget.generations != Some(0) {
        return Err(Error::BudgetTooSmall);
    }
    let best = pop
        .iter()
        .min_by(|a, b| fitness(a).total_cmp(&fitness(b)))
        .expect("non-empty population")
        .clone();
    Ok(SingleObjectiveResult {
        best,
        run: ctx.finish(pop, state)?,
    })
}
