use serde::{Deserialize, Serialize};

use super::adaptive::{adapted_evo_params, depth_adaptation, std_of, AdaptationRules, AdaptiveState};
use super::{Budget, RunContext, RunResult};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::individual::Individual;
use crate::models::ModelKind;
use crate::operators::{reproduce, Selection, Variation};
use crate::pipeline::PipelineGraph;

/// Settings of the parameter-free loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterFreeConfig {
    pub selection: Selection,
    /// Keep the depth limit constant instead of adapting it.
    pub fixed_depth: Option<usize>,
    pub initial_depth: usize,
    pub initial_rates: (f64, f64),
    pub budget: Budget,
    pub time_objective: bool,
    pub rules: AdaptationRules,
}

impl Default for ParameterFreeConfig {
    fn default() -> Self {
        Self {
            selection: Selection::Spea2,
            fixed_depth: None,
            initial_depth: 2,
            initial_rates: (0.5, 0.5),
            budget: Budget::default(),
            time_objective: false,
            rules: AdaptationRules::default(),
        }
    }
}

/// Settings of the fixed-parameter steady-state loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateConfig {
    pub pop_size: usize,
    pub budget: Budget,
    pub cross_rate: f64,
    pub mut_rate: f64,
    pub selection: Selection,
    pub fixed_depth: Option<usize>,
    pub initial_depth: usize,
    pub time_objective: bool,
}

impl Default for SteadyStateConfig {
    fn default() -> Self {
        Self {
            pop_size: 20,
            budget: Budget::default(),
            cross_rate: 0.5,
            mut_rate: 0.5,
            selection: Selection::Spea2,
            fixed_depth: None,
            initial_depth: 2,
            time_objective: false,
        }
    }
}

struct LoopSettings {
    selection: Selection,
    adaptive: bool,
    depth_adaptive: bool,
    budget: Budget,
    rules: AdaptationRules,
}

fn select(selection: Selection, pool: &[Individual], k: usize) -> Vec<Individual> {
    let points: Vec<Vec<f64>> = pool.iter().map(|m| m.objectives.values()).collect();
    selection
        .select_indices(&points, k)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect()
}

fn q_std(pop: &[Individual]) -> f64 {
    std_of(pop.iter().map(|m| m.objectives.q))
}

fn run_multi(
    data: &Dataset,
    catalog: &[ModelKind],
    seed: u64,
    time_objective: bool,
    mut state: AdaptiveState,
    settings: LoopSettings,
) -> Result<RunResult> {
    let mut ctx = RunContext::new(data, catalog, seed, time_objective)?;
    let mut pop = ctx.initial_population(state.mu, state.max_depth)?;
    ctx.update_archive(&pop);
    state.current_std = q_std(&pop);
    state.max_std = state.current_std;
    let init_evals = pop.len();
    ctx.record(0, &state, init_evals);

    let mut gen = 0;
    while !settings.budget.exhausted(gen, &ctx.start) {
        gen += 1;
        if settings.adaptive {
            state.lambda = settings.rules.sequence.prev(state.mu);
        }
        let parents: Vec<PipelineGraph> = select(settings.selection, &pop, state.lambda)
            .into_iter()
            .map(|m| m.graph)
            .collect();
        let variation = Variation {
            cross_rate: state.cross_rate,
            mut_rate: state.mut_rate,
            max_depth: state.max_depth,
            task: ctx.task(),
        };
        let graphs = reproduce(&parents, state.lambda, &variation, ctx.catalog, &mut ctx.rng);
        let offspring = ctx.evaluate(&graphs, gen)?;

        let offspring_objs: Vec<_> = offspring.iter().map(|o| o.objectives).collect();
        let adapted = if settings.adaptive {
            Some(adapted_evo_params(&offspring_objs, &ctx.archive, &state, &settings.rules))
        } else {
            None
        };
        let changed = ctx.update_archive(&offspring);
        if settings.depth_adaptive {
            state = depth_adaptation(&state, changed, &settings.rules);
        }
        if let Some(a) = adapted {
            state.mu = a.mu;
            state.cross_rate = a.cross_rate;
            state.mut_rate = a.mut_rate;
        }

        let mut pool = pop;
        pool.extend(offspring);
        pop = select(settings.selection, &pool, state.mu);
        state.current_std = q_std(&pop);
        state.max_std = state.max_std.max(state.current_std);
        ctx.record(gen, &state, graphs.len());
    }
    if gen == 0 && settings.budget.generations != Some(0) {
        return Err(Error::BudgetTooSmall);
    }
    ctx.finish(pop, state)
}

/// Parameter-free multi-objective GP. Starts from `mu` equal to the second
/// sequence item, rates 0.5/0.5 and depth limit 2; each generation uses
/// `lambda = prev(mu)` offspring.
pub fn run_parameter_free(
    data: &Dataset,
    catalog: &[ModelKind],
    config: &ParameterFreeConfig,
    seed: u64,
) -> Result<RunResult> {
    let rules = config.rules.clone();
    let mu = rules.sequence.state_by_index(2).max(rules.mu_min);
    let state = AdaptiveState {
        mu,
        lambda: rules.sequence.prev(mu),
        cross_rate: config.initial_rates.0,
        mut_rate: config.initial_rates.1,
        max_depth: config.fixed_depth.unwrap_or(config.initial_depth),
        stagnation_cnt: 0,
        current_std: 0.0,
        max_std: 0.0,
    };
    run_multi(
        data,
        catalog,
        seed,
        config.time_objective,
        state,
        LoopSettings {
            selection: config.selection,
            adaptive: true,
            depth_adaptive: config.fixed_depth.is_none(),
            budget: config.budget,
            rules,
        },
    )
}

/// Classic (mu + lambda) multi-objective GP with `lambda = mu` and static rates.
pub fn run_steady_state_mo(
    data: &Dataset,
    catalog: &[ModelKind],
    config: &SteadyStateConfig,
    seed: u64,
) -> Result<RunResult> {
    if config.pop_size == 0 {
        return Err(Error::InvalidPipeline("population size must be positive".into()));
    }
    let state = AdaptiveState {
        mu: config.pop_size,
        lambda: config.pop_size,
        cross_rate: config.cross_rate,
        mut_rate: config.mut_rate,
        max_depth: config.fixed_depth.unwrap_or(config.initial_depth),
        stagnation_cnt: 0,
        current_std: 0.0,
        max_std: 0.0,
    };
    run_multi(
        data,
        catalog,
        seed,
        config.time_objective,
        state,
        LoopSettings {
            selection: config.selection,
            adaptive: false,
            depth_adaptive: config.fixed_depth.is_none(),
            budget: config.budget,
            rules: AdaptationRules::default(),
        },
    )
}
