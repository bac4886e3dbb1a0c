//! Evolutionary loops over pipeline genotypes.
//!
//! * [`run_parameter_free`]: steady-state multi-objective GP whose population
//!   size walks the Fibonacci sequence, offspring size trails it by one step,
//!   variation rates follow population diversity and the depth limit grows on
//!   stagnation.
//! * [`run_steady_state_mo`]: the same (mu + lambda) loop with fixed parameters.
//! * [`run_single_objective`]: tournament-based (mu + lambda) loop on plain
//!   quality or on a penalized scalar fitness.
//!
//! Offspring are evaluated in parallel; each evaluation uses its own seed
//! derived from (run seed, generation, index), so results do not depend on
//! thread scheduling.

mod adaptive;
mod evaluate;
mod fibonacci;
mod multi;
mod single;
mod trace;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use adaptive::{
    adapted_evo_params, depth_adaptation, objective_improvements, quality_std, AdaptationRules, AdaptiveState,
    IMPROVEMENT_TOL,
};
pub use evaluate::{holdout_quality, quality, Evaluator, INNER_TRAIN_FRACTION};
pub use fibonacci::FibonacciIterator;
pub use multi::{run_parameter_free, run_steady_state_mo, ParameterFreeConfig, SteadyStateConfig};
pub use single::{run_single_objective, SingleObjectiveConfig, SingleObjectiveResult};
pub use trace::{GenerationRecord, RunTrace, TRACE_COLUMNS};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::individual::Individual;
use crate::models::ModelKind;
use crate::objectives::{Normalizer, ObjectiveVector, ParetoArchive};
use crate::pipeline::{random_pipeline, PipelineGraph};
use crate::rng::{derive_seed, seeded, Rng};

/// Depth limit of the fixed-depth variants.
pub const FIXED_DEPTH: usize = 3;

/// Stopping rule: a generation limit, a wall-time limit, or both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub generations: Option<usize>,
    pub time_limit_s: Option<f64>,
}

impl Budget {
    pub fn generations(n: usize) -> Self {
        Self {
            generations: Some(n),
            time_limit_s: None,
        }
    }

    pub fn time_limit(seconds: f64) -> Self {
        Self {
            generations: None,
            time_limit_s: Some(seconds),
        }
    }

    fn exhausted(&self, completed: usize, start: &Instant) -> bool {
        self.generations.is_some_and(|g| completed >= g)
            || self.time_limit_s.is_some_and(|t| start.elapsed().as_secs_f64() >= t)
            || (self.generations.is_none() && self.time_limit_s.is_none())
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::generations(30)
    }
}

/// Outcome of any optimizer run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub archive: ParetoArchive,
    pub trace: RunTrace,
    pub population: Vec<Individual>,
    /// Bounds over every evaluation of the run; used for the trace hypervolume.
    pub normalizer: Normalizer,
    pub evaluations: usize,
    pub final_state: AdaptiveState,
}

impl RunResult {
    pub fn final_hv(&self) -> f64 {
        self.trace.final_hv().unwrap_or(0.0)
    }
}

/// Bookkeeping shared by all loops.
struct RunContext<'a> {
    evaluator: Evaluator,
    catalog: &'a [ModelKind],
    seed: u64,
    rng: Rng,
    start: Instant,
    archive: ParetoArchive,
    snapshots: Vec<Vec<ObjectiveVector>>,
    seen: Vec<ObjectiveVector>,
    trace: RunTrace,
}

impl<'a> RunContext<'a> {
    fn new(data: &Dataset, catalog: &'a [ModelKind], seed: u64, time_objective: bool) -> Result<Self> {
        if ModelKind::compatible(catalog, data.task).iter().all(|k| k.is_transformer()) {
            return Err(Error::EmptyCatalog);
        }
        Ok(Self {
            evaluator: Evaluator::new(data, derive_seed(seed, u64::MAX, 0), time_objective)?,
            catalog,
            seed,
            rng: seeded(derive_seed(seed, u64::MAX, 1)),
            start: Instant::now(),
            archive: ParetoArchive::new(),
            snapshots: Vec::new(),
            seen: Vec::new(),
            trace: RunTrace::default(),
        })
    }

    fn task(&self) -> crate::data::TaskType {
        self.evaluator.validation().task
    }

    fn initial_population(&mut self, size: usize, max_depth: usize) -> Result<Vec<Individual>> {
        let graphs = (0..size)
            .map(|_| random_pipeline(self.catalog, self.task(), max_depth, &mut self.rng))
            .collect::<Result<Vec<PipelineGraph>>>()?;
        self.evaluate(&graphs, 0)
    }

    fn evaluate(&mut self, graphs: &[PipelineGraph], generation: usize) -> Result<Vec<Individual>> {
        let seeds: Vec<u64> = (0..graphs.len())
            .map(|i| derive_seed(self.seed, generation as u64, i as u64))
            .collect();
        let out = self.evaluator.evaluate_batch(graphs, &seeds)?;
        self.seen.extend(out.iter().map(|i| i.objectives));
        Ok(out)
    }

    fn update_archive(&mut self, members: &[Individual]) -> bool {
        self.archive.update(members)
    }

    fn record(&mut self, gen: usize, state: &AdaptiveState, evaluations: usize) {
        self.snapshots.push(self.archive.objectives());
        let best_q = self
            .archive
            .objectives()
            .iter()
            .map(|o| o.q)
            .fold(f64::INFINITY, f64::min);
        self.trace.records.push(GenerationRecord {
            gen,
            best_q,
            hv: 0.0,
            mu: state.mu,
            lambda: state.lambda,
            cross_rate: state.cross_rate,
            mut_rate: state.mut_rate,
            max_depth: state.max_depth,
            elapsed_s: Some(self.start.elapsed().as_secs_f64()),
            evaluations,
        });
    }

    fn finish(mut self, population: Vec<Individual>, final_state: AdaptiveState) -> Result<RunResult> {
        let normalizer = Normalizer::from_points(&self.seen).expect("initial population evaluated");
        for (record, snapshot) in self.trace.records.iter_mut().zip(&self.snapshots) {
            record.hv = normalizer.hypervolume(snapshot)?;
        }
        Ok(RunResult {
            archive: self.archive,
            trace: self.trace,
            population,
            normalizer,
            evaluations: self.seen.len(),
            final_state,
        })
    }
}
