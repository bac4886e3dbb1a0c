use crate::data::{train_test_split, Dataset};
use crate::error::{Error, Result};
use crate::individual::Individual;
use crate::objectives::{rmse, roc_auc, ObjectiveVector};
use crate::par;
use crate::pipeline::{fit, PipelineGraph};
use crate::rng::seeded;

/// Share of the training data used to fit candidates; the rest scores them.
pub const INNER_TRAIN_FRACTION: f64 = 0.75;

/// Quality objective of predictions: RMSE for regression, negated ROC AUC for
/// classification.
pub fn quality(data: &Dataset, predictions: &[f64]) -> Result<f64> {
    if data.task.is_classification() {
        Ok(-roc_auc(&data.target, predictions)?)
    } else {
        rmse(&data.target, predictions)
    }
}

/// Fits `graph` on `train` and returns its quality objective on `test`.
pub fn holdout_quality(graph: &PipelineGraph, train: &Dataset, test: &Dataset, seed: u64) -> Result<f64> {
    let fitted = fit(graph, train, &mut seeded(seed))?;
    let q = quality(test, &fitted.predict(&test.features)?)?;
    if q.is_finite() {
        Ok(q)
    } else {
        Err(Error::NonFiniteObjective(graph.to_json()))
    }
}

/// Scores genotypes on an inner validation split of the training data.
#[derive(Debug, Clone)]
pub struct Evaluator {
    fit_data: Dataset,
    validation: Dataset,
    time_objective: bool,
}

impl Evaluator {
    /// Splits `train` 75/25 (stratified for classification) with `seed`.
    pub fn new(train: &Dataset, seed: u64, time_objective: bool) -> Result<Self> {
        let (fit_data, validation) = train_test_split(train, INNER_TRAIN_FRACTION, seed)?;
        Ok(Self {
            fit_data,
            validation,
            time_objective,
        })
    }

    pub fn fit_data(&self) -> &Dataset {
        &self.fit_data
    }

    pub fn validation(&self) -> &Dataset {
        &self.validation
    }

    pub fn time_objective(&self) -> bool {
        self.time_objective
    }

    pub fn evaluate(&self, graph: &PipelineGraph, seed: u64) -> Result<Individual> {
        let fitted = fit(graph, &self.fit_data, &mut seeded(seed))?;
        let q = quality(&self.validation, &fitted.predict(&self.validation.features)?)?;
        if !q.is_finite() {
            return Err(Error::NonFiniteObjective(graph.to_json()));
        }
        let s = graph.size() as f64;
        let objectives = if self.time_objective {
            ObjectiveVector::with_time(q, s, fitted.fit_seconds())
        } else {
            ObjectiveVector::new(q, s)
        };
        Ok(Individual::new(graph.clone(), objectives, fitted.fit_seconds()))
    }

    /// Evaluates a batch, in parallel when the `parallel` feature is on.
    /// Results are in input order and independent of scheduling.
    pub fn evaluate_batch(&self, graphs: &[PipelineGraph], seeds: &[u64]) -> Result<Vec<Individual>> {
        assert_eq!(graphs.len(), seeds.len());
        par::map_indexed(graphs, |i, g| self.evaluate(g, seeds[i])).into_iter().collect()
    }

    /// Single-threaded reference path for [`Evaluator::evaluate_batch`].
    pub fn evaluate_batch_sequential(&self, graphs: &[PipelineGraph], seeds: &[u64]) -> Result<Vec<Individual>> {
        assert_eq!(graphs.len(), seeds.len());
        par::map_indexed_sequential(graphs, |i, g| self.evaluate(g, seeds[i]))
            .into_iter()
            .collect()
    }
}
