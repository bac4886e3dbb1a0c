use crate::objectives::ObjectiveVector;
use crate::pipeline::PipelineGraph;

/// An evaluated genotype.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub graph: PipelineGraph,
    pub objectives: ObjectiveVector,
    /// Wall time of the evaluation fit.
    pub fit_seconds: f64,
    /// Serialized genotype, used as the identity key.
    pub key: String,
}

impl Individual {
    pub fn new(graph: PipelineGraph, objectives: ObjectiveVector, fit_seconds: f64) -> Self {
        let key = graph.to_json();
        Self {
            graph,
            objectives,
            fit_seconds,
            key,
        }
    }
}
