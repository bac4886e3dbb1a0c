//! Composite pipelines: rooted trees of atomic-model nodes.
//!
//! Data flows from the leaves to the root. Leaves read the raw feature
//! matrix. An internal predictor is trained on the column-concatenation of its
//! children's outputs (stacking); a transformer node transforms its input and
//! forwards it unchanged in width.

use std::fmt;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Matrix, TaskType};
use crate::error::{Error, Result};
use crate::models::{fit_atomic, predict_atomic, AtomicOutput, ModelKind, Params, TrainedAtomic};
use crate::rng::Rng;

pub const DEFAULT_MAX_ARITY: usize = 3;
pub const DEPTH_HARD_CAP: usize = 6;

/// One node of a pipeline together with its input subtrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub children: Vec<NodeSpec>,
}

impl NodeSpec {
    /// Leaf with the kind's default hyperparameters.
    pub fn leaf(kind: ModelKind) -> Self {
        Self {
            kind,
            params: kind.default_params(),
            children: Vec::new(),
        }
    }

    pub fn with_children(kind: ModelKind, children: Vec<NodeSpec>) -> Self {
        Self {
            kind,
            params: kind.default_params(),
            children,
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(NodeSpec::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(NodeSpec::depth).max().unwrap_or(0)
    }

    /// Pre-order node positions, each given as the child-index path from the root.
    pub fn positions(&self) -> Vec<Vec<usize>> {
        fn walk(node: &NodeSpec, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            out.push(path.clone());
            for (i, c) in node.children.iter().enumerate() {
                path.push(i);
                walk(c, path, out);
                path.pop();
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn at(&self, path: &[usize]) -> Option<&NodeSpec> {
        path.iter().try_fold(self, |n, &i| n.children.get(i))
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut NodeSpec> {
        path.iter().try_fold(self, |n, &i| n.children.get_mut(i))
    }
}

/// A composite model genotype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PipelineGraph {
    pub root: NodeSpec,
}

impl PipelineGraph {
    pub fn new(root: NodeSpec) -> Self {
        Self { root }
    }

    pub fn single(kind: ModelKind) -> Self {
        Self::new(NodeSpec::leaf(kind))
    }

    /// Node count.
    pub fn size(&self) -> usize {
        self.root.size()
    }

    /// Nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Compact JSON: `{"kind": ..., "params": {...}, "children": [...]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pipeline graphs always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self, task: TaskType, depth_cap: usize) -> ValidationReport {
        validate(self, task, depth_cap)
    }
}

impl fmt::Display for PipelineGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write(node: &NodeSpec, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write!(f, "{}", node.kind)?;
            if !node.children.is_empty() {
                f.write_str("(")?;
                for (i, c) in node.children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write(c, f)?;
                }
                f.write_str(")")?;
            }
            Ok(())
        }
        write(&self.root, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    IncompatibleKind,
    DepthExceedsCap,
    TooManyChildren,
    TransformerWithManyInputs,
    TransformerAtRoot,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::IncompatibleKind => "kind incompatible with task",
            ViolationKind::DepthExceedsCap => "depth exceeds cap",
            ViolationKind::TooManyChildren => "too many children",
            ViolationKind::TransformerWithManyInputs => "transformer with more than one input",
            ViolationKind::TransformerAtRoot => "transformer at the output node",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Child-index path of the offending node (empty = root).
    pub path: Vec<usize>,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

pub fn validate(graph: &PipelineGraph, task: TaskType, depth_cap: usize) -> ValidationReport {
    let mut violations = Vec::new();
    for path in graph.root.positions() {
        let node = graph.root.at(&path).expect("position exists");
        let mut flag = |kind| {
            violations.push(Violation {
                path: path.clone(),
                kind,
            })
        };
        if !node.kind.supports(task) {
            flag(ViolationKind::IncompatibleKind);
        }
        if node.children.len() > DEFAULT_MAX_ARITY {
            flag(ViolationKind::TooManyChildren);
        }
        if node.kind.is_transformer() && node.children.len() > 1 {
            flag(ViolationKind::TransformerWithManyInputs);
        }
        if path.is_empty() && node.kind.is_transformer() {
            flag(ViolationKind::TransformerAtRoot);
        }
    }
    if graph.depth() > depth_cap {
        violations.push(Violation {
            path: Vec::new(),
            kind: ViolationKind::DepthExceedsCap,
        });
    }
    ValidationReport { violations }
}

/// Random subtree whose root has depth 1 and whose depth is at most `max_depth`.
/// Each node below the cap gets a uniform number of children in
/// `0..=max_arity` (at most one for transformers).
pub(crate) fn random_subtree(
    compatible: &[ModelKind],
    predictors: &[ModelKind],
    max_depth: usize,
    rng: &mut Rng,
) -> NodeSpec {
    fn grow(kinds: &[ModelKind], predictors: &[ModelKind], budget: usize, root: bool, rng: &mut Rng) -> NodeSpec {
        let pool = if root { predictors } else { kinds };
        let kind = *pool.choose(rng).expect("non-empty kind pool");
        let max_children = if budget <= 1 {
            0
        } else if kind.is_transformer() {
            1
        } else {
            DEFAULT_MAX_ARITY
        };
        let n = rng.random_range(0..=max_children);
        let children = (0..n).map(|_| grow(kinds, predictors, budget - 1, false, rng)).collect();
        NodeSpec::with_children(kind, children)
    }
    grow(compatible, predictors, max_depth.max(1), true, rng)
}

/// Random valid pipeline with a predictor at the root.
pub fn random_pipeline(
    catalog: &[ModelKind],
    task: TaskType,
    max_depth: usize,
    rng: &mut Rng,
) -> Result<PipelineGraph> {
    let compatible = ModelKind::compatible(catalog, task);
    let predictors: Vec<ModelKind> = compatible.iter().copied().filter(|k| k.is_predictor()).collect();
    if predictors.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    Ok(PipelineGraph::new(random_subtree(&compatible, &predictors, max_depth, rng)))
}

#[derive(Debug, Clone)]
struct FittedNode {
    model: TrainedAtomic,
    children: Vec<FittedNode>,
}

/// A trained pipeline. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    graph: PipelineGraph,
    root: FittedNode,
    n_features: usize,
    task: TaskType,
    fit_seconds: f64,
}

impl FittedPipeline {
    pub fn graph(&self) -> &PipelineGraph {
        &self.graph
    }

    pub fn task(&self) -> TaskType {
        self.task
    }

    /// Wall time spent in [`fit`].
    pub fn fit_seconds(&self) -> f64 {
        self.fit_seconds
    }

    pub fn predict(&self, features: &Matrix) -> Result<Vec<f64>> {
        predict(self, features)
    }
}

fn output_matrix(out: AtomicOutput) -> Matrix {
    match out {
        AtomicOutput::Predictions(p) => Matrix::column_vector(p),
        AtomicOutput::Features(m) => m,
    }
}

fn node_input(children: Vec<Matrix>, raw: &Matrix) -> Result<Matrix> {
    if children.is_empty() {
        Ok(raw.clone())
    } else {
        Matrix::hstack(&children)
    }
}

fn fit_node(node: &NodeSpec, x: &Matrix, y: &[f64], task: TaskType, rng: &mut Rng) -> Result<(FittedNode, Matrix)> {
    let mut fitted_children = Vec::with_capacity(node.children.len());
    let mut outputs = Vec::with_capacity(node.children.len());
    for child in &node.children {
        let (f, out) = fit_node(child, x, y, task, rng)?;
        fitted_children.push(f);
        outputs.push(out);
    }
    let input = node_input(outputs, x)?;
    let model = fit_atomic(node.kind, &node.params, &input, y, task, rng)?;
    let out = output_matrix(predict_atomic(&model, &input)?);
    Ok((
        FittedNode {
            model,
            children: fitted_children,
        },
        out,
    ))
}

/// Trains the pipeline bottom-up on `train`.
pub fn fit(graph: &PipelineGraph, train: &Dataset, rng: &mut Rng) -> Result<FittedPipeline> {
    let report = validate(graph, train.task, usize::MAX);
    if let Some(v) = report.violations.first() {
        return Err(Error::InvalidPipeline(format!("{} at {:?}", v.kind, v.path)));
    }
    if train.n_samples() < 2 {
        return Err(Error::DegenerateData(format!("{} training samples", train.n_samples())));
    }
    if train.task.is_classification() && train.class_counts().contains(&0) {
        return Err(Error::DegenerateData("training target has a single class".into()));
    }
    let start = Instant::now();
    let (root, _) = fit_node(&graph.root, &train.features, &train.target, train.task, rng)?;
    Ok(FittedPipeline {
        graph: graph.clone(),
        root,
        n_features: train.n_features(),
        task: train.task,
        fit_seconds: start.elapsed().as_secs_f64(),
    })
}

fn predict_node(node: &FittedNode, x: &Matrix) -> Result<Matrix> {
    let outputs = node
        .children
        .iter()
        .map(|c| predict_node(c, x))
        .collect::<Result<Vec<_>>>()?;
    let input = node_input(outputs, x)?;
    Ok(output_matrix(predict_atomic(&node.model, &input)?))
}

/// Predictions of the output node: real values for regression, class-1
/// scores in `[0, 1]` for classification.
pub fn predict(fitted: &FittedPipeline, features: &Matrix) -> Result<Vec<f64>> {
    if features.cols() != fitted.n_features {
        return Err(Error::ShapeMismatch {
            expected: fitted.n_features,
            got: features.cols(),
        });
    }
    let out = predict_node(&fitted.root, features)?;
    Ok(out.column(0))
}

/// Width of the matrix a node emits when the raw input has `raw_cols` columns.
pub fn output_width(node: &NodeSpec, raw_cols: usize) -> usize {
    if node.kind.is_predictor() {
        1
    } else {
        input_width(node, raw_cols)
    }
}

/// Width of the matrix a node is trained on.
pub fn input_width(node: &NodeSpec, raw_cols: usize) -> usize {
    if node.children.is_empty() {
        raw_cols
    } else {
        node.children.iter().map(|c| output_width(c, raw_cols)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_dataset, SynthKind};
    use crate::rng::seeded;
    use ModelKind::*;

    fn chain(kinds: &[ModelKind]) -> NodeSpec {
        let mut node = NodeSpec::leaf(*kinds.last().unwrap());
        for k in kinds.iter().rev().skip(1) {
            node = NodeSpec::with_children(*k, vec![node]);
        }
        node
    }

    #[test]
    fn validate_examples() {
        let g = PipelineGraph::single(LogisticRegression);
        assert!(validate(&g, TaskType::BinaryClassification, 2).is_valid());

        let g = PipelineGraph::new(NodeSpec::with_children(LinearRegression, vec![NodeSpec::leaf(LogisticRegression)]));
        let r = validate(&g, TaskType::Regression, 6);
        assert_eq!(
            r.violations,
            vec![Violation {
                path: vec![0],
                kind: ViolationKind::IncompatibleKind
            }]
        );
        assert_eq!(ViolationKind::IncompatibleKind.to_string(), "kind incompatible with task");

        let g = PipelineGraph::new(chain(&[LinearRegression, DecisionTree, RidgeRegression, MeanBaseline]));
        assert_eq!(g.depth(), 4);
        let r = validate(&g, TaskType::Regression, 3);
        assert!(r.has(ViolationKind::DepthExceedsCap));
        assert_eq!(r.violations.len(), 1);
    }

    #[test]
    fn validate_structure_rules() {
        let leaves = vec![NodeSpec::leaf(MeanBaseline); 4];
        let g = PipelineGraph::new(NodeSpec::with_children(LinearRegression, leaves));
        assert!(validate(&g, TaskType::Regression, 6).has(ViolationKind::TooManyChildren));

        let g = PipelineGraph::new(NodeSpec::with_children(
            LinearRegression,
            vec![NodeSpec::with_children(StandardScaler, vec![NodeSpec::leaf(MeanBaseline); 2])],
        ));
        assert!(validate(&g, TaskType::Regression, 6).has(ViolationKind::TransformerWithManyInputs));

        let g = PipelineGraph::single(StandardScaler);
        assert!(validate(&g, TaskType::Regression, 6).has(ViolationKind::TransformerAtRoot));
    }

    #[test]
    fn size_and_depth() {
        let one = PipelineGraph::single(BaggedTrees);
        assert_eq!((one.size(), one.depth()), (1, 1));
        let two = PipelineGraph::new(NodeSpec::with_children(
            LinearRegression,
            vec![NodeSpec::leaf(MeanBaseline), NodeSpec::leaf(DecisionTree)],
        ));
        assert_eq!((two.size(), two.depth()), (3, 2));
        let mut root = NodeSpec::with_children(LinearRegression, vec![chain(&[DecisionTree, MeanBaseline])]);
        root.children.push(NodeSpec::leaf(KNearestNeighbors));
        let g = PipelineGraph::new(root);
        assert_eq!((g.size(), g.depth()), (4, 3));
    }

    #[test]
    fn random_pipeline_depth_one_is_single_node() {
        let mut rng = seeded(1);
        for _ in 0..100 {
            let g = random_pipeline(&ModelKind::ALL, TaskType::Regression, 1, &mut rng).unwrap();
            assert_eq!(g.size(), 1);
            assert!(g.root.kind.is_predictor());
        }
    }

    #[test]
    fn random_pipeline_deterministic() {
        let a = random_pipeline(&ModelKind::ALL, TaskType::BinaryClassification, 2, &mut seeded(42)).unwrap();
        let b = random_pipeline(&ModelKind::ALL, TaskType::BinaryClassification, 2, &mut seeded(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_pipeline_depth_coverage() {
        let mut rng = seeded(3);
        let mut seen = [0usize; 4];
        for _ in 0..1000 {
            let g = random_pipeline(&ModelKind::ALL, TaskType::BinaryClassification, 3, &mut rng).unwrap();
            assert!(validate(&g, TaskType::BinaryClassification, 3).is_valid());
            seen[g.depth()] += 1;
        }
        assert!(seen[1] > 0 && seen[2] > 0 && seen[3] > 0, "{seen:?}");
    }

    #[test]
    fn empty_catalog() {
        assert_eq!(
            random_pipeline(&[LinearRegression, StandardScaler], TaskType::BinaryClassification, 2, &mut seeded(0)),
            Err(Error::EmptyCatalog)
        );
    }

    fn regression_data(rows: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset {
        Dataset::new(Matrix::from_rows(&rows), y, TaskType::Regression).unwrap()
    }

    #[test]
    fn mean_baseline_pipeline() {
        let d = regression_data(vec![vec![0.0], vec![1.0], vec![2.0]], vec![2.0, 4.0, 6.0]);
        let f = fit(&PipelineGraph::single(MeanBaseline), &d, &mut seeded(0)).unwrap();
        let p = f.predict(&Matrix::from_rows(&[[9.0], [8.0], [7.0]])).unwrap();
        assert_eq!(p, vec![4.0, 4.0, 4.0]);
        assert!(f.fit_seconds() >= 0.0);
    }

    #[test]
    fn linear_pipeline_exact_fit() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.37 - 2.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 3.0 * r[0] + 1.0).collect();
        let d = regression_data(rows, y);
        let f = fit(&PipelineGraph::single(LinearRegression), &d, &mut seeded(0)).unwrap();
        let p = f.predict(&d.features).unwrap();
        let rmse = (p.iter().zip(&d.target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 20.0).sqrt();
        assert!(rmse <= 1e-6);
    }

    #[test]
    fn stacking_shape_law() {
        let root = NodeSpec::with_children(
            LinearRegression,
            vec![NodeSpec::leaf(MeanBaseline), NodeSpec::leaf(MeanBaseline)],
        );
        assert_eq!(input_width(&root, 7), 2);
        let g = PipelineGraph::new(root);
        let d = synth_dataset(SynthKind::FriedmanLike, 40, 0.5, 1).unwrap();
        let f = fit(&g, &d, &mut seeded(0)).unwrap();
        assert_eq!(f.root.model.kind(), LinearRegression);
        let TrainedAtomic::Linear { weights, .. } = &f.root.model else { panic!() };
        assert_eq!(weights.len(), 2);

        let mixed = NodeSpec::with_children(
            LinearRegression,
            vec![
                NodeSpec::leaf(DecisionTree),
                NodeSpec::leaf(StandardScaler),
                NodeSpec::with_children(StandardScaler, vec![NodeSpec::leaf(KNearestNeighbors)]),
            ],
        );
        assert_eq!(input_width(&mixed, 10), 1 + 10 + 1);
        let f = fit(&PipelineGraph::new(mixed), &d, &mut seeded(0)).unwrap();
        let TrainedAtomic::Linear { weights, .. } = &f.root.model else { panic!() };
        assert_eq!(weights.len(), 12);
    }

    #[test]
    fn scaler_then_ols_matches_plain_ols() {
        let d = synth_dataset(SynthKind::LinearRegression, 60, 0.0, 4).unwrap();
        let plain = fit(&PipelineGraph::single(LinearRegression), &d, &mut seeded(0)).unwrap();
        let scaled = PipelineGraph::new(NodeSpec::with_children(LinearRegression, vec![NodeSpec::leaf(StandardScaler)]));
        let scaled = fit(&scaled, &d, &mut seeded(0)).unwrap();
        let a = plain.predict(&d.features).unwrap();
        let b = scaled.predict(&d.features).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() <= 1e-6);
        }
    }

    #[test]
    fn predict_checks_columns() {
        let d = synth_dataset(SynthKind::LinearRegression, 30, 0.1, 4).unwrap();
        let f = fit(&PipelineGraph::single(RidgeRegression), &d, &mut seeded(0)).unwrap();
        assert_eq!(
            f.predict(&Matrix::zeros(2, 3)),
            Err(Error::ShapeMismatch { expected: 5, got: 3 })
        );
    }

    #[test]
    fn fit_rejects_degenerate_data() {
        let d = Dataset::new(Matrix::from_rows(&[[0.0], [1.0]]), vec![1.0, 1.0], TaskType::BinaryClassification).unwrap();
        assert!(matches!(
            fit(&PipelineGraph::single(LogisticRegression), &d, &mut seeded(0)),
            Err(Error::DegenerateData(_))
        ));
        let d = regression_data(vec![vec![0.0]], vec![1.0]);
        assert!(matches!(
            fit(&PipelineGraph::single(MeanBaseline), &d, &mut seeded(0)),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn classification_scores_in_unit_interval() {
        let d = synth_dataset(SynthKind::NoisyXor, 120, 0.1, 2).unwrap();
        let mut rng = seeded(8);
        for _ in 0..30 {
            let g = random_pipeline(&ModelKind::ALL, TaskType::BinaryClassification, 3, &mut rng).unwrap();
            let f = fit(&g, &d, &mut rng).unwrap();
            let p = f.predict(&d.features).unwrap();
            assert!(p.iter().all(|s| (0.0..=1.0).contains(s)), "{g}");
        }
    }

    #[test]
    fn json_round_trip_and_errors() {
        let single = PipelineGraph::single(KNearestNeighbors);
        assert_eq!(PipelineGraph::from_json(&single.to_json()).unwrap(), single);
        let deep = PipelineGraph::new(NodeSpec::with_children(
            LogisticRegression,
            vec![
                chain(&[DecisionTree, StandardScaler, GaussianNaiveBayes]),
                NodeSpec::leaf(BaggedTrees),
            ],
        ));
        let text = deep.to_json();
        assert!(text.starts_with("{\"kind\":\"LogisticRegression\",\"params\":{"));
        assert_eq!(PipelineGraph::from_json(&text).unwrap(), deep);
        let truncated = &text[..text.len() / 2];
        assert!(matches!(PipelineGraph::from_json(truncated), Err(Error::Parse { .. })));
        assert!(matches!(PipelineGraph::from_json("{\"kind\":\"Nope\"}"), Err(Error::Parse { .. })));
    }
}
