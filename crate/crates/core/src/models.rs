//! Atomic learners occupying single pipeline nodes.
//!
//! Every learner is implemented here from scratch. Classifiers emit class-1
//! scores in `[0, 1]` so that ROC AUC can be computed on their output.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{Matrix, TaskType};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Hyperparameter map of a node. Keys are sorted so serialization is stable.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    MeanBaseline,
    MajorityBaseline,
    LinearRegression,
    RidgeRegression,
    LogisticRegression,
    KNearestNeighbors,
    DecisionTree,
    BaggedTrees,
    GaussianNaiveBayes,
    StandardScaler,
}

impl ModelKind {
    pub const ALL: [ModelKind; 10] = [
        ModelKind::MeanBaseline,
        ModelKind::MajorityBaseline,
        ModelKind::LinearRegression,
        ModelKind::RidgeRegression,
        ModelKind::LogisticRegression,
        ModelKind::KNearestNeighbors,
        ModelKind::DecisionTree,
        ModelKind::BaggedTrees,
        ModelKind::GaussianNaiveBayes,
        ModelKind::StandardScaler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::MeanBaseline => "MeanBaseline",
            ModelKind::MajorityBaseline => "MajorityBaseline",
            ModelKind::LinearRegression => "LinearRegression",
            ModelKind::RidgeRegression => "RidgeRegression",
            ModelKind::LogisticRegression => "LogisticRegression",
            ModelKind::KNearestNeighbors => "KNearestNeighbors",
            ModelKind::DecisionTree => "DecisionTree",
            ModelKind::BaggedTrees => "BaggedTrees",
            ModelKind::GaussianNaiveBayes => "GaussianNaiveBayes",
            ModelKind::StandardScaler => "StandardScaler",
        }
    }

    pub fn supports(self, task: TaskType) -> bool {
        use ModelKind::*;
        match self {
            MeanBaseline | LinearRegression | RidgeRegression => task == TaskType::Regression,
            MajorityBaseline | LogisticRegression | GaussianNaiveBayes => {
                task == TaskType::BinaryClassification
            }
            KNearestNeighbors | DecisionTree | BaggedTrees | StandardScaler => true,
        }
    }

    pub fn is_transformer(self) -> bool {
        self == ModelKind::StandardScaler
    }

    pub fn is_predictor(self) -> bool {
        !self.is_transformer()
    }

    /// Fixed default hyperparameters.
    pub fn default_params(self) -> Params {
        let pairs: &[(&str, f64)] = match self {
            ModelKind::RidgeRegression => &[("lambda", 1.0)],
            ModelKind::LogisticRegression => &[("epochs", 200.0), ("step", 0.1)],
            ModelKind::KNearestNeighbors => &[("k", 5.0)],
            ModelKind::DecisionTree => &[("max_depth", 5.0), ("min_leaf", 2.0)],
            ModelKind::BaggedTrees => &[
                ("bootstrap", 1.0),
                ("max_depth", 5.0),
                ("min_leaf", 2.0),
                ("n_trees", 20.0),
            ],
            _ => &[],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    /// Kinds in `catalog` usable for `task`.
    pub fn compatible(catalog: &[ModelKind], task: TaskType) -> Vec<ModelKind> {
        catalog.iter().copied().filter(|k| k.supports(task)).collect()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidPipeline(format!("unknown model kind {s:?}")))
    }
}

fn param(params: &Params, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn param_usize(params: &Params, key: &str, default: usize) -> usize {
    let v = param(params, key, default as f64);
    if v.is_finite() && v >= 1.0 {
        v as usize
    } else {
        default
    }
}

/// CART settings shared by single trees and bagged ensembles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl TreeParams {
    fn from_params(p: &Params) -> Self {
        Self {
            max_depth: param_usize(p, "max_depth", 5),
            min_leaf: param_usize(p, "min_leaf", 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TreeNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Regression tree on squared error. On 0/1 targets the squared-error
/// criterion orders splits exactly like Gini impurity, so the same tree serves
/// classification with leaf values equal to class-1 frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn fit(x: &Matrix, y: &[f64], params: TreeParams) -> Self {
        let mut tree = Tree { nodes: Vec::new() };
        let idx: Vec<usize> = (0..y.len()).collect();
        tree.grow(x, y, idx, 0, params);
        tree
    }

    fn grow(&mut self, x: &Matrix, y: &[f64], idx: Vec<usize>, depth: usize, params: TreeParams) -> usize {
        let id = self.nodes.len();
        let n = idx.len() as f64;
        let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
        self.nodes.push(TreeNode::Leaf(mean));

        let impure = idx.iter().any(|&i| (y[i] - mean).abs() > 1e-12);
        if depth >= params.max_depth || idx.len() < 2 * params.min_leaf || !impure {
            return id;
        }
        let Some((feature, threshold)) = best_split(x, y, &idx, params.min_leaf) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| x.get(i, feature) <= threshold);
        let l = self.grow(x, y, left, depth + 1, params);
        let r = self.grow(x, y, right, depth + 1, params);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left: l,
            right: r,
        };
        id
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf(v) => return v,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Leaf(_) => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Exhaustive search over features and midpoints between distinct sorted
/// values. Splits with zero gain are accepted; the first best split wins ties.
fn best_split(x: &Matrix, y: &[f64], idx: &[usize], min_leaf: usize) -> Option<(usize, f64)> {
    let n = idx.len();
    let total: f64 = idx.iter().map(|&i| y[i]).sum();
    let total_sq: f64 = idx.iter().map(|&i| y[i] * y[i]).sum();
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = idx.to_vec();
    for feature in 0..x.cols() {
        order.sort_by(|&a, &b| x.get(a, feature).total_cmp(&x.get(b, feature)).then(a.cmp(&b)));
        let (mut sum_l, mut sq_l) = (0.0, 0.0);
        for pos in 0..n - 1 {
            let yi = y[order[pos]];
            sum_l += yi;
            sq_l += yi * yi;
            let n_l = pos + 1;
            let n_r = n - n_l;
            if n_l < min_leaf || n_r < min_leaf {
                continue;
            }
            let here = x.get(order[pos], feature);
            let next = x.get(order[pos + 1], feature);
            if next <= here {
                continue;
            }
            let sum_r = total - sum_l;
            let sq_r = total_sq - sq_l;
            let sse = (sq_l - sum_l * sum_l / n_l as f64) + (sq_r - sum_r * sum_r / n_r as f64);
            if best.is_none_or(|(b, _, _)| sse < b - 1e-12) {
                best = Some((sse, feature, split_point(here, next)));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Midpoint of `lo < hi` that keeps `hi` on the right side even when the two
/// are adjacent floats.
fn split_point(lo: f64, hi: f64) -> f64 {
    let mid = lo + 0.5 * (hi - lo);
    if mid < hi && mid.is_finite() {
        mid
    } else {
        lo
    }
}

/// Learned state of an atomic model.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedAtomic {
    Constant {
        kind: ModelKind,
        value: f64,
    },
    Linear {
        kind: ModelKind,
        weights: Vec<f64>,
        intercept: f64,
        /// Set when OLS hit a singular system and fell back to a tiny ridge.
        ridge_fallback: bool,
    },
    Logistic {
        mean: Vec<f64>,
        scale: Vec<f64>,
        weights: Vec<f64>,
        bias: f64,
    },
    Knn {
        x: Matrix,
        y: Vec<f64>,
        k: usize,
    },
    Tree(Tree),
    Bagged(Vec<Tree>),
    NaiveBayes {
        log_prior: [f64; 2],
        mean: [Vec<f64>; 2],
        var: [Vec<f64>; 2],
    },
    Scaler {
        mean: Vec<f64>,
        std: Vec<f64>,
    },
}

/// Output of an atomic model: a prediction column or a transformed matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum AtomicOutput {
    Predictions(Vec<f64>),
    Features(Matrix),
}

impl TrainedAtomic {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedAtomic::Constant { kind, .. } | TrainedAtomic::Linear { kind, .. } => *kind,
            TrainedAtomic::Logistic { .. } => ModelKind::LogisticRegression,
            TrainedAtomic::Knn { .. } => ModelKind::KNearestNeighbors,
            TrainedAtomic::Tree(_) => ModelKind::DecisionTree,
            TrainedAtomic::Bagged(_) => ModelKind::BaggedTrees,
            TrainedAtomic::NaiveBayes { .. } => ModelKind::GaussianNaiveBayes,
            TrainedAtomic::Scaler { .. } => ModelKind::StandardScaler,
        }
    }

    /// Number of input columns the model was trained on, when it is recorded.
    fn input_cols(&self) -> Option<usize> {
        match self {
            TrainedAtomic::Constant { .. } | TrainedAtomic::Tree(_) | TrainedAtomic::Bagged(_) => None,
            TrainedAtomic::Linear { weights, .. } | TrainedAtomic::Logistic { weights, .. } => {
                Some(weights.len())
            }
            TrainedAtomic::Knn { x, .. } => Some(x.cols()),
            TrainedAtomic::NaiveBayes { mean, .. } => Some(mean[0].len()),
            TrainedAtomic::Scaler { mean, .. } => Some(mean.len()),
        }
    }
}

fn column_stats(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows() as f64;
    let mut mean = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
            *s += (v - m).powi(2);
        }
    }
    var.iter_mut().for_each(|s| *s /= n);
    (mean, var)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Least squares with intercept on centered data; `lambda` penalizes slopes only.
/// Returns `(weights, intercept, ridge_fallback)`.
fn fit_linear(x: &Matrix, y: &[f64], lambda: f64) -> (Vec<f64>, f64, bool) {
    let (n, d) = (x.rows(), x.cols());
    let (x_mean, _) = column_stats(x);
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let xc = DMatrix::from_fn(n, d, |i, j| x.get(i, j) - x_mean[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let gram = xc.transpose() * &xc;
    let rhs = xc.transpose() * yc;

    let solve = |lambda: f64| -> Option<DVector<f64>> {
        let mut a = gram.clone();
        for j in 0..d {
            a[(j, j)] += lambda;
        }
        let chol = a.cholesky()?;
        let diag = chol.l_dirty().diagonal();
        let max = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if d > 0 && (max == 0.0 || (min / max).powi(2) < 1e-13) {
            return None;
        }
        Some(chol.solve(&rhs))
    };

    let (w, fallback) = match solve(lambda) {
        Some(w) => (w, false),
        None => {
            let floor = if lambda > 0.0 { lambda } else { 1e-6 };
            let scale = gram.diagonal().iter().fold(0.0f64, |m, v| m.max(*v)).max(1.0);
            let mut a = gram.clone();
            let mut ridge = floor;
            let w = loop {
                for j in 0..d {
                    a[(j, j)] = gram[(j, j)] + ridge;
                }
                if let Some(c) = a.clone().cholesky() {
                    break c.solve(&rhs);
                }
                ridge *= 10.0;
                if ridge > 1e6 * scale {
                    break DVector::zeros(d);
                }
            };
            (w, true)
        }
    };
    let weights: Vec<f64> = w.iter().copied().collect();
    let intercept = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
    (weights, intercept, fallback)
}

/// Full-batch gradient descent on the mean log-loss over internally
/// standardized features. Returns the trained model and the loss recorded
/// before every epoch plus the final loss.
pub(crate) fn fit_logistic_with_trace(
    x: &Matrix,
    y: &[f64],
    epochs: usize,
    step: f64,
) -> (TrainedAtomic, Vec<f64>) {
    let (n, d) = (x.rows(), x.cols());
    let (mean, var) = column_stats(x);
    let scale: Vec<f64> = var.iter().map(|v| if *v > 0.0 { v.sqrt() } else { 1.0 }).collect();
    let z = Matrix::new(
        n,
        d,
        (0..n)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| (x.get(i, j) - mean[j]) / scale[j])
            .collect(),
    )
    .expect("shape");
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut losses = Vec::with_capacity(epochs + 1);
    let loss = |w: &[f64], b: f64| -> f64 {
        (0..n)
            .map(|i| {
                let s = b + z.row(i).iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
                // log(1 + e^s) - y s, computed stably
                let softplus = if s > 0.0 { s + (-s).exp().ln_1p() } else { s.exp().ln_1p() };
                softplus - y[i] * s
            })
            .sum::<f64>()
            / n as f64
    };
    for _ in 0..epochs {
        losses.push(loss(&w, b));
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for i in 0..n {
            let row = z.row(i);
            let p = sigmoid(b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>());
            let r = p - y[i];
            gb += r;
            for (g, a) in gw.iter_mut().zip(row) {
                *g += r * a;
            }
        }
        b -= step * gb / n as f64;
        for (wj, g) in w.iter_mut().zip(&gw) {
            *wj -= step * g / n as f64;
        }
    }
    losses.push(loss(&w, b));
    (
        TrainedAtomic::Logistic {
            mean,
            scale,
            weights: w,
            bias: b,
        },
        losses,
    )
}

fn fit_naive_bayes(x: &Matrix, y: &[f64]) -> TrainedAtomic {
    let d = x.cols();
    let (_, overall_var) = column_stats(x);
    let smoothing = 1e-9 * overall_var.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut mean = [vec![0.0; d], vec![0.0; d]];
    let mut var = [vec![0.0; d], vec![0.0; d]];
    let mut count = [0usize; 2];
    for i in 0..x.rows() {
        let c = y[i] as usize;
        count[c] += 1;
        for (m, v) in mean[c].iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for c in 0..2 {
        mean[c].iter_mut().for_each(|m| *m /= count[c].max(1) as f64);
    }
    for i in 0..x.rows() {
        let c = y[i] as usize;
        for ((s, v), m) in var[c].iter_mut().zip(x.row(i)).zip(&mean[c]) {
            *s += (v - m).powi(2);
        }
    }
    for c in 0..2 {
        let nc = count[c].max(1) as f64;
        var[c]
            .iter_mut()
            .for_each(|s| *s = (*s / nc + smoothing).max(1e-9));
    }
    let n = x.rows() as f64;
    let log_prior = count.map(|c| ((c as f64).max(0.5) / n).ln());
    TrainedAtomic::NaiveBayes {
        log_prior,
        mean,
        var,
    }
}

/// Trains one atomic model. Classification targets must be 0/1.
pub fn fit_atomic(
    kind: ModelKind,
    params: &Params,
    x: &Matrix,
    y: &[f64],
    task: TaskType,
    rng: &mut Rng,
) -> Result<TrainedAtomic> {
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch(x.rows(), y.len()));
    }
    if y.len() < 2 {
        return Err(Error::DegenerateData(format!("{} samples", y.len())));
    }
    if !kind.supports(task) {
        return Err(Error::InvalidPipeline(format!("{kind} does not support {task}")));
    }
    let n = y.len() as f64;
    Ok(match kind {
        ModelKind::MeanBaseline | ModelKind::MajorityBaseline => TrainedAtomic::Constant {
            kind,
            value: y.iter().sum::<f64>() / n,
        },
        ModelKind::LinearRegression => {
            let (weights, intercept, ridge_fallback) = fit_linear(x, y, 0.0);
            TrainedAtomic::Linear {
                kind,
                weights,
                intercept,
                ridge_fallback,
            }
        }
        ModelKind::RidgeRegression => {
            let lambda = param(params, "lambda", 1.0).max(0.0);
            let (weights, intercept, ridge_fallback) = fit_linear(x, y, lambda);
            TrainedAtomic::Linear {
                kind,
                weights,
                intercept,
                ridge_fallback,
            }
        }
        ModelKind::LogisticRegression => {
            let epochs = param_usize(params, "epochs", 200);
            let step = param(params, "step", 0.1);
            fit_logistic_with_trace(x, y, epochs, step).0
        }
        ModelKind::KNearestNeighbors => TrainedAtomic::Knn {
            x: x.clone(),
            y: y.to_vec(),
            k: param_usize(params, "k", 5).min(y.len()),
        },
        ModelKind::DecisionTree => TrainedAtomic::Tree(Tree::fit(x, y, TreeParams::from_params(params))),
        ModelKind::BaggedTrees => {
            let tree_params = TreeParams::from_params(params);
            let n_trees = param_usize(params, "n_trees", 20);
            let bootstrap = param(params, "bootstrap", 1.0) != 0.0;
            let trees = (0..n_trees)
                .map(|_| {
                    if bootstrap {
                        let idx: Vec<usize> = (0..y.len()).map(|_| rng.random_range(0..y.len())).collect();
                        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
                        Tree::fit(&x.select_rows(&idx), &ys, tree_params)
                    } else {
                        Tree::fit(x, y, tree_params)
                    }
                })
                .collect();
            TrainedAtomic::Bagged(trees)
        }
        ModelKind::GaussianNaiveBayes => fit_naive_bayes(x, y),
        ModelKind::StandardScaler => {
            let (mean, var) = column_stats(x);
            let std = var.iter().map(|v| if *v > 0.0 { v.sqrt() } else { 1.0 }).collect();
            TrainedAtomic::Scaler { mean, std }
        }
    })
}

/// Applies a trained model to `x`.
pub fn predict_atomic(model: &TrainedAtomic, x: &Matrix) -> Result<AtomicOutput> {
    if let Some(cols) = model.input_cols() {
        if cols != x.cols() {
            return Err(Error::ShapeMismatch {
                expected: cols,
                got: x.cols(),
            });
        }
    }
    let rows = 0..x.rows();
    let preds: Vec<f64> = match model {
        TrainedAtomic::Constant { value, .. } => vec![*value; x.rows()],
        TrainedAtomic::Linear {
            weights, intercept, ..
        } => rows
            .map(|i| intercept + x.row(i).iter().zip(weights).map(|(a, w)| a * w).sum::<f64>())
            .collect(),
        TrainedAtomic::Logistic {
            mean,
            scale,
            weights,
            bias,
        } => rows
            .map(|i| {
                let s: f64 = x
                    .row(i)
                    .iter()
                    .zip(mean)
                    .zip(scale)
                    .zip(weights)
                    .map(|(((v, m), s), w)| (v - m) / s * w)
                    .sum();
                sigmoid(bias + s)
            })
            .collect(),
        TrainedAtomic::Knn { x: train, y, k } => rows
            .map(|i| {
                let q = x.row(i);
                let mut dist: Vec<(f64, usize)> = (0..train.rows())
                    .map(|t| {
                        let d2 = train.row(t).iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                        (d2, t)
                    })
                    .collect();
                let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if *k < dist.len() {
                    dist.select_nth_unstable_by(*k - 1, cmp);
                }
                dist[..*k].iter().map(|&(_, t)| y[t]).sum::<f64>() / *k as f64
            })
            .collect(),
        TrainedAtomic::Tree(tree) => rows.map(|i| tree.predict_row(x.row(i))).collect(),
        TrainedAtomic::Bagged(trees) => rows
            .map(|i| trees.iter().map(|t| t.predict_row(x.row(i))).sum::<f64>() / trees.len() as f64)
            .collect(),
        TrainedAtomic::NaiveBayes {
            log_prior,
            mean,
            var,
        } => rows
            .map(|i| {
                let ll: Vec<f64> = (0..2)
                    .map(|c| {
                        log_prior[c]
                            + x.row(i)
                                .iter()
                                .zip(&mean[c])
                                .zip(&var[c])
                                .map(|((v, m), s)| {
                                    -0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m).powi(2) / s)
                                })
                                .sum::<f64>()
                    })
                    .collect();
                sigmoid(ll[1] - ll[0])
            })
            .collect(),
        TrainedAtomic::Scaler { mean, std } => {
            let mut out = x.clone();
            for i in 0..x.rows() {
                for j in 0..x.cols() {
                    out.set(i, j, (x.get(i, j) - mean[j]) / std[j]);
                }
            }
            return Ok(AtomicOutput::Features(out));
        }
    };
    Ok(AtomicOutput::Predictions(preds))
}
