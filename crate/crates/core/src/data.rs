//! Datasets: the feature matrix, CSV loading, splitting, class imbalance and
//! synthetic generators used for desk-scale experiments.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch(data.len(), rows * cols));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row vectors. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Single-column matrix.
    pub fn column_vector(values: Vec<f64>) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Column-wise concatenation. All parts must share the row count.
    pub fn hstack(parts: &[Matrix]) -> Result<Self> {
        let rows = parts.first().map_or(0, |m| m.rows);
        if let Some(bad) = parts.iter().find(|m| m.rows != rows) {
            return Err(Error::LengthMismatch(bad.rows, rows));
        }
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for m in parts {
                data.extend_from_slice(m.row(i));
            }
        }
        Ok(Self { rows, cols, data })
    }
}

/// Learning task of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    BinaryClassification,
    Regression,
}

impl TaskType {
    pub fn is_classification(self) -> bool {
        matches!(self, TaskType::BinaryClassification)
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskType::BinaryClassification => "binary_classification",
            TaskType::Regression => "regression",
        })
    }
}

impl FromStr for TaskType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary_classification" | "classification" | "clf" => {
                Ok(TaskType::BinaryClassification)
            }
            "regression" | "regr" => Ok(TaskType::Regression),
            other => Err(Error::InvalidDataset(format!("unknown task type {other:?}"))),
        }
    }
}

/// Features, target and task type. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub target: Vec<f64>,
    pub task: TaskType,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Checks the dataset invariants: matching lengths, finite cells, binary
    /// targets in {0, 1} for classification.
    pub fn new(features: Matrix, target: Vec<f64>, task: TaskType) -> Result<Self> {
        if features.rows() != target.len() {
            return Err(Error::LengthMismatch(features.rows(), target.len()));
        }
        if let Some(pos) = features.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::MissingValue {
                row: pos / features.cols().max(1),
                col: pos % features.cols().max(1),
            });
        }
        if let Some(row) = target.iter().position(|v| !v.is_finite()) {
            return Err(Error::MissingValue {
                row,
                col: features.cols(),
            });
        }
        if task.is_classification() && target.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidDataset(
                "binary classification targets must be 0 or 1".into(),
            ));
        }
        Ok(Self {
            features,
            target,
            task,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = Some(names);
        self
    }

    pub fn n_samples(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(idx),
            target: idx.iter().map(|&i| self.target[i]).collect(),
            task: self.task,
            feature_names: self.feature_names.clone(),
        }
    }

    /// Sample counts for classes 0 and 1.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.target.iter().filter(|&&v| v == 1.0).count();
        [self.target.len() - ones, ones]
    }
}

/// Which CSV column holds the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetColumn {
    Index(usize),
    Name(String),
}

impl FromStr for TargetColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => TargetColumn::Index(i),
            Err(_) => TargetColumn::Name(s.to_string()),
        })
    }
}

const MISSING_TOKENS: [&str; 8] = ["", "NA", "N/A", "NaN", "nan", "null", "NULL", "?"];

/// Loads a comma-separated file with a header row. Row and column indices in
/// errors are zero-based and count data rows only.
pub fn load_csv(path: impl AsRef<Path>, target: &TargetColumn, task: TaskType) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| Error::Csv(e.to_string()))?;
    read_csv(file, target, task)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, target: &TargetColumn, task: TaskType) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let target_idx = match target {
        TargetColumn::Index(i) if *i < headers.len() => *i,
        TargetColumn::Index(i) => return Err(Error::UnknownColumn(i.to_string())),
        TargetColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.clone()))?,
    };

    let n_features = headers.len() - 1;
    let mut features = Vec::new();
    let mut y = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        if record.len() != headers.len() {
            return Err(Error::Csv(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        for (col, cell) in record.iter().enumerate() {
            if MISSING_TOKENS.contains(&cell) {
                return Err(Error::MissingValue { row, col });
            }
            let value: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row,
                col,
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::MissingValue { row, col });
            }
            if col == target_idx {
                y.push(value);
            } else {
                features.push(value);
            }
        }
    }
    let rows = y.len();
    let names = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Ok(Dataset::new(Matrix::new(rows, n_features, features)?, y, task)?.with_feature_names(names))
}

/// Writes a dataset as CSV with the target in the last column named `target`.
pub fn write_csv<W: std::io::Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match &data.feature_names {
        Some(names) => names.clone(),
        None => (0..data.n_features()).map(|j| format!("x{j}")).collect(),
    };
    header.push("target".into());
    wtr.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;
    for i in 0..data.n_samples() {
        let mut rec: Vec<String> = data.features.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(data.target[i].to_string());
        wtr.write_record(&rec).map_err(|e| Error::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// Shuffled split with `ceil(train_fraction * N)` training rows. Classification
/// splits are stratified: each class contributes `ceil(train_fraction * n_c)`
/// rows to the training part, and both parts must contain both classes.
pub fn train_test_split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = d.n_samples();
    if n < 4 {
        return Err(Error::InvalidDataset(format!("need at least 4 samples to split, got {n}")));
    }
    let mut rng = seeded(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);

    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = if d.task.is_classification() {
        let counts = d.class_counts();
        for (class, &count) in counts.iter().enumerate() {
            if count < 2 {
                return Err(Error::StratificationImpossible { class, count });
            }
        }
        let quota = counts.map(|c| (train_fraction * c as f64).ceil() as usize);
        let mut taken = [0usize; 2];
        let mut train = Vec::new();
        let mut test = Vec::new();
        for &i in &perm {
            let c = d.target[i] as usize;
            if taken[c] < quota[c] {
                taken[c] += 1;
                train.push(i);
            } else {
                test.push(i);
            }
        }
        for (class, &count) in counts.iter().enumerate() {
            if quota[class] == 0 || quota[class] >= count {
                return Err(Error::StratificationImpossible { class, count });
            }
        }
        (train, test)
    } else {
        let n_train = ((train_fraction * n as f64).ceil() as usize).clamp(1, n - 1);
        (perm[..n_train].to_vec(), perm[n_train..].to_vec())
    };
    Ok((d.subset(&train_idx), d.subset(&test_idx)))
}

/// Class imbalance `K * sum_c (n_c / N - 1/K)^2` for labels `0..K`.
pub fn imbalance_metric(target: &[f64], n_classes: usize) -> Result<f64> {
    if n_classes < 2 {
        return Err(Error::InvalidDataset("imbalance needs at least two classes".into()));
    }
    let mut counts = vec![0usize; n_classes];
    for &v in target {
        let c = v as usize;
        if v < 0.0 || v.fract() != 0.0 || c >= n_classes {
            return Err(Error::InvalidDataset(format!("label {v} outside 0..{n_classes}")));
        }
        counts[c] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(empty));
    }
    let n = target.len() as f64;
    let k = n_classes as f64;
    Ok(k * counts
        .iter()
        .map(|&c| (c as f64 / n - 1.0 / k).powi(2))
        .sum::<f64>())
}

/// Synthetic dataset families.
///
/// For classification kinds `noise` is a label-flip probability, for
/// regression kinds it is the standard deviation of additive Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// `y = 1.5 x0 - 2 x1 + 0.5 x2 + x3 - 0.75 x4 + 3`, `x ~ U[-1, 1]^5`.
    LinearRegression,
    /// `y = [|x0| > 0.5] xor [x1 > 0.5]`, `x ~ U[-1, 1]^4` (two distractor columns).
    /// Each feature alone is uncorrelated with `y`, but `x0` shifts the class
    /// rate non-monotonically, which greedy tree splits can pick up.
    NoisyXor,
    /// Two unit-variance Gaussian classes 4 sigma apart along `x0`, `x1` is pure noise.
    TwoGaussians,
    /// Friedman #1: `10 sin(pi x0 x1) + 20 (x2 - 0.5)^2 + 10 x3 + 5 x4`, `x ~ U[0, 1]^10`.
    FriedmanLike,
}

impl SynthKind {
    pub fn task(self) -> TaskType {
        match self {
            SynthKind::LinearRegression | SynthKind::FriedmanLike => TaskType::Regression,
            SynthKind::NoisyXor | SynthKind::TwoGaussians => TaskType::BinaryClassification,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SynthKind::LinearRegression => "linear_regression",
            SynthKind::NoisyXor => "noisy_xor",
            SynthKind::TwoGaussians => "two_gaussians",
            SynthKind::FriedmanLike => "friedman_like",
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear_regression" => Ok(SynthKind::LinearRegression),
            "noisy_xor" => Ok(SynthKind::NoisyXor),
            "two_gaussians" => Ok(SynthKind::TwoGaussians),
            "friedman_like" => Ok(SynthKind::FriedmanLike),
            other => Err(Error::InvalidDataset(format!("unknown synthetic kind {other:?}"))),
        }
    }
}

/// Deterministic synthetic dataset. Requires `n >= 20`.
pub fn synth_dataset(kind: SynthKind, n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 20 {
        return Err(Error::InvalidDataset(format!("synthetic datasets need n >= 20, got {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidDataset(format!("invalid noise level {noise}")));
    }
    let mut rng = seeded(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let flip = |rng: &mut Rng, label: bool| -> f64 {
        let flipped = rng.random::<f64>() < noise;
        f64::from(u8::from(label != flipped))
    };
    match kind {
        SynthKind::LinearRegression => {
            const W: [f64; 5] = [1.5, -2.0, 0.5, 1.0, -0.75];
            for _ in 0..n {
                let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
                let clean: f64 = 3.0 + x.iter().zip(W).map(|(a, w)| a * w).sum::<f64>();
                y.push(clean + noise * std_normal.sample(&mut rng));
                rows.push(x);
            }
        }
        SynthKind::NoisyXor => {
            for _ in 0..n {
                let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let label = (x[0].abs() > 0.5) != (x[1] > 0.5);
                y.push(flip(&mut rng, label));
                rows.push(x);
            }
        }
        SynthKind::TwoGaussians => {
            for i in 0..n {
                let class = i % 2 == 1;
                let shift = if class { 4.0 } else { 0.0 };
                let x = vec![
                    shift + std_normal.sample(&mut rng),
                    std_normal.sample(&mut rng),
                ];
                y.push(flip(&mut rng, class));
                rows.push(x);
            }
        }
        SynthKind::FriedmanLike => {
            for _ in 0..n {
                let x: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
                let clean = 10.0 * (PI * x[0] * x[1]).sin()
                    + 20.0 * (x[2] - 0.5).powi(2)
                    + 10.0 * x[3]
                    + 5.0 * x[4];
                y.push(clean + noise * std_normal.sample(&mut rng));
                rows.push(x);
            }
        }
    }
    Dataset::new(Matrix::from_rows(&rows), y, kind.task())
}
