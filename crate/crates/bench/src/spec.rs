use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use gpfree_core::data::{load_csv, synth_dataset, SynthKind, TargetColumn};
use gpfree_core::optimizer::{Budget, FIXED_DEPTH};
use gpfree_core::{Dataset, PenaltyWeights, TaskType};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Exp1,
    Exp2,
    Exp3,
    Baseline,
}

impl ExperimentId {
    pub fn variants(self) -> &'static [Variant] {
        use Variant::*;
        match self {
            ExperimentId::Exp1 => &[SingleObjective, SingleObjectivePenalty, GpcompFree],
            ExperimentId::Exp2 => &[Nsga2Selection, Spea2Selection],
            ExperimentId::Exp3 => &[ParameterFreeFd, GpcompFree, SteadyStateFd, SteadyState],
            ExperimentId::Baseline => &[BaggedTrees, ConstantBaseline],
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentId::Exp1 => "exp1",
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Exp3 => "exp3",
            ExperimentId::Baseline => "baseline",
        })
    }
}

impl FromStr for ExperimentId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp1" => Ok(ExperimentId::Exp1),
            "exp2" => Ok(ExperimentId::Exp2),
            "exp3" => Ok(ExperimentId::Exp3),
            "baseline" => Ok(ExperimentId::Baseline),
            other => Err(BenchError::Config(format!("unknown experiment {other:?}"))),
        }
    }
}

/// One optimizer configuration compared within an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    SingleObjective,
    SingleObjectivePenalty,
    /// Parameter-free multi-objective GP with adaptive depth.
    GpcompFree,
    Nsga2Selection,
    Spea2Selection,
    ParameterFreeFd,
    SteadyStateFd,
    SteadyState,
    BaggedTrees,
    /// Majority class or mean target, depending on the task.
    ConstantBaseline,
}

impl Variant {
    pub const ALL: [Variant; 10] = [
        Variant::SingleObjective,
        Variant::SingleObjectivePenalty,
        Variant::GpcompFree,
        Variant::Nsga2Selection,
        Variant::Spea2Selection,
        Variant::ParameterFreeFd,
        Variant::SteadyStateFd,
        Variant::SteadyState,
        Variant::BaggedTrees,
        Variant::ConstantBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::SingleObjective => "single_objective",
            Variant::SingleObjectivePenalty => "single_objective_penalty",
            Variant::GpcompFree => "gpcomp_free",
            Variant::Nsga2Selection => "nsga2_selection",
            Variant::Spea2Selection => "spea2_selection",
            Variant::ParameterFreeFd => "parameter_free_fd",
            Variant::SteadyStateFd => "steady_state_fd",
            Variant::SteadyState => "steady_state",
            Variant::BaggedTrees => "bagged_trees",
            Variant::ConstantBaseline => "constant_baseline",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, Variant::BaggedTrees | Variant::ConstantBaseline)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown variant {s:?}")))
    }
}

/// Where the dataset comes from: `path/to/file.csv` or `synth:kind:n:noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DataSource {
    Csv(PathBuf),
    Synth { kind: SynthKind, n: usize, noise: f64 },
}

impl FromStr for DataSource {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let Some(rest) = s.strip_prefix("synth:") else {
            if s.is_empty() {
                return Err(BenchError::Config("empty data source".into()));
            }
            return Ok(DataSource::Csv(PathBuf::from(s)));
        };
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || BenchError::Config(format!("expected synth:kind:n:noise, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let kind = parts[0].parse().map_err(|e| BenchError::Config(format!("{e}")))?;
        let n = parts[1].parse().map_err(|_| bad())?;
        let noise: f64 = parts[2].parse().map_err(|_| bad())?;
        if !noise.is_finite() || noise < 0.0 {
            return Err(bad());
        }
        Ok(DataSource::Synth { kind, n, noise })
    }
}

impl TryFrom<String> for DataSource {
    type Error = BenchError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DataSource> for String {
    fn from(d: DataSource) -> String {
        d.to_string()
    }
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSource::Csv(p) => write!(f, "{}", p.display()),
            DataSource::Synth { kind, n, noise } => write!(f, "synth:{}:{n}:{noise}", kind.name()),
        }
    }
}

/// Optimizer settings shared by the variants of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantSettings {
    /// Population and offspring size of the fixed-parameter variants.
    pub pop_size: usize,
    pub tournament_size: usize,
    pub cross_rate: f64,
    pub mut_rate: f64,
    /// Depth limit of the single-objective and fixed-depth variants.
    pub fixed_depth: usize,
    pub penalty: PenaltyWeights,
    /// Adds fit time as a third objective.
    pub time_objective: bool,
}

impl Default for VariantSettings {
    fn default() -> Self {
        Self {
            pop_size: 20,
            tournament_size: 2,
            cross_rate: 0.5,
            mut_rate: 0.5,
            fixed_depth: FIXED_DEPTH,
            penalty: PenaltyWeights::default(),
            time_objective: false,
        }
    }
}

fn default_repetitions() -> usize {
    10
}

fn default_train_fraction() -> f64 {
    0.7
}

/// Everything needed to reproduce an experiment. Stored as `spec.json` next
/// to the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentId,
    pub data: DataSource,
    /// CSV target column (name or zero-based index); defaults to the last column.
    #[serde(default)]
    pub target: Option<String>,
    /// CSV task; inferred from the target values when absent.
    #[serde(default)]
    pub task: Option<TaskType>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Seeds the synthetic generator and the train/test split; repetition
    /// seeds default to `seed_base + rep`.
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub budget: Budget,
    /// Fill the elapsed_s trace column. Timed traces are not reproducible.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub settings: VariantSettings,
}

impl ExperimentSpec {
    pub fn new(experiment: ExperimentId, data: DataSource) -> Self {
        Self {
            experiment,
            data,
            target: None,
            task: None,
            repetitions: default_repetitions(),
            seed_base: 0,
            seeds: None,
            train_fraction: default_train_fraction(),
            budget: Budget::default(),
            record_timing: false,
            settings: VariantSettings::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes") + "\n"
    }

    /// One seed per repetition.
    pub fn resolved_seeds(&self) -> Vec<u64> {
        self.seeds
            .clone()
            .unwrap_or_else(|| (0..self.repetitions as u64).map(|r| self.seed_base.wrapping_add(r)).collect())
    }

    /// Timing is recorded when asked for or when a wall-time budget is set.
    pub fn timed(&self) -> bool {
        self.record_timing || self.budget.time_limit_s.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: &str| Err(BenchError::Config(m.to_string()));
        if self.repetitions == 0 {
            return cfg("repetitions must be at least 1");
        }
        if let Some(seeds) = &self.seeds {
            if seeds.len() != self.repetitions {
                return Err(BenchError::Config(format!(
                    "{} seeds given for {} repetitions",
                    seeds.len(),
                    self.repetitions
                )));
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return cfg("train_fraction must lie in (0, 1)");
        }
        if self.budget.generations.is_none() && self.budget.time_limit_s.is_none() {
            return cfg("budget needs a generation cap or a time limit");
        }
        if self.budget.time_limit_s.is_some_and(|t| !(t > 0.0)) {
            return cfg("time limit must be positive");
        }
        let s = &self.settings;
        if s.pop_size == 0 || s.tournament_size == 0 {
            return cfg("pop_size and tournament_size must be positive");
        }
        if !(0.0..=1.0).contains(&s.cross_rate) || !(0.0..=1.0).contains(&s.mut_rate) {
            return cfg("rates must lie in [0, 1]");
        }
        if s.fixed_depth == 0 || s.fixed_depth > gpfree_core::pipeline::DEPTH_HARD_CAP {
            return cfg("fixed_depth must lie in 1..=6");
        }
        Ok(())
    }

    /// Loads or generates the dataset.
    pub fn load_data(&self) -> Result<Dataset> {
        match &self.data {
            DataSource::Synth { kind, n, noise } => Ok(synth_dataset(*kind, *n, *noise, self.seed_base)?),
            DataSource::Csv(path) => {
                let target: TargetColumn = match &self.target {
                    Some(t) => t.parse().expect("infallible"),
                    None => last_column(path)?,
                };
                let data = load_csv(path, &target, TaskType::Regression)?;
                let task = self.task.unwrap_or_else(|| {
                    if data.target.iter().all(|&y| y == 0.0 || y == 1.0) {
                        TaskType::BinaryClassification
                    } else {
                        TaskType::Regression
                    }
                });
                if task == TaskType::Regression {
                    return Ok(data);
                }
                let names = data.feature_names.clone();
                let mut d = Dataset::new(data.features, data.target, task)?;
                if let Some(names) = names {
                    d = d.with_feature_names(names);
                }
                Ok(d)
            }
        }
    }
}

fn last_column(path: &PathBuf) -> Result<TargetColumn> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| gpfree_core::Error::Csv(e.to_string()))?;
    let n = rdr.headers().map_err(|e| gpfree_core::Error::Csv(e.to_string()))?.len();
    if n < 2 {
        return Err(gpfree_core::Error::InvalidDataset("need at least one feature and a target column".into()).into());
    }
    Ok(TargetColumn::Index(n - 1))
}
