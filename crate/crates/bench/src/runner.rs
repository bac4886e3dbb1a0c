use std::fs;
use std::path::{Path, PathBuf};

use gpfree_core::data::{train_test_split, write_csv};
use gpfree_core::objectives::{write_pareto_csv, Normalizer};
use gpfree_core::optimizer::{
    holdout_quality, run_parameter_free, run_single_objective, run_steady_state_mo, Evaluator, GenerationRecord,
    ParameterFreeConfig, RunResult, RunTrace, SingleObjectiveConfig, SteadyStateConfig,
};
use gpfree_core::rng::derive_seed;
use gpfree_core::{Dataset, Individual, ModelKind, ObjectiveVector, ParetoArchive, PipelineGraph, Selection, TaskType};

use crate::error::{BenchError, Result};
use crate::plots::{render_plots, PlotRun};
use crate::spec::{ExperimentSpec, Variant};
use crate::summary::{summarize, write_finals, write_summary, FinalMetrics, SummaryRow};

/// One finished (variant, repetition) pair.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub variant: Variant,
    pub rep: usize,
    pub seed: u64,
    pub trace: RunTrace,
    pub front: Vec<Individual>,
    /// The pipeline reported for this run.
    pub best: Individual,
    pub evaluations: usize,
    /// Per-run normalized final hypervolume; `None` for single-node baselines.
    pub hv: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub train: Dataset,
    pub test: Dataset,
    pub runs: Vec<RunOutcome>,
    pub finals: Vec<FinalMetrics>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentReport {
    pub fn finals_for(&self, variant: Variant) -> Vec<&FinalMetrics> {
        self.finals.iter().filter(|f| f.variant == variant.name()).collect()
    }

    pub fn summary_for(&self, variant: Variant) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.variant == variant.name())
    }
}

/// Seed used to refit the reported pipeline on the full training split.
pub fn final_fit_seed(run_seed: u64) -> u64 {
    derive_seed(run_seed, u64::MAX, 2)
}

fn baseline_run(variant: Variant, train: &Dataset, seed: u64) -> gpfree_core::Result<(RunResult, Individual)> {
    let kind = match (variant, train.task) {
        (Variant::BaggedTrees, _) => ModelKind::BaggedTrees,
        (_, TaskType::BinaryClassification) => ModelKind::MajorityBaseline,
        (_, TaskType::Regression) => ModelKind::MeanBaseline,
    };
    let evaluator = Evaluator::new(train, derive_seed(seed, u64::MAX, 0), false)?;
    let ind = evaluator.evaluate(&PipelineGraph::single(kind), derive_seed(seed, 0, 0))?;
    let mut archive = ParetoArchive::new();
    archive.update([&ind]);
    let normalizer = Normalizer::from_points(&[ind.objectives]).expect("one point");
    let trace = RunTrace {
        records: vec![GenerationRecord {
            gen: 0,
            best_q: ind.objectives.q,
            hv: normalizer.hypervolume(&archive.objectives())?,
            mu: 1,
            lambda: 0,
            cross_rate: 0.0,
            mut_rate: 0.0,
            max_depth: 1,
            elapsed_s: None,
            evaluations: 1,
        }],
    };
    let result = RunResult {
        archive,
        trace,
        population: vec![ind.clone()],
        normalizer,
        evaluations: 1,
        final_state: Default::default(),
    };
    Ok((result, ind))
}

/// Runs a single variant once on `train`.
pub fn run_variant(
    variant: Variant,
    spec: &ExperimentSpec,
    train: &Dataset,
    seed: u64,
) -> gpfree_core::Result<(RunResult, Individual)> {
    let s = &spec.settings;
    let catalog = &ModelKind::ALL;
    let pf = |selection: Selection, fixed_depth: Option<usize>| ParameterFreeConfig {
        selection,
        fixed_depth,
        budget: spec.budget,
        time_objective: s.time_objective,
        ..Default::default()
    };
    let ss = |fixed_depth: Option<usize>| SteadyStateConfig {
        pop_size: s.pop_size,
        budget: spec.budget,
        cross_rate: s.cross_rate,
        mut_rate: s.mut_rate,
        fixed_depth,
        time_objective: s.time_objective,
        ..Default::default()
    };
    let so = |penalty| SingleObjectiveConfig {
        penalty,
        pop_size: s.pop_size,
        budget: spec.budget,
        tournament_size: s.tournament_size,
        cross_rate: s.cross_rate,
        mut_rate: s.mut_rate,
        max_depth: s.fixed_depth,
        time_objective: s.time_objective,
    };
    let multi = |r: RunResult| {
        let best = r.archive.best_quality().expect("non-empty archive").clone();
        (r, best)
    };
    Ok(match variant {
        Variant::SingleObjective | Variant::SingleObjectivePenalty => {
            let penalty = (variant == Variant::SingleObjectivePenalty).then_some(s.penalty);
            let out = run_single_objective(train, catalog, &so(penalty), seed)?;
            (out.run, out.best)
        }
        Variant::GpcompFree | Variant::Spea2Selection => {
            multi(run_parameter_free(train, catalog, &pf(Selection::Spea2, None), seed)?)
        }
        Variant::Nsga2Selection => multi(run_parameter_free(train, catalog, &pf(Selection::Nsga2, None), seed)?),
        Variant::ParameterFreeFd => multi(run_parameter_free(
            train,
            catalog,
            &pf(Selection::Spea2, Some(s.fixed_depth)),
            seed,
        )?),
        Variant::SteadyStateFd => multi(run_steady_state_mo(train, catalog, &ss(Some(s.fixed_depth)), seed)?),
        Variant::SteadyState => multi(run_steady_state_mo(train, catalog, &ss(None), seed)?),
        Variant::BaggedTrees | Variant::ConstantBaseline => baseline_run(variant, train, seed)?,
    })
}

#[cfg(feature = "parallel")]
fn map_jobs<F>(jobs: &[(Variant, usize)], f: F) -> Vec<Result<RunOutcome>>
where
    F: Fn(&(Variant, usize)) -> Result<RunOutcome> + Sync + Send,
{
    use rayon::prelude::*;
    jobs.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_jobs<F>(jobs: &[(Variant, usize)], f: F) -> Vec<Result<RunOutcome>>
where
    F: Fn(&(Variant, usize)) -> Result<RunOutcome>,
{
    jobs.iter().map(f).collect()
}

/// Runs every variant of the experiment for every repetition and, when `out`
/// is given, writes traces, Pareto fronts, splits, tables and plots there.
pub fn run_experiment(spec: &ExperimentSpec, out: Option<&Path>) -> Result<ExperimentReport> {
    spec.validate()?;
    let data = spec.load_data()?;
    let (train, test) = train_test_split(&data, spec.train_fraction, spec.seed_base)?;
    let seeds = spec.resolved_seeds();
    let jobs: Vec<(Variant, usize)> = spec
        .experiment
        .variants()
        .iter()
        .flat_map(|&v| (0..seeds.len()).map(move |r| (v, r)))
        .collect();

    let results = map_jobs(&jobs, |&(variant, rep)| {
        let seed = seeds[rep];
        let ctx = |source| BenchError::Run {
            variant: variant.name().to_string(),
            rep,
            source,
        };
        let (result, best) = run_variant(variant, spec, &train, seed).map_err(ctx)?;
        let hv = if variant.is_baseline() {
            None
        } else {
            Some(result.final_hv())
        };
        Ok(RunOutcome {
            variant,
            rep,
            seed,
            trace: result.trace,
            front: result.archive.entries().to_vec(),
            best,
            evaluations: result.evaluations,
            hv,
        })
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;

    let shared = Normalizer::from_points(
        runs.iter()
            .filter(|r| !r.variant.is_baseline())
            .flat_map(|r| r.front.iter().map(|e| &e.objectives)),
    );
    let mut finals = Vec::with_capacity(runs.len());
    for run in &runs {
        let fit_seed = final_fit_seed(run.seed);
        let test_q = holdout_quality(&run.best.graph, &train, &test, fit_seed).map_err(|source| BenchError::Run {
            variant: run.variant.name().to_string(),
            rep: run.rep,
            source,
        })?;
        let hv_shared = match (&shared, run.hv) {
            (Some(n), Some(_)) => {
                let front: Vec<ObjectiveVector> = run.front.iter().map(|e| e.objectives).collect();
                Some(n.hypervolume(&front)?)
            }
            _ => None,
        };
        finals.push(FinalMetrics {
            variant: run.variant.name().to_string(),
            rep: run.rep,
            seed: run.seed,
            fit_seed,
            test_quality: test_q,
            validation_quality: run.best.objectives.q,
            gs: run.best.graph.size(),
            gd: run.best.graph.depth(),
            n_front: run.front.len(),
            hv: run.hv,
            hv_shared,
            evaluations: run.evaluations,
            generations: run.trace.len().saturating_sub(1),
            best_genotype: run.best.key.clone(),
        });
    }
    let summary = summarize(train.task, &finals);
    let report = ExperimentReport {
        spec: spec.clone(),
        train,
        test,
        runs,
        finals,
        summary,
    };
    if let Some(dir) = out {
        write_outputs(&report, dir)?;
    }
    Ok(report)
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| BenchError::io(parent, e))?;
    }
    fs::File::create(path).map_err(|e| BenchError::io(path, e))
}

pub fn trace_path(dir: &Path, variant: &str, rep: usize) -> PathBuf {
    dir.join("traces").join(format!("{variant}_rep{rep}.csv"))
}

pub fn pareto_path(dir: &Path, variant: &str, rep: usize) -> PathBuf {
    dir.join("pareto").join(format!("{variant}_rep{rep}.csv"))
}

fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<()> {
    use std::io::Write;
    let spec_path = dir.join("spec.json");
    create(&spec_path)?
        .write_all(report.spec.to_json().as_bytes())
        .map_err(|e| BenchError::io(&spec_path, e))?;
    write_csv(&report.train, create(&dir.join("splits").join("train.csv"))?)?;
    write_csv(&report.test, create(&dir.join("splits").join("test.csv"))?)?;
    let timed = report.spec.timed();
    for run in &report.runs {
        let name = run.variant.name();
        run.trace.write_csv(create(&trace_path(dir, name, run.rep))?, timed)?;
        write_pareto_csv(&run.front, create(&pareto_path(dir, name, run.rep))?)?;
    }
    write_finals(&report.finals, create(&dir.join("finals.csv"))?)?;
    write_summary(&report.summary, create(&dir.join("summary.csv"))?)?;
    let plot_runs: Vec<PlotRun> = report
        .runs
        .iter()
        .map(|r| PlotRun {
            variant: r.variant.name().to_string(),
            rep: r.rep,
            trace: r.trace.clone(),
            front: r.front.iter().map(|e| e.objectives).collect(),
        })
        .collect();
    render_plots(&plot_runs, report.train.task, &dir.join("plots"))
}

/// Task of a stored experiment: from the synthetic kind, the spec, or the
/// stored training split.
pub fn stored_task(dir: &Path, spec: &ExperimentSpec) -> Result<TaskType> {
    use crate::spec::DataSource;
    if let DataSource::Synth { kind, .. } = spec.data {
        return Ok(kind.task());
    }
    if let Some(task) = spec.task {
        return Ok(task);
    }
    let path = dir.join("splits").join("train.csv");
    let file = fs::File::open(&path).map_err(|e| BenchError::io(&path, e))?;
    let d = gpfree_core::data::read_csv(
        file,
        &gpfree_core::data::TargetColumn::Name("target".into()),
        TaskType::Regression,
    )?;
    Ok(if d.target.iter().all(|&y| y == 0.0 || y == 1.0) {
        TaskType::BinaryClassification
    } else {
        TaskType::Regression
    })
}

pub fn load_spec(dir: &Path) -> Result<ExperimentSpec> {
    let path = dir.join("spec.json");
    let text = fs::read_to_string(&path).map_err(|e| BenchError::io(&path, e))?;
    ExperimentSpec::from_json(&text)
}

/// Reads back the traces and fronts of a results directory.
pub fn load_runs(dir: &Path) -> Result<(ExperimentSpec, TaskType, Vec<PlotRun>)> {
    let spec = load_spec(dir)?;
    let task = stored_task(dir, &spec)?;
    let mut runs = Vec::new();
    for variant in spec.experiment.variants() {
        for rep in 0..spec.repetitions {
            let name = variant.name();
            let tp = trace_path(dir, name, rep);
            let trace = RunTrace::read_csv(fs::File::open(&tp).map_err(|e| BenchError::io(&tp, e))?)?;
            let front = load_front(dir, name, rep)?.iter().map(|e| e.objectives).collect();
            runs.push(PlotRun {
                variant: name.to_string(),
                rep,
                trace,
                front,
            });
        }
    }
    Ok((spec, task, runs))
}

pub fn load_front(dir: &Path, variant: &str, rep: usize) -> Result<Vec<Individual>> {
    let path = pareto_path(dir, variant, rep);
    let file = fs::File::open(&path).map_err(|e| BenchError::io(&path, e))?;
    Ok(gpfree_core::objectives::read_pareto_csv(file)?)
}

/// Non-dominated union of a variant's stored fronts, or one repetition's front.
pub fn merged_front(dir: &Path, variant: Variant, rep: Option<usize>) -> Result<Vec<Individual>> {
    let spec = load_spec(dir)?;
    if !spec.experiment.variants().contains(&variant) {
        return Err(BenchError::Config(format!("variant {variant} is not part of {}", spec.experiment)));
    }
    let reps: Vec<usize> = match rep {
        Some(r) if r >= spec.repetitions => {
            return Err(BenchError::Config(format!("repetition {r} out of range")));
        }
        Some(r) => vec![r],
        None => (0..spec.repetitions).collect(),
    };
    let mut archive = ParetoArchive::new();
    for r in reps {
        archive.update(&load_front(dir, variant.name(), r)?);
    }
    Ok(archive.entries().to_vec())
}
