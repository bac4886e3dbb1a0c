use std::io::{Read, Write};

use gpfree_core::TaskType;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Relative quality spread above which a variant is flagged as unstable.
pub const SPREAD_LIMIT: f64 = 0.05;

/// Final metrics of one run, one row of `finals.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub variant: String,
    pub rep: usize,
    pub seed: u64,
    pub fit_seed: u64,
    /// Quality objective of the reported pipeline refit on the full training
    /// split and scored on the test split (negated AUC or RMSE).
    pub test_quality: f64,
    pub validation_quality: f64,
    pub gs: usize,
    pub gd: usize,
    pub n_front: usize,
    pub hv: Option<f64>,
    /// Final hypervolume with bounds shared by all runs of the experiment.
    pub hv_shared: Option<f64>,
    pub evaluations: usize,
    pub generations: usize,
    pub best_genotype: String,
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub variant: String,
    pub runs: usize,
    /// Median test quality in display form: ROC AUC (higher is better) or RMSE.
    pub quality: f64,
    pub quality_min: f64,
    pub quality_max: f64,
    /// `(max - min) / median` of the display quality.
    pub spread: f64,
    pub gs: f64,
    pub gd: f64,
    pub hv: Option<f64>,
    pub hv_shared: Option<f64>,
    pub n_front: f64,
}

impl SummaryRow {
    pub fn unstable(&self) -> bool {
        self.spread > SPREAD_LIMIT
    }

    /// Median test quality back in objective form (minimized).
    pub fn quality_objective(&self, task: TaskType) -> f64 {
        display_quality(task, self.quality)
    }
}

/// ROC AUC is stored negated; flip it back for reporting.
pub fn display_quality(task: TaskType, q: f64) -> f64 {
    if task.is_classification() {
        -q
    } else {
        q
    }
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Aggregates finals per variant, in order of first appearance.
pub fn summarize(task: TaskType, finals: &[FinalMetrics]) -> Vec<SummaryRow> {
    let mut names: Vec<&str> = Vec::new();
    for f in finals {
        if !names.contains(&f.variant.as_str()) {
            names.push(&f.variant);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let rows: Vec<&FinalMetrics> = finals.iter().filter(|f| f.variant == name).collect();
            let q: Vec<f64> = rows.iter().map(|f| display_quality(task, f.test_quality)).collect();
            let med = median(&q);
            let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let opt_median = |vals: Vec<Option<f64>>| {
                let v: Option<Vec<f64>> = vals.into_iter().collect();
                v.filter(|v| !v.is_empty()).map(|v| median(&v))
            };
            SummaryRow {
                variant: name.to_string(),
                runs: rows.len(),
                quality: med,
                quality_min: lo,
                quality_max: hi,
                spread: if med != 0.0 { (hi - lo) / med.abs() } else { 0.0 },
                gs: median(&rows.iter().map(|f| f.gs as f64).collect::<Vec<_>>()),
                gd: median(&rows.iter().map(|f| f.gd as f64).collect::<Vec<_>>()),
                hv: opt_median(rows.iter().map(|f| f.hv).collect()),
                hv_shared: opt_median(rows.iter().map(|f| f.hv_shared).collect()),
                n_front: median(&rows.iter().map(|f| f.n_front as f64).collect::<Vec<_>>()),
            }
        })
        .collect()
}

fn csv_err(e: csv::Error) -> BenchError {
    BenchError::Data(gpfree_core::Error::Csv(e.to_string()))
}

pub fn write_finals<W: Write>(finals: &[FinalMetrics], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for f in finals {
        wtr.serialize(f).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| BenchError::io("finals.csv", e))
}

pub fn read_finals<R: Read>(reader: R) -> Result<Vec<FinalMetrics>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(csv_err)
}

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "variant",
    "runs",
    "quality",
    "quality_min",
    "quality_max",
    "spread",
    "spread_flag",
    "gs_gd",
    "hv",
    "n_front",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

/// Table with one line per variant. Baseline hypervolume is shown as `-`.
pub fn write_summary<W: Write>(rows: &[SummaryRow], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = SUMMARY_COLUMNS.to_vec();
    header.push("hv_shared");
    wtr.write_record(&header).map_err(csv_err)?;
    for r in rows {
        wtr.write_record([
            r.variant.clone(),
            r.runs.to_string(),
            format!("{:.4}", r.quality),
            format!("{:.4}", r.quality_min),
            format!("{:.4}", r.quality_max),
            format!("{:.4}", r.spread),
            if r.unstable() { "over_5pct" } else { "ok" }.to_string(),
            format!("{};{}", r.gs, r.gd),
            fmt_opt(r.hv),
            r.n_front.to_string(),
            fmt_opt(r.hv_shared),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| BenchError::io("summary.csv", e))
}

/// Plain-text rendering of the summary for the terminal.
pub fn format_table(rows: &[SummaryRow], task: TaskType) -> String {
    let metric = if task.is_classification() { "ROC AUC" } else { "RMSE" };
    let mut out = format!(
        "{:<26} {:>8} {:>8} {:>9} {:>8} {:>6}\n",
        "variant", metric, "spread", "Gs;Gd", "HV", "N_f"
    );
    for r in rows {
        out += &format!(
            "{:<26} {:>8.4} {:>7.1}%{} {:>9} {:>8} {:>6}\n",
            r.variant,
            r.quality,
            100.0 * r.spread,
            if r.unstable() { "!" } else { " " },
            format!("{};{}", r.gs, r.gd),
            fmt_opt(r.hv),
            r.n_front
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(variant: &str, q: f64, gs: usize) -> FinalMetrics {
        FinalMetrics {
            variant: variant.into(),
            rep: 0,
            seed: 0,
            fit_seed: 0,
            test_quality: q,
            validation_quality: q,
            gs,
            gd: 1,
            n_front: 1,
            hv: None,
            hv_shared: None,
            evaluations: 1,
            generations: 0,
            best_genotype: String::new(),
        }
    }

    #[test]
    fn auc_sign_restored_and_spread() {
        let finals = vec![row("a", -0.9, 1), row("a", -0.8, 3), row("b", -0.5, 1)];
        let s = summarize(TaskType::BinaryClassification, &finals);
        assert_eq!(s.len(), 2);
        assert!((s[0].quality - 0.85).abs() < 1e-12);
        assert!((s[0].spread - 0.1 / 0.85).abs() < 1e-12);
        assert!(s[0].unstable());
        assert_eq!(s[0].gs, 2.0);
        assert!(!s[1].unstable());
        assert_eq!(s[1].hv, None);
        assert!((s[0].quality_objective(TaskType::BinaryClassification) + 0.85).abs() < 1e-12);
    }

    #[test]
    fn one_run_one_point() {
        let s = summarize(TaskType::Regression, &[row("x", 2.0, 4)]);
        assert_eq!((s[0].n_front, s[0].gs, s[0].gd), (1.0, 4.0, 1.0));
        let mut buf = Vec::new();
        write_summary(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("4;1,-,1,-"));
    }

    #[test]
    fn finals_round_trip() {
        let mut f = row("v", -0.75, 2);
        f.hv = Some(0.5);
        let mut buf = Vec::new();
        write_finals(&[f.clone()], &mut buf).unwrap();
        assert_eq!(read_finals(buf.as_slice()).unwrap(), vec![f]);
    }
}
