//! Self-contained SVG charts: quality and hypervolume curves with a min-max
//! band across repetitions, and final Pareto scatters.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gpfree_core::optimizer::RunTrace;
use gpfree_core::{ObjectiveVector, TaskType};

use crate::error::{BenchError, Result};
use crate::summary::{display_quality, median};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: (f64, f64, f64, f64) = (60.0, 170.0, 40.0, 50.0); // left, right, top, bottom
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Data of one run needed for plotting.
#[derive(Debug, Clone)]
pub struct PlotRun {
    pub variant: String,
    pub rep: usize,
    pub trace: RunTrace,
    pub front: Vec<ObjectiveVector>,
}

/// Per-generation (gen, min, median, max) over repetitions.
pub fn band(series: &[Vec<f64>]) -> Vec<(usize, f64, f64, f64)> {
    let len = series.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|g| {
            let vals: Vec<f64> = series.iter().filter_map(|s| s.get(g).copied()).collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (g, lo, median(&vals), hi)
        })
        .collect()
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let range = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        Self {
            x: range(&mut xs.clone()),
            y: range(&mut ys.clone()),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN.0 + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN.0 - MARGIN.1)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN.3 - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN.2 - MARGIN.3)
    }

    fn open(&self, title: &str, xlabel: &str, ylabel: &str) -> String {
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        );
        let (l, r, t, b) = (MARGIN.0, WIDTH - MARGIN.1, MARGIN.2, HEIGHT - MARGIN.3);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>", (l + r) / 2.0, escape(title));
        let _ = writeln!(s, "<rect x=\"{l}\" y=\"{t}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>", r - l, b - t);
        for i in 0..=4 {
            let fx = self.x.0 + (self.x.1 - self.x.0) * i as f64 / 4.0;
            let fy = self.y.0 + (self.y.1 - self.y.0) * i as f64 / 4.0;
            let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", self.px(fx), b + 16.0, tick(fx));
            let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>", l - 4.0, self.py(fy) + 4.0, tick(fy));
        }
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", (l + r) / 2.0, HEIGHT - 12.0, escape(xlabel));
        let _ = writeln!(
            s,
            "<text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>",
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(ylabel)
        );
        s
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn legend(s: &mut String, i: usize, name: &str) {
    let x = WIDTH - MARGIN.1 + 12.0;
    let y = MARGIN.2 + 14.0 + 18.0 * i as f64;
    let _ = writeln!(s, "<rect x=\"{x}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/>", y - 10.0, PALETTE[i % PALETTE.len()]);
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{y:.1}\">{}</text>", x + 18.0, escape(name));
}

/// Line chart of per-generation medians with a shaded min-max band per series.
pub fn band_chart(title: &str, ylabel: &str, series: &[(String, Vec<(usize, f64, f64, f64)>)]) -> String {
    let pts = series.iter().flat_map(|(_, b)| b.iter());
    let frame = Frame::new(
        pts.clone().map(|p| p.0 as f64),
        pts.clone().flat_map(|p| [p.1, p.3]),
    );
    let mut s = frame.open(title, "generation", ylabel);
    for (i, (name, b)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper = b.iter().map(|p| format!("{:.2},{:.2}", frame.px(p.0 as f64), frame.py(p.3)));
        let lower = b.iter().rev().map(|p| format!("{:.2},{:.2}", frame.px(p.0 as f64), frame.py(p.1)));
        let poly: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(s, "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.2\" stroke=\"none\"/>", poly.join(" "));
        let line: Vec<String> = b.iter().map(|p| format!("{:.2},{:.2}", frame.px(p.0 as f64), frame.py(p.2))).collect();
        let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>", line.join(" "));
        legend(&mut s, i, name);
    }
    s + "</svg>\n"
}

/// Scatter of a final front: quality against graph size.
pub fn pareto_chart(title: &str, qlabel: &str, points: &[(f64, f64)]) -> String {
    let frame = Frame::new(points.iter().map(|p| p.1), points.iter().map(|p| p.0));
    let mut s = frame.open(title, "graph size", qlabel);
    for (q, size) in points {
        let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{}\"/>", frame.px(*size), frame.py(*q), PALETTE[0]);
    }
    s + "</svg>\n"
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

/// Writes `quality.svg`, `hypervolume.svg` and `pareto_<variant>.svg` (first
/// repetition of each variant) into `dir`.
pub fn render_plots(runs: &[PlotRun], task: TaskType, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut by_variant: Vec<(String, Vec<&PlotRun>)> = Vec::new();
    for r in runs {
        match by_variant.iter_mut().find(|(n, _)| *n == r.variant) {
            Some((_, rs)) => rs.push(r),
            None => by_variant.push((r.variant.clone(), vec![r])),
        }
    }
    let qlabel = if task.is_classification() { "ROC AUC" } else { "RMSE" };
    let quality: Vec<_> = by_variant
        .iter()
        .map(|(name, rs)| {
            let series: Vec<Vec<f64>> = rs
                .iter()
                .map(|r| r.trace.best_q().into_iter().map(|q| display_quality(task, q)).collect())
                .collect();
            (name.clone(), band(&series))
        })
        .collect();
    write(&dir.join("quality.svg"), &band_chart("Best validation quality", qlabel, &quality))?;
    let hv: Vec<_> = by_variant
        .iter()
        .filter(|(_, rs)| rs.iter().any(|r| r.trace.len() > 1))
        .map(|(name, rs)| {
            let series: Vec<Vec<f64>> = rs.iter().map(|r| r.trace.hv()).collect();
            (name.clone(), band(&series))
        })
        .collect();
    write(&dir.join("hypervolume.svg"), &band_chart("Archive hypervolume", "HV", &hv))?;
    for (name, rs) in &by_variant {
        let Some(first) = rs.iter().min_by_key(|r| r.rep) else {
            continue;
        };
        let pts: Vec<(f64, f64)> = first.front.iter().map(|o| (display_quality(task, o.q), o.s)).collect();
        let title = format!("Final Pareto front: {name} (rep {})", first.rep);
        write(&dir.join(format!("pareto_{name}.svg")), &pareto_chart(&title, qlabel, &pts))?;
    }
    Ok(())
}
