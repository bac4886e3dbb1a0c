//! Objectives: quality metrics, dominance, the Pareto archive, penalty
//! scalarization and hypervolume.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::individual::Individual;
use crate::pipeline::PipelineGraph;

/// Objective values, all minimized: quality `q` (RMSE or negated ROC AUC),
/// structural complexity `s` (node count) and optional fit time `p` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub q: f64,
    pub s: f64,
    pub p: Option<f64>,
}

impl ObjectiveVector {
    pub fn new(q: f64, s: f64) -> Self {
        Self { q, s, p: None }
    }

    pub fn with_time(q: f64, s: f64, p: f64) -> Self {
        Self { q, s, p: Some(p) }
    }

    pub fn arity(&self) -> usize {
        if self.p.is_some() {
            3
        } else {
            2
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = vec![self.q, self.s];
        v.extend(self.p);
        v
    }

    pub fn from_values(v: &[f64]) -> Result<Self> {
        match *v {
            [q, s] => Ok(Self::new(q, s)),
            [q, s, p] => Ok(Self::with_time(q, s, p)),
            _ => Err(Error::ArityMismatch(v.len(), 2)),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }

    /// Lexicographic order over the components (total on floats).
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.values(), other.values());
        a.iter()
            .zip(&b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| a.len().cmp(&b.len()))
    }
}

/// Root mean squared error.
pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() || y.is_empty() {
        return Err(Error::LengthMismatch(y.len(), yhat.len()));
    }
    let mse = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64;
    Ok(mse.sqrt())
}

/// Area under the ROC curve in Mann-Whitney form: the probability that a random
/// positive outscores a random negative, ties counted one half. Computed from
/// average ranks in `O(n log n)`.
pub fn roc_auc(y: &[f64], scores: &[f64]) -> Result<f64> {
    if y.len() != scores.len() {
        return Err(Error::LengthMismatch(y.len(), scores.len()));
    }
    let n_pos = y.iter().filter(|&&v| v == 1.0).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their average
        let avg_rank = (i + j + 2) as f64 / 2.0;
        let pos_in_tie = order[i..=j].iter().filter(|&&k| y[k] == 1.0).count();
        rank_sum_pos += avg_rank * pos_in_tie as f64;
        i = j + 1;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Non-negative weights of the complexity and time penalties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    pub w1: f64,
    pub w2: f64,
}

impl PenaltyWeights {
    pub fn new(w1: f64, w2: f64) -> Result<Self> {
        if !(w1.is_finite() && w2.is_finite() && w1 >= 0.0 && w2 >= 0.0) {
            return Err(Error::InvalidPipeline(format!("invalid penalty weights ({w1}, {w2})")));
        }
        Ok(Self { w1, w2 })
    }
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self { w1: 0.01, w2: 0.001 }
    }
}

/// `q + w1 * s + w2 * p` (minimized). A missing `p` contributes nothing.
pub fn penalty_fitness(v: &ObjectiveVector, w: &PenaltyWeights) -> f64 {
    v.q + w.w1 * v.s + w.w2 * v.p.unwrap_or(0.0)
}

/// Pareto dominance under minimization.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    if a.arity() != b.arity() {
        return Err(Error::ArityMismatch(a.arity(), b.arity()));
    }
    Ok(dominates_values(&a.values(), &b.values()))
}

pub(crate) fn dominates_values(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Indices of the non-dominated members of `points`.
pub fn non_dominated_indices(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|p| dominates_values(p, &points[i])))
        .collect()
}

/// Mutually non-dominated individuals seen so far. Entries are kept in
/// canonical order (objectives lexicographic, then genotype text) so the
/// archive does not depend on the order candidates arrive in.
#[derive(Debug, Clone, Default)]
pub struct ParetoArchive {
    entries: Vec<Individual>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[Individual] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.entries.iter().map(|e| e.objectives).collect()
    }

    /// Smallest value of each objective component over the entries.
    pub fn minima(&self) -> Option<Vec<f64>> {
        let mut it = self.entries.iter().map(|e| e.objectives.values());
        let first = it.next()?;
        Some(it.fold(first, |acc, v| acc.iter().zip(&v).map(|(a, b)| a.min(*b)).collect()))
    }

    /// Entry with the best quality (ties: smaller structure, then canonical order).
    pub fn best_quality(&self) -> Option<&Individual> {
        self.entries.iter().min_by(|a, b| {
            a.objectives
                .q
                .total_cmp(&b.objectives.q)
                .then(a.objectives.s.total_cmp(&b.objectives.s))
        })
    }

    /// Merges candidates; keeps the non-dominated subset of the union. Exact
    /// duplicates (same objectives and same genotype) collapse to one entry.
    /// Returns whether the membership changed.
    pub fn update<'a, I>(&mut self, candidates: I) -> bool
    where
        I: IntoIterator<Item = &'a Individual>,
    {
        let before: Vec<(Vec<f64>, String)> = self.entries.iter().map(entry_key).collect();
        let mut pool = std::mem::take(&mut self.entries);
        pool.extend(candidates.into_iter().cloned());
        pool.sort_by(canonical);
        pool.dedup_by(|a, b| canonical(a, b).is_eq());
        let values: Vec<Vec<f64>> = pool.iter().map(|e| e.objectives.values()).collect();
        let keep = non_dominated_indices(&values);
        let mut keep_iter = keep.into_iter().peekable();
        self.entries = pool
            .into_iter()
            .enumerate()
            .filter_map(|(i, e)| {
                if keep_iter.peek() == Some(&i) {
                    keep_iter.next();
                    Some(e)
                } else {
                    None
                }
            })
            .collect();
        let after: Vec<(Vec<f64>, String)> = self.entries.iter().map(entry_key).collect();
        before != after
    }
}

/// Writes archive entries as CSV with columns `objective_0`, `objective_1`
/// [, `objective_2`], `genotype_json`.
pub fn write_pareto_csv<W: std::io::Write>(entries: &[Individual], writer: W) -> Result<()> {
    let arity = entries.first().map_or(2, |e| e.objectives.arity());
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..arity).map(|i| format!("objective_{i}")).collect();
    header.push("genotype_json".into());
    wtr.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;
    for e in entries {
        let values = e.objectives.values();
        if values.len() != arity {
            return Err(Error::ArityMismatch(arity, values.len()));
        }
        let mut rec: Vec<String> = values.iter().map(f64::to_string).collect();
        rec.push(e.key.clone());
        wtr.write_record(&rec).map_err(|e| Error::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// Reads a file written by [`write_pareto_csv`].
pub fn read_pareto_csv<R: std::io::Read>(reader: R) -> Result<Vec<Individual>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    let arity = header.len().saturating_sub(1);
    if !(2..=3).contains(&arity) || header.get(arity) != Some("genotype_json") {
        return Err(Error::Csv("expected objective columns followed by genotype_json".into()));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        let values = (0..arity)
            .map(|c| {
                let cell = rec.get(c).unwrap_or("");
                cell.parse::<f64>().map_err(|_| Error::NonNumericCell {
                    row,
                    col: c,
                    value: cell.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let graph = PipelineGraph::from_json(rec.get(arity).unwrap_or(""))?;
        out.push(Individual::new(graph, ObjectiveVector::from_values(&values)?, 0.0));
    }
    Ok(out)
}

fn entry_key(e: &Individual) -> (Vec<f64>, String) {
    (e.objectives.values(), e.key.clone())
}

fn canonical(a: &Individual, b: &Individual) -> Ordering {
    a.objectives.lex_cmp(&b.objectives).then_with(|| a.key.cmp(&b.key))
}

/// Min-max bounds used to map objectives into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    /// Bounds over every vector in `points`. `None` for an empty input.
    pub fn from_points<'a, I>(points: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a ObjectiveVector>,
    {
        let mut it = points.into_iter();
        let first = it.next()?.values();
        let (min, max) = it.fold((first.clone(), first), |(lo, hi), p| {
            let v = p.values();
            (
                lo.iter().zip(&v).map(|(a, b)| a.min(*b)).collect(),
                hi.iter().zip(&v).map(|(a, b)| a.max(*b)).collect(),
            )
        });
        Some(Self { min, max })
    }

    /// Components with a zero range map to 0.
    pub fn normalize(&self, v: &ObjectiveVector) -> Vec<f64> {
        v.values()
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(x, (lo, hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    /// Hypervolume of `front` after normalization, against the reference
    /// point `1.01` in every component.
    pub fn hypervolume(&self, front: &[ObjectiveVector]) -> Result<f64> {
        let pts: Vec<Vec<f64>> = front.iter().map(|v| self.normalize(v)).collect();
        hypervolume_values(&pts, &vec![NORMALIZED_REFERENCE; self.min.len()])
    }
}

/// Reference coordinate used with normalized objectives.
pub const NORMALIZED_REFERENCE: f64 = 1.01;

/// Exact hypervolume of a 2- or 3-objective front with respect to `reference`.
pub fn hypervolume(front: &[ObjectiveVector], reference: &ObjectiveVector) -> Result<f64> {
    let r = reference.values();
    let pts = front
        .iter()
        .map(|p| {
            if p.arity() == r.len() {
                Ok(p.values())
            } else {
                Err(Error::ArityMismatch(p.arity(), r.len()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    hypervolume_values(&pts, &r)
}

/// Hypervolume over raw coordinate vectors (2-D sweep, 3-D slicing).
pub fn hypervolume_values(points: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    for (index, p) in points.iter().enumerate() {
        if p.len() != reference.len() {
            return Err(Error::ArityMismatch(p.len(), reference.len()));
        }
        if p.iter().zip(reference).any(|(x, r)| !(x < r)) {
            return Err(Error::PointBeyondReference { index });
        }
    }
    match reference.len() {
        2 => Ok(hv2(points.iter().map(|p| (p[0], p[1])).collect(), reference[0], reference[1])),
        3 => Ok(hv3(points, reference)),
        n => Err(Error::ArityMismatch(n, 2)),
    }
}

fn hv2(mut pts: Vec<(f64, f64)>, rx: f64, ry: f64) -> f64 {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    let mut best_y = ry;
    for (x, y) in pts {
        if y < best_y {
            area += (rx - x) * (best_y - y);
            best_y = y;
        }
    }
    area
}

fn hv3(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let mut pts: Vec<&Vec<f64>> = points.iter().collect();
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut volume = 0.0;
    for i in 0..pts.len() {
        let z_top = pts.get(i + 1).map_or(reference[2], |p| p[2]);
        let thickness = z_top - pts[i][2];
        if thickness <= 0.0 {
            continue;
        }
        let slice = pts[..=i].iter().map(|p| (p[0], p[1])).collect();
        volume += thickness * hv2(slice, reference[0], reference[1]);
    }
    volume
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;

    fn ind(q: f64, s: f64, kind: ModelKind) -> Individual {
        Individual::new(PipelineGraph::single(kind), ObjectiveVector::new(q, s), 0.0)
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - (12.5f64).sqrt()).abs() < 1e-15);
        let y = [0.3, -1.0, 7.5, 2.0];
        let shifted: Vec<f64> = y.iter().map(|v| v - 0.75).collect();
        assert!((rmse(&y, &shifted).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(rmse(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2)));
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[0.0, 0.0, 1.0, 1.0], &[0.1, 0.2, 0.8, 0.9]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.0, 1.0, 1.0, 0.0], &[0.3; 4]).unwrap(), 0.5);
        assert_eq!(roc_auc(&[1.0, 0.0, 1.0, 0.0], &[0.9, 0.8, 0.4, 0.1]).unwrap(), 0.75);
        assert_eq!(roc_auc(&[1.0, 1.0], &[0.1, 0.2]), Err(Error::SingleClass));
    }

    #[test]
    fn penalty_examples() {
        let v = ObjectiveVector::with_time(0.2, 5.0, 1.0);
        assert_eq!(penalty_fitness(&v, &PenaltyWeights::new(0.0, 0.0).unwrap()), 0.2);
        assert!((penalty_fitness(&v, &PenaltyWeights::default()) - 0.251).abs() < 1e-12);
        let small = ObjectiveVector::new(0.2, 3.0);
        let big = ObjectiveVector::new(0.2, 4.0);
        let w = PenaltyWeights::new(0.01, 0.0).unwrap();
        assert!(penalty_fitness(&big, &w) > penalty_fitness(&small, &w));
        assert!(PenaltyWeights::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn dominance_examples() {
        let a = ObjectiveVector::new(0.1, 2.0);
        let b = ObjectiveVector::new(0.2, 3.0);
        assert!(dominates(&a, &b).unwrap());
        let c = ObjectiveVector::new(0.1, 3.0);
        let d = ObjectiveVector::new(0.2, 2.0);
        assert!(!dominates(&c, &d).unwrap() && !dominates(&d, &c).unwrap());
        assert!(!dominates(&a, &a).unwrap());
        assert_eq!(
            dominates(&a, &ObjectiveVector::with_time(0.1, 2.0, 1.0)),
            Err(Error::ArityMismatch(2, 3))
        );
    }

    #[test]
    fn archive_examples() {
        let mut arch = ParetoArchive::new();
        assert!(arch.update(&[ind(0.2, 2.0, ModelKind::MeanBaseline)]));
        assert_eq!(arch.len(), 1);
        assert!(!arch.update(&[ind(0.3, 3.0, ModelKind::DecisionTree)]));
        assert!(!arch.update(&[ind(0.2, 2.0, ModelKind::MeanBaseline)]));
        assert_eq!(arch.len(), 1);
        assert!(arch.update(&[ind(0.1, 4.0, ModelKind::RidgeRegression)]));
        assert_eq!(arch.minima().unwrap(), vec![0.1, 2.0]);
        assert_eq!(arch.best_quality().unwrap().objectives.q, 0.1);
        // a dominating point evicts both
        assert!(arch.update(&[ind(0.05, 1.0, ModelKind::LinearRegression)]));
        assert_eq!(arch.len(), 1);
    }

    #[test]
    fn hypervolume_examples() {
        let r = ObjectiveVector::new(1.0, 1.0);
        assert_eq!(hypervolume(&[ObjectiveVector::new(0.5, 0.5)], &r).unwrap(), 0.25);
        let two = [ObjectiveVector::new(0.2, 0.8), ObjectiveVector::new(0.8, 0.2)];
        let incl_excl = 0.8 * 0.2 + 0.2 * 0.8 - 0.2 * 0.2;
        assert!((hypervolume(&two, &r).unwrap() - incl_excl).abs() < 1e-15);
        assert!((incl_excl - 0.28f64).abs() < 1e-15);
        let origin = [ObjectiveVector::new(0.0, 0.0)];
        assert_eq!(hypervolume(&origin, &r).unwrap(), 1.0);
        let with_dominated = [ObjectiveVector::new(0.0, 0.0), ObjectiveVector::new(0.3, 0.6)];
        assert_eq!(hypervolume(&with_dominated, &r).unwrap(), 1.0);
        assert_eq!(
            hypervolume(&[ObjectiveVector::new(0.5, 0.5), ObjectiveVector::new(1.0, 0.2)], &r),
            Err(Error::PointBeyondReference { index: 1 })
        );
    }

    #[test]
    fn hypervolume_3d_boxes() {
        let r = ObjectiveVector::with_time(1.0, 1.0, 1.0);
        let one = [ObjectiveVector::with_time(0.5, 0.5, 0.5)];
        assert!((hypervolume(&one, &r).unwrap() - 0.125).abs() < 1e-15);
        // two boxes: 0.8*0.2*0.5 + 0.2*0.8*0.5 overlap 0.2*0.2*0.5
        let two = [
            ObjectiveVector::with_time(0.2, 0.8, 0.5),
            ObjectiveVector::with_time(0.8, 0.2, 0.5),
        ];
        assert!((hypervolume(&two, &r).unwrap() - 0.14).abs() < 1e-12);
    }

    #[test]
    fn normalizer_maps_bounds() {
        let pts = [ObjectiveVector::new(-0.9, 1.0), ObjectiveVector::new(-0.5, 5.0)];
        let n = Normalizer::from_points(&pts).unwrap();
        assert_eq!(n.normalize(&pts[0]), vec![0.0, 0.0]);
        assert_eq!(n.normalize(&pts[1]), vec![1.0, 1.0]);
        let flat = Normalizer::from_points(&[ObjectiveVector::new(0.3, 1.0)]).unwrap();
        assert_eq!(flat.normalize(&ObjectiveVector::new(0.3, 1.0)), vec![0.0, 0.0]);
        assert!((n.hypervolume(&pts[..1]).unwrap() - 1.01 * 1.01).abs() < 1e-12);
    }

    #[test]
    fn pareto_csv_round_trip() {
        let entries = vec![ind(-0.91, 1.0, ModelKind::DecisionTree), ind(-0.875, 3.0, ModelKind::KNearestNeighbors)];
        let mut buf = Vec::new();
        write_pareto_csv(&entries, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("objective_0,objective_1,genotype_json\n"));
        let back = read_pareto_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in entries.iter().zip(&back) {
            assert_eq!(a.objectives, b.objectives);
            assert_eq!(a.graph, b.graph);
        }
        assert!(read_pareto_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
