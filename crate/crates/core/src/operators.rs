//! Selection, crossover and mutation over pipeline genotypes.

use std::cmp::Ordering;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::TaskType;
use crate::individual::Individual;
use crate::models::ModelKind;
use crate::objectives::dominates_values;
use crate::pipeline::{random_subtree, validate, NodeSpec, PipelineGraph};
use crate::rng::Rng;

/// Evaluated members of one generation.
#[derive(Debug, Clone, Default)]
pub struct Population {
    pub members: Vec<Individual>,
    pub generation: usize,
}

impl Population {
    pub fn new(members: Vec<Individual>, generation: usize) -> Self {
        Self { members, generation }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn objective_values(&self) -> Vec<Vec<f64>> {
        self.members.iter().map(|m| m.objectives.values()).collect()
    }
}

/// Multi-objective selection scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    Spea2,
    Nsga2,
}

impl Selection {
    pub fn select_indices(self, points: &[Vec<f64>], k: usize) -> Vec<usize> {
        match self {
            Selection::Spea2 => spea2_indices(points, k),
            Selection::Nsga2 => nsga2_indices(points, k),
        }
    }
}

/// Stable tie-break: objectives lexicographically, then position.
fn tie_break(points: &[Vec<f64>], a: usize, b: usize) -> Ordering {
    points[a]
        .iter()
        .zip(&points[b])
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
        .then(a.cmp(&b))
}

/// Indices of `k` winners of independent tournaments on `fitness`
/// (minimized), sampling contestants with replacement.
pub fn tournament_indices(fitness: &[f64], k: usize, tour_size: usize, rng: &mut Rng) -> Vec<usize> {
    assert!(!fitness.is_empty(), "tournament over an empty population");
    let tour_size = tour_size.max(1);
    (0..k)
        .map(|_| {
            (0..tour_size)
                .map(|_| rng.random_range(0..fitness.len()))
                .min_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)))
                .expect("tour_size >= 1")
        })
        .collect()
}

/// Tournament selection on a scalar fitness of each member.
pub fn tournament_select<F>(pop: &Population, k: usize, tour_size: usize, fitness: F, rng: &mut Rng) -> Vec<Individual>
where
    F: Fn(&Individual) -> f64,
{
    let f: Vec<f64> = pop.members.iter().map(fitness).collect();
    tournament_indices(&f, k, tour_size, rng)
        .into_iter()
        .map(|i| pop.members[i].clone())
        .collect()
}

/// Fast non-dominated sorting. Returns fronts of indices, best first.
pub fn non_dominated_fronts(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dom_count = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates_values(&points[i], &points[j]) {
                dominated_by_me[i].push(j);
            } else if i != j && dominates_values(&points[j], &points[i]) {
                dom_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dom_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                dom_count[j] -= 1;
                if dom_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of every member of `front` (same order). Boundary
/// members of each objective get infinity.
pub fn crowding_distance(points: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let mut dist = vec![0.0; front.len()];
    if front.is_empty() {
        return dist;
    }
    let m = points[front[0]].len();
    for obj in 0..m {
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            points[front[a]][obj]
                .total_cmp(&points[front[b]][obj])
                .then(front[a].cmp(&front[b]))
        });
        let lo = points[front[order[0]]][obj];
        let hi = points[front[*order.last().unwrap()]][obj];
        dist[order[0]] = f64::INFINITY;
        dist[*order.last().unwrap()] = f64::INFINITY;
        if hi > lo {
            for w in 1..order.len().saturating_sub(1) {
                let gap = points[front[order[w + 1]]][obj] - points[front[order[w - 1]]][obj];
                dist[order[w]] += gap / (hi - lo);
            }
        }
    }
    dist
}

/// NSGA-II environmental selection: whole fronts by rank, the last partial
/// front by descending crowding distance.
pub fn nsga2_indices(points: &[Vec<f64>], k: usize) -> Vec<usize> {
    if k >= points.len() {
        return (0..points.len()).collect();
    }
    let mut chosen = Vec::with_capacity(k);
    for front in non_dominated_fronts(points) {
        if chosen.len() + front.len() <= k {
            chosen.extend_from_slice(&front);
            if chosen.len() == k {
                break;
            }
            continue;
        }
        let dist = crowding_distance(points, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            dist[b]
                .total_cmp(&dist[a])
                .then_with(|| tie_break(points, front[a], front[b]))
        });
        let room = k - chosen.len();
        chosen.extend(order.into_iter().take(room).map(|i| front[i]));
        break;
    }
    chosen
}

pub fn nsga2_select(pop: &Population, k: usize) -> Vec<Individual> {
    nsga2_indices(&pop.objective_values(), k)
        .into_iter()
        .map(|i| pop.members[i].clone())
        .collect()
}

/// SPEA2 strengths `S(i)` (number of members `i` dominates) and raw fitness
/// `R(i)` (sum of strengths of the members dominating `i`).
pub fn spea2_strength_raw(points: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let n = points.len();
    let strength: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&j| dominates_values(&points[i], &points[j])).count())
        .collect();
    let raw = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| dominates_values(&points[j], &points[i]))
                .map(|j| strength[j] as f64)
                .sum()
        })
        .collect();
    (strength, raw)
}

/// Objectives rescaled to `[0, 1]` over the pool, so that distances are not
/// dominated by the objective with the largest units.
fn normalized(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = points.first().map_or(0, Vec::len);
    let lo: Vec<f64> = (0..m).map(|j| points.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..m).map(|j| points.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
    points
        .iter()
        .map(|p| {
            (0..m)
                .map(|j| if hi[j] > lo[j] { (p[j] - lo[j]) / (hi[j] - lo[j]) } else { 0.0 })
                .collect()
        })
        .collect()
}

fn distance_matrix(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
                .collect()
        })
        .collect()
}

/// SPEA2 fitness `R(i) + 1 / (sigma_k(i) + 2)` with `k = floor(sqrt(N))`.
pub fn spea2_fitness(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let (_, raw) = spea2_strength_raw(points);
    let dist = distance_matrix(&normalized(points));
    let k = ((n as f64).sqrt().floor() as usize).clamp(1, n.saturating_sub(1).max(1));
    (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist[i][j]).collect();
            d.sort_by(f64::total_cmp);
            let sigma = d.get(k - 1).copied().unwrap_or(0.0);
            raw[i] + 1.0 / (sigma + 2.0)
        })
        .collect()
}

/// SPEA2 environmental selection over the pool.
pub fn spea2_indices(points: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = points.len();
    if k >= n {
        return (0..n).collect();
    }
    let fitness = spea2_fitness(points);
    let mut chosen: Vec<usize> = (0..n).filter(|&i| fitness[i] < 1.0).collect();
    if chosen.len() < k {
        let mut rest: Vec<usize> = (0..n).filter(|&i| fitness[i] >= 1.0).collect();
        rest.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then_with(|| tie_break(points, a, b)));
        chosen.extend(rest.into_iter().take(k - chosen.len()));
        chosen.sort_unstable();
        return chosen;
    }
    let dist = distance_matrix(&normalized(points));
    while chosen.len() > k {
        // drop the member whose sorted neighbor distances are lexicographically smallest
        let profile = |i: usize| -> Vec<f64> {
            let mut d: Vec<f64> = chosen.iter().filter(|&&j| j != i).map(|&j| dist[i][j]).collect();
            d.sort_by(f64::total_cmp);
            d
        };
        let victim = chosen
            .iter()
            .copied()
            .map(|i| (i, profile(i)))
            .min_by(|(a, pa), (b, pb)| {
                pa.iter()
                    .zip(pb)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| tie_break(points, *b, *a))
            })
            .map(|(i, _)| i)
            .expect("non-empty");
        chosen.retain(|&i| i != victim);
    }
    chosen
}

pub fn spea2_select(pop: &Population, k: usize) -> Vec<Individual> {
    spea2_indices(&pop.objective_values(), k)
        .into_iter()
        .map(|i| pop.members[i].clone())
        .collect()
}

const CROSSOVER_ATTEMPTS: usize = 10;

fn replace_at(root: &NodeSpec, path: &[usize], subtree: NodeSpec) -> NodeSpec {
    let mut out = root.clone();
    *out.at_mut(path).expect("valid path") = subtree;
    out
}

fn valid(g: &PipelineGraph, task: TaskType, max_depth: usize) -> bool {
    validate(g, task, max_depth).is_valid()
}

/// Each offspring gets one uniformly chosen subtree replaced by a uniformly
/// chosen subtree of the other parent. An offspring that stays invalid after
/// ten attempts is returned as a copy of its parent.
pub fn subtree_crossover(
    a: &PipelineGraph,
    b: &PipelineGraph,
    task: TaskType,
    max_depth: usize,
    rng: &mut Rng,
) -> (PipelineGraph, PipelineGraph) {
    let child = |receiver: &PipelineGraph, donor: &PipelineGraph, rng: &mut Rng| {
        let recv_pos = receiver.root.positions();
        let donor_pos = donor.root.positions();
        for _ in 0..CROSSOVER_ATTEMPTS {
            let at = recv_pos.choose(rng).expect("non-empty");
            let from = donor_pos.choose(rng).expect("non-empty");
            let sub = donor.root.at(from).expect("valid path").clone();
            let g = PipelineGraph::new(replace_at(&receiver.root, at, sub));
            if valid(&g, task, max_depth) {
                return g;
            }
        }
        receiver.clone()
    };
    let first = child(a, b, rng);
    let second = child(b, a, rng);
    (first, second)
}

/// Positions present in both trees, walking from the roots along matching child indices.
pub fn common_region(a: &NodeSpec, b: &NodeSpec) -> Vec<Vec<usize>> {
    fn walk(a: &NodeSpec, b: &NodeSpec, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(path.clone());
        for i in 0..a.children.len().min(b.children.len()) {
            path.push(i);
            walk(&a.children[i], &b.children[i], path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(a, b, &mut Vec::new(), &mut out);
    out
}

/// Swaps the subtrees rooted at one uniformly chosen position of the common
/// region. Retries up to ten times when an offspring breaks the depth cap,
/// then returns the parents unchanged.
pub fn one_point_crossover(
    a: &PipelineGraph,
    b: &PipelineGraph,
    task: TaskType,
    max_depth: usize,
    rng: &mut Rng,
) -> (PipelineGraph, PipelineGraph) {
    one_point_crossover_at(a, b, task, max_depth, rng).0
}

/// Same as [`one_point_crossover`], also returning the chosen position.
pub fn one_point_crossover_at(
    a: &PipelineGraph,
    b: &PipelineGraph,
    task: TaskType,
    max_depth: usize,
    rng: &mut Rng,
) -> ((PipelineGraph, PipelineGraph), Option<Vec<usize>>) {
    let region = common_region(&a.root, &b.root);
    for _ in 0..CROSSOVER_ATTEMPTS {
        let at = region.choose(rng).expect("root is always common");
        let sa = a.root.at(at).expect("common").clone();
        let sb = b.root.at(at).expect("common").clone();
        let ca = PipelineGraph::new(replace_at(&a.root, at, sb));
        let cb = PipelineGraph::new(replace_at(&b.root, at, sa));
        if valid(&ca, task, max_depth) && valid(&cb, task, max_depth) {
            return ((ca, cb), Some(at.clone()));
        }
    }
    ((a.clone(), b.clone()), None)
}

/// Mutation variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationKind {
    /// Replace the model of one random node, keeping the shape.
    Simple,
    /// Replace a random subtree with a freshly generated one.
    Growth,
    /// Delete a random non-root subtree.
    Reduce,
}

impl MutationKind {
    pub const ALL: [MutationKind; 3] = [MutationKind::Simple, MutationKind::Growth, MutationKind::Reduce];
}

pub fn mutate(
    g: &PipelineGraph,
    kind: MutationKind,
    catalog: &[ModelKind],
    task: TaskType,
    max_depth: usize,
    rng: &mut Rng,
) -> PipelineGraph {
    let compatible = ModelKind::compatible(catalog, task);
    let predictors: Vec<ModelKind> = compatible.iter().copied().filter(|k| k.is_predictor()).collect();
    if predictors.is_empty() {
        return g.clone();
    }
    let positions = g.root.positions();
    let out = match kind {
        MutationKind::Simple => {
            let at = positions.choose(rng).expect("non-empty");
            let node = g.root.at(at).expect("valid");
            let needs_predictor = at.is_empty() || node.children.len() > 1;
            let pool = if needs_predictor { &predictors } else { &compatible };
            let others: Vec<ModelKind> = pool.iter().copied().filter(|&k| k != node.kind).collect();
            let Some(&new_kind) = others.choose(rng) else {
                return g.clone();
            };
            let mut root = g.root.clone();
            let target = root.at_mut(at).expect("valid");
            target.kind = new_kind;
            target.params = new_kind.default_params();
            PipelineGraph::new(root)
        }
        MutationKind::Growth => {
            let at = positions.choose(rng).expect("non-empty");
            let budget = max_depth.saturating_sub(at.len()).max(1);
            let sub = random_subtree(&compatible, &predictors, budget, rng);
            PipelineGraph::new(replace_at(&g.root, at, sub))
        }
        MutationKind::Reduce => {
            let non_root: Vec<&Vec<usize>> = positions.iter().filter(|p| !p.is_empty()).collect();
            let Some(at) = non_root.choose(rng) else {
                return g.clone();
            };
            let (last, parent) = at.split_last().expect("non-root");
            let mut root = g.root.clone();
            root.at_mut(parent).expect("valid").children.remove(*last);
            PipelineGraph::new(root)
        }
    };
    if valid(&out, task, max_depth) {
        out
    } else {
        g.clone()
    }
}

/// Variation settings for one reproduction step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variation {
    pub cross_rate: f64,
    pub mut_rate: f64,
    pub max_depth: usize,
    pub task: TaskType,
}

/// Builds `n` offspring genotypes. Per offspring: two parents drawn uniformly
/// from `parents`; with probability `cross_rate` the first child of a
/// crossover (subtree or one-point, equally likely), otherwise a copy of the
/// first parent; then with probability `mut_rate` a mutation of a uniformly
/// chosen kind.
pub fn reproduce(
    parents: &[PipelineGraph],
    n: usize,
    variation: &Variation,
    catalog: &[ModelKind],
    rng: &mut Rng,
) -> Vec<PipelineGraph> {
    assert!(!parents.is_empty(), "reproduction needs at least one parent");
    let Variation {
        cross_rate,
        mut_rate,
        max_depth,
        task,
    } = *variation;
    (0..n)
        .map(|_| {
            let a = parents.choose(rng).expect("non-empty");
            let b = parents.choose(rng).expect("non-empty");
            let mut child = if rng.random::<f64>() < cross_rate {
                if rng.random::<bool>() {
                    subtree_crossover(a, b, task, max_depth, rng).0
                } else {
                    one_point_crossover(a, b, task, max_depth, rng).0
                }
            } else {
                a.clone()
            };
            if rng.random::<f64>() < mut_rate {
                let kind = *MutationKind::ALL.choose(rng).expect("three kinds");
                child = mutate(&child, kind, catalog, task, max_depth, rng);
            }
            child
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{non_dominated_indices, ObjectiveVector};
    use crate::pipeline::random_pipeline;
    use crate::rng::seeded;
    use ModelKind::*;

    const CLF: TaskType = TaskType::BinaryClassification;

    fn pts(v: &[(f64, f64)]) -> Vec<Vec<f64>> {
        v.iter().map(|&(a, b)| vec![a, b]).collect()
    }

    fn pop_of(v: &[(f64, f64)]) -> Population {
        Population::new(
            v.iter()
                .map(|&(q, s)| Individual::new(PipelineGraph::single(DecisionTree), ObjectiveVector::new(q, s), 0.0))
                .collect(),
            0,
        )
    }

    #[test]
    fn full_size_tournament_best_rate() {
        // contestants are drawn with replacement, so a |pop|-sized tournament
        // misses the best with probability (3/4)^4
        let f = [3.0, 1.0, 2.0, 5.0];
        let mut rng = seeded(0);
        let draws = 100_000;
        let hits = tournament_indices(&f, draws, 4, &mut rng).iter().filter(|&&i| i == 1).count();
        assert!((hits as f64 / draws as f64 - (1.0 - 0.75f64.powi(4))).abs() < 0.03);
        let best = tournament_select(&pop_of(&[(0.3, 1.0), (0.1, 1.0)]), 10, 64, |m| m.objectives.q, &mut rng);
        assert!(best.iter().all(|m| m.objectives.q == 0.1));
    }

    #[test]
    fn unit_tournament_is_uniform() {
        let f = [1.0, 2.0, 3.0, 4.0];
        let mut rng = seeded(1);
        let mut counts = [0usize; 4];
        for i in tournament_indices(&f, 40_000, 1, &mut rng) {
            counts[i] += 1;
        }
        for c in counts {
            assert!((c as f64 / 40_000.0 - 0.25).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn binary_tournament_best_rate() {
        // enumerate the 16 ordered pairs: the best (index 0) wins whenever it appears
        let f = [1.0, 2.0, 3.0, 4.0];
        let wins = (0..4)
            .flat_map(|a| (0..4).map(move |b| (a, b)))
            .filter(|&(a, b)| {
                let w = if f[a] <= f[b] { a } else { b };
                w == 0
            })
            .count();
        assert_eq!(wins, 7);
        let mut rng = seeded(2);
        let draws = 100_000;
        let hits = tournament_indices(&f, draws, 2, &mut rng).iter().filter(|&&i| i == 0).count();
        assert!((hits as f64 / draws as f64 - 7.0 / 16.0).abs() < 0.03);
    }

    #[test]
    fn nsga2_fronts_example() {
        let p = pts(&[(1.0, 4.0), (2.0, 3.0), (3.0, 2.0), (4.0, 1.0), (2.5, 2.5)]);
        // (2.5, 2.5) is incomparable with (2, 3) and (3, 2), so it shares the first front.
        let brute: Vec<usize> = (0..p.len())
            .filter(|&i| !(0..p.len()).any(|j| dominates_values(&p[j], &p[i])))
            .collect();
        assert_eq!(brute, vec![0, 1, 2, 3, 4]);
        assert_eq!(non_dominated_fronts(&p), vec![brute]);
        let mut q = p.clone();
        q.push(vec![3.0, 3.0]);
        assert_eq!(non_dominated_fronts(&q), vec![vec![0, 1, 2, 3, 4], vec![5]]);
        assert_eq!(nsga2_indices(&p, 10), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn nsga2_keeps_boundaries() {
        let p = pts(&[(1.0, 4.0), (2.0, 3.0), (3.0, 2.0), (4.0, 1.0)]);
        let d = crowding_distance(&p, &[0, 1, 2, 3]);
        assert!(d[0].is_infinite() && d[3].is_infinite());
        assert_eq!(d[1], d[2]);
        let sel = nsga2_indices(&p, 3);
        assert!(sel.contains(&0) && sel.contains(&3));
        assert_eq!(nsga2_select(&pop_of(&[(1.0, 4.0), (2.0, 3.0), (3.0, 2.0), (4.0, 1.0)]), 3).len(), 3);
    }

    #[test]
    fn spea2_mutually_non_dominated_all_kept() {
        let p = pts(&[(1.0, 4.0), (2.0, 3.0), (3.0, 2.0), (4.0, 1.0)]);
        let (_, raw) = spea2_strength_raw(&p);
        assert!(raw.iter().all(|&r| r == 0.0));
        assert_eq!(spea2_indices(&p, 4), vec![0, 1, 2, 3]);
    }

    #[test]
    fn spea2_strength_and_raw() {
        let p = pts(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]);
        let (s, r) = spea2_strength_raw(&p);
        // (2,2) dominates (3,3) as well
        assert_eq!(s, vec![2, 1, 0]);
        assert_eq!(r, vec![0.0, 2.0, 3.0]);
    }

    #[test]
    fn spea2_selects_non_dominated() {
        let mut rng = seeded(5);
        for _ in 0..200 {
            let p: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random(), rng.random()]).collect();
            let nd = non_dominated_indices(&p);
            let sel = spea2_indices(&p, 10);
            assert_eq!(sel.len(), 10);
            if nd.len() <= 10 {
                assert!(nd.iter().all(|i| sel.contains(i)));
            } else {
                assert!(sel.iter().all(|i| nd.contains(i)));
            }
        }
    }

    #[test]
    fn spea2_truncation_removes_crowded() {
        // (2,3) and (2.01,2.99) are nearly identical; one of them must go
        let p = pts(&[(1.0, 4.0), (2.0, 3.0), (2.01, 2.99), (4.0, 1.0)]);
        let sel = spea2_indices(&p, 3);
        assert!(sel.contains(&0) && sel.contains(&3));
        assert!(sel.contains(&1) != sel.contains(&2));
    }

    fn assorted(task: TaskType, depth: usize, rng: &mut Rng) -> PipelineGraph {
        random_pipeline(&ModelKind::ALL, task, depth, rng).unwrap()
    }

    #[test]
    fn crossover_identical_single_nodes() {
        let a = PipelineGraph::single(DecisionTree);
        let mut rng = seeded(0);
        assert_eq!(subtree_crossover(&a, &a, CLF, 3, &mut rng), (a.clone(), a.clone()));
        assert_eq!(one_point_crossover(&a, &a, CLF, 3, &mut rng), (a.clone(), a.clone()));
    }

    #[test]
    fn subtree_crossover_size_bounds() {
        let a = PipelineGraph::new(NodeSpec::with_children(
            LogisticRegression,
            vec![
                NodeSpec::with_children(DecisionTree, vec![NodeSpec::leaf(KNearestNeighbors)]),
                NodeSpec::with_children(BaggedTrees, vec![NodeSpec::leaf(StandardScaler)]),
            ],
        ));
        let b = PipelineGraph::new(NodeSpec::with_children(
            GaussianNaiveBayes,
            vec![NodeSpec::leaf(DecisionTree), NodeSpec::leaf(MajorityBaseline)],
        ));
        assert_eq!((a.size(), b.size()), (5, 3));
        // extreme swaps: whole a replaced by a leaf of b (1); a leaf of a replaced by all of b (7)
        let mut rng = seeded(4);
        let (mut lo, mut hi) = (usize::MAX, 0);
        for _ in 0..2000 {
            let (c1, c2) = subtree_crossover(&a, &b, CLF, 6, &mut rng);
            for c in [&c1, &c2] {
                assert!(validate(c, CLF, 6).is_valid());
                lo = lo.min(c.size());
                hi = hi.max(c.size());
            }
        }
        assert!(lo >= 1 && hi <= 7);
        assert_eq!((lo, hi), (1, 7));
    }

    #[test]
    fn one_point_root_swap() {
        let a = PipelineGraph::new(NodeSpec::with_children(DecisionTree, vec![NodeSpec::leaf(KNearestNeighbors)]));
        let b = PipelineGraph::single(LogisticRegression);
        let mut rng = seeded(0);
        let ((c1, c2), at) = one_point_crossover_at(&a, &b, CLF, 6, &mut rng);
        assert_eq!(at, Some(vec![]));
        assert_eq!((c1, c2), (b, a));
    }

    #[test]
    fn one_point_same_shape_keeps_skeleton() {
        let a = PipelineGraph::new(NodeSpec::with_children(
            DecisionTree,
            vec![NodeSpec::leaf(KNearestNeighbors), NodeSpec::leaf(BaggedTrees)],
        ));
        let b = PipelineGraph::new(NodeSpec::with_children(
            LogisticRegression,
            vec![NodeSpec::leaf(GaussianNaiveBayes), NodeSpec::leaf(DecisionTree)],
        ));
        let mut rng = seeded(9);
        for _ in 0..50 {
            let (c1, c2) = one_point_crossover(&a, &b, CLF, 6, &mut rng);
            assert_eq!(c1.root.positions(), a.root.positions());
            assert_eq!(c2.root.positions(), b.root.positions());
        }
    }

    #[test]
    fn one_point_uniform_over_common_region() {
        let a = PipelineGraph::new(NodeSpec::with_children(
            DecisionTree,
            vec![NodeSpec::leaf(KNearestNeighbors), NodeSpec::leaf(BaggedTrees), NodeSpec::leaf(DecisionTree)],
        ));
        let b = PipelineGraph::new(NodeSpec::with_children(
            LogisticRegression,
            vec![NodeSpec::leaf(GaussianNaiveBayes), NodeSpec::leaf(DecisionTree)],
        ));
        assert_eq!(common_region(&a.root, &b.root).len(), 3);
        let mut rng = seeded(12);
        let trials = 100_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..trials {
            let (_, at) = one_point_crossover_at(&a, &b, CLF, 6, &mut rng);
            *counts.entry(at.unwrap()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 3);
        for c in counts.values() {
            assert!((*c as f64 / trials as f64 - 1.0 / 3.0).abs() < 0.03);
        }
    }

    #[test]
    fn simple_mutation_preserves_shape() {
        let mut rng = seeded(3);
        let g = PipelineGraph::single(DecisionTree);
        for _ in 0..100 {
            let m = mutate(&g, MutationKind::Simple, &ModelKind::ALL, CLF, 3, &mut rng);
            assert_eq!(m.size(), 1);
            assert!(m.root.kind.is_predictor());
        }
        for _ in 0..500 {
            let g = assorted(TaskType::Regression, 4, &mut rng);
            let m = mutate(&g, MutationKind::Simple, &ModelKind::ALL, TaskType::Regression, 4, &mut rng);
            assert_eq!((m.size(), m.depth()), (g.size(), g.depth()));
            assert_eq!(m.root.positions(), g.root.positions());
        }
    }

    #[test]
    fn reduce_never_grows() {
        let mut rng = seeded(4);
        for _ in 0..1000 {
            let g = assorted(CLF, 4, &mut rng);
            let m = mutate(&g, MutationKind::Reduce, &ModelKind::ALL, CLF, 4, &mut rng);
            assert!(m.size() < g.size() || m == g);
        }
        let single = PipelineGraph::single(DecisionTree);
        assert_eq!(mutate(&single, MutationKind::Reduce, &ModelKind::ALL, CLF, 4, &mut rng), single);
    }

    #[test]
    fn growth_respects_depth() {
        let mut rng = seeded(6);
        for i in 0..10_000 {
            let depth = 1 + i % 6;
            let g = assorted(TaskType::Regression, depth, &mut rng);
            let m = mutate(&g, MutationKind::Growth, &ModelKind::ALL, TaskType::Regression, depth, &mut rng);
            assert!(m.depth() <= depth);
            assert!(validate(&m, TaskType::Regression, depth).is_valid());
        }
    }

    #[test]
    fn reproduce_deterministic() {
        let mut rng = seeded(8);
        let parents: Vec<PipelineGraph> = (0..5).map(|_| assorted(CLF, 3, &mut rng)).collect();
        let v = Variation {
            cross_rate: 0.5,
            mut_rate: 0.5,
            max_depth: 3,
            task: CLF,
        };
        let a = reproduce(&parents, 20, &v, &ModelKind::ALL, &mut seeded(1));
        let b = reproduce(&parents, 20, &v, &ModelKind::ALL, &mut seeded(1));
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        assert!(a.iter().all(|g| validate(g, CLF, 3).is_valid()));
    }
}
