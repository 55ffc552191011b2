//! Snapping predicted distributions onto the grid of distributions that `n`
//! annotators can actually produce.
//!
//! For single-label tasks the grid is every composition of `n` into as many
//! parts as the task has categories; for Task 3 it is the full lattice
//! `{0, 1/n, ..., 1}^m`. A prediction is replaced by the grid point with the
//! highest cosine similarity. Ties (within [`COSINE_TIE_TOLERANCE`]) go to the
//! point nearest in Euclidean distance, then to the first point in
//! lexicographic order of count vectors.

use std::collections::HashMap;
use std::sync::Arc;

use indexmap::IndexMap;
use parking_lot::RwLock;
use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{Dataset, Run};
use crate::taxonomy::{SoftAssignment, TaskId};

pub const DEFAULT_GRID_CAP: u64 = 10_000_000;
pub const DEFAULT_ANNOTATORS: u32 = 6;
pub const COSINE_TIE_TOLERANCE: f64 = 1e-12;
pub const DISTANCE_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdjustError {
    #[error("grid has {points} points, above the enumeration cap of {cap}")]
    GridTooLarge { points: u128, cap: u64 },
    #[error("no annotator count available for item {0}")]
    MissingAnnotatorCount(String),
    #[error("annotator count must be at least 1")]
    ZeroAnnotators,
    #[error("run `{0}` holds hard predictions; adjustment needs a soft run")]
    NotSoft(String),
}

impl AdjustError {
    pub fn code(&self) -> &'static str {
        match self {
            AdjustError::GridTooLarge { .. } => "grid_too_large",
            AdjustError::MissingAnnotatorCount(_) => "missing_annotator_count",
            AdjustError::ZeroAnnotators => "zero_annotators",
            AdjustError::NotSoft(_) => "not_soft",
        }
    }
}

/// Number of feasible points for `(task, n)`.
pub fn grid_size(task: TaskId, n: u32) -> u128 {
    let m = task.arity() as u32;
    if task.is_multilabel() {
        u128::from(n + 1).pow(m)
    } else {
        // C(n + m - 1, m - 1)
        let mut acc: u128 = 1;
        for i in 1..=u128::from(m - 1) {
            acc = acc * (u128::from(n) + i) / i;
        }
        acc
    }
}

/// Every feasible count vector for `(task, n)`, flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleGrid {
    pub task: TaskId,
    pub n: u32,
    arity: usize,
    counts: Vec<u32>,
    norms: Vec<f64>,
}

impl FeasibleGrid {
    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn counts(&self, i: usize) -> &[u32] {
        &self.counts[i * self.arity..(i + 1) * self.arity]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.counts.chunks_exact(self.arity)
    }

    pub fn assignment(&self, i: usize) -> SoftAssignment {
        SoftAssignment::from_counts(self.task, self.counts(i), self.n)
    }

    pub fn points(&self) -> impl Iterator<Item = SoftAssignment> + '_ {
        (0..self.len()).map(|i| self.assignment(i))
    }
}

pub fn enumerate_grid(task: TaskId, n: u32, cap: u64) -> Result<FeasibleGrid, AdjustError> {
    if n == 0 {
        return Err(AdjustError::ZeroAnnotators);
    }
    let points = grid_size(task, n);
    if points > u128::from(cap) {
        return Err(AdjustError::GridTooLarge { points, cap });
    }
    let m = task.arity();
    let mut counts = Vec::with_capacity(points as usize * m);
    let mut current = vec![0u32; m];
    if task.is_multilabel() {
        // odometer over {0..=n}^m, last coordinate fastest
        loop {
            counts.extend_from_slice(&current);
            let mut pos = m;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                if current[pos] < n {
                    current[pos] += 1;
                    break;
                }
                current[pos] = 0;
            }
            if current.iter().all(|&k| k == 0) {
                break;
            }
        }
    } else {
        compositions(n, 0, &mut current, &mut counts);
    }
    let norms = counts
        .chunks_exact(m)
        .map(|k| k.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt())
        .collect::<Vec<_>>();
    debug_assert_eq!(norms.len() as u128, points);
    Ok(FeasibleGrid {
        task,
        n,
        arity: m,
        counts,
        norms,
    })
}

fn compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<u32>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.extend_from_slice(current);
        return;
    }
    for k in 0..=remaining {
        current[pos] = k;
        compositions(remaining - k, pos + 1, current, out);
    }
}

/// Snaps assignments, memoizing one grid per `(task, n)`.
#[derive(Debug)]
pub struct Snapper {
    cap: u64,
    grids: RwLock<HashMap<(TaskId, u32), Arc<FeasibleGrid>>>,
}

impl Default for Snapper {
    fn default() -> Self {
        Snapper::new(DEFAULT_GRID_CAP)
    }
}

impl Snapper {
    pub fn new(cap: u64) -> Self {
        Snapper {
            cap,
            grids: RwLock::new(HashMap::new()),
        }
    }

    pub fn grid(&self, task: TaskId, n: u32) -> Result<Arc<FeasibleGrid>, AdjustError> {
        if let Some(g) = self.grids.read().get(&(task, n)) {
            return Ok(Arc::clone(g));
        }
        let grid = Arc::new(enumerate_grid(task, n, self.cap)?);
        let mut grids = self.grids.write();
        Ok(Arc::clone(grids.entry((task, n)).or_insert(grid)))
    }

    /// Nearest feasible assignment by cosine similarity.
    ///
    /// An all-zero input is replaced by the uniform assignment first. When the
    /// Task 3 lattice exceeds the cap each value is rounded to the nearest
    /// multiple of `1/n` instead, which is not guaranteed to be optimal.
    pub fn snap(&self, p: &SoftAssignment, n: u32) -> Result<SoftAssignment, AdjustError> {
        if n == 0 {
            return Err(AdjustError::ZeroAnnotators);
        }
        let task = p.task();
        let uniform;
        let p = if p.is_all_zero() {
            uniform = SoftAssignment::uniform(task);
            &uniform
        } else {
            p
        };
        match self.grid(task, n) {
            Ok(grid) => Ok(grid.assignment(best_point(&grid, p.values()))),
            Err(AdjustError::GridTooLarge { .. }) if task.is_multilabel() => Ok(round_per_category(p, n)),
            Err(e) => Err(e),
        }
    }
}

fn round_per_category(p: &SoftAssignment, n: u32) -> SoftAssignment {
    let nf = f64::from(n);
    let counts: Vec<u32> = p.values().iter().map(|&v| (v * nf).round() as u32).collect();
    SoftAssignment::from_counts(p.task(), &counts, n)
}

fn cosine(p: &[f64], p_norm: f64, k: &[u32], k_norm: f64) -> f64 {
    if k_norm == 0.0 {
        return 0.0;
    }
    let dot: f64 = p.iter().zip(k).map(|(&a, &b)| a * f64::from(b)).sum();
    dot / (p_norm * k_norm)
}

fn distance_sq(p: &[f64], k: &[u32], n: f64) -> f64 {
    p.iter()
        .zip(k)
        .map(|(&a, &b)| {
            let d = a - f64::from(b) / n;
            d * d
        })
        .sum()
}

/// Index of the winning grid point under the cosine / distance / order chain.
fn best_point(grid: &FeasibleGrid, p: &[f64]) -> usize {
    let p_norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    let max_cos = grid
        .iter()
        .zip(&grid.norms)
        .map(|(k, &kn)| cosine(p, p_norm, k, kn))
        .fold(f64::NEG_INFINITY, f64::max);
    let n = f64::from(grid.n);
    let mut best = usize::MAX;
    let mut best_dist = f64::INFINITY;
    for (i, (k, &kn)) in grid.iter().zip(&grid.norms).enumerate() {
        if cosine(p, p_norm, k, kn) < max_cos - COSINE_TIE_TOLERANCE {
            continue;
        }
        let d = distance_sq(p, k, n);
        if d < best_dist - DISTANCE_TIE_TOLERANCE {
            best = i;
            best_dist = d;
        }
    }
    best
}

/// Where per-item annotator counts come from.
#[derive(Debug, Clone, Copy)]
pub enum AnnotatorCounts<'a> {
    Global(u32),
    /// Each item's `number_annotators`; items without one use `fallback`.
    PerItem { dataset: &'a Dataset, fallback: Option<u32> },
}

/// Snaps every item of a soft run.
pub fn adjust_run(snapper: &Snapper, run: &Run, counts: AnnotatorCounts<'_>) -> Result<Run, AdjustError> {
    let items = run.as_soft().ok_or_else(|| AdjustError::NotSoft(run.name.clone()))?;
    let per_item = match counts {
        AnnotatorCounts::PerItem { dataset, .. } => Some(dataset.annotator_counts()),
        AnnotatorCounts::Global(_) => None,
    };
    let n_for = |id: &str| -> Result<u32, AdjustError> {
        match (counts, &per_item) {
            (AnnotatorCounts::Global(n), _) => Ok(n),
            (AnnotatorCounts::PerItem { fallback, .. }, Some(map)) => map
                .get(id)
                .copied()
                .or(fallback)
                .ok_or_else(|| AdjustError::MissingAnnotatorCount(id.to_string())),
            (AnnotatorCounts::PerItem { fallback, .. }, None) => {
                fallback.ok_or_else(|| AdjustError::MissingAnnotatorCount(id.to_string()))
            }
        }
    };
    let entries: Vec<(&String, &SoftAssignment)> = items.iter().collect();
    let snapped: Vec<SoftAssignment> = entries
        .par_iter()
        .map(|(id, a)| snapper.snap(a, n_for(id)?))
        .collect::<Result<_, _>>()?;
    let out: IndexMap<String, SoftAssignment> = entries
        .into_iter()
        .map(|(id, _)| id.clone())
        .zip(snapped)
        .collect();
    Ok(Run::soft(run.name.clone(), run.task, out))
}
