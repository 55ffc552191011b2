//! Combining runs: weighted mean of soft runs, hardening, and picking the
//! best single run on development gold.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::gold::{GoldStandard, HardeningRule};
use crate::ingest::{Run, RunKind};
use crate::metrics::{evaluate, EvalMode, EvalReport, Metric, MetricConfig, MetricsError};
use crate::taxonomy::{SoftAssignment, TaskId};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("an ensemble needs at least two runs, got {0}")]
    NotEnoughRuns(usize),
    #[error("runs disagree on task: {0} vs {1}")]
    TaskMismatch(TaskId, TaskId),
    #[error("run `{run}` has different ids: {}", describe_difference(.only_first, .only_other))]
    IdMismatch {
        run: String,
        only_first: Vec<String>,
        only_other: Vec<String>,
    },
    #[error("run `{0}` holds hard predictions; a soft run is required")]
    NotSoft(String),
    #[error("got {weights} weights for {runs} runs")]
    WeightCount { weights: usize, runs: usize },
    #[error("weights must be finite, non-negative and not all zero")]
    InvalidWeights,
    #[error("no candidate runs to select from")]
    EmptyCandidates,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl EnsembleError {
    pub fn code(&self) -> &'static str {
        match self {
            EnsembleError::NotEnoughRuns(_) => "not_enough_runs",
            EnsembleError::TaskMismatch(..) => "task_mismatch",
            EnsembleError::IdMismatch { .. } => "id_mismatch",
            EnsembleError::NotSoft(_) => "not_soft",
            EnsembleError::WeightCount { .. } => "weight_count",
            EnsembleError::InvalidWeights => "invalid_weights",
            EnsembleError::EmptyCandidates => "empty_candidates",
            EnsembleError::Metrics(e) => e.code(),
        }
    }
}

fn describe_difference(only_first: &[String], only_other: &[String]) -> String {
    const SHOW: usize = 5;
    let fmt = |xs: &[String]| {
        let mut s = xs.iter().take(SHOW).cloned().collect::<Vec<_>>().join(", ");
        if xs.len() > SHOW {
            s.push_str(&format!(", ... ({} total)", xs.len()));
        }
        s
    };
    format!("missing [{}], unexpected [{}]", fmt(only_first), fmt(only_other))
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Weighted mean of soft runs.
///
/// Each output value is the exact rational `sum(w_i * p_i) / sum(w_i)`
/// rounded once to the nearest `f64` (ties to even). The mean of identical
/// inputs is therefore the input itself, and the result does not depend on
/// run order. Values that are not exactly representable in binary (0.3, for
/// instance) can land one ulp away from the decimal literal; compare against
/// decimals after rounding to 12 places.
///
/// Items follow the order of the first run. Without `weights` every run
/// counts equally.
pub fn mean_ensemble(runs: &[&Run], weights: Option<&[f64]>) -> Result<Run, EnsembleError> {
    if runs.len() < 2 {
        return Err(EnsembleError::NotEnoughRuns(runs.len()));
    }
    let first = runs[0];
    let task = first.task;
    let mut soft = Vec::with_capacity(runs.len());
    for r in runs {
        if r.task != task {
            return Err(EnsembleError::TaskMismatch(task, r.task));
        }
        soft.push(r.as_soft().ok_or_else(|| EnsembleError::NotSoft(r.name.clone()))?);
    }
    for (r, items) in runs.iter().zip(&soft).skip(1) {
        if items.len() != soft[0].len() || !items.keys().all(|k| soft[0].contains_key(k)) {
            let a: BTreeSet<&String> = soft[0].keys().collect();
            let b: BTreeSet<&String> = items.keys().collect();
            return Err(EnsembleError::IdMismatch {
                run: r.name.clone(),
                only_first: a.difference(&b).map(|s| s.to_string()).collect(),
                only_other: b.difference(&a).map(|s| s.to_string()).collect(),
            });
        }
    }

    let weights: Vec<f64> = match weights {
        Some(w) if w.len() != runs.len() => {
            return Err(EnsembleError::WeightCount {
                weights: w.len(),
                runs: runs.len(),
            })
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; runs.len()],
    };
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().all(|w| *w == 0.0) {
        return Err(EnsembleError::InvalidWeights);
    }
    let exact_weights: Vec<BigRational> = weights.iter().map(|&w| exact(w)).collect();
    let total: BigRational = exact_weights.iter().fold(BigRational::zero(), |acc, w| acc + w);

    let ids: Vec<&String> = soft[0].keys().collect();
    let combined: Vec<SoftAssignment> = ids
        .par_iter()
        .map(|id| {
            let values = (0..task.arity())
                .map(|c| {
                    let mut acc = BigRational::new(BigInt::zero(), BigInt::from(1));
                    for (items, w) in soft.iter().zip(&exact_weights) {
                        if !w.is_zero() {
                            acc += w * exact(items[id.as_str()].values()[c]);
                        }
                    }
                    (acc / &total).to_f64().expect("mean of probabilities is finite")
                })
                .collect();
            SoftAssignment::new_unchecked(task, values)
        })
        .collect();
    let name = runs.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join("+");
    Ok(Run::soft(
        name,
        task,
        ids.into_iter().cloned().zip(combined).collect::<IndexMap<_, _>>(),
    ))
}

/// Hard labels from a soft run: argmax for single-label tasks, the
/// threshold rule for Task 3. Hard runs pass through unchanged.
pub fn harden(run: &Run, rule: &HardeningRule) -> Run {
    match run.as_soft() {
        Some(items) => Run::hard(
            run.name.clone(),
            run.task,
            items.iter().map(|(id, a)| (id.clone(), rule.apply(a))).collect(),
        ),
        None => run.clone(),
    }
}

/// Outcome of [`select_best_run`]: the winning index and every candidate's
/// report, in candidate order.
#[derive(Debug, Clone)]
pub struct Selection {
    pub best: usize,
    pub reports: Vec<EvalReport>,
}

/// Evaluates every candidate on `dev_gold` and keeps the best by `metric`
/// (lowest for cross-entropy). The earliest candidate wins ties.
pub fn select_best_run(
    candidates: &[&Run],
    dev_gold: &GoldStandard,
    metric: Metric,
    mode: EvalMode,
    cfg: &MetricConfig,
) -> Result<Selection, EnsembleError> {
    if candidates.is_empty() {
        return Err(EnsembleError::EmptyCandidates);
    }
    let task = candidates[0].task;
    if let Some(r) = candidates.iter().find(|r| r.task != task) {
        return Err(EnsembleError::TaskMismatch(task, r.task));
    }
    if !mode.columns(dev_gold.task).contains(&metric) {
        return Err(MetricsError::MetricUnavailable { metric, mode }.into());
    }
    let mut reports = Vec::with_capacity(candidates.len());
    for r in candidates {
        if mode == EvalMode::SoftSoft && r.kind() != RunKind::Soft {
            return Err(EnsembleError::NotSoft(r.name.clone()));
        }
        reports.push(evaluate(r, dev_gold, mode, cfg)?);
    }
    let score = |rep: &EvalReport| {
        let v = rep.get(metric).unwrap_or(f64::NEG_INFINITY);
        if metric.higher_is_better() {
            v
        } else {
            -v
        }
    };
    let mut best = 0;
    for (i, rep) in reports.iter().enumerate().skip(1) {
        if score(rep) > score(&reports[best]) {
            best = i;
        }
    }
    Ok(Selection { best, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(name: &str, rows: &[(&str, [f64; 2])]) -> Run {
        Run::soft(
            name,
            TaskId::Task1,
            rows.iter()
                .map(|(id, v)| (id.to_string(), SoftAssignment::new(TaskId::Task1, v.to_vec()).unwrap()))
                .collect(),
        )
    }

    fn round12(x: f64) -> f64 {
        (x * 1e12).round() / 1e12
    }

    #[test]
    fn arithmetic_mean() {
        let a = run("a", &[("1", [0.8, 0.2])]);
        let b = run("b", &[("1", [0.6, 0.4])]);
        let m = mean_ensemble(&[&a, &b], None).unwrap();
        let v = m.as_soft().unwrap()["1"].values().to_vec();
        assert_eq!(v[0], 0.7);
        assert_eq!(round12(v[1]), 0.3);
        assert_eq!(m.name, "a+b");
    }

    #[test]
    fn identical_runs_are_a_fixed_point() {
        let a = run("a", &[("1", [1.0 / 3.0, 2.0 / 3.0]), ("2", [0.1, 0.9])]);
        let m = mean_ensemble(&[&a, &a, &a], None).unwrap();
        assert_eq!(m.as_soft(), a.as_soft());
    }

    #[test]
    fn degenerate_weights_pick_the_first_run() {
        let a = run("a", &[("1", [0.123, 0.877])]);
        let b = run("b", &[("1", [0.9, 0.1])]);
        let m = mean_ensemble(&[&a, &b], Some(&[1.0, 0.0])).unwrap();
        assert_eq!(m.as_soft(), a.as_soft());
    }

    #[test]
    fn id_mismatch_lists_difference() {
        let a = run("a", &[("1", [0.5, 0.5]), ("2", [0.5, 0.5])]);
        let b = run("b", &[("1", [0.5, 0.5]), ("3", [0.5, 0.5])]);
        match mean_ensemble(&[&a, &b], None) {
            Err(EnsembleError::IdMismatch { only_first, only_other, .. }) => {
                assert_eq!(only_first, vec!["2"]);
                assert_eq!(only_other, vec!["3"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn needs_two_runs_and_valid_weights() {
        let a = run("a", &[("1", [0.5, 0.5])]);
        assert!(matches!(mean_ensemble(&[&a], None), Err(EnsembleError::NotEnoughRuns(1))));
        assert!(matches!(
            mean_ensemble(&[&a, &a], Some(&[1.0])),
            Err(EnsembleError::WeightCount { .. })
        ));
        assert!(matches!(
            mean_ensemble(&[&a, &a], Some(&[0.0, 0.0])),
            Err(EnsembleError::InvalidWeights)
        ));
    }

    #[test]
    fn harden_examples() {
        let r = run("r", &[("1", [4.0 / 6.0, 2.0 / 6.0]), ("2", [0.5, 0.5])]);
        let h = harden(&r, &HardeningRule::default());
        let h = h.as_hard().unwrap();
        assert_eq!(h["1"].indices(), &[0]);
        assert_eq!(h["2"].indices(), &[0]);
    }

    #[test]
    fn select_prefers_gold_and_keeps_order_on_ties() {
        let g = GoldStandard::from_run(
            &run("g", &[("1", [1.0, 0.0]), ("2", [0.0, 1.0]), ("3", [1.0, 0.0])]),
            &HardeningRule::default(),
        );
        let worse = run("w", &[("1", [0.6, 0.4]), ("2", [0.4, 0.6]), ("3", [0.6, 0.4])]);
        let gold_run = g.soft_run("gold");
        let cfg = MetricConfig::default();
        let sel = select_best_run(&[&worse, &gold_run], &g, Metric::IcmSoft, EvalMode::SoftSoft, &cfg).unwrap();
        assert_eq!(sel.best, 1);
        let sel = select_best_run(&[&worse, &worse], &g, Metric::IcmSoft, EvalMode::SoftSoft, &cfg).unwrap();
        assert_eq!(sel.best, 0);
        let sel = select_best_run(&[&worse], &g, Metric::CrossEntropy, EvalMode::SoftSoft, &cfg).unwrap();
        assert_eq!(sel.best, 0);
        assert!(matches!(
            select_best_run(&[], &g, Metric::IcmSoft, EvalMode::SoftSoft, &cfg),
            Err(EnsembleError::EmptyCandidates)
        ));
    }
}
