//! ICM, ICM-Soft, cross-entropy and F1, plus the baseline-anchored
//! normalization and report assembly.
//!
//! Information content comes from the empirical frequency of each category in
//! the hard gold: `ic(c) = -log2 p(c)`. For a label set `S`,
//! `IC(S) = sum of ic(c)`; for a soft assignment `X`,
//! `ICw(X) = sum of X(c) * ic(c)`, and the union of two soft assignments
//! takes the per-category maximum. Per item:
//!
//! ```text
//! ICM(A, B) = a1 * IC(A) + a2 * IC(B) - b * IC(A ∪ B)
//! ```
//!
//! Scores are averaged over items in gold order with a sequential reduction,
//! so results do not depend on the worker count.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gold::{baseline, BaselineKind, GoldError, GoldStandard, HardeningRule};
use crate::ingest::{Predictions, Run, RunKind};
use crate::taxonomy::{HardAssignment, SoftAssignment, TaskId};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("gold standard has no items")]
    EmptyGold,
    #[error("prediction ids differ from gold: {missing} missing, {extra} extra (e.g. {example})")]
    IdMismatch { missing: usize, extra: usize, example: String },
    #[error("{metric} is not defined for {task}")]
    UnsupportedTask { metric: Metric, task: TaskId },
    #[error("run is for {run}, gold is for {gold}")]
    TaskMismatch { run: TaskId, gold: TaskId },
    #[error("{mode} evaluation needs a soft run, `{run}` is hard")]
    ModeMismatch { mode: EvalMode, run: String },
    #[error("normalization anchors are degenerate: gold {gold} <= floor {floor}")]
    DegenerateAnchors { gold: f64, floor: f64 },
    #[error("reports mix tasks or evaluation modes")]
    MixedModes,
    #[error("{metric} is not reported in {mode} evaluation")]
    MetricUnavailable { metric: Metric, mode: EvalMode },
    #[error("invalid metric configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Gold(#[from] GoldError),
}

impl MetricsError {
    pub fn code(&self) -> &'static str {
        match self {
            MetricsError::EmptyGold => "empty_gold",
            MetricsError::IdMismatch { .. } => "id_mismatch",
            MetricsError::UnsupportedTask { .. } => "unsupported_task",
            MetricsError::TaskMismatch { .. } => "task_mismatch",
            MetricsError::ModeMismatch { .. } => "mode_mismatch",
            MetricsError::DegenerateAnchors { .. } => "degenerate_anchors",
            MetricsError::MixedModes => "mixed_modes",
            MetricsError::MetricUnavailable { .. } => "metric_unavailable",
            MetricsError::InvalidConfig(_) => "invalid_config",
            MetricsError::Gold(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    /// Clamp applied to predicted probabilities before taking logs.
    pub ce_epsilon: f64,
    /// Used to harden soft runs scored in hard-hard mode.
    pub hardening: HardeningRule,
    /// Count NO as a class in Task 2/3 macro F1.
    pub f1_include_no: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            alpha1: 2.0,
            alpha2: 2.0,
            beta: 3.0,
            ce_epsilon: 1e-12,
            hardening: HardeningRule::default(),
            f1_include_no: false,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let ok = self.alpha1 > 0.0
            && self.alpha2 > 0.0
            && self.beta >= self.alpha1.max(self.alpha2)
            && self.ce_epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(MetricsError::InvalidConfig(format!(
                "need beta >= max(alpha1, alpha2) > 0 and ce_epsilon > 0, got {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvalMode {
    #[serde(rename = "soft-soft")]
    SoftSoft,
    #[serde(rename = "hard-hard")]
    HardHard,
    #[serde(rename = "hard-soft")]
    HardSoft,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::SoftSoft => "soft-soft",
            EvalMode::HardHard => "hard-hard",
            EvalMode::HardSoft => "hard-soft",
        }
    }

    pub fn primary(self) -> Metric {
        match self {
            EvalMode::SoftSoft | EvalMode::HardSoft => Metric::IcmSoft,
            EvalMode::HardHard => Metric::IcmHard,
        }
    }

    /// Report columns for this mode, in table order.
    pub fn columns(self, task: TaskId) -> Vec<Metric> {
        match self {
            EvalMode::SoftSoft | EvalMode::HardSoft => {
                let mut cols = vec![Metric::IcmSoft, Metric::IcmSoftNorm];
                if !task.is_multilabel() {
                    cols.push(Metric::CrossEntropy);
                }
                cols
            }
            EvalMode::HardHard => vec![Metric::IcmHard, Metric::IcmHardNorm, Metric::F1],
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "soft-soft" => Ok(EvalMode::SoftSoft),
            "hard-hard" => Ok(EvalMode::HardHard),
            "hard-soft" => Ok(EvalMode::HardSoft),
            other => Err(format!("unknown mode `{other}` (expected soft-soft, hard-hard or hard-soft)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "ICM-Soft")]
    IcmSoft,
    #[serde(rename = "ICM-Soft Norm")]
    IcmSoftNorm,
    #[serde(rename = "Cross Entropy")]
    CrossEntropy,
    #[serde(rename = "ICM-Hard")]
    IcmHard,
    #[serde(rename = "ICM-Hard Norm")]
    IcmHardNorm,
    #[serde(rename = "F1")]
    F1,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::IcmSoft => "ICM-Soft",
            Metric::IcmSoftNorm => "ICM-Soft Norm",
            Metric::CrossEntropy => "Cross Entropy",
            Metric::IcmHard => "ICM-Hard",
            Metric::IcmHardNorm => "ICM-Hard Norm",
            Metric::F1 => "F1",
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Metric::IcmSoft => "icm-soft",
            Metric::IcmSoftNorm => "icm-soft-norm",
            Metric::CrossEntropy => "cross-entropy",
            Metric::IcmHard => "icm-hard",
            Metric::IcmHardNorm => "icm-hard-norm",
            Metric::F1 => "f1",
        }
    }

    pub fn higher_is_better(self) -> bool {
        self != Metric::CrossEntropy
    }

    pub fn is_normalized(self) -> bool {
        matches!(self, Metric::IcmSoftNorm | Metric::IcmHardNorm)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Metric::IcmSoft,
            Metric::IcmSoftNorm,
            Metric::CrossEntropy,
            Metric::IcmHard,
            Metric::IcmHardNorm,
            Metric::F1,
        ]
        .into_iter()
        .find(|m| m.id() == s || m.label() == s)
        .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

/// Empirical category probabilities and information content.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryStats {
    pub task: TaskId,
    pub p: Vec<f64>,
    pub ic: Vec<f64>,
}

impl CategoryStats {
    pub fn ic_of_set(&self, h: &HardAssignment) -> f64 {
        h.indices().iter().map(|&i| self.ic[i]).sum()
    }

    pub fn ic_weighted(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.ic).map(|(x, ic)| x * ic).sum()
    }
}

/// `p(c)` = share of items whose hard gold contains `c`. Categories never
/// seen in gold get `1 / (2 * items)`.
pub fn fit_category_stats(gold: &GoldStandard) -> Result<CategoryStats, MetricsError> {
    let items = gold.hard.len();
    if items == 0 {
        return Err(MetricsError::EmptyGold);
    }
    let mut counts = vec![0usize; gold.task.arity()];
    for h in gold.hard.values() {
        for &i in h.indices() {
            counts[i] += 1;
        }
    }
    let floor = 1.0 / (2.0 * items as f64);
    let p: Vec<f64> = counts
        .iter()
        .map(|&k| if k == 0 { floor } else { k as f64 / items as f64 })
        .collect();
    let ic = p.iter().map(|&x| -x.log2()).collect();
    Ok(CategoryStats { task: gold.task, p, ic })
}

/// Predictions aligned to gold order.
fn align<'a, T>(pred: &'a IndexMap<String, T>, gold: &GoldStandard) -> Result<Vec<&'a T>, MetricsError> {
    let mut out = Vec::with_capacity(gold.soft.len());
    let mut missing = Vec::new();
    for id in gold.soft.keys() {
        match pred.get(id) {
            Some(x) => out.push(x),
            None => missing.push(id.as_str()),
        }
    }
    let extra: Vec<&str> = pred
        .keys()
        .filter(|id| !gold.soft.contains_key(*id))
        .map(String::as_str)
        .collect();
    if missing.is_empty() && extra.is_empty() {
        Ok(out)
    } else {
        Err(MetricsError::IdMismatch {
            missing: missing.len(),
            extra: extra.len(),
            example: missing.first().or(extra.first()).copied().unwrap_or_default().to_string(),
        })
    }
}

fn mean_in_order(terms: Vec<f64>) -> f64 {
    let n = terms.len();
    terms.into_iter().sum::<f64>() / n as f64
}

fn check_task(run: TaskId, gold: &GoldStandard) -> Result<(), MetricsError> {
    if run != gold.task {
        return Err(MetricsError::TaskMismatch { run, gold: gold.task });
    }
    if gold.is_empty() {
        return Err(MetricsError::EmptyGold);
    }
    Ok(())
}

/// Hard view of a run: hard runs as-is, soft runs hardened with `cfg`.
pub fn hard_view(run: &Run, cfg: &MetricConfig) -> IndexMap<String, HardAssignment> {
    match &run.predictions {
        Predictions::Hard(m) => m.clone(),
        Predictions::Soft(m) => m.iter().map(|(id, a)| (id.clone(), cfg.hardening.apply(a))).collect(),
    }
}

/// Soft view of a run: soft runs as-is, hard runs as degenerate assignments.
pub fn soft_view(run: &Run) -> IndexMap<String, SoftAssignment> {
    match &run.predictions {
        Predictions::Soft(m) => m.clone(),
        Predictions::Hard(m) => m.iter().map(|(id, h)| (id.clone(), SoftAssignment::degenerate(h))).collect(),
    }
}

pub fn icm_hard(
    pred: &IndexMap<String, HardAssignment>,
    gold: &GoldStandard,
    stats: &CategoryStats,
    cfg: &MetricConfig,
) -> Result<f64, MetricsError> {
    let aligned = align(pred, gold)?;
    let terms: Vec<f64> = aligned
        .par_iter()
        .zip(gold.hard.par_values())
        .map(|(a, b)| {
            let union: f64 = (0..gold.task.arity())
                .filter(|&i| a.contains(i) || b.contains(i))
                .map(|i| stats.ic[i])
                .sum();
            cfg.alpha1 * stats.ic_of_set(a) + cfg.alpha2 * stats.ic_of_set(b) - cfg.beta * union
        })
        .collect();
    Ok(mean_in_order(terms))
}

pub fn icm_soft(
    pred: &IndexMap<String, SoftAssignment>,
    gold: &GoldStandard,
    stats: &CategoryStats,
    cfg: &MetricConfig,
) -> Result<f64, MetricsError> {
    let aligned = align(pred, gold)?;
    let terms: Vec<f64> = aligned
        .par_iter()
        .zip(gold.soft.par_values())
        .map(|(a, b)| {
            let union: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x.max(*y)).collect();
            cfg.alpha1 * stats.ic_weighted(a.values()) + cfg.alpha2 * stats.ic_weighted(b.values())
                - cfg.beta * stats.ic_weighted(&union)
        })
        .collect();
    Ok(mean_in_order(terms))
}

/// Mean over items of `-sum g(c) ln max(p(c), eps)`. Single-label tasks only.
pub fn cross_entropy(
    pred: &IndexMap<String, SoftAssignment>,
    gold: &GoldStandard,
    cfg: &MetricConfig,
) -> Result<f64, MetricsError> {
    if gold.task.is_multilabel() {
        return Err(MetricsError::UnsupportedTask {
            metric: Metric::CrossEntropy,
            task: gold.task,
        });
    }
    let aligned = align(pred, gold)?;
    let terms: Vec<f64> = aligned
        .par_iter()
        .zip(gold.soft.par_values())
        .map(|(p, g)| {
            -g.values()
                .iter()
                .zip(p.values())
                .filter(|(&gv, _)| gv > 0.0)
                .map(|(&gv, &pv)| gv * pv.max(cfg.ce_epsilon).ln())
                .sum::<f64>()
        })
        .collect();
    Ok(mean_in_order(terms))
}

/// Task 1: F1 of YES. Tasks 2 and 3: macro F1 over the non-NO classes, each
/// scored as a binary relevance problem. Classes absent from both prediction
/// and gold are left out of the average; if every class is absent the score
/// is 1.
pub fn f1(
    pred: &IndexMap<String, HardAssignment>,
    gold: &GoldStandard,
    cfg: &MetricConfig,
) -> Result<f64, MetricsError> {
    let aligned = align(pred, gold)?;
    let task = gold.task;
    let classes: Vec<usize> = match task {
        TaskId::Task1 => vec![0],
        _ => (0..task.arity())
            .filter(|&i| cfg.f1_include_no || i != task.no_index())
            .collect(),
    };
    let mut scores = Vec::with_capacity(classes.len());
    for c in classes {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (a, b) in aligned.iter().zip(gold.hard.values()) {
            match (a.contains(c), b.contains(c)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let denom = 2 * tp + fp + fn_;
        if denom > 0 {
            scores.push(2.0 * tp as f64 / denom as f64);
        }
    }
    if scores.is_empty() {
        return Ok(1.0);
    }
    Ok(mean_in_order(scores))
}

/// Affine rescaling so the floor (minority baseline) maps to 0 and the gold
/// oracle to 1, clipped to `[0, 1]`.
pub fn normalize(x: f64, gold_score: f64, floor_score: f64) -> Result<f64, MetricsError> {
    if gold_score.partial_cmp(&floor_score) != Some(std::cmp::Ordering::Greater) {
        return Err(MetricsError::DegenerateAnchors {
            gold: gold_score,
            floor: floor_score,
        });
    }
    Ok(((x - floor_score) / (gold_score - floor_score)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub run: String,
    pub task: TaskId,
    pub mode: EvalMode,
    pub items: usize,
    pub metrics: IndexMap<Metric, f64>,
    pub normalized: IndexMap<Metric, f64>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub metadata: IndexMap<String, String>,
}

impl EvalReport {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.metrics.get(&metric).or_else(|| self.normalized.get(&metric)).copied()
    }
}

/// Raw metrics reported for `mode`, computed on already-converted views.
fn raw_scores(
    soft: Option<&IndexMap<String, SoftAssignment>>,
    hard: Option<&IndexMap<String, HardAssignment>>,
    gold: &GoldStandard,
    stats: &CategoryStats,
    mode: EvalMode,
    cfg: &MetricConfig,
) -> Result<IndexMap<Metric, f64>, MetricsError> {
    let mut out = IndexMap::new();
    match mode {
        EvalMode::SoftSoft | EvalMode::HardSoft => {
            let soft = soft.expect("soft view for soft modes");
            out.insert(Metric::IcmSoft, icm_soft(soft, gold, stats, cfg)?);
            if !gold.task.is_multilabel() {
                out.insert(Metric::CrossEntropy, cross_entropy(soft, gold, cfg)?);
            }
        }
        EvalMode::HardHard => {
            let hard = hard.expect("hard view for hard mode");
            out.insert(Metric::IcmHard, icm_hard(hard, gold, stats, cfg)?);
            out.insert(Metric::F1, f1(hard, gold, cfg)?);
        }
    }
    Ok(out)
}

/// Gold-oracle and minority-baseline scores on the primary metric of `mode`.
pub fn anchor_scores(
    gold: &GoldStandard,
    stats: &CategoryStats,
    mode: EvalMode,
    cfg: &MetricConfig,
) -> Result<(f64, f64), MetricsError> {
    Ok(match mode {
        EvalMode::SoftSoft | EvalMode::HardSoft => {
            let minority = baseline(gold, BaselineKind::Minority, RunKind::Soft)?;
            (
                icm_soft(&gold.soft, gold, stats, cfg)?,
                icm_soft(minority.as_soft().expect("soft baseline"), gold, stats, cfg)?,
            )
        }
        EvalMode::HardHard => {
            let minority = baseline(gold, BaselineKind::Minority, RunKind::Hard)?;
            (
                icm_hard(&gold.hard, gold, stats, cfg)?,
                icm_hard(minority.as_hard().expect("hard baseline"), gold, stats, cfg)?,
            )
        }
    })
}

/// Scores `pred` against `gold` in `mode`.
///
/// Soft-soft needs a soft run. Hard-hard hardens soft runs with
/// `cfg.hardening`. Hard-soft encodes hard labels as degenerate distributions
/// (soft runs are hardened first). The normalized column is omitted when the
/// anchors coincide.
pub fn evaluate(pred: &Run, gold: &GoldStandard, mode: EvalMode, cfg: &MetricConfig) -> Result<EvalReport, MetricsError> {
    cfg.validate()?;
    check_task(pred.task, gold)?;
    let stats = fit_category_stats(gold)?;
    let (soft, hard) = match mode {
        EvalMode::SoftSoft => {
            if pred.kind() != RunKind::Soft {
                return Err(MetricsError::ModeMismatch {
                    mode,
                    run: pred.name.clone(),
                });
            }
            (Some(soft_view(pred)), None)
        }
        EvalMode::HardSoft => {
            let hard = hard_view(pred, cfg);
            let soft = hard.iter().map(|(id, h)| (id.clone(), SoftAssignment::degenerate(h))).collect();
            (Some(soft), None)
        }
        EvalMode::HardHard => (None, Some(hard_view(pred, cfg))),
    };
    let metrics = raw_scores(soft.as_ref(), hard.as_ref(), gold, &stats, mode, cfg)?;
    let primary = mode.primary();
    let norm_metric = match primary {
        Metric::IcmSoft => Metric::IcmSoftNorm,
        _ => Metric::IcmHardNorm,
    };
    let (gold_score, floor_score) = anchor_scores(gold, &stats, mode, cfg)?;
    let mut normalized = IndexMap::new();
    match normalize(metrics[&primary], gold_score, floor_score) {
        Ok(v) => {
            normalized.insert(norm_metric, v);
        }
        Err(MetricsError::DegenerateAnchors { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(EvalReport {
        run: pred.name.clone(),
        task: gold.task,
        mode,
        items: gold.len(),
        metrics,
        normalized,
        metadata: IndexMap::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Tsv,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(TableFormat::Tsv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(format!("unknown table format `{other}` (expected tsv or markdown)")),
        }
    }
}

/// Renders reports as a leaderboard, best primary score first. Equal scores
/// keep their input order. Missing values print as `-`.
pub fn report_table(reports: &[EvalReport], format: TableFormat) -> Result<String, MetricsError> {
    let Some(first) = reports.first() else {
        return Ok(String::new());
    };
    report_table_with(reports, &first.mode.columns(first.task), format)
}

/// [`report_table`] restricted to `columns`, in the given order. Rows are
/// still ranked by the mode's primary metric.
pub fn report_table_with(reports: &[EvalReport], columns: &[Metric], format: TableFormat) -> Result<String, MetricsError> {
    let Some(first) = reports.first() else {
        return Ok(String::new());
    };
    if reports.iter().any(|r| r.mode != first.mode || r.task != first.task) {
        return Err(MetricsError::MixedModes);
    }
    let primary = first.mode.primary();
    let mut order: Vec<&EvalReport> = reports.iter().collect();
    order.sort_by(|a, b| {
        let x = a.get(primary).unwrap_or(f64::NEG_INFINITY);
        let y = b.get(primary).unwrap_or(f64::NEG_INFINITY);
        y.total_cmp(&x)
    });
    let cell = |r: &EvalReport, m: Metric| r.get(m).map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    let mut out = String::new();
    match format {
        TableFormat::Tsv => {
            let header: Vec<&str> = std::iter::once("Run").chain(columns.iter().map(|m| m.label())).collect();
            out.push_str(&header.join("\t"));
            out.push('\n');
            for r in order {
                let row: Vec<String> = std::iter::once(r.run.clone())
                    .chain(columns.iter().map(|&m| cell(r, m)))
                    .collect();
                out.push_str(&row.join("\t"));
                out.push('\n');
            }
        }
        TableFormat::Markdown => {
            let header: Vec<&str> = std::iter::once("Run").chain(columns.iter().map(|m| m.label())).collect();
            out.push_str(&format!("| {} |\n", header.join(" | ")));
            let rule: Vec<&str> = std::iter::once("---").chain(columns.iter().map(|_| "---:")).collect();
            out.push_str(&format!("| {} |\n", rule.join(" | ")));
            for r in order {
                let row: Vec<String> = std::iter::once(r.run.clone())
                    .chain(columns.iter().map(|&m| cell(r, m)))
                    .collect();
                out.push_str(&format!("| {} |\n", row.join(" | ")));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::Category;

    fn binary_gold(labels: &[bool]) -> GoldStandard {
        let soft: IndexMap<String, SoftAssignment> = labels
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let v = if y { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
                (i.to_string(), SoftAssignment::new(TaskId::Task1, v).unwrap())
            })
            .collect();
        GoldStandard::from_run(&Run::soft("g", TaskId::Task1, soft), &HardeningRule::default())
    }

    fn hard_run(labels: &[bool]) -> IndexMap<String, HardAssignment> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &y)| (i.to_string(), HardAssignment::single(TaskId::Task1, if y { 0 } else { 1 })))
            .collect()
    }

    #[test]
    fn stats_examples() {
        let g = binary_gold(&[true, true, false, false]);
        let s = fit_category_stats(&g).unwrap();
        assert_eq!(s.p, vec![0.5, 0.5]);
        assert_eq!(s.ic, vec![1.0, 1.0]);
        let all_yes = fit_category_stats(&binary_gold(&[true; 3])).unwrap();
        assert_eq!(all_yes.ic[0], 0.0);
        // NO never appears: floor probability 1/(2*3)
        assert!((all_yes.p[1] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn task3_rare_category_ic() {
        let mut soft = IndexMap::new();
        for i in 0..8 {
            let mut v = vec![0.0; 6];
            if i == 0 {
                v[3] = 1.0;
            } else {
                v[0] = 1.0;
            }
            soft.insert(i.to_string(), SoftAssignment::new(TaskId::Task3, v).unwrap());
        }
        let g = GoldStandard::from_run(&Run::soft("g", TaskId::Task3, soft), &HardeningRule::default());
        let s = fit_category_stats(&g).unwrap();
        let obj = TaskId::Task3.index_of(Category::Objectification).unwrap();
        assert_eq!(s.ic[obj], 3.0);
    }

    #[test]
    fn icm_hard_hand_values() {
        let labels = [true, true, false, false];
        let g = binary_gold(&labels);
        let s = fit_category_stats(&g).unwrap();
        let cfg = MetricConfig::default();
        assert_eq!(icm_hard(&hard_run(&labels), &g, &s, &cfg).unwrap(), 1.0);
        let one_wrong = hard_run(&[false, true, false, false]);
        assert_eq!(icm_hard(&one_wrong, &g, &s, &cfg).unwrap(), 0.25);
    }

    #[test]
    fn icm_soft_disjoint_item() {
        let g = binary_gold(&[true, false]);
        let s = fit_category_stats(&g).unwrap();
        let mut pred = g.soft.clone();
        pred["0"] = SoftAssignment::new(TaskId::Task1, vec![0.0, 1.0]).unwrap();
        // item 0 scores -2, item 1 scores +1
        let v = icm_soft(&pred, &g, &s, &MetricConfig::default()).unwrap();
        assert_eq!(v, (-2.0 + 1.0) / 2.0);
    }

    #[test]
    fn cross_entropy_examples() {
        let a = SoftAssignment::new(TaskId::Task1, vec![5.0 / 6.0, 1.0 / 6.0]).unwrap();
        let g = GoldStandard::from_run(
            &Run::soft("g", TaskId::Task1, [("1".to_string(), a)].into_iter().collect()),
            &HardeningRule::default(),
        );
        let cfg = MetricConfig::default();
        let ce = cross_entropy(&g.soft, &g, &cfg).unwrap();
        let expected = -(5.0 / 6.0 * (5.0f64 / 6.0).ln() + 1.0 / 6.0 * (1.0f64 / 6.0).ln());
        assert!((ce - expected).abs() < 1e-12);
        assert!((ce - 0.4506).abs() < 5e-5);
        let uniform: IndexMap<_, _> = [("1".to_string(), SoftAssignment::uniform(TaskId::Task1))].into_iter().collect();
        assert!((cross_entropy(&uniform, &g, &cfg).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let zero: IndexMap<_, _> =
            [("1".to_string(), SoftAssignment::new(TaskId::Task1, vec![0.0, 1.0]).unwrap())].into_iter().collect();
        let clamped = cross_entropy(&zero, &g, &cfg).unwrap();
        assert!(clamped.is_finite() && clamped > 20.0);
    }

    #[test]
    fn cross_entropy_rejects_task3() {
        let soft: IndexMap<_, _> = [("1".to_string(), SoftAssignment::new(TaskId::Task3, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap())]
            .into_iter()
            .collect();
        let g = GoldStandard::from_run(&Run::soft("g", TaskId::Task3, soft.clone()), &HardeningRule::default());
        assert!(matches!(
            cross_entropy(&soft, &g, &MetricConfig::default()),
            Err(MetricsError::UnsupportedTask { .. })
        ));
    }

    #[test]
    fn f1_extremes() {
        let labels = [true, false, true, false, false];
        let g = binary_gold(&labels);
        let cfg = MetricConfig::default();
        assert_eq!(f1(&hard_run(&labels), &g, &cfg).unwrap(), 1.0);
        assert_eq!(f1(&hard_run(&[false; 5]), &g, &cfg).unwrap(), 0.0);
        let q = 2.0 / 5.0;
        assert!((f1(&hard_run(&[true; 5]), &g, &cfg).unwrap() - 2.0 * q / (1.0 + q)).abs() < 1e-12);
    }

    #[test]
    fn id_mismatch_is_reported() {
        let g = binary_gold(&[true, false]);
        let s = fit_category_stats(&g).unwrap();
        let mut pred = hard_run(&[true, false]);
        pred.shift_remove("1");
        pred.insert("zz".into(), HardAssignment::single(TaskId::Task1, 0));
        match icm_hard(&pred, &g, &s, &MetricConfig::default()) {
            Err(MetricsError::IdMismatch { missing, extra, .. }) => assert_eq!((missing, extra), (1, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn normalize_anchors() {
        assert_eq!(normalize(-3.0717, 3.1182, -3.0717).unwrap(), 0.0);
        assert_eq!(normalize(3.1182, 3.1182, -3.0717).unwrap(), 1.0);
        assert_eq!(normalize(10.0, 3.1182, -3.0717).unwrap(), 1.0);
        assert!(matches!(normalize(0.0, 1.0, 1.0), Err(MetricsError::DegenerateAnchors { .. })));
    }

    #[test]
    fn report_columns_and_order() {
        let g = binary_gold(&[true, true, false, false, false]);
        let cfg = MetricConfig::default();
        let gold_run = g.soft_run("gold");
        let minority = baseline(&g, BaselineKind::Minority, RunKind::Soft).unwrap();
        let majority = baseline(&g, BaselineKind::Majority, RunKind::Soft).unwrap();
        let reports: Vec<_> = [&minority, &gold_run, &majority]
            .iter()
            .map(|r| evaluate(r, &g, EvalMode::SoftSoft, &cfg).unwrap())
            .collect();
        assert_eq!(reports[1].normalized[&Metric::IcmSoftNorm], 1.0);
        assert_eq!(reports[0].normalized[&Metric::IcmSoftNorm], 0.0);
        let table = report_table(&reports, TableFormat::Tsv).unwrap();
        let lines: Vec<_> = table.lines().collect();
        assert_eq!(lines[0], "Run\tICM-Soft\tICM-Soft Norm\tCross Entropy");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("gold\t"));
        assert!(lines[3].starts_with("minority_class\t"));
    }

    #[test]
    fn soft_soft_rejects_hard_runs() {
        let g = binary_gold(&[true, false]);
        let r = g.hard_run("h");
        assert!(matches!(
            evaluate(&r, &g, EvalMode::SoftSoft, &MetricConfig::default()),
            Err(MetricsError::ModeMismatch { .. })
        ));
        let report = evaluate(&r, &g, EvalMode::HardSoft, &MetricConfig::default()).unwrap();
        assert_eq!(report.normalized[&Metric::IcmSoftNorm], 1.0);
    }

    #[test]
    fn mixed_modes_rejected() {
        let g = binary_gold(&[true, false]);
        let cfg = MetricConfig::default();
        let a = evaluate(&g.soft_run("a"), &g, EvalMode::SoftSoft, &cfg).unwrap();
        let b = evaluate(&g.soft_run("b"), &g, EvalMode::HardHard, &cfg).unwrap();
        assert!(matches!(report_table(&[a, b], TableFormat::Tsv), Err(MetricsError::MixedModes)));
    }
}
