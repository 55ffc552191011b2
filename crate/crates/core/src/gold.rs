//! Soft and hard gold standards derived from annotator votes, and the
//! constant baselines used as normalization anchors.

use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{self, Dataset, IngestError, Predictions, Run, RunKind, Vote};
use crate::taxonomy::{HardAssignment, SoftAssignment, TaskId, FEASIBILITY_TOLERANCE};

#[derive(Debug, Error)]
pub enum GoldError {
    #[error("gold standard has no items")]
    EmptyGold,
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

impl GoldError {
    pub fn code(&self) -> &'static str {
        match self {
            GoldError::EmptyGold => "empty_gold",
            GoldError::Ingest(e) => e.code(),
        }
    }
}

/// How a soft assignment is turned into a label set.
///
/// Single-label tasks always take the argmax (first category in canonical
/// order on ties). Task 3 keeps every category at or above `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardeningRule {
    pub threshold: f64,
}

impl Default for HardeningRule {
    fn default() -> Self {
        HardeningRule { threshold: 0.5 }
    }
}

impl HardeningRule {
    pub fn new(threshold: f64) -> Self {
        HardeningRule { threshold }
    }

    pub fn apply(&self, a: &SoftAssignment) -> HardAssignment {
        let task = a.task();
        let argmax = a.argmax();
        if !task.is_multilabel() {
            return HardAssignment::single(task, argmax);
        }
        let mut selected: Vec<usize> = a
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= self.threshold - FEASIBILITY_TOLERANCE)
            .map(|(i, _)| i)
            .collect();
        let no = task.no_index();
        if selected.is_empty() {
            selected.push(argmax);
        } else if selected.len() > 1 && selected.contains(&no) {
            if argmax == no {
                selected = vec![no];
            } else {
                selected.retain(|&i| i != no);
            }
        }
        HardAssignment::from_indices(task, selected).expect("threshold rule yields a valid label set")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldWarning {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldStandard {
    pub task: TaskId,
    pub soft: IndexMap<String, SoftAssignment>,
    pub hard: IndexMap<String, HardAssignment>,
    /// Votes counted per item once UNKNOWN abstentions are removed. Empty
    /// when the gold was loaded from a run file.
    pub n_eff: IndexMap<String, u32>,
    pub warnings: Vec<GoldWarning>,
}

impl GoldStandard {
    pub fn len(&self) -> usize {
        self.soft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.soft.is_empty()
    }

    /// Full gold (soft and hard) from annotator votes.
    pub fn from_dataset(ds: &Dataset, task: TaskId, rule: &HardeningRule) -> Self {
        let mut g = derive_soft_gold(ds, task);
        derive_hard_gold(&mut g, rule);
        g
    }

    /// Gold from a run file. A soft run is hardened with `rule`; a hard run
    /// gets its degenerate soft encoding.
    pub fn from_run(run: &Run, rule: &HardeningRule) -> Self {
        let mut g = GoldStandard {
            task: run.task,
            soft: IndexMap::new(),
            hard: IndexMap::new(),
            n_eff: IndexMap::new(),
            warnings: Vec::new(),
        };
        match &run.predictions {
            Predictions::Soft(items) => {
                g.soft = items.clone();
                derive_hard_gold(&mut g, rule);
            }
            Predictions::Hard(items) => {
                g.soft = items.iter().map(|(id, h)| (id.clone(), SoftAssignment::degenerate(h))).collect();
                g.hard = items.clone();
            }
        }
        g
    }

    pub fn soft_run(&self, name: &str) -> Run {
        Run::soft(name, self.task, self.soft.clone())
    }

    pub fn hard_run(&self, name: &str) -> Run {
        Run::hard(name, self.task, self.hard.clone())
    }

    pub fn warnings_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.warnings).expect("warnings serialize");
        text.push('\n');
        text
    }
}

/// Loads gold from either an annotated dataset or a run file.
pub fn load_gold(path: impl AsRef<Path>, task: TaskId, rule: &HardeningRule) -> Result<GoldStandard, GoldError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let looks_like_run = text.trim_start().starts_with('[')
        && serde_json::from_str::<serde_json::Value>(&text)
            .ok()
            .and_then(|v| v.as_array()?.first().cloned())
            .and_then(|first| first.as_object().map(|o| o.contains_key("id") || o.contains_key("kind")))
            .unwrap_or(false);
    let gold = if looks_like_run {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let run = ingest::parse_run(&text, task, &stem)?;
        GoldStandard::from_run(&run, rule)
    } else {
        let ds = ingest::parse_dataset(&text, &path.display().to_string())?;
        GoldStandard::from_dataset(&ds, task, rule)
    };
    if gold.is_empty() {
        return Err(GoldError::EmptyGold);
    }
    Ok(gold)
}

/// Vote counts per category (canonical order) and the effective vote count.
fn count_votes(task: TaskId, annotations: &ingest::Annotations) -> (Vec<u32>, u32) {
    let mut counts = vec![0u32; task.arity()];
    let mut n_eff = 0u32;
    let no = task.no_index();
    let tally = |vote: &Vote, counts: &mut Vec<u32>| match vote {
        Vote::Label(c) => counts[task.index_of(*c).expect("validated at load")] += 1,
        Vote::NoneVote => counts[no] += 1,
        Vote::Unknown => {}
    };
    match task {
        TaskId::Task1 => {
            for v in &annotations.labels_task1 {
                tally(v, &mut counts);
                n_eff += 1;
            }
        }
        TaskId::Task2 => {
            for v in &annotations.labels_task2 {
                if *v != Vote::Unknown {
                    n_eff += 1;
                }
                tally(v, &mut counts);
            }
        }
        TaskId::Task3 => {
            for list in &annotations.labels_task3 {
                if list.as_slice() == [Vote::Unknown] {
                    continue;
                }
                n_eff += 1;
                for v in list {
                    tally(v, &mut counts);
                }
            }
        }
    }
    (counts, n_eff)
}

/// Probability of each category = votes for it / votes cast, with "-" read as
/// NO and UNKNOWN dropped from both sides. Items with no usable votes are
/// skipped and reported in `warnings`.
pub fn derive_soft_gold(ds: &Dataset, task: TaskId) -> GoldStandard {
    let mut g = GoldStandard {
        task,
        soft: IndexMap::new(),
        hard: IndexMap::new(),
        n_eff: IndexMap::new(),
        warnings: Vec::new(),
    };
    for item in &ds.items {
        let Some(annotations) = &item.annotations else {
            g.warnings.push(GoldWarning {
                id: item.id_exist.clone(),
                reason: "item has no annotations".into(),
            });
            continue;
        };
        let (counts, n_eff) = count_votes(task, annotations);
        if n_eff == 0 {
            g.warnings.push(GoldWarning {
                id: item.id_exist.clone(),
                reason: "no valid votes (all UNKNOWN)".into(),
            });
            continue;
        }
        g.soft
            .insert(item.id_exist.clone(), SoftAssignment::from_counts(task, &counts, n_eff));
        g.n_eff.insert(item.id_exist.clone(), n_eff);
    }
    g
}

/// Fills the hard part of `g` from its soft part.
pub fn derive_hard_gold(g: &mut GoldStandard, rule: &HardeningRule) {
    g.hard = g.soft.iter().map(|(id, a)| (id.clone(), rule.apply(a))).collect();
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Gold,
    Majority,
    Minority,
}

impl BaselineKind {
    pub fn run_name(self) -> &'static str {
        match self {
            BaselineKind::Gold => "gold",
            BaselineKind::Majority => "majority_class",
            BaselineKind::Minority => "minority_class",
        }
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gold" => Ok(BaselineKind::Gold),
            "majority" => Ok(BaselineKind::Majority),
            "minority" => Ok(BaselineKind::Minority),
            other => Err(format!("unknown baseline `{other}` (expected gold, majority or minority)")),
        }
    }
}

/// Hard-gold label sets with their corpus frequency, most frequent first.
/// Equal frequencies keep canonical order of the label sets.
pub fn label_set_frequencies(g: &GoldStandard) -> Vec<(HardAssignment, usize)> {
    let mut freq: Vec<(HardAssignment, usize)> = Vec::new();
    for h in g.hard.values() {
        match freq.iter_mut().find(|(s, _)| s == h) {
            Some((_, n)) => *n += 1,
            None => freq.push((h.clone(), 1)),
        }
    }
    freq.sort_by(|(a, na), (b, nb)| nb.cmp(na).then_with(|| a.indices().cmp(b.indices())));
    freq
}

pub fn baseline(g: &GoldStandard, which: BaselineKind, kind: RunKind) -> Result<Run, GoldError> {
    if g.is_empty() {
        return Err(GoldError::EmptyGold);
    }
    let name = which.run_name();
    let constant = match which {
        BaselineKind::Gold => {
            return Ok(match kind {
                RunKind::Soft => g.soft_run(name),
                RunKind::Hard => g.hard_run(name),
            })
        }
        BaselineKind::Majority => label_set_frequencies(g).into_iter().next(),
        BaselineKind::Minority => {
            let freq = label_set_frequencies(g);
            let least = freq.last().map(|(_, n)| *n);
            freq.into_iter().find(|(_, n)| Some(*n) == least)
        }
    };
    let (label, _) = constant.ok_or(GoldError::EmptyGold)?;
    Ok(match kind {
        RunKind::Soft => {
            let a = SoftAssignment::degenerate(&label);
            Run::soft(name, g.task, g.soft.keys().map(|id| (id.clone(), a.clone())).collect())
        }
        RunKind::Hard => Run::hard(name, g.task, g.soft.keys().map(|id| (id.clone(), label.clone())).collect()),
    })
}
