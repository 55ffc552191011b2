//! Label spaces of the three sexism tasks and the assignment types scored
//! against them.
//!
//! Every assignment is stored densely, indexed by the position of a category
//! in its task's canonical order. That order drives tie-breaking and
//! serialization everywhere else in the crate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used when checking `k/n` equality and simplex sums.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("unknown task `{0}` (expected task1, task2 or task3)")]
    UnknownTask(String),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("category {category} is not part of {task}")]
    ForeignCategory { task: TaskId, category: Category },
    #[error("{0}")]
    InvalidAssignment(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskId {
    Task1,
    Task2,
    Task3,
}

impl TaskId {
    pub const ALL: [TaskId; 3] = [TaskId::Task1, TaskId::Task2, TaskId::Task3];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Task1 => "task1",
            TaskId::Task2 => "task2",
            TaskId::Task3 => "task3",
        }
    }

    pub fn categories(self) -> &'static [Category] {
        use Category::*;
        match self {
            TaskId::Task1 => &[Yes, No],
            TaskId::Task2 => &[No, Direct, Reported, Judgemental],
            TaskId::Task3 => &[
                No,
                IdeologicalInequality,
                StereotypingDominance,
                Objectification,
                SexualViolence,
                MisogynyNonSexualViolence,
            ],
        }
    }

    /// Number of categories in the task.
    pub fn arity(self) -> usize {
        self.categories().len()
    }

    pub fn is_multilabel(self) -> bool {
        matches!(self, TaskId::Task3)
    }

    /// Position of `category` in canonical order, if it belongs to this task.
    pub fn index_of(self, category: Category) -> Option<usize> {
        self.categories().iter().position(|&c| c == category)
    }

    /// Position of the NO category.
    pub fn no_index(self) -> usize {
        self.index_of(Category::No).expect("every task has NO")
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "task1" | "1" => Ok(TaskId::Task1),
            "task2" | "2" => Ok(TaskId::Task2),
            "task3" | "3" => Ok(TaskId::Task3),
            _ => Err(TaxonomyError::UnknownTask(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Yes,
    No,
    Direct,
    Reported,
    Judgemental,
    IdeologicalInequality,
    StereotypingDominance,
    Objectification,
    SexualViolence,
    MisogynyNonSexualViolence,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Yes => "YES",
            Category::No => "NO",
            Category::Direct => "DIRECT",
            Category::Reported => "REPORTED",
            Category::Judgemental => "JUDGEMENTAL",
            Category::IdeologicalInequality => "IDEOLOGICAL-INEQUALITY",
            Category::StereotypingDominance => "STEREOTYPING-DOMINANCE",
            Category::Objectification => "OBJECTIFICATION",
            Category::SexualViolence => "SEXUAL-VIOLENCE",
            Category::MisogynyNonSexualViolence => "MISOGYNY-NON-SEXUAL-VIOLENCE",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "YES" => Category::Yes,
            "NO" => Category::No,
            "DIRECT" => Category::Direct,
            "REPORTED" => Category::Reported,
            "JUDGEMENTAL" => Category::Judgemental,
            "IDEOLOGICAL-INEQUALITY" => Category::IdeologicalInequality,
            "STEREOTYPING-DOMINANCE" => Category::StereotypingDominance,
            "OBJECTIFICATION" => Category::Objectification,
            "SEXUAL-VIOLENCE" => Category::SexualViolence,
            "MISOGYNY-NON-SEXUAL-VIOLENCE" => Category::MisogynyNonSexualViolence,
            other => return Err(TaxonomyError::UnknownCategory(other.to_string())),
        })
    }
}

/// Node of the label hierarchy. YES and NO hang off the root; every
/// fine-grained sexism category hangs off YES.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parent {
    Root,
    Category(Category),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    pub task: TaskId,
    pub categories: Vec<Category>,
    pub multilabel: bool,
}

impl Taxonomy {
    pub fn parent(&self, category: Category) -> Option<Parent> {
        self.categories.contains(&category).then_some(match category {
            Category::Yes | Category::No => Parent::Root,
            _ => Parent::Category(Category::Yes),
        })
    }

    pub fn depth(&self, category: Category) -> Option<usize> {
        match self.parent(category)? {
            Parent::Root => Some(1),
            Parent::Category(_) => Some(2),
        }
    }
}

pub fn taxonomy_for(task: TaskId) -> Taxonomy {
    Taxonomy {
        task,
        categories: task.categories().to_vec(),
        multilabel: task.is_multilabel(),
    }
}

/// A probability per category, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment {
    task: TaskId,
    values: Vec<f64>,
}

impl SoftAssignment {
    /// Builds an assignment, checking range and (for single-label tasks) the
    /// simplex constraint at [`FEASIBILITY_TOLERANCE`].
    pub fn new(task: TaskId, values: Vec<f64>) -> Result<Self, TaxonomyError> {
        Self::with_tolerance(task, values, FEASIBILITY_TOLERANCE)
    }

    pub fn with_tolerance(task: TaskId, values: Vec<f64>, tolerance: f64) -> Result<Self, TaxonomyError> {
        if values.len() != task.arity() {
            return Err(TaxonomyError::InvalidAssignment(format!(
                "{task} expects {} values, got {}",
                task.arity(),
                values.len()
            )));
        }
        for (c, &v) in task.categories().iter().zip(&values) {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(TaxonomyError::InvalidAssignment(format!(
                    "probability of {c} is {v}, outside [0, 1]"
                )));
            }
        }
        if !task.is_multilabel() {
            let sum: f64 = values.iter().sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(TaxonomyError::InvalidAssignment(format!(
                    "probabilities sum to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { task, values })
    }

    /// Skips validation. Callers guarantee the invariants.
    pub(crate) fn new_unchecked(task: TaskId, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), task.arity());
        Self { task, values }
    }

    /// `count_i / n` for every category.
    pub fn from_counts(task: TaskId, counts: &[u32], n: u32) -> Self {
        let values = counts.iter().map(|&k| f64::from(k) / f64::from(n)).collect();
        Self::new_unchecked(task, values)
    }

    /// Probability 1 on every category in `hard`, 0 elsewhere.
    pub fn degenerate(hard: &HardAssignment) -> Self {
        let mut values = vec![0.0; hard.task.arity()];
        for &i in &hard.indices {
            values[i] = 1.0;
        }
        Self::new_unchecked(hard.task, values)
    }

    pub fn uniform(task: TaskId) -> Self {
        let m = task.arity();
        Self::new_unchecked(task, vec![1.0 / m as f64; m])
    }

    pub fn task(&self) -> TaskId {
        self.task
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, category: Category) -> Option<f64> {
        self.task.index_of(category).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Category, f64)> + '_ {
        self.task.categories().iter().copied().zip(self.values.iter().copied())
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Index of the largest value; ties go to the earliest category.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate().skip(1) {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }
}

/// A non-empty label set, kept sorted in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HardAssignment {
    task: TaskId,
    indices: Vec<usize>,
}

impl HardAssignment {
    pub fn new(task: TaskId, labels: &[Category]) -> Result<Self, TaxonomyError> {
        let mut indices = Vec::with_capacity(labels.len());
        for &c in labels {
            let i = task
                .index_of(c)
                .ok_or(TaxonomyError::ForeignCategory { task, category: c })?;
            indices.push(i);
        }
        Self::from_indices(task, indices)
    }

    pub fn from_indices(task: TaskId, mut indices: Vec<usize>) -> Result<Self, TaxonomyError> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(TaxonomyError::InvalidAssignment("empty label set".into()));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= task.arity()) {
            return Err(TaxonomyError::InvalidAssignment(format!("category index {i} out of range")));
        }
        if !task.is_multilabel() && indices.len() > 1 {
            return Err(TaxonomyError::InvalidAssignment(format!(
                "{task} is single-label, got {} labels",
                indices.len()
            )));
        }
        if indices.len() > 1 && indices.contains(&task.no_index()) {
            return Err(TaxonomyError::InvalidAssignment("NO cannot co-occur with other labels".into()));
        }
        Ok(Self { task, indices })
    }

    pub fn single(task: TaskId, index: usize) -> Self {
        assert!(index < task.arity());
        Self { task, indices: vec![index] }
    }

    pub fn task(&self) -> TaskId {
        self.task
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn labels(&self) -> impl Iterator<Item = Category> + '_ {
        let cats = self.task.categories();
        self.indices.iter().map(move |&i| cats[i])
    }
}

impl fmt::Display for HardAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.labels().map(Category::as_str).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// Counts `k_i` such that `values[i] == k_i / n` within tolerance, if any.
pub fn feasible_counts(a: &SoftAssignment, n: u32) -> Option<Vec<u32>> {
    if n == 0 {
        return None;
    }
    let nf = f64::from(n);
    let mut counts = Vec::with_capacity(a.values.len());
    for &v in &a.values {
        let k = (v * nf).round();
        if k < 0.0 || k > nf || (v - k / nf).abs() > FEASIBILITY_TOLERANCE {
            return None;
        }
        counts.push(k as u32);
    }
    if !a.task.is_multilabel() && counts.iter().sum::<u32>() != n {
        return None;
    }
    Some(counts)
}

/// True iff every value is a multiple of `1/n` (and, for single-label tasks,
/// the counts add up to `n`).
pub fn is_feasible(a: &SoftAssignment, n: u32, task: TaskId) -> bool {
    a.task == task && feasible_counts(a, n).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_shapes() {
        let t1 = taxonomy_for(TaskId::Task1);
        assert_eq!(t1.categories, vec![Category::Yes, Category::No]);
        assert!(!t1.multilabel);
        let t2 = taxonomy_for(TaskId::Task2);
        assert_eq!(t2.categories.len(), 4);
        assert!(t2.categories.contains(&Category::No));
        assert!(!t2.multilabel);
        let t3 = taxonomy_for(TaskId::Task3);
        assert_eq!(t3.categories.len(), 6);
        assert!(t3.multilabel);
    }

    #[test]
    fn hierarchy_depth_at_most_two() {
        for task in TaskId::ALL {
            let tax = taxonomy_for(task);
            for &c in &tax.categories {
                let d = tax.depth(c).unwrap();
                assert!(d <= 2);
                if c != Category::Yes && c != Category::No {
                    assert_eq!(tax.parent(c), Some(Parent::Category(Category::Yes)));
                }
            }
            assert_eq!(tax.parent(Category::No), Some(Parent::Root));
        }
    }

    #[test]
    fn category_names_round_trip() {
        for task in TaskId::ALL {
            for &c in task.categories() {
                assert_eq!(c.as_str().parse::<Category>().unwrap(), c);
            }
        }
        assert!("UNKNOWN".parse::<Category>().is_err());
        assert!("-".parse::<Category>().is_err());
    }

    #[test]
    fn feasibility_examples() {
        let a = SoftAssignment::new(TaskId::Task1, vec![5.0 / 6.0, 1.0 / 6.0]).unwrap();
        assert!(is_feasible(&a, 6, TaskId::Task1));
        let b = SoftAssignment::new(TaskId::Task1, vec![0.7, 0.3]).unwrap();
        assert!(!is_feasible(&b, 6, TaskId::Task1));
        let c = SoftAssignment::new(TaskId::Task3, vec![1.0 / 3.0; 6]).unwrap();
        assert!(is_feasible(&c, 6, TaskId::Task3));
    }

    #[test]
    fn feasibility_requires_count_sum_for_single_label() {
        // 0.5 + 0.5 is 3/6 + 3/6, fine; 1/6 + 1/6 + ... is not a distribution.
        let a = SoftAssignment::new_unchecked(TaskId::Task2, vec![1.0 / 6.0, 1.0 / 6.0, 0.0, 0.0]);
        assert!(!is_feasible(&a, 6, TaskId::Task2));
    }

    #[test]
    fn simplex_enforced_for_single_label() {
        assert!(SoftAssignment::new(TaskId::Task1, vec![0.6, 0.6]).is_err());
        assert!(SoftAssignment::new(TaskId::Task3, vec![0.6; 6]).is_ok());
        assert!(SoftAssignment::new(TaskId::Task3, vec![1.2, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn hard_assignment_rules() {
        use Category::*;
        assert!(HardAssignment::new(TaskId::Task1, &[Yes, No]).is_err());
        assert!(HardAssignment::new(TaskId::Task3, &[No, Objectification]).is_err());
        assert!(HardAssignment::new(TaskId::Task3, &[]).is_err());
        assert!(HardAssignment::new(TaskId::Task2, &[Objectification]).is_err());
        let h = HardAssignment::new(TaskId::Task3, &[SexualViolence, Objectification]).unwrap();
        assert_eq!(h.labels().collect::<Vec<_>>(), vec![Objectification, SexualViolence]);
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        let a = SoftAssignment::new(TaskId::Task1, vec![0.5, 0.5]).unwrap();
        assert_eq!(a.argmax(), 0);
    }
}
