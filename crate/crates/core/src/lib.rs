//! Toolkit for learning-with-disagreement evaluation on the three sexism
//! detection tasks: gold derivation from annotator votes, run aggregation,
//! snapping predictions to annotator-feasible distributions, and scoring with
//! ICM, ICM-Soft, cross-entropy and F1.

pub mod adjust;
pub mod ensemble;
pub mod gold;
pub mod ingest;
pub mod metrics;
pub mod synth;
pub mod taxonomy;

use thiserror::Error;

pub use adjust::{adjust_run, enumerate_grid, AdjustError, AnnotatorCounts, FeasibleGrid, Snapper};
pub use ensemble::{harden, mean_ensemble, select_best_run, EnsembleError, Selection};
pub use gold::{baseline, derive_hard_gold, derive_soft_gold, BaselineKind, GoldError, GoldStandard, HardeningRule};
pub use ingest::{load_dataset, load_run, save_run, Dataset, IngestError, Run, RunKind};
pub use metrics::{evaluate, normalize, EvalMode, EvalReport, Metric, MetricConfig, MetricsError, TableFormat};
pub use taxonomy::{is_feasible, taxonomy_for, Category, HardAssignment, SoftAssignment, TaskId, Taxonomy};

/// Any error raised by the toolkit, with a stable machine-readable code.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Gold(#[from] GoldError),
    #[error(transparent)]
    Adjust(#[from] AdjustError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Taxonomy(#[from] taxonomy::TaxonomyError),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Ingest(e) => e.code(),
            Error::Gold(e) => e.code(),
            Error::Adjust(e) => e.code(),
            Error::Ensemble(e) => e.code(),
            Error::Metrics(e) => e.code(),
            Error::Taxonomy(_) => "invalid_taxonomy",
        }
    }
}
