//! Datasets, learned extraction with repair, and evaluation.

pub mod dataset;
pub mod eval;
pub mod repair;

pub use dataset::{build_dataset, design_name, Dataset, DatasetError, Design, Split};
pub use eval::{
    ablate, adder_metrics, evaluate, task_metrics, Ablation, AdderMetrics, EvalReport, TaskMetrics,
};
pub use repair::{
    extract_from_predictions, extract_learned, lsb_region, repair_predictions, run_learned,
    LearnedExtraction, StageTimes,
};
