use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Split};
use super::repair::{run_learned, StageTimes};
use crate::aig::Aig;
use crate::ml::model::NUM_TASKS;
use crate::ml::{train, Model, ModelConfig, TrainError};
use crate::netgen::{AdderKind, Family};
use crate::oracle::AdderTree;

/// Precision and recall use 1.0 when their denominator is zero (nothing
/// predicted, or nothing to find).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: u8,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub accuracy: f64,
    /// `confusion[truth][predicted]` over AND nodes.
    pub confusion: Vec<Vec<u64>>,
    pub classes: Vec<ClassMetrics>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Metrics over the AND nodes of `aig`.
pub fn task_metrics(aig: &Aig, truth: &[u8], predicted: &[u8], num_classes: usize) -> TaskMetrics {
    let mut confusion = vec![vec![0u64; num_classes]; num_classes];
    for id in aig.and_ids() {
        confusion[truth[id as usize] as usize][predicted[id as usize] as usize] += 1;
    }
    let total: u64 = confusion.iter().flatten().sum();
    let correct: u64 = (0..num_classes).map(|c| confusion[c][c]).sum();
    let classes = (0..num_classes)
        .map(|c| {
            let tp = confusion[c][c];
            let support: u64 = confusion[c].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                class: c as u8,
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    TaskMetrics {
        accuracy: ratio(correct, total),
        confusion,
        classes,
    }
}

/// Extracted adders against the oracle's, as (kind, input set) multisets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdderMetrics {
    pub oracle: usize,
    pub extracted: usize,
    pub matched: usize,
    pub precision: f64,
    pub recall: f64,
    pub exact: bool,
}

pub fn adder_metrics(extracted: &AdderTree, oracle: &AdderTree) -> AdderMetrics {
    let (a, b) = (extracted.signatures(), oracle.signatures());
    let (mut i, mut j, mut matched) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                matched += 1;
                i += 1;
                j += 1;
            }
        }
    }
    AdderMetrics {
        oracle: b.len(),
        extracted: a.len(),
        matched,
        precision: ratio(matched as u64, a.len() as u64),
        recall: ratio(matched as u64, b.len() as u64),
        exact: a == b,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub name: String,
    pub family: Family,
    pub bits: usize,
    pub nodes: usize,
    pub edges: usize,
    /// Raw model decisions.
    pub tasks: Vec<TaskMetrics>,
    /// Decisions after repair, when enabled.
    pub repaired_tasks: Option<Vec<TaskMetrics>>,
    pub adders: AdderMetrics,
    pub full_adders: usize,
    pub half_adders: usize,
    pub times: StageTimes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub repair: bool,
    pub designs: Vec<DesignReport>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per design and task: raw accuracy and the design's total
    /// learned-flow runtime.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("design,family,bits,nodes,task,accuracy,runtime_s\n");
        for d in &self.designs {
            for (t, m) in d.tasks.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    d.name,
                    d.family,
                    d.bits,
                    d.nodes,
                    t + 1,
                    m.accuracy,
                    d.times.total()
                )
                .unwrap();
            }
        }
        out
    }

    /// Accuracy of `task` averaged over designs.
    pub fn mean_accuracy(&self, task: usize) -> f64 {
        if self.designs.is_empty() {
            return f64::NAN;
        }
        self.designs
            .iter()
            .map(|d| d.tasks[task].accuracy)
            .sum::<f64>()
            / self.designs.len() as f64
    }
}

/// Runs the learned flow on every design of `split` and scores it against
/// the oracle labels and tree.
pub fn evaluate(model: &Model, dataset: &Dataset, split: Split, repair: bool) -> EvalReport {
    let classes = model.config.task_classes;
    let designs = dataset
        .split(split)
        .map(|d| {
            let run = run_learned(&d.aig, model, repair);
            let score = |classes_of: &dyn Fn(usize) -> Vec<u8>| -> Vec<TaskMetrics> {
                (0..NUM_TASKS)
                    .map(|t| task_metrics(&d.aig, d.labels.task(t), &classes_of(t), classes[t]))
                    .collect()
            };
            let tasks;
            let repaired_tasks;
            if repair {
                // raw decisions are recomputed only for scoring
                let raw = crate::ml::model_forward(model, &d.aig);
                tasks = score(&|t| raw.classes[t].clone());
                repaired_tasks = Some(score(&|t| run.predictions.classes[t].clone()));
            } else {
                tasks = score(&|t| run.predictions.classes[t].clone());
                repaired_tasks = None;
            }
            let stats = d.aig.stats();
            DesignReport {
                name: d.name.clone(),
                family: d.family,
                bits: d.bits,
                nodes: stats.num_nodes,
                edges: stats.num_edges,
                tasks,
                repaired_tasks,
                adders: adder_metrics(&run.tree, &d.oracle_tree),
                full_adders: run.tree.count(AdderKind::Full),
                half_adders: run.tree.count(AdderKind::Half),
                times: run.times,
            }
        })
        .collect();
    EvalReport { repair, designs }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// The configuration as given.
    Full,
    /// Only the given task's loss term is trained.
    SingleTask(usize),
    /// Inversion-flag feature columns zeroed.
    NoFunctionFeatures,
}

/// Trains on the training split with `config` modified by `mode` and
/// evaluates on the test split without repair.
pub fn ablate(
    dataset: &Dataset,
    config: &ModelConfig,
    mode: Ablation,
) -> Result<EvalReport, TrainError> {
    let mut config = config.clone();
    match mode {
        Ablation::Full => {}
        Ablation::SingleTask(t) => {
            assert!(t < NUM_TASKS, "task index {t} out of range");
            for (i, w) in config.loss_weights.iter_mut().enumerate() {
                if i != t {
                    *w = 0.0;
                }
            }
        }
        Ablation::NoFunctionFeatures => config.function_features = false,
    }
    let model = train(&dataset.training_graphs(), config)?.model;
    Ok(evaluate(&model, dataset, Split::Test, false))
}
