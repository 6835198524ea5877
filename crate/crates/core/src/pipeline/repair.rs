use std::time::Instant;

use crate::aig::{Aig, Fanouts, NodeId};
use crate::ml::net::{model_features, predict_states};
use crate::ml::StateGraph;
use crate::ml::{Model, Predictions};
use crate::oracle::{extract_adder_tree, labels_from, AdderTree, Classification, LocalClassifier};

const XOR_TASK: usize = 1;
const MAJ_TASK: usize = 2;

/// Nodes where missing flags are recovered exactly: the fan-in cones of the
/// two lowest outputs plus two levels of their consumers. Shallow cones
/// near the least significant bits are where the model is least reliable.
pub fn lsb_region(aig: &Aig, fanouts: &Fanouts) -> Vec<bool> {
    let mut region = vec![false; aig.num_ids()];
    let mut stack: Vec<NodeId> = aig.outputs().iter().take(2).map(|o| o.var()).collect();
    let mut frontier = Vec::new();
    while let Some(v) = stack.pop() {
        if v == 0 || region[v as usize] {
            continue;
        }
        region[v as usize] = true;
        frontier.push(v);
        if let Some(f) = aig.fanins(v) {
            stack.extend(f.iter().map(|l| l.var()));
        }
    }
    for _ in 0..2 {
        let mut next = Vec::new();
        for &v in &frontier {
            for &(c, _) in fanouts.get(v) {
                if !region[c as usize] {
                    region[c as usize] = true;
                    next.push(c);
                }
            }
        }
        frontier = next;
    }
    region
}

/// Verifies the model's XOR/MAJ decisions with local truth-table checks.
/// Predicted positives that fail the check are cleared; inside
/// [`lsb_region`] every node takes its verified flags. MAJ decisions are
/// then made consistent with the tree extracted from the verified flags:
/// a half-adder carry candidate stays set only if it is a chosen carry or
/// left unpaired outside the region. Boundary decisions are unchanged.
pub fn repair_predictions(aig: &Aig, pred: &Predictions) -> Predictions {
    extract_from_predictions(aig, pred.clone(), true).predictions
}

fn verified_classification(
    aig: &Aig,
    fanouts: &Fanouts,
    pred: &Predictions,
) -> (Classification, Vec<bool>) {
    assert_eq!(
        pred.num_nodes(),
        aig.num_ids(),
        "predictions do not match the graph"
    );
    let region = lsb_region(aig, fanouts);
    let mut local = LocalClassifier::new(aig, fanouts);
    let (px, pm) = (&pred.classes[XOR_TASK], &pred.classes[MAJ_TASK]);
    let cls = Classification::from_fn(aig.num_ids(), |id, out| {
        let i = id as usize;
        let (x, m) = (px[i] != 0, pm[i] != 0);
        if !aig.is_and(id) || !(x || m || region[i]) {
            return (false, false);
        }
        let c = local.check_into(id, m || region[i], out);
        if region[i] {
            (c.xor_root, c.maj_root)
        } else {
            (x && c.xor_root, m && c.maj_root)
        }
    });
    (cls, region)
}

fn repaired(
    aig: &Aig,
    pred: &Predictions,
    cls: &Classification,
    tree: &AdderTree,
    region: &[bool],
) -> Predictions {
    let labels = labels_from(aig, cls, tree);
    let mut out = pred.clone();
    out.classes[XOR_TASK] = labels.xor;
    out.classes[MAJ_TASK] = labels.maj;
    for &m in &tree.unpaired_maj_roots {
        if !region[m as usize] {
            out.classes[MAJ_TASK][m as usize] = 1;
        }
    }
    out
}

/// Unverified flags straight from the model, with structural supports.
fn predicted_classification(aig: &Aig, fanouts: &Fanouts, pred: &Predictions) -> Classification {
    assert_eq!(
        pred.num_nodes(),
        aig.num_ids(),
        "predictions do not match the graph"
    );
    let mut local = LocalClassifier::new(aig, fanouts);
    let (px, pm) = (&pred.classes[XOR_TASK], &pred.classes[MAJ_TASK]);
    Classification::from_fn(aig.num_ids(), |id, out| {
        let i = id as usize;
        let flags = (aig.is_and(id) && px[i] != 0, aig.is_and(id) && pm[i] != 0);
        if flags.0 || flags.1 {
            local.supports(id, out);
        }
        flags
    })
}

/// Wall-clock seconds of each stage of the learned flow.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StageTimes {
    pub features_s: f64,
    pub forward_s: f64,
    pub repair_s: f64,
    pub extract_s: f64,
}

impl StageTimes {
    pub fn total(&self) -> f64 {
        self.features_s + self.forward_s + self.repair_s + self.extract_s
    }
}

#[derive(Clone, Debug)]
pub struct LearnedExtraction {
    /// Model decisions, after repair if it was enabled.
    pub predictions: Predictions,
    pub tree: AdderTree,
    pub times: StageTimes,
}

/// Model inference, optional repair, then adder-tree extraction over the
/// predicted flags.
pub fn extract_learned(aig: &Aig, model: &Model, repair: bool) -> AdderTree {
    run_learned(aig, model, repair).tree
}

/// As [`extract_learned`], keeping the predictions and stage timings.
pub fn run_learned(aig: &Aig, model: &Model, repair: bool) -> LearnedExtraction {
    let mut times = StageTimes::default();
    let t = Instant::now();
    let features = model_features(&model.config, aig);
    let fanouts = aig.fanout_adjacency();
    times.features_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let sg = StateGraph::build_with(
        &[(aig, &features, Some(&fanouts))],
        model.config.num_layers,
        model.config.aggregation,
    );
    let pred = predict_states(model, &sg);
    times.forward_s = t.elapsed().as_secs_f64();
    finish_learned(aig, &fanouts, pred, repair, times)
}

/// Repair and extraction from given predictions.
pub fn extract_from_predictions(aig: &Aig, pred: Predictions, repair: bool) -> LearnedExtraction {
    let t = Instant::now();
    let fanouts = aig.fanout_adjacency();
    let times = StageTimes {
        features_s: t.elapsed().as_secs_f64(),
        ..StageTimes::default()
    };
    finish_learned(aig, &fanouts, pred, repair, times)
}

fn finish_learned(
    aig: &Aig,
    fanouts: &Fanouts,
    pred: Predictions,
    repair: bool,
    mut times: StageTimes,
) -> LearnedExtraction {
    let t = Instant::now();
    let (cls, region) = if repair {
        let (cls, region) = verified_classification(aig, fanouts, &pred);
        (cls, Some(region))
    } else {
        (predicted_classification(aig, fanouts, &pred), None)
    };
    times.repair_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let tree = extract_adder_tree(aig, &cls);
    let predictions = match region {
        Some(region) => repaired(aig, &pred, &cls, &tree, &region),
        None => pred,
    };
    times.extract_s = t.elapsed().as_secs_f64();
    LearnedExtraction {
        predictions,
        tree,
        times,
    }
}
