//! Forward pass, multi-task loss and reverse-mode gradients over a
//! [`StateGraph`].

use thiserror::Error;

use super::features::{node_features, NodeFeatures};
use super::model::{Dense, Model, ModelConfig, Params, NUM_TASKS};
use super::real::Real;
use super::states::StateGraph;
use crate::aig::Aig;
use crate::oracle::NodeLabels;

/// Activations kept for the backward pass, one row per state.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    /// Per layer: concatenated [self; neighbour mean] inputs.
    pub xs: Vec<Vec<T>>,
    /// Layer outputs, `hs[0]` being the input features.
    pub hs: Vec<Vec<T>>,
    /// Shared head output after ReLU.
    pub head: Vec<T>,
    pub logits: Vec<Vec<T>>,
}

fn relu<T: Real>(v: &mut [T]) {
    for x in v {
        if !(*x > T::zero()) {
            *x = T::zero();
        }
    }
}

pub fn forward<T: Real>(params: &Params<T>, sg: &StateGraph) -> ForwardCache<T> {
    assert_eq!(params.layers.len(), sg.layers.len(), "layer count mismatch");
    let mut hs = Vec::with_capacity(sg.layers.len() + 1);
    hs.push(
        sg.inputs
            .iter()
            .flat_map(|r| r.iter().map(|&x| T::lit(x as f64)))
            .collect::<Vec<T>>(),
    );
    let mut xs = Vec::with_capacity(sg.layers.len());
    let mut dim = 3;
    for (layer, dense) in sg.layers.iter().zip(&params.layers) {
        let blocks = dense.inp / dim;
        assert!(
            dense.inp == blocks * dim && (2..=3).contains(&blocks),
            "layer input width mismatch"
        );
        let width = dense.inp;
        let prev = hs.last().unwrap();
        let rows = layer.len();
        let mut x = vec![T::zero(); rows * width];
        for s in 0..rows {
            let row = &mut x[s * width..(s + 1) * width];
            let own = layer.self_state[s] as usize;
            row[..dim].copy_from_slice(&prev[own * dim..(own + 1) * dim]);
            for g in 0..blocks - 1 {
                let nbrs = layer.group(s, g);
                if nbrs.is_empty() {
                    continue;
                }
                let agg = &mut row[(g + 1) * dim..(g + 2) * dim];
                for &u in nbrs {
                    let u = u as usize;
                    for (a, &p) in agg.iter_mut().zip(&prev[u * dim..(u + 1) * dim]) {
                        *a += p;
                    }
                }
                let scale = T::one() / T::lit(nbrs.len() as f64);
                for a in agg {
                    *a = *a * scale;
                }
            }
        }
        let mut h = dense.apply(&x, rows);
        relu(&mut h);
        xs.push(x);
        hs.push(h);
        dim = dense.out;
    }
    let rows = sg.layers.last().map_or(sg.inputs.len(), |l| l.len());
    let mut head = params.head.apply(hs.last().unwrap(), rows);
    relu(&mut head);
    let logits = params.tasks.iter().map(|t| t.apply(&head, rows)).collect();
    ForwardCache {
        xs,
        hs,
        head,
        logits,
    }
}

/// Row-wise softmax of a rows × classes matrix.
pub fn softmax_rows<T: Real>(logits: &[T], classes: usize) -> Vec<T> {
    let mut out = logits.to_vec();
    for row in out.chunks_mut(classes) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        for x in row.iter_mut() {
            *x = *x / sum;
        }
    }
    out
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Real>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Per-task class probabilities and decisions. Probabilities are stored
/// per state; `classes` holds one decision per node and is what repair
/// edits.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub task_classes: [usize; NUM_TASKS],
    pub node_state: Vec<u32>,
    pub state_probs: Vec<Vec<f32>>,
    pub classes: Vec<Vec<u8>>,
}

impl Predictions {
    pub fn num_nodes(&self) -> usize {
        self.node_state.len()
    }

    pub fn prob(&self, task: usize, node: usize) -> &[f32] {
        let c = self.task_classes[task];
        let s = self.node_state[node] as usize;
        &self.state_probs[task][s * c..(s + 1) * c]
    }

    pub fn class(&self, task: usize, node: usize) -> u8 {
        self.classes[task][node]
    }

    /// Hard labels in oracle-label form.
    pub fn to_labels(&self) -> NodeLabels {
        NodeLabels {
            boundary: self.classes[0].clone(),
            xor: self.classes[1].clone(),
            maj: self.classes[2].clone(),
        }
    }

    /// One-hot predictions reproducing `labels` exactly.
    pub fn from_labels(labels: &NodeLabels, task_classes: [usize; NUM_TASKS]) -> Predictions {
        let n = labels.len();
        let mut state_probs = Vec::with_capacity(NUM_TASKS);
        let mut classes = Vec::with_capacity(NUM_TASKS);
        // one state per node keeps probabilities exact
        for (t, &c) in task_classes.iter().enumerate() {
            let y = labels.task(t);
            let mut p = vec![0.0f32; n * c];
            for (i, &k) in y.iter().enumerate() {
                p[i * c + k as usize] = 1.0;
            }
            state_probs.push(p);
            classes.push(y.to_vec());
        }
        Predictions {
            task_classes,
            node_state: (0..n as u32).collect(),
            state_probs,
            classes,
        }
    }
}

/// Features as the model consumes them.
pub fn model_features(config: &ModelConfig, aig: &Aig) -> NodeFeatures {
    let f = node_features(aig);
    if config.function_features {
        f
    } else {
        f.without_function_columns()
    }
}

pub fn state_graph(model: &Model, aig: &Aig, features: &NodeFeatures) -> StateGraph {
    StateGraph::build(
        &[(aig, features)],
        model.config.num_layers,
        model.config.aggregation,
    )
}

/// Predictions from an already built state graph of a single design.
pub fn predict_states(model: &Model, sg: &StateGraph) -> Predictions {
    let cache = forward(&model.params, sg);
    let mut state_probs = Vec::with_capacity(NUM_TASKS);
    let mut classes = Vec::with_capacity(NUM_TASKS);
    for (t, logits) in cache.logits.iter().enumerate() {
        let c = model.config.task_classes[t];
        let p = softmax_rows(logits, c);
        let state_class: Vec<u8> = p.chunks(c).map(|r| argmax(r) as u8).collect();
        classes.push(
            sg.node_state
                .iter()
                .map(|&s| state_class[s as usize])
                .collect(),
        );
        state_probs.push(p);
    }
    Predictions {
        task_classes: model.config.task_classes,
        node_state: sg.node_state.clone(),
        state_probs,
        classes,
    }
}

pub fn model_forward(model: &Model, aig: &Aig) -> Predictions {
    let f = model_features(&model.config, aig);
    predict_states(model, &state_graph(model, aig, &f))
}

/// Final-layer embedding of every node, rows × hidden_dim.
pub fn sage_forward(model: &Model, aig: &Aig, features: &NodeFeatures) -> Vec<f32> {
    let sg = state_graph(model, aig, features);
    let cache = forward(&model.params, &sg);
    let h = cache.hs.last().unwrap();
    let d = model.config.hidden_dim;
    sg.node_state
        .iter()
        .flat_map(|&s| h[s as usize * d..(s as usize + 1) * d].iter().copied())
        .collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LossError {
    #[error("no unmasked nodes to average over")]
    Empty,
    #[error("predictions cover {pred} nodes but labels cover {labels}")]
    Shape { pred: usize, labels: usize },
}

/// Mean negative log-likelihood of one task over all nodes but the
/// constant.
pub fn task_nll(pred: &Predictions, labels: &NodeLabels, task: usize) -> Result<f64, LossError> {
    if pred.num_nodes() != labels.len() {
        return Err(LossError::Shape {
            pred: pred.num_nodes(),
            labels: labels.len(),
        });
    }
    if labels.len() < 2 {
        return Err(LossError::Empty);
    }
    let y = labels.task(task);
    let total: f64 = (1..labels.len())
        .map(|i| -(pred.prob(task, i)[y[i] as usize] as f64).ln())
        .sum();
    Ok(total / (labels.len() - 1) as f64)
}

/// α·NLL₁ + β·NLL₂ + γ·NLL₃.
pub fn multitask_loss(
    pred: &Predictions,
    labels: &NodeLabels,
    weights: [f64; NUM_TASKS],
) -> Result<f64, LossError> {
    let mut loss = 0.0;
    for (t, w) in weights.iter().enumerate() {
        loss += w * task_nll(pred, labels, t)?;
    }
    Ok(loss)
}

/// Label histograms per final state, the sufficient statistics of the loss.
#[derive(Clone, Debug)]
pub struct StateTargets {
    /// Per task: states × classes (weighted) counts.
    pub hist: Vec<Vec<f64>>,
    /// Per task normaliser: the (weighted) number of counted nodes.
    pub totals: [f64; NUM_TASKS],
    pub task_classes: [usize; NUM_TASKS],
}

impl StateTargets {
    /// Counts every node except each graph's constant. `class_weights`
    /// scales each node's contribution by its class.
    pub fn new(
        sg: &StateGraph,
        labels: &[&NodeLabels],
        task_classes: [usize; NUM_TASKS],
        class_weights: Option<&[Vec<f64>]>,
    ) -> Result<StateTargets, LossError> {
        assert_eq!(
            labels.len() + 1,
            sg.graph_offsets.len(),
            "one label set per graph"
        );
        let states = sg.layers.last().map_or(sg.inputs.len(), |l| l.len());
        let mut hist: Vec<Vec<f64>> = task_classes
            .iter()
            .map(|&c| vec![0.0; states * c])
            .collect();
        let mut totals = [0.0; NUM_TASKS];
        for (gi, l) in labels.iter().enumerate() {
            let base = sg.graph_offsets[gi];
            let n = sg.graph_offsets[gi + 1] - base;
            if l.len() != n {
                return Err(LossError::Shape {
                    pred: n,
                    labels: l.len(),
                });
            }
            for i in 1..n {
                let s = sg.node_state[base + i] as usize;
                for t in 0..NUM_TASKS {
                    let y = l.task(t)[i] as usize;
                    let w = class_weights.map_or(1.0, |cw| cw[t][y]);
                    hist[t][s * task_classes[t] + y] += w;
                    totals[t] += w;
                }
            }
        }
        if totals.iter().any(|&t| t <= 0.0) {
            return Err(LossError::Empty);
        }
        Ok(StateTargets {
            hist,
            totals,
            task_classes,
        })
    }
}

/// Inverse-frequency class weights `n / (classes * count)` per task;
/// classes absent from the labels get weight 0.
pub fn inverse_frequency_weights(
    labels: &[&NodeLabels],
    task_classes: [usize; NUM_TASKS],
) -> Vec<Vec<f64>> {
    (0..NUM_TASKS)
        .map(|t| {
            let c = task_classes[t];
            let mut counts = vec![0usize; c];
            for l in labels {
                for &y in &l.task(t)[1.min(l.len())..] {
                    counts[y as usize] += 1;
                }
            }
            let n: usize = counts.iter().sum();
            counts
                .iter()
                .map(|&k| {
                    if k == 0 {
                        0.0
                    } else {
                        n as f64 / (c * k) as f64
                    }
                })
                .collect()
        })
        .collect()
}

fn log_softmax_row(row: &[f64], out: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    for (o, x) in out.iter_mut().zip(row) {
        *o = x - lse;
    }
}

/// Loss of a forward pass against state targets, accumulated in f64.
pub fn state_loss<T: Real>(
    cache: &ForwardCache<T>,
    targets: &StateTargets,
    weights: [f64; NUM_TASKS],
) -> f64 {
    let mut loss = 0.0;
    for t in 0..NUM_TASKS {
        if weights[t] == 0.0 {
            continue;
        }
        let c = targets.task_classes[t];
        let mut row = vec![0.0; c];
        let mut lp = vec![0.0; c];
        let mut nll = 0.0;
        for (s, z) in cache.logits[t].chunks(c).enumerate() {
            let h = &targets.hist[t][s * c..(s + 1) * c];
            if h.iter().all(|&x| x == 0.0) {
                continue;
            }
            for (r, &v) in row.iter_mut().zip(z) {
                *r = v.as_f64();
            }
            log_softmax_row(&row, &mut lp);
            nll -= h.iter().zip(&lp).map(|(a, b)| a * b).sum::<f64>();
        }
        loss += weights[t] * nll / targets.totals[t];
    }
    loss
}

fn accumulate_dense<T: Real>(grad: &mut Dense<T>, delta: &[T], input: &[T], rows: usize) {
    // dW += Δᵀ X, db += column sums of Δ
    T::gemm(
        grad.out,
        rows,
        grad.inp,
        T::one(),
        delta,
        1,
        grad.out as isize,
        input,
        grad.inp as isize,
        1,
        T::one(),
        &mut grad.w,
        grad.inp as isize,
        1,
    );
    for r in delta.chunks(grad.out) {
        for (b, &d) in grad.b.iter_mut().zip(r) {
            *b += d;
        }
    }
}

fn input_grad<T: Real>(dense: &Dense<T>, delta: &[T], rows: usize) -> Vec<T> {
    let mut dx = vec![T::zero(); rows * dense.inp];
    T::gemm(
        rows,
        dense.out,
        dense.inp,
        T::one(),
        delta,
        dense.out as isize,
        1,
        &dense.w,
        dense.inp as isize,
        1,
        T::zero(),
        &mut dx,
        dense.inp as isize,
        1,
    );
    dx
}

/// Exact gradients of [`state_loss`] with respect to every parameter.
pub fn backward<T: Real>(
    params: &Params<T>,
    sg: &StateGraph,
    cache: &ForwardCache<T>,
    targets: &StateTargets,
    weights: [f64; NUM_TASKS],
) -> Params<T> {
    let mut grads = Params {
        layers: params
            .layers
            .iter()
            .map(|d| Dense::zeros(d.out, d.inp))
            .collect(),
        head: Dense::zeros(params.head.out, params.head.inp),
        tasks: params
            .tasks
            .iter()
            .map(|d| Dense::zeros(d.out, d.inp))
            .collect(),
    };
    let rows = sg.layers.last().map_or(sg.inputs.len(), |l| l.len());
    let head_dim = params.head.out;
    let mut d_head = vec![T::zero(); rows * head_dim];
    for t in 0..NUM_TASKS {
        if weights[t] == 0.0 {
            continue;
        }
        let c = targets.task_classes[t];
        let scale = weights[t] / targets.totals[t];
        let mut dz = vec![T::zero(); rows * c];
        let mut row = vec![0.0; c];
        let mut lp = vec![0.0; c];
        for s in 0..rows {
            let h = &targets.hist[t][s * c..(s + 1) * c];
            let count: f64 = h.iter().sum();
            if count == 0.0 {
                continue;
            }
            for (r, &v) in row.iter_mut().zip(&cache.logits[t][s * c..(s + 1) * c]) {
                *r = v.as_f64();
            }
            log_softmax_row(&row, &mut lp);
            for k in 0..c {
                dz[s * c + k] = T::lit(scale * (count * lp[k].exp() - h[k]));
            }
        }
        accumulate_dense(&mut grads.tasks[t], &dz, &cache.head, rows);
        let dh = input_grad(&params.tasks[t], &dz, rows);
        for (a, b) in d_head.iter_mut().zip(dh) {
            *a += b;
        }
    }
    for (d, &a) in d_head.iter_mut().zip(&cache.head) {
        if !(a > T::zero()) {
            *d = T::zero();
        }
    }
    let last_h = cache.hs.last().unwrap();
    accumulate_dense(&mut grads.head, &d_head, last_h, rows);
    let mut dh = input_grad(&params.head, &d_head, rows);

    for k in (0..sg.layers.len()).rev() {
        let layer = &sg.layers[k];
        let dense = &params.layers[k];
        let h = &cache.hs[k + 1];
        let mut delta = dh;
        for (d, &a) in delta.iter_mut().zip(h) {
            if !(a > T::zero()) {
                *d = T::zero();
            }
        }
        accumulate_dense(&mut grads.layers[k], &delta, &cache.xs[k], layer.len());
        if k == 0 {
            break;
        }
        let dx = input_grad(dense, &delta, layer.len());
        let dim = params.layers[k - 1].out;
        let width = dense.inp;
        let blocks = width / dim;
        let mut prev = vec![T::zero(); sg.num_states(k) * dim];
        for s in 0..layer.len() {
            let row = &dx[s * width..(s + 1) * width];
            let own = layer.self_state[s] as usize;
            for (p, &g) in prev[own * dim..(own + 1) * dim].iter_mut().zip(&row[..dim]) {
                *p += g;
            }
            for grp in 0..blocks - 1 {
                let nbrs = layer.group(s, grp);
                if nbrs.is_empty() {
                    continue;
                }
                let scale = T::one() / T::lit(nbrs.len() as f64);
                let block = &row[(grp + 1) * dim..(grp + 2) * dim];
                for &u in nbrs {
                    let u = u as usize;
                    for (p, &g) in prev[u * dim..(u + 1) * dim].iter_mut().zip(block) {
                        *p += g * scale;
                    }
                }
            }
        }
        dh = prev;
    }
    grads
}

/// Convenience: loss and gradients in one call.
pub fn loss_and_grad<T: Real>(
    params: &Params<T>,
    sg: &StateGraph,
    targets: &StateTargets,
    weights: [f64; NUM_TASKS],
) -> (f64, Params<T>) {
    let cache = forward(params, sg);
    let loss = state_loss(&cache, targets, weights);
    let grads = backward(params, sg, &cache, targets, weights);
    (loss, grads)
}
