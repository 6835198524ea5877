use thiserror::Error;

use super::model::{ConfigError, Model, ModelConfig, Params};
use super::net::{
    inverse_frequency_weights, loss_and_grad, model_features, LossError, StateTargets,
};
use super::states::StateGraph;
use crate::aig::Aig;
use crate::oracle::NodeLabels;

/// One labelled training design.
#[derive(Clone, Copy)]
pub struct TrainGraph<'a> {
    pub aig: &'a Aig,
    pub labels: &'a NodeLabels,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("training set is empty")]
    EmptyDataset,
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("training diverged at epoch {epoch}: loss {loss}, last finite loss {last_finite}")]
    Diverged {
        epoch: usize,
        loss: f64,
        last_finite: f64,
    },
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model,
    /// Loss of each epoch before its update.
    pub loss_trace: Vec<f64>,
}

struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    lr: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(lr: f64, size: usize) -> Adam {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            lr,
            t: 0,
            m: vec![0.0; size],
            v: vec![0.0; size],
        }
    }

    /// Updates f32 parameters from f64 gradients; arithmetic is f64 and the
    /// result is rounded once per step.
    fn step(&mut self, params: &mut Params<f32>, grads: &Params<f64>) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let mut i = 0;
        for (p, g) in params.tensors_mut().zip(grads.tensors()) {
            for (x, &dx) in
                p.w.iter_mut()
                    .chain(p.b.iter_mut())
                    .zip(g.w.iter().chain(&g.b))
            {
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * dx;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * dx * dx;
                let update = self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
                *x = (*x as f64 - update) as f32;
                i += 1;
            }
        }
    }
}

/// Full-batch Adam on the disjoint union of `graphs`, for `config.epochs`
/// epochs from the seeded initialisation. Single-threaded and
/// deterministic.
pub fn train(graphs: &[TrainGraph<'_>], config: ModelConfig) -> Result<TrainOutcome, TrainError> {
    let model = Model::new(config)?;
    train_from(graphs, model)
}

/// As [`train`], continuing from the given parameters.
pub fn train_from(graphs: &[TrainGraph<'_>], mut model: Model) -> Result<TrainOutcome, TrainError> {
    let config = model.config.clone();
    config.validate()?;
    if graphs.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let features: Vec<_> = graphs
        .iter()
        .map(|g| model_features(&config, g.aig))
        .collect();
    let inputs: Vec<_> = graphs
        .iter()
        .zip(&features)
        .map(|(g, f)| (g.aig, f))
        .collect();
    let sg = StateGraph::build(&inputs, config.num_layers, config.aggregation);
    let labels: Vec<&NodeLabels> = graphs.iter().map(|g| g.labels).collect();
    let class_weights = config
        .class_weighting
        .then(|| inverse_frequency_weights(&labels, config.task_classes));
    let targets = StateTargets::new(&sg, &labels, config.task_classes, class_weights.as_deref())?;

    let mut adam = Adam::new(config.learning_rate, model.params.num_params());
    let mut trace = Vec::with_capacity(config.epochs);
    let mut last_finite = f64::NAN;
    for epoch in 0..config.epochs {
        let p64: Params<f64> = model.params.cast();
        let (loss, grads) = loss_and_grad(&p64, &sg, &targets, config.loss_weights);
        if !loss.is_finite() || !grads.is_finite() {
            return Err(TrainError::Diverged {
                epoch,
                loss,
                last_finite,
            });
        }
        last_finite = loss;
        trace.push(loss);
        adam.step(&mut model.params, &grads);
        if !model.params.is_finite() {
            return Err(TrainError::Diverged {
                epoch,
                loss: f64::NAN,
                last_finite,
            });
        }
    }
    Ok(TrainOutcome {
        model,
        loss_trace: trace,
    })
}
