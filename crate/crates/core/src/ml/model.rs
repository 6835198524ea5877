use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::features::FEATURE_DIM;
use super::real::Real;
use super::states::Aggregation;

pub const NUM_TASKS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub head_dim: usize,
    pub task_classes: [usize; NUM_TASKS],
    /// Loss weights of the boundary, XOR and MAJ tasks. A zero weight
    /// leaves that head untrained.
    pub loss_weights: [f64; NUM_TASKS],
    pub aggregation: Aggregation,
    /// When false, the inversion-flag feature columns are zeroed.
    pub function_features: bool,
    /// Inverse-frequency class weights inside each task's NLL.
    pub class_weighting: bool,
    pub seed: u64,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::shallow()
    }
}

impl ModelConfig {
    pub fn shallow() -> ModelConfig {
        ModelConfig {
            num_layers: 4,
            hidden_dim: 32,
            head_dim: 32,
            task_classes: [4, 2, 2],
            loss_weights: [0.8, 1.0, 1.0],
            aggregation: Aggregation::Fanin,
            function_features: true,
            class_weighting: false,
            seed: 0,
            learning_rate: 1e-3,
            epochs: 400,
        }
    }

    pub fn deep() -> ModelConfig {
        ModelConfig {
            num_layers: 8,
            hidden_dim: 80,
            ..ModelConfig::shallow()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError(m.to_string()));
        if self.num_layers == 0 {
            return bad("num_layers must be at least 1");
        }
        if self.hidden_dim == 0 || self.head_dim == 0 {
            return bad("hidden_dim and head_dim must be positive");
        }
        if self.task_classes.iter().any(|&c| c < 2) {
            return bad("every task needs at least two classes");
        }
        if self.loss_weights.iter().any(|w| !w.is_finite() || *w < 0.0)
            || self.loss_weights.iter().all(|&w| w == 0.0)
        {
            return bad("loss weights must be non-negative, finite and not all zero");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }

    /// Number of concatenated blocks per layer input: self, fanin mean and,
    /// with fan-out aggregation, consumer mean.
    pub fn blocks(&self) -> usize {
        match self.aggregation {
            Aggregation::Fanin => 2,
            Aggregation::FaninFanout => 3,
        }
    }

    /// Embedding width entering each message-passing layer.
    pub fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            FEATURE_DIM
        } else {
            self.hidden_dim
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid model config: {0}")]
pub struct ConfigError(pub String);

/// Affine map `y = W x + b` with `W` stored row-major as out × inp.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub out: usize,
    pub inp: usize,
    pub w: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(out: usize, inp: usize) -> Dense<T> {
        Dense {
            out,
            inp,
            w: vec![T::zero(); out * inp],
            b: vec![T::zero(); out],
        }
    }

    /// Y (rows × out) = X (rows × inp) Wᵀ + b.
    pub fn apply(&self, x: &[T], rows: usize) -> Vec<T> {
        let mut y = Vec::with_capacity(rows * self.out);
        for _ in 0..rows {
            y.extend_from_slice(&self.b);
        }
        T::gemm(
            rows,
            self.inp,
            self.out,
            T::one(),
            x,
            self.inp as isize,
            1,
            &self.w,
            1,
            self.inp as isize,
            T::one(),
            &mut y,
            self.out as isize,
            1,
        );
        y
    }

    fn cast<U: Real>(&self) -> Dense<U> {
        Dense {
            out: self.out,
            inp: self.inp,
            w: self.w.iter().map(|x| U::lit(x.as_f64())).collect(),
            b: self.b.iter().map(|x| U::lit(x.as_f64())).collect(),
        }
    }
}

/// All trainable tensors, in the canonical order: message-passing layers,
/// shared head, then the boundary, XOR and MAJ heads.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<T> {
    pub layers: Vec<Dense<T>>,
    pub head: Dense<T>,
    pub tasks: Vec<Dense<T>>,
}

impl<T: Real> Params<T> {
    pub fn zeros(config: &ModelConfig) -> Params<T> {
        Params {
            layers: (0..config.num_layers)
                .map(|k| Dense::zeros(config.hidden_dim, config.blocks() * config.layer_input(k)))
                .collect(),
            head: Dense::zeros(config.head_dim, config.hidden_dim),
            tasks: config
                .task_classes
                .iter()
                .map(|&c| Dense::zeros(c, config.head_dim))
                .collect(),
        }
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Dense<T>> {
        self.layers
            .iter()
            .chain(std::iter::once(&self.head))
            .chain(&self.tasks)
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Dense<T>> {
        self.layers
            .iter_mut()
            .chain(std::iter::once(&mut self.head))
            .chain(&mut self.tasks)
    }

    /// Tensor names matching `tensors()` order, two per dense map.
    pub fn names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for k in 0..self.layers.len() {
            names.push(format!("layer{k}.weight"));
            names.push(format!("layer{k}.bias"));
        }
        names.push("head.weight".into());
        names.push("head.bias".into());
        for t in 0..self.tasks.len() {
            names.push(format!("task{t}.weight"));
            names.push(format!("task{t}.bias"));
        }
        names
    }

    pub fn cast<U: Real>(&self) -> Params<U> {
        Params {
            layers: self.layers.iter().map(Dense::cast).collect(),
            head: self.head.cast(),
            tasks: self.tasks.iter().map(Dense::cast).collect(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.tensors().map(|d| d.w.len() + d.b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .all(|d| d.w.iter().chain(&d.b).all(|x| x.is_finite()))
    }
}

/// Stored model: configuration plus 32-bit parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: Params<f32>,
}

impl Model {
    /// Xavier-uniform weights and zero biases. Weights are drawn from one
    /// xoshiro256++ stream seeded with `config.seed`, tensor by tensor in
    /// canonical order, each row-major; every value is
    /// `(2u - 1) * sqrt(6 / (fan_in + fan_out))` with `u = (x >> 11) * 2^-53`
    /// for the next 64-bit output `x`.
    pub fn new(config: ModelConfig) -> Result<Model, ConfigError> {
        use rand::{RngCore, SeedableRng};
        config.validate()?;
        let mut params = Params::<f32>::zeros(&config);
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(config.seed);
        for d in params.tensors_mut() {
            let limit = (6.0 / (d.inp + d.out) as f64).sqrt();
            for w in &mut d.w {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                *w = ((2.0 * u - 1.0) * limit) as f32;
            }
        }
        Ok(Model { config, params })
    }

    pub fn zeros(config: ModelConfig) -> Result<Model, ConfigError> {
        config.validate()?;
        let params = Params::zeros(&config);
        Ok(Model { config, params })
    }
}
