//! Multi-task GraphSAGE node classifier: features, model, exact
//! gradients, training and model files.

pub mod features;
pub mod io;
pub mod model;
pub mod net;
pub mod real;
pub mod states;
pub mod train;

pub use features::{node_features, NodeFeatures};
pub use io::{load_model, load_model_expecting, save_model, ModelIoError};
pub use model::{Dense, Model, ModelConfig, Params};
pub use net::{model_forward, multitask_loss, sage_forward, Predictions};
pub use states::{Aggregation, StateGraph};
pub use train::{train, TrainError, TrainGraph, TrainOutcome};
