//! Micro-VGG16 classifier: layer stack, loss, optimizer, training loop and
//! checkpoints.

pub mod checkpoint;
mod config;
mod loss;
mod network;
mod optim;
mod train;

pub use config::NetworkConfig;
pub use loss::cross_entropy;
pub use network::{argmax, build_micro_vgg, Layer, Network, Param, Prediction, Trace};
pub use optim::Sgd;
pub use train::{evaluate, train, train_with, Evaluation, HyperParams, TrainRecord, Trained};
