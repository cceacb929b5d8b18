pub mod augment;
pub mod class;
pub mod dataset;
pub mod error;
pub mod hyperspectral;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod scalar;
pub mod survey;
pub mod tensor;

pub use class::{ClassId, NUM_CLASSES};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor64 = tensor::Tensor<f64>;
pub type Tensor32 = tensor::Tensor<f32>;
pub type Network64 = nn::Network<f64>;
pub type Network32 = nn::Network<f32>;
