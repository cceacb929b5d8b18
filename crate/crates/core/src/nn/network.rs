use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::NetworkConfig;
use crate::class::ClassId;
use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{
    conv2d_backward_cols, conv2d_forward_cols, dense_forward, maxpool2, maxpool2_backward, softmax,
    Tensor,
};

/// A trainable tensor and its gradient accumulator (same shape).
#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

impl<T: Scalar> Param<T> {
    fn new(value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape()).expect("value shape is valid");
        Self { value, grad }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer<T> {
    /// 3x3 same convolution followed by ReLU.
    Conv {
        kernels: Param<T>,
        bias: Param<T>,
    },
    MaxPool,
    /// Fully connected; ReLU on every layer except the classifier head.
    Dense {
        weights: Param<T>,
        bias: Param<T>,
        relu: bool,
    },
}

/// Per-layer values kept from a forward pass for backpropagation.
enum Saved<T> {
    Conv {
        cols: Vec<T>,
        in_shape: [usize; 3],
        out: Tensor<T>,
    },
    Pool {
        in_shape: Vec<usize>,
        argmax: Vec<usize>,
    },
    Dense {
        input: Tensor<T>,
        out: Tensor<T>,
    },
}

/// Activations recorded by [`Network::forward_trace`].
pub struct Trace<T> {
    saved: Vec<Saved<T>>,
    pub probs: Tensor<T>,
}

/// Ordered stack of conv / pool / dense layers ending in softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    config: NetworkConfig,
    layers: Vec<Layer<T>>,
}

fn he_tensor<T: Scalar>(shape: &[usize], fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor<T> {
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    Tensor::from_fn(shape, |_| T::of(normal.sample(rng))).expect("positive extents")
}

/// Builds the 13 conv + 3 dense micro-VGG16 from a validated config.
pub fn build_micro_vgg<T: Scalar>(config: &NetworkConfig) -> Result<Network<T>> {
    config.validate_vgg16()?;
    Network::new(config)
}

impl<T: Scalar> Network<T> {
    /// Builds any structurally valid layout (used for reduced test networks).
    /// He-normal weights drawn from `config.seed`, zero biases.
    pub fn new(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut layers = Vec::new();
        let mut channels = config.input[0];
        for block in &config.conv_blocks {
            for &width in block {
                let kernels = he_tensor(&[width, channels, 3, 3], channels * 9, &mut rng);
                let bias = Tensor::zeros(&[width])?;
                layers.push(Layer::Conv {
                    kernels: Param::new(kernels),
                    bias: Param::new(bias),
                });
                channels = width;
            }
            layers.push(Layer::MaxPool);
        }
        let mut features = config.flatten_features();
        for (i, &width) in config.dense.iter().enumerate() {
            let weights = he_tensor(&[width, features], features, &mut rng);
            layers.push(Layer::Dense {
                weights: Param::new(weights),
                bias: Param::new(Tensor::zeros(&[width])?),
                relu: i + 1 < config.dense.len(),
            });
            features = width;
        }
        Ok(Self {
            config: config.clone(),
            layers,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// Parameters in layer order (weights before bias).
    pub fn params(&self) -> impl Iterator<Item = &Param<T>> {
        self.layers.iter().flat_map(|l| match l {
            Layer::Conv { kernels, bias } => vec![kernels, bias],
            Layer::Dense { weights, bias, .. } => vec![weights, bias],
            Layer::MaxPool => vec![],
        })
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Param<T>> {
        self.layers.iter_mut().flat_map(|l| match l {
            Layer::Conv { kernels, bias } => vec![kernels, bias],
            Layer::Dense { weights, bias, .. } => vec![weights, bias],
            Layer::MaxPool => vec![],
        })
    }

    pub fn param_count(&self) -> usize {
        self.params().map(|p| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.grad.data_mut().iter_mut().for_each(|g| *g = T::zero());
        }
    }

    fn check_input(&self, image: &Tensor<T>) -> Result<()> {
        if image.shape() != self.config.input {
            return Err(shape_err!(
                "network expects input {:?}, got {:?}",
                self.config.input,
                image.shape()
            ));
        }
        Ok(())
    }

    /// Pre-softmax class scores.
    pub fn logits(&self, image: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(image)?;
        let mut x = image.clone();
        for layer in &self.layers {
            x = match layer {
                Layer::Conv { kernels, bias } => {
                    let (mut y, _) = conv2d_forward_cols(&x, &kernels.value, &bias.value)?;
                    relu_in_place(&mut y);
                    y
                }
                Layer::MaxPool => maxpool2(&x)?.0,
                Layer::Dense {
                    weights,
                    bias,
                    relu,
                } => {
                    let flat = x.clone().reshape(&[x.len()])?;
                    let mut y = dense_forward(&flat, &weights.value, &bias.value)?;
                    if *relu {
                        relu_in_place(&mut y);
                    }
                    y
                }
            };
        }
        Ok(x)
    }

    /// Class probability vector.
    pub fn forward(&self, image: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(softmax(&self.logits(image)?))
    }

    /// Forward pass that records what backpropagation needs.
    pub fn forward_trace(&self, image: &Tensor<T>) -> Result<Trace<T>> {
        self.check_input(image)?;
        let mut saved = Vec::with_capacity(self.layers.len());
        let mut x = image.clone();
        for layer in &self.layers {
            match layer {
                Layer::Conv { kernels, bias } => {
                    let in_shape = [x.shape()[0], x.shape()[1], x.shape()[2]];
                    let (mut y, cols) = conv2d_forward_cols(&x, &kernels.value, &bias.value)?;
                    relu_in_place(&mut y);
                    saved.push(Saved::Conv {
                        cols,
                        in_shape,
                        out: y.clone(),
                    });
                    x = y;
                }
                Layer::MaxPool => {
                    let (y, argmax) = maxpool2(&x)?;
                    saved.push(Saved::Pool {
                        in_shape: x.shape().to_vec(),
                        argmax,
                    });
                    x = y;
                }
                Layer::Dense {
                    weights,
                    bias,
                    relu,
                } => {
                    let n = x.len();
                    let input = x.reshape(&[n])?;
                    let mut y = dense_forward(&input, &weights.value, &bias.value)?;
                    if *relu {
                        relu_in_place(&mut y);
                    }
                    saved.push(Saved::Dense {
                        input,
                        out: y.clone(),
                    });
                    x = y;
                }
            }
        }
        Ok(Trace {
            probs: softmax(&x),
            saved,
        })
    }

    /// Backpropagates a gradient with respect to the logits, accumulating
    /// into every parameter's `grad` buffer.
    pub fn backward(&mut self, trace: Trace<T>, grad_logits: &Tensor<T>) -> Result<()> {
        if trace.saved.len() != self.layers.len() {
            return Err(shape_err!("trace does not belong to this network"));
        }
        let mut grad = grad_logits.clone();
        let n_layers = self.layers.len();
        for (i, (layer, saved)) in self.layers.iter_mut().zip(trace.saved).enumerate().rev() {
            // the input image needs no gradient
            let want_input = i > 0;
            grad = match (layer, saved) {
                (
                    Layer::Dense {
                        weights,
                        bias,
                        relu,
                    },
                    Saved::Dense { input, out },
                ) => {
                    if *relu {
                        mask_relu(&mut grad, &out);
                    }
                    for (gb, &g) in bias.grad.data_mut().iter_mut().zip(grad.data()) {
                        *gb += g;
                    }
                    let mut gin = vec![T::zero(); input.len()];
                    crate::tensor::dense_backward_into(
                        input.data(),
                        weights.value.data(),
                        grad.data(),
                        weights.grad.data_mut(),
                        want_input.then_some(gin.as_mut_slice()),
                    );
                    Tensor::from_vec(&[input.len()], gin)?
                }
                (Layer::MaxPool, Saved::Pool { in_shape, argmax }) => {
                    maxpool2_backward(&in_shape, &argmax, &grad)?
                }
                (
                    Layer::Conv { kernels, bias },
                    Saved::Conv {
                        cols,
                        in_shape,
                        out,
                    },
                ) => {
                    // gradients arriving from a dense layer are flat
                    let mut grad_out = grad.reshape(out.shape())?;
                    mask_relu(&mut grad_out, &out);
                    match conv2d_backward_cols(
                        &cols,
                        in_shape,
                        &kernels.value,
                        &grad_out,
                        kernels.grad.data_mut(),
                        bias.grad.data_mut(),
                        want_input,
                    )? {
                        Some(g) => g,
                        None => break,
                    }
                }
                _ => {
                    return Err(shape_err!(
                        "trace layer {i} of {n_layers} does not match network"
                    ))
                }
            };
        }
        Ok(())
    }

    /// Argmax class (ties to the smallest id), its probability, and the full
    /// probability vector for a `[3, 50, 50]` image with values in `[0, 1]`.
    pub fn predict(&self, image: &Tensor<T>) -> Result<Prediction<T>> {
        self.check_input(image)?;
        if let Some(v) = image
            .data()
            .iter()
            .find(|v| !(**v >= T::zero() && **v <= T::one()))
        {
            return Err(Error::Domain(format!("pixel value {v} outside [0, 1]")));
        }
        let probs = self.forward(image)?;
        let (best, conf) = argmax(probs.data());
        Ok(Prediction {
            class: best,
            confidence: conf,
            probs,
        })
    }
}

/// Index and value of the maximum; ties resolve to the smallest index.
pub fn argmax<T: Scalar>(values: &[T]) -> (usize, T) {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    (best, values[best])
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction<T> {
    /// Index into the class list; a [`ClassId`] for 8-class networks.
    pub class: usize,
    pub confidence: T,
    pub probs: Tensor<T>,
}

impl<T> Prediction<T> {
    pub fn class_id(&self) -> Result<ClassId> {
        ClassId::new(self.class)
    }
}

fn mask_relu<T: Scalar>(grad: &mut Tensor<T>, out: &Tensor<T>) {
    for (g, &y) in grad.data_mut().iter_mut().zip(out.data()) {
        if y <= T::zero() {
            *g = T::zero();
        }
    }
}

fn relu_in_place<T: Scalar>(t: &mut Tensor<T>) {
    for v in t.data_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}
