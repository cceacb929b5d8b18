use super::network::Network;
use crate::scalar::Scalar;

/// Stochastic gradient descent with classical momentum:
/// `v <- momentum * v + g`, `p <- p - lr * v`.
#[derive(Clone, Debug)]
pub struct Sgd<T> {
    pub learning_rate: T,
    pub momentum: T,
    velocity: Vec<Vec<T>>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(learning_rate: T, momentum: T) -> Self {
        Self {
            learning_rate,
            momentum,
            velocity: Vec::new(),
        }
    }

    /// Applies one update using the accumulated gradients scaled by `grad_scale`
    /// (typically `1 / batch_len`).
    pub fn step(&mut self, network: &mut Network<T>, grad_scale: T) {
        if self.velocity.is_empty() {
            self.velocity = network
                .params()
                .map(|p| vec![T::zero(); p.value.len()])
                .collect();
        }
        for (param, vel) in network.params_mut().zip(&mut self.velocity) {
            let grads = param.grad.data();
            let values = param.value.data_mut();
            for ((p, v), &g) in values.iter_mut().zip(vel.iter_mut()).zip(grads) {
                *v = self.momentum * *v + g * grad_scale;
                *p -= self.learning_rate * *v;
            }
        }
    }
}
