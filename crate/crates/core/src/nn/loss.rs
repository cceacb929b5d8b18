use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const LOG_FLOOR: f64 = 1e-12;

/// Cross-entropy of a probability vector against a class index.
///
/// Returns the loss `-ln(p[label] + 1e-12)` and the gradient with respect to
/// the pre-softmax logits, `p - onehot(label)`.
pub fn cross_entropy<T: Scalar>(probs: &Tensor<T>, label: usize) -> Result<(T, Tensor<T>)> {
    let k = probs.len();
    if label >= k {
        return Err(Error::Domain(format!("label {label} outside 0..{k}")));
    }
    let loss = -(probs.data()[label] + T::of(LOG_FLOOR)).ln();
    let mut grad = probs.clone();
    grad.data_mut()[label] -= T::one();
    Ok((loss, grad))
}
