use super::Tensor;
use crate::error::{shape_err, Result};
use crate::scalar::Scalar;

pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| v.max(T::zero()))
}

/// Passes `grad_out` through wherever the forward input was positive.
pub fn relu_backward<T: Scalar>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if input.shape() != grad_out.shape() {
        return Err(shape_err!(
            "relu grad shape {:?} vs input {:?}",
            grad_out.shape(),
            input.shape()
        ));
    }
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::from_vec(input.shape(), data)
}

/// Numerically stable softmax (max-subtracted) over a flat logit vector.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let max = logits
        .data()
        .iter()
        .copied()
        .fold(T::neg_infinity(), T::max);
    let exps = logits.map(|v| (v - max).exp());
    let total = exps.sum();
    exps.map(|e| e / total)
}
