use super::Tensor;
use crate::error::{shape_err, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct DenseGrads<T> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

fn check<T: Scalar>(input: &Tensor<T>, weights: &Tensor<T>) -> Result<(usize, usize)> {
    weights.expect_rank(2, "dense weights")?;
    let (m, n) = (weights.shape()[0], weights.shape()[1]);
    if input.len() != n {
        return Err(shape_err!(
            "dense layer expects {n} inputs, got {}",
            input.len()
        ));
    }
    Ok((m, n))
}

/// `weights * input + bias` for a flattened input of length N.
pub fn dense_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (m, n) = check(input, weights)?;
    if bias.len() != m {
        return Err(shape_err!(
            "dense bias has {} entries for {m} outputs",
            bias.len()
        ));
    }
    let mut out = bias.data().to_vec();
    T::gemm(
        m,
        n,
        1,
        T::one(),
        weights.data(),
        (n as isize, 1),
        input.data(),
        (1, 1),
        T::one(),
        &mut out,
        (1, 1),
    );
    Tensor::from_vec(&[m], out)
}

pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<DenseGrads<T>> {
    let (m, n) = check(input, weights)?;
    if grad_out.len() != m {
        return Err(shape_err!(
            "dense grad_out has {} entries for {m} outputs",
            grad_out.len()
        ));
    }
    let mut gw = Tensor::zeros(&[m, n])?;
    let mut gx = Tensor::zeros(input.shape())?;
    dense_backward_into(
        input.data(),
        weights.data(),
        grad_out.data(),
        gw.data_mut(),
        Some(gx.data_mut()),
    );
    Ok(DenseGrads {
        input: gx,
        weights: gw,
        bias: grad_out.clone(),
    })
}

/// Accumulates the weight gradient (outer product) and optionally writes the
/// input gradient `W^T g`.
pub(crate) fn dense_backward_into<T: Scalar>(
    input: &[T],
    weights: &[T],
    grad_out: &[T],
    grad_w: &mut [T],
    grad_in: Option<&mut [T]>,
) {
    let (m, n) = (grad_out.len(), input.len());
    for (row, &g) in grad_w.chunks_exact_mut(n).zip(grad_out) {
        for (gw, &x) in row.iter_mut().zip(input) {
            *gw += g * x;
        }
    }
    if let Some(gx) = grad_in {
        T::gemm(
            n,
            m,
            1,
            T::one(),
            weights,
            (1, n as isize),
            grad_out,
            (1, 1),
            T::zero(),
            gx,
            (1, 1),
        );
    }
}
