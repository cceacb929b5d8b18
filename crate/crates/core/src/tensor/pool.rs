use super::Tensor;
use crate::error::{shape_err, Result};
use crate::scalar::Scalar;

/// 2x2 max pooling with stride 2. A trailing odd row or column is dropped.
///
/// Returns the pooled tensor and, per output element, the flat index into
/// `input` of the selected maximum. Ties go to the smallest flat index.
pub fn maxpool2<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    input.expect_rank(3, "maxpool input")?;
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    if h < 2 || w < 2 {
        return Err(shape_err!("maxpool2 needs H, W >= 2, got {h}x{w}"));
    }
    let (oh, ow) = (h / 2, w / 2);
    let x = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut arg = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let base = ch * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let top = base + 2 * oy * w + 2 * ox;
                // window positions in ascending flat order
                let mut best = top;
                for idx in [top + 1, top + w, top + w + 1] {
                    if x[idx] > x[best] {
                        best = idx;
                    }
                }
                out.push(x[best]);
                arg.push(best);
            }
        }
    }
    Ok((Tensor::from_vec(&[c, oh, ow], out)?, arg))
}

/// Routes each pooled gradient back to the input position it was taken from.
pub fn maxpool2_backward<T: Scalar>(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    if argmax.len() != grad_out.len() {
        return Err(shape_err!(
            "{} argmax entries for {} gradients",
            argmax.len(),
            grad_out.len()
        ));
    }
    let mut grad = Tensor::zeros(input_shape)?;
    let buf = grad.data_mut();
    for (&i, &g) in argmax.iter().zip(grad_out.data()) {
        if i >= buf.len() {
            return Err(shape_err!(
                "argmax index {i} outside input of {} values",
                buf.len()
            ));
        }
        buf[i] += g;
    }
    Ok(grad)
}
