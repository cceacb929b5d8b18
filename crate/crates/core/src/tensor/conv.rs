//! 3x3, stride 1, zero-padding 1 convolution lowered to im2col + GEMM.

use super::Tensor;
use crate::error::{shape_err, Result};
use crate::scalar::Scalar;

/// Gradients of a convolution with respect to its three operands.
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
}

fn check_shapes<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
) -> Result<(usize, usize, usize, usize)> {
    input.expect_rank(3, "conv input")?;
    kernels.expect_rank(4, "conv kernels")?;
    let (cin, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let ks = kernels.shape();
    if ks[2] != 3 || ks[3] != 3 {
        return Err(shape_err!("kernels must be 3x3, got {ks:?}"));
    }
    if ks[1] != cin {
        return Err(shape_err!(
            "kernel expects {} input channels, input has {cin}",
            ks[1]
        ));
    }
    Ok((ks[0], cin, h, w))
}

/// Unfold every 3x3 neighbourhood into a `(cin*9) x (h*w)` column matrix.
fn im2col<T: Scalar>(input: &[T], cin: usize, h: usize, w: usize) -> Vec<T> {
    let hw = h * w;
    let mut cols = vec![T::zero(); cin * 9 * hw];
    for c in 0..cin {
        let plane = &input[c * hw..(c + 1) * hw];
        for dy in 0..3 {
            for dx in 0..3 {
                let row = &mut cols[((c * 9) + dy * 3 + dx) * hw..][..hw];
                // valid output range so that y + dy - 1 stays in [0, h)
                let y0 = 1usize.saturating_sub(dy);
                let y1 = (h + 1 - dy).min(h);
                let x0 = 1usize.saturating_sub(dx);
                let x1 = (w + 1 - dx).min(w);
                for y in y0..y1 {
                    let sy = y + dy - 1;
                    let src = &plane[sy * w + x0 + dx - 1..sy * w + x1 + dx - 1];
                    row[y * w + x0..y * w + x1].copy_from_slice(src);
                }
            }
        }
    }
    cols
}

/// Inverse scatter of `im2col`, accumulating overlapping contributions.
fn col2im<T: Scalar>(cols: &[T], cin: usize, h: usize, w: usize) -> Vec<T> {
    let hw = h * w;
    let mut out = vec![T::zero(); cin * hw];
    for c in 0..cin {
        let plane = &mut out[c * hw..(c + 1) * hw];
        for dy in 0..3 {
            for dx in 0..3 {
                let row = &cols[((c * 9) + dy * 3 + dx) * hw..][..hw];
                let y0 = 1usize.saturating_sub(dy);
                let y1 = (h + 1 - dy).min(h);
                let x0 = 1usize.saturating_sub(dx);
                let x1 = (w + 1 - dx).min(w);
                for y in y0..y1 {
                    let sy = y + dy - 1;
                    let dst = &mut plane[sy * w + x0 + dx - 1..sy * w + x1 + dx - 1];
                    for (d, &s) in dst.iter_mut().zip(&row[y * w + x0..y * w + x1]) {
                        *d += s;
                    }
                }
            }
        }
    }
    out
}

/// Same-size 3x3 convolution (cross-correlation) with zero padding.
///
/// `input` is `[C_in, H, W]`, `kernels` is `[C_out, C_in, 3, 3]`, `bias` is
/// `[C_out]`; the result is `[C_out, H, W]`.
pub fn conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    conv2d_forward_cols(input, kernels, bias).map(|(out, _)| out)
}

/// Forward pass that also hands back the im2col matrix for reuse in backward.
pub(crate) fn conv2d_forward_cols<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<(Tensor<T>, Vec<T>)> {
    let (cout, cin, h, w) = check_shapes(input, kernels)?;
    if bias.len() != cout {
        return Err(shape_err!(
            "bias has {} entries for {cout} kernels",
            bias.len()
        ));
    }
    let hw = h * w;
    let k = cin * 9;
    let cols = im2col(input.data(), cin, h, w);
    let mut out = Vec::with_capacity(cout * hw);
    for &b in bias.data() {
        out.extend(std::iter::repeat_n(b, hw));
    }
    T::gemm(
        cout,
        k,
        hw,
        T::one(),
        kernels.data(),
        (k as isize, 1),
        &cols,
        (hw as isize, 1),
        T::one(),
        &mut out,
        (hw as isize, 1),
    );
    Ok((Tensor::from_vec(&[cout, h, w], out)?, cols))
}

/// Gradients of `conv2d_forward` given the upstream gradient `grad_out`.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    let (cout, cin, h, w) = check_shapes(input, kernels)?;
    if grad_out.shape() != [cout, h, w] {
        return Err(shape_err!(
            "grad_out shape {:?} does not match conv output [{cout}, {h}, {w}]",
            grad_out.shape()
        ));
    }
    let cols = im2col(input.data(), cin, h, w);
    let mut grad_kernels = Tensor::zeros(kernels.shape())?;
    let mut grad_bias = Tensor::zeros(&[cout])?;
    let grad_input = conv2d_backward_cols(
        &cols,
        [cin, h, w],
        kernels,
        grad_out,
        grad_kernels.data_mut(),
        grad_bias.data_mut(),
        true,
    )?
    .expect("input gradient requested");
    Ok(ConvGrads {
        input: grad_input,
        kernels: grad_kernels,
        bias: grad_bias,
    })
}

/// Backward pass from a cached column matrix. Kernel and bias gradients are
/// accumulated into the given buffers; the input gradient is returned only
/// when `want_input` is set.
pub(crate) fn conv2d_backward_cols<T: Scalar>(
    cols: &[T],
    input_shape: [usize; 3],
    kernels: &Tensor<T>,
    grad_out: &Tensor<T>,
    grad_kernels: &mut [T],
    grad_bias: &mut [T],
    want_input: bool,
) -> Result<Option<Tensor<T>>> {
    let [cin, h, w] = input_shape;
    let hw = h * w;
    let k = cin * 9;
    let cout = kernels.shape()[0];
    if cols.len() != k * hw || grad_out.len() != cout * hw || grad_kernels.len() != cout * k {
        return Err(shape_err!("conv backward buffers inconsistent with shapes"));
    }
    let g = grad_out.data();
    for (o, gb) in grad_bias.iter_mut().enumerate() {
        *gb += g[o * hw..(o + 1) * hw].iter().copied().sum::<T>();
    }
    // dK += dY * cols^T
    T::gemm(
        cout,
        hw,
        k,
        T::one(),
        g,
        (hw as isize, 1),
        cols,
        (1, hw as isize),
        T::one(),
        grad_kernels,
        (k as isize, 1),
    );
    if !want_input {
        return Ok(None);
    }
    // dcols = K^T * dY
    let mut grad_cols = vec![T::zero(); k * hw];
    T::gemm(
        k,
        cout,
        hw,
        T::one(),
        kernels.data(),
        (1, k as isize),
        g,
        (hw as isize, 1),
        T::zero(),
        &mut grad_cols,
        (hw as isize, 1),
    );
    let grad_input = col2im(&grad_cols, cin, h, w);
    Ok(Some(Tensor::from_vec(&[cin, h, w], grad_input)?))
}
