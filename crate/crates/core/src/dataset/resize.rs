use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Bilinear resize of a `[C, H, W]` tensor using half-pixel centres, with
/// source coordinates clamped to the image border. Same-size resizes are the
/// identity.
pub fn resize_bilinear<T: Scalar>(
    img: &Tensor<T>,
    out_h: usize,
    out_w: usize,
) -> Result<Tensor<T>> {
    img.expect_rank(3, "resize input")?;
    let (c, h, w) = (img.shape()[0], img.shape()[1], img.shape()[2]);
    if (h, w) == (out_h, out_w) {
        return Ok(img.clone());
    }
    let axis = |out: usize, src: usize| -> Vec<(usize, usize, f64)> {
        let scale = src as f64 / out as f64;
        (0..out)
            .map(|o| {
                let s = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(src - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let ys = axis(out_h, h);
    let xs = axis(out_w, w);
    Tensor::from_fn(&[c, out_h, out_w], |i| {
        let ch = i / (out_h * out_w);
        let (y0, y1, fy) = ys[(i / out_w) % out_h];
        let (x0, x1, fx) = xs[i % out_w];
        let p = |y, x| img.at3(ch, y, x).as_f64();
        let top = p(y0, x0) * (1.0 - fx) + p(y0, x1) * fx;
        let bottom = p(y1, x0) * (1.0 - fx) + p(y1, x1) * fx;
        T::of(top * (1.0 - fy) + bottom * fy)
    })
}
