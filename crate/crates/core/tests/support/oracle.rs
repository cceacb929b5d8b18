//! Reference implementations used only by tests. They follow the textbook
//! definitions directly and share no code with the library.
#![allow(dead_code)]

use cucumis::nn::{cross_entropy, Network, NetworkConfig};
use cucumis::tensor::Tensor;
use rand::Rng;

/// Quadruple loop 3x3 convolution, stride 1, zero padding 1.
pub fn naive_conv(
    input: &[f64],
    [cin, h, w]: [usize; 3],
    kernels: &[f64],
    cout: usize,
    bias: &[f64],
) -> Vec<f64> {
    let mut out = vec![0.0; cout * h * w];
    for o in 0..cout {
        for y in 0..h {
            for x in 0..w {
                let mut acc = bias[o];
                for c in 0..cin {
                    for ky in 0..3 {
                        for kx in 0..3 {
                            let (iy, ix) =
                                (y as isize + ky as isize - 1, x as isize + kx as isize - 1);
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                continue;
                            }
                            let v = input[(c * h + iy as usize) * w + ix as usize];
                            acc += kernels[((o * cin + c) * 3 + ky) * 3 + kx] * v;
                        }
                    }
                }
                out[(o * h + y) * w + x] = acc;
            }
        }
    }
    out
}

pub fn random_tensor(rng: &mut impl Rng, shape: &[usize]) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0)).unwrap()
}

/// Central difference of `f` at `x` along every coordinate.
pub fn numeric_gradient(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Relative error, treating pairs where both sides are below `floor` as equal.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale <= floor {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Two conv layers (one block) and a dense head on 3x6x6 input.
pub fn reduced_config(seed: u64) -> NetworkConfig {
    NetworkConfig {
        input: [3, 6, 6],
        conv_blocks: vec![vec![4, 4]],
        dense: vec![5],
        classes: 5,
        seed,
    }
}

pub struct GradCheck {
    pub params: usize,
    pub max_rel_err: f64,
    pub worst: Option<(usize, usize, f64, f64)>,
}

/// Compares backprop against central differences of the loss for every
/// parameter of `net`.
pub fn network_gradient_check(
    net: &mut Network<f64>,
    image: &Tensor<f64>,
    label: usize,
    step: f64,
) -> GradCheck {
    let loss = |net: &Network<f64>| {
        let probs = net.forward(image).unwrap();
        cross_entropy(&probs, label).unwrap().0
    };
    net.zero_grad();
    let trace = net.forward_trace(image).unwrap();
    let (_, grad) = cross_entropy(&trace.probs, label).unwrap();
    net.backward(trace, &grad).unwrap();
    let analytic: Vec<Vec<f64>> = net.params().map(|p| p.grad.data().to_vec()).collect();

    let mut check = GradCheck {
        params: 0,
        max_rel_err: 0.0,
        worst: None,
    };
    for (pi, grads) in analytic.iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let original = net.params().nth(pi).unwrap().value.data()[j];
            let mut eval = |v: f64| {
                net.params_mut().nth(pi).unwrap().value.data_mut()[j] = v;
                loss(net)
            };
            let numeric = (eval(original + step) - eval(original - step)) / (2.0 * step);
            eval(original);
            let e = rel_err(a, numeric, 1e-8);
            check.params += 1;
            if e > check.max_rel_err {
                check.max_rel_err = e;
                check.worst = Some((pi, j, a, numeric));
            }
        }
    }
    check
}

/// Per-class figures recomputed from raw (truth, predicted) pairs.
pub struct BruteReport {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<usize>,
    pub accuracy: f64,
    pub micro: [f64; 3],
    pub weighted: [f64; 3],
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn brute_report(classes: usize, pairs: &[(usize, usize)]) -> BruteReport {
    let mut precision = Vec::new();
    let mut recall = Vec::new();
    let mut f1 = Vec::new();
    let mut support = Vec::new();
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    for k in 0..classes {
        let tp = pairs.iter().filter(|&&(t, p)| t == k && p == k).count();
        let fp = pairs.iter().filter(|&&(t, p)| t != k && p == k).count();
        let fneg = pairs.iter().filter(|&&(t, p)| t == k && p != k).count();
        tp_all += tp;
        fp_all += fp;
        fn_all += fneg;
        let (p, r) = (ratio(tp, tp + fp), ratio(tp, tp + fneg));
        precision.push(p);
        recall.push(r);
        f1.push(harmonic(p, r));
        support.push(tp + fneg);
    }
    let correct = pairs.iter().filter(|(t, p)| t == p).count();
    let total = pairs.len();
    let (mp, mr) = (
        ratio(tp_all, tp_all + fp_all),
        ratio(tp_all, tp_all + fn_all),
    );
    let weigh = |v: &[f64]| {
        v.iter()
            .zip(&support)
            .map(|(x, &s)| x * s as f64)
            .sum::<f64>()
            / total as f64
    };
    BruteReport {
        accuracy: ratio(correct, total),
        micro: [mp, mr, harmonic(mp, mr)],
        weighted: [weigh(&precision), weigh(&recall), weigh(&f1)],
        precision,
        recall,
        f1,
        support,
    }
}
