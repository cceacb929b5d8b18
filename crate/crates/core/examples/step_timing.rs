//! Times forward and forward+backward passes of the default micro-VGG16.

use std::time::Instant;

use cucumis::nn::{build_micro_vgg, cross_entropy, NetworkConfig};
use cucumis::tensor::Tensor;
use cucumis::Scalar;

fn time<T: Scalar>(reps: usize) {
    let mut net = build_micro_vgg::<T>(&NetworkConfig::micro_vgg16(1)).unwrap();
    let img = Tensor::<T>::from_fn(&[3, 50, 50], |i| T::of((i % 97) as f64 / 97.0)).unwrap();
    let t = Instant::now();
    for _ in 0..reps {
        net.forward(&img).unwrap();
    }
    let fwd = t.elapsed().as_secs_f64() / reps as f64;
    let t = Instant::now();
    for _ in 0..reps {
        let trace = net.forward_trace(&img).unwrap();
        let (_, g) = cross_entropy(&trace.probs, 2).unwrap();
        net.backward(trace, &g).unwrap();
    }
    let step = t.elapsed().as_secs_f64() / reps as f64;
    println!(
        "{}: forward {:.2} ms, forward+backward {:.2} ms",
        T::NAME,
        fwd * 1e3,
        step * 1e3
    );
}

fn main() {
    time::<f64>(20);
    time::<f32>(20);
}
