//! Backward pass of a small network against central finite differences,
//! then a few Adam steps fitting a one-dimensional target.
//!
//! cargo run --release --example gradient_check

use genai_edge::nn::{adam_step, Activation, AdamState, Mlp};
use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), genai_edge::NnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut net = Mlp::init(&[3, 16, 16, 1], &[Activation::Relu, Activation::Tanh, Activation::Identity], &mut rng)?;
    let x = Array2::from_shape_fn((8, 3), |_| rng.random_range(-1.0..1.0));

    let (_, cache) = net.forward(x.view())?;
    let (grads, _) = net.backward(&cache, &Array2::ones((8, 1)))?;
    let h = 1e-5;
    let mut worst = 0.0f64;
    for (idx, g) in grads.layers[0].weights.indexed_iter() {
        let mut p = net.clone();
        p.layers[0].weights[idx] += h;
        let mut q = net.clone();
        q.layers[0].weights[idx] -= h;
        let numeric = (p.predict(x.view())?.sum() - q.predict(x.view())?.sum()) / (2.0 * h);
        worst = worst.max((g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-8));
    }
    println!("first-layer gradient: worst relative error {worst:.2e}");

    // fit y = sum(x) with a mean squared error
    let y = x.sum_axis(Axis(1)).insert_axis(Axis(1));
    let mut opt = AdamState::new(&net);
    for step in 0..=500 {
        let (out, cache) = net.forward(x.view())?;
        let diff = &out - &y;
        if step % 100 == 0 {
            println!("step {step:>3}: mse {:.6}", diff.mapv(|d| d * d).mean().unwrap_or(0.0));
        }
        let (g, _) = net.backward(&cache, &(diff * (2.0 / 8.0)))?;
        adam_step(&mut net, &g, &mut opt, 1e-2)?;
    }
    Ok(())
}
