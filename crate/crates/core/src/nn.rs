//! A small multilayer perceptron toolkit: batched forward and reverse-mode
//! passes, Adam, soft target updates, and a text checkpoint format.
//!
//! Batches are row-major: one sample per row.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative at pre-activation `z` with output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "relu" => Activation::Relu,
            "sigmoid" => Activation::Sigmoid,
            "identity" => Activation::Identity,
            "tanh" => Activation::Tanh,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out x in`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Values retained by a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Parameter gradients, shaped like the network they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    fn congruent(&self, net: &Mlp) -> bool {
        self.layers.len() == net.layers.len()
            && self.layers.iter().zip(&net.layers).all(|(g, l)| {
                g.weights.dim() == l.weights.dim() && g.bias.len() == l.bias.len()
            })
    }
}

impl Mlp {
    /// Uniform fan-based initialization; biases start at zero.
    pub fn init<R: Rng + ?Sized>(
        sizes: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self, NnError> {
        if sizes.len() < 2 {
            return Err(NnError::Config(format!(
                "need at least two layer sizes, got {}",
                sizes.len()
            )));
        }
        if activations.len() != sizes.len() - 1 {
            return Err(NnError::Config(format!(
                "{} layers need {} activations, got {}",
                sizes.len() - 1,
                sizes.len() - 1,
                activations.len()
            )));
        }
        if sizes.contains(&0) {
            return Err(NnError::Config("layer sizes must be positive".into()));
        }
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = init_limit(fan_in, fan_out);
                let weights =
                    Array2::from_shape_simple_fn((fan_out, fan_in), || rng.random_range(-limit..=limit));
                Layer { weights, bias: Array1::zeros(fan_out), activation }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_input(&self, input: &ArrayView2<f64>) -> Result<(), NnError> {
        if input.ncols() != self.input_dim() {
            return Err(NnError::shape("forward input", self.input_dim(), input.ncols()));
        }
        Ok(())
    }

    /// Forward pass that keeps what backward needs.
    pub fn forward(&self, input: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache), NnError> {
        self.check_input(&input)?;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
            post: Vec::with_capacity(self.layers.len()),
        };
        let mut x = input.to_owned();
        for layer in &self.layers {
            let z = x.dot(&layer.weights.t()) + &layer.bias;
            let a = z.mapv(|v| layer.activation.apply(v));
            cache.inputs.push(x);
            cache.pre.push(z);
            x = a.clone();
            cache.post.push(a);
        }
        Ok((x, cache))
    }

    /// Forward pass without a cache.
    pub fn predict(&self, input: ArrayView2<f64>) -> Result<Array2<f64>, NnError> {
        self.check_input(&input)?;
        let mut x = input.to_owned();
        for layer in &self.layers {
            let mut z = x.dot(&layer.weights.t()) + &layer.bias;
            z.mapv_inplace(|v| layer.activation.apply(v));
            x = z;
        }
        Ok(x)
    }

    pub fn predict_one(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        let view = ArrayView2::from_shape((1, input.len()), input)
            .map_err(|e| NnError::shape("predict_one", self.input_dim(), e))?;
        Ok(self.predict(view)?.into_raw_vec_and_offset().0)
    }

    fn check_cache(&self, cache: &ForwardCache, upstream: &Array2<f64>) -> Result<(), NnError> {
        if cache.inputs.len() != self.layers.len() {
            return Err(NnError::shape("backward cache layers", self.layers.len(), cache.inputs.len()));
        }
        for (layer, (x, z)) in self.layers.iter().zip(cache.inputs.iter().zip(&cache.pre)) {
            if x.ncols() != layer.inputs() || z.ncols() != layer.outputs() {
                return Err(NnError::shape(
                    "backward cache",
                    format!("{}->{}", layer.inputs(), layer.outputs()),
                    format!("{}->{}", x.ncols(), z.ncols()),
                ));
            }
        }
        let last = &cache.post[cache.post.len() - 1];
        if upstream.dim() != last.dim() {
            return Err(NnError::shape("upstream gradient", format!("{:?}", last.dim()), format!("{:?}", upstream.dim())));
        }
        Ok(())
    }

    fn backward_impl(
        &self,
        cache: &ForwardCache,
        upstream: &Array2<f64>,
        mut grads: Option<&mut Gradients>,
    ) -> Result<Array2<f64>, NnError> {
        self.check_cache(cache, upstream)?;
        let mut g = upstream.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let act = layer.activation;
            let mut dz = g;
            Zip::from(&mut dz)
                .and(&cache.pre[i])
                .and(&cache.post[i])
                .for_each(|d, &z, &a| *d *= act.derivative(z, a));
            if let Some(grads) = grads.as_deref_mut() {
                grads.layers[i].weights = dz.t().dot(&cache.inputs[i]);
                grads.layers[i].bias = dz.sum_axis(Axis(0));
            }
            g = dz.dot(&layer.weights);
        }
        Ok(g)
    }

    /// Reverse-mode pass: parameter gradients and the gradient with respect
    /// to the input batch.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        upstream: &Array2<f64>,
    ) -> Result<(Gradients, Array2<f64>), NnError> {
        let mut grads = Gradients::zeros_like(self);
        let input_grad = self.backward_impl(cache, upstream, Some(&mut grads))?;
        Ok((grads, input_grad))
    }

    /// Input gradient only; parameter gradients are not formed.
    pub fn input_gradient(&self, cache: &ForwardCache, upstream: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        self.backward_impl(cache, upstream, None)
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    fn congruent(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weights.dim() == b.weights.dim() && a.activation == b.activation
            })
    }

    /// Largest absolute parameter difference.
    pub fn max_abs_diff(&self, other: &Mlp) -> f64 {
        self.layers
            .iter()
            .zip(&other.layers)
            .flat_map(|(a, b)| {
                a.weights
                    .iter()
                    .zip(b.weights.iter())
                    .chain(a.bias.iter().zip(b.bias.iter()))
                    .map(|(x, y)| (x - y).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Serializes sizes, activations and row-major values as text.
    pub fn to_checkpoint(&self) -> String {
        let mut out = String::new();
        writeln!(out, "mlp-checkpoint 1").unwrap();
        writeln!(out, "layers {}", self.layers.len()).unwrap();
        for l in &self.layers {
            writeln!(out, "layer {} {} {}", l.inputs(), l.outputs(), l.activation.name()).unwrap();
            for row in l.weights.rows() {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", line.join(" ")).unwrap();
            }
            let line: Vec<String> = l.bias.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, NnError> {
        let bad = |msg: String| NnError::Checkpoint(msg);
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| bad(format!("unexpected end of file, expected {what}")))
        };
        let (_, header) = next("header")?;
        if header.trim() != "mlp-checkpoint 1" {
            return Err(bad(format!("unknown header {header:?}")));
        }
        let (no, count) = next("layer count")?;
        let count: usize = count
            .strip_prefix("layers ")
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| bad(format!("line {}: expected `layers <count>`", no + 1)))?;
        let parse_row = |no: usize, line: &str, len: usize| -> Result<Vec<f64>, NnError> {
            let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            let vals = vals.map_err(|e| bad(format!("line {}: {e}", no + 1)))?;
            if vals.len() != len {
                return Err(bad(format!("line {}: expected {len} values, found {}", no + 1, vals.len())));
            }
            Ok(vals)
        };
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let (no, head) = next("layer header")?;
            let parts: Vec<&str> = head.split_whitespace().collect();
            let (fan_in, fan_out, activation) = match parts.as_slice() {
                ["layer", i, o, a] => (
                    i.parse::<usize>().map_err(|e| bad(format!("line {}: {e}", no + 1)))?,
                    o.parse::<usize>().map_err(|e| bad(format!("line {}: {e}", no + 1)))?,
                    Activation::parse(a).ok_or_else(|| bad(format!("line {}: unknown activation {a}", no + 1)))?,
                ),
                _ => return Err(bad(format!("line {}: expected `layer <in> <out> <activation>`", no + 1))),
            };
            let mut values = Vec::with_capacity(fan_in * fan_out);
            for _ in 0..fan_out {
                let (no, line) = next("weight row")?;
                values.extend(parse_row(no, line, fan_in)?);
            }
            let (no, line) = next("bias row")?;
            let bias = parse_row(no, line, fan_out)?;
            layers.push(Layer {
                weights: Array2::from_shape_vec((fan_out, fan_in), values).expect("row count checked"),
                bias: Array1::from(bias),
                activation,
            });
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(bad("adjacent layer sizes do not chain".into()));
            }
        }
        if layers.is_empty() {
            return Err(bad("no layers".into()));
        }
        Ok(Self { layers })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_checkpoint())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NnError> {
        let text = std::fs::read_to_string(path).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        Self::from_checkpoint(&text)
    }
}

pub fn init_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Adam moment accumulators for one network.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub first: Gradients,
    pub second: Gradients,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Updates rejected because of non-finite gradients.
    pub skipped: u64,
}

impl AdamState {
    pub fn new(net: &Mlp) -> Self {
        Self {
            first: Gradients::zeros_like(net),
            second: Gradients::zeros_like(net),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            skipped: 0,
        }
    }
}

/// One bias-corrected Adam step. Non-finite gradients leave both the
/// parameters and the state untouched apart from the skip counter.
pub fn adam_step(params: &mut Mlp, grads: &Gradients, state: &mut AdamState, lr: f64) -> Result<(), NnError> {
    if !grads.congruent(params) || !state.first.congruent(params) {
        return Err(NnError::shape("adam_step", "gradients congruent with parameters", "mismatch"));
    }
    if !grads.is_finite() {
        state.skipped += 1;
        return Err(NnError::NonFinite("gradients"));
    }
    state.step += 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = 1.0 - b1.powi(state.step as i32);
    let c2 = 1.0 - b2.powi(state.step as i32);
    let update = |p: &mut f64, g: &f64, m: &mut f64, v: &mut f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };
    for (i, layer) in params.layers.iter_mut().enumerate() {
        let g = &grads.layers[i];
        let (m, v) = (&mut state.first.layers[i], &mut state.second.layers[i]);
        Zip::from(&mut layer.weights)
            .and(&g.weights)
            .and(&mut m.weights)
            .and(&mut v.weights)
            .for_each(update);
        Zip::from(&mut layer.bias)
            .and(&g.bias)
            .and(&mut m.bias)
            .and(&mut v.bias)
            .for_each(update);
    }
    Ok(())
}

/// Blends `online` into `target`: `target <- rate * online + (1 - rate) * target`.
pub fn soft_update(target: &mut Mlp, online: &Mlp, rate: f64) -> Result<(), NnError> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(NnError::Config(format!("soft update rate must lie in (0, 1], got {rate}")));
    }
    if !target.congruent(online) {
        return Err(NnError::shape("soft_update", "congruent networks", "mismatch"));
    }
    if rate == 1.0 {
        target.clone_from(online);
        return Ok(());
    }
    for (t, o) in target.layers.iter_mut().zip(&online.layers) {
        Zip::from(&mut t.weights)
            .and(&o.weights)
            .for_each(|t, &o| *t = rate * o + (1.0 - rate) * *t);
        Zip::from(&mut t.bias)
            .and(&o.bias)
            .for_each(|t, &o| *t = rate * o + (1.0 - rate) * *t);
    }
    Ok(())
}
