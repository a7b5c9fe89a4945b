//! A small dense-network core: affine layers with relu/identity activations,
//! hand-written backprop and Adam. Everything is `f64`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
}

/// `y = act(W x + b)` with `W` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weight: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let mut layer = Self::zeros(inputs, outputs, activation);
        for w in &mut layer.weight {
            *w = rng.random_range(-limit..limit);
        }
        layer
    }

    pub fn from_parts(weight: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        let outputs = weight.len();
        let inputs = weight.first().map_or(0, Vec::len);
        if outputs == 0 || inputs == 0 || bias.len() != outputs || weight.iter().any(|r| r.len() != inputs) {
            return Err(Error::Shape("ragged or empty layer weights".into()));
        }
        Ok(DenseLayer {
            inputs,
            outputs,
            weight: weight.concat(),
            bias,
            activation,
        })
    }

    fn check(&self) -> Result<()> {
        if self.weight.len() != self.inputs * self.outputs || self.bias.len() != self.outputs {
            return Err(Error::Shape(format!(
                "layer {}x{} carries {} weights and {} biases",
                self.outputs,
                self.inputs,
                self.weight.len(),
                self.bias.len()
            )));
        }
        if self.weight.iter().chain(&self.bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("layer parameter".into()));
        }
        Ok(())
    }

    fn pre_activation(&self, input: &[f64]) -> Vec<f64> {
        self.weight
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

/// Per-layer inputs and pre-activations recorded by [`Mlp::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        let net = Mlp { layers };
        net.validate()?;
        Ok(net)
    }

    /// Hidden layers use `hidden`, the output layer is linear.
    pub fn glorot<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an mlp needs at least input and output sizes");
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last { Activation::Identity } else { hidden };
                DenseLayer::glorot(w[0], w[1], act, rng)
            })
            .collect();
        Mlp { layers }
    }

    pub fn zeros(sizes: &[usize], hidden: Activation) -> Self {
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last { Activation::Identity } else { hidden };
                DenseLayer::zeros(w[0], w[1], act)
            })
            .collect();
        Mlp { layers }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Shape("mlp has no layers".into()));
        }
        for l in &self.layers {
            l.check()?;
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Shape(format!(
                    "layer {i} emits {} values, layer {} expects {}",
                    pair[0].outputs,
                    i + 1,
                    pair[1].inputs
                )));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "mlp expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(input)?;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        let mut x = input.to_vec();
        for layer in &self.layers {
            let pre = layer.pre_activation(&x);
            let out = activate(layer.activation, &pre);
            cache.inputs.push(std::mem::replace(&mut x, out));
            cache.pre.push(pre);
        }
        Ok((x, cache))
    }

    /// Forward pass without recording a cache.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        for layer in &self.layers {
            x = activate(layer.activation, &layer.pre_activation(&x));
        }
        Ok(x)
    }

    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> Result<(Vec<f64>, GradientTape)> {
        let mut tape = GradientTape::zeros_like(self);
        let input_grad = self.backward_into(cache, output_grad, &mut tape)?;
        Ok((input_grad, tape))
    }

    /// Accumulates parameter gradients into `tape` and returns the gradient
    /// with respect to the network input.
    pub fn backward_into(&self, cache: &ForwardCache, output_grad: &[f64], tape: &mut GradientTape) -> Result<Vec<f64>> {
        if cache.pre.len() != self.layers.len() || output_grad.len() != self.output_dim() {
            return Err(Error::Shape(format!(
                "backward got {} output gradients for {} outputs",
                output_grad.len(),
                self.output_dim()
            )));
        }
        if tape.layers.len() != self.layers.len() {
            return Err(Error::Shape("gradient tape does not match network".into()));
        }
        let mut grad = output_grad.to_vec();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            if layer.activation == Activation::Relu {
                for (g, &p) in grad.iter_mut().zip(&cache.pre[k]) {
                    if p <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            let input = &cache.inputs[k];
            let lg = &mut tape.layers[k];
            let mut input_grad = vec![0.0; layer.inputs];
            for (o, &g) in grad.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                lg.bias[o] += g;
                let row = o * layer.inputs;
                let wrow = &layer.weight[row..row + layer.inputs];
                let grow = &mut lg.weight[row..row + layer.inputs];
                for i in 0..layer.inputs {
                    grow[i] += g * input[i];
                    input_grad[i] += g * wrow[i];
                }
            }
            grad = input_grad;
        }
        Ok(grad)
    }

    /// All parameters in a fixed order: per layer, weights then biases.
    pub fn params_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            for p in l.weight.iter_mut().chain(l.bias.iter_mut()) {
                *p = *it.next().unwrap();
            }
        }
        Ok(())
    }
}

fn activate(act: Activation, pre: &[f64]) -> Vec<f64> {
    match act {
        Activation::Identity => pre.to_vec(),
        Activation::Relu => pre.iter().map(|&v| v.max(0.0)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradient accumulator shaped like an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTape {
    pub layers: Vec<LayerGrad>,
}

impl GradientTape {
    pub fn zeros_like(net: &Mlp) -> Self {
        GradientTape {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weight: vec![0.0; l.weight.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn zero(&mut self) {
        for l in &mut self.layers {
            l.weight.fill(0.0);
            l.bias.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weight.iter_mut().chain(l.bias.iter_mut()).for_each(|g| *g *= factor);
        }
    }

    /// Same ordering as [`Mlp::params_flat`].
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(&l.bias).copied())
            .collect()
    }
}

/// Numerically safe `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Derivative of [`softplus`], the logistic function.
pub fn softplus_grad(x: f64) -> f64 {
    logistic(x)
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn softplus_inverse(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: GradientTape,
    v: GradientTape,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            m: GradientTape::zeros_like(net),
            v: GradientTape::zeros_like(net),
        }
    }
}

/// One bias-corrected Adam update of `net` in place.
pub fn adam_step(net: &mut Mlp, tape: &GradientTape, state: &mut AdamState) -> Result<()> {
    if tape.layers.len() != net.layers.len() || state.m.layers.len() != net.layers.len() {
        return Err(Error::Shape("adam: tape/state do not match network".into()));
    }
    for (k, lg) in tape.layers.iter().enumerate() {
        if lg.weight.len() != net.layers[k].weight.len() || lg.bias.len() != net.layers[k].bias.len() {
            return Err(Error::Shape(format!("adam: layer {k} gradient shape mismatch")));
        }
        if lg.weight.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of layer {k} weight")));
        }
        if lg.bias.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of layer {k} bias")));
        }
    }

    state.step += 1;
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);

    let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
        for i in 0..p.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    };
    for (k, layer) in net.layers.iter_mut().enumerate() {
        let g = &tape.layers[k];
        let (m, v) = (&mut state.m.layers[k], &mut state.v.layers[k]);
        update(&mut layer.weight, &g.weight, &mut m.weight, &mut v.weight);
        update(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(w: f64, b: f64, act: Activation) -> Mlp {
        Mlp::new(vec![DenseLayer::from_parts(vec![vec![w]], vec![b], act).unwrap()]).unwrap()
    }

    #[test]
    fn affine_and_relu_forward() {
        assert_eq!(scalar(2.0, 1.0, Activation::Identity).predict(&[3.0]).unwrap(), vec![7.0]);
        assert_eq!(scalar(1.0, -2.0, Activation::Relu).predict(&[1.0]).unwrap(), vec![0.0]);
        let id = DenseLayer::from_parts(vec![vec![1.0]], vec![0.0], Activation::Identity).unwrap();
        let net = Mlp::new(vec![id.clone(), id]).unwrap();
        assert_eq!(net.predict(&[-4.25]).unwrap(), vec![-4.25]);
    }

    #[test]
    fn shape_errors() {
        let net = scalar(1.0, 0.0, Activation::Identity);
        assert!(net.forward(&[1.0, 2.0]).is_err());
        let (_, cache) = net.forward(&[1.0]).unwrap();
        assert!(net.backward(&cache, &[1.0, 1.0]).is_err());
        let bad = Mlp::new(vec![
            DenseLayer::zeros(2, 3, Activation::Relu),
            DenseLayer::zeros(2, 1, Activation::Identity),
        ]);
        assert!(bad.is_err());
    }

    #[test]
    fn linear_backward() {
        let net = scalar(2.0, 1.0, Activation::Identity);
        let (_, cache) = net.forward(&[3.0]).unwrap();
        let (gin, tape) = net.backward(&cache, &[1.0]).unwrap();
        assert_eq!(tape.layers[0].weight, vec![3.0]);
        assert_eq!(tape.layers[0].bias, vec![1.0]);
        assert_eq!(gin, vec![2.0]);
    }

    #[test]
    fn relu_blocks_gradient_when_inactive() {
        let net = scalar(1.0, -2.0, Activation::Relu);
        let (_, cache) = net.forward(&[1.0]).unwrap();
        let (gin, tape) = net.backward(&cache, &[1.0]).unwrap();
        assert_eq!(gin, vec![0.0]);
        assert_eq!(tape.flat(), vec![0.0, 0.0]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let net = Mlp::glorot(&[3, 5, 2], Activation::Relu, &mut rng);
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let objective = |n: &Mlp, x: &[f64]| -> f64 {
                n.predict(x).unwrap().iter().zip(&w).map(|(a, b)| a * b).sum()
            };
            let (_, cache) = net.forward(&x).unwrap();
            let (gin, tape) = net.backward(&cache, &w).unwrap();
            let analytic = tape.flat();
            let params = net.params_flat();
            let h = 1e-5;
            for i in 0..params.len() {
                let mut p = params.clone();
                let mut probe = net.clone();
                p[i] += h;
                probe.set_params_flat(&p).unwrap();
                let up = objective(&probe, &x);
                p[i] -= 2.0 * h;
                probe.set_params_flat(&p).unwrap();
                let down = objective(&probe, &x);
                let numeric = (up - down) / (2.0 * h);
                let err = (numeric - analytic[i]).abs() / numeric.abs().max(analytic[i].abs()).max(1e-6);
                assert!(err < 1e-4, "param {i}: {numeric} vs {}", analytic[i]);
            }
            for i in 0..3 {
                let mut xp = x.clone();
                xp[i] += h;
                let up = objective(&net, &xp);
                xp[i] -= 2.0 * h;
                let down = objective(&net, &xp);
                let numeric = (up - down) / (2.0 * h);
                assert!((numeric - gin[i]).abs() < 1e-6 * numeric.abs().max(1.0));
            }
        }
    }

    #[test]
    fn softplus_values() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(softplus(100.0), 100.0);
        assert!(softplus(-100.0) > 0.0);
        assert_eq!(softplus_grad(0.0), 0.5);
        for &y in &[1e-6, 0.3, 1.0, 5.0, 40.0] {
            assert!((softplus(softplus_inverse(y)) - y).abs() < 1e-12 * y.max(1.0));
        }
    }

    #[test]
    fn softplus_positive_and_increasing() {
        let mut prev = softplus(-700.0);
        assert!(prev > 0.0);
        let mut x = -700.0;
        while x < 700.0 {
            x += 0.37;
            let v = softplus(x);
            assert!(v > 0.0 && v > prev, "x={x}");
            prev = v;
        }
    }

    #[test]
    fn adam_zero_gradient_is_fixed_point() {
        let mut net = scalar(0.5, -0.25, Activation::Identity);
        let tape = GradientTape::zeros_like(&net);
        let mut state = AdamState::new(&net, AdamConfig::default());
        adam_step(&mut net, &tape, &mut state).unwrap();
        assert_eq!(net.params_flat(), vec![0.5, -0.25]);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn adam_first_step_is_lr_times_sign() {
        // m_hat = g, v_hat = g^2 after one step, so the update is lr * g / (|g| + eps).
        for &g in &[3.0, -0.02] {
            let mut net = scalar(1.0, 0.0, Activation::Identity);
            let mut tape = GradientTape::zeros_like(&net);
            tape.layers[0].weight[0] = g;
            let mut state = AdamState::new(&net, AdamConfig::default());
            adam_step(&mut net, &tape, &mut state).unwrap();
            let expected = 1.0 - 1e-3 * g / (f64::abs(g) + 1e-8);
            assert!((net.layers[0].weight[0] - expected).abs() < 1e-15);
            assert!((net.layers[0].weight[0] - (1.0 - 1e-3 * g.signum())).abs() < 1e-9);
        }
    }

    #[test]
    fn adam_is_deterministic_and_rejects_nan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::glorot(&[2, 4, 1], Activation::Relu, &mut rng);
        let (_, cache) = net.forward(&[0.3, -0.7]).unwrap();
        let (_, tape) = net.backward(&cache, &[1.0]).unwrap();
        let run = || {
            let mut n = net.clone();
            let mut s = AdamState::new(&n, AdamConfig::default());
            adam_step(&mut n, &tape, &mut s).unwrap();
            adam_step(&mut n, &tape, &mut s).unwrap();
            n
        };
        assert_eq!(run(), run());

        let mut bad = tape.clone();
        bad.layers[1].bias[0] = f64::NAN;
        let mut n = net.clone();
        let mut s = AdamState::new(&n, AdamConfig::default());
        let err = adam_step(&mut n, &bad, &mut s).unwrap_err();
        assert!(err.to_string().contains("layer 1 bias"), "{err}");
        assert_eq!(s.step, 0);
    }
}
