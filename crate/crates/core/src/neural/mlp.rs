//! Fully connected networks with hand-written forward and backward passes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the activation's output `a`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Layer widths from input to output plus the activations used between them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub widths: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
}

impl Architecture {
    pub fn new(widths: Vec<usize>, hidden: Activation, output: Activation) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::domain(format!("invalid layer widths {widths:?}")));
        }
        Ok(Self {
            widths,
            hidden,
            output,
        })
    }

    /// `latent -> hidden -> hidden -> 2` with tanh hidden units and a linear output.
    pub fn generator(latent: usize, hidden: usize) -> Self {
        Self {
            widths: vec![latent, hidden, hidden, 2],
            hidden: Activation::Tanh,
            output: Activation::Identity,
        }
    }

    /// `2 -> hidden -> hidden -> 1` with tanh hidden units and a sigmoid output.
    pub fn discriminator(hidden: usize) -> Self {
        Self {
            widths: vec![2, hidden, hidden, 1],
            hidden: Activation::Tanh,
            output: Activation::Sigmoid,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().expect("at least two widths")
    }

    pub fn num_params(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 2 == self.widths.len() {
            self.output
        } else {
            self.hidden
        }
    }
}

/// Dense layer with `weights` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum();
            out.push(z + self.bias[o]);
        }
    }
}

/// Parameters of one network. Gradients use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub arch: Architecture,
    pub layers: Vec<Layer>,
}

/// Post-activation values of every layer, input included, for one sample.
#[derive(Debug, Clone)]
pub struct Trace {
    activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace holds the input")
    }
}

impl MlpParams {
    pub fn zeros(arch: &Architecture) -> Self {
        let layers = arch
            .widths
            .windows(2)
            .map(|w| Layer::zeros(w[0], w[1]))
            .collect();
        Self {
            arch: arch.clone(),
            layers,
        }
    }

    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases.
    pub fn init<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Self {
        let mut p = Self::zeros(arch);
        for layer in &mut p.layers {
            let a = 1.0 / (layer.inputs as f64).sqrt();
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = rng.random_range(-a..=a);
            }
        }
        p
    }

    pub fn num_params(&self) -> usize {
        self.arch.num_params()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn unflatten(arch: &Architecture, flat: &[f64]) -> Result<Self> {
        if flat.len() != arch.num_params() {
            return Err(Error::domain(format!(
                "expected {} parameters, got {}",
                arch.num_params(),
                flat.len()
            )));
        }
        let mut p = Self::zeros(arch);
        let mut at = 0;
        for l in &mut p.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arch.input_dim() {
            return Err(Error::domain(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                self.arch.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(x)?.activations.pop().expect("trace holds the input"))
    }

    pub fn trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let act = self.arch.activation(i);
            let mut z = Vec::with_capacity(layer.outputs);
            layer.affine(activations.last().expect("nonempty"), &mut z);
            for v in &mut z {
                *v = act.apply(*v);
            }
            activations.push(z);
        }
        Ok(Trace { activations })
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d output`
    /// and returns `d loss / d input`.
    pub fn backward(&self, trace: &Trace, grad_output: &[f64], grads: &mut MlpParams) -> Vec<f64> {
        self.backprop(trace, grad_output, Some(grads))
    }

    /// `d loss / d input` alone, without touching parameter gradients.
    pub fn input_gradient(&self, trace: &Trace, grad_output: &[f64]) -> Vec<f64> {
        self.backprop(trace, grad_output, None)
    }

    fn backprop(&self, trace: &Trace, grad_output: &[f64], mut grads: Option<&mut MlpParams>) -> Vec<f64> {
        let mut delta: Vec<f64> = grad_output.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let out = &trace.activations[i + 1];
            let input = &trace.activations[i];
            let act = self.arch.activation(i);
            for (d, a) in delta.iter_mut().zip(out) {
                *d *= act.derivative_from_output(*a);
            }
            let mut next = vec![0.0; layer.inputs];
            for o in 0..layer.outputs {
                let d = delta[o];
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (n, w) in next.iter_mut().zip(row) {
                    *n += d * w;
                }
            }
            if let Some(g) = grads.as_deref_mut() {
                let g = &mut g.layers[i];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    g.bias[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, x) in row.iter_mut().zip(input) {
                        *gw += d * x;
                    }
                }
            }
            delta = next;
        }
        delta
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v *= factor;
            }
        }
    }
}

/// `params - learning_rate * grads`.
pub fn sgd_step(params: &MlpParams, grads: &MlpParams, learning_rate: f64) -> Result<MlpParams> {
    if params.arch != grads.arch {
        return Err(Error::domain("gradient shape does not match parameters"));
    }
    let mut next = params.clone();
    for (l, g) in next.layers.iter_mut().zip(&grads.layers) {
        for (w, dw) in l.weights.iter_mut().zip(&g.weights) {
            *w -= learning_rate * dw;
        }
        for (b, db) in l.bias.iter_mut().zip(&g.bias) {
            *b -= learning_rate * db;
        }
    }
    if !next.is_finite() {
        return Err(Error::numeric("SGD step produced a non-finite parameter"));
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_zero() {
        let p = MlpParams::zeros(&Architecture::generator(2, 8));
        assert_eq!(p.forward(&[0.3, -1.2]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_layer_bias_passthrough() {
        let arch = Architecture::new(vec![3, 2], Activation::Tanh, Activation::Identity).unwrap();
        let mut p = MlpParams::zeros(&arch);
        p.layers[0].bias = vec![0.7, -2.0];
        assert_eq!(p.forward(&[0.0; 3]).unwrap(), vec![0.7, -2.0]);
    }

    #[test]
    fn input_dimension_checked() {
        let p = MlpParams::zeros(&Architecture::discriminator(4));
        assert!(matches!(p.forward(&[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let arch = Architecture::discriminator(32);
        let a = MlpParams::init(&arch, &mut ChaCha8Rng::seed_from_u64(5));
        let b = MlpParams::init(&arch, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        for l in &a.layers {
            let bound = 1.0 / (l.inputs as f64).sqrt();
            assert!(l.weights.iter().chain(&l.bias).all(|w| w.abs() <= bound));
        }
        assert_eq!(a.num_params(), 2 * 32 + 32 + 32 * 32 + 32 + 32 + 1);
    }

    #[test]
    fn flatten_round_trip() {
        let arch = Architecture::generator(2, 5);
        let p = MlpParams::init(&arch, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(MlpParams::unflatten(&arch, &p.flatten()).unwrap(), p);
        assert!(MlpParams::unflatten(&arch, &[0.0; 3]).is_err());
    }

    #[test]
    fn sgd_examples() {
        let arch = Architecture::new(vec![1, 1], Activation::Identity, Activation::Identity).unwrap();
        let mut p = MlpParams::zeros(&arch);
        p.layers[0].weights[0] = 1.0;
        let mut g = MlpParams::zeros(&arch);
        assert_eq!(sgd_step(&p, &g, 0.1).unwrap(), p);
        g.layers[0].weights[0] = 2.0;
        assert_eq!(sgd_step(&p, &g, 0.0).unwrap(), p);
        let next = sgd_step(&p, &g, 0.1).unwrap();
        assert!((next.layers[0].weights[0] - 0.8).abs() < 1e-15);
        g.layers[0].weights[0] = f64::INFINITY;
        assert!(matches!(sgd_step(&p, &g, 0.1), Err(Error::Numeric(_))));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
