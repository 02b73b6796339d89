//! Small dense networks with hand-written backpropagation.
//!
//! All parameters live in one flat `Vec<f64>` so optimizers, target-network
//! smoothing and checkpoints can treat a network as a plain slice.
//! Layer `l` stores its weights row-major (`out × in`) followed by its biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `y`.
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    hidden: Activation,
    output: Activation,
    params: Vec<f64>,
}

/// Intermediate values of one forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct Tape {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("tape has layers")
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Zero-initialized network with layer widths `sizes` (input first).
    pub fn zeros(sizes: &[usize], hidden: Activation, output: Activation) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        Self { sizes: sizes.to_vec(), hidden, output, params: vec![0.0; param_count(sizes)] }
    }

    /// Uniform fan-in initialization, `U(-1/√in, 1/√in)`; the last layer is
    /// additionally scaled by `output_scale`.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        output_scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut mlp = Self::zeros(sizes, hidden, output);
        let layers = sizes.len() - 1;
        let mut offset = 0;
        for l in 0..layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let mut bound = 1.0 / (fan_in as f64).sqrt();
            if l + 1 == layers {
                bound *= output_scale;
            }
            let n = fan_in * fan_out + fan_out;
            for p in &mut mlp.params[offset..offset + n] {
                *p = if bound > 0.0 { rng.random_range(-bound..bound) } else { 0.0 };
            }
            offset += n;
        }
        mlp
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activations(&self) -> (Activation, Activation) {
        (self.hidden, self.output)
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) {
        assert_eq!(params.len(), self.params.len(), "parameter count mismatch");
        self.params = params;
    }

    pub fn zero_grad(&self) -> Vec<f64> {
        vec![0.0; self.params.len()]
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 2 == self.sizes.len() {
            self.output
        } else {
            self.hidden
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_tape(input).post.pop().unwrap()
    }

    pub fn forward_tape(&self, input: &[f64]) -> Tape {
        assert_eq!(input.len(), self.input_dim(), "input dimension mismatch");
        let layers = self.sizes.len() - 1;
        let mut pre = Vec::with_capacity(layers);
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(layers);
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let x = if l == 0 { input } else { &post[l - 1] };
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            let act = self.activation(l);
            let y = z.iter().map(|&v| act.apply(v)).collect();
            pre.push(z);
            post.push(y);
            offset += n_in * n_out + n_out;
        }
        Tape { input: input.to_vec(), pre, post }
    }

    /// Backpropagates `d_output` through the recorded pass.
    ///
    /// Parameter gradients are *added* to `grads` so batches can accumulate;
    /// the gradient with respect to the input is returned.
    pub fn backward(&self, tape: &Tape, d_output: &[f64], grads: &mut [f64]) -> Vec<f64> {
        assert_eq!(d_output.len(), self.output_dim(), "output gradient dimension mismatch");
        assert_eq!(grads.len(), self.params.len(), "gradient buffer size mismatch");
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for l in 0..layers {
            offsets.push(offset);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }

        let mut delta: Vec<f64> = d_output.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let act = self.activation(l);
            for o in 0..n_out {
                delta[o] *= act.derivative(tape.pre[l][o], tape.post[l][o]);
            }
            let x = if l == 0 { &tape.input } else { &tape.post[l - 1] };
            let base = offsets[l];
            let w = &self.params[base..base + n_in * n_out];
            let (gw, gb) = grads[base..base + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            let mut d_in = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &w[o * n_in..(o + 1) * n_in];
                let grow = &mut gw[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    grow[i] += d * x[i];
                    d_in[i] += d * row[i];
                }
            }
            delta = d_in;
        }
        delta
    }

    /// `self ← ρ·self + (1 − ρ)·source`, the usual target-network smoothing.
    pub fn soft_update_from(&mut self, source: &Mlp, rho: f64) {
        assert_eq!(self.params.len(), source.params.len());
        for (t, s) in self.params.iter_mut().zip(&source.params) {
            *t = rho * *t + (1.0 - rho) * s;
        }
    }
}

/// Adam over a flat parameter slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
