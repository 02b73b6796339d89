//! Soft actor-critic with a tanh-squashed Gaussian actor, twin critics with
//! clipped double-Q targets, fixed entropy temperature and Polyak-averaged
//! target critics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::nn::{Activation, Adam, Mlp, Tape};

use super::replay::{Experience, ReplayBuffer};
use super::PolicyError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    pub hidden_dims: Vec<usize>,
    pub learning_rate: f64,
    pub warmup_steps: u64,
    pub train_every: u64,
    pub discount: f64,
    pub batch_size: usize,
    pub entropy_temperature: f64,
    /// Polyak coefficient ρ in `target ← ρ·target + (1 − ρ)·online`.
    pub target_smoothing: f64,
    pub buffer_capacity: usize,
    pub log_std_min: f64,
    pub log_std_max: f64,
    /// Scale of the actor's last-layer initialization.
    pub actor_init_scale: f64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            hidden_dims: vec![16, 16],
            learning_rate: 1e-4,
            warmup_steps: 50,
            train_every: 5,
            discount: 0.9,
            batch_size: 64,
            entropy_temperature: 0.2,
            target_smoothing: 0.995,
            buffer_capacity: 100_000,
            log_std_min: -20.0,
            log_std_max: 2.0,
            actor_init_scale: 0.1,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: &str| Err(PolicyError::Config(m.to_string()));
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return bad("hidden_dims must be non-empty and positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.train_every == 0 || self.batch_size == 0 || self.buffer_capacity == 0 {
            return bad("train_every, batch_size and buffer_capacity must be positive");
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return bad("discount must lie in (0, 1)");
        }
        if !(self.entropy_temperature > 0.0) {
            return bad("entropy_temperature must be positive");
        }
        if !(self.target_smoothing > 0.0 && self.target_smoothing < 1.0) {
            return bad("target_smoothing must lie in (0, 1)");
        }
        if !(self.log_std_min < self.log_std_max) {
            return bad("log_std_min must be below log_std_max");
        }
        if !(self.actor_init_scale >= 0.0) {
            return bad("actor_init_scale must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Sample from the stochastic policy.
    Train,
    /// Deterministic mean action.
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainMetrics {
    pub critic_loss: f64,
    pub actor_loss: f64,
    /// Batch estimate of `-E[log π]`.
    pub entropy: f64,
    pub mean_q: f64,
}

/// `ln(1 - tanh(u)^2)` without cancellation for large |u|.
fn log_one_minus_tanh_sq(u: f64) -> f64 {
    let x = -2.0 * u;
    let softplus = if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
    2.0 * (std::f64::consts::LN_2 - u - softplus)
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

struct ActorSample {
    tape: Tape,
    eps: Vec<f64>,
    std: Vec<f64>,
    clamped: Vec<bool>,
    action: Vec<f64>,
    log_prob: f64,
}

#[derive(Debug, Clone)]
pub struct Sac {
    config: SacConfig,
    obs_dim: usize,
    act_dim: usize,
    pub(crate) actor: Mlp,
    pub(crate) q1: Mlp,
    pub(crate) q2: Mlp,
    pub(crate) q1_target: Mlp,
    pub(crate) q2_target: Mlp,
    actor_opt: Adam,
    q1_opt: Adam,
    q2_opt: Adam,
    buffer: ReplayBuffer,
    act_rng: ChaCha8Rng,
    train_rng: ChaCha8Rng,
    pub(crate) updates: u64,
}

impl Sac {
    pub fn new(obs_dim: usize, act_dim: usize, config: SacConfig, seed: u64) -> Result<Self, PolicyError> {
        config.validate()?;
        if obs_dim == 0 || act_dim == 0 {
            return Err(PolicyError::Config("observation and action dimensions must be positive".into()));
        }
        let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
        let mut act_rng = ChaCha8Rng::seed_from_u64(seed);
        act_rng.set_stream(1);
        let mut train_rng = ChaCha8Rng::seed_from_u64(seed);
        train_rng.set_stream(2);

        let sizes = |input: usize, output: usize| {
            let mut s = vec![input];
            s.extend(&config.hidden_dims);
            s.push(output);
            s
        };
        let actor = Mlp::new(
            &sizes(obs_dim, 2 * act_dim),
            Activation::Relu,
            Activation::Identity,
            config.actor_init_scale,
            &mut init_rng,
        );
        let critic_sizes = sizes(obs_dim + act_dim, 1);
        let q1 = Mlp::new(&critic_sizes, Activation::Relu, Activation::Identity, 1.0, &mut init_rng);
        let q2 = Mlp::new(&critic_sizes, Activation::Relu, Activation::Identity, 1.0, &mut init_rng);
        let lr = config.learning_rate;
        Ok(Self {
            actor_opt: Adam::new(actor.params().len(), lr),
            q1_opt: Adam::new(q1.params().len(), lr),
            q2_opt: Adam::new(q2.params().len(), lr),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            actor,
            q1,
            q2,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            act_rng,
            train_rng,
            updates: 0,
            obs_dim,
            act_dim,
            config,
        })
    }

    pub fn config(&self) -> &SacConfig {
        &self.config
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut Mlp {
        &mut self.actor
    }

    pub fn critics(&self) -> [&Mlp; 4] {
        [&self.q1, &self.q2, &self.q1_target, &self.q2_target]
    }

    fn check_obs(&self, obs: &[f64]) -> Result<(), PolicyError> {
        if obs.len() != self.obs_dim {
            return Err(PolicyError::Dimension { expected: self.obs_dim, got: obs.len() });
        }
        Ok(())
    }

    /// Pre-squash mean of the actor.
    pub fn mean(&self, obs: &[f64]) -> Result<Vec<f64>, PolicyError> {
        self.check_obs(obs)?;
        let mut out = self.actor.forward(obs);
        out.truncate(self.act_dim);
        Ok(out)
    }

    /// Normalized action in [-1, 1]^act_dim.
    pub fn act(&mut self, obs: &[f64], mode: Mode) -> Result<Vec<f64>, PolicyError> {
        self.check_obs(obs)?;
        Ok(match mode {
            Mode::Eval => self.mean(obs)?.iter().map(|m| m.tanh()).collect(),
            Mode::Train => {
                let mut rng = self.act_rng.clone();
                let s = self.sample(obs, &mut rng);
                self.act_rng = rng;
                s.action
            }
        })
    }

    pub fn record(&mut self, exp: Experience) -> Result<(), PolicyError> {
        self.check_obs(&exp.state)?;
        self.check_obs(&exp.next_state)?;
        if exp.action.len() != self.act_dim {
            return Err(PolicyError::Dimension { expected: self.act_dim, got: exp.action.len() });
        }
        self.buffer.push(exp);
        Ok(())
    }

    /// Applies the training schedule for environment step `step`: after
    /// warm-up, one update every `train_every` steps.
    pub fn on_step(&mut self, step: u64) -> Option<TrainMetrics> {
        let c = &self.config;
        if step < c.warmup_steps || !(step - c.warmup_steps).is_multiple_of(c.train_every) {
            return None;
        }
        self.train_step(step)
    }

    /// One gradient update of both critics and the actor followed by target
    /// smoothing. `None` while warming up or while the buffer holds fewer
    /// than `batch_size` experiences.
    pub fn train_step(&mut self, step: u64) -> Option<TrainMetrics> {
        if step < self.config.warmup_steps || self.buffer.len() < self.config.batch_size {
            return None;
        }
        Some(self.update())
    }

    fn sample(&self, obs: &[f64], rng: &mut ChaCha8Rng) -> ActorSample {
        let n = self.act_dim;
        let tape = self.actor.forward_tape(obs);
        let out = tape.output();
        let mut eps = Vec::with_capacity(n);
        let mut std = Vec::with_capacity(n);
        let mut clamped = Vec::with_capacity(n);
        let mut action = Vec::with_capacity(n);
        let mut log_prob = 0.0;
        for i in 0..n {
            let raw = out[n + i];
            let ls = raw.clamp(self.config.log_std_min, self.config.log_std_max);
            let sd = ls.exp();
            let e: f64 = StandardNormal.sample(rng);
            let u = out[i] + sd * e;
            log_prob += -0.5 * e * e - ls - HALF_LN_2PI - log_one_minus_tanh_sq(u);
            eps.push(e);
            std.push(sd);
            clamped.push(raw != ls);
            action.push(u.tanh());
        }
        ActorSample { tape, eps, std, clamped, action, log_prob }
    }

    fn update(&mut self) -> TrainMetrics {
        let c = self.config.clone();
        let b = c.batch_size;
        let mut rng = self.train_rng.clone();
        let batch: Vec<Experience> = self.buffer.sample(b, &mut rng).into_iter().cloned().collect();
        let concat = |s: &[f64], a: &[f64]| -> Vec<f64> { s.iter().chain(a).copied().collect() };

        let targets: Vec<f64> = batch
            .iter()
            .map(|e| {
                let next = self.sample(&e.next_state, &mut rng);
                let sa = concat(&e.next_state, &next.action);
                let q = self.q1_target.forward(&sa)[0].min(self.q2_target.forward(&sa)[0]);
                let cont = if e.done { 0.0 } else { 1.0 };
                e.reward + c.discount * cont * (q - c.entropy_temperature * next.log_prob)
            })
            .collect();

        let mut critic_loss = 0.0;
        let mut mean_q = 0.0;
        for (critic, opt) in [(&mut self.q1, &mut self.q1_opt), (&mut self.q2, &mut self.q2_opt)] {
            let mut grads = critic.zero_grad();
            for (e, y) in batch.iter().zip(&targets) {
                let tape = critic.forward_tape(&concat(&e.state, &e.action));
                let err = tape.output()[0] - y;
                critic_loss += err * err / b as f64;
                mean_q += tape.output()[0] / (2 * b) as f64;
                critic.backward(&tape, &[2.0 * err / b as f64], &mut grads);
            }
            opt.step(critic.params_mut(), &grads);
        }

        let n = self.act_dim;
        let alpha = c.entropy_temperature;
        let mut actor_grads = self.actor.zero_grad();
        let mut scratch = self.q1.zero_grad();
        let mut actor_loss = 0.0;
        let mut entropy = 0.0;
        for e in &batch {
            let s = self.sample(&e.state, &mut rng);
            let sa = concat(&e.state, &s.action);
            let t1 = self.q1.forward_tape(&sa);
            let t2 = self.q2.forward_tape(&sa);
            let (critic, tape) = if t1.output()[0] <= t2.output()[0] { (&self.q1, &t1) } else { (&self.q2, &t2) };
            let q = tape.output()[0];
            let d_sa = critic.backward(tape, &[1.0], &mut scratch);
            let dq_da = &d_sa[self.obs_dim..];

            actor_loss += (alpha * s.log_prob - q) / b as f64;
            entropy -= s.log_prob / b as f64;

            let mut d_out = vec![0.0; 2 * n];
            for i in 0..n {
                let a = s.action[i];
                let dq_du = dq_da[i] * (1.0 - a * a);
                d_out[i] = (alpha * 2.0 * a - dq_du) / b as f64;
                if !s.clamped[i] {
                    let du_dls = s.std[i] * s.eps[i];
                    d_out[n + i] = (alpha * (-1.0 + 2.0 * a * du_dls) - dq_du * du_dls) / b as f64;
                }
            }
            self.actor.backward(&s.tape, &d_out, &mut actor_grads);
        }
        self.actor_opt.step(self.actor.params_mut(), &actor_grads);

        self.q1_target.soft_update_from(&self.q1, c.target_smoothing);
        self.q2_target.soft_update_from(&self.q2, c.target_smoothing);
        self.train_rng = rng;
        self.updates += 1;
        TrainMetrics { critic_loss: critic_loss / 2.0, actor_loss, entropy, mean_q }
    }

    /// Reference log-probability and action for fixed noise, used to check
    /// the analytic actor gradient.
    #[cfg(test)]
    fn log_prob_with_noise(actor: &Mlp, obs: &[f64], eps: &[f64], c: &SacConfig) -> (f64, Vec<f64>) {
        let n = eps.len();
        let out = actor.forward(obs);
        let mut lp = 0.0;
        let mut action = Vec::new();
        for i in 0..n {
            let ls = out[n + i].clamp(c.log_std_min, c.log_std_max);
            let u = out[i] + ls.exp() * eps[i];
            lp += -0.5 * eps[i] * eps[i] - ls - HALF_LN_2PI - log_one_minus_tanh_sq(u);
            action.push(u.tanh());
        }
        (lp, action)
    }
}
