//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use hybrid_vvc::grid::{Grid, SetpointProposal};
use hybrid_vvc::nn::Mlp;
use hybrid_vvc::policies::{Experience, Mode, Sac, SacConfig};
use num_complex::Complex64;

/// Dense bus admittance matrix assembled directly from the line list.
pub fn ybus(grid: &Grid) -> Vec<Vec<Complex64>> {
    let n = grid.bus_count();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for l in &grid.lines {
        let g = Complex64::new(1.0, 0.0) / Complex64::new(l.resistance, l.reactance);
        y[l.from_bus][l.from_bus] += g;
        y[l.to_bus][l.to_bus] += g;
        y[l.from_bus][l.to_bus] -= g;
        y[l.to_bus][l.from_bus] -= g;
    }
    y
}

/// Gauss–Seidel with the slack (bus 0) held at 1∠0. Returns `None` if the
/// iteration has not settled to 1e-13 after `max_sweeps`.
pub fn gauss_seidel(grid: &Grid, proposal: &SetpointProposal, max_sweeps: usize) -> Option<Vec<Complex64>> {
    let y = ybus(grid);
    let s = grid.injections(proposal);
    let n = y.len();
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    for _ in 0..max_sweeps {
        let mut change: f64 = 0.0;
        for i in 1..n {
            let mut acc = (s[i] / v[i]).conj();
            for j in 0..n {
                if j != i {
                    acc -= y[i][j] * v[j];
                }
            }
            let next = acc / y[i][i];
            change = change.max((next - v[i]).norm());
            v[i] = next;
        }
        if !v.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
            return None;
        }
        if change < 1e-13 {
            return Some(v);
        }
    }
    None
}

/// Largest |S_calc − S_sched| over the non-slack buses, recomputed from scratch.
pub fn max_mismatch(grid: &Grid, proposal: &SetpointProposal, v: &[Complex64]) -> f64 {
    let y = ybus(grid);
    let s = grid.injections(proposal);
    (1..v.len())
        .map(|i| {
            let current: Complex64 = (0..v.len()).map(|j| y[i][j] * v[j]).sum();
            (v[i] * current.conj() - s[i]).norm()
        })
        .fold(0.0, f64::max)
}

/// Scalar loss `Σ_k c_k · out_k` used to compare analytic and numeric gradients.
pub fn weighted_output(mlp: &Mlp, x: &[f64], c: &[f64]) -> f64 {
    mlp.forward(x).iter().zip(c).map(|(o, w)| o * w).sum()
}

/// Central finite differences of `weighted_output` w.r.t. every parameter.
pub fn numeric_gradient(mlp: &Mlp, x: &[f64], c: &[f64], h: f64) -> Vec<f64> {
    let mut probe = mlp.clone();
    (0..mlp.params().len())
        .map(|i| {
            let orig = probe.params()[i];
            probe.params_mut()[i] = orig + h;
            let up = weighted_output(&probe, x, c);
            probe.params_mut()[i] = orig - h;
            let down = weighted_output(&probe, x, c);
            probe.params_mut()[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// One-step bandit with reward `1 − a²`: the optimal deterministic action is 0.
/// The actor starts with its mean pushed to tanh⁻¹(0.6). Returns the final
/// deterministic action.
pub fn toy_sac_final_action(seed: u64, updates: u64) -> f64 {
    let config = SacConfig { warmup_steps: 0, train_every: 1, ..SacConfig::default() };
    let batch = config.batch_size as u64;
    let mut sac = Sac::new(1, 1, config, seed).unwrap();
    let obs = [1.0];
    let m0 = sac.mean(&obs).unwrap()[0];
    let len = sac.actor().params().len();
    // the last two parameters are the output biases (mean, log std)
    sac.actor_mut().params_mut()[len - 2] += 0.6f64.atanh() - m0;
    let mut step = 0;
    while sac.updates() < updates {
        let a = sac.act(&obs, Mode::Train).unwrap();
        sac.record(Experience { state: obs.to_vec(), action: a.clone(), reward: 1.0 - a[0] * a[0], next_state: obs.to_vec(), done: true })
            .unwrap();
        if step >= batch {
            sac.train_step(step);
        }
        step += 1;
    }
    sac.act(&obs, Mode::Eval).unwrap()[0]
}
