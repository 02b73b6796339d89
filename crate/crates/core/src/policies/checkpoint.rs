//! Plain-text SAC checkpoints.
//!
//! ```text
//! hybrid-vvc-checkpoint 1
//! obs_dim <n>
//! act_dim <n>
//! updates <n>
//! buffer_len <n>
//! buffer_capacity <n>
//! network <name> <layer count + 1> <size>... <hidden act> <output act>
//! <param count> <p0> <p1> ...
//! (five networks: actor q1 q2 q1_target q2_target)
//! end
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a load restores the
//! parameters bit for bit. Optimizer moments and replay contents are not stored.

use std::io::{BufRead, Write};

use crate::nn::{Activation, Mlp};

use super::sac::{Sac, SacConfig};
use super::PolicyError;

pub const CHECKPOINT_MAGIC: &str = "hybrid-vvc-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

const NETWORKS: [&str; 5] = ["actor", "q1", "q2", "q1_target", "q2_target"];

fn act_name(a: Activation) -> &'static str {
    match a {
        Activation::Identity => "identity",
        Activation::Relu => "relu",
        Activation::Tanh => "tanh",
    }
}

fn parse_act(s: &str) -> Result<Activation, PolicyError> {
    match s {
        "identity" => Ok(Activation::Identity),
        "relu" => Ok(Activation::Relu),
        "tanh" => Ok(Activation::Tanh),
        other => Err(PolicyError::Checkpoint(format!("unknown activation `{other}`"))),
    }
}

fn io_err(e: std::io::Error) -> PolicyError {
    PolicyError::Checkpoint(e.to_string())
}

pub fn save_checkpoint<W: Write>(sac: &Sac, mut out: W) -> Result<(), PolicyError> {
    writeln!(out, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}").map_err(io_err)?;
    writeln!(out, "obs_dim {}", sac.obs_dim()).map_err(io_err)?;
    writeln!(out, "act_dim {}", sac.act_dim()).map_err(io_err)?;
    writeln!(out, "updates {}", sac.updates).map_err(io_err)?;
    writeln!(out, "buffer_len {}", sac.buffer().len()).map_err(io_err)?;
    writeln!(out, "buffer_capacity {}", sac.buffer().capacity()).map_err(io_err)?;
    let nets = [&sac.actor, &sac.q1, &sac.q2, &sac.q1_target, &sac.q2_target];
    for (name, net) in NETWORKS.iter().zip(nets) {
        let sizes: Vec<String> = net.sizes().iter().map(|s| s.to_string()).collect();
        let (h, o) = net.activations();
        writeln!(out, "network {name} {} {} {} {}", sizes.len(), sizes.join(" "), act_name(h), act_name(o))
            .map_err(io_err)?;
        let params: Vec<String> = net.params().iter().map(|p| p.to_string()).collect();
        writeln!(out, "{} {}", params.len(), params.join(" ")).map_err(io_err)?;
    }
    writeln!(out, "end").map_err(io_err)?;
    Ok(())
}

/// Metadata read back from a checkpoint besides the networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub buffer_len: usize,
    pub buffer_capacity: usize,
}

/// Rebuilds a learner from a checkpoint. `config` must describe the same
/// architecture; `seed` drives the fresh sampling streams.
pub fn load_checkpoint<R: BufRead>(
    input: R,
    config: SacConfig,
    seed: u64,
) -> Result<(Sac, CheckpointMeta), PolicyError> {
    let mut lines = input.lines();
    let mut next = || -> Result<String, PolicyError> {
        lines
            .next()
            .ok_or_else(|| PolicyError::Checkpoint("unexpected end of checkpoint".into()))?
            .map_err(io_err)
    };
    let header = next()?;
    let version = header
        .strip_prefix(CHECKPOINT_MAGIC)
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or_else(|| PolicyError::Checkpoint(format!("bad header `{header}`")))?;
    if version != CHECKPOINT_VERSION {
        return Err(PolicyError::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let mut field = |key: &str| -> Result<usize, PolicyError> {
        let line = next()?;
        let mut it = line.split_whitespace();
        match (it.next(), it.next().and_then(|v| v.parse().ok())) {
            (Some(k), Some(v)) if k == key => Ok(v),
            _ => Err(PolicyError::Checkpoint(format!("expected `{key} <n>`, got `{line}`"))),
        }
    };
    let obs_dim = field("obs_dim")?;
    let act_dim = field("act_dim")?;
    let updates = field("updates")? as u64;
    let buffer_len = field("buffer_len")?;
    let buffer_capacity = field("buffer_capacity")?;

    let mut sac = Sac::new(obs_dim, act_dim, config, seed)?;
    let mut loaded = Vec::with_capacity(NETWORKS.len());
    for name in NETWORKS {
        let line = next()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() < 3 || parts[0] != "network" || parts[1] != name {
            return Err(PolicyError::Checkpoint(format!("expected network `{name}`, got `{line}`")));
        }
        let count: usize = parts[2].parse().map_err(|_| PolicyError::Checkpoint(format!("bad layer count in `{line}`")))?;
        if parts.len() != 3 + count + 2 {
            return Err(PolicyError::Checkpoint(format!("malformed network line `{line}`")));
        }
        let sizes = parts[3..3 + count]
            .iter()
            .map(|s| s.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| PolicyError::Checkpoint(e.to_string()))?;
        let hidden = parse_act(parts[3 + count])?;
        let output = parse_act(parts[4 + count])?;
        let mut net = Mlp::zeros(&sizes, hidden, output);

        let line = next()?;
        let mut it = line.split_whitespace();
        let n: usize = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| PolicyError::Checkpoint(format!("missing parameter count for `{name}`")))?;
        let params = it
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| PolicyError::Checkpoint(format!("{name}: {e}")))?;
        if params.len() != n || n != net.params().len() {
            return Err(PolicyError::Checkpoint(format!(
                "{name}: expected {} parameters, found {}",
                net.params().len(),
                params.len()
            )));
        }
        net.set_params(params);
        loaded.push(net);
    }
    if next()? != "end" {
        return Err(PolicyError::Checkpoint("missing `end` marker".into()));
    }

    let mut it = loaded.into_iter();
    let mut install = |slot: &mut Mlp| -> Result<(), PolicyError> {
        let net = it.next().unwrap();
        if net.sizes() != slot.sizes() || net.activations() != slot.activations() {
            return Err(PolicyError::Checkpoint(format!(
                "architecture mismatch: checkpoint {:?}, config {:?}",
                net.sizes(),
                slot.sizes()
            )));
        }
        *slot = net;
        Ok(())
    };
    install(&mut sac.actor)?;
    install(&mut sac.q1)?;
    install(&mut sac.q2)?;
    install(&mut sac.q1_target)?;
    install(&mut sac.q2_target)?;
    sac.updates = updates;
    Ok((sac, CheckpointMeta { buffer_len, buffer_capacity }))
}
