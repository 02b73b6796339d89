use std::path::PathBuf;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::record::write_csv_file;
use super::{AgentConfig, HarnessError, RunRecord};
use crate::discriminator::{Discriminator, PolicyChoice};
use crate::env::Environment;
use crate::grid::GridConfig;
use crate::policies::{encode_observation, save_checkpoint, AdaptivePolicy, Experience, Mode, RulesPolicy};
use crate::worldmodel::WorldModel;

/// Steps at the end of a run that the "final" statistics cover.
pub const FINAL_WINDOW: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum RunMode {
    /// SAC proposes and its proposal is applied directly.
    PureSac,
    /// Discriminator arbitrates between rules and SAC.
    Hybrid,
    /// Droop controller only.
    RulesOnly,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::PureSac => "pure_sac",
            RunMode::Hybrid => "hybrid",
            RunMode::RulesOnly => "rules_only",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: RunMode,
    pub steps: u64,
    pub seed: u64,
    pub grid: GridConfig,
    pub agent: AgentConfig,
    /// Where `run.csv`, `summary.json` and, for runs with a learner,
    /// `policy.ckpt` go. `None` keeps results in memory.
    pub out_dir: Option<PathBuf>,
    /// First step with learning and exploration switched off. `None` picks
    /// the mode default: half the run for pure SAC, never otherwise.
    pub eval_after: Option<u64>,
}

impl RunConfig {
    pub fn new(mode: RunMode, steps: u64, seed: u64) -> Self {
        Self {
            mode,
            steps,
            seed,
            grid: GridConfig::default(),
            agent: AgentConfig::default(),
            out_dir: None,
            eval_after: None,
        }
    }

    pub fn effective_eval_after(&self) -> Option<u64> {
        match (self.eval_after, self.mode) {
            (Some(n), _) => Some(n),
            (None, RunMode::PureSac) => Some(self.steps / 2),
            (None, _) => None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.steps == 0 {
            return Err(HarnessError::Config("steps must be positive".into()));
        }
        self.grid.validate()?;
        self.agent.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: RunMode,
    pub seed: u64,
    pub steps: u64,
    pub eval_after: Option<u64>,
    pub mean_performance: f64,
    /// Mean over the last [`FINAL_WINDOW`] steps.
    pub final_performance: f64,
    pub total_violations: u64,
    /// Violations before `eval_after` (all of them if learning never stops).
    pub training_violations: u64,
    pub solver_failures: u64,
    pub final_tracked_rules: Option<f64>,
    pub final_tracked_adaptive: Option<f64>,
    /// First step the adaptive policy was applied (hybrid only).
    pub first_switch_step: Option<u64>,
    /// Share of the last [`FINAL_WINDOW`] steps that applied the adaptive policy.
    pub adaptive_share_final: f64,
    pub buffer_len: Option<usize>,
    pub updates: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: RunSummary,
    pub records: Vec<RunRecord>,
    pub bus_count: usize,
}

/// Seed streams are derived from the run seed so the environment profile and
/// the learner never share random numbers.
fn agent_seed(seed: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x5AC
}

pub fn run(config: &RunConfig) -> Result<RunResult, HarnessError> {
    config.validate()?;
    let weights = config.agent.performance_weights()?;
    let mut env = Environment::new(&config.grid, weights, config.seed)?;
    let bus_count = env.grid().bus_count();
    let eval_after = config.effective_eval_after();
    info!(
        "{} run: {} steps, seed {}, eval_after {:?}",
        config.mode.as_str(),
        config.steps,
        config.seed,
        eval_after
    );

    let mut records = Vec::with_capacity(config.steps as usize);
    let mut cumulative = 0u64;
    let mut agent = match config.mode {
        RunMode::RulesOnly => Agent::Rules(RulesPolicy::new(env.grid(), config.agent.droop_step)?),
        RunMode::PureSac => Agent::Sac(Box::new(AdaptivePolicy::new(
            env.grid(),
            config.agent.sac.clone(),
            agent_seed(config.seed),
        )?)),
        RunMode::Hybrid => {
            let mut disc = Discriminator::new(
                RulesPolicy::new(env.grid(), config.agent.droop_step)?,
                AdaptivePolicy::new(env.grid(), config.agent.sac.clone(), agent_seed(config.seed))?,
                WorldModel::new(env.grid(), weights),
                config.agent.pt1_time_constant,
                config.agent.pt1_mode,
            );
            disc.freeze_after = eval_after;
            Agent::Hybrid(Box::new(disc))
        }
    };

    for step in 0..config.steps {
        env.begin_step(step);
        let done = step + 1 == config.steps;
        let frozen = eval_after.is_some_and(|f| step >= f);
        let mut record = match &mut agent {
            Agent::Rules(rules) => {
                let observed = env.state().clone();
                let proposal = rules
                    .propose(observed.node_voltages(), &observed.in_service)
                    .map_err(|e| HarnessError::at_step(step, e.into()))?;
                let out = env.apply(&proposal).map_err(|e| HarnessError::at_step(step, e.into()))?;
                rules
                    .commit(&env.grid().current_setpoints())
                    .map_err(|e| HarnessError::at_step(step, e.into()))?;
                RunRecord {
                    step,
                    mode: config.mode,
                    chosen: PolicyChoice::Rules,
                    projected_perf_rules: None,
                    projected_perf_adaptive: None,
                    tracked_rules: None,
                    tracked_adaptive: None,
                    actual_performance: out.performance,
                    solver_failed: out.solver_failed,
                    sac_warmup: None,
                    buffer_len: None,
                    voltages: out.state.voltages,
                    newly_disconnected: out.newly_disconnected,
                    cumulative_violations: 0,
                }
            }
            Agent::Sac(policy) => {
                let obs = encode_observation(&env.state().voltages);
                let mode = if frozen { Mode::Eval } else { Mode::Train };
                let (proposal, action) =
                    policy.propose(&obs, mode).map_err(|e| HarnessError::at_step(step, e.into()))?;
                let out = env.apply(&proposal).map_err(|e| HarnessError::at_step(step, e.into()))?;
                policy
                    .sac
                    .record(Experience {
                        state: obs,
                        action,
                        reward: out.performance,
                        next_state: encode_observation(&out.state.voltages),
                        done,
                    })
                    .map_err(|e| HarnessError::at_step(step, e.into()))?;
                if !frozen {
                    if let Some(m) = policy.sac.on_step(step) {
                        debug!("step {step}: critic {:.4e} actor {:.4e} entropy {:.3}", m.critic_loss, m.actor_loss, m.entropy);
                    }
                }
                RunRecord {
                    step,
                    mode: config.mode,
                    chosen: PolicyChoice::Adaptive,
                    projected_perf_rules: None,
                    projected_perf_adaptive: None,
                    tracked_rules: None,
                    tracked_adaptive: None,
                    actual_performance: out.performance,
                    solver_failed: out.solver_failed,
                    sac_warmup: Some(step < policy.sac.config().warmup_steps),
                    buffer_len: Some(policy.sac.buffer().len()),
                    voltages: out.state.voltages,
                    newly_disconnected: out.newly_disconnected,
                    cumulative_violations: 0,
                }
            }
            Agent::Hybrid(disc) => {
                let out = disc.step(&mut env, step, done).map_err(|e| HarnessError::at_step(step, e))?;
                if let Some(m) = out.train {
                    debug!("step {step}: critic {:.4e} actor {:.4e} entropy {:.3}", m.critic_loss, m.actor_loss, m.entropy);
                }
                RunRecord {
                    step,
                    mode: config.mode,
                    chosen: out.chosen,
                    projected_perf_rules: Some(out.projected_perf_rules),
                    projected_perf_adaptive: Some(out.projected_perf_adaptive),
                    tracked_rules: Some(out.tracked_rules),
                    tracked_adaptive: Some(out.tracked_adaptive),
                    actual_performance: out.actual_perf,
                    solver_failed: out.solver_failed,
                    sac_warmup: Some(out.warmup),
                    buffer_len: Some(disc.adaptive.sac.buffer().len()),
                    voltages: out.state.voltages,
                    newly_disconnected: out.violations,
                    cumulative_violations: 0,
                }
            }
        };
        cumulative += record.newly_disconnected.len() as u64;
        record.cumulative_violations = cumulative;
        if !record.newly_disconnected.is_empty() {
            info!("step {step}: grid code tripped buses {:?}", record.newly_disconnected);
        }
        records.push(record);
    }

    let summary = summarize(config, eval_after, &records, &agent);
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        write_csv_file(&records, bus_count, &dir.join("run.csv"))?;
        let path = dir.join("summary.json");
        let json = serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::Runtime(e.to_string()))?;
        std::fs::write(&path, json + "\n").map_err(|e| HarnessError::io(&path, e))?;
        let sac = match &agent {
            Agent::Rules(_) => None,
            Agent::Sac(p) => Some(&p.sac),
            Agent::Hybrid(d) => Some(&d.adaptive.sac),
        };
        if let Some(sac) = sac {
            let path = dir.join("policy.ckpt");
            let file = std::fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
            save_checkpoint(sac, std::io::BufWriter::new(file))
                .map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))?;
        }
    }
    Ok(RunResult { summary, records, bus_count })
}

enum Agent {
    Rules(RulesPolicy),
    Sac(Box<AdaptivePolicy>),
    Hybrid(Box<Discriminator>),
}

fn summarize(config: &RunConfig, eval_after: Option<u64>, records: &[RunRecord], agent: &Agent) -> RunSummary {
    let n = records.len().max(1) as f64;
    let tail = &records[records.len().saturating_sub(FINAL_WINDOW as usize)..];
    let tail_len = tail.len().max(1) as f64;
    let last = records.last();
    let (buffer_len, updates) = match agent {
        Agent::Rules(_) => (None, None),
        Agent::Sac(p) => (Some(p.sac.buffer().len()), Some(p.sac.updates())),
        Agent::Hybrid(d) => (Some(d.adaptive.sac.buffer().len()), Some(d.adaptive.sac.updates())),
    };
    RunSummary {
        mode: config.mode,
        seed: config.seed,
        steps: config.steps,
        eval_after,
        mean_performance: records.iter().map(|r| r.actual_performance).sum::<f64>() / n,
        final_performance: tail.iter().map(|r| r.actual_performance).sum::<f64>() / tail_len,
        total_violations: last.map_or(0, |r| r.cumulative_violations),
        training_violations: records
            .iter()
            .filter(|r| eval_after.is_none_or(|f| r.step < f))
            .map(|r| r.newly_disconnected.len() as u64)
            .sum(),
        solver_failures: records.iter().filter(|r| r.solver_failed).count() as u64,
        final_tracked_rules: last.and_then(|r| r.tracked_rules),
        final_tracked_adaptive: last.and_then(|r| r.tracked_adaptive),
        first_switch_step: match config.mode {
            RunMode::Hybrid => records.iter().find(|r| r.chosen == PolicyChoice::Adaptive).map(|r| r.step),
            _ => None,
        },
        adaptive_share_final: tail.iter().filter(|r| r.chosen == PolicyChoice::Adaptive).count() as f64 / tail_len,
        buffer_len,
        updates,
    }
}
