//! Per-step arbitration between the droop rules policy and the adaptive
//! (SAC) policy.
//!
//! Both proposals are scored by the world model every step. The scores are
//! smoothed by a first-order lag per policy and the policy with the strictly
//! higher smoothed score is applied; ties go to the rules policy. Every step
//! hands three experiences to the learner: the two projected outcomes and
//! the one actually observed.

use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::grid::{GridError, GridState, SetpointProposal};
use crate::policies::{
    encode_observation, AdaptivePolicy, Experience, Mode, PolicyError, RulesPolicy, TrainMetrics,
};
use crate::worldmodel::WorldModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pt1Mode {
    /// Fixed time constant: `y + (u − y) / T`.
    Lag,
    /// `T` replaced by the number of samples seen, i.e. a running mean.
    RunningMean,
}

/// Smoothed performance of one policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedEstimate {
    pub value: f64,
    pub update_count: u64,
    pub time_constant: f64,
    pub mode: Pt1Mode,
}

impl TrackedEstimate {
    pub fn new(time_constant: f64, mode: Pt1Mode) -> Self {
        assert!(time_constant >= 1.0, "pt1 time constant must be at least one step");
        Self { value: 0.0, update_count: 0, time_constant, mode }
    }
}

/// First update copies `u`; later ones move `1/T` of the way toward it.
pub fn pt1_update(est: TrackedEstimate, u: f64) -> TrackedEstimate {
    let value = if est.update_count == 0 {
        u
    } else {
        let t = match est.mode {
            Pt1Mode::Lag => est.time_constant,
            Pt1Mode::RunningMean => (est.update_count + 1) as f64,
        };
        est.value + (u - est.value) / t
    };
    TrackedEstimate { value, update_count: est.update_count + 1, ..est }
}

/// Number of lag updates a tracker fed a constant `delta` above its current
/// value needs to strictly exceed a competitor parked `lead` above that same
/// value: the smallest `n` with `(1 − (1 − 1/T)^n)·delta > lead`. `None` if
/// it never does.
pub fn switch_latency_bound(lead: f64, delta: f64, time_constant: f64) -> Option<u64> {
    if !(delta > lead) {
        return None;
    }
    if lead < 0.0 || time_constant <= 1.0 {
        return Some(1);
    }
    let keep = 1.0 - 1.0 / time_constant;
    // (1 - keep^n) * delta > lead  <=>  keep^n < 1 - lead / delta
    let target = 1.0 - lead / delta;
    let mut n = (target.ln() / keep.ln()).floor().max(1.0) as u64;
    // the closed form can be off by one near the boundary
    while n > 1 && (1.0 - keep.powi((n - 1) as i32)) * delta > lead {
        n -= 1;
    }
    while (1.0 - keep.powi(n as i32)) * delta <= lead {
        n += 1;
    }
    Some(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyChoice {
    Rules,
    Adaptive,
}

impl PolicyChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyChoice::Rules => "rules",
            PolicyChoice::Adaptive => "adaptive",
        }
    }
}

/// Adaptive only when strictly ahead.
pub fn select(tracked_rules: f64, tracked_adaptive: f64) -> PolicyChoice {
    if tracked_adaptive > tracked_rules {
        PolicyChoice::Adaptive
    } else {
        PolicyChoice::Rules
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StepError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub step: u64,
    pub chosen: PolicyChoice,
    pub proposal_rules: SetpointProposal,
    pub proposal_adaptive: SetpointProposal,
    pub projected_perf_rules: f64,
    pub projected_perf_adaptive: f64,
    pub tracked_rules: f64,
    pub tracked_adaptive: f64,
    pub actual_perf: f64,
    pub state: GridState,
    /// Bus ids tripped this step.
    pub violations: Vec<usize>,
    pub solver_failed: bool,
    pub warmup: bool,
    pub train: Option<TrainMetrics>,
}

/// The hybrid agent.
#[derive(Debug, Clone)]
pub struct Discriminator {
    pub rules: RulesPolicy,
    pub adaptive: AdaptivePolicy,
    pub world: WorldModel,
    tracked_rules: TrackedEstimate,
    tracked_adaptive: TrackedEstimate,
    /// Learning and exploration stop from this step on.
    pub freeze_after: Option<u64>,
}

impl Discriminator {
    pub fn new(
        rules: RulesPolicy,
        adaptive: AdaptivePolicy,
        world: WorldModel,
        time_constant: f64,
        mode: Pt1Mode,
    ) -> Self {
        Self {
            rules,
            adaptive,
            world,
            tracked_rules: TrackedEstimate::new(time_constant, mode),
            tracked_adaptive: TrackedEstimate::new(time_constant, mode),
            freeze_after: None,
        }
    }

    pub fn tracked(&self) -> (TrackedEstimate, TrackedEstimate) {
        (self.tracked_rules, self.tracked_adaptive)
    }

    /// Runs one decision cycle against `env`, which must already be at `step`.
    pub fn step(&mut self, env: &mut Environment, step: u64, done: bool) -> Result<StepOutcome, StepError> {
        let frozen = self.freeze_after.is_some_and(|f| step >= f);
        let observed = env.state().clone();
        let obs = encode_observation(&observed.voltages);

        let proposal_rules = self.rules.propose(observed.node_voltages(), &observed.in_service)?;
        let mode = if frozen { Mode::Eval } else { Mode::Train };
        let (proposal_adaptive, action_adaptive) = self.adaptive.propose(&obs, mode)?;

        self.world.synchronize(env.grid(), &observed);
        let projected_rules = self.world.project(&proposal_rules);
        let projected_adaptive = self.world.project(&proposal_adaptive);

        self.tracked_rules = pt1_update(self.tracked_rules, projected_rules.performance);
        self.tracked_adaptive = pt1_update(self.tracked_adaptive, projected_adaptive.performance);
        let chosen = select(self.tracked_rules.value, self.tracked_adaptive.value);

        let applied = match chosen {
            PolicyChoice::Rules => &proposal_rules,
            PolicyChoice::Adaptive => &proposal_adaptive,
        };
        let outcome = env.apply(applied)?;

        let action_rules = self.adaptive.map.to_action(&proposal_rules)?;
        let action_chosen = match chosen {
            PolicyChoice::Rules => action_rules.clone(),
            PolicyChoice::Adaptive => action_adaptive.clone(),
        };
        let experiences = [
            (action_rules, projected_rules.performance, &projected_rules.state),
            (action_adaptive, projected_adaptive.performance, &projected_adaptive.state),
            (action_chosen, outcome.performance, &outcome.state),
        ];
        for (action, reward, next) in experiences {
            self.adaptive.sac.record(Experience {
                state: obs.clone(),
                action,
                reward,
                next_state: encode_observation(&next.voltages),
                done,
            })?;
        }

        self.rules.commit(&env.grid().current_setpoints())?;
        let train = if frozen { None } else { self.adaptive.sac.on_step(step) };

        Ok(StepOutcome {
            step,
            chosen,
            proposal_rules,
            proposal_adaptive,
            projected_perf_rules: projected_rules.performance,
            projected_perf_adaptive: projected_adaptive.performance,
            tracked_rules: self.tracked_rules.value,
            tracked_adaptive: self.tracked_adaptive.value,
            actual_perf: outcome.performance,
            state: outcome.state,
            violations: outcome.newly_disconnected,
            solver_failed: outcome.solver_failed,
            warmup: step < self.adaptive.sac.config().warmup_steps,
            train,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridConfig;
    use crate::policies::SacConfig;
    use crate::reward::PerformanceWeights;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn hybrid(seed: u64) -> (Environment, Discriminator) {
        let weights = PerformanceWeights::default();
        let env = Environment::new(&GridConfig::default(), weights, seed).unwrap();
        let disc = Discriminator::new(
            RulesPolicy::new(env.grid(), 0.1).unwrap(),
            AdaptivePolicy::new(env.grid(), SacConfig::default(), seed).unwrap(),
            WorldModel::new(env.grid(), weights),
            10.0,
            Pt1Mode::Lag,
        );
        (env, disc)
    }

    #[test]
    fn each_step_adds_three_experiences() {
        let (mut env, mut disc) = hybrid(1);
        for step in 0..70 {
            env.begin_step(step);
            let out = disc.step(&mut env, step, false).unwrap();
            assert_eq!(disc.adaptive.sac.buffer().len(), 3 * (step as usize + 1));
            assert_eq!(out.warmup, step < 50);
            assert_eq!(out.train.is_some(), step >= 50 && (step - 50) % 5 == 0);
            let applied = match out.chosen {
                PolicyChoice::Rules => &out.proposal_rules,
                PolicyChoice::Adaptive => &out.proposal_adaptive,
            };
            assert_eq!(&env.grid().project(applied), &env.grid().current_setpoints());
        }
        let last: Vec<_> = disc.adaptive.sac.buffer().iter().rev().take(3).collect();
        assert!(last.iter().all(|e| !e.done));
    }

    #[test]
    fn falls_back_to_rules_when_adaptive_projects_zero() {
        let (mut env, mut disc) = hybrid(2);
        // a deterministic adaptive policy that maxes out every load: unsolvable
        disc.freeze_after = Some(0);
        let actor = disc.adaptive.sac.actor_mut();
        let params = actor.params_mut();
        params.fill(0.0);
        let outputs = 2 * 56;
        let bias = params.len() - outputs;
        for load in (0..28).step_by(2) {
            params[bias + 2 * load] = 10.0;
        }
        for step in 0..40 {
            env.begin_step(step);
            let out = disc.step(&mut env, step, step == 39).unwrap();
            assert_eq!(out.projected_perf_adaptive, 0.0);
            assert_eq!(out.chosen, PolicyChoice::Rules);
            assert!(out.violations.is_empty());
            assert!(out.train.is_none());
        }
        assert!(disc.adaptive.sac.buffer().iter().rev().take(3).all(|e| e.done));
        assert_eq!(disc.adaptive.sac.updates(), 0);
    }

    fn lag(t: f64) -> TrackedEstimate {
        TrackedEstimate::new(t, Pt1Mode::Lag)
    }

    #[test]
    fn first_update_copies_input() {
        assert_eq!(pt1_update(lag(10.0), 0.7).value, 0.7);
        assert_eq!(pt1_update(TrackedEstimate::new(3.0, Pt1Mode::RunningMean), 0.7).value, 0.7);
    }

    #[test]
    fn lag_arithmetic() {
        let est = TrackedEstimate { value: 0.0, update_count: 1, time_constant: 2.0, mode: Pt1Mode::Lag };
        assert_eq!(pt1_update(est, 1.0).value, 0.5);
        for t in [1.0, 2.0, 10.0, 50.0] {
            let est = TrackedEstimate { value: 0.5, update_count: 4, time_constant: t, mode: Pt1Mode::Lag };
            assert_eq!(pt1_update(est, 0.5).value, 0.5);
        }
    }

    #[test]
    fn running_mean_mode_averages() {
        let mut est = TrackedEstimate::new(10.0, Pt1Mode::RunningMean);
        for u in [0.2, 0.4, 0.9] {
            est = pt1_update(est, u);
        }
        assert_abs_diff_eq!(est.value, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn selection_prefers_rules_on_ties() {
        assert_eq!(select(0.8, 0.6), PolicyChoice::Rules);
        assert_eq!(select(0.7, 0.7), PolicyChoice::Rules);
        assert_eq!(select(0.6, 0.8), PolicyChoice::Adaptive);
    }

    /// Independent oracle: iterate the filter until the tracker passes the competitor.
    fn latency_by_iteration(lead: f64, delta: f64, t: f64) -> Option<u64> {
        let start = 0.3;
        let competitor = start + lead;
        let mut est = TrackedEstimate { value: start, update_count: 1, time_constant: t, mode: Pt1Mode::Lag };
        for n in 1..=100_000u64 {
            est = pt1_update(est, start + delta);
            if est.value > competitor {
                return Some(n);
            }
        }
        None
    }

    #[test]
    fn switch_latency_examples() {
        assert_eq!(switch_latency_bound(0.0, 0.2, 10.0), Some(1));
        assert_eq!(switch_latency_bound(0.1, 0.2, 10.0), Some(7));
        assert_eq!(latency_by_iteration(0.1, 0.2, 10.0), Some(7));
        for lead in [0.0, 0.05, 0.15] {
            assert_eq!(switch_latency_bound(lead, 0.2, 1.0), Some(1));
        }
        assert_eq!(switch_latency_bound(0.3, 0.2, 10.0), None);
    }

    proptest! {
        #[test]
        fn latency_matches_iteration(lead in 0.0f64..0.5, extra in 0.01f64..0.5, t in 1.0f64..40.0) {
            let delta = lead + extra;
            prop_assert_eq!(switch_latency_bound(lead, delta, t), latency_by_iteration(lead, delta, t));
        }

        #[test]
        fn lag_stays_in_unit_interval(inputs in prop::collection::vec(0.0f64..=1.0, 1..200), t in 1.0f64..50.0) {
            let mut est = lag(t);
            for u in inputs {
                est = pt1_update(est, u);
                prop_assert!((0.0..=1.0).contains(&est.value));
            }
        }

        /// Selections depend only on the order of the tracked values, so a
        /// common positive scale on the inputs leaves them unchanged.
        #[test]
        fn selection_invariant_under_scaling(
            trace in prop::collection::vec((0u8..=8, 0u8..=8), 1..100),
            k in -4i32..4,
            t in 1u8..20,
        ) {
            let scale = 2f64.powi(k);
            let run = |c: f64| {
                let (mut r, mut a) = (lag(t as f64), lag(t as f64));
                trace.iter().map(|&(ur, ua)| {
                    r = pt1_update(r, c * ur as f64 / 8.0);
                    a = pt1_update(a, c * ua as f64 / 8.0);
                    select(r.value, a.value)
                }).collect::<Vec<_>>()
            };
            prop_assert_eq!(run(1.0), run(scale));
        }

        #[test]
        fn selection_invariant_under_generic_scaling(
            trace in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..100),
            c in 0.1f64..10.0,
        ) {
            let run = |c: f64| {
                let (mut r, mut a) = (lag(10.0), lag(10.0));
                trace.iter().map(|&(ur, ua)| {
                    r = pt1_update(r, c * ur);
                    a = pt1_update(a, c * ua);
                    select(r.value, a.value)
                }).collect::<Vec<_>>()
            };
            prop_assert_eq!(run(1.0), run(c));
        }
    }
}
