//! Common surface shared by the two slicing environments.
//!
//! Environments are stateless step functions: the caller holds the
//! state and passes it in, which keeps exhaustive action enumeration
//! trivial. The policy and environment draw from separate streams, so
//! policies that consume different amounts of randomness still visit
//! identical state sequences for a given seed.

use rand_chacha::ChaCha8Rng;

use crate::rng;

/// One environment step.
#[derive(Debug, Clone)]
pub struct Transition<S> {
    pub next_state: S,
    pub reward: f64,
    pub feasible: bool,
    pub done: bool,
    /// Delays of tasks actually served by this step, for statistics.
    /// Empty on infeasible steps.
    pub task_delays_s: Vec<f64>,
}

pub trait Env {
    type State: Clone;

    fn reset(&self, rng: &mut ChaCha8Rng) -> Self::State;
    fn step(&self, state: &Self::State, action: usize, rng: &mut ChaCha8Rng)
        -> Transition<Self::State>;
    fn encode_state(&self, state: &Self::State) -> Vec<f64>;
    fn state_dim(&self) -> usize;
    fn action_count(&self) -> usize;
}

/// Aggregate statistics of a batch of policy rollouts.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub episodes: usize,
    pub steps: usize,
    /// Mean episode return (sum of step rewards per episode).
    pub mean_reward: f64,
    /// Mean over all served-task delays; `None` when no task completed.
    pub mean_delay_s: Option<f64>,
    /// Nearest-rank 95th percentile of served-task delays.
    pub p95_delay_s: Option<f64>,
    /// Fraction of steps whose action was feasible.
    pub feasibility_rate: f64,
    pub total_tasks: usize,
}

/// Runs `episodes` rollouts of `policy` and aggregates rewards, delays
/// and feasibility. Deterministic for a fixed seed.
pub fn rollout<E: Env>(
    env: &E,
    mut policy: impl FnMut(&E, &E::State, &mut ChaCha8Rng) -> usize,
    episodes: usize,
    seed: u64,
) -> EvalSummary {
    let mut env_rng = rng::stream(seed, "rollout/env");
    let mut policy_rng = rng::stream(seed, "rollout/policy");

    let mut reward_total = 0.0;
    let mut steps = 0usize;
    let mut feasible_steps = 0usize;
    let mut delays: Vec<f64> = Vec::new();

    for _ in 0..episodes {
        let mut state = env.reset(&mut env_rng);
        loop {
            let action = policy(env, &state, &mut policy_rng);
            let tr = env.step(&state, action, &mut env_rng);
            reward_total += tr.reward;
            steps += 1;
            if tr.feasible {
                feasible_steps += 1;
            }
            delays.extend_from_slice(&tr.task_delays_s);
            if tr.done {
                break;
            }
            state = tr.next_state;
        }
    }

    delays.sort_by(|a, b| a.partial_cmp(b).expect("finite delays"));
    let mean_delay_s = if delays.is_empty() {
        None
    } else {
        Some(delays.iter().sum::<f64>() / delays.len() as f64)
    };
    let p95_delay_s = if delays.is_empty() {
        None
    } else {
        let idx = (0.95 * delays.len() as f64).ceil() as usize;
        Some(delays[idx.saturating_sub(1).min(delays.len() - 1)])
    };

    EvalSummary {
        episodes,
        steps,
        mean_reward: if episodes == 0 {
            0.0
        } else {
            reward_total / episodes as f64
        },
        mean_delay_s,
        p95_delay_s,
        feasibility_rate: if steps == 0 {
            0.0
        } else {
            feasible_steps as f64 / steps as f64
        },
        total_tasks: delays.len(),
    }
}
