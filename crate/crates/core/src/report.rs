//! CSV rendering for metrics, evaluations, traces and sweeps.
//!
//! All rendering is string-in, string-out with fixed column sets and
//! shortest-roundtrip float formatting, so identical runs produce
//! byte-identical files. File I/O belongs to callers.

use crate::comm::CommEnv;
use crate::comp::{decode_comp_action, CompEnv};
use crate::ddqn::{argmax, EpisodeMetrics};
use crate::env::{Env, EvalSummary};
use crate::neural::MlpParams;
use crate::rng;

/// Shortest-roundtrip decimal form; infinities render as `inf`.
fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(fmt_f64).unwrap_or_default()
}

pub const METRICS_HEADER: &str = "episode,cum_avg_reward,mean_loss,epsilon";

pub fn metrics_csv(metrics: &[EpisodeMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in metrics {
        out.push_str(&format!(
            "{},{},{},{}\n",
            m.episode,
            fmt_f64(m.cum_avg_reward),
            fmt_opt(m.mean_loss),
            fmt_f64(m.epsilon)
        ));
    }
    out
}

pub const EVAL_HEADER: &str =
    "scope,episodes,mean_reward,mean_delay_s,p95_delay_s,feasibility_rate";

pub fn eval_csv(rows: &[(String, EvalSummary)]) -> String {
    let mut out = String::from(EVAL_HEADER);
    out.push('\n');
    for (scope, s) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            scope,
            s.episodes,
            fmt_f64(s.mean_reward),
            fmt_opt(s.mean_delay_s),
            fmt_opt(s.p95_delay_s),
            fmt_f64(s.feasibility_rate)
        ));
    }
    out
}

pub const ORACLE_HEADER: &str =
    "policy,scope,episodes,mean_reward,mean_delay_s,p95_delay_s,feasibility_rate";

pub fn oracle_csv(rows: &[(String, String, EvalSummary)]) -> String {
    let mut out = String::from(ORACLE_HEADER);
    out.push('\n');
    for (policy, scope, s) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            policy,
            scope,
            s.episodes,
            fmt_f64(s.mean_reward),
            fmt_opt(s.mean_delay_s),
            fmt_opt(s.p95_delay_s),
            fmt_f64(s.feasibility_rate)
        ));
    }
    out
}

pub const COMM_TRACE_HEADER: &str = "step,action_index,feasible,reward,delay_sum_s";

/// Greedy rollout of one episode against a trained network, one row per
/// step. The delay sum covers served tasks and renders as `inf` when
/// the step was infeasible because a device starved or destabilized.
pub fn comm_trace_csv(env: &CommEnv, qnet: &MlpParams, seed: u64) -> String {
    let mut out = String::from(COMM_TRACE_HEADER);
    out.push('\n');
    let mut env_rng = rng::stream(seed, "trace/env");
    let mut state = env.reset(&mut env_rng);
    let mut step = 0usize;
    loop {
        let action = argmax(&qnet.q_values(&env.encode_state(&state)));
        let outcome = env.step_outcome(&state, action, &mut env_rng);
        let delay_sum: f64 = state
            .pending_sizes_bits
            .iter()
            .zip(&outcome.per_device_delay_s)
            .filter(|(&size, _)| size > 0)
            .map(|(_, &d)| d)
            .sum();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            step,
            action,
            outcome.feasible,
            fmt_f64(outcome.reward),
            fmt_f64(delay_sum)
        ));
        step += 1;
        if outcome.done {
            break;
        }
        state = outcome.next_state;
    }
    out
}

pub const COMP_TRACE_HEADER: &str = "round,task_id,server,cores,placement,delay_s,reward";

/// Greedy rollout of `rounds` computation rounds, one row per sub-step.
pub fn comp_trace_csv(env: &CompEnv, qnet: &MlpParams, rounds: usize, seed: u64) -> String {
    let mut out = String::from(COMP_TRACE_HEADER);
    out.push('\n');
    let mut env_rng = rng::stream(seed, "trace/env");
    for round in 0..rounds {
        let mut state = env.reset(&mut env_rng);
        loop {
            if state.round_complete() {
                break;
            }
            let head = state.head_task().expect("round running");
            let task_id = head.task.id;
            let action = argmax(&qnet.q_values(&env.encode_state(&state)));
            let decoded = decode_comp_action(action, env.server_count(), env.cores_per_mec());
            let origin = head.origin_server;
            let outcome = env.step_outcome(&state, action, &mut env_rng);
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                round,
                task_id,
                decoded.server_index,
                decoded.core_count,
                if decoded.server_index == origin {
                    "local"
                } else {
                    "remote"
                },
                fmt_opt(outcome.task_delay_s),
                fmt_f64(outcome.reward)
            ));
            if outcome.done {
                break;
            }
            state = outcome.next_state;
        }
    }
    out
}

/// One cell of a delay sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub device_count: usize,
    pub task_size_mb: f64,
    pub mean_delay_s: Option<f64>,
    pub p95_delay_s: Option<f64>,
    pub feasibility_rate: f64,
}

pub const SWEEP_HEADER: &str =
    "device_count,task_size_mb,mean_delay_s,p95_delay_s,feasibility_rate";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.device_count,
            fmt_f64(r.task_size_mb),
            fmt_opt(r.mean_delay_s),
            fmt_opt(r.p95_delay_s),
            fmt_f64(r.feasibility_rate)
        ));
    }
    out
}
