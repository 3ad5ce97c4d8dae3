//! MEC-group computation slicing: per-task server selection and CPU
//! core allocation.
//!
//! One episode is one offloading round: a task per device, visited in
//! round-robin order over the servers. Each sub-step places the head
//! task on a server with a core budget; cores stay reserved until the
//! round ends. Intermediate rewards are zero, the final sub-step pays
//! the inverse of the round's total delay, and any infeasible sub-step
//! ends the round with a penalty.

use rand_chacha::ChaCha8Rng;

use crate::env::{Env, Transition};
use crate::error::ConfigError;
use crate::topology::{sample_task, Task, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompAction {
    pub server_index: usize,
    /// Number of cores to reserve, in `1..=cores_per_mec`.
    pub core_count: usize,
}

/// Flat action index: `server_index * cores_per_mec + (core_count - 1)`.
pub fn decode_comp_action(index: usize, server_count: usize, cores_per_mec: usize) -> CompAction {
    assert!(
        index < server_count * cores_per_mec,
        "action index {index} out of range ({server_count} servers x {cores_per_mec} cores)"
    );
    CompAction {
        server_index: index / cores_per_mec,
        core_count: index % cores_per_mec + 1,
    }
}

pub fn encode_comp_action(action: &CompAction, cores_per_mec: usize) -> usize {
    assert!(
        action.core_count >= 1 && action.core_count <= cores_per_mec,
        "core count {} out of range",
        action.core_count
    );
    action.server_index * cores_per_mec + action.core_count - 1
}

/// Execution time: required cycles over allocated capacity.
pub fn computation_delay(required_cycles: u64, core_count: usize, core_capacity: f64) -> f64 {
    assert!(core_count >= 1, "at least one core required");
    assert!(core_capacity > 0.0, "capacity must be positive");
    required_cycles as f64 / (core_count as f64 * core_capacity)
}

/// Round-trip backhaul delay for forwarding a task to a different
/// server: `2 * (size / rate + propagation)`. Local execution adds
/// nothing; callers skip the call when origin and target coincide.
pub fn forwarding_rtt(size_bits: u64, backhaul_rate_bits_per_s: f64, prop_delay_s: f64) -> f64 {
    2.0 * (size_bits as f64 / backhaul_rate_bits_per_s + prop_delay_s)
}

/// One task of the current round, tagged with the MEC server of the
/// gNB it arrived through.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTask {
    pub task: Task,
    pub origin_server: usize,
}

/// Observation of the sharing group mid-round.
#[derive(Debug, Clone, PartialEq)]
pub struct CompState {
    pub free_cores: Vec<usize>,
    /// Unassigned tasks of the current round per origin server
    /// (the head task counts toward its origin's buffer).
    pub buffer_lengths: Vec<usize>,
    /// All tasks of the round in decision order.
    pub round_tasks: Vec<RoundTask>,
    /// Index of the task being decided; equals `round_tasks.len()` once
    /// the round is over.
    pub head: usize,
    /// Delays of the round's already-placed tasks.
    pub logged_delays_s: Vec<f64>,
}

impl CompState {
    pub fn head_task(&self) -> Option<&RoundTask> {
        self.round_tasks.get(self.head)
    }

    pub fn remaining_tasks_in_round(&self) -> usize {
        self.round_tasks.len() - self.head
    }

    pub fn round_complete(&self) -> bool {
        self.head >= self.round_tasks.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompStepOutcome {
    /// Zero for intermediate sub-steps; `1 / sum(delays)` when the last
    /// task lands; negated penalty on an infeasible sub-step.
    pub reward: f64,
    /// Delay the attempted placement would incur; `None` only when the
    /// round was already over.
    pub task_delay_s: Option<f64>,
    pub feasible: bool,
    pub next_state: CompState,
    pub done: bool,
}

/// The sharing group's slicing environment.
#[derive(Debug, Clone)]
pub struct CompEnv {
    server_count: usize,
    cores_per_mec: usize,
    core_capacity: f64,
    /// (device id, origin server) in round-robin order over servers.
    round_order: Vec<(usize, usize)>,
    devices: Vec<crate::topology::EndDevice>,
    config: crate::topology::ScenarioConfig,
    penalty: f64,
}

impl CompEnv {
    /// Builds the environment for a topology's single sharing group.
    pub fn for_sharing_group(topology: &Topology) -> Result<Self, ConfigError> {
        let config = &topology.config;
        config.validate()?;
        let server_count = topology.mecs.len();
        // Interleave device lists so consecutive tasks originate from
        // consecutive servers.
        let max_per_gnb = topology
            .gnbs
            .iter()
            .map(|g| g.device_ids.len())
            .max()
            .unwrap_or(0);
        let mut round_order = Vec::with_capacity(topology.devices.len());
        for slot in 0..max_per_gnb {
            for gnb in &topology.gnbs {
                if let Some(&device_id) = gnb.device_ids.get(slot) {
                    round_order.push((device_id, gnb.mec_id));
                }
            }
        }
        Ok(Self {
            server_count,
            cores_per_mec: config.cores_per_mec,
            core_capacity: config.core_capacity_cycles_per_s,
            round_order,
            devices: topology.devices.clone(),
            config: config.clone(),
            penalty: config.penalty_reward,
        })
    }

    pub fn server_count(&self) -> usize {
        self.server_count
    }

    pub fn cores_per_mec(&self) -> usize {
        self.cores_per_mec
    }

    pub fn core_capacity(&self) -> f64 {
        self.core_capacity
    }

    pub fn round_size(&self) -> usize {
        self.round_order.len()
    }

    /// Delay of placing `task` on `server` with `cores` cores: pure
    /// computation time plus backhaul round trip when remote.
    pub fn placement_delay(&self, task: &RoundTask, server: usize, cores: usize) -> f64 {
        let compute = computation_delay(task.task.required_cycles, cores, self.core_capacity);
        if server == task.origin_server {
            compute
        } else {
            compute
                + forwarding_rtt(
                    task.task.size_bits,
                    self.config.backhaul_rate_bits_per_s,
                    self.config.backhaul_prop_delay_s,
                )
        }
    }

    pub fn step_outcome(
        &self,
        state: &CompState,
        action_index: usize,
        _rng: &mut ChaCha8Rng,
    ) -> CompStepOutcome {
        if state.round_complete() {
            // Stepping a finished round is a terminal no-op.
            return CompStepOutcome {
                reward: 0.0,
                task_delay_s: None,
                feasible: true,
                next_state: state.clone(),
                done: true,
            };
        }
        let action = decode_comp_action(action_index, self.server_count, self.cores_per_mec);
        let head = state.head_task().expect("round not complete");
        let delay = self.placement_delay(head, action.server_index, action.core_count);
        let enough_cores = action.core_count <= state.free_cores[action.server_index];
        let within_threshold = delay <= head.task.delay_threshold_s;

        if !(enough_cores && within_threshold) {
            let mut next_state = state.clone();
            next_state.head = next_state.round_tasks.len();
            return CompStepOutcome {
                reward: -self.penalty,
                task_delay_s: Some(delay),
                feasible: false,
                next_state,
                done: true,
            };
        }

        let mut next_state = state.clone();
        next_state.free_cores[action.server_index] -= action.core_count;
        next_state.buffer_lengths[head.origin_server] -= 1;
        next_state.logged_delays_s.push(delay);
        next_state.head += 1;

        let done = next_state.round_complete();
        let reward = if done {
            1.0 / next_state.logged_delays_s.iter().sum::<f64>()
        } else {
            0.0
        };
        CompStepOutcome {
            reward,
            task_delay_s: Some(delay),
            feasible: true,
            next_state,
            done,
        }
    }
}

impl Env for CompEnv {
    type State = CompState;

    /// Draws one task per device and opens the round with all cores
    /// free. A zero-device topology yields an already-complete round.
    fn reset(&self, rng: &mut ChaCha8Rng) -> CompState {
        let mut round_tasks = Vec::with_capacity(self.round_order.len());
        let mut buffer_lengths = vec![0usize; self.server_count];
        for (slot, &(device_id, origin_server)) in self.round_order.iter().enumerate() {
            let task = sample_task(&self.devices[device_id], slot as u64, &self.config, rng);
            buffer_lengths[origin_server] += 1;
            round_tasks.push(RoundTask {
                task,
                origin_server,
            });
        }
        CompState {
            free_cores: vec![self.cores_per_mec; self.server_count],
            buffer_lengths,
            round_tasks,
            head: 0,
            logged_delays_s: Vec::new(),
        }
    }

    fn step(&self, state: &CompState, action: usize, rng: &mut ChaCha8Rng) -> Transition<CompState> {
        let outcome = self.step_outcome(state, action, rng);
        let task_delays_s = match (outcome.feasible, outcome.task_delay_s) {
            (true, Some(d)) => vec![d],
            _ => Vec::new(),
        };
        Transition {
            next_state: outcome.next_state,
            reward: outcome.reward,
            feasible: outcome.feasible,
            done: outcome.done,
            task_delays_s,
        }
    }

    /// Layout: free-core fraction per server, buffer length per server
    /// normalized by the round size, head-task size and cycles
    /// normalized by their maxima, delay threshold, origin one-hot.
    fn encode_state(&self, state: &CompState) -> Vec<f64> {
        let round = state.round_tasks.len().max(1) as f64;
        let mut features = Vec::with_capacity(self.state_dim());
        for s in 0..self.server_count {
            features.push(state.free_cores[s] as f64 / self.cores_per_mec as f64);
        }
        for s in 0..self.server_count {
            features.push(state.buffer_lengths[s] as f64 / round);
        }
        let max_bits = self.config.task_size_bits_max() as f64;
        let max_cycles = max_bits * self.config.cycles_per_bit as f64;
        match state.head_task() {
            Some(head) => {
                features.push(head.task.size_bits as f64 / max_bits);
                features.push(head.task.required_cycles as f64 / max_cycles);
                features.push(head.task.delay_threshold_s.clamp(0.0, 1.0));
                for s in 0..self.server_count {
                    features.push(if s == head.origin_server { 1.0 } else { 0.0 });
                }
            }
            None => {
                features.extend(std::iter::repeat(0.0).take(3 + self.server_count));
            }
        }
        features
    }

    fn state_dim(&self) -> usize {
        3 * self.server_count + 3
    }

    fn action_count(&self) -> usize {
        self.server_count * self.cores_per_mec
    }
}
