//! Per-gNB communication slicing: resource-block assignment as a
//! discrete decision problem.
//!
//! An action is a row vector with one entry per resource block; entry 0
//! parks the block, entry k hands it to device k. Orthogonality (one
//! block, at most one device) is guaranteed by the encoding itself.
//! A step computes Shannon rates under an equal per-device power split,
//! turns them into M/M/1 sojourn times, and rewards the inverse total
//! delay of a feasible assignment, or a flat penalty otherwise.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{Env, Transition};
use crate::error::ConfigError;
use crate::rng;
use crate::topology::{channel_gain, Topology};

/// Normalization window for log10(gain) in state encodings.
const GAIN_LOG_MIN: f64 = -13.0;
const GAIN_LOG_MAX: f64 = -7.0;

/// Link-budget constants shared by rate computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub tx_power_w: f64,
    pub noise_w_per_rb: f64,
    pub rb_bandwidth_hz: f64,
}

/// Size of the row-vector action space: `(device_count + 1) ^ rb_count`.
/// Errors when the space overflows or exceeds `cap`.
pub fn action_space_size(
    rb_count: usize,
    device_count: usize,
    cap: usize,
) -> Result<usize, ConfigError> {
    let base = device_count as u64 + 1;
    let size = u32::try_from(rb_count)
        .ok()
        .and_then(|rb| base.checked_pow(rb))
        .filter(|&s| s <= cap as u64)
        .ok_or_else(|| {
            ConfigError::new(
                "action_space_cap",
                format!(
                    "action space too large: ({} + 1)^{} exceeds cap {}",
                    device_count, rb_count, cap
                ),
            )
        })?;
    Ok(size as usize)
}

/// RB assignment row vector; entry 0 = idle, k = device k (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommAction {
    pub assignment: Vec<usize>,
}

/// Mixed-radix decode, least-significant digit = RB 0. Bijective with
/// [`encode_action`]. Panics on an out-of-range index.
pub fn decode_action(index: usize, rb_count: usize, device_count: usize) -> CommAction {
    let base = device_count as u128 + 1;
    assert!(
        (index as u128) < base.pow(rb_count as u32),
        "action index {index} out of range for {rb_count} RBs x {device_count} devices"
    );
    let base = device_count + 1;
    let mut rest = index;
    let mut assignment = Vec::with_capacity(rb_count);
    for _ in 0..rb_count {
        assignment.push(rest % base);
        rest /= base;
    }
    CommAction { assignment }
}

pub fn encode_action(action: &CommAction, device_count: usize) -> usize {
    let base = device_count + 1;
    action.assignment.iter().rev().fold(0, |acc, &entry| {
        assert!(entry <= device_count, "assignment entry {entry} out of range");
        acc * base + entry
    })
}

/// Total Shannon rate over a device's allocated blocks. Transmit power
/// splits equally across the device's own blocks, so every block sees
/// the same SNR.
pub fn achievable_rate(gain: f64, rb_indices: &[usize], params: &RadioParams) -> f64 {
    assert!(!rb_indices.is_empty(), "achievable_rate needs at least one RB");
    rate_for_rb_count(gain, rb_indices.len(), params)
}

fn rate_for_rb_count(gain: f64, rb_count: usize, params: &RadioParams) -> f64 {
    let n = rb_count as f64;
    let snr = (params.tx_power_w / n) * gain / params.noise_w_per_rb;
    n * params.rb_bandwidth_hz * (1.0 + snr).log2()
}

/// M/M/1 sojourn time for one device: service rate `mu = rate / size`,
/// mean delay `1 / (mu - lambda)`. Returns infinity when the queue is
/// unstable; callers treat that as infeasibility, not an error.
pub fn comm_delay(rate_bits_per_s: f64, task_size_bits: f64, arrival_rate: f64) -> f64 {
    assert!(rate_bits_per_s > 0.0, "rate must be positive");
    assert!(task_size_bits > 0.0, "task size must be positive");
    assert!(arrival_rate >= 0.0, "arrival rate must be non-negative");
    let service_rate = rate_bits_per_s / task_size_bits;
    if service_rate <= arrival_rate {
        f64::INFINITY
    } else {
        1.0 / (service_rate - arrival_rate)
    }
}

/// Observation for one gNB: current gains and pending task sizes per
/// associated device (size 0 = no pending task this round).
#[derive(Debug, Clone, PartialEq)]
pub struct CommState {
    pub gains: Vec<f64>,
    pub pending_sizes_bits: Vec<u64>,
    pub delay_threshold_s: f64,
    pub rb_available: usize,
    pub step_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommStepOutcome {
    pub reward: f64,
    /// Per device: 0 when it had no pending task, infinity when it was
    /// starved of blocks or its queue is unstable.
    pub per_device_delay_s: Vec<f64>,
    pub feasible: bool,
    pub next_state: CommState,
    pub done: bool,
}

/// Reward breakdown of a single action against a fixed state. Pure;
/// this is what the exhaustive oracle enumerates.
#[derive(Debug, Clone, PartialEq)]
pub struct CommActionEval {
    pub reward: f64,
    pub feasible: bool,
    pub per_device_delay_s: Vec<f64>,
}

/// The slicing environment of one gNB. Stateless: `step` consumes a
/// state and returns the next one.
#[derive(Debug, Clone)]
pub struct CommEnv {
    pub gnb_id: usize,
    base_gains: Vec<f64>,
    rb_count: usize,
    radio: RadioParams,
    arrival_rate: f64,
    delay_threshold_s: f64,
    size_bits_min: u64,
    size_bits_max: u64,
    presence_prob: f64,
    fading: bool,
    penalty: f64,
    episode_length: usize,
    action_space: usize,
}

impl CommEnv {
    /// Builds the environment for one gNB of a topology. Fails when the
    /// action space exceeds the configured cap.
    pub fn for_gnb(
        topology: &Topology,
        gnb_id: usize,
        episode_length: usize,
    ) -> Result<Self, ConfigError> {
        let config = &topology.config;
        let gnb = &topology.gnbs[gnb_id];
        let device_count = gnb.device_ids.len();
        let action_space =
            action_space_size(gnb.rb_count, device_count, config.action_space_cap)?;
        if episode_length == 0 {
            return Err(ConfigError::new("episode_length", "must be >= 1"));
        }
        let mut no_rng = rng::stream(0, "unused");
        let base_gains = gnb
            .device_ids
            .iter()
            .map(|&d| channel_gain(gnb, &topology.devices[d], false, &mut no_rng))
            .collect();
        Ok(Self {
            gnb_id,
            base_gains,
            rb_count: gnb.rb_count,
            radio: RadioParams {
                tx_power_w: config.tx_power_w(),
                noise_w_per_rb: config.noise_w_per_rb(),
                rb_bandwidth_hz: config.rb_bandwidth_hz,
            },
            arrival_rate: config.arrival_rate_tasks_per_s,
            delay_threshold_s: config.delay_threshold_s,
            size_bits_min: config.task_size_bits_min(),
            size_bits_max: config.task_size_bits_max(),
            presence_prob: config.task_presence_prob,
            fading: config.fading_enabled,
            penalty: config.penalty_reward,
            episode_length,
            action_space,
        })
    }

    pub fn device_count(&self) -> usize {
        self.base_gains.len()
    }

    pub fn rb_count(&self) -> usize {
        self.rb_count
    }

    pub fn radio_params(&self) -> &RadioParams {
        &self.radio
    }

    /// Draws a fresh offloading round: one potential task per device
    /// and, with fading enabled, new channel gains.
    fn draw_round(&self, step_index: usize, rng: &mut ChaCha8Rng) -> CommState {
        let n = self.device_count();
        let mut pending_sizes_bits = Vec::with_capacity(n);
        for _ in 0..n {
            // Both draws always happen so that rng streams stay aligned
            // across scenarios that differ only in task parameters.
            let size = rng.gen_range(self.size_bits_min..=self.size_bits_max);
            let present = rng.gen::<f64>() < self.presence_prob;
            pending_sizes_bits.push(if present { size } else { 0 });
        }
        let gains = self
            .base_gains
            .iter()
            .map(|&g| if self.fading { g * rng::exp1(rng) } else { g })
            .collect();
        CommState {
            gains,
            pending_sizes_bits,
            delay_threshold_s: self.delay_threshold_s,
            rb_available: self.rb_count,
            step_index,
        }
    }

    /// Evaluates one action against a state without advancing the
    /// environment: orthogonal decode, rate, M/M/1 delay, feasibility.
    pub fn evaluate_action(&self, state: &CommState, action_index: usize) -> CommActionEval {
        let n = self.device_count();
        assert!(
            action_index < self.action_space,
            "action index {action_index} out of range (space {})",
            self.action_space
        );
        let action = decode_action(action_index, self.rb_count, n);
        let mut rb_per_device = vec![0usize; n];
        for &entry in &action.assignment {
            if entry > 0 {
                rb_per_device[entry - 1] += 1;
            }
        }

        let mut per_device_delay_s = vec![0.0f64; n];
        let mut feasible = true;
        let mut any_pending = false;
        let mut delay_sum = 0.0f64;
        for dev in 0..n {
            let size = state.pending_sizes_bits[dev];
            if size == 0 {
                continue;
            }
            any_pending = true;
            if rb_per_device[dev] == 0 {
                per_device_delay_s[dev] = f64::INFINITY;
                feasible = false;
                delay_sum = f64::INFINITY;
                continue;
            }
            let rate = rate_for_rb_count(state.gains[dev], rb_per_device[dev], &self.radio);
            let delay = comm_delay(rate, size as f64, self.arrival_rate);
            per_device_delay_s[dev] = delay;
            if !delay.is_finite() || delay > state.delay_threshold_s {
                feasible = false;
            }
            delay_sum += delay;
        }

        let reward = if !any_pending {
            0.0
        } else if feasible {
            1.0 / delay_sum
        } else {
            -self.penalty
        };
        CommActionEval {
            reward,
            feasible,
            per_device_delay_s,
        }
    }

    /// One offloading round: score the action, then draw the next
    /// round's tasks and gains. Episodes end after the configured
    /// number of steps.
    pub fn step_outcome(
        &self,
        state: &CommState,
        action_index: usize,
        rng: &mut ChaCha8Rng,
    ) -> CommStepOutcome {
        let eval = self.evaluate_action(state, action_index);
        let next_state = self.draw_round(state.step_index + 1, rng);
        let done = state.step_index + 1 >= self.episode_length;
        CommStepOutcome {
            reward: eval.reward,
            per_device_delay_s: eval.per_device_delay_s,
            feasible: eval.feasible,
            next_state,
            done,
        }
    }
}

impl Env for CommEnv {
    type State = CommState;

    fn reset(&self, rng: &mut ChaCha8Rng) -> CommState {
        self.draw_round(0, rng)
    }

    fn step(&self, state: &CommState, action: usize, rng: &mut ChaCha8Rng) -> Transition<CommState> {
        let outcome = self.step_outcome(state, action, rng);
        let task_delays_s = if outcome.feasible {
            state
                .pending_sizes_bits
                .iter()
                .zip(&outcome.per_device_delay_s)
                .filter(|(&size, _)| size > 0)
                .map(|(_, &d)| d)
                .collect()
        } else {
            Vec::new()
        };
        Transition {
            next_state: outcome.next_state,
            reward: outcome.reward,
            feasible: outcome.feasible,
            done: outcome.done,
            task_delays_s,
        }
    }

    /// Fixed layout: per device (normalized log-gain, normalized task
    /// size), then available-block fraction, then threshold; every
    /// feature clamped to [0, 1].
    fn encode_state(&self, state: &CommState) -> Vec<f64> {
        let mut features = Vec::with_capacity(self.state_dim());
        for dev in 0..self.device_count() {
            let log_gain = state.gains[dev].log10();
            features.push(((log_gain - GAIN_LOG_MIN) / (GAIN_LOG_MAX - GAIN_LOG_MIN)).clamp(0.0, 1.0));
            features.push(
                (state.pending_sizes_bits[dev] as f64 / self.size_bits_max as f64).clamp(0.0, 1.0),
            );
        }
        features.push((state.rb_available as f64 / self.rb_count as f64).clamp(0.0, 1.0));
        features.push(state.delay_threshold_s.clamp(0.0, 1.0));
        features
    }

    fn state_dim(&self) -> usize {
        2 * self.device_count() + 2
    }

    fn action_count(&self) -> usize {
        self.action_space
    }
}
