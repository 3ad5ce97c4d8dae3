//! Double deep Q-network agent: epsilon-greedy exploration, uniform
//! replay, and a periodically synced target network. The main network
//! picks the bootstrap action, the target network scores it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{rollout, Env, EvalSummary};
use crate::error::ConfigError;
use crate::neural::{adam_step, mse_loss_and_grad, AdamState, Gradients, MlpParams};
use crate::rng;

/// One stored interaction, with states already encoded as feature
/// vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Ring buffer over experiences: oldest entries are overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    storage: Vec<Experience>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        Self {
            storage: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            cursor: 0,
        }
    }

    pub fn push(&mut self, experience: Experience) {
        if self.storage.len() < self.capacity {
            self.storage.push(experience);
        } else {
            self.storage[self.cursor] = experience;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, index: usize) -> &Experience {
        &self.storage[index]
    }

    /// Uniform sample without replacement. `None` while the buffer
    /// holds fewer than `batch_size` experiences - the caller skips
    /// training for that step.
    pub fn sample(&self, batch_size: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Experience>> {
        if self.storage.len() < batch_size {
            return None;
        }
        // Partial Fisher-Yates over the index range.
        let mut indices: Vec<usize> = (0..self.storage.len()).collect();
        for i in 0..batch_size {
            let j = rng.gen_range(i..indices.len());
            indices.swap(i, j);
        }
        Some(
            indices[..batch_size]
                .iter()
                .map(|&i| self.storage[i].clone())
                .collect(),
        )
    }
}

/// Training hyper-parameters. `comm_default` and `comp_default` carry
/// the per-level learning rate and mini-batch size (0.01/64 and
/// 0.001/256); the rest are shared defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentHyper {
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    /// Multiplicative decay applied once per episode.
    pub epsilon_decay: f64,
    pub target_sync_steps: usize,
    pub warmup_experiences: usize,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub episodes: usize,
    pub episode_length: usize,
    pub hidden_dims: Vec<usize>,
}

impl Default for AgentHyper {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_min: 0.01,
            epsilon_decay: 0.995,
            target_sync_steps: 100,
            warmup_experiences: 1000,
            buffer_capacity: 100_000,
            batch_size: 64,
            learning_rate: 0.01,
            episodes: 300,
            episode_length: 200,
            hidden_dims: vec![256, 256],
        }
    }
}

impl AgentHyper {
    pub fn comm_default() -> Self {
        Self::default()
    }

    pub fn comp_default() -> Self {
        Self {
            batch_size: 256,
            learning_rate: 0.001,
            episodes: 2000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(ConfigError::new("gamma", "must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start)
            || !(0.0..=1.0).contains(&self.epsilon_min)
            || self.epsilon_min > self.epsilon_start
        {
            return Err(ConfigError::new(
                "epsilon_min",
                "need 0 <= epsilon_min <= epsilon_start <= 1",
            ));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err(ConfigError::new("epsilon_decay", "must be in (0, 1]"));
        }
        if self.target_sync_steps == 0 {
            return Err(ConfigError::new("target_sync_steps", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(ConfigError::new("batch_size", "must be >= 1"));
        }
        if self.batch_size > self.buffer_capacity {
            return Err(ConfigError::new(
                "batch_size",
                "must not exceed buffer_capacity",
            ));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(ConfigError::new("learning_rate", "must be finite and > 0"));
        }
        if self.episode_length == 0 {
            return Err(ConfigError::new("episode_length", "must be >= 1"));
        }
        if self.hidden_dims.iter().any(|&d| d == 0) {
            return Err(ConfigError::new("hidden_dims", "all dims must be >= 1"));
        }
        Ok(())
    }
}

/// Exploration rate for a 0-based episode index: exponential decay
/// floored at `epsilon_min`.
pub fn epsilon_for_episode(hyper: &AgentHyper, episode: usize) -> f64 {
    (hyper.epsilon_start * hyper.epsilon_decay.powi(episode as i32)).max(hyper.epsilon_min)
}

/// First index of the maximum value (ties broken toward the lowest
/// index).
pub fn argmax(values: &[f64]) -> usize {
    assert!(!values.is_empty(), "argmax of empty slice");
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy action selection over a network's Q-values.
pub fn select_action(
    qnet: &MlpParams,
    encoded_state: &[f64],
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> usize {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    // Always consume the exploration draw so rng streams stay aligned
    // across epsilon values.
    let explore = rng.gen::<f64>() < epsilon;
    if explore {
        rng.gen_range(0..qnet.output_dim())
    } else {
        argmax(&qnet.q_values(encoded_state))
    }
}

/// Double-DQN bootstrap targets: the main network selects the action,
/// the target network evaluates it.
/// `y = r` for terminal experiences, else
/// `y = r + gamma * Q_target(s', argmax_a Q_main(s', a))`.
pub fn ddqn_targets(
    batch: &[Experience],
    main: &MlpParams,
    target: &MlpParams,
    gamma: f64,
) -> Vec<f64> {
    batch
        .iter()
        .map(|exp| {
            if exp.done {
                exp.reward
            } else {
                let chosen = argmax(&main.q_values(&exp.next_state));
                exp.reward + gamma * target.q_values(&exp.next_state)[chosen]
            }
        })
        .collect()
}

/// Main/target network pair with the optimizer state.
#[derive(Debug, Clone)]
pub struct DdqnAgent {
    pub main: MlpParams,
    pub target: MlpParams,
    pub adam: AdamState,
    pub train_steps: usize,
}

impl DdqnAgent {
    pub fn new(
        state_dim: usize,
        action_count: usize,
        hidden_dims: &[usize],
        rng: &mut impl Rng,
    ) -> Result<Self, ConfigError> {
        let mut dims = Vec::with_capacity(hidden_dims.len() + 2);
        dims.push(state_dim);
        dims.extend_from_slice(hidden_dims);
        dims.push(action_count);
        let main = MlpParams::init(&dims, rng)?;
        let target = main.clone();
        let adam = AdamState::new(&main);
        Ok(Self {
            main,
            target,
            adam,
            train_steps: 0,
        })
    }
}

/// Copies the main network into the target network, bit for bit.
pub fn sync_target(agent: &mut DdqnAgent) {
    agent.target = agent.main.clone();
}

/// One optimization step on the main network; the target network is
/// untouched. Returns the batch loss (measured before the update).
pub fn train_step(agent: &mut DdqnAgent, batch: &[Experience], hyper: &AgentHyper) -> f64 {
    let targets = ddqn_targets(batch, &agent.main, &agent.target, hyper.gamma);
    let caches: Vec<_> = batch.iter().map(|exp| agent.main.forward(&exp.state)).collect();
    let q_values: Vec<Vec<f64>> = caches.iter().map(|c| c.output().to_vec()).collect();
    let actions: Vec<usize> = batch.iter().map(|exp| exp.action).collect();
    let (loss, out_grads) = mse_loss_and_grad(&q_values, &actions, &targets);
    let mut grads = Gradients::zeros_like(&agent.main);
    for (cache, grad) in caches.iter().zip(&out_grads) {
        agent.main.backward_accumulate(cache, grad, &mut grads);
    }
    adam_step(&mut agent.main, &grads, &mut agent.adam, hyper.learning_rate);
    agent.train_steps += 1;
    loss
}

/// Per-episode training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: usize,
    /// Running mean of episode returns up to and including this one.
    pub cum_avg_reward: f64,
    /// Mean loss over this episode's training steps; `None` before the
    /// replay buffer has warmed up.
    pub mean_loss: Option<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub qnet: MlpParams,
    pub metrics: Vec<EpisodeMetrics>,
    pub train_steps: usize,
}

/// Full offline training loop: act epsilon-greedily, store, sample,
/// train, sync. A pure function of the seed and hyper-parameters.
pub fn train<E: Env>(env: &E, hyper: &AgentHyper, seed: u64) -> Result<TrainResult, ConfigError> {
    hyper.validate()?;
    let mut init_rng = rng::stream(seed, "train/init");
    let mut agent = DdqnAgent::new(
        env.state_dim(),
        env.action_count(),
        &hyper.hidden_dims,
        &mut init_rng,
    )?;
    let mut env_rng = rng::stream(seed, "train/env");
    let mut agent_rng = rng::stream(seed, "train/agent");
    let mut buffer = ReplayBuffer::new(hyper.buffer_capacity);
    let train_threshold = hyper.warmup_experiences.max(hyper.batch_size);

    let mut metrics = Vec::with_capacity(hyper.episodes);
    let mut return_sum = 0.0;
    for episode in 0..hyper.episodes {
        let epsilon = epsilon_for_episode(hyper, episode);
        let mut state = env.reset(&mut env_rng);
        let mut episode_return = 0.0;
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        loop {
            let encoded = env.encode_state(&state);
            let action = select_action(&agent.main, &encoded, epsilon, &mut agent_rng);
            let tr = env.step(&state, action, &mut env_rng);
            buffer.push(Experience {
                state: encoded,
                action,
                reward: tr.reward,
                next_state: env.encode_state(&tr.next_state),
                done: tr.done,
            });
            episode_return += tr.reward;
            if buffer.len() >= train_threshold {
                if let Some(batch) = buffer.sample(hyper.batch_size, &mut agent_rng) {
                    loss_sum += train_step(&mut agent, &batch, hyper);
                    loss_count += 1;
                    if agent.train_steps % hyper.target_sync_steps == 0 {
                        sync_target(&mut agent);
                    }
                }
            }
            if tr.done {
                break;
            }
            state = tr.next_state;
        }
        return_sum += episode_return;
        metrics.push(EpisodeMetrics {
            episode,
            cum_avg_reward: return_sum / (episode + 1) as f64,
            mean_loss: (loss_count > 0).then(|| loss_sum / loss_count as f64),
            epsilon,
        });
    }
    Ok(TrainResult {
        qnet: agent.main,
        metrics,
        train_steps: agent.train_steps,
    })
}

/// Pure greedy rollouts with no exploration and no learning.
pub fn evaluate<E: Env>(env: &E, qnet: &MlpParams, episodes: usize, seed: u64) -> EvalSummary {
    rollout(
        env,
        |env, state, _| argmax(&qnet.q_values(&env.encode_state(state))),
        episodes,
        seed,
    )
}
