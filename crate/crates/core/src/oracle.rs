//! Brute-force reference solvers for small instances. These are the
//! ground truth that trained agents are measured against: exhaustive
//! one-step search for the block-assignment level, exhaustive search
//! over whole allocation sequences for the computation level.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::comm::{CommEnv, CommState};
use crate::comp::{decode_comp_action, encode_comp_action, CompAction, CompEnv, CompState};
use crate::env::{rollout, Env, EvalSummary};
use crate::error::ConfigError;

/// Upper bound on the number of allocation sequences the round solver
/// will enumerate.
pub const COMP_SEQUENCE_CAP: u128 = 1_000_000;

/// Exhaustively scores every action against the state and returns the
/// best one (lowest index on ties) with its reward. Rewards are a pure
/// function of the state, so no randomness needs freezing. The action
/// space is bounded by the cap enforced at environment construction.
pub fn best_comm_action(env: &CommEnv, state: &CommState) -> (usize, f64) {
    let mut best_index = 0;
    let mut best_reward = f64::NEG_INFINITY;
    for index in 0..env.action_count() {
        let reward = env.evaluate_action(state, index).reward;
        if reward > best_reward {
            best_reward = reward;
            best_index = index;
        }
    }
    (best_index, best_reward)
}

/// Minimum-total-delay completion of a computation round.
#[derive(Debug, Clone, PartialEq)]
pub struct CompRoundPlan {
    /// One placement per remaining task, in decision order.
    pub actions: Vec<CompAction>,
    pub total_delay_s: f64,
}

/// Exhaustive minimization of the summed delay over all feasible
/// allocation sequences for the tasks still unassigned in `state`.
/// Returns `None` when no feasible completion exists, and an error when
/// the sequence space exceeds [`COMP_SEQUENCE_CAP`].
pub fn best_comp_round(
    env: &CompEnv,
    state: &CompState,
) -> Result<Option<CompRoundPlan>, ConfigError> {
    let remaining = state.remaining_tasks_in_round();
    let action_count = (env.server_count() * env.cores_per_mec()) as u128;
    let space = action_count.checked_pow(remaining as u32);
    if space.is_none() || space.unwrap() > COMP_SEQUENCE_CAP {
        return Err(ConfigError::new(
            "oracle",
            format!(
                "comp round search space ({} actions)^{remaining} exceeds {COMP_SEQUENCE_CAP}",
                action_count
            ),
        ));
    }

    let tasks = &state.round_tasks[state.head..];
    let mut free = state.free_cores.clone();
    let mut current = Vec::with_capacity(remaining);
    let mut best: Option<CompRoundPlan> = None;

    fn search(
        env: &CompEnv,
        tasks: &[crate::comp::RoundTask],
        idx: usize,
        free: &mut Vec<usize>,
        current: &mut Vec<CompAction>,
        delay_so_far: f64,
        best: &mut Option<CompRoundPlan>,
    ) {
        if idx == tasks.len() {
            if best.as_ref().map_or(true, |b| delay_so_far < b.total_delay_s) {
                *best = Some(CompRoundPlan {
                    actions: current.clone(),
                    total_delay_s: delay_so_far,
                });
            }
            return;
        }
        let task = &tasks[idx];
        for index in 0..env.server_count() * env.cores_per_mec() {
            let action = decode_comp_action(index, env.server_count(), env.cores_per_mec());
            if action.core_count > free[action.server_index] {
                continue;
            }
            let delay = env.placement_delay(task, action.server_index, action.core_count);
            if delay > task.task.delay_threshold_s {
                continue;
            }
            free[action.server_index] -= action.core_count;
            current.push(action);
            search(env, tasks, idx + 1, free, current, delay_so_far + delay, best);
            current.pop();
            free[action.server_index] += action.core_count;
        }
    }

    search(env, tasks, 0, &mut free, &mut current, 0.0, &mut best);
    Ok(best)
}

/// Mean performance of the one-step-optimal policy over seeded
/// episodes; the upper reference for trained agents.
pub fn comm_oracle_eval(env: &CommEnv, episodes: usize, seed: u64) -> EvalSummary {
    rollout(
        env,
        |env, state, _| best_comm_action(env, state).0,
        episodes,
        seed,
    )
}

/// Mean performance of the round-optimal policy. Replans from every
/// sub-step, which reproduces the suffix of the round-start plan since
/// rounds are deterministic once drawn.
pub fn comp_oracle_eval(
    env: &CompEnv,
    episodes: usize,
    seed: u64,
) -> Result<EvalSummary, ConfigError> {
    // Surface the cap error before running anything.
    let action_count = (env.server_count() * env.cores_per_mec()) as u128;
    let space = action_count.checked_pow(env.round_size() as u32);
    if space.is_none() || space.unwrap() > COMP_SEQUENCE_CAP {
        return Err(ConfigError::new(
            "oracle",
            format!(
                "comp round search space ({} actions)^{} exceeds {COMP_SEQUENCE_CAP}",
                action_count,
                env.round_size()
            ),
        ));
    }
    Ok(rollout(
        env,
        |env, state, _| {
            if state.round_complete() {
                return 0;
            }
            match best_comp_round(env, state).expect("cap checked upfront") {
                Some(plan) => encode_comp_action(&plan.actions[0], env.cores_per_mec()),
                None => 0,
            }
        },
        episodes,
        seed,
    ))
}

/// Mean performance of the uniform-random policy; the lower reference.
pub fn random_eval<E: Env>(env: &E, episodes: usize, seed: u64) -> EvalSummary {
    rollout(
        env,
        |env, _, rng: &mut ChaCha8Rng| rng.gen_range(0..env.action_count()),
        episodes,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::{encode_action, CommAction};
    use crate::comp::computation_delay;
    use crate::rng;
    use crate::topology::{build_topology, ScenarioConfig};

    fn comm_env(devices: usize, rbs: usize) -> CommEnv {
        let config = ScenarioConfig {
            gnb_count: 1,
            devices_per_gnb: devices,
            rb_per_gnb: rbs,
            arrival_rate_tasks_per_s: 0.05,
            delay_threshold_s: 30.0,
            ..ScenarioConfig::default()
        };
        let topo = build_topology(&config, 17).unwrap();
        CommEnv::for_gnb(&topo, 0, 25).unwrap()
    }

    fn comp_env(gnbs: usize, devices_per_gnb: usize) -> CompEnv {
        let config = ScenarioConfig {
            gnb_count: gnbs,
            devices_per_gnb,
            ..ScenarioConfig::default()
        };
        let topo = build_topology(&config, 18).unwrap();
        CompEnv::for_sharing_group(&topo).unwrap()
    }

    #[test]
    fn lone_device_gets_every_block() {
        let env = comm_env(1, 2);
        let state = env.reset(&mut rng::stream(1, "o"));
        let (best, reward) = best_comm_action(&env, &state);
        let both = encode_action(
            &CommAction {
                assignment: vec![1, 1],
            },
            1,
        );
        assert_eq!(best, both);
        assert!(reward > 0.0);
    }

    #[test]
    fn no_tasks_means_all_idle_wins_by_tie_break() {
        let env = comm_env(2, 3);
        let mut state = env.reset(&mut rng::stream(2, "o"));
        state.pending_sizes_bits = vec![0, 0];
        let (best, reward) = best_comm_action(&env, &state);
        assert_eq!(best, 0);
        assert_eq!(reward, 0.0);
    }

    #[test]
    fn oracle_reward_dominates_every_action() {
        let env = comm_env(2, 3);
        let mut env_rng = rng::stream(3, "o");
        let mut state = env.reset(&mut env_rng);
        for _ in 0..40 {
            let (_, best_reward) = best_comm_action(&env, &state);
            for index in 0..env.action_count() {
                assert!(env.evaluate_action(&state, index).reward <= best_reward);
            }
            state = env.step_outcome(&state, 0, &mut env_rng).next_state;
        }
    }

    #[test]
    fn single_task_takes_all_cores_locally() {
        let env = comp_env(2, 1);
        // Round of 2; look only at the first decision with everything
        // free: remote placement adds rtt, fewer cores add delay.
        let state = env.reset(&mut rng::stream(4, "o"));
        let plan = best_comp_round(&env, &state).unwrap().unwrap();
        // One task per server: each goes local with the full machine,
        // since any remote placement adds a positive round trip.
        assert_eq!(plan.actions[0], CompAction { server_index: 0, core_count: 4 });
        assert_eq!(plan.actions[1], CompAction { server_index: 1, core_count: 4 });

        // With a genuinely single-task round the whole machine goes to it.
        let solo = comp_env(1, 1);
        let state = solo.reset(&mut rng::stream(5, "o"));
        let plan = best_comp_round(&solo, &state).unwrap().unwrap();
        assert_eq!(plan.actions[0].core_count, solo.cores_per_mec());
        assert_eq!(plan.actions[0].server_index, 0);
    }

    #[test]
    fn two_task_split_matches_hand_enumeration() {
        let env = comp_env(1, 2);
        let mut env_rng = rng::stream(6, "o");
        for _ in 0..25 {
            let state = env.reset(&mut env_rng);
            let plan = best_comp_round(&env, &state).unwrap().unwrap();

            // Independent nested-loop enumeration over (n1, n2).
            let c1 = state.round_tasks[0].task.required_cycles;
            let c2 = state.round_tasks[1].task.required_cycles;
            let cap = env.core_capacity();
            let threshold = state.round_tasks[0].task.delay_threshold_s;
            let mut best = f64::INFINITY;
            for n1 in 1..=4usize {
                for n2 in 1..=(4 - n1) {
                    let d1 = computation_delay(c1, n1, cap);
                    let d2 = computation_delay(c2, n2, cap);
                    if d1 <= threshold && d2 <= threshold && d1 + d2 < best {
                        best = d1 + d2;
                    }
                }
            }
            assert!(
                (plan.total_delay_s - best).abs() < 1e-12,
                "solver {} vs enumeration {best}",
                plan.total_delay_s
            );
        }
    }

    #[test]
    fn exhausted_cores_make_the_round_infeasible() {
        let env = comp_env(1, 2);
        let mut state = env.reset(&mut rng::stream(7, "o"));
        state.free_cores = vec![0];
        assert_eq!(best_comp_round(&env, &state).unwrap(), None);
    }

    #[test]
    fn oversized_round_search_is_refused() {
        // Default scenario: 4 servers x 4 cores, 8 tasks -> 16^8 >> cap.
        let env = comp_env(4, 2);
        let state = env.reset(&mut rng::stream(8, "o"));
        assert!(best_comp_round(&env, &state).is_err());
        assert!(comp_oracle_eval(&env, 1, 0).is_err());
    }

    #[test]
    fn oracle_beats_random_on_both_levels() {
        let comm = comm_env(2, 3);
        for seed in [1u64, 2, 3] {
            let oracle = comm_oracle_eval(&comm, 10, seed);
            let random = random_eval(&comm, 10, seed);
            assert!(
                oracle.mean_reward >= random.mean_reward,
                "seed {seed}: oracle {} < random {}",
                oracle.mean_reward,
                random.mean_reward
            );
        }
        let comp = comp_env(1, 2);
        for seed in [1u64, 2, 3] {
            let oracle = comp_oracle_eval(&comp, 50, seed).unwrap();
            let random = random_eval(&comp, 50, seed);
            assert!(oracle.mean_reward >= random.mean_reward, "seed {seed}");
        }
    }

    #[test]
    fn reference_policies_are_deterministic() {
        let comm = comm_env(2, 3);
        assert_eq!(comm_oracle_eval(&comm, 5, 9), comm_oracle_eval(&comm, 5, 9));
        assert_eq!(random_eval(&comm, 5, 9), random_eval(&comm, 5, 9));
        let comp = comp_env(1, 2);
        assert_eq!(
            comp_oracle_eval(&comp, 5, 9).unwrap(),
            comp_oracle_eval(&comp, 5, 9).unwrap()
        );
    }
}
