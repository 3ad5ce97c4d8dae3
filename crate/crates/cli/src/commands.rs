//! Subcommand implementations. Every run writes its effective config,
//! a manifest, and the built topology into the output directory before
//! producing command-specific artifacts.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use ranslice_core::comm::CommEnv;
use ranslice_core::comp::CompEnv;
use ranslice_core::ddqn::{evaluate, train, TrainResult};
use ranslice_core::env::{Env, EvalSummary};
use ranslice_core::neural::{read_checkpoint, write_checkpoint, MlpParams};
use ranslice_core::oracle::{comm_oracle_eval, comp_oracle_eval, random_eval};
use ranslice_core::report::{
    comm_trace_csv, comp_trace_csv, eval_csv, metrics_csv, oracle_csv, sweep_csv, SweepRow,
};
use ranslice_core::rng::derive_seed;
use ranslice_core::topology::{build_topology, Topology};

use crate::chart::sweep_chart_svg;
use crate::config::{Level, RunConfig};
use crate::CliError;

pub struct RunContext {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub topology: Topology,
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

/// Validates the configuration, creates the run directory, and drops
/// the effective config snapshot, the run manifest and the topology.
pub fn prepare(config: RunConfig, command: &str) -> Result<RunContext, CliError> {
    config.validate()?;
    let out_dir = config.resolved_out_dir();
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", out_dir.display())))?;

    let topology = build_topology(&config.scenario, derive_seed(config.seed, "topology"))?;

    write_file(&out_dir.join("config.toml"), &config.to_toml_string())?;
    let manifest = format!(
        "command = \"{command}\"\nlevel = \"{}\"\nseed = {}\nversion = \"{}\"\n",
        config.level,
        config.seed,
        env!("CARGO_PKG_VERSION")
    );
    write_file(&out_dir.join("manifest.toml"), &manifest)?;
    write_file(&out_dir.join("topology.json"), &topology.to_json_string())?;

    Ok(RunContext {
        config,
        out_dir,
        topology,
    })
}

fn comm_envs(ctx: &RunContext) -> Result<Vec<CommEnv>, CliError> {
    (0..ctx.topology.gnbs.len())
        .map(|g| {
            CommEnv::for_gnb(&ctx.topology, g, ctx.config.comm_agent.episode_length)
                .map_err(CliError::from)
        })
        .collect()
}

fn eval_seed(master: u64, level: Level, scope: &str) -> u64 {
    derive_seed(master, &format!("eval/{level}/{scope}"))
}

pub fn run_train(ctx: &RunContext) -> Result<(), CliError> {
    match ctx.config.level {
        Level::Comm => {
            let envs = comm_envs(ctx)?;
            let hyper = &ctx.config.comm_agent;
            let results: Vec<Result<TrainResult, CliError>> = envs
                .par_iter()
                .enumerate()
                .map(|(g, env)| {
                    let seed = derive_seed(ctx.config.seed, &format!("train/comm/gnb{g}"));
                    train(env, hyper, seed).map_err(CliError::from)
                })
                .collect();
            for (g, result) in results.into_iter().enumerate() {
                let result = result?;
                write_file(
                    &ctx.out_dir.join(format!("metrics_gnb{g}.csv")),
                    &metrics_csv(&result.metrics),
                )?;
                let path = ctx.out_dir.join(format!("qnet_gnb{g}.bin"));
                write_checkpoint(&result.qnet, &path)
                    .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
                let last = result.metrics.last();
                println!(
                    "trained gnb{g}: episodes={} train_steps={} cum_avg_reward={}",
                    result.metrics.len(),
                    result.train_steps,
                    last.map(|m| m.cum_avg_reward).unwrap_or(0.0)
                );
            }
        }
        Level::Comp => {
            let env = CompEnv::for_sharing_group(&ctx.topology)?;
            let seed = derive_seed(ctx.config.seed, "train/comp");
            let result = train(&env, &ctx.config.comp_agent, seed)?;
            write_file(
                &ctx.out_dir.join("metrics_mec.csv"),
                &metrics_csv(&result.metrics),
            )?;
            let path = ctx.out_dir.join("qnet_mec.bin");
            write_checkpoint(&result.qnet, &path)
                .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
            let last = result.metrics.last();
            println!(
                "trained mec: episodes={} train_steps={} cum_avg_reward={}",
                result.metrics.len(),
                result.train_steps,
                last.map(|m| m.cum_avg_reward).unwrap_or(0.0)
            );
        }
    }
    Ok(())
}

/// Loads a checkpoint and insists its dims match the environment's.
fn load_matching_checkpoint(
    path: &Path,
    state_dim: usize,
    action_count: usize,
) -> Result<MlpParams, CliError> {
    let params = read_checkpoint(path)
        .map_err(|e| CliError::Config(format!("checkpoint {}: {e}", path.display())))?;
    if params.input_dim() != state_dim || params.output_dim() != action_count {
        return Err(CliError::Config(format!(
            "checkpoint {}: dims (in={}, out={}) do not match environment (in={}, out={})",
            path.display(),
            params.input_dim(),
            params.output_dim(),
            state_dim,
            action_count
        )));
    }
    Ok(params)
}

/// Column-wise average over per-agent rows; delay columns average over
/// the agents that completed any task.
fn mean_row(rows: &[(String, EvalSummary)]) -> EvalSummary {
    let n = rows.len() as f64;
    let delays: Vec<f64> = rows.iter().filter_map(|(_, s)| s.mean_delay_s).collect();
    let p95s: Vec<f64> = rows.iter().filter_map(|(_, s)| s.p95_delay_s).collect();
    let avg = |v: &[f64]| {
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    };
    EvalSummary {
        episodes: rows.iter().map(|(_, s)| s.episodes).sum(),
        steps: rows.iter().map(|(_, s)| s.steps).sum(),
        mean_reward: rows.iter().map(|(_, s)| s.mean_reward).sum::<f64>() / n,
        mean_delay_s: avg(&delays),
        p95_delay_s: avg(&p95s),
        feasibility_rate: rows.iter().map(|(_, s)| s.feasibility_rate).sum::<f64>() / n,
        total_tasks: rows.iter().map(|(_, s)| s.total_tasks).sum(),
    }
}

pub fn run_eval(ctx: &RunContext, checkpoint_dir: &Path, trace: bool) -> Result<(), CliError> {
    let episodes = ctx.config.eval.episodes;
    match ctx.config.level {
        Level::Comm => {
            let envs = comm_envs(ctx)?;
            let mut rows = Vec::new();
            for (g, env) in envs.iter().enumerate() {
                let qnet = load_matching_checkpoint(
                    &checkpoint_dir.join(format!("qnet_gnb{g}.bin")),
                    env.state_dim(),
                    env.action_count(),
                )?;
                let seed = eval_seed(ctx.config.seed, Level::Comm, &format!("gnb{g}"));
                rows.push((format!("gnb{g}"), evaluate(env, &qnet, episodes, seed)));
                if trace {
                    write_file(
                        &ctx.out_dir.join(format!("trace_gnb{g}.csv")),
                        &comm_trace_csv(env, &qnet, derive_seed(seed, "trace")),
                    )?;
                }
            }
            rows.push(("mean".to_string(), mean_row(&rows)));
            write_file(&ctx.out_dir.join("eval.csv"), &eval_csv(&rows))?;
        }
        Level::Comp => {
            let env = CompEnv::for_sharing_group(&ctx.topology)?;
            let qnet = load_matching_checkpoint(
                &checkpoint_dir.join("qnet_mec.bin"),
                env.state_dim(),
                env.action_count(),
            )?;
            let seed = eval_seed(ctx.config.seed, Level::Comp, "mec");
            let rows = vec![("mec".to_string(), evaluate(&env, &qnet, episodes, seed))];
            if trace {
                write_file(
                    &ctx.out_dir.join("trace_mec.csv"),
                    &comp_trace_csv(&env, &qnet, ctx.config.eval.trace_rounds, derive_seed(seed, "trace")),
                )?;
            }
            write_file(&ctx.out_dir.join("eval.csv"), &eval_csv(&rows))?;
        }
    }
    println!("eval written to {}", ctx.out_dir.join("eval.csv").display());
    Ok(())
}

pub fn run_oracle(ctx: &RunContext, episodes: Option<usize>) -> Result<(), CliError> {
    let episodes = episodes.unwrap_or(ctx.config.eval.episodes);
    let mut rows: Vec<(String, String, EvalSummary)> = Vec::new();
    match ctx.config.level {
        Level::Comm => {
            for (g, env) in comm_envs(ctx)?.iter().enumerate() {
                let scope = format!("gnb{g}");
                let seed = eval_seed(ctx.config.seed, Level::Comm, &scope);
                rows.push((
                    "oracle".into(),
                    scope.clone(),
                    comm_oracle_eval(env, episodes, seed),
                ));
                rows.push(("random".into(), scope, random_eval(env, episodes, seed)));
            }
        }
        Level::Comp => {
            let env = CompEnv::for_sharing_group(&ctx.topology)?;
            let seed = eval_seed(ctx.config.seed, Level::Comp, "mec");
            rows.push((
                "oracle".into(),
                "mec".into(),
                comp_oracle_eval(&env, episodes, seed)?,
            ));
            rows.push(("random".into(), "mec".into(), random_eval(&env, episodes, seed)));
        }
    }
    write_file(&ctx.out_dir.join("oracle.csv"), &oracle_csv(&rows))?;
    println!(
        "oracle baselines written to {}",
        ctx.out_dir.join("oracle.csv").display()
    );
    Ok(())
}

/// One sweep cell: pin the scenario to a device count and task size,
/// train fresh, evaluate greedily.
fn run_sweep_cell(
    base: &RunConfig,
    device_count: usize,
    task_size_mb: f64,
) -> Result<SweepRow, CliError> {
    let mut scenario = base.scenario.clone();
    scenario.devices_per_gnb = device_count;
    let jitter = base.sweep.size_jitter_frac;
    scenario.task_size_bytes_min = (1.0 - jitter) * task_size_mb * 1024.0 * 1024.0;
    scenario.task_size_bytes_max = (1.0 + jitter) * task_size_mb * 1024.0 * 1024.0;

    // The topology stream is shared across cells: device placement is
    // per-device derived, so cell d+1 extends cell d instead of
    // reshuffling it.
    let topology = build_topology(&scenario, derive_seed(base.seed, "sweep/topology"))?;
    let size_key = format!("{task_size_mb}");

    let (summary, feasibility) = match base.level {
        Level::Comm => {
            let hyper = &base.comm_agent;
            let env = CommEnv::for_gnb(&topology, 0, hyper.episode_length)?;
            let train_seed = derive_seed(
                base.seed,
                &format!("sweep/train/comm/d{device_count}/s{size_key}"),
            );
            let result = train(&env, hyper, train_seed)?;
            let episodes = base.sweep.eval_rounds.div_ceil(hyper.episode_length);
            let seed = derive_seed(base.seed, &format!("sweep/eval/comm/d{device_count}"));
            let summary = evaluate(&env, &result.qnet, episodes, seed);
            let feasibility = summary.feasibility_rate;
            (summary, feasibility)
        }
        Level::Comp => {
            let env = CompEnv::for_sharing_group(&topology)?;
            let train_seed = derive_seed(
                base.seed,
                &format!("sweep/train/comp/d{device_count}/s{size_key}"),
            );
            let result = train(&env, &base.comp_agent, train_seed)?;
            let seed = derive_seed(base.seed, &format!("sweep/eval/comp/d{device_count}"));
            let summary = evaluate(&env, &result.qnet, base.sweep.eval_rounds, seed);
            let feasibility = summary.feasibility_rate;
            (summary, feasibility)
        }
    };

    Ok(SweepRow {
        device_count,
        task_size_mb,
        mean_delay_s: summary.mean_delay_s,
        p95_delay_s: summary.p95_delay_s,
        feasibility_rate: feasibility,
    })
}

pub fn run_sweep(ctx: &RunContext, chart: bool) -> Result<(), CliError> {
    let cells: Vec<(usize, f64)> = ctx
        .config
        .sweep
        .task_sizes_mb
        .iter()
        .flat_map(|&size| {
            ctx.config
                .sweep
                .device_counts
                .iter()
                .map(move |&d| (d, size))
        })
        .collect();

    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(d, size)| run_sweep_cell(&ctx.config, d, size))
        .collect::<Result<Vec<_>, _>>()?;

    write_file(&ctx.out_dir.join("delay.csv"), &sweep_csv(&rows))?;
    if chart {
        write_file(&ctx.out_dir.join("delay.svg"), &sweep_chart_svg(&rows))?;
    }
    println!(
        "sweep of {} cells written to {}",
        rows.len(),
        ctx.out_dir.join("delay.csv").display()
    );
    Ok(())
}
