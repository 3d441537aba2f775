//! Seeded training runs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::env::{exact_policy_value_and_gradient, rollout, ActionSpace, EnvModel, Environment, TabularMdp, Trajectory};
use crate::error::{Error, Result};
use crate::estimate::{fit_value_network, gae_advantages, Estimator, EstimatorKind};
use crate::mlp::MlpSpec;
use crate::optim::BregmanOptimizer;
use crate::params::ParamVector;
use crate::policy::{CategoricalPolicy, GaussianPolicy, Policy, PolicyModel, TabularPolicy, ValueNetwork};

use super::config::RunConfig;
use super::records::{
    CsvLog, IterationRecord, RunRecord, TimingRecord, ITERATIONS_SCHEMA, RECORDS_SCHEMA,
    TIMING_SCHEMA,
};

/// RNG stream for policy and value-network initialization.
pub const STREAM_INIT: u64 = 0;
/// RNG stream for training rollouts.
pub const STREAM_TRAIN: u64 = 1;
/// Evaluation `j` (0-based, in grid order) uses stream `STREAM_EVAL + j`.
pub const STREAM_EVAL: u64 = 2;

/// `ChaCha8Rng` seeded from the master seed, on the given stream.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Receives records as a run produces them.
pub trait RunSink {
    fn iteration(&mut self, _record: &IterationRecord) -> Result<()> {
        Ok(())
    }
    fn record(&mut self, _record: &RunRecord, _wall_clock_s: f64) -> Result<()> {
        Ok(())
    }
}

impl RunSink for () {}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub records: Vec<RunRecord>,
    pub iterations: Vec<IterationRecord>,
    pub policy: PolicyModel,
    pub value: Option<ValueNetwork>,
    /// Trajectories sampled for training, including initialization.
    pub trajectories: u64,
    pub env_steps: u64,
}

/// The initial policy and, for actor-critic runs, value network. Both are
/// drawn from the init stream, policy first.
pub fn initial_models(config: &RunConfig, env: &EnvModel) -> Result<(PolicyModel, Option<ValueNetwork>)> {
    let spec = env.spec();
    let mut rng = rng_stream(config.seed, STREAM_INIT);
    let policy = match (&spec.action_space, env) {
        (ActionSpace::Discrete(n), EnvModel::Tabular(_)) => {
            PolicyModel::Tabular(TabularPolicy::uniform(spec.state_dim, *n)?)
        }
        (ActionSpace::Discrete(n), _) => PolicyModel::Categorical(CategoricalPolicy::new(
            MlpSpec::with_hidden(spec.state_dim, &config.policy.hidden, *n)?,
            &mut rng,
        )?),
        (ActionSpace::Box { low, .. }, _) => PolicyModel::Gaussian(GaussianPolicy::new(
            MlpSpec::with_hidden(spec.state_dim, &config.policy.hidden, low.len())?,
            &mut rng,
        )?),
    };
    let value = if config.optimizer.actor_critic {
        Some(ValueNetwork::new(spec.state_dim, &config.value.hidden, &mut rng)?)
    } else {
        None
    };
    Ok((policy, value))
}

/// Mean and population std of `eval_episodes` undiscounted returns.
pub fn evaluate<P: Policy>(config: &RunConfig, policy: &P, index: u64) -> Result<(f64, f64)> {
    let mut env = config.env.build()?;
    let horizon = env.spec().horizon;
    let mut rng = rng_stream(config.seed, STREAM_EVAL + index);
    let returns = (0..config.eval_episodes)
        .map(|_| Ok(rollout(&mut env, policy, &mut rng, horizon)?.total_reward()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_std(&returns))
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Evaluation grid: multiples of `interval` below `total`, then `total`.
pub fn eval_grid(interval: u64, total: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = (1..).map(|j| j * interval).take_while(|t| *t < total).collect();
    grid.push(total);
    grid
}

fn sample_batch(
    env: &mut EnvModel,
    policy: &PolicyModel,
    rng: &mut ChaCha8Rng,
    n: usize,
) -> Result<Vec<Trajectory>> {
    let horizon = env.spec().horizon;
    (0..n).map(|_| rollout(env, policy, rng, horizon)).collect()
}

fn value_targets(
    estimator: &Estimator,
    value: &ValueNetwork,
    batch: &[Trajectory],
) -> Result<(Vec<Trajectory>, Vec<Vec<f64>>)> {
    let lambda = match estimator.kind {
        EstimatorKind::Gae { lambda } => lambda,
        _ => 1.0,
    };
    let mut trajs = Vec::new();
    let mut targets = Vec::new();
    for t in batch.iter().filter(|t| !t.is_empty()) {
        let gae = gae_advantages(t, value, estimator.gamma, lambda, estimator.bootstrap_truncated)?;
        trajs.push(t.clone());
        targets.push(gae.targets);
    }
    Ok((trajs, targets))
}

fn mean_return(batch: &[Trajectory]) -> f64 {
    batch.iter().map(Trajectory::total_reward).sum::<f64>() / batch.len().max(1) as f64
}

fn tabular_mdp(env: &EnvModel) -> Option<TabularMdp> {
    match env {
        EnvModel::Tabular(t) => Some(t.mdp.clone()),
        _ => None,
    }
}

/// Runs the configured optimizer loop in memory.
pub fn train(config: &RunConfig) -> Result<TrainOutput> {
    train_with(config, &mut ())
}

/// Runs the configured optimizer loop, reporting records to `sink` as they
/// are produced.
pub fn train_with<S: RunSink + ?Sized>(config: &RunConfig, sink: &mut S) -> Result<TrainOutput> {
    config.validate()?;
    let start = Instant::now();
    let mut env = config.env.build()?;
    let gamma = env.spec().gamma;
    let estimator = config.estimator(gamma)?;
    let mdp = tabular_mdp(&env);
    let (policy, mut value) = initial_models(config, &env)?;
    let mut opt = BregmanOptimizer::new(
        policy,
        config.optimizer.algorithm,
        config.optimizer.schedule,
        config.mirror.clone(),
        config.clip,
    )?;
    let mut rng = rng_stream(config.seed, STREAM_TRAIN);

    let batch = sample_batch(&mut env, opt.policy(), &mut rng, 1)?;
    let mut trajectories = 1u64;
    let mut train_return = mean_return(&batch);
    {
        let v = value.as_ref();
        opt.initialize(&batch, |p: &PolicyModel, t: &Trajectory| estimator.gradient(p, t, v))?;
    }
    let mut pending_fit = match &value {
        Some(v) => Some(value_targets(&estimator, v, &batch)?),
        None => None,
    };

    let grid = eval_grid(config.eval_interval, config.total_timesteps);
    let mut next_grid = 0usize;
    let mut records = Vec::new();
    let mut iterations = Vec::new();
    let (eval_return, eval_return_std) = evaluate(config, opt.policy(), 0)?;
    let first = RunRecord {
        iteration: 0,
        timesteps: 0,
        env_steps: 0,
        train_return,
        eval_return,
        eval_return_std,
        metric: None,
        exact_metric: None,
        eta: None,
        beta: None,
        eta_clamped: false,
        beta_clamped: false,
    };
    sink.record(&first, start.elapsed().as_secs_f64())?;
    records.push(first);

    let mut env_steps = 0u64;
    while env_steps < config.total_timesteps {
        let exact_metric = match &mdp {
            Some(mdp) => {
                let (_, grad) = exact_policy_value_and_gradient(mdp, opt.policy())?;
                Some(opt.exact_metric(&grad)?)
            }
            None => None,
        };
        let proposed = opt.propose()?;
        let mut value_loss = None;
        if let (Some(v), Some((trajs, targets))) = (value.as_mut(), pending_fit.take()) {
            let (fit, report) = fit_value_network(v, &trajs, &targets, config.value.lr, config.value.epochs)?;
            *v = fit;
            value_loss = Some(report.final_loss);
        }
        let batch = sample_batch(&mut env, opt.policy(), &mut rng, config.batch_size)?;
        trajectories += batch.len() as u64;
        env_steps += batch.iter().map(|t| t.len() as u64).sum::<u64>();
        train_return = mean_return(&batch);
        let absorbed = {
            let v = value.as_ref();
            opt.absorb(&batch, |p: &PolicyModel, t: &Trajectory| estimator.gradient(p, t, v))?
        };
        if let Some(v) = &value {
            pending_fit = Some(value_targets(&estimator, v, &batch)?);
        }
        let est = opt.estimate().expect("initialized");
        let it = IterationRecord {
            iteration: proposed.k,
            env_steps,
            train_return,
            metric: proposed.metric,
            exact_metric,
            eta: proposed.eta.value,
            eta_raw: proposed.eta.raw,
            eta_clamped: proposed.eta.clamped,
            beta: est.beta,
            beta_raw: crate::optim::beta_schedule(
                config.optimizer.algorithm,
                &config.optimizer.schedule,
                proposed.eta.value,
            )
            .raw,
            beta_clamped: absorbed.beta_clamped,
            mean_weight: matches!(config.optimizer.algorithm, crate::optim::Algorithm::VrBgpo)
                .then_some(absorbed.mean_weight),
            clipped_weights: absorbed.clipped_weights,
            nonfinite_weights: absorbed.nonfinite_weights,
            value_loss,
        };
        sink.iteration(&it)?;

        while next_grid < grid.len() && grid[next_grid] <= env_steps {
            let (eval_return, eval_return_std) = evaluate(config, opt.policy(), next_grid as u64 + 1)?;
            let r = RunRecord {
                iteration: it.iteration,
                timesteps: grid[next_grid],
                env_steps,
                train_return,
                eval_return,
                eval_return_std,
                metric: Some(it.metric),
                exact_metric: it.exact_metric,
                eta: Some(it.eta),
                beta: Some(it.beta),
                eta_clamped: it.eta_clamped,
                beta_clamped: it.beta_clamped,
            };
            sink.record(&r, start.elapsed().as_secs_f64())?;
            records.push(r);
            next_grid += 1;
        }
        iterations.push(it);
    }

    Ok(TrainOutput {
        records,
        iterations,
        policy: opt.policy().clone(),
        value,
        trajectories,
        env_steps,
    })
}

/// What [`run`] wrote.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub output: TrainOutput,
}

struct FileSink {
    records: CsvLog,
    iterations: CsvLog,
    timing: CsvLog,
    last_iteration: u64,
}

impl RunSink for FileSink {
    fn iteration(&mut self, record: &IterationRecord) -> Result<()> {
        self.last_iteration = record.iteration;
        self.iterations.write(record)
    }

    fn record(&mut self, record: &RunRecord, wall_clock_s: f64) -> Result<()> {
        self.records.write(record)?;
        self.timing.write(&TimingRecord {
            iteration: record.iteration,
            timesteps: record.timesteps,
            wall_clock_s,
        })
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    last_completed_iteration: u64,
    error: &'a str,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `<name>.bin` (little-endian f64) and `<name>.json` (shape).
pub fn write_params(dir: &Path, name: &str, params: &[f64], shape: &serde_json::Value) -> Result<()> {
    write_file(
        &dir.join(format!("{name}.bin")),
        &ParamVector::from(params).to_le_bytes(),
    )?;
    write_file(
        &dir.join(format!("{name}.json")),
        serde_json::to_string_pretty(shape)?.as_bytes(),
    )
}

/// Runs and writes `resolved-config.json`, `records.csv`, `iterations.csv`,
/// `timing.csv` and the final parameters into `dir`. On a mid-run failure
/// the partial logs are kept and `error.json` is added.
pub fn run(config: &RunConfig, dir: &Path) -> Result<RunSummary> {
    config.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("resolved-config.json"), config.to_json_pretty().as_bytes())?;
    let _ = std::fs::remove_file(dir.join("error.json"));
    let mut sink = FileSink {
        records: CsvLog::create(&dir.join("records.csv"), RECORDS_SCHEMA)?,
        iterations: CsvLog::create(&dir.join("iterations.csv"), ITERATIONS_SCHEMA)?,
        timing: CsvLog::create(&dir.join("timing.csv"), TIMING_SCHEMA)?,
        last_iteration: 0,
    };
    match train_with(config, &mut sink) {
        Ok(output) => {
            write_params(dir, "policy", output.policy.params(), &output.policy.shape())?;
            if let Some(v) = &output.value {
                write_params(dir, "value", &v.params, &v.shape())?;
            }
            Ok(RunSummary {
                dir: dir.to_path_buf(),
                output,
            })
        }
        Err(e) => {
            let msg = e.to_string();
            let rec = ErrorRecord {
                last_completed_iteration: sink.last_iteration,
                error: &msg,
            };
            write_file(&dir.join("error.json"), serde_json::to_string_pretty(&rec)?.as_bytes())?;
            Err(e)
        }
    }
}

/// `$BGPO_OUTPUT_ROOT`, or `runs` when unset.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Environment variable naming the directory that run outputs go under.
pub const OUTPUT_ROOT_VAR: &str = "BGPO_OUTPUT_ROOT";

/// `<root>/<preset or "run">-seed<N>`.
pub fn default_run_dir(root: &Path, config: &RunConfig) -> PathBuf {
    let name = config.preset.as_deref().unwrap_or("run");
    root.join(format!("{name}-seed{}", config.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::preset;

    fn tiny_tabular() -> RunConfig {
        let mut c = preset("tabular-bgpo-theorem").unwrap();
        c.total_timesteps = 200;
        c.eval_interval = 50;
        c
    }

    #[test]
    fn grid_includes_total() {
        assert_eq!(eval_grid(10, 30), vec![10, 20, 30]);
        assert_eq!(eval_grid(10, 25), vec![10, 20, 25]);
        assert_eq!(eval_grid(100, 5), vec![5]);
    }

    #[test]
    fn population_std() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 1.0));
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn one_iteration_when_budget_is_one_horizon() {
        let mut c = preset("pendulum-vrbgpo-diag").unwrap();
        c.policy.hidden = vec![4];
        c.value.hidden = vec![4];
        c.batch_size = 1;
        c.total_timesteps = 500;
        c.eval_interval = 500;
        c.eval_episodes = 1;
        let out = train(&c).unwrap();
        assert_eq!(out.iterations.len(), 1);
        assert_eq!(out.trajectories, 2);
        assert_eq!(out.records.len(), 2);
    }

    #[test]
    fn trajectory_accounting() {
        let c = tiny_tabular();
        let out = train(&c).unwrap();
        let k = out.iterations.len() as u64;
        assert_eq!(out.trajectories, 1 + k * c.batch_size as u64);
    }

    #[test]
    fn records_follow_the_grid() {
        let c = tiny_tabular();
        let out = train(&c).unwrap();
        let ts: Vec<u64> = out.records.iter().map(|r| r.timesteps).collect();
        assert_eq!(ts, vec![0, 50, 100, 150, 200]);
        assert!(out.records.iter().all(|r| r.exact_metric.is_some() || r.iteration == 0));
    }

    #[test]
    fn same_seed_same_numbers() {
        let c = tiny_tabular();
        let a = train(&c).unwrap();
        let b = train(&c).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.policy, b.policy);
    }

    #[test]
    fn run_writes_its_files() {
        let dir = tempfile::tempdir().unwrap();
        let c = tiny_tabular();
        run(&c, dir.path()).unwrap();
        for f in ["resolved-config.json", "records.csv", "iterations.csv", "timing.csv", "policy.bin", "policy.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let resolved = RunConfig::load(&dir.path().join("resolved-config.json"), None).unwrap();
        assert_eq!(resolved, c);
        let blob = std::fs::read(dir.path().join("policy.bin")).unwrap();
        assert_eq!(blob.len(), 8 * 8);
    }

    #[test]
    fn numeric_failure_leaves_error_record() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = preset("pendulum-vrbgpo-diag").unwrap();
        c.mirror = crate::mirror::MirrorMapKind::Euclidean;
        c.optimizer.schedule.lambda = 1e306;
        c.policy.hidden = vec![2];
        c.value.hidden = vec![2];
        c.batch_size = 2;
        c.total_timesteps = 5000;
        c.eval_episodes = 1;
        let err = run(&c, dir.path()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err}");
        assert!(dir.path().join("error.json").exists());
        assert!(dir.path().join("records.csv").exists());
    }
}
