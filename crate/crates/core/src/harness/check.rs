//! Gradient-correctness battery: finite-difference checks of every analytic
//! gradient and a Monte-Carlo comparison of the PGT estimator against the
//! exact tabular gradient.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::env::{exact_policy_value_and_gradient, one_hot, rollout, Environment, TabularEnv, TabularMdp};
use crate::error::Result;
use crate::estimate::{Baseline, Estimator, EstimatorKind};
use crate::mlp::MlpSpec;
use crate::params::{dot, norm};
use crate::policy::{CategoricalPolicy, GaussianPolicy, Policy, TabularPolicy, ValueNetwork};

use super::run::rng_stream;

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Largest accepted relative error between analytic and numeric gradients.
pub const FD_TOLERANCE: f64 = 1e-4;
/// Largest accepted |z| in the estimator-versus-oracle comparison.
pub const Z_THRESHOLD: f64 = 3.0;

#[derive(Clone, Debug)]
pub struct CheckOptions {
    /// Fewer instances and samples.
    pub quick: bool,
    pub seed: u64,
    /// Test hook: lay analytic network gradients out with transposed weight
    /// matrices, which the battery must detect.
    pub corrupt_flattening: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            quick: false,
            seed: 0,
            corrupt_flattening: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Componentwise comparison of an estimator's sample mean with ∇J.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleComparison {
    pub samples: usize,
    pub exact: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub z: Vec<f64>,
}

impl OracleComparison {
    pub fn max_abs_z(&self) -> f64 {
        self.z.iter().fold(0.0, |m, z| m.max(z.abs()))
    }
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub results: Vec<CheckResult>,
    pub oracle: OracleComparison,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            writeln!(f, "{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail)?;
        }
        writeln!(f, "tabular oracle ({} samples):", self.oracle.samples)?;
        writeln!(f, "  {:>4} {:>12} {:>12} {:>10} {:>7}", "i", "exact", "mean", "se", "z")?;
        for i in 0..self.oracle.exact.len() {
            writeln!(
                f,
                "  {:>4} {:>12.6} {:>12.6} {:>10.6} {:>7.3}",
                i, self.oracle.exact[i], self.oracle.mean[i], self.oracle.std_error[i], self.oracle.z[i]
            )?;
        }
        Ok(())
    }
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, 1e-8)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-8)
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let hi = f(&probe);
            probe[i] = x[i] - h;
            let lo = f(&probe);
            probe[i] = x[i];
            (hi - lo) / (2.0 * h)
        })
        .collect()
}

/// Re-lays a flat network gradient through unflatten/flatten. With `corrupt`
/// the weight matrices are written column-major instead of row-major.
pub fn relayout(spec: &MlpSpec, grad: &[f64], corrupt: bool) -> Result<Vec<f64>> {
    let (net, tail) = grad.split_at(spec.num_params());
    let mut layers = spec.unflatten(net)?;
    if corrupt {
        for layer in &mut layers {
            let rows = layer.weights.len();
            let cols = layer.weights[0].len();
            let flat: Vec<f64> = (0..cols)
                .flat_map(|c| layer.weights.iter().map(move |r| r[c]))
                .collect();
            layer.weights = flat.chunks(cols).map(<[f64]>::to_vec).collect();
            debug_assert_eq!(layer.weights.len(), rows);
        }
    }
    let mut out = spec.flatten(&layers)?;
    out.extend_from_slice(tail);
    Ok(out)
}

/// Worst relative error over a set of instances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdStats {
    pub instances: usize,
    pub failures: usize,
    pub worst: f64,
}

impl FdStats {
    fn new() -> Self {
        FdStats {
            instances: 0,
            failures: 0,
            worst: 0.0,
        }
    }

    fn add(&mut self, err: f64) {
        self.instances += 1;
        self.worst = self.worst.max(err);
        if !(err <= FD_TOLERANCE) {
            self.failures += 1;
        }
    }

    fn result(&self, name: &str) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            passed: self.failures == 0 && self.instances > 0,
            detail: format!(
                "{} instances, {} failures, worst relative error {:.2e}",
                self.instances, self.failures, self.worst
            ),
        }
    }
}

fn random_spec<R: Rng + ?Sized>(rng: &mut R, out_lo: usize, out_hi: usize) -> MlpSpec {
    let input = rng.random_range(1..=5);
    let hidden: Vec<usize> = (0..rng.random_range(0..=2))
        .map(|_| rng.random_range(1..=6))
        .collect();
    MlpSpec::with_hidden(input, &hidden, rng.random_range(out_lo..=out_hi)).expect("valid sizes")
}

fn random_params<R: Rng + ?Sized>(spec: &MlpSpec, rng: &mut R) -> Vec<f64> {
    let mut p = spec.init(rng);
    p.iter_mut().for_each(|x| *x += rng.random_range(-0.5..0.5));
    p
}

fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Score of a softmax-MLP policy against finite differences of its log-density.
pub fn check_categorical_scores<R: Rng + ?Sized>(n: usize, rng: &mut R, corrupt: bool) -> Result<FdStats> {
    let mut stats = FdStats::new();
    for _ in 0..n {
        let spec = random_spec(rng, 2, 4);
        let policy = CategoricalPolicy::from_params(spec.clone(), random_params(&spec, rng))?;
        let state = random_state(spec.input_dim(), rng);
        let action = policy.sample_action(&state, rng)?;
        let analytic = relayout(&spec, &policy.score(&state, &action)?, corrupt)?;
        let numeric = central_difference(
            |p| policy.with_params(p).unwrap().log_prob(&state, &action).unwrap(),
            policy.params(),
            FD_STEP,
        );
        stats.add(relative_error(&analytic, &numeric));
    }
    Ok(stats)
}

/// Score of a Gaussian-MLP policy, including the `log_std` block.
pub fn check_gaussian_scores<R: Rng + ?Sized>(n: usize, rng: &mut R, corrupt: bool) -> Result<FdStats> {
    let mut stats = FdStats::new();
    for _ in 0..n {
        let spec = random_spec(rng, 1, 3);
        let mut params = random_params(&spec, rng);
        params.extend((0..spec.output_dim()).map(|_| rng.random_range(-1.0..0.5)));
        let policy = GaussianPolicy::from_params(spec.clone(), params)?;
        let state = random_state(spec.input_dim(), rng);
        let action = policy.sample_action(&state, rng)?;
        let analytic = relayout(&spec, &policy.score(&state, &action)?, corrupt)?;
        let numeric = central_difference(
            |p| policy.with_params(p).unwrap().log_prob(&state, &action).unwrap(),
            policy.params(),
            FD_STEP,
        );
        stats.add(relative_error(&analytic, &numeric));
    }
    Ok(stats)
}

/// Tabular scores along random directions tangent to the simplex rows, so
/// every probe stays feasible.
pub fn check_tabular_scores<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<FdStats> {
    let mut stats = FdStats::new();
    for _ in 0..n {
        let n_s = rng.random_range(1..=4);
        let n_a = rng.random_range(2..=4);
        let rows = random_rows(n_s, n_a, rng);
        let policy = TabularPolicy::from_rows(&rows)?;
        let s = rng.random_range(0..n_s);
        let state = one_hot(n_s, s);
        let action = policy.sample_action(&state, rng)?;
        let dir: Vec<f64> = rows
            .iter()
            .flat_map(|row| {
                let d: Vec<f64> = row.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
                let mean = d.iter().sum::<f64>() / d.len() as f64;
                d.into_iter().map(move |x| x - mean)
            })
            .collect();
        let analytic = dot(&policy.score(&state, &action)?, &dir);
        let at = |h: f64| {
            let p: Vec<f64> = policy.params().iter().zip(&dir).map(|(p, d)| p + h * d).collect();
            policy.with_params(&p).unwrap().log_prob(&state, &action).unwrap()
        };
        let numeric = (at(FD_STEP) - at(-FD_STEP)) / (2.0 * FD_STEP);
        stats.add(relative_error(&[analytic], &[numeric]));
    }
    Ok(stats)
}

/// Value-network parameter gradients.
pub fn check_value_gradients<R: Rng + ?Sized>(n: usize, rng: &mut R, corrupt: bool) -> Result<FdStats> {
    let mut stats = FdStats::new();
    for _ in 0..n {
        let spec = random_spec(rng, 1, 1);
        let value = ValueNetwork::from_params(spec.clone(), random_params(&spec, rng))?;
        let state = random_state(spec.input_dim(), rng);
        let analytic = relayout(&spec, &value.value_grad(&state)?, corrupt)?;
        let numeric = central_difference(
            |p| {
                ValueNetwork::from_params(spec.clone(), p.to_vec())
                    .unwrap()
                    .value(&state)
                    .unwrap()
            },
            &value.params,
            FD_STEP,
        );
        stats.add(relative_error(&analytic, &numeric));
    }
    Ok(stats)
}

/// Random probability rows bounded away from zero.
pub fn random_rows<R: Rng + ?Sized>(n_states: usize, n_actions: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n_states)
        .map(|_| {
            let w: Vec<f64> = (0..n_actions).map(|_| rng.random_range(0.2..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

/// Sample mean of `kind` over `samples` trajectories, compared with the exact
/// gradient componentwise.
pub fn tabular_oracle<P: Policy>(
    kind: &EstimatorKind,
    mdp: &TabularMdp,
    policy: &P,
    samples: usize,
    seed: u64,
) -> Result<OracleComparison> {
    let (_, exact) = exact_policy_value_and_gradient(mdp, policy)?;
    let estimator = Estimator::new(kind.clone(), mdp.gamma)?;
    let mut env = TabularEnv::new(mdp.clone());
    let horizon = env.spec().horizon;
    let mut rng = rng_stream(seed, 1);
    let d = exact.len();
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    for n in 1..=samples {
        let traj = rollout(&mut env, policy, &mut rng, horizon)?;
        let g = estimator.gradient(policy, &traj, None)?;
        for i in 0..d {
            let delta = g[i] - mean[i];
            mean[i] += delta / n as f64;
            m2[i] += delta * (g[i] - mean[i]);
        }
    }
    let std_error: Vec<f64> = m2
        .iter()
        .map(|m| (m / (samples as f64 - 1.0)).sqrt() / (samples as f64).sqrt())
        .collect();
    let z = (0..d)
        .map(|i| {
            let diff = mean[i] - exact[i];
            if std_error[i] > 0.0 {
                diff / std_error[i]
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    Ok(OracleComparison {
        samples,
        exact,
        mean,
        std_error,
        z,
    })
}

/// Runs the whole battery.
pub fn check_grad(options: &CheckOptions) -> Result<CheckReport> {
    let (instances, samples) = if options.quick { (20, 20_000) } else { (100, 100_000) };
    let mut rng = rng_stream(options.seed, 0);
    let corrupt = options.corrupt_flattening;
    let mut results = vec![
        check_categorical_scores(instances, &mut rng, corrupt)?.result("categorical score"),
        check_gaussian_scores(instances, &mut rng, corrupt)?.result("gaussian score"),
        check_tabular_scores(instances, &mut rng)?.result("tabular score"),
        check_value_gradients(instances, &mut rng, corrupt)?.result("value gradient"),
    ];
    let mdp = TabularMdp::benchmark();
    let policy = TabularPolicy::from_rows(&random_rows(mdp.n_states(), mdp.n_actions(), &mut rng))?;
    let oracle = tabular_oracle(
        &EstimatorKind::Pgt {
            baseline: Baseline::None,
        },
        &mdp,
        &policy,
        samples,
        options.seed,
    )?;
    results.push(CheckResult {
        name: "PGT vs exact gradient".into(),
        passed: oracle.max_abs_z() <= Z_THRESHOLD,
        detail: format!("max |z| = {:.3} over {} components", oracle.max_abs_z(), oracle.z.len()),
    });
    Ok(CheckReport { results, oracle })
}
