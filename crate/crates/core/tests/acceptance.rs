//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use bgpo::env::{rollout, Pendulum, TabularMdp};
use bgpo::estimate::{estimate_gradient, log_importance_ratio, Baseline, EstimatorKind};
use bgpo::harness::check::{self, random_rows};
use bgpo::harness::{self, preset, sweep, RunConfig};
use bgpo::mirror::{link, link_conjugate, MirrorMapKind, MirrorState};
use bgpo::mlp::MlpSpec;
use bgpo::optim::{
    beta_schedule, eta_schedule, momentum_update, Algorithm, BregmanOptimizer, ScheduleParams,
};
use bgpo::estimate::ClipRange;
use bgpo::policy::{CategoricalPolicy, GaussianPolicy, Policy, TabularPolicy};
use bgpo::ParamVector;

use common::{max_abs_diff, mean_var, prox_oracle, Potential};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn prox_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = [0.0f64; 4];
    let names = ["euclidean", "lp", "diagonal", "entropy"];
    for _ in 0..1000 {
        let lambda = r.random_range(0.05..1.0);
        let u = normal_vec(&mut r, 5);
        let theta: Vec<f64> = (0..5).map(|_| r.random_range(-2.0..2.0)).collect();

        let got = MirrorMapKind::Euclidean
            .prox_step(&MirrorState::new(5), &theta, &u, lambda)
            .unwrap();
        let want = prox_oracle(&Potential::Euclidean, &theta, &u, lambda);
        worst[0] = worst[0].max(max_abs_diff(&got, &want));

        let p = [1.5, 2.0, 3.0][r.random_range(0..3)];
        let got = MirrorMapKind::LpNorm { p }
            .prox_step(&MirrorState::new(5), &theta, &u, lambda)
            .unwrap();
        let want = prox_oracle(&Potential::Lp(p), &theta, &u, lambda);
        worst[1] = worst[1].max(max_abs_diff(&got, &want));

        let alpha = 10f64.powf(r.random_range(-8.0..-1.0));
        let state = MirrorState {
            v: (0..5).map(|_| r.random_range(0.01..4.0)).collect(),
            step_count: 1,
        };
        let h: Vec<f64> = state.v.iter().map(|v| v.sqrt() + alpha).collect();
        let got = MirrorMapKind::DiagonalAdaptive { alpha, beta: 0.999 }
            .prox_step(&state, &theta, &u, lambda)
            .unwrap();
        let want = prox_oracle(&Potential::Weighted(h), &theta, &u, lambda);
        worst[2] = worst[2].max(max_abs_diff(&got, &want));

        let simplex = &random_rows(1, 5, &mut r)[0];
        let got = MirrorMapKind::NegativeEntropy { row_len: None }
            .prox_step(&MirrorState::new(5), simplex, &u, lambda)
            .unwrap();
        let want = prox_oracle(&Potential::Entropy, simplex, &u, lambda);
        worst[3] = worst[3].max(max_abs_diff(&got, &want));
    }
    let elapsed = start.elapsed();
    let detail = names
        .iter()
        .zip(worst)
        .map(|(n, w)| format!("{n} {w:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(
        worst.iter().all(|w| *w <= 1e-6) && elapsed < Duration::from_secs(30),
        format!("max-abs vs inner solver over 1000 5-D instances: {detail}"),
    )
}

fn link_conjugacy() -> Outcome {
    let mut r = rng(2);
    let mut worst = [0.0f64; 3];
    for (i, p) in [1.5, 2.0, 3.0].into_iter().enumerate() {
        for _ in 0..10_000 {
            let n = r.random_range(1..=10);
            let scale = 10f64.powf(r.random_range(-3.0..3.0));
            let x: Vec<f64> = normal_vec(&mut r, n).iter().map(|v| v * scale).collect();
            let back = link_conjugate(p, &link(p, &x).unwrap()).unwrap();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let err = x.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / norm;
            worst[i] = worst[i].max(err);
        }
    }
    outcome(
        worst.iter().all(|w| *w <= 1e-9),
        format!(
            "worst relative round-trip error p=1.5 {:.1e}, p=2 {:.1e}, p=3 {:.1e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn gradient_correctness() -> Outcome {
    let mut r = rng(3);
    let stats = [
        ("categorical", check::check_categorical_scores(100, &mut r, false).unwrap()),
        ("gaussian", check::check_gaussian_scores(100, &mut r, false).unwrap()),
        ("tabular", check::check_tabular_scores(100, &mut r).unwrap()),
        ("value", check::check_value_gradients(100, &mut r, false).unwrap()),
    ];
    let passed = stats.iter().all(|(_, s)| s.failures == 0 && s.instances >= 100);
    let detail = stats
        .iter()
        .map(|(n, s)| format!("{n} {}/{} worst {:.1e}", s.instances - s.failures, s.instances, s.worst))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(passed, detail)
}

fn estimator_unbiasedness() -> Outcome {
    let start = Instant::now();
    let mdp = TabularMdp::benchmark();
    let policy = TabularPolicy::from_rows(&random_rows(4, 2, &mut rng(4))).unwrap();
    let kind = EstimatorKind::Pgt {
        baseline: Baseline::None,
    };
    let cmp = check::tabular_oracle(&kind, &mdp, &policy, 100_000, 4).unwrap();
    let (enumerated, _) = common::exact_moments(&mdp, &policy, &kind);
    let oracle_gap = max_abs_diff(&cmp.exact, &enumerated);
    let elapsed = start.elapsed();
    outcome(
        mdp.n_states() == 4
            && mdp.n_actions() == 2
            && mdp.horizon == 5
            && cmp.max_abs_z() <= 3.0
            && oracle_gap < 1e-10
            && elapsed < Duration::from_secs(120),
        format!(
            "max |z| {:.2} over {} components; DP vs enumeration gap {oracle_gap:.1e}; {:.1}s",
            cmp.max_abs_z(),
            cmp.z.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn importance_weight_law() -> Outcome {
    let mut r = rng(5);
    let spec = MlpSpec::with_hidden(3, &[8], 1).unwrap();
    let old = GaussianPolicy::new(spec, &mut r).unwrap();
    let dir = normal_vec(&mut r, old.num_params());
    let dir_norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut env = Pendulum::new();
    let mut means = vec![];
    let mut vars = vec![];
    for delta in [0.01, 0.05, 0.1] {
        let params: Vec<f64> = old
            .params()
            .iter()
            .zip(&dir)
            .map(|(p, d)| p + delta * d / dir_norm)
            .collect();
        let new = old.with_params(&params).unwrap();
        let weights: Vec<f64> = (0..100_000)
            .map(|_| {
                let traj = rollout(&mut env, &new, &mut r, 20).unwrap();
                log_importance_ratio(&traj, &old, &new).unwrap().exp()
            })
            .collect();
        let (m, v) = mean_var(&weights);
        means.push(m);
        vars.push(v);
    }
    let mean_ok = means.iter().all(|m| (m - 1.0).abs() <= 0.02);
    let monotone = vars[0] < vars[1] && vars[1] < vars[2];
    outcome(
        mean_ok && monotone,
        format!(
            "means {:.4}/{:.4}/{:.4}, variances {:.2e}/{:.2e}/{:.2e} for δ = 0.01/0.05/0.1",
            means[0], means[1], means[2], vars[0], vars[1], vars[2]
        ),
    )
}

fn schedule_exactness() -> Outcome {
    let mut worst = 0.0f64;
    let mut clamp_ok = true;
    let params = [
        ScheduleParams { b: 1.5, m: 2.0, c: 25.0, lambda: 1e-3 },
        ScheduleParams { b: 0.3, m: 7.0, c: 0.5, lambda: 1e-2 },
        ScheduleParams { b: 4.0, m: 1.0, c: 2.0, lambda: 1.0 },
    ];
    for p in &params {
        for k in [1u64, 10, 1_000, 1_000_000] {
            for alg in [Algorithm::Bgpo, Algorithm::VrBgpo] {
                let exponent = if alg == Algorithm::Bgpo { 0.5 } else { 1.0 / 3.0 };
                let eta_formula = p.b / (p.m + k as f64).powf(exponent);
                let eta = eta_schedule(alg, p, k).unwrap();
                worst = worst.max((eta.raw - eta_formula).abs() / eta_formula);
                clamp_ok &= eta.clamped == (eta.raw > 1.0) && eta.value == eta.raw.min(1.0);
                let beta_formula = if alg == Algorithm::Bgpo {
                    p.c * eta.value
                } else {
                    p.c * eta.value.powi(2)
                };
                let beta = beta_schedule(alg, p, eta.value);
                worst = worst.max((beta.raw - beta_formula).abs() / beta_formula);
                clamp_ok &= beta.clamped == (beta.raw > 1.0) && beta.value == beta.raw.min(1.0);
            }
        }
    }
    let t3 = &params[0];
    let bgpo_eta = eta_schedule(Algorithm::Bgpo, t3, 1).unwrap();
    let vr_eta = eta_schedule(Algorithm::VrBgpo, t3, 1).unwrap();
    let bgpo_beta = beta_schedule(Algorithm::Bgpo, t3, bgpo_eta.value);
    let vr_beta = beta_schedule(Algorithm::VrBgpo, t3, vr_eta.value);
    let worked = !bgpo_eta.clamped
        && (bgpo_eta.value - 0.866025).abs() < 1e-6
        && bgpo_beta.clamped
        && bgpo_beta.value == 1.0
        && vr_eta.clamped
        && (vr_eta.raw - 1.040042).abs() < 1e-6
        && vr_eta.value == 1.0
        && vr_beta.clamped;
    outcome(
        worst <= 1e-15 && clamp_ok && worked,
        format!(
            "worst relative error {worst:.1e}; clamp flags exact: {clamp_ok}; preset k=1: η_VR {:.6}→1, β_BGPO {:.2}→1, β_VR {:.0}→1",
            vr_eta.raw, bgpo_beta.raw, vr_beta.raw
        ),
    )
}

fn unification() -> Outcome {
    // (a) Euclidean + β ≡ 1 against vanilla policy gradient.
    let spec = MlpSpec::with_hidden(4, &[8], 2).unwrap();
    let policy = CategoricalPolicy::new(spec, &mut rng(7)).unwrap();
    let schedule = ScheduleParams { b: 1.5, m: 2.0, c: 1e6, lambda: 0.05 };
    let kind = EstimatorKind::Pgt {
        baseline: Baseline::None,
    };
    let grad = |p: &CategoricalPolicy, t: &bgpo::env::Trajectory| -> bgpo::Result<ParamVector> {
        estimate_gradient(&kind, t, p, None, 0.99)
    };
    let batch = |p: &CategoricalPolicy, r: &mut ChaCha8Rng| {
        let mut env = bgpo::env::CartPole::new();
        (0..5)
            .map(|_| rollout(&mut env, p, r, 50).unwrap())
            .collect::<Vec<_>>()
    };
    let mut opt = BregmanOptimizer::new(
        policy.clone(),
        Algorithm::Bgpo,
        schedule,
        MirrorMapKind::Euclidean,
        ClipRange::default(),
    )
    .unwrap();
    let mut opt_rng = rng(8);
    opt.initialize(&batch(opt.policy(), &mut opt_rng), grad).unwrap();
    let mut reference = policy.clone();
    let mut ref_rng = rng(8);
    let mut ref_batch = batch(&reference, &mut ref_rng);
    let mut bitwise = true;
    for k in 1..=100u64 {
        opt.step(|p| Ok(batch(p, &mut opt_rng)), grad).unwrap();
        let n = ref_batch.len() as f64;
        let mut g = vec![0.0; reference.num_params()];
        for t in &ref_batch {
            for (a, b) in g.iter_mut().zip(grad(&reference, t).unwrap().iter()) {
                *a += b;
            }
        }
        let eta = schedule.b / (schedule.m + k as f64).sqrt();
        let step = schedule.lambda * eta.min(1.0);
        let next: Vec<f64> = reference
            .params()
            .iter()
            .zip(&g)
            .map(|(t, g)| t + step * (g / n))
            .collect();
        reference = reference.with_params(&next).unwrap();
        ref_batch = batch(&reference, &mut ref_rng);
        let same = opt
            .policy()
            .params()
            .iter()
            .zip(reference.params())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        bitwise &= same;
    }

    // (b) Entropy-map step on a tabular policy against multiplicative weights.
    let mdp = TabularMdp::benchmark();
    let mut r = rng(9);
    let tab = TabularPolicy::from_rows(&random_rows(4, 2, &mut r)).unwrap();
    let tab_kind = EstimatorKind::Pgt {
        baseline: Baseline::None,
    };
    let tab_grad = |p: &TabularPolicy, t: &bgpo::env::Trajectory| -> bgpo::Result<ParamVector> {
        estimate_gradient(&tab_kind, t, p, None, mdp.gamma)
    };
    let mut env = bgpo::env::TabularEnv::new(mdp.clone());
    let init: Vec<_> = (0..10).map(|_| rollout(&mut env, &tab, &mut r, 5).unwrap()).collect();
    let mut worst_mw = 0.0f64;
    for (b, lambda) in [(2.0, 0.5), (0.5, 1.5)] {
        let mut opt = BregmanOptimizer::new(
            tab.clone(),
            Algorithm::Bgpo,
            ScheduleParams { b, m: 2.0, c: 1.0, lambda },
            MirrorMapKind::NegativeEntropy { row_len: Some(2) },
            ClipRange::default(),
        )
        .unwrap();
        opt.initialize(&init, tab_grad).unwrap();
        let u = opt.estimate().unwrap().u.clone();
        let info = opt.propose().unwrap();
        let eta = info.eta.value;
        let mut expected = Vec::new();
        for (row, ur) in tab.params().chunks(2).zip(u.chunks(2)) {
            let w: Vec<f64> = row.iter().zip(ur).map(|(t, u)| t * (-lambda * u).exp()).collect();
            let z: f64 = w.iter().sum();
            expected.extend(row.iter().zip(&w).map(|(t, w)| (1.0 - eta) * t + eta * w / z));
        }
        worst_mw = worst_mw.max(max_abs_diff(opt.policy().params(), &expected));
    }

    // (c) VR-BGPO with θ frozen collapses to the BGPO momentum rule.
    let mut vr = BregmanOptimizer::new(
        tab.clone(),
        Algorithm::VrBgpo,
        ScheduleParams { b: 0.5, m: 2.0, c: 3.0, lambda: 1e-300 },
        MirrorMapKind::NegativeEntropy { row_len: Some(2) },
        ClipRange::default(),
    )
    .unwrap();
    vr.initialize(&init, tab_grad).unwrap();
    let mut collapse = true;
    for _ in 0..20 {
        let u_prev = vr.estimate().unwrap().u.clone();
        vr.propose().unwrap();
        let frozen = vr.policy().params() == vr.previous().unwrap().params();
        let batch: Vec<_> = (0..10).map(|_| rollout(&mut env, vr.policy(), &mut r, 5).unwrap()).collect();
        let info = vr.absorb(&batch, tab_grad).unwrap();
        let n = batch.len() as f64;
        let mut g = vec![0.0; u_prev.len()];
        for t in &batch {
            for (a, b) in g.iter_mut().zip(tab_grad(vr.policy(), t).unwrap().iter()) {
                *a += b;
            }
        }
        let g: Vec<f64> = g.iter().map(|x| x / n).collect();
        let bgpo_rule = momentum_update(&u_prev, info.beta, &g, None);
        let by_hand: Vec<f64> = u_prev
            .iter()
            .zip(&g)
            .map(|(u, g)| -info.beta * g + (1.0 - info.beta) * u)
            .collect();
        collapse &= frozen
            && info.mean_weight == 1.0
            && vr.estimate().unwrap().u == bgpo_rule
            && bgpo_rule.as_slice() == by_hand.as_slice();
    }

    outcome(
        bitwise && worst_mw <= 1e-12 && collapse,
        format!(
            "(a) 100 iterations bitwise: {bitwise}; (b) max deviation from multiplicative weights {worst_mw:.1e}; (c) frozen-θ collapse exact: {collapse}"
        ),
    )
}

fn desk_scale_learning() -> Outcome {
    let start = Instant::now();
    let base = preset("cartpole-bgpo-diag").unwrap();
    let seeds = [0u64, 1, 2, 3, 4];
    let mut best = vec![];
    for &seed in &seeds {
        let out = harness::train(&RunConfig { seed, ..base.clone() }).unwrap();
        let within: Vec<f64> = out
            .records
            .iter()
            .filter(|r| r.timesteps <= 500_000)
            .map(|r| r.eval_return)
            .collect();
        best.push(within.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
    let elapsed = start.elapsed();
    let hits = best.iter().filter(|b| **b >= 90.0).count();
    outcome(
        hits >= 4 && elapsed <= Duration::from_secs(600),
        format!(
            "{hits}/5 seeds reach eval return ≥ 90 (best per seed {:?}); {:.0}s total",
            best,
            elapsed.as_secs_f64()
        ),
    )
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn metric_trend() -> Outcome {
    let mut lines = vec![];
    let mut all = true;
    for name in ["tabular-bgpo-theorem", "tabular-vrbgpo-theorem"] {
        let mut wins = 0;
        let mut ratios = vec![];
        for seed in 0..5 {
            let config = RunConfig {
                seed,
                ..preset(name).unwrap()
            };
            let out = harness::train(&config).unwrap();
            let metric: Vec<f64> = out.iterations.iter().map(|r| r.exact_metric.unwrap()).collect();
            let tenth = (metric.len() / 10).max(1);
            let first = median(metric[..tenth].to_vec());
            let last = median(metric[metric.len() - tenth..].to_vec());
            wins += (last < first) as usize;
            ratios.push(format!("{:.2}", last / first));
        }
        all &= wins == 5;
        lines.push(format!("{name} {wins}/5 (last/first {})", ratios.join(",")));
    }
    outcome(all, lines.join("; "))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{"preset": "cartpole-bgpo-diag", "total_timesteps": 20000, "eval_interval": 5000}"#,
    )
    .unwrap();
    let train = |root: &Path| {
        Command::new(env!("CARGO_BIN_EXE_bgpo"))
            .args(["train", "--config"])
            .arg(&config_path)
            .args(["--seed", "11"])
            .env(harness::OUTPUT_ROOT_VAR, root)
            .status()
            .unwrap()
            .success()
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ran = train(&a) && train(&b);
    let records = |root: &Path| std::fs::read(root.join("cartpole-bgpo-diag-seed11/records.csv")).unwrap_or_default();
    let identical = ran && !records(&a).is_empty() && records(&a) == records(&b);

    let base = RunConfig {
        total_timesteps: 2000,
        eval_interval: 500,
        ..preset("cartpole-bgpo-diag").unwrap()
    };
    let single = sweep::sweep(&base, &[5], &dir.path().join("single")).unwrap();
    let run = harness::train(&RunConfig { seed: 5, ..base.clone() }).unwrap();
    let single_exact = single.iter().zip(&run.records).all(|(a, r)| {
        a.eval_mean.to_bits() == r.eval_return.to_bits()
            && a.train_mean.to_bits() == r.train_return.to_bits()
            && a.eval_std == 0.0
    }) && single.len() == run.records.len();
    let twice = sweep::sweep(&base, &[5, 5], &dir.path().join("twice")).unwrap();
    let constant_exact = twice
        .iter()
        .zip(&single)
        .all(|(t, s)| t.eval_mean.to_bits() == s.eval_mean.to_bits() && t.eval_std == 0.0 && t.train_std == 0.0);
    outcome(
        identical && single_exact && constant_exact,
        format!(
            "records.csv byte-identical across two CLI runs: {identical}; single-seed aggregate exact: {single_exact}; constant-return aggregate exact: {constant_exact}"
        ),
    )
}

fn vr_comparison() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut base = preset("mountaincar-bgpo-diag").unwrap();
    base.env.horizon = Some(200);
    base.policy.hidden = vec![16, 16];
    base.batch_size = 10;
    base.total_timesteps = 20_000;
    base.eval_interval = 5_000;
    base.eval_episodes = 3;
    let report = sweep::compare(&base, &[0, 1], dir.path()).unwrap();
    let svg = std::fs::read_to_string(&report.svg).unwrap_or_default();
    let summary = std::fs::read_to_string(&report.summary).unwrap_or_default();
    let generated = report.csv.exists()
        && svg.matches("<polyline").count() == 2
        && summary.contains("VR-BGPO");
    let last = report.rows.last().unwrap();
    outcome(
        generated,
        format!(
            "report and plot written; final eval BGPO {:.2} ± {:.2}, VR-BGPO {:.2} ± {:.2} at {} timesteps (report only)",
            last.bgpo_mean, last.bgpo_std, last.vrbgpo_mean, last.vrbgpo_std, last.timesteps
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("prox closed forms vs inner solver", prox_equivalence),
        ("lp link conjugacy", link_conjugacy),
        ("gradient correctness", gradient_correctness),
        ("estimator unbiasedness", estimator_unbiasedness),
        ("importance-weight law", importance_weight_law),
        ("schedule and clamp exactness", schedule_exactness),
        ("unification", unification),
        ("desk-scale learning on cartpole", desk_scale_learning),
        ("convergence-metric trend", metric_trend),
        ("determinism", determinism),
        ("vr comparison report", vr_comparison),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        failed += !o.passed as usize;
        println!(
            "{} {:>2} {name}: {} [{:.1}s]",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
