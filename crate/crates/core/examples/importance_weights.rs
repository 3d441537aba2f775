//! Trajectory importance weights between two nearby Gaussian policies, raw
//! and clipped to the default [0.5, 1.5].
//!
//! ```text
//! cargo run --release --example importance_weights
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bgpo::env::{rollout, Pendulum};
use bgpo::estimate::{clip_log_ratio, log_importance_ratio, ClipRange};
use bgpo::mlp::MlpSpec;
use bgpo::policy::{GaussianPolicy, Policy};

fn main() -> bgpo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let old = GaussianPolicy::new(MlpSpec::with_hidden(3, &[8], 1)?, &mut rng)?;
    let mut env = Pendulum::new();
    for shift in [0.001, 0.01, 0.05] {
        let params: Vec<f64> = old.params().iter().map(|p| p + shift).collect();
        let new = old.with_params(&params)?;
        let (mut raw, mut clipped, mut n_clipped) = (0.0, 0.0, 0);
        let n = 20_000;
        for _ in 0..n {
            let traj = rollout(&mut env, &new, &mut rng, 20)?;
            let log_w = log_importance_ratio(&traj, &old, &new)?;
            let w = clip_log_ratio(log_w, ClipRange::default());
            raw += log_w.exp();
            clipped += w.weight;
            n_clipped += w.clipped as usize;
        }
        println!(
            "shift {shift:>4}: mean raw weight {:.4}, mean clipped {:.4}, {:.1}% clipped",
            raw / n as f64,
            clipped / n as f64,
            100.0 * n_clipped as f64 / n as f64
        );
    }
    Ok(())
}
