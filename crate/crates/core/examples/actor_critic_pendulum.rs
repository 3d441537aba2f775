//! Actor-critic VR-BGPO on Pendulum: GAE advantages from a value network that
//! is refit every iteration. Prints how many importance weights were clipped
//! and the critic's loss as training goes.
//!
//! ```text
//! cargo run --release --example actor_critic_pendulum
//! ```

use bgpo::harness::{preset, train};

fn main() -> bgpo::Result<()> {
    let mut config = preset("pendulum-vrbgpo-diag")?;
    config.env.horizon = Some(200);
    config.policy.hidden = vec![16, 16];
    config.batch_size = 10;
    config.total_timesteps = 40_000;
    config.eval_interval = 10_000;
    config.eval_episodes = 3;
    let out = train(&config)?;
    println!("{:>4} {:>9} {:>10} {:>7} {:>7} {:>12}", "k", "steps", "train", "eta", "clipped", "value loss");
    for r in out.iterations.iter().step_by(2) {
        println!(
            "{:>4} {:>9} {:>10.2} {:>7.4} {:>7} {:>12.3e}",
            r.iteration,
            r.env_steps,
            r.train_return,
            r.eta,
            r.clipped_weights,
            r.value_loss.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
