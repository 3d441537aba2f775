//! BGPO with the diagonal adaptive mirror map on CartPole.
//!
//! The default budget is a quick 50k timesteps; pass `full` for the preset's
//! 500k.
//!
//! ```text
//! cargo run --release --example cartpole_bgpo [full]
//! ```

use bgpo::harness::{preset, train, RunConfig};

fn main() -> bgpo::Result<()> {
    let full = std::env::args().any(|a| a == "full");
    let mut config: RunConfig = preset("cartpole-bgpo-diag")?;
    if !full {
        config.total_timesteps = 50_000;
        config.eval_interval = 5_000;
    }
    let out = train(&config)?;
    println!("{:>9} {:>8} {:>8}", "timesteps", "train", "eval");
    for r in &out.records {
        println!("{:>9} {:>8.2} {:>8.2}", r.timesteps, r.train_return, r.eval_return);
    }
    println!(
        "{} iterations, {} trajectories, {} env steps",
        out.iterations.len(),
        out.trajectories,
        out.env_steps
    );
    Ok(())
}
