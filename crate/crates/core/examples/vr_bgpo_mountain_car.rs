//! Paired BGPO vs VR-BGPO report on continuous MountainCar at a reduced
//! budget. Writes compare.csv, compare.svg and compare.md under
//! `$BGPO_OUTPUT_ROOT/mountaincar-compare`.
//!
//! ```text
//! cargo run --release --example vr_bgpo_mountain_car
//! ```

use bgpo::harness::{output_root, preset, sweep};

fn main() -> bgpo::Result<()> {
    let mut base = preset("mountaincar-bgpo-diag")?;
    base.env.horizon = Some(200);
    base.batch_size = 10;
    base.total_timesteps = 100_000;
    base.eval_interval = 10_000;
    base.eval_episodes = 5;
    let dir = output_root().join("mountaincar-compare");
    let report = sweep::compare(&base, &[0, 1, 2], &dir)?;
    println!("{:>9} {:>18} {:>18}", "timesteps", "BGPO", "VR-BGPO");
    for r in &report.rows {
        println!(
            "{:>9} {:>9.2} ± {:<6.2} {:>9.2} ± {:<6.2}",
            r.timesteps, r.bgpo_mean, r.bgpo_std, r.vrbgpo_mean, r.vrbgpo_std
        );
    }
    println!("report: {}", report.summary.display());
    println!("plot:   {}", report.svg.display());
    Ok(())
}
