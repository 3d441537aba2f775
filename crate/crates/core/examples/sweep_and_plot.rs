//! A three-seed sweep of the tabular theorem-regime preset, aggregated across
//! seeds and rendered to SVG.
//!
//! ```text
//! cargo run --release --example sweep_and_plot
//! ```

use bgpo::harness::{output_root, plot, preset, sweep};

fn main() -> bgpo::Result<()> {
    let config = preset("tabular-vrbgpo-theorem")?;
    let dir = output_root().join("tabular-sweep-example");
    let rows = sweep::sweep(&config, &[0, 1, 2], &dir)?;
    for r in &rows {
        println!("{:>6} {:>8.4} ± {:.4}", r.timesteps, r.eval_mean, r.eval_std);
    }
    let svg = dir.join("aggregate.svg");
    plot::plot_csv(&dir.join("aggregate.csv"), &svg)?;
    println!("wrote {}", svg.display());
    Ok(())
}
