//! Exact policy value and gradient on the tabular benchmark, and how well
//! Monte-Carlo estimators approach it.
//!
//! ```text
//! cargo run --release --example tabular_exact_gradient
//! ```

use bgpo::env::{exact_policy_value_and_gradient, TabularMdp};
use bgpo::estimate::{Baseline, EstimatorKind};
use bgpo::harness::check::tabular_oracle;
use bgpo::policy::TabularPolicy;

fn main() -> bgpo::Result<()> {
    let mdp = TabularMdp::benchmark();
    let policy = TabularPolicy::from_rows(&[
        vec![0.3, 0.7],
        vec![0.6, 0.4],
        vec![0.5, 0.5],
        vec![0.2, 0.8],
    ])?;
    let (j, grad) = exact_policy_value_and_gradient(&mdp, &policy)?;
    println!("J = {j:.6}");
    println!("dJ/dpi = {grad:.4?}");

    let kind = EstimatorKind::Pgt {
        baseline: Baseline::None,
    };
    for samples in [1_000, 10_000, 100_000] {
        let cmp = tabular_oracle(&kind, &mdp, &policy, samples, 0)?;
        println!("{samples:>7} samples: max |z| = {:.2}", cmp.max_abs_z());
    }
    Ok(())
}
