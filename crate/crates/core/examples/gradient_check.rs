//! The gradient-correctness battery that `bgpo check-grad` runs.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use bgpo::harness::check::{check_grad, CheckOptions};

fn main() -> bgpo::Result<()> {
    let report = check_grad(&CheckOptions {
        quick: true,
        ..CheckOptions::default()
    })?;
    print!("{report}");
    if !report.passed() {
        std::process::exit(3);
    }
    Ok(())
}
