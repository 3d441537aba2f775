//! Driving the optimizer by hand: propose, sample at the new parameters,
//! absorb. Uses the tabular benchmark with the entropy map and logs the exact
//! Bregman-gradient norm.
//!
//! ```text
//! cargo run --release --example custom_loop
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bgpo::env::{exact_policy_value_and_gradient, rollout, TabularEnv, TabularMdp, Trajectory};
use bgpo::estimate::{estimate_gradient, Baseline, ClipRange, EstimatorKind};
use bgpo::mirror::MirrorMapKind;
use bgpo::optim::{Algorithm, BregmanOptimizer, ScheduleParams};
use bgpo::policy::{Policy, TabularPolicy};
use bgpo::ParamVector;

fn main() -> bgpo::Result<()> {
    let mdp = TabularMdp::benchmark();
    let mut env = TabularEnv::new(mdp.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let kind = EstimatorKind::Pgt {
        baseline: Baseline::None,
    };
    let grad = |p: &TabularPolicy, t: &Trajectory| -> bgpo::Result<ParamVector> {
        estimate_gradient(&kind, t, p, None, mdp.gamma)
    };

    let algorithm = Algorithm::VrBgpo;
    let mut opt = BregmanOptimizer::new(
        TabularPolicy::uniform(mdp.n_states(), mdp.n_actions())?,
        algorithm,
        ScheduleParams::theorem_regime(algorithm, 1.0, 1.0, 0.5),
        MirrorMapKind::NegativeEntropy {
            row_len: Some(mdp.n_actions()),
        },
        ClipRange::default(),
    )?;
    let mut sample = |p: &TabularPolicy| -> bgpo::Result<Vec<Trajectory>> {
        (0..10).map(|_| rollout(&mut env, p, &mut rng, mdp.horizon)).collect()
    };
    let init = sample(opt.policy())?;
    opt.initialize(&init, grad)?;
    for k in 1..=2000 {
        let (_, grad_j) = exact_policy_value_and_gradient(&mdp, opt.policy())?;
        let metric = opt.exact_metric(&grad_j)?;
        let (proposed, absorbed) = opt.step(&mut sample, grad)?;
        if k % 200 == 0 {
            let (j, _) = exact_policy_value_and_gradient(&mdp, opt.policy())?;
            println!(
                "k {k:>4}  J {j:.4}  |B| {metric:.2e}  eta {:.3}  beta {:.3}  w {:.3}",
                proposed.eta.value, absorbed.beta, absorbed.mean_weight
            );
        }
    }
    println!("final policy rows: {:?}", opt.policy().params());
    Ok(())
}
