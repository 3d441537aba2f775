//! Bregman distances, prox steps and Bregman gradients for every mirror map.
//!
//! ```text
//! cargo run --example mirror_maps
//! ```

use bgpo::mirror::{link, link_conjugate, MirrorMap, MirrorMapKind};

fn main() -> bgpo::Result<()> {
    let theta = [0.4, -1.2, 2.0];
    let u = [0.5, -0.25, 1.0];
    let lambda = 0.1;

    let kinds = [
        MirrorMapKind::Euclidean,
        MirrorMapKind::LpNorm { p: 1.5 },
        MirrorMapKind::LpNorm { p: 3.0 },
        MirrorMapKind::DiagonalAdaptive { alpha: 1e-8, beta: 0.999 },
    ];
    for kind in kinds {
        let mut map = MirrorMap::new(kind.clone(), theta.len())?;
        // The diagonal map adapts to the gradients it has seen.
        map.observe(&u)?;
        let tilde = map.prox_step(&theta, &u, lambda)?;
        let grad = map.bregman_gradient(&theta, &u, lambda)?;
        println!("{kind:?}");
        println!("  prox           {:?}", tilde.as_slice());
        println!("  bregman grad   {:?}", grad.as_slice());
        println!("  D(prox, theta) {:.6}", map.bregman_distance(&tilde, &theta)?);
    }

    // Negative entropy lives on the simplex: the prox is multiplicative weights.
    let simplex = MirrorMap::new(MirrorMapKind::NegativeEntropy { row_len: None }, 2)?;
    let next = simplex.prox_step(&[0.5, 0.5], &[2f64.ln(), 0.0], 1.0)?;
    println!("entropy prox of (1/2, 1/2) with u = (ln 2, 0): {:?}", next.as_slice());
    println!(
        "KL((1/4, 3/4) || (1/2, 1/2)) = {:.6}",
        simplex.bregman_distance(&[0.25, 0.75], &[0.5, 0.5])?
    );

    let x = [0.3, -0.7, 1.1];
    let y = link(3.0, &x)?;
    println!("lp link p=3: {x:?} -> {y:?} -> {:?}", link_conjugate(3.0, &y)?);
    Ok(())
}
