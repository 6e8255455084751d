//! Bayesian filtering of the hidden convenience yield and speed.
//!
//! Simulates a path under one atom of a two-atom prior, then runs the
//! closed-form filter along the path. The posterior weight of the true atom
//! and the Bayes estimates converge as the path reveals the drift.
//!
//! Run with: `cargo run --release --example filter_a_path`

use ouyield::filtering::{filter_along_path, innovation_path};
use ouyield::{simulate_physical, ModelParams, Prior, RngConfig, ThetaAtom};

fn main() -> ouyield::Result<()> {
    let params = ModelParams::new(0.05, 0.3, 0.03, 100.0, 10.0, 1.0)?;
    let truth = ThetaAtom::new(0.25, 1.2)?;
    let other = ThetaAtom::new(-0.25, 0.3)?;
    let prior = Prior::from_atoms(vec![(truth, 1.0), (other, 1.0)])?;

    let path = simulate_physical(&truth, &params, 8.0, 512, &RngConfig::new(99))?;
    let posts = filter_along_path(&prior, &path, &params);

    println!("true atom: (theta0, theta1) = ({:+.2}, {:.2})", truth.theta0, truth.theta1);
    println!("t, weight(true atom), theta0_hat, theta1_hat");
    for k in (0..path.len()).step_by(64) {
        let (e0, e1) = posts[k].bayes_estimate();
        println!(
            "{:5.2}, {:.4}, {:+.4}, {:.4}",
            path.times()[k],
            posts[k].weight(0),
            e0,
            e1
        );
    }
    let last = posts.last().expect("nonempty");
    let (e0, e1) = last.bayes_estimate();
    println!(
        "final: weight = {:.4}, estimates = ({e0:+.4}, {e1:.4})",
        last.weight(0)
    );

    // The innovation process should look like Brownian motion.
    let innovations = innovation_path(&prior, &path, &params);
    let dt = path.times()[1] - path.times()[0];
    let incs: Vec<f64> = innovations.windows(2).map(|w| w[1] - w[0]).collect();
    let mean: f64 = incs.iter().sum::<f64>() / incs.len() as f64;
    let var: f64 =
        incs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (incs.len() as f64 - 1.0);
    println!(
        "\ninnovation increments: variance / dt = {:.3} (Brownian value 1)",
        var / dt
    );
    Ok(())
}
