//! Exact-transition simulation under both measures.
//!
//! Draws hidden parameters from a two-atom prior, simulates log futures
//! paths with the exact Gaussian transition, and checks the risk-neutral
//! martingale property of the futures price by Monte Carlo.
//!
//! Run with: `cargo run --release --example simulate_paths`

use ouyield::{
    simulate_physical_with_prior, simulate_risk_neutral, ModelParams, Prior, RngConfig, ThetaAtom,
};

fn main() -> ouyield::Result<()> {
    let params = ModelParams::new(0.05, 0.3, 0.03, 100.0, 2.0, 1.0)?;
    let prior = Prior::from_atoms(vec![
        (ThetaAtom::new(0.12, 0.8)?, 0.6),
        (ThetaAtom::new(-0.08, 0.4)?, 0.4),
    ])?;
    let rng = RngConfig::new(2024);

    println!("three mixed paths under the physical measure (terminal states):");
    let paths = simulate_physical_with_prior(&prior, &params, 1.0, 256, 3, &rng)?;
    for (i, (atom, path)) in paths.iter().enumerate() {
        let s = path.terminal();
        println!(
            "  path {i}: drawn (theta0, theta1) = ({:+.2}, {:.2})  Y_T = {:.4}  P_T = {:.4}  Q_T = {:.4}",
            atom.theta0, atom.theta1, s.y, s.p, s.q
        );
    }

    // E[exp(Y_T)] = F_0 under the pricing measure.
    let n_paths = 200_000u64;
    let horizon = 1.5;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..n_paths {
        let path = simulate_risk_neutral(&params, horizon, 16, &rng.with_stream(i))?;
        let f_t = path.terminal().y.exp();
        sum += f_t;
        sum_sq += f_t * f_t;
    }
    let mean = sum / n_paths as f64;
    let var = sum_sq / n_paths as f64 - mean * mean;
    let se = (var / n_paths as f64).sqrt();
    println!("\nrisk-neutral martingale check over {n_paths} paths:");
    println!(
        "  E[F_T] = {mean:.4} +- {se:.4}   (F_0 = {}, deviation = {:+.2} se)",
        params.f0,
        (mean - params.f0) / se
    );

    println!("\nfirst path as CSV:");
    let mut csv = Vec::new();
    let short = simulate_risk_neutral(&params, 0.25, 4, &rng)?;
    short.write_csv(&mut csv).expect("in-memory write");
    print!("{}", String::from_utf8(csv).expect("utf8"));
    Ok(())
}
