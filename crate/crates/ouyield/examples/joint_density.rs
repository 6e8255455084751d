//! Semi-closed-form density of the augmented state `(Y, P, Q)`.
//!
//! Evaluates the conditional Laplace transform of the squared Brownian
//! integral, inverts it numerically on the Talbot contour, and maps the
//! result to the state coordinates. The marginal in `y` recovered by
//! integrating out `(p, q)` matches the lognormal marginal analytically.
//!
//! Run with: `cargo run --release --example joint_density`

use ouyield::density::{gamma_cond, joint_mgf, phi, psi2, InversionConfig};
use ouyield::ModelParams;

fn main() -> ouyield::Result<()> {
    let t = 1.0;

    println!("conditional Laplace transform at the endpoint (x, y) = (0.5, 0.2):");
    println!("alpha, Gamma_t(alpha | x, y)");
    for alpha in [0.0, 0.5, 1.0, 2.0] {
        println!("{alpha:4.1}, {:.8}", gamma_cond(t, alpha, 0.5, 0.2)?);
    }

    println!("\njoint MGF E exp(0.3 W - 0.2 int W - 0.245 int W^2):");
    println!("  {:.8}", joint_mgf(t, 0.7, 0.3, -0.2)?);

    let inv = InversionConfig::default();
    println!("\nconditional density of int W^2 given (x, y) = (0.5, 0.2):");
    println!("z, psi2(z | x, y)");
    for z in [0.1, 0.2, 0.4, 0.8, 1.6] {
        println!("{z:4.2}, {:.6}", psi2(t, z, 0.5, 0.2, &inv)?);
    }

    let params = ModelParams::new(0.05, 0.4, 0.03, 100.0, 4.0, 1.0)?;
    let y0 = params.y0();
    println!("\nstate density phi_t at representative points (t = {t}):");
    println!("y, p, q, phi");
    for (dy, dp, dq) in [(0.0, 0.0, 0.3), (-0.3, -0.2, 0.5), (0.2, 0.1, 0.2)] {
        let y = y0 + dy;
        let p = y0 * t + dp;
        let q = y0 * y0 * t + 2.0 * y0 * dp + dq;
        println!("{y:.4}, {p:.4}, {q:.4}, {:.6}", phi(t, y, p, q, &params, &inv)?);
    }
    Ok(())
}
