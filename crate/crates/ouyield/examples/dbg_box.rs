use ouyield::density::psi1;
use ouyield::numerics::gauss_legendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let t = 1.0f64;
    let sigma = 0.4f64;
    let y0 = 100.0f64.ln();
    let y_cell = [4.523466638217606f64, 4.753991855260415];
    let p_cell = [4.561339499725239f64, 4.6948120144031];
    let b_lo = (p_cell[0] - y0 * t) / sigma;
    let b_hi = (p_cell[1] - y0 * t) / sigma;

    // Quadrature of pref * psi1 over the (y, p) cell in (a, b) coordinates.
    let (gl, gw) = gauss_legendre(40);
    let a_lo = (y_cell[0] - y0) / sigma;
    let a_hi = (y_cell[1] - y0) / sigma;
    let mut quad = 0.0;
    for (na, wa) in gl.iter().zip(&gw) {
        let a = 0.5 * (a_lo + a_hi) + 0.5 * (a_hi - a_lo) * na;
        let pref = (-0.5 * sigma * a - sigma * sigma * t / 8.0).exp();
        for (nb, wb) in gl.iter().zip(&gw) {
            let b = 0.5 * (b_lo + b_hi) + 0.5 * (b_hi - b_lo) * nb;
            quad += wa * wb * pref * psi1(t, a, b).unwrap();
        }
    }
    quad *= 0.25 * (a_hi - a_lo) * (b_hi - b_lo);
    println!("quadrature box mass: {quad:.6}");

    // Monte Carlo from the shifted Gaussian.
    let l00 = t.sqrt();
    let l10 = 0.5 * t * t.sqrt();
    let l11 = t * t.sqrt() / (2.0 * 3.0f64.sqrt());
    let mean = (-0.5 * sigma * t, -0.25 * sigma * t * t);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 4_000_000u64;
    let mut hits = 0u64;
    for _ in 0..n {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let a = mean.0 + l00 * z1;
        let b = mean.1 + l10 * z1 + l11 * z2;
        if a >= a_lo && a < a_hi && b >= b_lo && b < b_hi {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    println!("mc box mass: {p:.6} +- {:.6}", (p * (1.0 - p) / n as f64).sqrt());
}
