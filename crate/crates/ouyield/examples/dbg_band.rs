use ouyield::density::{gamma_cond, psi2, InversionConfig};
use ouyield::numerics::gauss_legendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

// Band probability P( int W^2 in [c1, c2] | W_t = x, int W = y ) two ways:
// fixed-Talbot density integration vs exact conditioned-Gaussian simulation.
fn main() {
    let t = 1.0f64;
    let (x_target, y_target) = (0.08f64, 0.05f64);
    let (c1, c2) = (0.05f64, 0.45f64);

    // Route 1: integrate psi2.
    let inv = InversionConfig::default();
    let (gl, gw) = gauss_legendre(10);
    let mut band = 0.0;
    let panels = 16;
    let lo = c1.max(y_target * y_target / t + 1e-9);
    let h = (c2 - lo) / panels as f64;
    for k in 0..panels {
        let mid = lo + (k as f64 + 0.5) * h;
        for (n, w) in gl.iter().zip(&gw) {
            band += w * 0.5 * h * psi2(t, mid + 0.5 * h * n, x_target, y_target, &inv).unwrap();
        }
    }
    println!("psi2 band mass: {band:.6}");
    // sanity: full mass and transform round trip at alpha=1
    let mut full = 0.0;
    let hi = 6.0;
    let h2 = (hi - lo) / 60.0;
    for k in 0..60 {
        let mid = lo + (k as f64 + 0.5) * h2;
        for (n, w) in gl.iter().zip(&gw) {
            full += w * 0.5 * h2 * psi2(t, mid + 0.5 * h2 * n, x_target, y_target, &inv).unwrap();
        }
    }
    println!("psi2 full mass: {full:.6}");

    // Route 2: conditioned-Gaussian simulation with trapezoid statistics.
    for steps in [256usize, 1024] {
        let dt = t / steps as f64;
        let times: Vec<f64> = (1..=steps).map(|i| i as f64 * dt).collect();
        let mut c = vec![dt; steps];
        c[steps - 1] = 0.5 * dt;
        let cov_w_s1: Vec<f64> = times.clone();
        let cov_w_s2: Vec<f64> = (0..steps)
            .map(|i| (0..steps).map(|j| c[j] * times[i].min(times[j])).sum())
            .collect();
        let var_s1 = t;
        let cov_s1_s2: f64 = (0..steps).map(|j| c[j] * times[j]).sum();
        let var_s2: f64 = (0..steps)
            .map(|i| (0..steps).map(|j| c[i] * c[j] * times[i].min(times[j])).sum::<f64>())
            .sum();
        let det = var_s1 * var_s2 - cov_s1_s2 * cov_s1_s2;
        let gain: Vec<(f64, f64)> = (0..steps)
            .map(|i| {
                (
                    (cov_w_s1[i] * var_s2 - cov_w_s2[i] * cov_s1_s2) / det,
                    (cov_w_s2[i] * var_s1 - cov_w_s1[i] * cov_s1_s2) / det,
                )
            })
            .collect();
        let n_paths = 400_000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut w = vec![0.0f64; steps];
        let mut hits = 0u64;
        for _ in 0..n_paths {
            let mut acc = 0.0;
            for wi in w.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                acc += dt.sqrt() * z;
                *wi = acc;
            }
            let s1 = w[steps - 1];
            let s2: f64 = (0..steps).map(|j| c[j] * w[j]).sum();
            let (d1, d2) = (x_target - s1, y_target - s2);
            let mut q = 0.0;
            let mut prev = 0.0f64;
            for i in 0..steps {
                let wc = w[i] + gain[i].0 * d1 + gain[i].1 * d2;
                q += 0.5 * dt * (prev * prev + wc * wc);
                prev = wc;
            }
            if q >= c1 && q < c2 { hits += 1; }
        }
        let p = hits as f64 / n_paths as f64;
        println!("conditioned MC band ({steps} steps): {p:.6} +- {:.6}", (p*(1.0-p)/n_paths as f64).sqrt());
    }
}
