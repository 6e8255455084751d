use ouyield::density::{gamma_cond, psi1, psi2, InversionConfig};
use ouyield::numerics::gauss_legendre;

fn psi2_window(t: f64, x: f64, y: f64) -> (f64, f64) {
    let h = 1e-4;
    let gb = |beta: f64| gamma_cond(t, (2.0 * beta).sqrt(), x, y).unwrap();
    let mean = (1.0 - gb(h)) / h;
    let second = (gb(2.0 * h) - 2.0 * gb(h) + 1.0) / (h * h);
    let sd = (second - mean * mean).max(1e-12).sqrt();
    (y * y / t + 1e-9, mean + 30.0 * sd)
}

fn main() {
    let t = 1.0f64;
    let sigma = 0.4f64;
    let y0 = 100.0f64.ln();
    let a = 0.08f64;
    // p-cell 4 and q-cell 4 from the acceptance edges.
    let p_cell = [4.561339499725239, 4.6948120144031];
    let q_cell = [21.16722385592667, 22.382678588799187];
    let b_lo = (p_cell[0] - y0 * t) / sigma;
    let b_hi = (p_cell[1] - y0 * t) / sigma;
    let inv = InversionConfig::default();
    let (gl_c, gw_c) = gauss_legendre(10);

    let integrand = |b: f64| -> f64 {
        let pv = y0 * t + sigma * b;
        let c1 = (q_cell[0] - 2.0 * y0 * pv + y0 * y0 * t) / (sigma * sigma);
        let c2 = (q_cell[1] - 2.0 * y0 * pv + y0 * y0 * t) / (sigma * sigma);
        let (slo, shi) = psi2_window(t, a, b);
        let lo = c1.max(slo);
        let hi = c2.min(shi);
        if hi <= lo { return 0.0; }
        let panels = 1 + ((hi - lo) / 0.5) as usize;
        let h = (hi - lo) / panels as f64;
        let mut mass = 0.0;
        for k in 0..panels {
            let mid = lo + (k as f64 + 0.5) * h;
            for (n, w) in gl_c.iter().zip(&gw_c) {
                mass += w * 0.5 * h * psi2(t, mid + 0.5 * h * n, a, b, &inv).unwrap();
            }
        }
        psi1(t, a, b).unwrap() * mass
    };

    // Composite GL: 32 panels x GL-6 (as in the acceptance test).
    let (gl_b, gw_b) = gauss_legendre(6);
    let b_panels = 32;
    let hb = (b_hi - b_lo) / b_panels as f64;
    let mut quad = 0.0;
    for kb in 0..b_panels {
        let mid = b_lo + (kb as f64 + 0.5) * hb;
        for (n, w) in gl_b.iter().zip(&gw_b) {
            quad += w * 0.5 * hb * integrand(mid + 0.5 * hb * n);
        }
    }
    // Brute midpoint with 2000 points.
    let m = 2000;
    let hm = (b_hi - b_lo) / m as f64;
    let brute: f64 = (0..m).map(|k| integrand(b_lo + (k as f64 + 0.5) * hm) * hm).sum();
    println!("composite 32xGL6: {quad:.8}");
    println!("midpoint 2000:    {brute:.8}");
}
