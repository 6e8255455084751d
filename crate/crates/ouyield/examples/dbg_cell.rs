use ouyield::{simulate_risk_neutral, ModelParams, RngConfig};
use rayon::prelude::*;

fn main() {
    let params = ModelParams::new(0.05, 0.4, 0.03, 100.0, 4.0, 1.0).unwrap();
    let t = 1.0f64;
    // Frozen edges from the acceptance pilot (seed 40, 1e5 paths, 256 steps).
    let pilot: Vec<[f64; 3]> = (0..100_000u64)
        .into_par_iter()
        .map(|i| {
            let path = simulate_risk_neutral(&params, t, 256, &RngConfig::new(40).with_stream(i)).unwrap();
            let s = path.terminal();
            [s.y, s.p, s.q]
        })
        .collect();
    let mut edges = [[0.0f64; 2]; 3];
    for d in 0..3 {
        let mut vals: Vec<f64> = pilot.iter().map(|v| v[d]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges[d] = [vals[1000], vals[98_999]];
    }
    let bins = 8usize;
    let width = |d: usize| (edges[d][1] - edges[d][0]) / bins as f64;
    let target = (4usize, 4usize, 4usize);
    for n_steps in [256usize, 1024, 4096] {
        let n = if n_steps <= 1024 { 4_000_000u64 } else { 2_000_000 };
        let hits: u64 = (0..n / 10_000)
            .into_par_iter()
            .map(|c| {
                let mut local = 0u64;
                for i in 0..10_000u64 {
                    let path = simulate_risk_neutral(&params, t, n_steps, &RngConfig::new(91).with_stream(c * 10_000 + i)).unwrap();
                    let s = path.terminal();
                    let coords = [s.y, s.p, s.q];
                    let mut idx = [0usize; 3];
                    let mut inside = true;
                    for d in 0..3 {
                        let rel = (coords[d] - edges[d][0]) / width(d);
                        if rel < 0.0 || rel >= bins as f64 { inside = false; break; }
                        idx[d] = rel as usize;
                    }
                    if inside && idx == [target.0, target.1, target.2] { local += 1; }
                }
                local
            })
            .sum();
        let p = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        println!("n_steps={n_steps:5}  freq(4,4,4) = {p:.6} +- {se:.6}");
    }
    println!("model integral said ~0.06752; coarse empirical said 0.065623");
}
