use ouyield::{simulate_risk_neutral, ModelParams, RngConfig};
use rayon::prelude::*;

fn main() {
    let params = ModelParams::new(0.05, 0.4, 0.03, 100.0, 4.0, 1.0).unwrap();
    let t = 1.0f64;
    let y0 = params.y0();
    let s2 = params.sigma * params.sigma;

    // Analytic moments under the pricing measure.
    // Y = y0 - s2 u/2 + s W, P = int Y, Q = int Y^2.
    let ey = y0 - 0.5 * s2 * t;
    let ep = y0 * t - 0.25 * s2 * t * t;
    // E[Y_u^2] = (y0 - s2 u /2)^2 + s2 u; E[Q] = int_0^t.
    let eq = {
        // integrate (y0 - s2 u/2)^2 + s2 u du analytically
        let a = y0;
        let b = 0.5 * s2;
        a * a * t - a * b * t * t + b * b * t * t * t / 3.0 + 0.5 * s2 * t * t
    };
    // Var(Y) = s2 t; Var(P) = s2 t^3/3; Cov(Y, P) = s2 t^2/2.
    println!("analytic: E[Y]={ey:.6} E[P]={ep:.6} E[Q]={eq:.6}");
    println!("analytic: V[Y]={:.6} V[P]={:.6} C[Y,P]={:.6}", s2 * t, s2 * t*t*t/3.0, s2*t*t/2.0);

    let n = 2_000_000u64;
    let acc: Vec<[f64; 9]> = (0..n / 10_000)
        .into_par_iter()
        .map(|c| {
            let mut m = [0.0f64; 9];
            for i in 0..10_000u64 {
                let path = simulate_risk_neutral(&params, t, 256, &RngConfig::new(41).with_stream(c * 10_000 + i)).unwrap();
                let s = path.terminal();
                m[0] += s.y; m[1] += s.p; m[2] += s.q;
                m[3] += s.y * s.y; m[4] += s.p * s.p; m[5] += s.q * s.q;
                m[6] += s.y * s.p; m[7] += s.y * s.q; m[8] += s.p * s.q;
            }
            m
        })
        .collect();
    let mut m = [0.0f64; 9];
    for a in acc { for k in 0..9 { m[k] += a[k]; } }
    let nf = n as f64;
    for k in 0..9 { m[k] /= nf; }
    println!("sample:   E[Y]={:.6} E[P]={:.6} E[Q]={:.6}", m[0], m[1], m[2]);
    println!("sample:   V[Y]={:.6} V[P]={:.6} C[Y,P]={:.6}", m[3]-m[0]*m[0], m[4]-m[1]*m[1], m[6]-m[0]*m[1]);
    println!("sample:   V[Q]={:.6} C[Y,Q]={:.6} C[P,Q]={:.6}", m[5]-m[2]*m[2], m[7]-m[0]*m[2], m[8]-m[1]*m[2]);
    println!("se(E[Y]) ~ {:.6}", ( (m[3]-m[0]*m[0]) / nf).sqrt());
    println!("se(E[Q]) ~ {:.6}", ( (m[5]-m[2]*m[2]) / nf).sqrt());
}
