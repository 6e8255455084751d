//! Delta hedging a futures option along simulated paths.
//!
//! Rebalances the replicating position at each grid time and accrues the
//! trading gains; the terminal hedging error shrinks like the square root of
//! the step size.
//!
//! Run with: `cargo run --release --example hedge_replication`

use ouyield::futures_pricing::{
    delta_futures_derivative, price_futures_derivative, FuturesPayoff, VolCurve,
};
use ouyield::{accrue_gains, simulate_risk_neutral, ModelParams, RngConfig};

fn main() -> ouyield::Result<()> {
    let params = ModelParams::new(0.0, 0.25, 0.03, 100.0, 2.0, 1.0)?;
    let vol = VolCurve::constant(params.sigma)?;
    let strike = 100.0;
    let maturity = 1.0;
    let payoff = FuturesPayoff::call(strike);
    let premium = price_futures_derivative(&payoff, 0.0, params.f0, maturity, &vol, params.r)?;
    println!("call premium at t = 0: {premium:.4}");

    let n_paths = 300u64;
    println!("\nsteps, hedge error mean, hedge error sd");
    for n_steps in [16usize, 64, 256] {
        let mut errors = Vec::with_capacity(n_paths as usize);
        for i in 0..n_paths {
            let path = simulate_risk_neutral(
                &params,
                maturity,
                n_steps,
                &RngConfig::new(31).with_stream(i),
            )?;
            let futures = path.futures_prices();
            let mut strategy = Vec::with_capacity(futures.len());
            for (k, &t) in path.times().iter().enumerate() {
                if k + 1 == futures.len() {
                    strategy.push(0.0);
                } else {
                    strategy.push(delta_futures_derivative(
                        &payoff, t, futures[k], maturity, &vol, params.r,
                    )?);
                }
            }
            let gains = accrue_gains(path.times(), &futures, &strategy, &params)?;
            let terminal_payoff = (futures.last().expect("nonempty") - strike).max(0.0);
            // Replication: premium compounded plus gains covers the payoff.
            let error = premium * (params.r * maturity).exp() + gains - terminal_payoff;
            errors.push(error);
        }
        let mean: f64 = errors.iter().sum::<f64>() / errors.len() as f64;
        let sd: f64 = (errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
            / (errors.len() as f64 - 1.0))
            .sqrt();
        println!("{n_steps:5}, {mean:+.5}, {sd:.5}");
    }
    println!("\nthe error sd scales like 1/sqrt(steps): quadrupling steps halves it");
    Ok(())
}
