//! No-arbitrage pricing of payoffs on the liquid futures.
//!
//! Prices calls, puts, and a digital across strikes under a piecewise
//! volatility curve, printing prices with hedge ratios and verifying
//! put-call parity row by row.
//!
//! Run with: `cargo run --release --example price_futures_option`

use ouyield::futures_pricing::{
    delta_futures_derivative, price_futures_derivative, sigma_bar, FuturesPayoff, VolCurve,
};

fn main() -> ouyield::Result<()> {
    let vol = VolCurve::piecewise(vec![0.0, 0.5], vec![0.22, 0.32])?;
    let (f_t, maturity, r) = (100.0, 1.0, 0.04);
    let total_vol = sigma_bar(0.0, maturity, &vol)?;
    println!("root integrated variance over [0, {maturity}]: {total_vol:.6}");
    println!("\nstrike, call, put, digital, call_hedge, parity_gap");
    for strike in [80.0, 90.0, 100.0, 110.0, 125.0] {
        let call = price_futures_derivative(&FuturesPayoff::call(strike), 0.0, f_t, maturity, &vol, r)?;
        let put = price_futures_derivative(&FuturesPayoff::put(strike), 0.0, f_t, maturity, &vol, r)?;
        let digital =
            price_futures_derivative(&FuturesPayoff::digital(strike), 0.0, f_t, maturity, &vol, r)?;
        let hedge =
            delta_futures_derivative(&FuturesPayoff::call(strike), 0.0, f_t, maturity, &vol, r)?;
        let parity_gap = call - put - (-r * maturity).exp() * (f_t - strike);
        println!(
            "{strike:6.1}, {call:8.4}, {put:8.4}, {digital:.4}, {hedge:8.4}, {parity_gap:+.2e}"
        );
    }

    // Arbitrary smooth payoff through the same quadrature.
    let log_contract = FuturesPayoff::custom(|x: f64| (x / 100.0).ln());
    let v = price_futures_derivative(&log_contract, 0.0, f_t, maturity, &vol, r)?;
    println!("\nlog contract ln(F_T/100): {v:.6}");
    println!("analytic -sigma_bar^2/2 discounted: {:.6}", (-r * maturity as f64).exp() * -0.5 * total_vol * total_vol);
    Ok(())
}
