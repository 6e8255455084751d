//! Exponential utility indifference pricing and optimal hedging of payoffs
//! on the illiquid spot.
//!
//! The buyer's indifference price of `H = h(Y_T, Theta)` equals the
//! no-arbitrage price of the transformed claim
//!
//! ```text
//! Hhat = (1/gamma) [ log int e^{gamma h(y, theta)} L(theta) nu(dtheta)
//!                    - log int L(theta) nu(dtheta) ]
//! ```
//!
//! evaluated at the terminal augmented state, where `L` is the likelihood
//! from [`crate::filtering::log_lambda`]; the optimal hedge replicates the
//! variant `Htilde` without the normalizer subtraction. Prices are Monte
//! Carlo averages of `e^{-rT} Hhat` over risk-neutral paths of `(Y, P, Q)`;
//! the hedge is a central difference in `y` of the conditional value of
//! `Htilde`, with common random numbers across the two bumped starts.
//!
//! Both integrals are computed over the prior atoms in the log domain; the
//! transforms share the filter's likelihood code, so there is a single
//! source of truth for `L`. Estimator reductions run in a fixed order, so
//! results do not depend on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtering::log_lambda;
use crate::model::{evaluate_payoff, AugmentedState, ModelParams, PayoffSpec, Prior};
use crate::numerics::{kahan_sum, log_sum_exp};
use crate::simulate::{simulate_risk_neutral_from, RngConfig};

/// Monte Carlo controls for pricing and hedging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub rng: RngConfig,
    /// Central-difference bump applied to the log price for the hedge.
    pub bump_y: f64,
}

impl McConfig {
    pub fn new(n_paths: usize, n_steps: usize, rng: RngConfig, bump_y: f64) -> Result<Self> {
        let cfg = McConfig { n_paths, n_steps, rng, bump_y };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 100 {
            return Err(Error::domain("n_paths must be >= 100"));
        }
        if self.n_steps == 0 {
            return Err(Error::domain("n_steps must be >= 1"));
        }
        if !(self.bump_y > 0.0 && self.bump_y < 0.1) {
            return Err(Error::domain("bump_y must lie in (0, 0.1)"));
        }
        Ok(())
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

fn check_payoff_bounded(payoff: &PayoffSpec) -> Result<()> {
    if payoff.needs_cap() {
        return Err(Error::domain(
            "unbounded payoff: the exponential transform requires a cap on call and forward kinds",
        ));
    }
    Ok(())
}

fn check_at_maturity(state: &AugmentedState, maturity: f64) -> Result<()> {
    if (state.t - maturity).abs() > 1e-9 * maturity.max(1.0) {
        return Err(Error::contract(format!(
            "transform is evaluated at the payoff date: state.t = {}, maturity = {maturity}",
            state.t
        )));
    }
    Ok(())
}

/// Both log integrals behind the transforms: the numerator with the payoff
/// tilt and the plain normalizer.
fn log_integrals(
    gamma: f64,
    state: &AugmentedState,
    prior: &Prior,
    payoff: &PayoffSpec,
    maturity: f64,
    params: &ModelParams,
) -> (f64, f64) {
    let mut tilted = Vec::with_capacity(prior.len());
    let mut plain = Vec::with_capacity(prior.len());
    for (atom, w) in prior.atoms() {
        let base = w.ln() + log_lambda(atom, state, params);
        let h = evaluate_payoff(payoff, state.y, atom, maturity, params);
        tilted.push(base + gamma * h);
        plain.push(base);
    }
    (log_sum_exp(&tilted), log_sum_exp(&plain))
}

/// The certainty-equivalent payoff transform
/// `Hhat = (1/gamma)(log int e^{gamma h} L dnu - log int L dnu)`,
/// evaluated at a terminal state.
pub fn h_hat(
    gamma: f64,
    state: &AugmentedState,
    prior: &Prior,
    payoff: &PayoffSpec,
    maturity: f64,
    params: &ModelParams,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::domain("gamma must be > 0"));
    }
    check_payoff_bounded(payoff)?;
    check_at_maturity(state, maturity)?;
    let (tilted, plain) = log_integrals(gamma, state, prior, payoff, maturity, params);
    Ok((tilted - plain) / gamma)
}

/// The unnormalized transform `Htilde = (1/gamma) log int e^{gamma h} L dnu`,
/// whose replicating strategy is the optimal hedge.
pub fn h_tilde(
    gamma: f64,
    state: &AugmentedState,
    prior: &Prior,
    payoff: &PayoffSpec,
    maturity: f64,
    params: &ModelParams,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::domain("gamma must be > 0"));
    }
    check_payoff_bounded(payoff)?;
    check_at_maturity(state, maturity)?;
    let (tilted, _) = log_integrals(gamma, state, prior, payoff, maturity, params);
    Ok(tilted / gamma)
}

/// Indifference price at time zero: the Monte Carlo average of
/// `e^{-rT} Hhat` over risk-neutral terminal states, with its standard
/// error. Path `i` runs on RNG stream `rng.stream_id + i`.
pub fn indifference_price(
    payoff: &PayoffSpec,
    maturity: f64,
    gamma: f64,
    prior: &Prior,
    params: &ModelParams,
    mc: &McConfig,
) -> Result<McEstimate> {
    params.validate()?;
    mc.validate()?;
    if !(maturity > 0.0 && maturity <= params.t1) {
        return Err(Error::domain("maturity must lie in (0, T1]"));
    }
    check_payoff_bounded(payoff)?;
    let discount = (-params.r * maturity).exp();
    let start = AugmentedState::initial(params);
    let values: Result<Vec<f64>> = (0..mc.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = mc.rng.with_stream(mc.rng.stream_id.wrapping_add(i as u64)).rng();
            let path =
                simulate_risk_neutral_from(&start, params, maturity, mc.n_steps, &mut rng)?;
            Ok(discount * h_hat(gamma, path.terminal(), prior, payoff, maturity, params)?)
        })
        .collect();
    let values = values?;
    Ok(reduce(&values))
}

/// Optimal hedge (money in the futures) at an arbitrary state before
/// maturity: central difference in `y` of the conditional expectation of
/// `e^{-r(T-t)} Htilde`, using common random numbers across the two bumps.
pub fn optimal_hedge(
    state: &AugmentedState,
    payoff: &PayoffSpec,
    maturity: f64,
    gamma: f64,
    prior: &Prior,
    params: &ModelParams,
    mc: &McConfig,
) -> Result<McEstimate> {
    params.validate()?;
    mc.validate()?;
    if !(state.t < maturity) {
        return Err(Error::contract("hedge requires state.t < maturity"));
    }
    if !(maturity <= params.t1) {
        return Err(Error::domain("maturity must lie in (0, T1]"));
    }
    check_payoff_bounded(payoff)?;
    let horizon = maturity - state.t;
    let discount = (-params.r * horizon).exp();
    let bump = mc.bump_y;
    let diffs: Result<Vec<f64>> = (0..mc.n_paths)
        .into_par_iter()
        .map(|i| {
            let rng = mc.rng.with_stream(mc.rng.stream_id.wrapping_add(i as u64)).rng();
            // Identical noise on both bumped starts.
            let up = AugmentedState { y: state.y + bump, ..*state };
            let down = AugmentedState { y: state.y - bump, ..*state };
            let mut rng_up = rng.clone();
            let mut rng_down = rng;
            let term_up =
                simulate_risk_neutral_from(&up, params, horizon, mc.n_steps, &mut rng_up)?;
            let term_down =
                simulate_risk_neutral_from(&down, params, horizon, mc.n_steps, &mut rng_down)?;
            let v_up = h_tilde(gamma, term_up.terminal(), prior, payoff, maturity, params)?;
            let v_down = h_tilde(gamma, term_down.terminal(), prior, payoff, maturity, params)?;
            Ok(discount * (v_up - v_down) / (2.0 * bump))
        })
        .collect();
    let diffs = diffs?;
    Ok(reduce(&diffs))
}

fn reduce(values: &[f64]) -> McEstimate {
    let n = values.len() as f64;
    let mean = kahan_sum(values.iter().copied()) / n;
    let var = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
    McEstimate { value: mean, std_error: (var / n).sqrt() }
}
