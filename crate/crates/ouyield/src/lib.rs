//! A one-factor commodity futures model with hidden convenience yield and
//! mean-reversion speed.
//!
//! The log futures price follows mean-reverting dynamics whose level and
//! speed parameters are random and unobservable; only the futures price path
//! is seen. The crate provides:
//!
//! - [`model`]: shared domain types, the spot/futures relation, and the
//!   conditional moment formulas of the log price.
//! - [`simulate`]: exact-transition path simulation under the physical and
//!   risk-neutral measures, with reproducible parallel RNG streams.
//! - [`filtering`]: the closed-form Bayesian filter of the hidden pair from
//!   the path statistics `(t, Y, P, Q)`, plus the innovation process.
//! - [`futures_pricing`]: no-arbitrage pricing and delta hedging of payoffs
//!   on the liquid futures, with time-dependent volatility.
//! - [`indifference`]: exponential utility indifference prices and optimal
//!   hedges for payoffs on the illiquid spot, by Monte Carlo over the
//!   risk-neutral augmented state.
//! - [`density`]: the trivariate law of `(Y, P, Q)` under the risk-neutral
//!   measure, in semi-closed form plus numerical Laplace inversion.
//! - [`cumulants`]: cumulants of the log futures marginal under parameter
//!   uncertainty and their long-time limits.
//!
//! The `ouyield` binary exposes each capability as a subcommand driven by a
//! JSON config; the crate's `examples/` directory shows the library API for
//! the same workflows.

pub mod cli;
pub mod config;
pub mod cumulants;
pub mod density;
pub mod error;
pub mod futures_pricing;
pub mod indifference;
pub mod filtering;
pub mod model;
pub mod numerics;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{
    evaluate_payoff, ou_cond_mean, ou_cond_var, spot_from_futures, AugmentedState, ModelParams,
    PayoffKind, PayoffSpec, Prior, ThetaAtom,
};
pub use simulate::{
    accrue_gains, simulate_one_from_prior, simulate_physical, simulate_physical_with_prior,
    simulate_risk_neutral, PathGrid, RngConfig,
};
