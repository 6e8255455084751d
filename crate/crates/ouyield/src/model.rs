//! Core domain types: market constants, hidden-parameter atoms, priors, the
//! augmented Markov state, payoff specifications, and the conditional moment
//! formulas of the log futures price.
//!
//! The futures log price `Y` mean-reverts with hidden level and speed
//! `(theta0, theta1)`:
//!
//! ```text
//! dY_t = (f + theta0 - theta1 Y_t) dt + sigma dW_t,   Y_0 = ln F_0.
//! ```
//!
//! Everything in this module is a pure function of its inputs and all values
//! are immutable after construction, so they can be shared freely across
//! threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Moment formulas switch to a series expansion once `|theta1 * dt|` drops
/// below this, removing the 0/0 at zero mean-reversion speed.
const SPEED_SERIES_THRESHOLD: f64 = 1e-8;

/// Market and model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Drift constant of the log futures price, per unit time.
    pub f: f64,
    /// Volatility, per square-root time. Strictly positive.
    pub sigma: f64,
    /// Risk-free rate, nonnegative.
    pub r: f64,
    /// Initial futures price, strictly positive.
    pub f0: f64,
    /// Futures delivery date, strictly positive.
    pub t1: f64,
    /// Absolute risk aversion of the exponential-utility agent.
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(f: f64, sigma: f64, r: f64, f0: f64, t1: f64, gamma: f64) -> Result<Self> {
        let p = ModelParams { f, sigma, r, f0, t1, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.f.is_finite() {
            return Err(Error::domain("f must be finite"));
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::domain("sigma must be finite and > 0"));
        }
        if !self.r.is_finite() || self.r < 0.0 {
            return Err(Error::domain("r must be finite and >= 0"));
        }
        if !self.f0.is_finite() || self.f0 <= 0.0 {
            return Err(Error::domain("f0 must be finite and > 0"));
        }
        if !self.t1.is_finite() || self.t1 <= 0.0 {
            return Err(Error::domain("t1 must be finite and > 0"));
        }
        if !self.gamma.is_finite() || self.gamma <= 0.0 {
            return Err(Error::domain("gamma must be finite and > 0"));
        }
        Ok(())
    }

    /// The drift constant shifted by the Ito correction, `f + sigma^2 / 2`.
    /// This is the combination that multiplies the level parameter in the
    /// likelihood ratio.
    pub fn alpha(&self) -> f64 {
        self.f + 0.5 * self.sigma * self.sigma
    }

    /// Initial log futures price `ln F_0`.
    pub fn y0(&self) -> f64 {
        self.f0.ln()
    }
}

/// One admissible value of the hidden pair: convenience yield level `theta0`
/// and mean-reversion speed `theta1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaAtom {
    pub theta0: f64,
    pub theta1: f64,
}

impl ThetaAtom {
    pub fn new(theta0: f64, theta1: f64) -> Result<Self> {
        if !theta0.is_finite() || !theta1.is_finite() {
            return Err(Error::domain("theta atoms must be finite"));
        }
        Ok(ThetaAtom { theta0, theta1 })
    }

    /// Mean-reversion level `(theta0 + f) / theta1`. Undefined at zero speed.
    pub fn mean_level(&self, f: f64) -> Result<f64> {
        if self.theta1 == 0.0 {
            return Err(Error::domain("mean level requires theta1 != 0"));
        }
        Ok((self.theta0 + f) / self.theta1)
    }
}

/// Finite weighted atom set representing the prior law of the hidden pair.
///
/// Continuous priors are used through a finite discretization chosen by the
/// caller; the helper constructors below cover the common cases. Posterior
/// integrals against an atom set are exact, so discretization accuracy is
/// entirely the caller's grid choice.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    atoms: Vec<(ThetaAtom, f64)>,
}

impl Prior {
    /// Builds a prior from `(atom, weight)` pairs. Weights must be positive
    /// and are normalized to sum to one; atoms must be pairwise distinct.
    pub fn from_atoms(atoms: Vec<(ThetaAtom, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::domain("prior needs at least one atom"));
        }
        for (a, w) in &atoms {
            if !a.theta0.is_finite() || !a.theta1.is_finite() {
                return Err(Error::domain("prior atoms must be finite"));
            }
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::domain("prior weights must be finite and > 0"));
            }
        }
        for i in 0..atoms.len() {
            for j in (i + 1)..atoms.len() {
                if atoms[i].0 == atoms[j].0 {
                    return Err(Error::domain(format!(
                        "prior atoms must be pairwise distinct (atoms {i} and {j} coincide)"
                    )));
                }
            }
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        let atoms: Vec<_> = atoms.into_iter().map(|(a, w)| (a, w / total)).collect();
        let check: f64 = atoms.iter().map(|(_, w)| w).sum();
        debug_assert!((check - 1.0).abs() < 1e-12);
        Ok(Prior { atoms })
    }

    /// Point mass at a single atom.
    pub fn dirac(atom: ThetaAtom) -> Self {
        Prior { atoms: vec![(atom, 1.0)] }
    }

    /// Uniform weights on an `n0 x n1` grid over the rectangle
    /// `[theta0_range] x [theta1_range]`. A single point along an axis takes
    /// the lower endpoint.
    pub fn uniform_grid(
        theta0_range: (f64, f64),
        n0: usize,
        theta1_range: (f64, f64),
        n1: usize,
    ) -> Result<Self> {
        if n0 == 0 || n1 == 0 {
            return Err(Error::domain("grid sizes must be >= 1"));
        }
        if theta0_range.1 < theta0_range.0 || theta1_range.1 < theta1_range.0 {
            return Err(Error::domain("grid ranges must be ordered"));
        }
        let step = |lo: f64, hi: f64, n: usize, i: usize| {
            if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        let mut atoms = Vec::with_capacity(n0 * n1);
        for i in 0..n0 {
            for j in 0..n1 {
                let t0 = step(theta0_range.0, theta0_range.1, n0, i);
                let t1 = step(theta1_range.0, theta1_range.1, n1, j);
                atoms.push((ThetaAtom::new(t0, t1)?, 1.0));
            }
        }
        Prior::from_atoms(atoms)
    }

    /// Product of independent marginals given as `(value, weight)` lists.
    pub fn product(marginal0: &[(f64, f64)], marginal1: &[(f64, f64)]) -> Result<Self> {
        let mut atoms = Vec::with_capacity(marginal0.len() * marginal1.len());
        for &(t0, w0) in marginal0 {
            for &(t1, w1) in marginal1 {
                atoms.push((ThetaAtom::new(t0, t1)?, w0 * w1));
            }
        }
        Prior::from_atoms(atoms)
    }

    pub fn atoms(&self) -> &[(ThetaAtom, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Prior mean of `(theta0, theta1)`.
    pub fn mean(&self) -> (f64, f64) {
        let m0 = self.atoms.iter().map(|(a, w)| w * a.theta0).sum();
        let m1 = self.atoms.iter().map(|(a, w)| w * a.theta1).sum();
        (m0, m1)
    }
}

/// The risk-neutral Markov triple at one time point: the log futures price
/// together with its running time integral and running squared integral.
/// These three statistics are sufficient for the filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentedState {
    /// Time, nonnegative.
    pub t: f64,
    /// Log futures price `Y_t`.
    pub y: f64,
    /// Running integral `P_t = int_0^t Y_u du`.
    pub p: f64,
    /// Running integral `Q_t = int_0^t Y_u^2 du`, nonnegative.
    pub q: f64,
}

impl AugmentedState {
    /// State at time zero: `(ln F_0, 0, 0)`.
    pub fn initial(params: &ModelParams) -> Self {
        AugmentedState { t: 0.0, y: params.y0(), p: 0.0, q: 0.0 }
    }
}

/// Payoff families supported on the spot and on the futures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayoffKind {
    CallOnSpot,
    PutOnSpot,
    CallOnFutures,
    PutOnFutures,
    DigitalOnSpot,
    ForwardOnSpot,
    Constant,
}

impl PayoffKind {
    fn is_option(self) -> bool {
        !matches!(self, PayoffKind::ForwardOnSpot | PayoffKind::Constant)
    }

    /// Payoffs that are unbounded above without truncation.
    pub fn is_unbounded(self) -> bool {
        matches!(
            self,
            PayoffKind::CallOnSpot | PayoffKind::CallOnFutures | PayoffKind::ForwardOnSpot
        )
    }
}

/// Declarative payoff `h(y, theta)` evaluated at the payoff date.
///
/// Spot payoffs read the spot through `S = exp(y - (r - theta0) T)` with `T`
/// the payoff maturity, so they depend on the hidden convenience yield;
/// futures payoffs and constants do not. Call and forward payoffs are
/// unbounded above, which the indifference-pricing transform cannot digest;
/// those kinds are accepted here but require an explicit `cap` before they
/// can be indifference priced. The cap truncates the raw payoff from above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    pub strike: f64,
    pub cap: Option<f64>,
}

impl PayoffSpec {
    pub fn new(kind: PayoffKind, strike: f64, cap: Option<f64>) -> Result<Self> {
        if !strike.is_finite() {
            return Err(Error::domain("strike must be finite"));
        }
        if kind.is_option() && strike < 0.0 {
            return Err(Error::domain("strike must be >= 0 for option payoffs"));
        }
        if let Some(c) = cap {
            if !c.is_finite() || c <= 0.0 {
                return Err(Error::domain("cap must be finite and > 0"));
            }
            if c <= strike {
                return Err(Error::domain("cap must exceed the strike"));
            }
        }
        Ok(PayoffSpec { kind, strike, cap })
    }

    /// True when the raw payoff is unbounded and no cap is set.
    pub fn needs_cap(&self) -> bool {
        self.kind.is_unbounded() && self.cap.is_none()
    }
}

/// Spot price implied by a futures level and a convenience yield:
/// `S_t = F_t exp(-(r - theta0)(T1 - t))`.
pub fn spot_from_futures(f_t: f64, theta0: f64, t: f64, params: &ModelParams) -> Result<f64> {
    if !(0.0..=params.t1).contains(&t) {
        return Err(Error::domain(format!(
            "t = {t} outside [0, T1 = {}]",
            params.t1
        )));
    }
    if !f_t.is_finite() || f_t <= 0.0 {
        return Err(Error::domain("futures price must be > 0"));
    }
    Ok(f_t * (-(params.r - theta0) * (params.t1 - t)).exp())
}

/// `(1 - e^{-x}) / x`, continuous through x = 0.
fn em1_ratio(x: f64) -> f64 {
    if x.abs() < SPEED_SERIES_THRESHOLD {
        // Second-order series around the removable singularity.
        1.0 - 0.5 * x + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Conditional mean of `Y_{s+dt}` given `Y_s = y_s` and a known atom.
///
/// For nonzero speed this is
/// `e^{-theta1 dt} y_s + ((theta0 + f)/theta1)(1 - e^{-theta1 dt})`;
/// at zero speed it degrades continuously to `y_s + (theta0 + f) dt`.
pub fn ou_cond_mean(theta: &ThetaAtom, y_s: f64, dt: f64, params: &ModelParams) -> f64 {
    debug_assert!(dt >= 0.0);
    let x = theta.theta1 * dt;
    (-x).exp() * y_s + (theta.theta0 + params.f) * dt * em1_ratio(x)
}

/// Conditional variance of `Y_{s+dt}` given `F_s` and a known atom:
/// `(sigma^2 / (2 theta1)) (1 - e^{-2 theta1 dt})`, with Brownian limit
/// `sigma^2 dt` at zero speed. Always nonnegative.
pub fn ou_cond_var(theta: &ThetaAtom, dt: f64, params: &ModelParams) -> f64 {
    debug_assert!(dt >= 0.0);
    let x = theta.theta1 * dt;
    let v = params.sigma * params.sigma * dt * em1_ratio(2.0 * x);
    v.max(0.0)
}

/// Evaluates the payoff at log futures price `y` and hidden atom `theta`.
/// When a cap is present the result is `min(raw, cap)`.
pub fn evaluate_payoff(
    spec: &PayoffSpec,
    y: f64,
    theta: &ThetaAtom,
    maturity: f64,
    params: &ModelParams,
) -> f64 {
    let raw = match spec.kind {
        PayoffKind::Constant => spec.strike,
        PayoffKind::CallOnFutures => (y.exp() - spec.strike).max(0.0),
        PayoffKind::PutOnFutures => (spec.strike - y.exp()).max(0.0),
        _ => {
            let spot = (y - (params.r - theta.theta0) * maturity).exp();
            match spec.kind {
                PayoffKind::CallOnSpot => (spot - spec.strike).max(0.0),
                PayoffKind::PutOnSpot => (spec.strike - spot).max(0.0),
                PayoffKind::DigitalOnSpot => {
                    if spot > spec.strike {
                        1.0
                    } else {
                        0.0
                    }
                }
                PayoffKind::ForwardOnSpot => spot - spec.strike,
                _ => unreachable!(),
            }
        }
    };
    match spec.cap {
        Some(c) => raw.min(c),
        None => raw,
    }
}
