//! Cumulants of the log futures price under the physical measure.
//!
//! Conditionally on the hidden pair the marginal is Gaussian with the
//! moments from [`crate::model::ou_cond_mean`] and
//! [`crate::model::ou_cond_var`], so the unconditional law is a Gaussian
//! mixture over the prior (or posterior) atoms. Its cumulant generating
//! function is a log-sum-exp over atoms, and the first four cumulants have
//! closed forms in the atom moments of `m_t(theta)` and `v_t(theta)`:
//!
//! ```text
//! k1 = E[m]
//! k2 = E[v] + V[m]
//! k3 = E[(m - k1)^3] + 3 C[m, v]
//! k4 = E[(m - k1)^4] + 3 {V[v] - V[m]^2} + 6 C[m^2, v] - 12 E[m] C[m, v]
//! ```
//!
//! Nonzero `k3`, `k4` quantify the non-Gaussianity induced purely by
//! parameter uncertainty. In the long-time limit, with the speed and the
//! mean-reversion level independent, all cumulants split into cumulants of
//! the inverse speed and of the level ([`cumulants_asymptotic`]).

use crate::error::{Error, Result};
use crate::filtering::Posterior;
use crate::model::{ou_cond_mean, ou_cond_var, ModelParams, Prior, ThetaAtom};
use crate::numerics::log_sum_exp;

/// First four cumulants of the log futures marginal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

fn mixture_cgf(
    atoms: &[(ThetaAtom, f64)],
    dt: f64,
    y_s: f64,
    alpha: f64,
    params: &ModelParams,
) -> f64 {
    let terms: Vec<f64> = atoms
        .iter()
        .map(|(theta, w)| {
            let m = ou_cond_mean(theta, y_s, dt, params);
            let v = ou_cond_var(theta, dt, params);
            w.ln() + alpha * m + 0.5 * alpha * alpha * v
        })
        .collect();
    log_sum_exp(&terms)
}

/// Conditional cumulant generating function `log E[e^{alpha Y_t} | F_s]`
/// given the posterior at time `s` and the observed log price `y_s`.
pub fn cgf_conditional(
    post: &Posterior,
    s: f64,
    t: f64,
    y_s: f64,
    alpha: f64,
    params: &ModelParams,
) -> Result<f64> {
    if !(0.0 <= s && s <= t && t <= params.t1) {
        return Err(Error::domain("need 0 <= s <= t <= T1"));
    }
    Ok(mixture_cgf(post.atoms(), t - s, y_s, alpha, params))
}

/// Unconditional cumulant generating function `log E[e^{alpha Y_t}]` from
/// the prior. `t` may exceed the delivery date; the extension is used for
/// long-time asymptotics.
pub fn cgf_unconditional(prior: &Prior, t: f64, alpha: f64, params: &ModelParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain("t must be >= 0"));
    }
    Ok(mixture_cgf(prior.atoms(), t, params.y0(), alpha, params))
}

/// First four cumulants at time `t`, assembled exactly from atom-weighted
/// moments of `m_t(theta)` and `v_t(theta)`.
pub fn cumulants_from_prior(prior: &Prior, t: f64, params: &ModelParams) -> Result<Cumulants> {
    if !(t >= 0.0) {
        return Err(Error::domain("t must be >= 0"));
    }
    let y0 = params.y0();
    let mv: Vec<(f64, f64, f64)> = prior
        .atoms()
        .iter()
        .map(|(theta, w)| (ou_cond_mean(theta, y0, t, params), ou_cond_var(theta, t, params), *w))
        .collect();

    let e = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
        mv.iter().map(|&(m, v, w)| w * f(m, v)).sum()
    };
    let e_m = e(&|m, _| m);
    let e_v = e(&|_, v| v);
    let var_m = e(&|m, _| (m - e_m) * (m - e_m));
    let var_v = e(&|_, v| (v - e_v) * (v - e_v));
    let cov_mv = e(&|m, v| (m - e_m) * (v - e_v));
    let m3 = e(&|m, _| (m - e_m).powi(3));
    let m4 = e(&|m, _| (m - e_m).powi(4));
    let e_m2 = e(&|m, _| m * m);
    let cov_m2v = e(&|m, v| (m * m - e_m2) * (v - e_v));

    Ok(Cumulants {
        k1: e_m,
        k2: e_v + var_m,
        k3: m3 + 3.0 * cov_mv,
        k4: m4 + 3.0 * (var_v - var_m * var_m) + 6.0 * cov_m2v - 12.0 * e_m * cov_mv,
    })
}

/// Cumulants of a finite discrete law from its raw moments, by the standard
/// recursion `k_n = mu_n - sum_{j=1}^{n-1} C(n-1, j-1) k_j mu_{n-j}`.
pub fn cumulants_from_moments(raw: &[f64]) -> Vec<f64> {
    let n = raw.len();
    let mut kappa = vec![0.0; n];
    for i in 0..n {
        let mut acc = raw[i];
        for j in 0..i {
            acc -= binomial(i, j) * kappa[j] * raw[i - 1 - j];
        }
        kappa[i] = acc;
    }
    kappa
}

fn binomial(n_minus_1: usize, k_minus_1: usize) -> f64 {
    // C(n-1, k-1) with the recursion indices shifted to 0-based.
    let (n, k) = (n_minus_1, k_minus_1);
    let mut out = 1.0;
    for i in 0..k {
        out = out * (n - i) as f64 / (i + 1) as f64;
    }
    out
}

fn double_factorial_odd(m: usize) -> f64 {
    // (2m - 1)!!
    (1..=m).map(|j| (2 * j - 1) as f64).product()
}

fn discrete_cumulants(atoms: &[(f64, f64)], n_max: usize) -> Vec<f64> {
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    let raw: Vec<f64> = (1..=n_max)
        .map(|n| atoms.iter().map(|&(v, w)| w * v.powi(n as i32)).sum::<f64>() / total)
        .collect();
    cumulants_from_moments(&raw)
}

fn validate_marginal(atoms: &[(f64, f64)], name: &str) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::domain(format!("{name} marginal needs at least one atom")));
    }
    for &(v, w) in atoms {
        if !v.is_finite() || !w.is_finite() || w <= 0.0 {
            return Err(Error::domain(format!(
                "{name} marginal atoms must be finite with positive weight"
            )));
        }
    }
    Ok(())
}

/// Long-time limits of the cumulants under independence of the speed and
/// the mean-reversion level. `speed_marginal` carries `(theta1, weight)`
/// atoms with `theta1 > 0`; `level_marginal` carries the level atoms.
/// Returns `kappa_1(inf) .. kappa_{n_max}(inf)`:
///
/// ```text
/// kappa_{2n-1}(inf) = level cumulant of order 2n-1
/// kappa_{2n}(inf)   = (2n-1)!! (sigma^2/2)^n * [cumulant_n of 1/speed]
///                     + level cumulant of order 2n
/// ```
pub fn cumulants_asymptotic(
    speed_marginal: &[(f64, f64)],
    level_marginal: &[(f64, f64)],
    params: &ModelParams,
    n_max: usize,
) -> Result<Vec<f64>> {
    validate_marginal(speed_marginal, "speed")?;
    validate_marginal(level_marginal, "level")?;
    if n_max == 0 {
        return Err(Error::domain("n_max must be >= 1"));
    }
    for &(v, _) in speed_marginal {
        if v <= 0.0 {
            return Err(Error::domain("speed atoms must have theta1 > 0"));
        }
    }
    let inv_speed: Vec<(f64, f64)> = speed_marginal.iter().map(|&(v, w)| (1.0 / v, w)).collect();
    let k_inv = discrete_cumulants(&inv_speed, n_max.div_ceil(2));
    let k_level = discrete_cumulants(level_marginal, n_max);

    let half_sigma2 = 0.5 * params.sigma * params.sigma;
    let out = (1..=n_max)
        .map(|n| {
            if n % 2 == 1 {
                k_level[n - 1]
            } else {
                let m = n / 2;
                double_factorial_odd(m) * half_sigma2.powi(m as i32) * k_inv[m - 1]
                    + k_level[n - 1]
            }
        })
        .collect();
    Ok(out)
}

/// Writes a cumulant term structure as CSV with header `t,k1,k2,k3,k4`,
/// followed by an asymptotic row labeled `inf` when limits are supplied.
pub fn write_cumulants_csv<W: std::io::Write>(
    rows: &[(f64, Cumulants)],
    asymptotic: Option<&[f64]>,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "t,k1,k2,k3,k4")?;
    for (t, c) in rows {
        writeln!(out, "{},{},{},{},{}", t, c.k1, c.k2, c.k3, c.k4)?;
    }
    if let Some(k) = asymptotic {
        let get = |i: usize| k.get(i).copied().unwrap_or(f64::NAN);
        writeln!(out, "inf,{},{},{},{}", get(0), get(1), get(2), get(3))?;
    }
    Ok(())
}
