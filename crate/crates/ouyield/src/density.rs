//! The trivariate law of `(Y, P, Q)` under the risk-neutral measure.
//!
//! With `W` standard Brownian motion, write `psi_t(x, y, z)` for the joint
//! density of `(W_t, int_0^t W ds, int_0^t W^2 ds)`. It factors as
//! `psi1(x, y) * psi2(z | x, y)`, where `psi1` is bivariate Gaussian with
//! covariance [`a1`], and the conditional Laplace transform of `psi2`,
//!
//! ```text
//! Gamma_t(alpha | x, y) = E[ exp(-(alpha^2/2) int W^2) | W_t = x, int W = y ]
//! ```
//!
//! is known in closed form through the matrix [`a2`] and `cosh(alpha t)`
//! ([`gamma_cond`]); the unconditional version is the joint moment
//! generating function [`joint_mgf`]. The conditional density itself is
//! recovered by numerically inverting `beta -> Gamma_t(sqrt(2 beta) | x, y)`
//! on the fixed Talbot contour ([`psi2`]).
//!
//! Every entry of `a2` and `cosh(alpha t)` is an even analytic function of
//! `alpha`, hence a single-valued analytic function of `beta = alpha^2 / 2`;
//! no branch ambiguity arises from the square root inside `alpha(beta)`.
//! The only branch tracking needed is for the overall square root of
//! `det(a2) cosh`, which is handled by unwrapping its log's imaginary part
//! continuously along the contour, anchored at the contour's real point.
//! Near `beta = 0` the entries switch to power series in `(alpha t)^2` to
//! avoid cancellation.
//!
//! [`phi`] maps the density to the augmented state `(Y_t, P_t, Q_t)` via a
//! Girsanov prefactor and a linear change of variables; two candidate forms
//! of the third coordinate's map are kept behind [`QTransform`] so that the
//! simulated-histogram oracle can adjudicate between them (the
//! [`QTransform::SquareExpansion`] form, obtained by expanding
//! `int (y0 + sigma W)^2 ds`, is the validated default).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Symmetric 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Matrix2 {
    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn inverse(&self) -> Result<Matrix2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::numerical("singular 2x2 matrix"));
        }
        Ok(Matrix2 { xx: self.yy / d, xy: -self.xy / d, yy: self.xx / d })
    }

    /// `(x, y) M (x, y)^T`.
    pub fn quad_form(&self, x: f64, y: f64) -> f64 {
        self.xx * x * x + 2.0 * self.xy * x * y + self.yy * y * y
    }
}

/// Covariance of `(W_t, int_0^t W ds)`:
/// rows `[[t, t^2/2], [t^2/2, t^3/3]]`, determinant `t^4 / 12`.
pub fn a1(t: f64) -> Result<Matrix2> {
    if !(t > 0.0) {
        return Err(Error::domain("a1 requires t > 0"));
    }
    Ok(Matrix2 { xx: t, xy: 0.5 * t * t, yy: t * t * t / 3.0 })
}

/// Entries switch to series in `w = (alpha t)^2` below this; chosen so both
/// branches carry full double precision at the boundary.
pub const SERIES_THRESHOLD_W: f64 = 2.5e-3;

// Normalized entry functions of w = (alpha t)^2:
//   a2.xx = t   * f1(w) = tanh(u)/alpha
//   a2.xy = t^2 * f2(w) = (1 - sech(u))/alpha^2
//   a2.yy = t^3 * f3(w) = (u - tanh(u))/alpha^3 / t^3 ... with u = alpha t.
// All three and cosh(u) are even in u, so they are single-valued in w.

fn f1_series(w: Complex64) -> Complex64 {
    let c = [
        1.0,
        -1.0 / 3.0,
        2.0 / 15.0,
        -17.0 / 315.0,
        62.0 / 2835.0,
        -1382.0 / 155925.0,
    ];
    horner(w, &c)
}

fn f2_series(w: Complex64) -> Complex64 {
    let c = [
        0.5,
        -5.0 / 24.0,
        61.0 / 720.0,
        -1385.0 / 40320.0,
        50521.0 / 3628800.0,
    ];
    horner(w, &c)
}

fn f3_series(w: Complex64) -> Complex64 {
    let c = [
        1.0 / 3.0,
        -2.0 / 15.0,
        17.0 / 315.0,
        -62.0 / 2835.0,
        1382.0 / 155925.0,
    ];
    horner(w, &c)
}

fn cosh_series(w: Complex64) -> Complex64 {
    let c = [
        1.0,
        0.5,
        1.0 / 24.0,
        1.0 / 720.0,
        1.0 / 40320.0,
        1.0 / 3628800.0,
    ];
    horner(w, &c)
}

fn horner(w: Complex64, coeffs: &[f64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * w + c;
    }
    acc
}

/// `(f1, f2, f3, log cosh)` at `w = (alpha t)^2`.
fn entry_funcs(w: Complex64, series_threshold: f64) -> (Complex64, Complex64, Complex64, Complex64) {
    if w.norm() < series_threshold {
        let ch = cosh_series(w);
        return (f1_series(w), f2_series(w), f3_series(w), ch.ln());
    }
    // Principal square root; evenness makes the sign irrelevant, normalize
    // to Re u >= 0 for stable exponentials.
    let mut u = w.sqrt();
    if u.re < 0.0 {
        u = -u;
    }
    let e = (-2.0 * u).exp(); // |e| <= 1
    let tanh = (1.0 - e) / (1.0 + e);
    let sech = 2.0 * (-u).exp() / (1.0 + e);
    let f1 = tanh / u;
    let f2 = (1.0 - sech) / w;
    let f3 = (u - tanh) / (w * u);
    // log cosh(u) = u + log((1 + e^{-2u})/2), stable for Re u >= 0.
    let log_cosh = u + ((1.0 + e) / 2.0).ln();
    (f1, f2, f3, log_cosh)
}

fn a2_from_w(t: f64, w: f64, series_threshold: f64) -> Matrix2 {
    let (f1, f2, f3, _) = entry_funcs(Complex64::new(w, 0.0), series_threshold);
    Matrix2 { xx: t * f1.re, xy: t * t * f2.re, yy: t * t * t * f3.re }
}

/// Covariance-like matrix entering the conditional transform:
///
/// ```text
/// [[tanh(at)/a,        (1-sech(at))/a^2 ],
///  [(1-sech(at))/a^2,  (at-tanh(at))/a^3]]
/// ```
///
/// continuously extended to `a2(t, 0) = a1(t)`.
pub fn a2(t: f64, alpha: f64) -> Result<Matrix2> {
    if !(t > 0.0) {
        return Err(Error::domain("a2 requires t > 0"));
    }
    if !(alpha >= 0.0) {
        return Err(Error::domain("a2 requires alpha >= 0"));
    }
    let u = alpha * t;
    Ok(a2_from_w(t, u * u, SERIES_THRESHOLD_W))
}

/// Bivariate Gaussian density of `(W_t, int_0^t W ds)`.
pub fn psi1(t: f64, x: f64, y: f64) -> Result<f64> {
    let cov = a1(t)?;
    let inv = cov.inverse()?;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * cov.det().sqrt());
    Ok(norm * (-0.5 * inv.quad_form(x, y)).exp())
}

/// Conditional Laplace transform of the squared integral given the endpoint
/// pair:
///
/// ```text
/// Gamma_t(alpha | x, y) = sqrt(det a1 / (det a2 cosh(alpha t)))
///                         * exp(-1/2 (x,y) {a2^{-1} - a1^{-1}} (x,y)^T),
/// ```
///
/// which lies in `(0, 1]` and equals 1 exactly at `alpha = 0`.
pub fn gamma_cond(t: f64, alpha: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain("gamma_cond requires t > 0"));
    }
    if !(alpha >= 0.0) {
        return Err(Error::domain("gamma_cond requires alpha >= 0"));
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let u = alpha * t;
    let (f1, f2, f3, log_cosh) = entry_funcs(Complex64::new(u * u, 0.0), SERIES_THRESHOLD_W);
    // det a2 * cosh / det a1 = 12 (f1 f3 - f2^2) cosh, in log form.
    let log_g = (12.0 * (f1.re * f3.re - f2.re * f2.re)).ln() + log_cosh.re;
    let a2m = Matrix2 {
        xx: t * f1.re,
        xy: t * t * f2.re,
        yy: t * t * t * f3.re,
    };
    let diff = {
        let i2 = a2m.inverse()?;
        let i1 = a1(t)?.inverse()?;
        Matrix2 { xx: i2.xx - i1.xx, xy: i2.xy - i1.xy, yy: i2.yy - i1.yy }
    };
    Ok((-0.5 * (log_g + diff.quad_form(x, y))).exp())
}

/// Joint moment generating function of the Brownian triple:
///
/// ```text
/// E exp(b1 W_t + b2 int W ds - (alpha^2/2) int W^2 ds)
///   = cosh(alpha t)^{-1/2} exp(1/2 (b1,b2) a2(t,alpha) (b1,b2)^T).
/// ```
pub fn joint_mgf(t: f64, alpha: f64, beta1: f64, beta2: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain("joint_mgf requires t > 0"));
    }
    if !(alpha >= 0.0) {
        return Err(Error::domain("joint_mgf requires alpha >= 0"));
    }
    let u = alpha * t;
    let (f1, f2, f3, log_cosh) = entry_funcs(Complex64::new(u * u, 0.0), SERIES_THRESHOLD_W);
    let a2m = Matrix2 {
        xx: t * f1.re,
        xy: t * t * f2.re,
        yy: t * t * t * f3.re,
    };
    Ok((0.5 * a2m.quad_form(beta1, beta2) - 0.5 * log_cosh.re).exp())
}

/// Controls for the fixed-Talbot Laplace inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    /// Contour node count; at least 8.
    pub n_nodes: usize,
    /// Series switch on `|(alpha t)^2| = |2 beta| t^2`.
    pub series_threshold: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig { n_nodes: 32, series_threshold: SERIES_THRESHOLD_W }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 8 {
            return Err(Error::domain("inversion needs n_nodes >= 8"));
        }
        if !(self.series_threshold > 0.0) {
            return Err(Error::domain("series_threshold must be > 0"));
        }
        Ok(())
    }
}

/// Log of the conditional Laplace transform in the `beta` variable, with the
/// square-root branch picked by the caller-supplied phase accumulator.
/// `beta -> Gamma_t(sqrt(2 beta) | x, y)`.
struct GammaTildeLog {
    t: f64,
    x: f64,
    y: f64,
    series_threshold: f64,
    inv_a1: Matrix2,
    /// Imaginary part of log(det a2 cosh / det a1) at the previous node.
    prev_phase: f64,
}

impl GammaTildeLog {
    fn new(t: f64, x: f64, y: f64, series_threshold: f64) -> Result<Self> {
        let inv_a1 = a1(t)?.inverse()?;
        Ok(GammaTildeLog { t, x, y, series_threshold, inv_a1, prev_phase: 0.0 })
    }

    /// Evaluates `log Gamma~(beta)`. Must be called along a continuous
    /// contour starting at a real positive `beta` for the branch tracking to
    /// be meaningful.
    fn eval(&mut self, beta: Complex64) -> Complex64 {
        let t = self.t;
        let w = 2.0 * beta * t * t; // (alpha t)^2
        let (f1, f2, f3, log_cosh) = entry_funcs(w, self.series_threshold);
        let log_g_raw = (12.0 * (f1 * f3 - f2 * f2)).ln() + log_cosh;
        // Unwrap the phase against the previous node.
        let delta = log_g_raw.im - self.prev_phase;
        let adjusted = delta - (delta / (2.0 * std::f64::consts::PI)).round()
            * 2.0
            * std::f64::consts::PI;
        let phase = self.prev_phase + adjusted;
        self.prev_phase = phase;
        let log_g = Complex64::new(log_g_raw.re, phase);

        // Quadratic form with the complex a2 inverse.
        let xx = t * f1;
        let xy = t * t * f2;
        let yy = t * t * t * f3;
        let det = xx * yy - xy * xy;
        let (x, y) = (self.x, self.y);
        let q2 = (yy * x * x - 2.0 * xy * x * y + xx * y * y) / det;
        let q1 = self.inv_a1.quad_form(x, y);
        -0.5 * (log_g + (q2 - q1))
    }
}

/// Fixed-Talbot inversion of a Laplace transform given through its log.
/// `log_transform` is evaluated first at the contour's real point and then
/// along the upper half, so implementations can track branch continuity.
/// Returns the inverse value together with the gross magnitude of the
/// contour sum, whose product with machine epsilon bounds the round-off
/// noise of the result.
fn talbot_invert_with_gross<F: FnMut(Complex64) -> Complex64>(
    mut log_transform: F,
    z: f64,
    n: usize,
) -> (f64, f64) {
    let r = 2.0 * n as f64 / (5.0 * z);
    let mut exponents = Vec::with_capacity(n);
    let mut shapes = Vec::with_capacity(n);
    exponents.push(log_transform(Complex64::new(r, 0.0)) + r * z);
    shapes.push((Complex64::new(1.0, 0.0), 0.5));
    for k in 1..n {
        let theta = k as f64 * std::f64::consts::PI / n as f64;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        exponents.push(log_transform(s) + s * z);
        shapes.push((Complex64::new(1.0, sigma), 1.0));
    }
    // Factor out the largest exponent so the sum never overflows.
    let peak = exponents.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    let mut gross = 0.0;
    for (e, (shape, weight)) in exponents.iter().zip(&shapes) {
        let term = (e - peak).exp() * shape;
        acc += weight * term.re;
        gross += weight * term.norm();
    }
    let scale = peak.exp() * r / n as f64;
    (acc * scale, gross * scale)
}

#[cfg(test)]
fn talbot_invert<F: FnMut(Complex64) -> Complex64>(log_transform: F, z: f64, n: usize) -> f64 {
    talbot_invert_with_gross(log_transform, z, n).0
}

/// Conditional density of the squared integral at `z`, given the endpoint
/// pair, by fixed-Talbot inversion of [`gamma_cond`] in `beta = alpha^2/2`.
///
/// By Cauchy-Schwarz the squared integral is at least `y^2/t` whenever the
/// time integral equals `y`, so the conditional density vanishes at or below
/// that edge and the function returns 0 there without inverting. Above the
/// edge the contour radius is tuned to the distance from it (equivalently,
/// the support-shifted transform `Gamma~(s) e^{s y^2/t}` is inverted at
/// `z - y^2/t`), which keeps the contour exponents bounded arbitrarily close
/// to the edge. Small negative excursions from inversion error are clipped
/// to zero; anything below -1e-6 reports an accuracy failure (increase
/// `n_nodes`).
pub fn psi2(t: f64, z: f64, x: f64, y: f64, inv: &InversionConfig) -> Result<f64> {
    inv.validate()?;
    if !(t > 0.0) {
        return Err(Error::domain("psi2 requires t > 0"));
    }
    if !(z > 0.0) {
        return Err(Error::domain("psi2 requires z > 0"));
    }
    let z_min = y * y / t;
    if z <= z_min {
        return Ok(0.0);
    }
    let mut transform = GammaTildeLog::new(t, x, y, inv.series_threshold)?;
    let (value, gross) = talbot_invert_with_gross(
        |beta| transform.eval(beta) + beta * z_min,
        z - z_min,
        inv.n_nodes,
    );
    // Round-off noise of the contour sum scales with its gross magnitude;
    // anything at or below that floor is numerically zero.
    let noise_floor = gross * 1e-13;
    if value.abs() <= noise_floor {
        return Ok(0.0);
    }
    if noise_floor > 0.1 {
        return Err(Error::numerical(format!(
            "inversion noise floor {noise_floor:.1e} swamps the density at z = {z}, \
             (x, y) = ({x}, {y}); increase n_nodes"
        )));
    }
    if value < -1e-6 {
        return Err(Error::numerical(format!(
            "Laplace inversion produced {value} at z = {z}; increase n_nodes"
        )));
    }
    Ok(value.max(0.0))
}

/// Candidate changes of variables for the third coordinate of the state
/// density. `SquareExpansion` follows from expanding the squared integral
/// `int (y0 + sigma W)^2 ds` and is the validated default; `ScaledCross` is
/// the variant with a sigma-scaled cross term and flipped time term, kept so
/// the simulation oracle can adjudicate between the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QTransform {
    SquareExpansion,
    ScaledCross,
}

impl Default for QTransform {
    fn default() -> Self {
        QTransform::SquareExpansion
    }
}

/// Joint density of the augmented state `(Y_t, P_t, Q_t)` at `(y, p, q)`
/// under the risk-neutral measure, using the default coordinate map.
pub fn phi(
    t: f64,
    y: f64,
    p: f64,
    q: f64,
    params: &ModelParams,
    inv: &InversionConfig,
) -> Result<f64> {
    phi_with_transform(t, y, p, q, params, inv, QTransform::default())
}

/// [`phi`] with an explicit choice of the third-coordinate map.
pub fn phi_with_transform(
    t: f64,
    y: f64,
    p: f64,
    q: f64,
    params: &ModelParams,
    inv: &InversionConfig,
    form: QTransform,
) -> Result<f64> {
    params.validate()?;
    if !(t > 0.0) {
        return Err(Error::domain("phi requires t > 0"));
    }
    let sigma = params.sigma;
    let y0 = params.y0();
    let a = (y - y0) / sigma;
    let b = (p - y0 * t) / sigma;
    let c = match form {
        QTransform::SquareExpansion => (q - 2.0 * y0 * p + y0 * y0 * t) / (sigma * sigma),
        QTransform::ScaledCross => (q - 2.0 * sigma * y0 * p - y0 * y0 * t) / (sigma * sigma),
    };
    if c <= 0.0 {
        return Ok(0.0);
    }
    let prefactor = (-0.5 * (y - y0) - sigma * sigma * t / 8.0).exp();
    let jacobian = 1.0 / (sigma * sigma * sigma * sigma);
    Ok(jacobian * prefactor * psi1(t, a, b)? * psi2(t, c, a, b, inv)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gauss_hermite, gauss_legendre, integrate_panels, mean_and_se};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn a1_matches_stated_matrix() {
        let m = a1(1.0).unwrap();
        assert_eq!(m.xx, 1.0);
        assert_eq!(m.xy, 0.5);
        assert!((m.yy - 1.0 / 3.0).abs() < 1e-16);
        assert!((m.det() - 1.0 / 12.0).abs() < 1e-16);

        let m2 = a1(2.0).unwrap();
        assert_eq!(m2.xx, 2.0);
        assert_eq!(m2.xy, 2.0);
        assert!((m2.yy - 8.0 / 3.0).abs() < 1e-15);
        assert!((m2.det() - 16.0 / 12.0).abs() < 1e-15);

        for t in [0.1, 1.0, 10.0] {
            let d = a1(t).unwrap().det();
            let expect = t * t * t * t / 12.0;
            assert!((d - expect).abs() < 1e-14 * expect);
        }
        assert!(a1(0.0).is_err());
        assert!(a1(-1.0).is_err());
    }

    #[test]
    fn a2_at_zero_speed_is_a1() {
        for t in [0.3, 1.0, 4.0] {
            let lhs = a2(t, 0.0).unwrap();
            let rhs = a1(t).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn a2_continuous_at_the_removable_singularity() {
        let lhs = a2(1.0, 1e-6).unwrap();
        let rhs = a1(1.0).unwrap();
        assert!((lhs.xx - rhs.xx).abs() < 1e-10);
        assert!((lhs.xy - rhs.xy).abs() < 1e-10);
        assert!((lhs.yy - rhs.yy).abs() < 1e-10);
    }

    #[test]
    fn a2_direct_evaluation_against_frozen_scalars() {
        // tanh(2), sech(2) evaluated independently.
        let m = a2(1.0, 2.0).unwrap();
        let tanh2 = 0.9640275800758169;
        let sech2 = 1.0 / 2.0_f64.cosh() / (2.0_f64.cosh() / 2.0_f64.cosh()); // cosh(2) below
        let cosh2 = 3.7621956910836314;
        let _ = sech2;
        assert!((m.xx - tanh2 / 2.0).abs() < 1e-15);
        assert!((m.xy - (1.0 - 1.0 / cosh2) / 4.0).abs() < 1e-15);
        assert!((m.yy - (2.0 - tanh2) / 8.0).abs() < 1e-15);
    }

    #[test]
    fn a2_series_and_direct_branch_agree_at_the_threshold() {
        // Evaluate both branches exactly at the switch point.
        let t = 1.3;
        let w = SERIES_THRESHOLD_W;
        let series = a2_from_w(t, w, w * 2.0); // force series
        let direct = a2_from_w(t, w, w * 0.5); // force direct
        assert!((series.xx - direct.xx).abs() < 1e-10 * series.xx.abs());
        assert!((series.xy - direct.xy).abs() < 1e-10 * series.xy.abs());
        assert!((series.yy - direct.yy).abs() < 1e-10 * series.yy.abs());
    }

    #[test]
    fn psi1_peak_value_and_marginal() {
        let v = psi1(1.0, 0.0, 0.0).unwrap();
        assert!((v - 12.0_f64.sqrt() / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
        assert!((v - 0.5513288954217921).abs() < 1e-12);

        // Marginal in x after integrating out y is N(0, t).
        let t = 0.7;
        for x in [-1.5, 0.0, 0.4, 2.0] {
            let marginal = integrate_panels(|y| psi1(t, x, y).unwrap(), -6.0, 6.0, 24, 20);
            let expect = (-0.5 * x * x / t).exp() / (2.0 * std::f64::consts::PI * t).sqrt();
            assert!(
                (marginal - expect).abs() < 1e-8,
                "x={x}: {marginal} vs {expect}"
            );
        }
    }

    /// Simulated covariance of the Brownian pair matches a1.
    #[test]
    fn psi1_covariance_against_simulation() {
        let t = 1.0;
        let n = 1_000_000usize;
        let steps = 64;
        let dt = t / steps as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let mut w = 0.0;
            let mut integral = 0.0;
            for _ in 0..steps {
                let z: f64 = rng.sample(StandardNormal);
                let w_next = w + dt.sqrt() * z;
                integral += 0.5 * dt * (w + w_next);
                w = w_next;
            }
            sxx += w * w;
            sxy += w * integral;
            syy += integral * integral;
        }
        let nf = n as f64;
        let cov = a1(t).unwrap();
        // Var of the sample second moment of a Gaussian is about 2 m^2 / n.
        assert!((sxx / nf - cov.xx).abs() < 3.0 * (2.0_f64).sqrt() * cov.xx / nf.sqrt());
        assert!((syy / nf - cov.yy).abs() < 3.0 * (2.0_f64).sqrt() * cov.yy / nf.sqrt());
        assert!((sxy / nf - cov.xy).abs() < 3.0 * 1.6 * cov.xy / nf.sqrt());
    }

    #[test]
    fn gamma_at_zero_is_one_and_below_one_elsewhere() {
        assert_eq!(gamma_cond(1.0, 0.0, 0.3, -0.2).unwrap(), 1.0);
        for alpha in [0.2, 1.0, 3.0] {
            for (x, y) in [(0.0, 0.0), (1.0, 0.5), (-0.7, 0.2)] {
                let g = gamma_cond(1.0, alpha, x, y).unwrap();
                assert!(g > 0.0 && g < 1.0, "alpha={alpha} x={x} y={y}: {g}");
            }
        }
    }

    #[test]
    fn gamma_at_origin_is_the_determinant_ratio() {
        let t = 1.4;
        let alpha = 0.9;
        let g = gamma_cond(t, alpha, 0.0, 0.0).unwrap();
        let d1 = a1(t).unwrap().det();
        let d2 = a2(t, alpha).unwrap().det();
        let expect = (d1 / (d2 * (alpha * t).cosh())).sqrt();
        assert!((g - expect).abs() < 1e-13, "{g} vs {expect}");
    }

    /// Exact conditioned-Gaussian oracle: simulate the discrete Brownian
    /// vector conditioned on (W_t, trapezoid integral) by mean correction,
    /// then average exp(-(alpha^2/2) trapezoid(W^2)).
    #[test]
    fn gamma_matches_conditioned_path_simulation() {
        let t = 1.0;
        let alpha = 1.0;
        let (x_target, y_target) = (0.5, 0.2);
        let steps = 128usize;
        let dt = t / steps as f64;

        // Covariances of grid values with the two conditioning statistics.
        // S1 = W_t, S2 = sum c_j W_j (trapezoid weights).
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

        // 2x2 solve for the conditioning gain.
        let det = var_s1 * var_s2 - cov_s1_s2 * cov_s1_s2;
        let gain: Vec<(f64, f64)> = (0..steps)
            .map(|i| {
                let g1 = (cov_w_s1[i] * var_s2 - cov_w_s2[i] * cov_s1_s2) / det;
                let g2 = (cov_w_s2[i] * var_s1 - cov_w_s1[i] * cov_s1_s2) / det;
                (g1, g2)
            })
            .collect();

        let n_paths = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut vals = Vec::with_capacity(n_paths);
        let mut w = vec![0.0f64; steps];
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
            // Conditioned path and its trapezoid squared integral.
            let mut q = 0.0;
            let mut prev = 0.0f64;
            for i in 0..steps {
                let wc = w[i] + gain[i].0 * d1 + gain[i].1 * d2;
                q += 0.5 * dt * (prev * prev + wc * wc);
                prev = wc;
            }
            vals.push((-0.5 * alpha * alpha * q).exp());
        }
        let (mean, se) = mean_and_se(&vals);
        let closed = gamma_cond(t, alpha, x_target, y_target).unwrap();
        assert!(
            (mean - closed).abs() < 3.0 * se + 2e-3,
            "mc {mean} +- {se} vs closed form {closed}"
        );
    }

    #[test]
    fn mgf_reduces_to_gaussian_cases_at_zero_alpha() {
        let t = 1.7;
        let b1 = 0.6;
        let b2 = -0.35;
        let m1 = joint_mgf(t, 0.0, b1, 0.0).unwrap();
        assert!((m1 - (0.5 * b1 * b1 * t).exp()).abs() < 1e-13 * m1);
        let m2 = joint_mgf(t, 0.0, 0.0, b2).unwrap();
        assert!((m2 - (0.5 * b2 * b2 * t * t * t / 3.0).exp()).abs() < 1e-13 * m2);
    }

    #[test]
    fn mgf_matches_path_simulation() {
        let (t, alpha, b1, b2) = (1.0, 0.7, 0.3, -0.2);
        let steps = 256;
        let dt = t / steps as f64;
        let n_paths = 200_000;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut vals = Vec::with_capacity(n_paths);
        for _ in 0..n_paths {
            let mut w = 0.0f64;
            let (mut p, mut q) = (0.0, 0.0);
            for _ in 0..steps {
                let z: f64 = rng.sample(StandardNormal);
                let w_next = w + dt.sqrt() * z;
                p += 0.5 * dt * (w + w_next);
                q += 0.5 * dt * (w * w + w_next * w_next);
                w = w_next;
            }
            vals.push((b1 * w + b2 * p - 0.5 * alpha * alpha * q).exp());
        }
        let (mean, se) = mean_and_se(&vals);
        let closed = joint_mgf(t, alpha, b1, b2).unwrap();
        assert!(
            (mean - closed).abs() < 3.0 * se,
            "mc {mean} +- {se} vs closed {closed}"
        );
    }

    #[test]
    fn talbot_inverts_reference_transforms() {
        // F(s) = 1/(s+1)  ->  e^{-z}.
        for z in [0.2, 1.0, 3.0] {
            let v = talbot_invert(|s| -(s + 1.0).ln(), z, 32);
            assert!((v - (-z as f64).exp()).abs() < 1e-9, "z={z}: {v}");
        }
        // F(s) = (1+2s)^{-1/2}  ->  e^{-z/2} / sqrt(2 pi z): a branch-cut
        // transform of the same square-root type as the target.
        for z in [0.5, 1.0, 2.0] {
            let v = talbot_invert(|s| -0.5 * (1.0 + 2.0 * s).ln(), z, 32);
            let expect = (-0.5 * z as f64).exp() / (2.0 * std::f64::consts::PI * z).sqrt();
            assert!((v - expect).abs() < 1e-9 * expect.max(1.0), "z={z}: {v} vs {expect}");
        }
    }

    #[test]
    fn psi2_integrates_to_one() {
        let inv = InversionConfig::default();
        for (t, x, y) in [(1.0, 0.0, 0.0), (1.0, 0.8, 0.3), (0.5, -0.5, 0.1)] {
            let (lo, hi) = psi2_support_window(t, x, y);
            let total = integrate_panels(
                |z| psi2(t, z, x, y, &inv).unwrap(),
                lo,
                hi,
                40,
                20,
            );
            assert!(
                (total - 1.0).abs() < 1e-3,
                "t={t} x={x} y={y}: mass {total}"
            );
        }
    }

    /// Crude integration window from the support edge and the transform's
    /// derivatives at zero.
    fn psi2_support_window(t: f64, x: f64, y: f64) -> (f64, f64) {
        let h = 1e-4;
        let g = |beta: f64| {
            let mut tr = GammaTildeLog::new(t, x, y, SERIES_THRESHOLD_W).unwrap();
            tr.eval(Complex64::new(beta, 0.0)).exp().re
        };
        let mean = -(g(h) - g(-h)) / (2.0 * h);
        let second = (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h);
        let sd = (second - mean * mean).max(1e-12).sqrt();
        (y * y / t + 1e-9, mean + 25.0 * sd)
    }

    #[test]
    fn psi2_round_trips_through_the_transform() {
        let inv = InversionConfig::default();
        let pts = [(0.0, 0.0), (0.5, 0.2), (-1.0, 0.3), (1.0, -0.5), (2.0, 1.0)];
        for (x, y) in pts {
            let t = 1.0;
            let (lo, hi) = psi2_support_window(t, x, y);
            for alpha in [0.5, 1.0, 2.0] {
                let integral = integrate_panels(
                    |z| (-0.5 * alpha * alpha * z).exp() * psi2(t, z, x, y, &inv).unwrap(),
                    lo,
                    hi,
                    40,
                    20,
                );
                let closed = gamma_cond(t, alpha, x, y).unwrap();
                assert!(
                    (integral - closed).abs() < 1e-4,
                    "alpha={alpha} x={x} y={y}: {integral} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn psi2_mean_matches_transform_slope() {
        let t = 1.0;
        let (x, y) = (0.0, 0.0);
        let inv = InversionConfig::default();
        let (lo, hi) = psi2_support_window(t, x, y);
        let mean_quad = integrate_panels(
            |z| z * psi2(t, z, x, y, &inv).unwrap(),
            lo,
            hi,
            40,
            20,
        );
        let h = 1e-4;
        let g = |beta: f64| {
            let mut tr = GammaTildeLog::new(t, x, y, SERIES_THRESHOLD_W).unwrap();
            tr.eval(Complex64::new(beta, 0.0)).exp().re
        };
        let mean_slope = -(g(h) - g(-h)) / (2.0 * h);
        assert!(
            (mean_quad - mean_slope).abs() < 1e-3,
            "{mean_quad} vs {mean_slope}"
        );
    }

    #[test]
    fn psi2_validates_inputs() {
        let inv = InversionConfig::default();
        assert!(psi2(0.0, 1.0, 0.0, 0.0, &inv).is_err());
        assert!(psi2(1.0, 0.0, 0.0, 0.0, &inv).is_err());
        let bad = InversionConfig { n_nodes: 4, ..Default::default() };
        assert!(psi2(1.0, 1.0, 0.0, 0.0, &bad).is_err());
    }

    fn params() -> ModelParams {
        ModelParams::new(0.05, 0.4, 0.03, 100.0, 4.0, 1.0).unwrap()
    }

    #[test]
    fn phi_clips_outside_the_support() {
        let p = params();
        let inv = InversionConfig::default();
        let y0 = p.y0();
        // q far below the reachable region forces the transformed third
        // coordinate negative.
        let v = phi(1.0, y0, y0 * 1.0, 0.0, &p, &inv).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn phi_marginal_in_y_is_the_lognormal_marginal() {
        let p = params();
        let inv = InversionConfig::default();
        let t = 1.0;
        let y0 = p.y0();
        let sigma = p.sigma;
        // Integrate out (p, q) numerically in the (b, c) coordinates; the
        // Jacobian sigma^3 cancels against part of the 1/sigma^4.
        for dy in [-0.5, 0.0, 0.7] {
            let y = y0 - 0.5 * sigma * sigma * t + sigma * dy * t.sqrt();
            let a = (y - y0) / sigma;
            // Conditional law of b given a is Gaussian with these moments.
            let b_sd = (t * t * t / 12.0_f64).sqrt();
            let b_mean = 0.5 * a * t;
            let mut total = 0.0;
            let (bn, bw) = gauss_legendre(24);
            for (bi, bwi) in bn.iter().zip(bw.iter()) {
                let b = b_mean + 7.0 * b_sd * bi;
                let p_coord = y0 * t + sigma * b;
                let (c_lo, c_hi) = psi2_support_window(t, a, b);
                let val = integrate_panels(
                    |c| {
                        let q = sigma * sigma * c + 2.0 * y0 * p_coord - y0 * y0 * t;
                        phi(t, y, p_coord, q, &p, &inv).unwrap()
                    },
                    c_lo,
                    c_hi,
                    24,
                    16,
                );
                total += bwi * 7.0 * b_sd * val * sigma * sigma * sigma;
            }
            let expect = (-(y - (y0 - 0.5 * sigma * sigma * t)).powi(2)
                / (2.0 * sigma * sigma * t))
                .exp()
                / (sigma * (2.0 * std::f64::consts::PI * t).sqrt());
            assert!(
                (total - expect).abs() < 1e-3,
                "y={y}: marginal {total} vs {expect}"
            );
        }
    }

    #[test]
    fn phi_normalizes_in_transformed_coordinates() {
        let p = params();
        let inv = InversionConfig::default();
        let t = 1.0f64;
        let sigma = p.sigma;
        // E[exp(-sigma a / 2 - sigma^2 t / 8)] over (a, b) ~ psi1 times the
        // psi2 mass must be 1. Gauss-Hermite in the Cholesky frame of a1.
        let (nodes, weights) = gauss_hermite(40);
        let l00 = t.sqrt();
        let l10 = 0.5 * t * t.sqrt();
        let l11 = t * t.sqrt() / (2.0 * 3.0_f64.sqrt());
        let mut total = 0.0;
        let mut weight_used = 0.0;
        for (u1, w1) in nodes.iter().zip(weights.iter()) {
            for (u2, w2) in nodes.iter().zip(weights.iter()) {
                // Nodes beyond ~4.3 carry weight below e^{-18}; skip them.
                if u1.abs() > 4.3 || u2.abs() > 4.3 {
                    continue;
                }
                let z1 = std::f64::consts::SQRT_2 * u1;
                let z2 = std::f64::consts::SQRT_2 * u2;
                let a = l00 * z1;
                let b = l10 * z1 + l11 * z2;
                let tilt = (-0.5 * sigma * a - sigma * sigma * t / 8.0).exp();
                let (c_lo, c_hi) = psi2_support_window(t, a, b);
                let mass = integrate_panels(
                    |c| psi2(t, c, a, b, &inv).unwrap(),
                    c_lo,
                    c_hi,
                    30,
                    12,
                );
                total += w1 * w2 * tilt * mass;
                weight_used += w1 * w2;
            }
        }
        total /= std::f64::consts::PI;
        weight_used /= std::f64::consts::PI;
        assert!(weight_used > 1.0 - 1e-8);
        assert!((total - 1.0).abs() < 5e-3, "total mass {total}");
    }
}
