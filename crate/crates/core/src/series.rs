//! Near-field power-series construction of the self-similar profiles.
//!
//! For a leading order `s >= 2` and scaling exponent `c_l > 2`, the profiles
//! admit Taylor expansions at the origin
//!
//! ```text
//! U(ξ) = Σ U_k ξ^k,   Θ(ξ) = Σ Θ_k ξ^k,   W(ξ) = Σ W_k ξ^k,   W_k = k U_{k+1},
//! ```
//!
//! whose coefficients follow inductively from matching powers in the profile
//! equations. The module computes the coefficients in floating point and in
//! interval form, the rigorous geometric bounds `|U_k| <= u0 r^k / k^2`,
//! `|Θ_k| <= θ0 r^k / k`, the closed-form truncation-error bounds for
//! far-field-chart evaluation, and a regression estimate of the convergence
//! radius.

use crate::interval::{Interval, IntervalError};
use crate::odes::{Chart, ProfileState};
use crate::util::linear_fit;
use serde::{Deserialize, Serialize};

/// Terms kept when estimating the convergence radius.
pub const RADIUS_FIT_TERMS: usize = 50;
/// Default truncation for certified far-chart evaluation.
pub const CERTIFIED_TERMS: usize = 20;
/// Coefficients smaller than this (relatively) are treated as the exact
/// zeros produced by index gaps and excluded from the radius regression.
const ZERO_COEFF_CUTOFF: f64 = 1e-290;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("invalid scaling parameters: {0}")]
    InvalidParams(String),
    #[error("truncation K = {0} too small, need K >= s + 1")]
    TruncationTooSmall(usize),
    #[error("geometric tail diverges: r * eta_s^c_l >= 1")]
    DivergentTail,
    #[error("evaluation point outside estimated convergence radius")]
    OutsideRadius,
    #[error("degenerate radius fit: no nonzero coefficients")]
    DegenerateFit,
    #[error("interval arithmetic failure: {0}")]
    Interval(#[from] IntervalError),
}

/// Leading order, scaling exponent and the free leading coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    /// Leading order of Θ at the origin, `s >= 2`.
    pub s: u32,
    /// Spatial scaling exponent, `c_l > 2`.
    pub c_l: f64,
    /// Leading coefficient `Θ_s > 0`; acts as the rescaling parameter.
    pub theta_s: f64,
}

impl ScalingParams {
    pub fn new(s: u32, c_l: f64) -> Self {
        ScalingParams { s, c_l, theta_s: 1.0 }
    }

    pub fn validate(&self) -> Result<(), SeriesError> {
        if self.s < 2 {
            return Err(SeriesError::InvalidParams(format!("s = {} < 2", self.s)));
        }
        if !self.c_l.is_finite() || self.c_l <= 2.0 {
            return Err(SeriesError::InvalidParams(format!(
                "c_l = {} must be finite and > 2",
                self.c_l
            )));
        }
        if !self.theta_s.is_finite() || self.theta_s <= 0.0 {
            return Err(SeriesError::InvalidParams(format!(
                "theta_s = {} must be finite and > 0",
                self.theta_s
            )));
        }
        Ok(())
    }

    /// Temporal vorticity exponent, fixed by the ansatz.
    pub fn c_w(&self) -> f64 {
        -1.0
    }

    pub fn c_u(&self) -> f64 {
        self.c_l - 1.0
    }

    pub fn c_theta(&self) -> f64 {
        self.c_l - 2.0
    }
}

/// Rigorous geometric bound triple `(u0, theta0, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTriple {
    pub u0: f64,
    pub theta0: f64,
    pub r: f64,
}

/// The A/B/C construction of a valid bound triple.
pub fn rigorous_bounds(params: &ScalingParams) -> Result<BoundTriple, SeriesError> {
    params.validate()?;
    let s = params.s as f64;
    let cl = params.c_l;
    let a = ((cl - 2.0) / (s * (s + 1.0))).min(2.0 * (cl - 2.0) / (9.0 * s));
    let b = 2.0 * (cl - 2.0) / (9.0 * s);
    let c = (s * params.theta_s / (a * b))
        .max(s.powi(4) * params.theta_s / (a * (s * cl - cl - s + 2.0)));
    let root = c.powf(1.0 / (s - 1.0));
    Ok(BoundTriple {
        u0: a / root,
        theta0: a / root * b,
        r: root,
    })
}

/// Checks the four inequalities the bound triple must satisfy. The canonical
/// triples sit exactly on the boundary of the last two, so those are tested
/// with a relative slack of 1e-12.
pub fn verify_bound_triple(params: &ScalingParams, t: &BoundTriple) -> bool {
    let s = params.s as f64;
    let cl = params.c_l;
    let u_s = leading_u(params);
    let theta_s = params.theta_s;
    let slack = 1.0 + 1e-12;
    let ok1 = u_s.abs() <= t.u0 * t.r.powi(params.s as i32) / (s * s) * slack;
    let ok2 = theta_s.abs() <= t.theta0 * t.r.powi(params.s as i32) / s * slack;
    let gap = (cl - 2.0) / s;
    let ok3 = (s + 1.0) * t.u0 * t.r / gap <= slack;
    let ok4 = 2.25 * (t.theta0 / t.u0 + t.u0 * t.r) / gap <= slack;
    ok1 && ok2 && ok3 && ok4
}

fn leading_u(params: &ScalingParams) -> f64 {
    let s = params.s as f64;
    let cl = params.c_l;
    s * s * params.theta_s / ((s * cl - cl - s + 2.0) * (s - 1.0))
}

/// Floating-point Taylor coefficients with their rigorous bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesCoefficients {
    pub params: ScalingParams,
    /// `u[k-1]` holds `U_k`, `k = 1..=K`.
    #[serde(rename = "U")]
    u: Vec<f64>,
    /// `theta[k-1]` holds `Θ_k`, `k = 1..=K`.
    #[serde(rename = "Theta")]
    theta: Vec<f64>,
    pub bounds: BoundTriple,
    pub radius_estimate: f64,
}

impl SeriesCoefficients {
    /// Largest coefficient index available.
    pub fn order(&self) -> usize {
        self.u.len()
    }

    pub fn u(&self, k: usize) -> f64 {
        self.u[k - 1]
    }

    pub fn theta(&self, k: usize) -> f64 {
        self.theta[k - 1]
    }

    /// `W_k = k U_{k+1}`; defined for `k <= order - 1`.
    pub fn w(&self, k: usize) -> f64 {
        k as f64 * self.u[k]
    }

    pub fn u_slice(&self) -> &[f64] {
        &self.u
    }

    pub fn theta_slice(&self) -> &[f64] {
        &self.theta
    }

    /// Largest residual of the two matching relations over all computed k,
    /// measured in units of the largest summand ("ulps of scale").
    pub fn max_residual_ulps(&self) -> f64 {
        let s = self.params.s as usize;
        let cl = self.params.c_l;
        let mut worst: f64 = 0.0;
        for k in 1..=self.order() {
            // (2 - c_l) Θ_k + k c_l Θ_k + Σ_{m=1}^{k-1} (k-m+1) Θ_{k-m+1} U_m = 0
            let mut terms = vec![(2.0 - cl) * self.theta(k), k as f64 * cl * self.theta(k)];
            for m in 1..k {
                terms.push((k - m + 1) as f64 * self.theta(k - m + 1) * self.u(m));
            }
            worst = worst.max(residual_in_ulps(&terms));
            // (k-1) U_k + c_l (k-1)^2 U_k + Σ_{m=1}^{k-1} U_m (k-m)^2 U_{k-m+1} - k Θ_k = 0
            if k >= s {
                let km1 = (k - 1) as f64;
                let mut terms = vec![
                    km1 * self.u(k),
                    cl * km1 * km1 * self.u(k),
                    -(k as f64) * self.theta(k),
                ];
                for m in 1..k {
                    terms.push(self.u(m) * ((k - m) * (k - m)) as f64 * self.u(k - m + 1));
                }
                worst = worst.max(residual_in_ulps(&terms));
            }
        }
        worst
    }

    /// Checks `|U_k| <= u0 r^k / k^2` and `|Θ_k| <= θ0 r^k / k` for all
    /// computed `k >= s`, with a 4-ulp slack for the float evaluation of the
    /// right-hand sides.
    pub fn bounds_hold(&self) -> bool {
        let s = self.params.s as usize;
        let slack = 1.0 + 1e-12;
        for k in s..=self.order() {
            let rk = self.bounds.r.powi(k as i32);
            if self.u(k).abs() > self.bounds.u0 * rk / (k * k) as f64 * slack {
                return false;
            }
            if self.theta(k).abs() > self.bounds.theta0 * rk / k as f64 * slack {
                return false;
            }
        }
        true
    }
}

fn residual_in_ulps(terms: &[f64]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let scale = terms.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    sum.abs() / (scale * f64::EPSILON)
}

/// Builds `U_k`, `Θ_k` for `k = 1..=K` by the matching recurrence.
pub fn build_coefficients(
    params: &ScalingParams,
    truncation: usize,
) -> Result<SeriesCoefficients, SeriesError> {
    params.validate()?;
    let s = params.s as usize;
    if truncation < s + 1 {
        return Err(SeriesError::TruncationTooSmall(truncation));
    }
    let sf = params.s as f64;
    let cl = params.c_l;
    let mut u = vec![0.0; truncation];
    let mut theta = vec![0.0; truncation];
    u[0] = ((1.0 - sf) * cl - 2.0) / sf;
    u[s - 1] = leading_u(params);
    theta[s - 1] = params.theta_s;
    for k in s + 1..=truncation {
        // Θ_k = -Σ_{m=s}^{k-1} U_m (k-m+1) Θ_{k-m+1} / ((k/s - 1)(c_l - 2))
        let mut num = 0.0;
        for m in s..k {
            num += u[m - 1] * (k - m + 1) as f64 * theta[k - m];
        }
        theta[k - 1] = -num / ((k as f64 / sf - 1.0) * (cl - 2.0));
        // U_k = (k Θ_k - Σ_{m=s}^{k-1} U_m (k-m)^2 U_{k-m+1})
        //       / ((k-1) + (c_l - 2)/s (k-1)^2)
        let mut num = 0.0;
        for m in s..k {
            num += u[m - 1] * ((k - m) * (k - m)) as f64 * u[k - m];
        }
        let km1 = (k - 1) as f64;
        u[k - 1] = (k as f64 * theta[k - 1] - num) / (km1 + (cl - 2.0) / sf * km1 * km1);
    }
    let bounds = rigorous_bounds(params)?;
    let mut coeffs = SeriesCoefficients {
        params: *params,
        u,
        theta,
        bounds,
        radius_estimate: 0.0,
    };
    coeffs.radius_estimate = estimate_radius(&coeffs).unwrap_or(0.5 / bounds.r);
    Ok(coeffs)
}

/// Interval enclosures of the Taylor coefficients.
#[derive(Debug, Clone)]
pub struct IntervalCoefficients {
    pub params: ScalingParams,
    u: Vec<Interval>,
    theta: Vec<Interval>,
}

impl IntervalCoefficients {
    pub fn order(&self) -> usize {
        self.u.len()
    }

    pub fn u(&self, k: usize) -> Interval {
        self.u[k - 1]
    }

    pub fn theta(&self, k: usize) -> Interval {
        self.theta[k - 1]
    }

    pub fn w(&self, k: usize) -> Result<Interval, IntervalError> {
        Interval::point(k as f64).mul(&self.u[k])
    }
}

/// The coefficient recurrence evaluated in interval arithmetic.
pub fn build_coefficients_interval(
    params: &ScalingParams,
    truncation: usize,
) -> Result<IntervalCoefficients, SeriesError> {
    params.validate()?;
    let s = params.s as usize;
    if truncation < s + 1 {
        return Err(SeriesError::TruncationTooSmall(truncation));
    }
    let sf = Interval::point(params.s as f64);
    let cl = Interval::point(params.c_l);
    let one = Interval::ONE;
    let two = Interval::point(2.0);
    let clm2 = cl.sub(&two)?;
    let mut u = vec![Interval::ZERO; truncation];
    let mut theta = vec![Interval::ZERO; truncation];

    // U_1 = ((1 - s) c_l - 2) / s
    u[0] = one.sub(&sf)?.mul(&cl)?.sub(&two)?.div(&sf)?;
    // U_s = s^2 Θ_s / ((s c_l - c_l - s + 2)(s - 1))
    let theta_s = Interval::point(params.theta_s);
    let denom = sf
        .mul(&cl)?
        .sub(&cl)?
        .sub(&sf)?
        .add(&two)?
        .mul(&sf.sub(&one)?)?;
    u[s - 1] = sf.mul(&sf)?.mul(&theta_s)?.div(&denom)?;
    theta[s - 1] = theta_s;

    for k in s + 1..=truncation {
        let kf = Interval::point(k as f64);
        let mut num = Interval::ZERO;
        for m in s..k {
            let t = u[m - 1]
                .mul(&Interval::point((k - m + 1) as f64))?
                .mul(&theta[k - m])?;
            num = num.add(&t)?;
        }
        let denom = kf.div(&sf)?.sub(&one)?.mul(&clm2)?;
        theta[k - 1] = num.neg().div(&denom)?;

        let mut num = Interval::ZERO;
        for m in s..k {
            let t = u[m - 1]
                .mul(&Interval::point(((k - m) * (k - m)) as f64))?
                .mul(&u[k - m])?;
            num = num.add(&t)?;
        }
        let km1 = Interval::point((k - 1) as f64);
        let denom = km1.add(&clm2.div(&sf)?.mul(&km1)?.mul(&km1)?)?;
        u[k - 1] = kf.mul(&theta[k - 1])?.sub(&num)?.div(&denom)?;
    }
    Ok(IntervalCoefficients {
        params: *params,
        u,
        theta,
    })
}

/// Closed-form tail bounds for the three far-field-chart series truncated at
/// `m` terms, evaluated at `eta_s`. Requires `r * eta_s^c_l < 1`. Returned
/// values are rigorous upper bounds (upward-rounded).
pub fn truncation_bound(
    bounds: &BoundTriple,
    m: usize,
    eta_s: f64,
    c_l: f64,
) -> Result<(f64, f64, f64), SeriesError> {
    let eta = Interval::point(eta_s);
    let t = pow_cl(&eta, c_l)?; // eta^c_l
    let r = Interval::point(bounds.r);
    let x = r.mul(&t)?; // r * eta^c_l
    if x.hi() >= 1.0 {
        return Err(SeriesError::DivergentTail);
    }
    let one_minus_x = Interval::ONE.sub(&x)?;
    let u0 = Interval::point(bounds.u0);
    let th0 = Interval::point(bounds.theta0);
    let mi = m as i32;

    // u0 r^{m+1} eta^{c_l m} / ((m+1)^2 (1 - x))
    let b_u = u0
        .mul(&r.powi(mi + 1)?)?
        .mul(&t.powi(mi)?)?
        .div(&Interval::point(((m + 1) * (m + 1)) as f64).mul(&one_minus_x)?)?;
    // θ0 x^{m+1} eta^{2 - c_l} / ((m+1)(1 - x)); eta^{2-c_l} = eta^2 / t
    let eta2 = eta.mul(&eta)?;
    let b_theta = th0
        .mul(&x.powi(mi + 1)?)?
        .mul(&eta2.div(&t)?)?
        .div(&Interval::point((m + 1) as f64).mul(&one_minus_x)?)?;
    // u0 r^{m+2} eta^{c_l(m+1)-1} / ((m+2)(1 - x)); eta^{c_l(m+1)-1} = t^{m+1}/eta
    let b_w = u0
        .mul(&r.powi(mi + 2)?)?
        .mul(&t.powi(mi + 1)?.div(&eta)?)?
        .div(&Interval::point((m + 2) as f64).mul(&one_minus_x)?)?;
    Ok((b_u.hi(), b_theta.hi(), b_w.hi()))
}

/// `eta^c_l` as an interval. Integral exponents use exact repeated squaring;
/// otherwise the faithful `powf` result is widened by four ulps each way.
pub fn pow_cl(eta: &Interval, c_l: f64) -> Result<Interval, SeriesError> {
    if c_l.fract() == 0.0 && c_l.abs() < 64.0 {
        return Ok(eta.powi(c_l as i32)?);
    }
    let lo = eta.lo().powf(c_l);
    let hi = eta.hi().powf(c_l);
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    let pad = 4.0 * (hi.abs().max(f64::MIN_POSITIVE) * f64::EPSILON);
    Ok(Interval::new(lo, hi)?.widen(pad)?)
}

/// Horner evaluation of the three series in the near-field chart.
pub fn evaluate_series(
    coeffs: &SeriesCoefficients,
    xi: f64,
) -> Result<ProfileState, SeriesError> {
    if xi < 0.0 || xi >= coeffs.radius_estimate {
        return Err(SeriesError::OutsideRadius);
    }
    let n = coeffs.order();
    let mut u = 0.0;
    let mut theta = 0.0;
    for k in (1..=n).rev() {
        u = u * xi + coeffs.u(k);
        theta = theta * xi + coeffs.theta(k);
    }
    let mut w = 0.0;
    for k in (1..n).rev() {
        w = w * xi + coeffs.w(k);
    }
    Ok(ProfileState {
        chart: Chart::NearField,
        position: xi,
        u: u * xi,
        w: w * xi,
        theta: theta * xi,
    })
}

/// Evaluation in the far-field chart at `eta_s` (position `ξ = eta_s^c_l`).
pub fn evaluate_series_far(
    coeffs: &SeriesCoefficients,
    eta_s: f64,
) -> Result<ProfileState, SeriesError> {
    let t = eta_s.powf(coeffs.params.c_l);
    if t.is_nan() || t < 0.0 || t >= coeffs.radius_estimate {
        return Err(SeriesError::OutsideRadius);
    }
    let n = coeffs.order();
    let mut u_hat = 0.0; // Σ U_k t^{k-1}
    let mut theta_sum = 0.0; // Σ Θ_k t^{k-1}
    for k in (1..=n).rev() {
        u_hat = u_hat * t + coeffs.u(k);
        theta_sum = theta_sum * t + coeffs.theta(k);
    }
    let mut w_hat = 0.0; // Σ W_k t^k
    for k in (1..n).rev() {
        w_hat = w_hat * t + coeffs.w(k);
    }
    Ok(ProfileState {
        chart: Chart::FarField,
        position: eta_s,
        u: u_hat,
        w: w_hat * t,
        theta: theta_sum * eta_s * eta_s,
    })
}

/// Interval far-chart evaluation of the truncated series plus truncation
/// bounds: the result strictly encloses the exact profile values at `eta_s`.
pub fn evaluate_series_far_interval(
    iv: &IntervalCoefficients,
    bounds: &BoundTriple,
    m: usize,
    eta_s: f64,
) -> Result<(Interval, Interval, Interval), SeriesError> {
    assert!(m < iv.order(), "need coefficients through m + 1");
    let c_l = iv.params.c_l;
    let eta = Interval::point(eta_s);
    let t = pow_cl(&eta, c_l)?;
    let s = iv.params.s as usize;

    let mut u_hat = Interval::ZERO;
    let mut theta_sum = Interval::ZERO;
    for k in (1..=m).rev() {
        u_hat = u_hat.mul(&t)?.add(&iv.u(k))?;
        if k >= s {
            theta_sum = theta_sum.mul(&t)?.add(&iv.theta(k))?;
        } else {
            theta_sum = theta_sum.mul(&t)?;
        }
    }
    let mut w_hat = Interval::ZERO;
    for k in (1..=m).rev() {
        w_hat = w_hat.mul(&t)?.add(&iv.w(k)?)?;
    }
    w_hat = w_hat.mul(&t)?;
    let eta2 = eta.mul(&eta)?;
    let theta_hat = theta_sum.mul(&eta2)?;

    let (b_u, b_theta, b_w) = truncation_bound(bounds, m, eta_s, c_l)?;
    Ok((
        u_hat.widen(b_u)?,
        w_hat.widen(b_w)?,
        theta_hat.widen(b_theta)?,
    ))
}

/// Convergence-radius estimate from log-linear regression of the nonzero
/// coefficient magnitudes over `s <= k <= min(order, 50)`.
pub fn estimate_radius(coeffs: &SeriesCoefficients) -> Result<f64, SeriesError> {
    let hi = coeffs.order().min(RADIUS_FIT_TERMS);
    let lo = coeffs.params.s as usize;
    let inv_r1 = fit_growth(&coeffs.theta, lo, hi)?;
    let inv_r2 = fit_growth(&coeffs.u, lo, hi)?;
    Ok(0.5 * inv_r1.min(inv_r2))
}

/// Fits `log |a_k| = k log r + c` over nonzero entries and returns `1/r`.
pub fn fit_growth(a: &[f64], lo: usize, hi: usize) -> Result<f64, SeriesError> {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut ks = Vec::new();
    let mut logs = Vec::new();
    for k in lo..=hi.min(a.len()) {
        let v = a[k - 1].abs();
        if v > scale * ZERO_COEFF_CUTOFF && v > 0.0 {
            ks.push(k as f64);
            logs.push(v.ln());
        }
    }
    let (slope, _) = linear_fit(&ks, &logs).ok_or(SeriesError::DegenerateFit)?;
    Ok((-slope).exp())
}
