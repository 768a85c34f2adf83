//! Validated far-field integration and sign certificates for `G(c_l)`.
//!
//! The far-field system is integrated with forward Euler from `η_s` to
//! `η_target`, carrying interval enclosures of `(Ŵ, Û, Θ̂)` that are
//! guaranteed to contain the exact profile values at every node. Each step
//! re-centers on the interval midpoints and splits the error into
//!
//! * the interval evaluation of the Euler update at the midpoints,
//! * `(I + hJ)(y(x_n) - mid)` with the Jacobian enclosed over the current
//!   intervals (propagation of accumulated error), and
//! * `½ y'' h²` with the second derivatives enclosed over an a-priori box
//!   that contains the trajectory across the whole step (local truncation).
//!
//! Integrating the whole interval through the Euler map without the
//! midpoint re-centering amplifies the propagated error exponentially and
//! is useless for this problem; the re-centered split keeps the final widths
//! near the rounding floor.
//!
//! A certificate then follows from the endpoint comparison conditions:
//! `u0 > 0` certifies `G > 0`; `u0 > -2` together with
//! `u0 + c_l w0 + (c_l-2)θ0 / ((u0+2)(1+u0/c_l)η0²) < 0` certifies `G < 0`,
//! both evaluated at worst-case interval endpoints.

use crate::interval::{Interval, IntervalError};
use crate::series::{self, BoundTriple, ScalingParams, SeriesError};
use serde::{Deserialize, Serialize};

/// Default step size for the validated Euler sweep.
pub const DEFAULT_STEP: f64 = 2.9e-6;
/// Default certification endpoint.
pub const DEFAULT_ETA_TARGET: f64 = 3.0;
/// Default truncation of the initial series evaluation.
pub const DEFAULT_TERMS: usize = series::CERTIFIED_TERMS;
/// Abort threshold: beyond this width the endpoint conditions cannot be
/// decided anyway.
pub const DEFAULT_WIDTH_CAP: f64 = 1e-2;
/// Containment-audit cadence in steps.
pub const DEFAULT_CHECKPOINT_EVERY: usize = 100_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertifyError {
    #[error("interval endpoint failure: {0}")]
    Interval(#[from] IntervalError),
    #[error("series construction failure: {0}")]
    Series(#[from] SeriesError),
    #[error("denominator interval contains zero at eta = {0}")]
    ZeroDenominator(f64),
    #[error("enclosure width {width} exceeds cap {cap} at step {step}")]
    WidthCap { step: usize, width: f64, cap: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Enclosure of the far-field state at one node. Component order in the
/// supporting matrices and vectors is `(Ŵ, Û, Θ̂)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntervalState {
    pub eta: Interval,
    pub w: Interval,
    pub u: Interval,
    pub theta: Interval,
}

impl IntervalState {
    pub fn max_width(&self) -> f64 {
        self.w.width().max(self.u.width()).max(self.theta.width())
    }

    fn as_vec(&self) -> IvVec3 {
        [self.w, self.u, self.theta]
    }
}

/// Trajectory enclosure over one whole step `[η^n, η^{n+1}]`.
#[derive(Debug, Clone, Copy)]
pub struct AprioriBox {
    pub eta: Interval,
    pub w: Interval,
    pub u: Interval,
    pub theta: Interval,
}

type IvVec3 = [Interval; 3];
type IvMat3 = [[Interval; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    GPositive,
    GNegative,
    Inconclusive,
}

/// Full configuration of one certification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub s: u32,
    pub c_l: f64,
    pub eta_s: f64,
    pub eta_target: f64,
    pub step: f64,
    pub terms: usize,
    pub width_cap: f64,
    pub checkpoint_every: usize,
    /// Bound triple override; `None` uses the A/B/C construction.
    pub bounds: Option<BoundTriple>,
}

impl CertifyConfig {
    /// Canonical defaults: start at `η_s = 0.1` except for `c_l = 8` which
    /// starts at `0.7`; integrate to `η = 3` with `h = 2.9e-6`.
    pub fn for_case(s: u32, c_l: f64) -> Self {
        let eta_s = if c_l >= 7.0 { 0.7 } else { 0.1 };
        CertifyConfig {
            s,
            c_l,
            eta_s,
            eta_target: DEFAULT_ETA_TARGET,
            step: DEFAULT_STEP,
            terms: DEFAULT_TERMS,
            width_cap: DEFAULT_WIDTH_CAP,
            checkpoint_every: DEFAULT_CHECKPOINT_EVERY,
            bounds: None,
        }
    }
}

/// Outcome of a certification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub config: CertifyConfig,
    pub verdict: Verdict,
    pub final_state: IntervalState,
    /// Enclosure of `u0` at the endpoint.
    pub condition_u: Interval,
    /// Enclosure of the `G < 0` comparison expression, when computable.
    pub condition_expr: Option<Interval>,
    pub steps_taken: usize,
    pub checkpoints: Vec<IntervalState>,
    pub diagnostic: Option<String>,
}

fn nonzero(iv: &Interval, eta: f64) -> Result<Interval, CertifyError> {
    if iv.contains(0.0) {
        Err(CertifyError::ZeroDenominator(eta))
    } else {
        Ok(*iv)
    }
}

/// Far-field right-hand side `(Ŵ', Û', Θ̂')` in interval arithmetic.
fn rhs_far_iv(eta: &Interval, y: &IvVec3, cl: &Interval) -> Result<IvVec3, CertifyError> {
    let [w, u, theta] = y;
    let d = nonzero(&cl.add(u)?, eta.lo())?;
    let eta_d = eta.mul(&d)?;
    let clm2 = cl.sub(&Interval::point(2.0))?;
    let eta3 = eta.powi(3)?;
    // Ŵ' = -c_l Ŵ/(η D) + c_l(c_l-2) Θ̂/(D² η³)
    let f_w = cl
        .mul(&clm2)?
        .mul(theta)?
        .div(&d.mul(&d)?.mul(&eta3)?)?
        .sub(&cl.mul(w)?.div(&eta_d)?)?;
    // Û' = c_l Ŵ/η
    let f_u = cl.mul(w)?.div(eta)?;
    // Θ̂' = (2-c_l) Û Θ̂/(η D)
    let f_theta = clm2.neg().mul(u)?.mul(theta)?.div(&eta_d)?;
    Ok([f_w, f_u, f_theta])
}

/// Jacobian of the right-hand side with respect to `(Ŵ, Û, Θ̂)`, enclosed
/// over the given state region.
pub fn jacobian_enclosure(
    eta: &Interval,
    w: &Interval,
    u: &Interval,
    theta: &Interval,
    cl: &Interval,
) -> Result<IvMat3, CertifyError> {
    let two = Interval::point(2.0);
    let d = nonzero(&cl.add(u)?, eta.lo())?;
    let clm2 = cl.sub(&two)?;
    let eta3 = eta.powi(3)?;
    let d2 = d.mul(&d)?;
    let d3 = d2.mul(&d)?;
    let zero = Interval::ZERO;

    // Row Ŵ'.
    let j_ww = cl.neg().div(&eta.mul(&d)?)?;
    // c_l (4Θ̂ - 2 c_l Θ̂ + (c_l+Û) η² Ŵ) / (D³ η³)
    let num = Interval::point(4.0)
        .mul(theta)?
        .sub(&two.mul(cl)?.mul(theta)?)?
        .add(&d.mul(&eta.mul(eta)?)?.mul(w)?)?;
    let j_wu = cl.mul(&num)?.div(&d3.mul(&eta3)?)?;
    let j_wt = cl.mul(&clm2)?.div(&d2.mul(&eta3)?)?;

    // Row Û'.
    let j_uw = cl.div(eta)?;

    // Row Θ̂'.
    let j_tu = cl.mul(&clm2.neg())?.mul(theta)?.div(&d2.mul(eta)?)?;
    let j_tt = clm2.neg().mul(u)?.div(&eta.mul(&d)?)?;

    Ok([[j_ww, j_wu, j_wt], [j_uw, zero, zero], [zero, j_tu, j_tt]])
}

/// Partial derivatives of the right-hand side with respect to `η`.
fn dfdeta_iv(eta: &Interval, y: &IvVec3, cl: &Interval) -> Result<IvVec3, CertifyError> {
    let [w, u, theta] = y;
    let d = nonzero(&cl.add(u)?, eta.lo())?;
    let clm2 = cl.sub(&Interval::point(2.0))?;
    let eta2 = eta.mul(eta)?;
    let eta4 = eta2.mul(&eta2)?;
    // ∂Ŵ'/∂η = c_l Ŵ/(η² D) - 3 c_l(c_l-2) Θ̂/(D² η⁴)
    let a = cl.mul(w)?.div(&eta2.mul(&d)?)?;
    let b = Interval::point(3.0)
        .mul(cl)?
        .mul(&clm2)?
        .mul(theta)?
        .div(&d.mul(&d)?.mul(&eta4)?)?;
    let g_w = a.sub(&b)?;
    // ∂Û'/∂η = -c_l Ŵ/η²
    let g_u = cl.mul(w)?.div(&eta2)?.neg();
    // ∂Θ̂'/∂η = (c_l-2) Û Θ̂/(η² D)
    let g_t = clm2.mul(u)?.mul(theta)?.div(&eta2.mul(&d)?)?;
    Ok([g_w, g_u, g_t])
}

/// Second derivatives `(Ŵ'', Û'', Θ̂'')` along the flow, enclosed over a
/// trajectory box: `y'' = ∂f/∂η + J f`. At `c_l = 3` this reduces to the
/// closed forms used in the original verification.
pub fn second_derivative_enclosure(
    boxed: &AprioriBox,
    cl: &Interval,
) -> Result<IvVec3, CertifyError> {
    let y = [boxed.w, boxed.u, boxed.theta];
    let f = rhs_far_iv(&boxed.eta, &y, cl)?;
    let j = jacobian_enclosure(&boxed.eta, &boxed.w, &boxed.u, &boxed.theta, cl)?;
    let g = dfdeta_iv(&boxed.eta, &y, cl)?;
    let mut out = [Interval::ZERO; 3];
    for i in 0..3 {
        let mut acc = g[i];
        for k in 0..3 {
            acc = acc.add(&j[i][k].mul(&f[k])?)?;
        }
        out[i] = acc;
    }
    Ok(out)
}

/// A-priori trajectory enclosure over `[η, η + h]` (differential-inequality
/// bounds). Real powers are replaced by the next integer power outward,
/// which over-encloses by `O(h)` and keeps the arithmetic rational.
pub fn apriori_enclosure(
    state: &IntervalState,
    h: &Interval,
    c_l: f64,
    s: u32,
) -> Result<AprioriBox, CertifyError> {
    let cl = Interval::point(c_l);
    let sf = Interval::point(s as f64);
    let eta = state.eta;
    let eta_next = eta.add(h)?;
    let eta_box = eta.hull(&eta_next);
    let ratio = eta_next.div(&eta)?;

    // Θ̂ grows no faster than (η'/η)^(s c_l - c_l + 2) and shrinks no faster
    // than (η'/η)^(2 - c_l).
    let p_up = (s as f64 * c_l - c_l + 2.0).ceil() as i32;
    let p_dn = (2.0 - c_l).floor() as i32;
    let theta_max = state.theta.mul(&ratio.powi(p_up)?)?;
    let theta_min = state.theta.mul(&ratio.powi(p_dn)?)?;
    let theta_box = state.theta.hull(&theta_min).hull(&theta_max);

    // Ŵ' <= s² c_l θ_max / ((c_l-2) η³) using the global lower bound
    // c_l + Û >= (c_l-2)/s of the profile.
    let eta3 = eta.powi(3)?;
    let w_gain = sf
        .mul(&sf)?
        .mul(&cl)?
        .mul(&theta_max)?
        .mul(h)?
        .div(&cl.sub(&Interval::point(2.0))?.mul(&eta3)?)?;
    let w_max = state.w.add(&w_gain)?;

    // Û is non-decreasing (Ŵ > 0); Û' = c_l Ŵ/η <= c_l w_max/η.
    let u_gain = cl.mul(&w_max)?.mul(h)?.div(&eta)?;
    let u_max = state.u.add(&u_gain)?;
    let u_box = state.u.hull(&u_max);

    // Ŵ' >= -c_l w_max / (η (c_l + u_min)).
    let d_min = nonzero(&cl.add(&state.u)?, eta.lo())?;
    let w_loss = h.mul(&cl)?.mul(&w_max)?.div(&eta.mul(&d_min)?)?;
    let w_min = state.w.sub(&w_loss)?;
    let w_box = state.w.hull(&w_min).hull(&w_max);

    Ok(AprioriBox {
        eta: eta_box,
        w: w_box,
        u: u_box,
        theta: theta_box,
    })
}

/// One validated Euler step: the returned intervals contain the exact
/// solution at `η + h` whenever the input contains it at `η`.
pub fn validated_step(
    state: &IntervalState,
    h: &Interval,
    c_l: f64,
    s: u32,
) -> Result<IntervalState, CertifyError> {
    let cl = Interval::point(c_l);
    let y = state.as_vec();
    let mid = [
        Interval::point(y[0].midpoint()),
        Interval::point(y[1].midpoint()),
        Interval::point(y[2].midpoint()),
    ];
    let f_mid = rhs_far_iv(&state.eta, &mid, &cl)?;

    // Propagation: (I + hJ)(y - mid), J over the current enclosure. The
    // matrix is formed before multiplying so that a contracting diagonal
    // (1 + hJ_ii with J_ii < 0) actually shrinks the carried deviation;
    // adding dev and hJ·dev as separate interval terms would lose the sign
    // cancellation and inflate widths exponentially.
    let j = jacobian_enclosure(&state.eta, &y[0], &y[1], &y[2], &cl)?;
    let mut dev = [Interval::ZERO; 3];
    for i in 0..3 {
        dev[i] = y[i].sub(&mid[i])?;
    }
    let mut prop = [Interval::ZERO; 3];
    for i in 0..3 {
        let mut acc = Interval::ZERO;
        for k in 0..3 {
            let m_ik = if i == k {
                Interval::ONE.add(&h.mul(&j[i][k])?)?
            } else {
                h.mul(&j[i][k])?
            };
            acc = acc.add(&m_ik.mul(&dev[k])?)?;
        }
        prop[i] = acc;
    }

    // Local truncation: ½ y'' h² over the a-priori box.
    let boxed = apriori_enclosure(state, h, c_l, s)?;
    let y2 = second_derivative_enclosure(&boxed, &cl)?;
    let h2_half = h.mul(h)?.mul(&Interval::point(0.5))?;

    let mut next = [Interval::ZERO; 3];
    for i in 0..3 {
        // Sum the small parts first; one wide-scale addition per component.
        let small = h
            .mul(&f_mid[i])?
            .add(&prop[i])?
            .add(&y2[i].mul(&h2_half)?)?;
        next[i] = mid[i].add(&small)?;
    }
    Ok(IntervalState {
        eta: state.eta.add(h)?,
        w: next[0],
        u: next[1],
        theta: next[2],
    })
}

/// Interval enclosure of the series-based initial data at `η_s`.
pub fn validated_initial(
    s: u32,
    c_l: f64,
    m: usize,
    eta_s: f64,
    bounds: &BoundTriple,
) -> Result<IntervalState, CertifyError> {
    let params = ScalingParams::new(s, c_l);
    let iv = series::build_coefficients_interval(&params, m + 1)?;
    let (u, w, theta) = series::evaluate_series_far_interval(&iv, bounds, m, eta_s)?;
    Ok(IntervalState {
        eta: Interval::point(eta_s),
        w,
        u,
        theta,
    })
}

/// Exact-real node `η_s + n h` enclosed in an interval (no accumulation:
/// recomputed from `n` each step).
fn node(eta_s: f64, n: usize, h: f64) -> Result<Interval, CertifyError> {
    Ok(Interval::point(eta_s)
        .add(&Interval::point(n as f64).mul(&Interval::point(h))?)?)
}

/// Runs the full certification. Mid-run failures produce an `Inconclusive`
/// certificate with a diagnostic rather than an error.
pub fn certify_sign(config: &CertifyConfig) -> Result<Certificate, CertifyError> {
    if !(config.eta_target > config.eta_s) || !(config.step > 0.0) {
        return Err(CertifyError::InvalidConfig(format!(
            "need eta_s < eta_target and step > 0, got eta_s = {}, eta_target = {}, step = {}",
            config.eta_s, config.eta_target, config.step
        )));
    }
    let params = ScalingParams::new(config.s, config.c_l);
    let bounds = match config.bounds {
        Some(b) => b,
        None => series::rigorous_bounds(&params)?,
    };
    let mut state = validated_initial(config.s, config.c_l, config.terms, config.eta_s, &bounds)?;
    let mut checkpoints = vec![state];

    // Full steps of exactly h, then one alignment step onto the target.
    let span = config.eta_target - config.eta_s;
    let mut n_full = (span / config.step).floor().max(0.0) as usize;
    while n_full > 0 && node(config.eta_s, n_full, config.step)?.hi() >= config.eta_target {
        n_full -= 1;
    }

    let h = Interval::point(config.step);
    let mut steps_taken = 0usize;
    let mut diagnostic = None;

    let outcome: Result<(), CertifyError> = (|| {
        for n in 0..n_full {
            state.eta = node(config.eta_s, n, config.step)?;
            let width = state.max_width();
            if width > config.width_cap {
                return Err(CertifyError::WidthCap {
                    step: n,
                    width,
                    cap: config.width_cap,
                });
            }
            state = validated_step(&state, &h, config.c_l, config.s)?;
            steps_taken += 1;
            if steps_taken.is_multiple_of(config.checkpoint_every) {
                state.eta = node(config.eta_s, steps_taken, config.step)?;
                checkpoints.push(state);
            }
        }
        // Alignment step onto η_target.
        state.eta = node(config.eta_s, n_full, config.step)?;
        let h_last = Interval::point(config.eta_target).sub(&state.eta)?;
        if h_last.hi() > 0.0 && h_last.lo() > 0.0 {
            state = validated_step(&state, &h_last, config.c_l, config.s)?;
            steps_taken += 1;
        }
        state.eta = Interval::point(config.eta_target);
        Ok(())
    })();

    if let Err(e) = outcome {
        diagnostic = Some(e.to_string());
    }
    checkpoints.push(state);

    let (verdict, condition_u, condition_expr) = if diagnostic.is_some() {
        (Verdict::Inconclusive, state.u, None)
    } else {
        evaluate_conditions(&state, config.c_l)?
    };

    Ok(Certificate {
        config: config.clone(),
        verdict,
        final_state: state,
        condition_u,
        condition_expr,
        steps_taken,
        checkpoints,
        diagnostic,
    })
}

/// Endpoint comparison conditions at worst-case interval endpoints.
fn evaluate_conditions(
    state: &IntervalState,
    c_l: f64,
) -> Result<(Verdict, Interval, Option<Interval>), CertifyError> {
    let cl = Interval::point(c_l);
    let u = state.u;
    if u.lo() > 0.0 {
        return Ok((Verdict::GPositive, u, None));
    }
    // u0 + c_l w0 + (c_l-2) θ0 / ((u0+2)(1 + u0/c_l) η0²)
    let expr = (|| -> Result<Interval, CertifyError> {
        let two = Interval::point(2.0);
        let u_plus_2 = nonzero(&u.add(&two)?, state.eta.lo())?;
        let one_plus = nonzero(&Interval::ONE.add(&u.div(&cl)?)?, state.eta.lo())?;
        let eta2 = state.eta.mul(&state.eta)?;
        let denom = u_plus_2.mul(&one_plus)?.mul(&eta2)?;
        let term = cl.sub(&two)?.mul(&state.theta)?.div(&denom)?;
        Ok(u.add(&cl.mul(&state.w)?)?.add(&term)?)
    })();
    match expr {
        Ok(e) if u.lo() > -2.0 && e.hi() < 0.0 => Ok((Verdict::GNegative, u, Some(e))),
        Ok(e) => Ok((Verdict::Inconclusive, u, Some(e))),
        Err(_) => Ok((Verdict::Inconclusive, u, None)),
    }
}
