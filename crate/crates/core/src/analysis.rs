//! Exponent extraction, Hölder fits, snapshot rescaling and profile
//! comparison between the simulator and the self-similar-equation solution.

use crate::simulate::{BlowupTrace, Snapshot};
use crate::util::{fit_rms, lerp_table, linear_fit};
use serde::{Deserialize, Serialize};

/// Default Hölder-fit window in `x` (the production layout resolves it).
pub const HOLDER_WINDOW: (f64, f64) = (1e-10, 1e-9);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("window [{0}, {1}] holds too few samples (need >= {2})")]
    DegenerateWindow(f64, f64, usize),
    #[error("field must be positive throughout the window")]
    NonPositiveField,
    #[error("snapshot peak sits on the boundary; no interior maximizer")]
    BoundaryPeak,
    #[error("profiles have mismatched or empty grids")]
    GridMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceField {
    WMax,
    QMax,
}

/// Result of a scaling-exponent regression on a blow-up trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Scaling exponent recovered from the slope (`c_w` or `c_l`).
    pub exponent: f64,
    /// Blow-up time estimate `-intercept/slope`.
    pub t_estimate: f64,
    pub window: (f64, f64),
    pub residual_rms: f64,
    pub points_used: usize,
}

/// Fits the ansatz `field(t) = C (T-t)^c` on a time window: the reciprocal
/// of the centered-difference derivative of `log field` is affine in `t`
/// with slope `1/c`, so `c = 1/slope` and `T = -intercept/slope`.
pub fn fit_exponent(
    trace: &BlowupTrace,
    field: TraceField,
    window: (f64, f64),
) -> Result<FitResult, AnalysisError> {
    let pick = |s: &crate::simulate::TraceSample| match field {
        TraceField::WMax => s.w_max,
        TraceField::QMax => s.q_max,
    };
    let in_window: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter(|s| s.t >= window.0 && s.t <= window.1)
        .map(|s| (s.t, pick(s)))
        .collect();
    if in_window.len() < 10 {
        return Err(AnalysisError::DegenerateWindow(window.0, window.1, 10));
    }
    if in_window.iter().any(|&(_, v)| v <= 0.0) {
        return Err(AnalysisError::NonPositiveField);
    }
    // Centered differences on the native (nonuniform) time grid; samples
    // with a vanishing local derivative (staircase flats of q_max) are
    // dropped from the regression.
    let mut ts = Vec::with_capacity(in_window.len());
    let mut ys = Vec::with_capacity(in_window.len());
    for i in 1..in_window.len() - 1 {
        let (t_prev, f_prev) = in_window[i - 1];
        let (t, _) = in_window[i];
        let (t_next, f_next) = in_window[i + 1];
        let d = (f_next.ln() - f_prev.ln()) / (t_next - t_prev);
        if d != 0.0 && d.is_finite() {
            ts.push(t);
            ys.push(1.0 / d);
        }
    }
    let (a, b) = linear_fit(&ts, &ys)
        .ok_or(AnalysisError::DegenerateWindow(window.0, window.1, 10))?;
    Ok(FitResult {
        slope: a,
        intercept: b,
        exponent: 1.0 / a,
        t_estimate: -b / a,
        window,
        residual_rms: fit_rms(&ts, &ys, a, b),
        points_used: ts.len(),
    })
}

/// Selects a regression window from the trace: the span of samples whose
/// `w_max` lies within `[lo, hi]`.
pub fn window_by_wmax(trace: &BlowupTrace, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let mut t_lo = f64::INFINITY;
    let mut t_hi = f64::NEG_INFINITY;
    for s in &trace.samples {
        if s.w_max >= lo && s.w_max <= hi {
            t_lo = t_lo.min(s.t);
            t_hi = t_hi.max(s.t);
        }
    }
    (t_lo < t_hi).then_some((t_lo, t_hi))
}

/// Least-squares slope of `ln |u|` against `ln x` over particles with
/// `q` in the window: the Hölder exponent of the velocity at the origin.
/// (The velocity is negative near the origin during blow-up; the magnitude
/// carries the scaling law.)
pub fn fit_holder(snapshot: &Snapshot, x_window: (f64, f64)) -> Result<f64, AnalysisError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&q, &u) in snapshot.q.iter().zip(&snapshot.u) {
        if q >= x_window.0 && q <= x_window.1 && u.abs() > 0.0 && q > 0.0 {
            xs.push(q.ln());
            ys.push(u.abs().ln());
        }
    }
    if xs.len() < 5 {
        return Err(AnalysisError::DegenerateWindow(x_window.0, x_window.1, 5));
    }
    let (a, _) = linear_fit(&xs, &ys)
        .ok_or(AnalysisError::DegenerateWindow(x_window.0, x_window.1, 5))?;
    Ok(a)
}

/// A Hölder-fit window in the self-similar tail: the scaling law holds for
/// positions well above the vorticity peak (below it the velocity profile
/// linearizes) and well below the outer region. Starts at `10^4 q_peak`
/// spanning two decades and widens upward until it holds enough particles.
pub fn resolved_holder_window(snapshot: &Snapshot, min_particles: usize) -> (f64, f64) {
    let (mut w_max, mut idx) = (f64::NEG_INFINITY, 0usize);
    for (i, &w) in snapshot.w.iter().enumerate() {
        if w > w_max {
            w_max = w;
            idx = i;
        }
    }
    let q_peak = snapshot.q[idx].max(f64::MIN_POSITIVE);
    let lo = (1e4 * q_peak).min(1e-4);
    let mut hi = (lo * 100.0).min(1e-2);
    loop {
        let count = snapshot
            .q
            .iter()
            .filter(|&&q| q >= lo && q <= hi)
            .count();
        if count >= min_particles || hi >= 1e-2 {
            return (lo, hi);
        }
        hi *= 10.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileSource {
    SelfSimilarEq,
    SimulationSnapshot,
}

/// A peak-normalized vorticity profile on a uniform grid of `[0, 1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RescaledProfile {
    pub source: ProfileSource,
    pub values: Vec<f64>,
}

impl RescaledProfile {
    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.values.len();
        (0..n).map(move |i| i as f64 / (n - 1) as f64)
    }
}

/// `W_s(ξ) = w(ξ q_peak)/w_max` by piecewise-linear interpolation of the
/// particle data onto a uniform `ξ` grid.
pub fn rescale_snapshot(snapshot: &Snapshot, n_grid: usize) -> Result<RescaledProfile, AnalysisError> {
    let (mut w_max, mut idx) = (f64::NEG_INFINITY, 0);
    for (i, &w) in snapshot.w.iter().enumerate() {
        if w > w_max {
            w_max = w;
            idx = i;
        }
    }
    if idx == 0 || idx + 1 == snapshot.w.len() || w_max <= 0.0 {
        return Err(AnalysisError::BoundaryPeak);
    }
    let q_peak = snapshot.q[idx];
    let values = (0..n_grid)
        .map(|i| {
            let xi = i as f64 / (n_grid - 1) as f64;
            lerp_table(&snapshot.q, &snapshot.w, xi * q_peak) / w_max
        })
        .collect();
    Ok(RescaledProfile {
        source: ProfileSource::SimulationSnapshot,
        values,
    })
}

/// Sup and RMS deviation between two profiles on the same grid.
pub fn compare_profiles(
    a: &RescaledProfile,
    b: &RescaledProfile,
) -> Result<(f64, f64), AnalysisError> {
    if a.values.is_empty() || a.values.len() != b.values.len() {
        return Err(AnalysisError::GridMismatch);
    }
    let mut sup = 0.0f64;
    let mut ss = 0.0;
    for (&x, &y) in a.values.iter().zip(&b.values) {
        let d = (x - y).abs();
        sup = sup.max(d);
        ss += d * d;
    }
    Ok((sup, (ss / a.values.len() as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{BlowupTrace, Snapshot, TraceSample};

    fn synthetic_trace(f: impl Fn(f64) -> f64, t_hi: f64, n: usize) -> BlowupTrace {
        let samples = (0..n)
            .map(|i| {
                let t = t_hi * i as f64 / n as f64;
                TraceSample {
                    t,
                    w_max: f(t),
                    q_max: f(t),
                    dt: t_hi / n as f64,
                }
            })
            .collect();
        BlowupTrace {
            samples,
            snapshots: vec![],
        }
    }

    #[test]
    fn manufactured_inverse_power_law() {
        // w_max = (1-t)^{-1}: c_w = -1, T = 1. The centered-difference bias
        // scales with h²/(1-t), so the window stays clear of the pole.
        let trace = synthetic_trace(|t| 1.0 / (1.0 - t), 0.5, 1000);
        let fit = fit_exponent(&trace, TraceField::WMax, (0.0, 0.5)).unwrap();
        assert!((fit.exponent + 1.0).abs() < 1e-6, "c_w = {}", fit.exponent);
        assert!((fit.t_estimate - 1.0).abs() < 1e-6, "T = {}", fit.t_estimate);
    }

    #[test]
    fn manufactured_cubic_decay() {
        // q_max = (0.5-t)^3: c_l = 3, T = 0.5.
        let trace = synthetic_trace(|t| (0.5 - t).powi(3), 0.25, 1000);
        let fit = fit_exponent(&trace, TraceField::QMax, (0.0, 0.25)).unwrap();
        assert!((fit.exponent - 3.0).abs() < 1e-6, "c_l = {}", fit.exponent);
        assert!((fit.t_estimate - 0.5).abs() < 1e-6);
    }

    #[test]
    fn exponent_invariant_under_field_scaling() {
        let trace = synthetic_trace(|t| 1.0 / (1.0 - t), 0.5, 500);
        let scaled = synthetic_trace(|t| 7.25 / (1.0 - t), 0.5, 500);
        let a = fit_exponent(&trace, TraceField::WMax, (0.0, 0.5)).unwrap();
        let b = fit_exponent(&scaled, TraceField::WMax, (0.0, 0.5)).unwrap();
        assert!((a.exponent - b.exponent).abs() < 1e-12);
        assert!((a.t_estimate - b.t_estimate).abs() < 1e-9);
    }

    #[test]
    fn window_guards() {
        let trace = synthetic_trace(|t| 1.0 / (1.0 - t), 0.5, 1000);
        assert!(matches!(
            fit_exponent(&trace, TraceField::WMax, (0.45, 0.4502)),
            Err(AnalysisError::DegenerateWindow(..))
        ));
    }

    fn synthetic_snapshot(u: impl Fn(f64) -> f64) -> Snapshot {
        let n = 4000usize;
        let q: Vec<f64> = (0..n).map(|i| 1e-12 * (1.03f64).powi(i as i32)).collect();
        let u: Vec<f64> = q.iter().map(|&x| u(x)).collect();
        let w: Vec<f64> = q
            .iter()
            .map(|&x| x / (1.0 + (x * 1e9) * (x * 1e9)).sqrt())
            .collect();
        Snapshot {
            t: 0.5,
            w_max: 0.0,
            q_peak: 0.0,
            threshold: 0.0,
            theta: vec![0.0; n],
            q,
            w,
            u,
        }
    }

    #[test]
    fn holder_fit_recovers_synthetic_exponent() {
        let snap = synthetic_snapshot(|x| 3.0 * x.powf(0.7));
        let alpha = fit_holder(&snap, (1e-10, 1e-9)).unwrap();
        assert!((alpha - 0.7).abs() < 1e-12, "alpha = {alpha}");
    }

    #[test]
    fn holder_prediction_identity() {
        let c_l = 3.7967f64;
        assert!((1.0 - 1.0 / c_l - 0.73661).abs() < 5e-6);
    }

    fn peaked_snapshot(scale: f64) -> Snapshot {
        let n = 3000;
        let q: Vec<f64> = (0..n).map(|i| scale * (i as f64 / (n - 1) as f64)).collect();
        let w: Vec<f64> = q
            .iter()
            .map(|&x| {
                let z = x / scale;
                (std::f64::consts::PI * z).sin() * (1.5 - z)
            })
            .collect();
        Snapshot {
            t: 0.1,
            w_max: 0.0,
            q_peak: 0.0,
            threshold: 0.0,
            theta: vec![0.0; n],
            u: vec![0.0; n],
            q,
            w,
        }
    }

    #[test]
    fn rescale_normalization() {
        let snap = peaked_snapshot(1.0);
        let prof = rescale_snapshot(&snap, 401).unwrap();
        assert_eq!(prof.values[0], 0.0);
        let last = *prof.values.last().unwrap();
        assert!((last - 1.0).abs() < 1e-12, "W_s(1) = {last}");
        assert!(prof.values.iter().all(|&v| v <= 1.0 + 1e-12));
    }

    #[test]
    fn rescale_invariant_under_position_scaling() {
        // (q, w) -> (λ q, w) with λ a power of two reproduces the profile
        // bit-for-bit (the interpolation weights are unchanged).
        let a = rescale_snapshot(&peaked_snapshot(1.0), 257).unwrap();
        let b = rescale_snapshot(&peaked_snapshot(2.0), 257).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn compare_shifted_profiles() {
        let base = rescale_snapshot(&peaked_snapshot(1.0), 129).unwrap();
        let shifted = RescaledProfile {
            source: ProfileSource::SelfSimilarEq,
            values: base.values.iter().map(|v| v + 0.01).collect(),
        };
        let (sup, rms) = compare_profiles(&base, &shifted).unwrap();
        assert!((sup - 0.01).abs() < 1e-15);
        assert!((rms - 0.01).abs() < 1e-15);
        let (sup, rms) = compare_profiles(&base, &base).unwrap();
        assert_eq!((sup, rms), (0.0, 0.0));
    }
}
