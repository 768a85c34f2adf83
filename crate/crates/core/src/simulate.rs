//! Particle-method simulation of the CKY model up to blow-up.
//!
//! `N+1` Lagrangian particles carry positions `q`, transported density `θ`
//! (exactly conserved per particle) and vorticity `w`. The velocity comes
//! from the trapezoidal rule applied to the Biot-Savart integrand `w(y)/y`,
//! the forcing `θ_x` from a three-point nonuniform stencil, and time
//! stepping is RK4 with a step chosen adaptively to keep particles from
//! crossing.

use serde::{Deserialize, Serialize};

/// Hard ceiling on the adaptive time step.
pub const DT_CAP: f64 = 1e-3;
/// Safety divisor applied to the crossing-time estimate.
pub const DT_SAFETY: f64 = 10.0;
/// Default snapshot thresholds on the maximal vorticity.
pub const SNAPSHOT_THRESHOLDS: [f64; 3] = [1e3, 1e4, 1e5];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("particle crossing detected at t = {t}, index {index}")]
    ParticleCrossing { t: f64, index: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("step budget {0} exhausted before the stop rule")]
    StepBudgetExhausted(usize),
}

/// Initial vorticity profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WInit {
    /// `w(x,0) = 1 - cos(4πx)`.
    Cos4Pi,
    /// `w(x,0) = x - x²`.
    Quadratic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub s: u32,
    pub w_init: WInit,
    /// Inner region `[0, inner_end]` holds `inner_particles + 1` particles.
    pub inner_particles: usize,
    pub inner_end: f64,
    /// Outer region `(inner_end, 1]` holds `outer_particles` particles.
    pub outer_particles: usize,
    pub dt_cap: f64,
    pub dt_safety: f64,
    pub snapshot_thresholds: Vec<f64>,
}

impl SimConfig {
    /// The full-resolution layout: `10^5 + 1` inner particles on
    /// `[0, 10^-3]`, `10^5 - 10^2` outer particles spaced `10^-5` up to 1.
    pub fn full_resolution(s: u32, w_init: WInit) -> Self {
        SimConfig {
            s,
            w_init,
            inner_particles: 100_000,
            inner_end: 1e-3,
            outer_particles: 99_900,
            dt_cap: DT_CAP,
            dt_safety: DT_SAFETY,
            snapshot_thresholds: SNAPSHOT_THRESHOLDS.to_vec(),
        }
    }

    /// Desk-scale preset with a tenth of each particle count.
    pub fn desk(s: u32, w_init: WInit) -> Self {
        SimConfig {
            inner_particles: 10_000,
            outer_particles: 9_990,
            ..Self::full_resolution(s, w_init)
        }
    }

    pub fn total_particles(&self) -> usize {
        self.inner_particles + 1 + self.outer_particles
    }

    pub fn outer_spacing(&self) -> f64 {
        (1.0 - self.inner_end) / self.outer_particles as f64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParticleSystem {
    pub q: Vec<f64>,
    pub theta: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
    pub config: SimConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub w_max: f64,
    /// Position at which the maximal vorticity is attained.
    pub q_max: f64,
    pub dt: f64,
}

/// Full particle state stored when `w_max` crosses a threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub w_max: f64,
    pub q_peak: f64,
    pub threshold: f64,
    pub q: Vec<f64>,
    pub theta: Vec<f64>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupTrace {
    pub samples: Vec<TraceSample>,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    WMaxLimit(f64),
    TMax(f64),
}

/// Places particles and evaluates the initial fields.
pub fn init_particles(config: &SimConfig) -> Result<ParticleSystem, SimError> {
    if config.inner_particles < 2 || config.outer_particles < 2 {
        return Err(SimError::InvalidConfig("particle counts too small".into()));
    }
    if !(config.inner_end > 0.0 && config.inner_end < 1.0) {
        return Err(SimError::InvalidConfig("inner_end must lie in (0, 1)".into()));
    }
    let n_total = config.total_particles();
    let mut q = Vec::with_capacity(n_total);
    for i in 0..=config.inner_particles {
        q.push(config.inner_end * i as f64 / config.inner_particles as f64);
    }
    for j in 1..=config.outer_particles {
        let frac = j as f64 / config.outer_particles as f64;
        q.push(config.inner_end + frac * (1.0 - config.inner_end));
    }
    // θ(x,0) = (1 - cos(πx))^{s/2}, written as (2 sin²(πx/2))^{s/2} to
    // avoid the 1 - cos cancellation near the origin.
    let half_s = config.s as f64 / 2.0;
    let theta: Vec<f64> = q
        .iter()
        .map(|&x| {
            let s = (0.5 * std::f64::consts::PI * x).sin();
            (2.0 * s * s).powf(half_s)
        })
        .collect();
    let w: Vec<f64> = q
        .iter()
        .map(|&x| match config.w_init {
            WInit::Cos4Pi => 1.0 - (4.0 * std::f64::consts::PI * x).cos(),
            WInit::Quadratic => x - x * x,
        })
        .collect();
    Ok(ParticleSystem {
        q,
        theta,
        w,
        t: 0.0,
        config: config.clone(),
    })
}

/// Trapezoidal velocity: `u_i = -q_i Σ_{j=i}^{N-1} ½(w_j/q_j + w_{j+1}/q_{j+1})(q_{j+1}-q_j)`
/// evaluated with a single suffix sweep. `u_0 = u_N = 0`.
///
/// The `j = 0` integrand ratio is pinned to zero; it only ever multiplies
/// into `u_0`, which vanishes through the `q_0 = 0` prefactor.
pub fn velocity_into(q: &[f64], w: &[f64], u: &mut [f64]) {
    let n = q.len();
    debug_assert!(n >= 2 && w.len() == n && u.len() == n);
    let ratio = |j: usize| if j == 0 { 0.0 } else { w[j] / q[j] };
    let mut suffix = 0.0;
    u[n - 1] = 0.0;
    for i in (0..n - 1).rev() {
        suffix += 0.5 * (ratio(i) + ratio(i + 1)) * (q[i + 1] - q[i]);
        u[i] = -q[i] * suffix;
    }
    u[0] = 0.0;
}

pub fn velocity(sys: &ParticleSystem) -> Vec<f64> {
    let mut u = vec![0.0; sys.q.len()];
    velocity_into(&sys.q, &sys.w, &mut u);
    u
}

/// Three-point nonuniform first-derivative stencil for `θ_x`, exact for
/// quadratics. Interior points combine the two one-sided slopes minus the
/// wide slope; the endpoints use the matching one-sided variants.
pub fn theta_x_into(q: &[f64], theta: &[f64], out: &mut [f64]) {
    let n = q.len();
    debug_assert!(n >= 3 && theta.len() == n && out.len() == n);
    out[0] = 0.0;
    for i in 1..n - 1 {
        let t1 = (theta[i] - theta[i + 1]) / (q[i] - q[i + 1]);
        let t2 = (theta[i] - theta[i - 1]) / (q[i] - q[i - 1]);
        let t3 = (theta[i + 1] - theta[i - 1]) / (q[i + 1] - q[i - 1]);
        out[i] = t1 + t2 - t3;
    }
    let i = n - 1;
    let s1 = (theta[i] - theta[i - 2]) / (q[i] - q[i - 2]);
    let s2 = (theta[i] - theta[i - 1]) / (q[i] - q[i - 1]);
    let s3 = (theta[i - 2] - theta[i - 1]) / (q[i - 2] - q[i - 1]);
    out[i] = s1 + s2 - s3;
}

pub fn theta_x(sys: &ParticleSystem) -> Vec<f64> {
    let mut tx = vec![0.0; sys.q.len()];
    theta_x_into(&sys.q, &sys.theta, &mut tx);
    tx
}

/// Adaptive step from the pairwise compression rates:
/// `dt_i = 1/max((u_i - u_{i+1})/(q_{i+1} - q_i), 0)`, then
/// `dt = min(min_i dt_i / safety, cap)`.
pub fn adaptive_dt(q: &[f64], u: &[f64], cap: f64, safety: f64) -> f64 {
    let mut max_rate = 0.0f64;
    for i in 0..q.len() - 1 {
        let rate = (u[i] - u[i + 1]) / (q[i + 1] - q[i]);
        max_rate = max_rate.max(rate);
    }
    if max_rate <= 0.0 {
        cap
    } else {
        (1.0 / (safety * max_rate)).min(cap)
    }
}

/// Scratch buffers reused across steps.
struct Scratch {
    qs: Vec<f64>,
    ws: Vec<f64>,
    ku: [Vec<f64>; 4],
    kw: [Vec<f64>; 4],
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            qs: vec![0.0; n],
            ws: vec![0.0; n],
            ku: std::array::from_fn(|_| vec![0.0; n]),
            kw: std::array::from_fn(|_| vec![0.0; n]),
        }
    }
}

fn check_sorted(q: &[f64], t: f64) -> Result<(), SimError> {
    for i in 0..q.len() - 1 {
        if q[i + 1] <= q[i] {
            return Err(SimError::ParticleCrossing { t, index: i });
        }
    }
    Ok(())
}

fn rk4_step(sys: &mut ParticleSystem, dt: f64, scratch: &mut Scratch) -> Result<(), SimError> {
    let n = sys.q.len();
    // Stage 1 on the current state.
    velocity_into(&sys.q, &sys.w, &mut scratch.ku[0]);
    theta_x_into(&sys.q, &sys.theta, &mut scratch.kw[0]);
    // Stages 2-4 on displaced states; θ values are transported unchanged.
    let stage_coeff = [0.5 * dt, 0.5 * dt, dt];
    for stage in 1..4 {
        let c = stage_coeff[stage - 1];
        for i in 0..n {
            scratch.qs[i] = sys.q[i] + c * scratch.ku[stage - 1][i];
            scratch.ws[i] = sys.w[i] + c * scratch.kw[stage - 1][i];
        }
        check_sorted(&scratch.qs, sys.t)?;
        let (before, after) = scratch.ku.split_at_mut(stage);
        let _ = &before;
        velocity_into(&scratch.qs, &scratch.ws, &mut after[0]);
        theta_x_into(&scratch.qs, &sys.theta, &mut scratch.kw[stage]);
    }
    let w6 = dt / 6.0;
    for i in 0..n {
        sys.q[i] += w6
            * (scratch.ku[0][i]
                + 2.0 * scratch.ku[1][i]
                + 2.0 * scratch.ku[2][i]
                + scratch.ku[3][i]);
        sys.w[i] += w6
            * (scratch.kw[0][i]
                + 2.0 * scratch.kw[1][i]
                + 2.0 * scratch.kw[2][i]
                + scratch.kw[3][i]);
    }
    sys.t += dt;
    check_sorted(&sys.q, sys.t)
}

/// Advances one adaptive RK4 step; returns the step size used.
pub fn step(sys: &mut ParticleSystem) -> Result<f64, SimError> {
    let mut scratch = Scratch::new(sys.q.len());
    let u = velocity(sys);
    let dt = adaptive_dt(&sys.q, &u, sys.config.dt_cap, sys.config.dt_safety);
    rk4_step(sys, dt, &mut scratch)?;
    Ok(dt)
}

fn peak(w: &[f64]) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut idx = 0;
    for (i, &v) in w.iter().enumerate() {
        if v > best {
            best = v;
            idx = i;
        }
    }
    (best, idx)
}

/// Runs until the stop rule fires, recording the blow-up trace and storing
/// snapshots at the configured `w_max` thresholds.
pub fn run_until(
    sys: &mut ParticleSystem,
    stop: StopRule,
    max_steps: usize,
) -> Result<BlowupTrace, SimError> {
    let mut scratch = Scratch::new(sys.q.len());
    let mut samples = Vec::new();
    let mut snapshots: Vec<Snapshot> = Vec::new();
    let mut thresholds = sys.config.snapshot_thresholds.clone();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut next_threshold = 0usize;
    let mut u = vec![0.0; sys.q.len()];

    for _ in 0..max_steps {
        velocity_into(&sys.q, &sys.w, &mut u);
        let dt = adaptive_dt(&sys.q, &u, sys.config.dt_cap, sys.config.dt_safety);
        rk4_step(sys, dt, &mut scratch)?;
        let (w_max, idx) = peak(&sys.w);
        samples.push(TraceSample {
            t: sys.t,
            w_max,
            q_max: sys.q[idx],
            dt,
        });
        while next_threshold < thresholds.len() && w_max >= thresholds[next_threshold] {
            velocity_into(&sys.q, &sys.w, &mut u);
            snapshots.push(Snapshot {
                t: sys.t,
                w_max,
                q_peak: sys.q[idx],
                threshold: thresholds[next_threshold],
                q: sys.q.clone(),
                theta: sys.theta.clone(),
                w: sys.w.clone(),
                u: u.clone(),
            });
            next_threshold += 1;
        }
        match stop {
            StopRule::WMaxLimit(limit) if w_max >= limit => {
                return Ok(BlowupTrace { samples, snapshots })
            }
            StopRule::TMax(t_max) if sys.t >= t_max => {
                return Ok(BlowupTrace { samples, snapshots })
            }
            _ => {}
        }
    }
    Err(SimError::StepBudgetExhausted(max_steps))
}
