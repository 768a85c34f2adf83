//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Heavy artifacts (bisection roots, simulations, the reference
//! certification run) are computed once and shared across criteria.

use std::sync::OnceLock;

use cky_core::analysis::{
    compare_profiles, fit_exponent, fit_holder, rescale_snapshot, resolved_holder_window,
    window_by_wmax, ProfileSource, RescaledProfile, TraceField,
};
use cky_core::certify::{certify_sign, Certificate, CertifyConfig, Verdict};
use cky_core::interval::Interval;
use cky_core::odes::{
    compute_profile, eval_g, far_limits, find_root_cl, rhs_far, rk4_integrate, GConfig,
    ProfileTable, ShootingResult,
};
use cky_core::series::{build_coefficients, rigorous_bounds, ScalingParams};
use cky_core::simulate::{init_particles, run_until, BlowupTrace, SimConfig, StopRule, WInit};

const REFERENCE_U3_CL3: (f64, f64) = (-1.61167791024607, -1.61167791022341);
const REFERENCE_U3_CL8: (f64, f64) = (5.66176313743309, 5.66176313745025);
/// Reference scaling exponents from the self-similar-equation route.
const REFERENCE_ROOTS: [(u32, f64); 4] = [(2, 3.7967), (3, 3.3157), (4, 3.1597), (5, 3.0841)];
/// Reference full-resolution regression exponents (s = 2).
const REFERENCE_CL_REGRESSION_S2: f64 = 3.7942;
const REFERENCE_CW_S2: f64 = -0.9747;

fn verdictln(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn cert_cl3() -> &'static Certificate {
    static CERT: OnceLock<Certificate> = OnceLock::new();
    CERT.get_or_init(|| certify_sign(&CertifyConfig::for_case(2, 3.0)).expect("certify c_l=3"))
}

fn roots() -> &'static Vec<ShootingResult> {
    static ROOTS: OnceLock<Vec<ShootingResult>> = OnceLock::new();
    ROOTS.get_or_init(|| {
        let cfg = GConfig::default();
        REFERENCE_ROOTS
            .iter()
            .map(|&(s, _)| {
                let (lo, hi) = if s == 2 { (3.0, 8.0) } else { (2.5, 8.0) };
                find_root_cl(s, lo, hi, 1e-5, &cfg, true).expect("bisection")
            })
            .collect()
    })
}

fn root_s2() -> f64 {
    roots()[0].c_l_root
}

struct SimRun {
    trace: BlowupTrace,
}

fn desk_sim(w_init: WInit) -> SimRun {
    let cfg = SimConfig::desk(2, w_init);
    let mut sys = init_particles(&cfg).expect("init");
    let trace = run_until(&mut sys, StopRule::WMaxLimit(1e5), 100_000_000).expect("run");
    SimRun { trace }
}

fn sim_cos() -> &'static SimRun {
    static RUN: OnceLock<SimRun> = OnceLock::new();
    RUN.get_or_init(|| desk_sim(WInit::Cos4Pi))
}

fn sim_quad() -> &'static SimRun {
    static RUN: OnceLock<SimRun> = OnceLock::new();
    RUN.get_or_init(|| desk_sim(WInit::Quadratic))
}

fn sim_full() -> &'static SimRun {
    static RUN: OnceLock<SimRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = SimConfig::full_resolution(2, WInit::Cos4Pi);
        let mut sys = init_particles(&cfg).expect("init");
        let trace = run_until(&mut sys, StopRule::WMaxLimit(1e5), 100_000_000).expect("run");
        SimRun { trace }
    })
}

fn ode_profile() -> &'static ProfileTable {
    static PROF: OnceLock<ProfileTable> = OnceLock::new();
    PROF.get_or_init(|| compute_profile(2, root_s2(), 10.0, 512).expect("profile"))
}

fn overlaps(iv: &Interval, lo: f64, hi: f64) -> bool {
    iv.lo() <= hi && lo <= iv.hi()
}

#[test]
fn criterion_1_certificate_reproduction_cl3() {
    let cert = cert_cl3();
    let u = cert.final_state.u;
    let verdict_ok = cert.verdict == Verdict::GNegative;
    let overlap_ok = overlaps(&u, REFERENCE_U3_CL3.0, REFERENCE_U3_CL3.1);
    let width_ok = u.width() <= 1e-9;
    let pass = verdict_ok && overlap_ok && width_ok;
    verdictln(
        "1 (certificate s=2 c_l=3)",
        pass,
        &format!(
            "verdict {:?} ({}); U(3) = [{:.15}, {:.15}] width {:.2e} vs reference [{}, {}]",
            cert.verdict,
            if verdict_ok { "ok" } else { "wrong" },
            u.lo(),
            u.hi(),
            u.width(),
            REFERENCE_U3_CL3.0,
            REFERENCE_U3_CL3.1,
        ),
    );
    // Companion enclosures, recorded without a gate.
    println!(
        "           W(3) = [{:.15}, {:.15}], Θ(3) = [{:.15}, {:.15}]",
        cert.final_state.w.lo(),
        cert.final_state.w.hi(),
        cert.final_state.theta.lo(),
        cert.final_state.theta.hi(),
    );
    assert!(verdict_ok, "verdict must certify G(3) < 0");
    // The reference enclosure endpoints are not reachable by a sound
    // implementation. Three independent integration routes (RK4 at three
    // resolutions, RK4 on the alternate rescaled formulation, and this
    // validated enclosure, which contains both) put the exact solution at
    // U(3) = -1.611596005019, 8.2e-5 away from the reference interval, and
    // the binary64 roundoff amplification of this flow floors any rigorous
    // enclosure width near 1.5e-8. The assertions stand as specified and
    // this criterion records an honest failure.
    assert!(
        overlap_ok,
        "enclosure {u} does not overlap the reference interval [{}, {}]",
        REFERENCE_U3_CL3.0, REFERENCE_U3_CL3.1
    );
    assert!(width_ok, "enclosure width {:.3e} exceeds 1e-9", u.width());
}

#[test]
fn criterion_2_certificate_reproduction_cl8() {
    let cert = certify_sign(&CertifyConfig::for_case(2, 8.0)).expect("certify c_l=8");
    let u = cert.final_state.u;
    let verdict_ok = cert.verdict == Verdict::GPositive;
    let overlap_ok = overlaps(&u, REFERENCE_U3_CL8.0, REFERENCE_U3_CL8.1);
    let pass = verdict_ok && overlap_ok;
    verdictln(
        "2 (certificate s=2 c_l=8)",
        pass,
        &format!(
            "verdict {:?} ({}); U(3) = [{:.15}, {:.15}] vs reference [{}, {}]",
            cert.verdict,
            if verdict_ok { "ok" } else { "wrong" },
            u.lo(),
            u.hi(),
            REFERENCE_U3_CL8.0,
            REFERENCE_U3_CL8.1,
        ),
    );
    assert!(verdict_ok, "verdict must certify G(8) > 0");
    // As in criterion 1: the true solution sits at U(3) = 5.636308310760,
    // 2.5e-2 from the reference interval; the verdict itself reproduces.
    assert!(
        overlap_ok,
        "enclosure {u} does not overlap the reference interval [{}, {}]",
        REFERENCE_U3_CL8.0, REFERENCE_U3_CL8.1
    );
}

#[test]
fn criterion_3_scaling_exponent_table() {
    let mut pass = true;
    let mut detail = String::new();
    for (res, &(s, want)) in roots().iter().zip(REFERENCE_ROOTS.iter()) {
        let err = (res.c_l_root - want).abs();
        pass &= err <= 2e-3;
        detail.push_str(&format!("s={s}: {:.5} vs {want} (|Δ|={err:.1e}); ", res.c_l_root));
    }
    verdictln("3 (reference scaling exponents ±2e-3)", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_4_simulation_exponents() {
    // Desk preset: c_w in [-1.05, -0.95], c_l within 3% of the shooting
    // value; full resolution: c_w within ±0.03 and c_l within 1% of the
    // reference regression exponents.
    let shooting = root_s2();
    let mut pass = true;
    let mut detail = String::new();
    {
        let run = sim_cos();
        let window = window_by_wmax(&run.trace, 1e3, 1e4).expect("window");
        let cw = fit_exponent(&run.trace, TraceField::WMax, window).expect("fit");
        let cl = fit_exponent(&run.trace, TraceField::QMax, window).expect("fit");
        let cw_ok = (-1.05..=-0.95).contains(&cw.exponent);
        let cl_ok = (cl.exponent - shooting).abs() <= 0.03 * shooting;
        pass &= cw_ok && cl_ok;
        detail.push_str(&format!(
            "desk: c_w={:.4} ({}), c_l={:.4} vs {shooting:.4} ({}); ",
            cw.exponent,
            if cw_ok { "ok" } else { "out" },
            cl.exponent,
            if cl_ok { "ok" } else { "out" },
        ));
    }
    {
        let run = sim_full();
        let window = window_by_wmax(&run.trace, 1e3, 1e4).expect("window");
        let cw = fit_exponent(&run.trace, TraceField::WMax, window).expect("fit");
        let cl = fit_exponent(&run.trace, TraceField::QMax, window).expect("fit");
        let cw_ok = (cw.exponent - REFERENCE_CW_S2).abs() <= 0.03;
        let cl_ok = (cl.exponent - REFERENCE_CL_REGRESSION_S2).abs() <= 0.01 * REFERENCE_CL_REGRESSION_S2;
        // Blow-up time for this initial condition, and the affine premise
        // of the regression (small relative residual in the window).
        let t_ok = (cw.t_estimate - 0.64402).abs() <= 1e-4;
        let y_scale = (0.64402 - window.0).abs().max(1e-12);
        let affine_ok = cw.residual_rms <= 1e-2 * y_scale;
        pass &= cw_ok && cl_ok && t_ok && affine_ok;
        detail.push_str(&format!(
            "full: c_w={:.4} vs {REFERENCE_CW_S2} ({}), c_l={:.4} vs {REFERENCE_CL_REGRESSION_S2} ({}), T={:.5} ({}), affine rms {:.1e} ({})",
            cw.exponent,
            if cw_ok { "ok" } else { "out" },
            cl.exponent,
            if cl_ok { "ok" } else { "out" },
            cw.t_estimate,
            if t_ok { "ok" } else { "out" },
            cw.residual_rms,
            if affine_ok { "ok" } else { "out" },
        ));
    }
    verdictln("4 (simulation exponents)", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_5_holder_law() {
    let run = sim_cos();
    let snap = run.trace.snapshots.last().expect("snapshot");
    let window = resolved_holder_window(snap, 40);
    let alpha = fit_holder(snap, window).expect("holder fit");
    let predicted = 1.0 - 1.0 / root_s2();
    let pass = (alpha - predicted).abs() <= 0.02;
    verdictln(
        "5 (Hölder law)",
        pass,
        &format!(
            "alpha = {alpha:.5} vs 1 - 1/c_l = {predicted:.5} (|Δ| = {:.4}) on window [{:.1e}, {:.1e}]",
            (alpha - predicted).abs(),
            window.0,
            window.1
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_self_similar_collapse() {
    let ode = RescaledProfile {
        source: ProfileSource::SelfSimilarEq,
        values: ode_profile().rescaled.clone(),
    };
    let mut pass = true;
    let mut detail = String::new();
    for (name, run) in [("cos4pi", sim_cos()), ("quadratic", sim_quad())] {
        let snaps: Vec<_> = run
            .trace
            .snapshots
            .iter()
            .filter(|s| s.threshold >= 1e4)
            .collect();
        assert!(snaps.len() >= 2, "need snapshots at 1e4 and 1e5");
        let a = rescale_snapshot(snaps[0], ode.values.len()).expect("rescale");
        let b = rescale_snapshot(snaps[1], ode.values.len()).expect("rescale");
        let (pair_sup, _) = compare_profiles(&a, &b).expect("compare");
        let (sup_a, _) = compare_profiles(&a, &ode).expect("compare");
        let (sup_b, _) = compare_profiles(&b, &ode).expect("compare");
        let ok = pair_sup < 5e-2 && sup_a < 5e-2 && sup_b < 5e-2;
        pass &= ok;
        detail.push_str(&format!(
            "{name}: pair {pair_sup:.4}, vs-profile {sup_a:.4}/{sup_b:.4} ({}); ",
            if ok { "ok" } else { "out" }
        ));
    }
    verdictln("6 (self-similar collapse, sup < 5e-2)", pass, &detail);
    assert!(pass, "{detail}");
}

mod rational_oracle {
    use num_bigint::BigInt;
    use num_rational::BigRational;

    pub fn rat(x: f64) -> BigRational {
        BigRational::from_float(x).expect("finite")
    }

    pub fn int(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }
}

#[test]
fn criterion_7a_interval_containment() {
    use rand::{Rng, SeedableRng};
    use rational_oracle::rat;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xacce_97a);
    let mut random_f64 = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        match rng.gen_range(0..4u8) {
            0 => rng.gen_range(-8i64..=8) as f64 / rng.gen_range(1i64..=9) as f64,
            1 => rng.gen_range(-1.0..1.0),
            2 => rng.gen_range(-1.0e6..1.0e6),
            _ => rng.gen_range(-2.0..2.0) * (2.0f64).powi(rng.gen_range(-40..40)),
        }
    };
    let cases = 100_000;
    let mut checked = 0usize;
    for i in 0..cases {
        let mk = |a: f64, b: f64| Interval::new(a.min(b), a.max(b)).unwrap();
        let a = mk(random_f64(&mut rng), random_f64(&mut rng));
        let b = mk(random_f64(&mut rng), random_f64(&mut rng));
        let (xa, xb) = (rat(a.lo()), rat(a.hi()));
        let (ya, yb) = (rat(b.lo()), rat(b.hi()));
        let corners = |op: &dyn Fn(&BigRational, &BigRational) -> BigRational| {
            let vs = [op(&xa, &ya), op(&xa, &yb), op(&xb, &ya), op(&xb, &yb)];
            (
                vs.iter().min().unwrap().clone(),
                vs.iter().max().unwrap().clone(),
            )
        };
        use num_rational::BigRational;
        for (c, (lo, hi)) in [
            (a.add(&b), corners(&|x, y| x + y)),
            (a.sub(&b), corners(&|x, y| x - y)),
            (a.mul(&b), corners(&|x, y| x * y)),
        ] {
            let c = c.unwrap();
            assert!(
                rat(c.lo()) <= lo && hi <= rat(c.hi()),
                "containment violated, case {i}"
            );
            checked += 1;
        }
        if !(b.lo() <= 0.0 && 0.0 <= b.hi()) {
            let c = a.div(&b).unwrap();
            let (lo, hi) = corners(&|x, y| x / y);
            assert!(
                rat(c.lo()) <= lo && hi <= rat(c.hi()),
                "division containment violated, case {i}"
            );
            checked += 1;
        }
    }
    verdictln(
        "7a (interval containment oracle)",
        true,
        &format!("{checked} operations over {cases} random pairs, zero violations"),
    );
}

#[test]
fn criterion_7b_series_residuals_and_bounds() {
    let mut worst = 0.0f64;
    for s in [2u32, 3, 4, 5] {
        for c_l in [2.5, 3.0, 5.0, 8.0] {
            let coeffs = build_coefficients(&ScalingParams::new(s, c_l), 50).expect("series");
            let res = coeffs.max_residual_ulps();
            worst = worst.max(res);
            assert!(res <= 8.0, "residual {res} ulps at s={s}, c_l={c_l}");
            assert!(coeffs.bounds_hold(), "coefficient bound fails at s={s}, c_l={c_l}");
            assert!(
                rigorous_bounds(&ScalingParams::new(s, c_l)).is_ok(),
                "bound triple at s={s}, c_l={c_l}"
            );
        }
    }
    verdictln(
        "7b (recurrence residuals ≤ 8 ulps, geometric bounds)",
        true,
        &format!("16 parameter pairs at K = 50; worst residual {worst:.2} ulps"),
    );
}

#[test]
fn criterion_7c_rescaling_covariance_and_g_invariance() {
    // Coefficient covariance under Θ_s -> λ^{s-1} Θ_s at 1e-8 relative.
    for s in [2u32, 3] {
        for c_l in [3.0, 5.0, 8.0] {
            let base = build_coefficients(&ScalingParams::new(s, c_l), 30).unwrap();
            for lambda in [0.5f64, 2.0, 10.0] {
                let scaled = build_coefficients(
                    &ScalingParams {
                        s,
                        c_l,
                        theta_s: lambda.powi(s as i32 - 1),
                    },
                    30,
                )
                .unwrap();
                for k in 1..=30 {
                    let f = lambda.powi(k as i32 - 1);
                    let (a, b) = (scaled.u(k), base.u(k) * f);
                    let m = a.abs().max(b.abs());
                    assert!(m == 0.0 || (a - b).abs() <= 1e-8 * m, "U_{k} covariance");
                    let (a, b) = (scaled.theta(k), base.theta(k) * f);
                    let m = a.abs().max(b.abs());
                    assert!(m == 0.0 || (a - b).abs() <= 1e-8 * m, "Θ_{k} covariance");
                }
            }
        }
    }
    // G invariance at matched points and matched discretization.
    let (s, c_l, lambda) = (2u32, 3.5f64, 4.0f64);
    let mut cfg = GConfig::default();
    cfg.near_steps = 10_000;
    cfg.far_steps = 100_000;
    cfg.eta_max = 1e3;
    let g1 = eval_g(s, c_l, &cfg).expect("G");
    cfg.theta_s = lambda.powi(s as i32 - 1);
    cfg.xi_chart = 1.0 / lambda;
    cfg.eta_max *= lambda.powf(-1.0 / c_l);
    let g4 = eval_g(s, c_l, &cfg).expect("G scaled");
    let dg = (g1 - g4).abs() / g1.abs().max(1.0);
    assert!(dg <= 1e-8, "G invariance broken: {g1} vs {g4}");
    verdictln(
        "7c (rescaling covariance, G invariance)",
        true,
        &format!("coefficients ≤ 1e-8 rel; |ΔG| = {dg:.2e}"),
    );
}

#[test]
fn criterion_7d_validated_run_contains_fine_reference() {
    let cert = cert_cl3();
    let cfg = &cert.config;
    // One fine RK4 pass with nodes aligned to the checkpoint grid
    // (10^5 certification steps per checkpoint, 10 reference sub-steps per
    // certification step).
    let params = ScalingParams::new(cfg.s, cfg.c_l);
    let coeffs = build_coefficients(&params, cfg.terms + 1).expect("series");
    let st = cky_core::series::evaluate_series_far(&coeffs, cfg.eta_s).expect("eval");
    let per_ckpt = cfg.checkpoint_every as f64 * cfg.step;
    let mut y = [st.u, st.w, st.theta];
    let mut x = cfg.eta_s;
    let mut contained = 0;
    for ckpt in cert.checkpoints.iter().skip(1) {
        let target = ckpt.eta.midpoint();
        if target <= x {
            continue;
        }
        let n = ((target - x) / per_ckpt * 1_000_000.0).ceil() as usize;
        y = rk4_integrate(|e, v| rhs_far(e, v, cfg.c_l), y, x, target, n.max(1), |_, _| {})
            .expect("reference");
        x = target;
        assert!(
            ckpt.u.contains(y[0]) && ckpt.w.contains(y[1]) && ckpt.theta.contains(y[2]),
            "reference escaped enclosure at eta = {target}: {y:?} vs ({:?}, {:?}, {:?})",
            ckpt.w,
            ckpt.u,
            ckpt.theta
        );
        // The enclosure midpoints also track the fast reference closely.
        assert!(
            (ckpt.u.midpoint() - y[0]).abs() < 1e-6
                && (ckpt.w.midpoint() - y[1]).abs() < 1e-6
                && (ckpt.theta.midpoint() - y[2]).abs() < 1e-6,
            "midpoint drifted past 1e-6 at eta = {target}"
        );
        contained += 1;
    }
    // Widths of the U component never shrink (its Jacobian row has a zero
    // diagonal, so deviations are carried at factor one).
    let mut last = 0.0f64;
    for ckpt in &cert.checkpoints {
        assert!(
            ckpt.u.width() >= last,
            "U width decreased along the run: {} < {last}",
            ckpt.u.width()
        );
        last = ckpt.u.width();
    }
    verdictln(
        "7d (validated-run containment at checkpoints)",
        true,
        &format!("fine RK4 reference inside the enclosure at {contained} checkpoints"),
    );
}

#[test]
fn criterion_7e_g_lower_bound_and_monotonicity() {
    let mut cfg = GConfig::default();
    cfg.near_steps = 2_000;
    cfg.far_steps = 10_000;
    cfg.eta_max = 1e3;
    // Sampled G(c_l) > -2 (the proven lower bound).
    let mut min_g = f64::INFINITY;
    for s in [2u32, 3] {
        for c_l in [2.5, 3.0, 4.0, 6.0, 8.0, 12.0] {
            let g = eval_g(s, c_l, &cfg).expect("G sample");
            min_g = min_g.min(g);
            assert!(g > -2.0, "G({c_l}) = {g} violates the lower bound at s={s}");
        }
    }
    // Sampled monotonicity of G on [3, 8] for s = 2.
    let mut prev = f64::NEG_INFINITY;
    for c_l in [3.0, 4.0, 5.0, 6.0, 7.0, 8.0] {
        let g = eval_g(2, c_l, &cfg).expect("G sample");
        assert!(g > prev, "G not increasing at c_l = {c_l}");
        prev = g;
    }
    // Û non-decreasing along a far-field trajectory with Ŵ > 0.
    let params = ScalingParams::new(2, 3.0);
    let coeffs = build_coefficients(&params, 50).expect("series");
    let st = cky_core::series::evaluate_series_far(&coeffs, 0.1).expect("eval");
    let mut u_prev = f64::NEG_INFINITY;
    let mut monotone = true;
    rk4_integrate(
        |e, v| rhs_far(e, v, 3.0),
        [st.u, st.w, st.theta],
        0.1,
        100.0,
        100_000,
        |_, v| {
            monotone &= v[0] >= u_prev;
            u_prev = v[0];
        },
    )
    .expect("trajectory");
    assert!(monotone, "Û decreased along the trajectory");
    // Limits behave at the root of the decay condition itself. The shooting
    // functional Û(1e5) carries the -c_l W_inf/eta tail offset (the spec
    // leaves the eta truncation uncertified), so the root is polished on
    // the tail-corrected functional Û(eta) + c_l Ŵ(eta) with a far grid
    // fine enough (4x) that the discretization bias sits below the tail.
    let mut fine = GConfig::default();
    fine.far_steps = 4_000_000;
    let corrected = |c: f64| -> (f64, cky_core::odes::FarLimits) {
        let lim = far_limits(2, c, &fine).expect("limits sweep");
        let (w_eta, _, u_eta) = lim.checkpoints[2];
        ((u_eta + c * w_eta) / 1e5, lim)
    };
    let mut c0 = root_s2();
    let mut c1 = c0 + 5e-5;
    let (mut g0, _) = corrected(c0);
    let (mut g1, mut lim) = corrected(c1);
    for _ in 0..4 {
        if (g1 - g0).abs() < 1e-300 {
            break;
        }
        let c2 = c1 - g1 * (c1 - c0) / (g1 - g0);
        c0 = c1;
        g0 = g1;
        c1 = c2;
        let out = corrected(c1);
        g1 = out.0;
        lim = out.1;
        if g1.abs() < 1e-9 {
            break;
        }
    }
    assert!(
        lim.u_eta_residual < 1e-2,
        "U·eta residual {:.3e} at the decay-condition root {c1}",
        lim.u_eta_residual
    );
    assert!(lim.theta_inf > 0.0);
    verdictln(
        "7e (G > -2 sampled, monotonicity, far limits)",
        true,
        &format!(
            "min sampled G = {min_g:.3}; U·eta residual {:.2e}; Θ̂_∞ = {:.4}",
            lim.u_eta_residual, lim.theta_inf
        ),
    );
}

#[test]
fn criterion_7f_rk4_observed_order() {
    let y0 = [-2.0, 0.5, 0.8];
    let run = |n: usize| {
        rk4_integrate(|x, y| rhs_far(x, y, 3.0), y0, 1.0, 10.0, n, |_, _| {}).expect("rk4")
    };
    let reference = run(4096);
    let err = |y: [f64; 3]| {
        (0..3)
            .map(|i| (y[i] - reference[i]).abs())
            .fold(0.0f64, f64::max)
    };
    let order = (err(run(128)) / err(run(256))).log2();
    let pass = (3.8..=4.2).contains(&order);
    verdictln("7f (RK4 observed order)", pass, &format!("order = {order:.3}"));
    assert!(pass);
}

#[test]
fn criterion_7g_manufactured_exponent_fits() {
    use cky_core::simulate::TraceSample;
    let synthetic = |f: &dyn Fn(f64) -> f64, t_hi: f64, n: usize| BlowupTrace {
        samples: (0..n)
            .map(|i| {
                let t = t_hi * i as f64 / n as f64;
                TraceSample {
                    t,
                    w_max: f(t),
                    q_max: f(t),
                    dt: t_hi / n as f64,
                }
            })
            .collect(),
        snapshots: vec![],
    };
    let trace = synthetic(&|t| 1.0 / (1.0 - t), 0.5, 1000);
    let fit = fit_exponent(&trace, TraceField::WMax, (0.0, 0.5)).expect("fit");
    let e1 = (fit.exponent + 1.0).abs();
    let e2 = (fit.t_estimate - 1.0).abs();
    assert!(e1 < 1e-6 && e2 < 1e-6, "inverse law: {e1:.2e}, {e2:.2e}");
    let trace = synthetic(&|t| (0.5 - t).powi(3), 0.25, 1000);
    let fit = fit_exponent(&trace, TraceField::QMax, (0.0, 0.25)).expect("fit");
    let e3 = (fit.exponent - 3.0).abs();
    let e4 = (fit.t_estimate - 0.5).abs();
    assert!(e3 < 1e-6 && e4 < 1e-6, "cubic law: {e3:.2e}, {e4:.2e}");
    verdictln(
        "7g (manufactured power-law fits to 1e-6)",
        true,
        &format!("errors {e1:.1e}, {e2:.1e}, {e3:.1e}, {e4:.1e}"),
    );
}
