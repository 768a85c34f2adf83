//! `cky` — command-line pipeline for constructing, certifying and
//! cross-checking self-similar blow-up profiles of the CKY model.
//!
//! Every subcommand writes its artifacts into a run directory together with
//! a `manifest.json` holding the fully resolved configuration and its hash;
//! re-running with the same configuration reproduces the outputs
//! bit-for-bit.

mod out;
mod report;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use cky_core::certify::{self, CertifyConfig};
use cky_core::odes::{self, GConfig};
use cky_core::series::{self, ScalingParams};
use cky_core::simulate::{self, SimConfig, StopRule, WInit};

/// Environment variable naming the default output root directory.
pub const OUTPUT_ROOT_ENV: &str = "CKY_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "cky", version, about = "Self-similar blow-up profiles of the CKY model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit near-field series coefficients, rigorous bounds and radius.
    Series(SeriesArgs),
    /// Bisection shooting for the scaling exponent c_l.
    Shoot(ShootArgs),
    /// Validated sign certificate for G(c_l).
    Certify(CertifyArgs),
    /// Dense self-similar profile and its peak-normalized rescaling.
    Profile(ProfileArgs),
    /// Particle-method simulation of the model up to blow-up.
    Simulate(SimulateArgs),
    /// Assemble exponent/Hölder tables and profile comparisons from runs.
    Report(ReportArgs),
}

#[derive(Args, Serialize, Deserialize, Clone, Default)]
struct CommonArgs {
    /// Output directory (defaults to $CKY_OUTPUT_ROOT/<command> or ./runs/<command>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct SeriesArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: CommonArgs,
    #[arg(short, long)]
    s: Option<u32>,
    #[arg(long = "c-l")]
    c_l: Option<f64>,
    /// Number of coefficients to compute.
    #[arg(short = 'K', long)]
    terms: Option<usize>,
    #[arg(long)]
    theta_s: Option<f64>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct ShootArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: CommonArgs,
    #[arg(short, long)]
    s: Option<u32>,
    /// Bracket "lo,hi" with G < 0 at lo and G > 0 at hi.
    #[arg(long)]
    bracket: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    /// RK4 steps on the near-field leg.
    #[arg(long)]
    near_steps: Option<usize>,
    /// RK4 steps on the far-field leg.
    #[arg(long)]
    far_steps: Option<usize>,
    /// Far-field truncation point for G.
    #[arg(long)]
    eta_max: Option<f64>,
    /// Evaluate the two bracket endpoints on separate threads.
    #[arg(long)]
    parallel_bracket: Option<bool>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct CertifyArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: CommonArgs,
    #[arg(short, long)]
    s: Option<u32>,
    #[arg(long = "c-l")]
    c_l: Option<f64>,
    #[arg(long)]
    eta_s: Option<f64>,
    #[arg(long)]
    eta_target: Option<f64>,
    /// Euler step size.
    #[arg(long)]
    step: Option<f64>,
    /// Series truncation for the initial enclosure.
    #[arg(short = 'm', long)]
    terms: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct ProfileArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: CommonArgs,
    #[arg(short, long)]
    s: Option<u32>,
    #[arg(long = "c-l")]
    c_l: Option<f64>,
    #[arg(long)]
    xi_max: Option<f64>,
    /// Samples in the rescaled profile grid.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: CommonArgs,
    #[arg(short, long)]
    s: Option<u32>,
    /// Initial vorticity: "cos4pi" or "quadratic".
    #[arg(long)]
    w_init: Option<String>,
    /// Particle layout: "full" or "desk" (1/10 counts).
    #[arg(long)]
    preset: Option<String>,
    /// Stop when the maximal vorticity reaches this value.
    #[arg(long)]
    stop_w_max: Option<f64>,
    /// Stop at this simulation time instead.
    #[arg(long)]
    t_max: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directories produced by prior subcommands.
    dirs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Overlays `base` (from a config file) under explicitly provided CLI
/// values: CLI wins field-by-field.
fn overlay<T: Serialize + for<'de> Deserialize<'de>>(cli: &T, path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut file_v: serde_json::Value = serde_json::from_str(&text)?;
    let cli_v = serde_json::to_value(cli)?;
    if let (Some(file_map), Some(cli_map)) = (file_v.as_object_mut(), cli_v.as_object()) {
        for (k, v) in cli_map {
            if !v.is_null() {
                file_map.insert(k.clone(), v.clone());
            }
        }
    }
    Ok(serde_json::from_value(file_v)?)
}

fn resolve_args<T: Serialize + for<'de> Deserialize<'de> + Clone>(
    args: &T,
    config: &Option<PathBuf>,
) -> Result<T> {
    match config {
        Some(path) => overlay(args, path),
        None => Ok(args.clone()),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Series(a) => cmd_series(a),
        Command::Shoot(a) => cmd_shoot(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Profile(a) => cmd_profile(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Report(a) => report::cmd_report(a.dirs, a.out),
    }
}

fn cmd_series(args: SeriesArgs) -> Result<()> {
    let a = resolve_args(&args, &args.common.config)?;
    let params = ScalingParams {
        s: a.s.unwrap_or(2),
        c_l: a.c_l.unwrap_or(3.0),
        theta_s: a.theta_s.unwrap_or(1.0),
    };
    let terms = a.terms.unwrap_or(series::RADIUS_FIT_TERMS);
    let coeffs = series::build_coefficients(&params, terms)?;
    let dir = out::run_dir(&args.common.out, "series")?;
    let manifest = out::Manifest::new(
        "series",
        serde_json::json!({ "params": params, "terms": terms }),
    );

    let mut csv = String::from("k,U,Theta,W\n");
    for k in 1..=coeffs.order() {
        let w = if k < coeffs.order() { coeffs.w(k).to_string() } else { String::new() };
        csv.push_str(&format!("{k},{},{},{w}\n", coeffs.u(k), coeffs.theta(k)));
    }
    out::write(&dir, "coefficients.csv", &csv)?;
    out::write_json(&dir, "coefficients.json", &coeffs)?;
    manifest.finish(&dir, &["coefficients.csv", "coefficients.json"])?;
    println!(
        "series: s={} c_l={} K={terms} radius_estimate={:.6e} -> {}",
        params.s,
        params.c_l,
        coeffs.radius_estimate,
        dir.display()
    );
    Ok(())
}

fn cmd_shoot(args: ShootArgs) -> Result<()> {
    let a = resolve_args(&args, &args.common.config)?;
    let s = a.s.unwrap_or(2);
    let bracket = match a.bracket.as_deref() {
        Some(text) => {
            let parts: Vec<&str> = text.split(',').collect();
            if parts.len() != 2 {
                bail!("--bracket expects \"lo,hi\"");
            }
            (parts[0].trim().parse()?, parts[1].trim().parse()?)
        }
        None => {
            if s == 2 {
                (3.0, 8.0)
            } else {
                (2.5, 8.0)
            }
        }
    };
    let tol = a.tol.unwrap_or(odes::BISECTION_TOL);
    let parallel = a.parallel_bracket.unwrap_or(true);
    let mut cfg = GConfig::default();
    if let Some(n) = a.near_steps {
        cfg.near_steps = n;
    }
    if let Some(n) = a.far_steps {
        cfg.far_steps = n;
    }
    if let Some(e) = a.eta_max {
        cfg.eta_max = e;
    }
    let result = odes::find_root_cl(s, bracket.0, bracket.1, tol, &cfg, parallel)?;

    let dir = out::run_dir(&args.common.out, "shoot")?;
    let manifest = out::Manifest::new(
        "shoot",
        serde_json::json!({
            "s": s, "bracket": bracket, "tol": tol,
            "parallel_bracket": parallel, "g": cfg,
        }),
    );
    let mut csv = String::from("c_l,G\n");
    let mut sorted = result.samples.clone();
    sorted.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    for (c, g) in &sorted {
        csv.push_str(&format!("{c},{g}\n"));
    }
    out::write(&dir, "g_samples.csv", &csv)?;
    out::write_json(&dir, "shooting.json", &result)?;
    manifest.finish(&dir, &["g_samples.csv", "shooting.json"])?;
    println!(
        "shoot: s={s} root c_l = {:.6} in [{:.6}, {:.6}] after {} iterations -> {}",
        result.c_l_root,
        result.bracket.0,
        result.bracket.1,
        result.iterations,
        dir.display()
    );
    Ok(())
}

fn cmd_certify(args: CertifyArgs) -> Result<()> {
    let a = resolve_args(&args, &args.common.config)?;
    let mut config = CertifyConfig::for_case(a.s.unwrap_or(2), a.c_l.unwrap_or(3.0));
    if let Some(v) = a.eta_s {
        config.eta_s = v;
    }
    if let Some(v) = a.eta_target {
        config.eta_target = v;
    }
    if let Some(v) = a.step {
        config.step = v;
    }
    if let Some(v) = a.terms {
        config.terms = v;
    }
    let cert = certify::certify_sign(&config)?;
    let dir = out::run_dir(&args.common.out, "certify")?;
    let manifest = out::Manifest::new("certify", serde_json::to_value(&config)?);
    out::write_json(&dir, "certificate.json", &cert)?;
    manifest.finish(&dir, &["certificate.json"])?;
    println!(
        "certify: s={} c_l={} -> {:?} after {} steps; U({}) in [{:.15}, {:.15}] -> {}",
        config.s,
        config.c_l,
        cert.verdict,
        cert.steps_taken,
        config.eta_target,
        cert.final_state.u.lo(),
        cert.final_state.u.hi(),
        dir.display()
    );
    if let Some(d) = &cert.diagnostic {
        println!("certify: diagnostic: {d}");
    }
    Ok(())
}

fn cmd_profile(args: ProfileArgs) -> Result<()> {
    let a = resolve_args(&args, &args.common.config)?;
    let s = a.s.unwrap_or(2);
    let c_l = a.c_l.unwrap_or(3.7967);
    let xi_max = a.xi_max.unwrap_or(odes::XI_MAX);
    let grid = a.grid.unwrap_or(odes::DENSE_SAMPLES);
    let table = odes::compute_profile(s, c_l, xi_max, grid)?;

    let dir = out::run_dir(&args.common.out, "profile")?;
    let manifest = out::Manifest::new(
        "profile",
        serde_json::json!({ "s": s, "c_l": c_l, "xi_max": xi_max, "grid": grid }),
    );
    let mut csv = String::from("chart,position,U,W,Theta\n");
    for p in &table.samples {
        csv.push_str(&format!(
            "near,{},{},{},{}\n",
            p.position, p.u, p.w, p.theta
        ));
    }
    out::write(&dir, "profile.csv", &csv)?;
    let mut csv = String::from("xi,W_s\n");
    for (i, v) in table.rescaled.iter().enumerate() {
        let xi = i as f64 / (table.rescaled.len() - 1) as f64;
        csv.push_str(&format!("{xi},{v}\n"));
    }
    out::write(&dir, "rescaled.csv", &csv)?;
    out::write_json(
        &dir,
        "profile.json",
        &serde_json::json!({
            "params": table.params,
            "w_max": table.w_max,
            "xi_peak": table.xi_peak,
        }),
    )?;
    manifest.finish(&dir, &["profile.csv", "rescaled.csv", "profile.json"])?;
    println!(
        "profile: s={s} c_l={c_l} W_max={:.6} at xi={:.6} -> {}",
        table.w_max,
        table.xi_peak,
        dir.display()
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let a = resolve_args(&args, &args.common.config)?;
    let s = a.s.unwrap_or(2);
    let w_init = match a.w_init.as_deref().unwrap_or("cos4pi") {
        "cos4pi" => WInit::Cos4Pi,
        "quadratic" | "quad" => WInit::Quadratic,
        other => bail!("unknown w_init {other:?} (expected cos4pi or quadratic)"),
    };
    let config = match a.preset.as_deref().unwrap_or("full") {
        "full" => SimConfig::full_resolution(s, w_init),
        "desk" => SimConfig::desk(s, w_init),
        other => bail!("unknown preset {other:?} (expected full or desk)"),
    };
    let stop = match (a.stop_w_max, a.t_max) {
        (_, Some(t)) => StopRule::TMax(t),
        (Some(w), None) => StopRule::WMaxLimit(w),
        (None, None) => StopRule::WMaxLimit(1e5),
    };
    let mut sys = simulate::init_particles(&config)?;
    let trace = simulate::run_until(&mut sys, stop, 100_000_000)?;

    let dir = out::run_dir(&args.common.out, "simulate")?;
    let manifest = out::Manifest::new(
        "simulate",
        serde_json::json!({
            "config": config, "stop": stop,
            "outer_spacing": config.outer_spacing(),
        }),
    );
    let mut files = vec!["trace.csv".to_string()];
    let mut csv = String::from("t,w_max,q_max,dt\n");
    for sample in &trace.samples {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            sample.t, sample.w_max, sample.q_max, sample.dt
        ));
    }
    out::write(&dir, "trace.csv", &csv)?;

    let mut snap_meta = Vec::new();
    for snap in &trace.snapshots {
        let name = format!("snapshot_{:.0e}.csv", snap.threshold);
        let mut csv = String::from("q,theta,w,u\n");
        for i in 0..snap.q.len() {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                snap.q[i], snap.theta[i], snap.w[i], snap.u[i]
            ));
        }
        out::write(&dir, &name, &csv)?;
        snap_meta.push(serde_json::json!({
            "file": name,
            "t": snap.t,
            "w_max": snap.w_max,
            "q_peak": snap.q_peak,
            "threshold": snap.threshold,
            "config_hash": manifest.config_hash,
        }));
        files.push(format!("snapshot_{:.0e}.csv", snap.threshold));
    }
    out::write_json(&dir, "snapshots.json", &snap_meta)?;
    files.push("snapshots.json".to_string());
    let file_refs: Vec<&str> = files.iter().map(|s| s.as_str()).collect();
    manifest.finish(&dir, &file_refs)?;
    let last = trace.samples.last().expect("non-empty trace");
    println!(
        "simulate: s={s} {:?} -> {} steps, t={:.6}, w_max={:.4e} -> {}",
        w_init,
        trace.samples.len(),
        last.t,
        last.w_max,
        dir.display()
    );
    Ok(())
}

