//! The `report` subcommand: assembles exponent and Hölder tables and profile
//! comparisons from previously written run directories.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use cky_core::analysis::{
    self, ProfileSource, RescaledProfile, TraceField,
};
use cky_core::simulate::{BlowupTrace, Snapshot, TraceSample};

#[derive(Deserialize)]
struct ManifestIn {
    command: String,
    config: serde_json::Value,
    config_hash: String,
    artifacts: Vec<String>,
}

#[derive(Serialize)]
struct SimReport {
    dir: String,
    s: u32,
    w_init: String,
    c_w: f64,
    c_l: f64,
    t_blowup: f64,
    holder_alpha: Option<f64>,
    fit_window: (f64, f64),
    config_hash: String,
}

#[derive(Serialize)]
struct ComparisonReport {
    simulate_dir: String,
    profile_dir: String,
    threshold: f64,
    sup_deviation: f64,
    rms_deviation: f64,
}

#[derive(Serialize, Default)]
struct Report {
    shooting_roots: Vec<(u32, f64)>,
    simulations: Vec<SimReport>,
    comparisons: Vec<ComparisonReport>,
    snapshot_collapse: Vec<ComparisonReport>,
}

pub fn cmd_report(dirs: Vec<PathBuf>, out: Option<PathBuf>) -> Result<()> {
    let mut shoot_runs = Vec::new();
    let mut sim_runs = Vec::new();
    let mut profile_runs = Vec::new();
    for dir in &dirs {
        let manifest_path = dir.join("manifest.json");
        if !manifest_path.exists() {
            continue;
        }
        let manifest: ManifestIn = serde_json::from_str(
            &std::fs::read_to_string(&manifest_path)
                .with_context(|| format!("reading {}", manifest_path.display()))?,
        )?;
        match manifest.command.as_str() {
            "shoot" => shoot_runs.push((dir.clone(), manifest)),
            "simulate" => sim_runs.push((dir.clone(), manifest)),
            "profile" => profile_runs.push((dir.clone(), manifest)),
            _ => {}
        }
    }
    if shoot_runs.is_empty() && sim_runs.is_empty() && profile_runs.is_empty() {
        bail!("no runs found in the given directories (no usable manifest.json)");
    }

    let mut report = Report::default();

    for (dir, _) in &shoot_runs {
        let text = std::fs::read_to_string(dir.join("shooting.json"))?;
        let v: serde_json::Value = serde_json::from_str(&text)?;
        let s = v["s"].as_u64().unwrap_or(0) as u32;
        let root = v["c_l_root"].as_f64().unwrap_or(f64::NAN);
        report.shooting_roots.push((s, root));
    }

    for (dir, manifest) in &sim_runs {
        let trace = read_trace(&dir.join("trace.csv"))?;
        let s = manifest.config["config"]["s"].as_u64().unwrap_or(2) as u32;
        let w_init = manifest.config["config"]["w_init"]
            .as_str()
            .unwrap_or("?")
            .to_string();
        let window = analysis::window_by_wmax(&trace, 1e3, 1e4)
            .context("trace never reaches the fit window w_max in [1e3, 1e4]")?;
        let fw = analysis::fit_exponent(&trace, TraceField::WMax, window)?;
        let fq = analysis::fit_exponent(&trace, TraceField::QMax, window)?;
        let holder = last_snapshot(dir, &manifest.artifacts)?
            .map(|snap| {
                let win = analysis::resolved_holder_window(&snap, 40);
                analysis::fit_holder(&snap, win)
            })
            .transpose()?;
        report.simulations.push(SimReport {
            dir: dir.display().to_string(),
            s,
            w_init,
            c_w: fw.exponent,
            c_l: fq.exponent,
            t_blowup: fw.t_estimate,
            holder_alpha: holder,
            fit_window: window,
            config_hash: manifest.config_hash.clone(),
        });

        // Self-similar collapse between the run's own snapshots.
        let snaps = read_snapshots(dir, &manifest.artifacts)?;
        for pair in snaps.windows(2) {
            let a = analysis::rescale_snapshot(&pair[0], 512)?;
            let b = analysis::rescale_snapshot(&pair[1], 512)?;
            let (sup, rms) = analysis::compare_profiles(&a, &b)?;
            report.snapshot_collapse.push(ComparisonReport {
                simulate_dir: dir.display().to_string(),
                profile_dir: String::new(),
                threshold: pair[1].threshold,
                sup_deviation: sup,
                rms_deviation: rms,
            });
        }

        for (pdir, _) in &profile_runs {
            let prof = read_rescaled(&pdir.join("rescaled.csv"))?;
            for snap in &snaps {
                let grid = prof.values.len();
                let rescaled = analysis::rescale_snapshot(snap, grid)?;
                let (sup, rms) = analysis::compare_profiles(&rescaled, &prof)?;
                report.comparisons.push(ComparisonReport {
                    simulate_dir: dir.display().to_string(),
                    profile_dir: pdir.display().to_string(),
                    threshold: snap.threshold,
                    sup_deviation: sup,
                    rms_deviation: rms,
                });
            }
        }
    }

    for (s, root) in &report.shooting_roots {
        println!("shoot   s={s}: c_l = {root:.5}");
    }
    for sim in &report.simulations {
        println!(
            "simulate s={} {}: c_w = {:.4}, c_l = {:.4}, T = {:.6}, alpha = {}",
            sim.s,
            sim.w_init,
            sim.c_w,
            sim.c_l,
            sim.t_blowup,
            sim.holder_alpha
                .map(|a| format!("{a:.5}"))
                .unwrap_or_else(|| "n/a".into()),
        );
    }
    for c in &report.snapshot_collapse {
        println!(
            "collapse {} @ {:.0e}: sup {:.4} rms {:.4}",
            c.simulate_dir, c.threshold, c.sup_deviation, c.rms_deviation
        );
    }
    for c in &report.comparisons {
        println!(
            "compare {} vs {} @ {:.0e}: sup {:.4} rms {:.4}",
            c.simulate_dir, c.profile_dir, c.threshold, c.sup_deviation, c.rms_deviation
        );
    }

    let out_dir = crate::out::run_dir(&out, "report")?;
    crate::out::write_json(&out_dir, "report.json", &report)?;
    println!("report -> {}", out_dir.join("report.json").display());
    Ok(())
}

fn parse_fields(line: &str, n: usize) -> Result<Vec<f64>> {
    let vals: Result<Vec<f64>, _> = line.split(',').take(n).map(str::parse).collect();
    vals.with_context(|| format!("parsing CSV line {line:?}"))
}

fn read_trace(path: &Path) -> Result<BlowupTrace> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut samples = Vec::new();
    for line in text.lines().skip(1) {
        let v = parse_fields(line, 4)?;
        samples.push(TraceSample {
            t: v[0],
            w_max: v[1],
            q_max: v[2],
            dt: v[3],
        });
    }
    Ok(BlowupTrace {
        samples,
        snapshots: vec![],
    })
}

fn read_snapshot_csv(path: &Path, threshold: f64) -> Result<Snapshot> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let (mut q, mut theta, mut w, mut u) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for line in text.lines().skip(1) {
        let v = parse_fields(line, 4)?;
        q.push(v[0]);
        theta.push(v[1]);
        w.push(v[2]);
        u.push(v[3]);
    }
    let (w_max, idx) = w
        .iter()
        .enumerate()
        .fold((f64::NEG_INFINITY, 0), |(m, mi), (i, &x)| {
            if x > m {
                (x, i)
            } else {
                (m, mi)
            }
        });
    Ok(Snapshot {
        t: f64::NAN,
        w_max,
        q_peak: q[idx],
        threshold,
        q,
        theta,
        w,
        u,
    })
}

fn snapshot_files(artifacts: &[String]) -> Vec<&String> {
    let mut files: Vec<&String> = artifacts
        .iter()
        .filter(|a| a.starts_with("snapshot_") && a.ends_with(".csv"))
        .collect();
    files.sort();
    files
}

fn read_snapshots(dir: &Path, artifacts: &[String]) -> Result<Vec<Snapshot>> {
    let mut snaps = Vec::new();
    for name in snapshot_files(artifacts) {
        let threshold = name
            .trim_start_matches("snapshot_")
            .trim_end_matches(".csv")
            .parse()
            .unwrap_or(f64::NAN);
        snaps.push(read_snapshot_csv(&dir.join(name), threshold)?);
    }
    snaps.sort_by(|a, b| a.threshold.partial_cmp(&b.threshold).unwrap());
    Ok(snaps)
}

fn last_snapshot(dir: &Path, artifacts: &[String]) -> Result<Option<Snapshot>> {
    Ok(read_snapshots(dir, artifacts)?.into_iter().last())
}

fn read_rescaled(path: &Path) -> Result<RescaledProfile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for line in text.lines().skip(1) {
        let v = parse_fields(line, 2)?;
        values.push(v[1]);
    }
    Ok(RescaledProfile {
        source: ProfileSource::SelfSimilarEq,
        values,
    })
}
