//! Command-line front end for the fractional-Brownian martingale
//! approximation: table and curve sweeps over the Hurst index, minimizer
//! profiles, kernel grids, single solves with structure reports, and the
//! invariant check suite.
//!
//! Exit codes: 0 on success, 1 for failed checks or non-convergence, 2 for
//! invalid configuration.

mod checks;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use fbm_approx::discrete::{build_model, h_profile};
use fbm_approx::solver::{solve, SolveOptions, SolveResult};
use fbm_approx::structure::{analyze, StructureReport, DEFAULT_SUPPORT_THRESHOLD};
use fbm_approx::{Error, KernelParams};

#[derive(Parser)]
#[command(name = "fbm-approx", version, about = "Best Gaussian-martingale approximation of fractional Brownian motion", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(clap::Args)]
struct Common {
    /// Hurst index in (0.5, 1)
    #[arg(long = "H")]
    h: Option<f64>,

    /// Number of grid steps (or grid resolution for `kernel`)
    #[arg(long = "N")]
    n: Option<usize>,

    /// Relative duality-gap tolerance
    #[arg(long = "gap-tol", default_value_t = 1e-6)]
    gap_tol: f64,

    /// Seed for all randomized work
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Monte Carlo path count
    #[arg(long, default_value_t = 100_000)]
    paths: usize,

    /// Output directory
    #[arg(long = "out", default_value = ".")]
    out: PathBuf,

    /// Output format (each command has a natural default)
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one (H, N) instance; write the certificate and structure report as JSON
    Solve(Common),
    /// Solve H = 0.55..0.95 step 0.05 at fixed N; write CSV
    Table(Common),
    /// Solve H = 0.51..0.99 step 0.01 at fixed N; write CSV and an SVG chart
    Curve(Common),
    /// Minimizer and distance profile for one (H, N); write CSV and SVG
    Profile(Common),
    /// Kernel values on a triangular grid; write CSV
    Kernel(Common),
    /// Run the invariant check suite; nonzero exit on any failure
    Check(Common),
}

/// Configuration error: diagnostic plus exit code 2.
fn config_error(msg: String) -> anyhow::Error {
    anyhow::anyhow!(msg).context("invalid configuration")
}

fn require_hurst(h: f64) -> anyhow::Result<f64> {
    if h > 0.5 && h < 1.0 {
        Ok(h)
    } else {
        Err(config_error(format!(
            "Hurst index must lie strictly in (0.5, 1); got {h}"
        )))
    }
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("FBM_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(0) => {} // auto
            Ok(n) => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            Err(_) => {
                eprintln!("invalid FBM_THREADS value: {v}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let invalid = e.to_string() == "invalid configuration";
            eprintln!("error: {e:#}");
            ExitCode::from(if invalid { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Solve(c) => cmd_solve(c),
        Command::Table(c) => cmd_table(c),
        Command::Curve(c) => cmd_curve(c),
        Command::Profile(c) => cmd_profile(c),
        Command::Kernel(c) => cmd_kernel(c),
        Command::Check(c) => cmd_check(c),
    }
}

fn ensure_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn solve_instance(h: f64, n: usize, gap_tol: f64) -> anyhow::Result<SolveResult> {
    let model = build_model(h, n)?;
    match solve(model.kernel(), &SolveOptions { gap_tol, max_iter: 200_000 }) {
        Ok(r) => Ok(r),
        Err(Error::NotConverged { best }) => Err(anyhow::anyhow!(
            "solver did not converge for H={h}, N={n}: gap {:.3e} after {} iterations",
            best.gap,
            best.iterations
        )),
        Err(e) => Err(e.into()),
    }
}

/// The configuration a run actually used, with defaults resolved.
#[derive(serde::Serialize)]
struct ResolvedConfig {
    command: &'static str,
    h: f64,
    n: usize,
    gap_tol: f64,
    seed: u64,
    paths: usize,
    out: PathBuf,
    format: Format,
}

#[derive(serde::Serialize)]
struct SolveDocument<'a> {
    config: ResolvedConfig,
    result: &'a SolveResult,
    structure: &'a StructureReport,
    meta: Meta,
}

#[derive(serde::Serialize)]
struct Meta {
    timestamp: String,
    version: &'static str,
    command: &'static str,
}

impl Meta {
    fn new(command: &'static str) -> Self {
        Self {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            version: env!("CARGO_PKG_VERSION"),
            command,
        }
    }
}

fn cmd_solve(c: Common) -> anyhow::Result<ExitCode> {
    if matches!(c.format, Some(Format::Csv) | Some(Format::Svg)) {
        return Err(config_error("`solve` writes JSON; pass --format json or omit it".into()));
    }
    let h = require_hurst(c.h.unwrap_or(0.75))?;
    let n = c.n.unwrap_or(200);
    ensure_out(&c.out)?;
    let model = build_model(h, n)?;
    let result = match solve(model.kernel(), &SolveOptions { gap_tol: c.gap_tol, max_iter: 200_000 }) {
        Ok(r) => r,
        Err(Error::NotConverged { best }) => {
            eprintln!(
                "solver did not converge: gap {:.3e} after {} iterations",
                best.gap, best.iterations
            );
            return Ok(ExitCode::from(1));
        }
        Err(e) => return Err(e.into()),
    };
    let structure = analyze(model.kernel(), &result, DEFAULT_SUPPORT_THRESHOLD)?;
    let doc = SolveDocument {
        config: ResolvedConfig {
            command: "solve",
            h,
            n,
            gap_tol: c.gap_tol,
            seed: c.seed,
            paths: c.paths,
            out: c.out.clone(),
            format: Format::Json,
        },
        result: &result,
        structure: &structure,
        meta: Meta::new("solve"),
    };
    let json = serde_json::to_string_pretty(&doc)?;
    write_file(&c.out.join("solve.json"), &(json + "\n"))?;
    println!(
        "H={h} N={n}: F={:.6} gap={:.2e} iterations={}",
        result.primal, result.gap, result.iterations
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(serde::Serialize)]
struct SweepRow {
    h: f64,
    min_f: f64,
    dual: f64,
    gap: f64,
    iters: usize,
}

fn sweep(hs: &[f64], n: usize, gap_tol: f64) -> anyhow::Result<Vec<SweepRow>> {
    hs.par_iter()
        .map(|&h| {
            let r = solve_instance(h, n, gap_tol)?;
            Ok(SweepRow { h, min_f: r.primal, dual: r.dual, gap: r.gap, iters: r.iterations })
        })
        .collect()
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("H,minF,dual,gap,iters\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.h, r.min_f, r.dual, r.gap, r.iters));
    }
    out
}

fn cmd_table(c: Common) -> anyhow::Result<ExitCode> {
    if let Some(h) = c.h {
        require_hurst(h)?;
        return Err(config_error("`table` sweeps a fixed Hurst grid; --H is not accepted".into()));
    }
    let n = c.n.unwrap_or(200);
    ensure_out(&c.out)?;
    let hs: Vec<f64> = (11..=19).map(|i| i as f64 / 20.0).collect();
    let rows = sweep(&hs, n, c.gap_tol)?;
    match c.format.unwrap_or(Format::Csv) {
        Format::Json => {
            let json = serde_json::to_string_pretty(&rows)?;
            write_file(&c.out.join("table.json"), &(json + "\n"))?;
        }
        Format::Csv | Format::Svg => {
            write_file(&c.out.join("table.csv"), &sweep_csv(&rows))?;
        }
    }
    for r in &rows {
        println!("H={:.2} minF={:.4} gap={:.1e} iters={}", r.h, r.min_f, r.gap, r.iters);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_curve(c: Common) -> anyhow::Result<ExitCode> {
    if let Some(h) = c.h {
        require_hurst(h)?;
        return Err(config_error("`curve` sweeps a fixed Hurst grid; --H is not accepted".into()));
    }
    let n = c.n.unwrap_or(200);
    ensure_out(&c.out)?;
    let hs: Vec<f64> = (51..=99).map(|i| i as f64 / 100.0).collect();
    let rows = sweep(&hs, n, c.gap_tol)?;
    let format = c.format.unwrap_or(Format::Svg);
    if matches!(format, Format::Json) {
        let json = serde_json::to_string_pretty(&rows)?;
        write_file(&c.out.join("curve.json"), &(json + "\n"))?;
        return Ok(ExitCode::SUCCESS);
    }
    write_file(&c.out.join("curve.csv"), &sweep_csv(&rows))?;
    if matches!(format, Format::Svg) {
        let chart = svg::line_chart(
            &format!("Minimal squared distance vs Hurst index (N = {n})"),
            "H",
            "min F",
            &[svg::Series {
                name: "min F",
                color: "#1f5fbf",
                points: rows.iter().map(|r| (r.h, r.min_f)).collect(),
            }],
        );
        write_file(&c.out.join("curve.svg"), &chart)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_profile(c: Common) -> anyhow::Result<ExitCode> {
    let h = require_hurst(c.h.unwrap_or(0.75))?;
    let n = c.n.unwrap_or(500);
    ensure_out(&c.out)?;
    let model = build_model(h, n)?;
    let result = solve_instance(h, n, c.gap_tol)?;
    let profile = h_profile(model.kernel(), &result.a)?;
    let lambda = result.weights.as_slice();
    let last = model.kernel().last_row();

    let mut csv = String::from("s,a_s,k_Ns,lambda_s,h_s\n");
    for i in 0..n {
        let s = (i + 1) as f64 / n as f64;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            s, result.a[i], last[i], lambda[i], profile[i]
        ));
    }
    let format = c.format.unwrap_or(Format::Svg);
    if matches!(format, Format::Json) {
        return Err(config_error("`profile` writes CSV (and optionally SVG)".into()));
    }
    write_file(&c.out.join("profile.csv"), &csv)?;
    if matches!(format, Format::Svg) {
        // Scale the distance profile onto the coefficient axis, as in a
        // two-series overview chart.
        let max_a = result.a.iter().cloned().fold(0.0f64, f64::max);
        let max_h = profile.iter().cloned().fold(0.0f64, f64::max);
        let scale = if max_h > 0.0 { max_a / max_h } else { 1.0 };
        let chart = svg::line_chart(
            &format!("Minimizer and scaled distance profile (H = {h}, N = {n})"),
            "t",
            "value",
            &[
                svg::Series {
                    name: "a",
                    color: "#1f5fbf",
                    points: (0..n).map(|i| ((i + 1) as f64 / n as f64, result.a[i])).collect(),
                },
                svg::Series {
                    name: &format!("h (scaled by {scale:.3})"),
                    color: "#c23b22",
                    points: (0..n)
                        .map(|i| ((i + 1) as f64 / n as f64, profile[i] * scale))
                        .collect(),
                },
            ],
        );
        write_file(&c.out.join("profile.svg"), &chart)?;
    }
    println!("H={h} N={n}: F={:.6} gap={:.2e}", result.primal, result.gap);
    Ok(ExitCode::SUCCESS)
}

fn cmd_kernel(c: Common) -> anyhow::Result<ExitCode> {
    if matches!(c.format, Some(Format::Json) | Some(Format::Svg)) {
        return Err(config_error("`kernel` writes CSV".into()));
    }
    let h = require_hurst(c.h.unwrap_or(0.75))?;
    let n = c.n.unwrap_or(50);
    ensure_out(&c.out)?;
    let p = KernelParams::new(h)?;
    let mut csv = String::from("t,s,K\n");
    for i in 1..=n {
        let t = i as f64 / n as f64;
        for j in 1..=i {
            let s = j as f64 / n as f64;
            let k = p.eval_k(t, s)?;
            csv.push_str(&format!("{t},{s},{k}\n"));
        }
    }
    write_file(&c.out.join("kernel.csv"), &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(c: Common) -> anyhow::Result<ExitCode> {
    let failures = checks::run_all(c.seed);
    if failures == 0 {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{failures} check(s) failed");
        Ok(ExitCode::from(1))
    }
}
