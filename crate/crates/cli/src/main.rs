//! Command-line front end: simulate | sweep | kernel | riemann | report.
//!
//! Exit codes: 0 success, 1 validation/config failure, 2 when any verified
//! bound fails (so CI can gate on the inequalities).

mod config;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use lwrlab::kernel::KernelSpec;
use lwrlab::lab::{
    read_sweep_csv, refit_rates, simulate, sweep, write_sweep_csv, SweepOutput,
};
use lwrlab::local::exact_riemann;

use config::{load, parse_config, ParsedConfig};
use manifest::OutDir;

#[derive(Parser)]
#[command(
    name = "lwrlab",
    version,
    about = "Finite-volume laboratory for nonlocal LWR traffic models and their local limit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One nonlocal run with physical-space diagnostics.
    Simulate {
        /// Config file path or built-in name (std_shock, std_rarefaction).
        #[arg(long)]
        config: String,
        #[arg(long, default_value = "out")]
        out_dir: String,
        /// Override the CFL number.
        #[arg(long)]
        cfl: Option<f64>,
        /// Override the grid rule Δx = ε/ratio.
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Full ε-sweep: errors, bounds and fitted convergence orders.
    Sweep {
        #[arg(long)]
        config: String,
        #[arg(long, default_value = "out")]
        out_dir: String,
        /// Parallel sweep entries (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// δ-rule exponent in δ = ε^e.
        #[arg(long, default_value_t = 0.25)]
        delta_exponent: f64,
        #[arg(long)]
        cfl: Option<f64>,
        #[arg(long)]
        ratio: Option<f64>,
        /// Skip the per-snapshot field CSVs.
        #[arg(long, default_value_t = false)]
        no_snapshots: bool,
    },
    /// Kernel admissibility and spectral constants, as JSON.
    Kernel {
        /// Built-in kernel name: exp, hat, quadratic.
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value_t = 50.0)]
        z_max: f64,
        #[arg(long, default_value_t = 1000)]
        n_grid: usize,
        /// Samples for the admissibility checks.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Exact Riemann oracle for V(u) = 1 − u.
    Riemann {
        #[arg(long = "uL")]
        u_left: f64,
        #[arg(long = "uR")]
        u_right: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        x: f64,
    },
    /// Re-fit convergence rates from an existing sweep.csv.
    Report {
        /// Path to sweep.csv.
        #[arg(long)]
        sweep: String,
        /// TV(u₀) used for the ε₀ threshold in the summary.
        #[arg(long, default_value_t = 0.0)]
        tv0: f64,
        /// Write rates.json here instead of stdout.
        #[arg(long)]
        out_dir: Option<String>,
    },
}

#[derive(Serialize)]
struct BoundsEntry<'a> {
    eps: f64,
    t: f64,
    checks: &'a [lwrlab::lab::BoundCheck],
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn dispatch() -> Result<u8, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            config,
            out_dir,
            cfl,
            ratio,
        } => cmd_simulate(&config, &out_dir, cfl, ratio),
        Command::Sweep {
            config,
            out_dir,
            jobs,
            delta_exponent,
            cfl,
            ratio,
            no_snapshots,
        } => cmd_sweep(&config, &out_dir, jobs, delta_exponent, cfl, ratio, no_snapshots),
        Command::Kernel {
            name,
            delta,
            z_max,
            n_grid,
            samples,
            tol,
        } => cmd_kernel(&name, delta, z_max, n_grid, samples, tol),
        Command::Riemann {
            u_left,
            u_right,
            t,
            x,
        } => {
            println!("{}", exact_riemann(u_left, u_right, t, x));
            Ok(0)
        }
        Command::Report { sweep, tv0, out_dir } => cmd_report(&sweep, tv0, out_dir.as_deref()),
    }
}

fn cmd_simulate(
    config: &str,
    out_dir: &str,
    cfl: Option<f64>,
    ratio: Option<f64>,
) -> Result<u8, String> {
    let (name, text) = load(config).map_err(|e| e.to_string())?;
    let ParsedConfig::Single(mut cfg) = parse_config(&text).map_err(|e| e.to_string())? else {
        return Err(format!("'{name}' holds a [sweep] section; use the sweep subcommand"));
    };
    if let Some(c) = cfl {
        cfg.cfl = c;
    }
    if let Some(r) = ratio {
        cfg.ratio = r;
    }
    cfg.validate().map_err(|e| e.to_string())?;

    let out = simulate(&cfg).map_err(|e| e.to_string())?;
    let mut dir = OutDir::create(out_dir).map_err(|e| e.to_string())?;

    #[derive(Serialize)]
    struct RunJson<'a> {
        config: &'a lwrlab::lab::RunConfig,
        dx: f64,
        n_cells: usize,
        ledger: &'a lwrlab::nonlocal::MassLedger,
        stats: &'a lwrlab::nonlocal::RunStats,
        mass_pass: bool,
        reports: &'a [lwrlab::lab::SimSnapshotReport],
    }
    let run_json = serde_json::to_vec_pretty(&RunJson {
        config: &cfg,
        dx: out.dx,
        n_cells: out.n_cells,
        ledger: &out.ledger,
        stats: &out.stats,
        mass_pass: out.mass_pass,
        reports: &out.reports,
    })
    .map_err(|e| e.to_string())?;
    dir.write("run.json", &run_json).map_err(|e| e.to_string())?;

    for (i, (t, u, w)) in out.fields.iter().enumerate() {
        let mut buf = Vec::new();
        u.write_csv(&mut buf).map_err(|e| e.to_string())?;
        dir.write(&format!("snapshots/t{i}_u.csv"), &buf)
            .map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        w.write_csv(&mut buf).map_err(|e| e.to_string())?;
        dir.write(&format!("snapshots/t{i}_w.csv"), &buf)
            .map_err(|e| e.to_string())?;
        println!("t = {t}: fields written");
    }
    dir.finalize(&name, &text).map_err(|e| e.to_string())?;

    for r in &out.reports {
        println!(
            "t = {}: TV(w) = {:.6} (bound {:.6}), rho {:.6} <= {:.6}, volterra {:.3e}, \
             energy ratio {:.6}",
            r.t, r.tv_w, r.tv_bound, r.rho_lhs, r.rho_rhs, r.volterra_residual, r.energy_ratio
        );
    }
    println!(
        "mass ledger: inflow {:.6e}, outflow {:.6e}, residual pass = {}",
        out.ledger.inflow, out.ledger.outflow, out.mass_pass
    );
    Ok(if out.all_pass() { 0 } else { 2 })
}

fn write_sweep_outputs(
    dir: &mut OutDir,
    out: &SweepOutput,
    emit_snapshots: bool,
) -> Result<(), String> {
    let mut csv = Vec::new();
    write_sweep_csv(&out.records, &mut csv).map_err(|e| e.to_string())?;
    dir.write("sweep.csv", &csv).map_err(|e| e.to_string())?;

    let rates = serde_json::to_vec_pretty(&out.rates).map_err(|e| e.to_string())?;
    dir.write("rates.json", &rates).map_err(|e| e.to_string())?;

    let bounds: Vec<BoundsEntry> = out
        .records
        .iter()
        .map(|r| BoundsEntry {
            eps: r.eps,
            t: r.t,
            checks: &r.report.checks,
        })
        .collect();
    let bounds = serde_json::to_vec_pretty(&bounds).map_err(|e| e.to_string())?;
    dir.write("bounds.json", &bounds).map_err(|e| e.to_string())?;

    let meta = serde_json::to_vec_pretty(&out.run_meta).map_err(|e| e.to_string())?;
    dir.write("runs.json", &meta).map_err(|e| e.to_string())?;

    if emit_snapshots {
        for s in &out.snapshots {
            // deterministic names by (eps index, time); values live in the rows
            let tag = format!(
                "snapshots/e{}_t{}",
                s.eps_index,
                s.t.to_string().replace('.', "p")
            );
            for (suffix, field) in [("u", &s.u), ("w", &s.w), ("ref", &s.reference)] {
                let mut buf = Vec::new();
                field.write_csv(&mut buf).map_err(|e| e.to_string())?;
                dir.write(&format!("{tag}_{suffix}.csv"), &buf)
                    .map_err(|e| e.to_string())?;
            }
        }
    }
    Ok(())
}

fn cmd_sweep(
    config: &str,
    out_dir: &str,
    jobs: usize,
    delta_exponent: f64,
    cfl: Option<f64>,
    ratio: Option<f64>,
    no_snapshots: bool,
) -> Result<u8, String> {
    let (name, text) = load(config).map_err(|e| e.to_string())?;
    let ParsedConfig::Sweep(mut cfg) = parse_config(&text).map_err(|e| e.to_string())? else {
        return Err(format!(
            "'{name}' holds a [simulate] section; use the simulate subcommand"
        ));
    };
    cfg.jobs = jobs;
    cfg.delta_exponent = delta_exponent;
    if let Some(c) = cfl {
        cfg.cfl = c;
    }
    if let Some(r) = ratio {
        cfg.ratio = r;
    }
    cfg.validate().map_err(|e| e.to_string())?;

    let out = sweep(&cfg).map_err(|e| e.to_string())?;
    let mut dir = OutDir::create(out_dir).map_err(|e| e.to_string())?;
    write_sweep_outputs(&mut dir, &out, !no_snapshots)?;
    dir.finalize(&name, &text).map_err(|e| e.to_string())?;

    for r in &out.records {
        println!(
            "eps = {:>7}: t = {}, err_w_l1 = {:.6e}, err_u_l2 = {:.6e}, bounds pass = {}",
            r.eps,
            r.t,
            r.err_w_l1,
            r.err_u_l2,
            r.report.all_pass()
        );
    }
    for f in &out.failures {
        eprintln!("eps = {}: record aborted: {}", f.eps, f.message);
    }
    for fit in &out.rates.per_time {
        let fmt = |f: &Option<lwrlab::lab::RateFit>| match f {
            Some(f) => format!("{:.3} (C = {:.3}, resid {:.2e})", f.order, f.constant, f.residual),
            None => "n/a".to_string(),
        };
        println!(
            "t = {}: order(w,L1) = {}, order(u,L2) = {}",
            fit.t,
            fmt(&fit.w_l1),
            fmt(&fit.u_l2)
        );
    }
    let ok = out.all_bounds_pass();
    println!("bounds: {}", if ok { "all pass" } else { "FAILURES" });
    Ok(if ok { 0 } else { 2 })
}

fn cmd_kernel(
    name: &str,
    delta: f64,
    z_max: f64,
    n_grid: usize,
    samples: usize,
    tol: f64,
) -> Result<u8, String> {
    let spec = KernelSpec::by_name(name).map_err(|e| e.to_string())?;
    let report = spec.validate(samples, tol).map_err(|e| e.to_string())?;
    if !report.is_admissible() {
        for v in report.violations() {
            eprintln!("violation: {v}");
        }
        return Ok(1);
    }
    let summary = spec
        .report(delta, z_max, n_grid)
        .map_err(|e| e.to_string())?;
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?
    );
    Ok(0)
}

fn cmd_report(sweep_path: &str, tv0: f64, out_dir: Option<&str>) -> Result<u8, String> {
    let text = std::fs::read_to_string(sweep_path)
        .map_err(|e| format!("cannot read '{sweep_path}': {e}"))?;
    let rows = read_sweep_csv(&text).map_err(|e| e.to_string())?;
    let rates = refit_rates(&rows, tv0);
    let json = serde_json::to_string_pretty(&rates).map_err(|e| e.to_string())?;
    match out_dir {
        Some(dirname) => {
            let mut dir = OutDir::create(dirname).map_err(|e| e.to_string())?;
            dir.write("rates.json", json.as_bytes())
                .map_err(|e| e.to_string())?;
            dir.finalize("report", &text).map_err(|e| e.to_string())?;
        }
        None => println!("{json}"),
    }
    let ok = rows.iter().all(|r| r.all_pass);
    Ok(if ok { 0 } else { 2 })
}
