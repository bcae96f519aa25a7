//! `longwave`: run solvers, residual scans, approximation sweeps and reports from a TOML config.
//!
//! Exit codes: 0 ok, 1 config error, 2 blow-up, 3 partial failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use longwave::config::{load_config, ExperimentConfig};
use longwave::energy::write_energy_csv;
use longwave::experiments::{run_approximation, run_point_trajectories, RunRecord, RunStatus};
use longwave::kernels::{
    check_ellipticity, check_moments, eta_samples, is_admissible, Kernel, KernelRegistry, Symbol,
};
use longwave::report::make_report;
use longwave::residuals::{residual_scan, write_scan_csv};
use longwave::Error;

/// Half-width of the `eta` range used for kernel listings.
const LISTING_ETA_MAX: f64 = 50.0;

#[derive(Parser)]
#[command(
    name = "longwave",
    version,
    about = "Long-wave approximation laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Override a config key, e.g. `--set grid.N=512`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the unidirectional model and the bidirectional target at each path point.
    Solve(Common),
    /// Residual norms along the path at `residual_times`.
    Residual(Common),
    /// Approximation sweep with error-law fit and report bundle.
    Sweep(Common),
    /// Error energies along each path point.
    Energy(Common),
    /// Rebuild the report bundle from a sweep's `records.json`.
    Report(Common),
    /// List registered kernels.
    Kernels {
        /// Config whose custom kernels are added to the listing.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Ok,
    Config,
    BlowUp,
    Partial,
}

impl From<Outcome> for ExitCode {
    fn from(o: Outcome) -> Self {
        ExitCode::from(match o {
            Outcome::Ok => 0,
            Outcome::Config => 1,
            Outcome::BlowUp => 2,
            Outcome::Partial => 3,
        })
    }
}

fn fail(e: &Error) -> Outcome {
    eprintln!("error: {e}");
    match e {
        Error::BlowUp { .. } => Outcome::BlowUp,
        _ => Outcome::Config,
    }
}

fn load(c: &Common) -> Result<(ExperimentConfig, PathBuf), Error> {
    let cfg = load_config(&c.config, &c.overrides)?;
    let out = c.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&out)?;
    Ok((cfg, out))
}

fn point_dir(out: &Path, i: usize, e: f64, d: f64) -> PathBuf {
    out.join(format!("point_{i:02}_eps{e}_delta{d}"))
}

fn solve(c: &Common) -> Result<Outcome, Error> {
    let (cfg, out) = load(c)?;
    let mut outcome = Outcome::Ok;
    for (i, &(e, d)) in cfg.sweep.path.iter().enumerate() {
        let run = run_point_trajectories(&cfg.sweep, e, d)?;
        let dir = point_dir(&out, i, e, d);
        run.w.export(&dir.join("unidirectional"))?;
        run.u.export(&dir.join("bidirectional"))?;
        for (label, traj) in [("unidirectional", &run.w), ("bidirectional", &run.u)] {
            match traj.blow_up {
                Some(b) => {
                    eprintln!(
                        "eps = {e}, delta = {d}: {label} solution blew up at t = {}",
                        b.time
                    );
                    outcome = Outcome::BlowUp;
                }
                None => println!(
                    "eps = {e}, delta = {d}: {label} {} solved to t = {}",
                    traj.label,
                    traj.final_time()
                ),
            }
        }
    }
    Ok(outcome)
}

fn residual(c: &Common) -> Result<Outcome, Error> {
    let (cfg, out) = load(c)?;
    let w0 = cfg.sweep.w0.field(cfg.sweep.grid);
    let scan = residual_scan(
        &w0,
        &cfg.sweep.model,
        cfg.kernel(),
        cfg.sweep.s,
        &cfg.sweep.path,
        &cfg.residual_times,
        cfg.sweep.dt,
    )?;
    let mut csv = BufWriter::new(File::create(out.join("residuals.csv"))?);
    write_scan_csv(&scan.samples, &mut csv)?;
    csv.flush()?;
    let mut json = serde_json::to_string_pretty(&scan.fits)?;
    json.push('\n');
    std::fs::write(out.join("residual_fits.json"), json)?;
    let mut outcome = Outcome::Ok;
    for f in &scan.fits {
        match &f.fit {
            Some(fit) => println!(
                "t = {}: slope {:.3} (r^2 {:.4}), C = {:.4e} [{}]",
                f.t, fit.slope, fit.r_squared, f.constant, f.status
            ),
            None => {
                println!("t = {}: {}", f.t, f.status);
                outcome = Outcome::Partial;
            }
        }
    }
    Ok(outcome)
}

fn summarize(records: &[RunRecord]) -> Outcome {
    let mut outcome = Outcome::Ok;
    for r in records {
        println!(
            "eps = {}, delta = {}: {}{}",
            r.epsilon,
            r.delta,
            r.status.as_str(),
            r.message
                .as_deref()
                .map(|m| format!(" ({m})"))
                .unwrap_or_default()
        );
        if r.status != RunStatus::Ok {
            outcome = Outcome::Partial;
        }
    }
    outcome
}

fn write_report(
    cfg: &ExperimentConfig,
    records: &[RunRecord],
    out: &Path,
) -> Result<Outcome, Error> {
    let report = make_report(records, cfg.law, &cfg.t_stars, out)?;
    match &report.fit {
        Ok(fit) => {
            for s in &fit.slopes_in_epsilon {
                println!("slope in epsilon at t = {}: {:.3}", s.at, s.fit.slope);
            }
            for s in &fit.slopes_in_t {
                println!("slope in t at eps = {}: {:.3}", s.at, s.fit.slope);
            }
            println!(
                "C = {:.4e} for {}; max violation {:.3}",
                fit.constant,
                fit.law.describe(),
                fit.max_violation
            );
            for n in &fit.notes {
                println!("note: {n}");
            }
            Ok(Outcome::Ok)
        }
        Err(msg) => {
            eprintln!("fit: {msg}");
            Ok(Outcome::Partial)
        }
    }
}

fn worst(a: Outcome, b: Outcome) -> Outcome {
    if a == Outcome::Ok {
        b
    } else {
        a
    }
}

fn sweep(c: &Common) -> Result<Outcome, Error> {
    let (cfg, out) = load(c)?;
    let records = run_approximation(&cfg.sweep)?;
    let mut json = serde_json::to_string_pretty(&records)?;
    json.push('\n');
    std::fs::write(out.join("records.json"), json)?;
    let status = summarize(&records);
    let fit = write_report(&cfg, &records, &out)?;
    println!("report written to {}", out.display());
    Ok(worst(status, fit))
}

fn report(c: &Common) -> Result<Outcome, Error> {
    let (cfg, out) = load(c)?;
    let path = out.join("records.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read '{}': {e}", path.display())))?;
    let records: Vec<RunRecord> = serde_json::from_str(&text)?;
    let status = summarize(&records);
    Ok(worst(status, write_report(&cfg, &records, &out)?))
}

fn energy(c: &Common) -> Result<Outcome, Error> {
    let (cfg, out) = load(c)?;
    let records = run_approximation(&cfg.sweep)?;
    for (i, r) in records.iter().enumerate() {
        let samples: Vec<_> = r.energies.iter().flatten().copied().collect();
        let path = out.join(format!(
            "energy_{i:02}_eps{}_delta{}.csv",
            r.epsilon, r.delta
        ));
        let mut f = BufWriter::new(File::create(&path)?);
        write_energy_csv(&samples, &mut f)?;
        f.flush()?;
        if let Some(last) = samples.last() {
            println!(
                "eps = {}, delta = {}: E_s({}) = {:.4e}, ||r||_Hs = {:.4e}",
                r.epsilon, r.delta, last.t, last.e_s, last.norm_r
            );
        }
    }
    Ok(summarize(&records))
}

#[derive(Serialize)]
struct KernelListing {
    name: String,
    order: f64,
    admissible: bool,
    ellipticity: Option<longwave::kernels::EllipticityReport>,
    moments: Option<longwave::kernels::MomentReport>,
    note: Option<&'static str>,
}

fn listing(k: &Kernel) -> KernelListing {
    KernelListing {
        name: k.name.clone(),
        order: k.order,
        admissible: is_admissible(k, LISTING_ETA_MAX),
        ellipticity: check_ellipticity(k, &eta_samples(LISTING_ETA_MAX, 4000)).ok(),
        moments: check_moments(k).ok(),
        note: match k.symbol {
            Symbol::Exponential => {
                Some("m = 0: the nonlocal equation is the improved Boussinesq equation")
            }
            Symbol::Gaussian => Some("symbol decays faster than any power; not elliptic"),
            Symbol::Table { .. } => Some("piecewise-linear table"),
            Symbol::Rational { .. } => None,
        },
    }
}

fn kernels(config: Option<&Path>, json: bool) -> Result<Outcome, Error> {
    let registry = match config {
        Some(p) => load_config(p, &[])?.registry,
        None => KernelRegistry::default(),
    };
    let items: Vec<KernelListing> = registry.iter().map(listing).collect();
    if json {
        println!("{}", serde_json::to_string_pretty(&items)?);
        return Ok(Outcome::Ok);
    }
    for k in &items {
        let ell = k
            .ellipticity
            .map(|e| {
                format!(
                    "c1 ~ {:.3e}, c2 ~ {:.3e}, {}",
                    e.c1_est,
                    e.c2_est,
                    if e.pass { "pass" } else { "fail" }
                )
            })
            .unwrap_or_else(|| "n/a".into());
        let mom = k
            .moments
            .as_ref()
            .map(|m| format!("m0 = {:.6}, m2 = {:.6}", m.m0, m.m2))
            .unwrap_or_else(|| "n/a".into());
        println!(
            "{:<12} r = {:<4} {:<14} ellipticity: {ell}; moments: {mom}{}",
            k.name,
            k.order,
            if k.admissible {
                "admissible"
            } else {
                "not admissible"
            },
            k.note.map(|n| format!("; {n}")).unwrap_or_default()
        );
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(c) => solve(c),
        Command::Residual(c) => residual(c),
        Command::Sweep(c) => sweep(c),
        Command::Energy(c) => energy(c),
        Command::Report(c) => report(c),
        Command::Kernels { config, json } => kernels(config.as_deref(), *json),
    };
    match result {
        Ok(o) => o.into(),
        Err(e) => fail(&e).into(),
    }
}
