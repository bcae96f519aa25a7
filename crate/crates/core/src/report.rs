//! Report bundle: CSV records, JSON fits, log-log SVG plots and a hashed manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{fit_error_law, ErrorLaw, ErrorLawFit, RunRecord};
use crate::svg::LogLogPlot;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportManifest {
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize)]
struct FitsFile<'a> {
    law: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<&'a ErrorLawFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub dir: PathBuf,
    pub manifest: ReportManifest,
    /// `Err` carries the reason the fit was degenerate.
    pub fit: std::result::Result<ErrorLawFit, String>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// One row per `(record, sample time)`; failed points get a single row without samples.
pub fn records_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(
        "epsilon,delta,model,target,s,status,t,error_Hs,E_s,E_tilde,norm_r_Hs,E_sM,message\n",
    );
    for r in records {
        let head = format!(
            "{},{},{},{},{},{}",
            r.epsilon,
            r.delta,
            r.model,
            r.target,
            r.s,
            r.status.as_str()
        );
        let msg = r.message.as_deref().unwrap_or("").replace([',', '\n'], ";");
        if r.times.is_empty() {
            let _ = writeln!(out, "{head},,,,,,,{msg}");
            continue;
        }
        for (i, (&t, &e)) in r.times.iter().zip(&r.errors).enumerate() {
            let en = r.energies.get(i).copied().flatten();
            let _ = writeln!(
                out,
                "{head},{t},{e:e},{},{},{},{},{msg}",
                opt(en.map(|x| x.e_s)),
                opt(en.map(|x| x.e_tilde)),
                opt(en.map(|x| x.norm_r)),
                opt(r.energies_m.get(i).copied().flatten()),
            );
        }
    }
    out
}

fn plots(
    records: &[RunRecord],
    fit: Option<&ErrorLawFit>,
    law: ErrorLaw,
    t_stars: &[f64],
) -> Vec<(String, String)> {
    let c = fit.map(|f| f.constant);
    let mut by_eps = LogLogPlot::new("error vs epsilon at fixed t", "epsilon", "||u - w||_Hs");
    for &t in t_stars {
        let pts: Vec<(f64, f64)> = records
            .iter()
            .filter_map(|r| r.error_at(t).map(|e| (r.epsilon, e)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        by_eps.add(&format!("t = {t}"), pts, false);
        if let Some(c) = c {
            let bound = records
                .iter()
                .map(|r| (r.epsilon, c * law.scale(r.epsilon, r.delta) * t))
                .collect();
            by_eps.add(&format!("bound, t = {t}"), bound, true);
        }
    }
    let mut by_t = LogLogPlot::new("error vs t at fixed epsilon", "t", "||u - w||_Hs");
    for r in records {
        let pts: Vec<(f64, f64)> = r
            .times
            .iter()
            .zip(&r.errors)
            .filter(|(t, _)| **t > 0.0)
            .map(|(&t, &e)| (t, e))
            .collect();
        if pts.is_empty() {
            continue;
        }
        if let Some(c) = c {
            let bound = pts
                .iter()
                .map(|&(t, _)| (t, c * law.scale(r.epsilon, r.delta) * t))
                .collect();
            by_t.add(&format!("bound, eps = {}", r.epsilon), bound, true);
        }
        by_t.add(&format!("eps = {}", r.epsilon), pts, false);
    }
    vec![
        ("plots/error_vs_epsilon.svg".into(), by_eps.render()),
        ("plots/error_vs_t.svg".into(), by_t.render()),
    ]
}

fn write_hashed(dir: &Path, rel: &str, bytes: &[u8]) -> Result<ManifestEntry> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, bytes)?;
    Ok(ManifestEntry {
        path: rel.to_string(),
        bytes: bytes.len() as u64,
        sha256: format!("{:x}", Sha256::digest(bytes)),
    })
}

/// Writes `records.csv`, `fits.json`, `plots/*.svg` and `manifest.json` under `dir`.
/// A degenerate fit is recorded in `fits.json` rather than failing the report.
pub fn make_report(
    records: &[RunRecord],
    law: ErrorLaw,
    t_stars: &[f64],
    dir: &Path,
) -> Result<Report> {
    if records.is_empty() {
        return Err(Error::Config("no records to report".into()));
    }
    let fit = fit_error_law(records, law, t_stars).map_err(|e| e.to_string());
    let fits = FitsFile {
        law: law.describe(),
        fit: fit.as_ref().ok(),
        error: fit.as_ref().err().cloned(),
    };
    let mut fits_json = serde_json::to_string_pretty(&fits)?;
    fits_json.push('\n');

    let mut files = vec![
        write_hashed(dir, "records.csv", records_csv(records).as_bytes())?,
        write_hashed(dir, "fits.json", fits_json.as_bytes())?,
    ];
    for (rel, svg) in plots(records, fit.as_ref().ok(), law, t_stars) {
        files.push(write_hashed(dir, &rel, svg.as_bytes())?);
    }
    let manifest = ReportManifest { files };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(Report {
        dir: dir.to_path_buf(),
        manifest,
        fit,
    })
}
