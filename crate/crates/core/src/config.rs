//! TOML experiment configuration.
//!
//! ```toml
//! model = "ch"                 # ch | bbm | kdv
//! target = "ib"                # ib | nonlocal (default: nonlocal iff `kernel` is set)
//! kernel = "rational6"
//! s = 1.0
//! T = 5.0
//! t_cap = 10.0
//! dt = 1e-3
//! sample_interval = 0.1
//! path = [[0.2, 0.2], [0.1, 0.1]]
//! band = [1.0, 1.0]            # KdV band c1 <= delta^2/epsilon <= c2
//! t_star = [1.0, 2.0, 5.0]
//! law = "eps2+delta4"          # or "eps2"
//! residual_times = [0.0, 1.0]
//! output_dir = "out"
//! workers = 4
//!
//! [grid]
//! L = 201.06192982974676
//! N = 1024
//!
//! [w0]
//! a = 1.0
//! b = 1.0
//!
//! [[kernels]]
//! name = "mine"
//! order = 2.0
//! eta = [0.0, 1.0, 100.0]
//! values = [1.0, 0.5, 1e-4]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bidirectional::Target;
use crate::error::{Error, Result};
use crate::experiments::{ErrorLaw, InitialBump, SweepConfig};
use crate::grid::GridSpec;
use crate::kernels::{table_kernel, Kernel, KernelRegistry};
use crate::unidirectional::KappaModel;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(rename = "L")]
    length: Option<f64>,
    #[serde(rename = "N")]
    points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBump {
    a: Option<f64>,
    b: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    name: String,
    order: f64,
    eta: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<String>,
    target: Option<String>,
    kernel: Option<String>,
    s: Option<f64>,
    #[serde(rename = "T")]
    t_horizon: Option<f64>,
    t_cap: Option<f64>,
    dt: Option<f64>,
    sample_interval: Option<f64>,
    path: Option<Vec<[f64; 2]>>,
    band: Option<[f64; 2]>,
    t_star: Option<Vec<f64>>,
    law: Option<String>,
    residual_times: Option<Vec<f64>>,
    output_dir: Option<PathBuf>,
    workers: Option<usize>,
    grid: Option<RawGrid>,
    w0: Option<RawBump>,
    #[serde(default)]
    kernels: Vec<RawKernel>,
}

/// A fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub sweep: SweepConfig,
    pub registry: KernelRegistry,
    pub output_dir: PathBuf,
    pub t_stars: Vec<f64>,
    pub law: ErrorLaw,
    pub residual_times: Vec<f64>,
}

impl ExperimentConfig {
    pub fn kernel(&self) -> Option<&Kernel> {
        match &self.sweep.target {
            Target::Nonlocal(k) => Some(k),
            Target::ImprovedBoussinesq => None,
        }
    }
}

/// Parses `key=value`; the value is read as a TOML value, falling back to a bare string.
pub fn parse_override(spec: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("override '{spec}' has an empty key")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

fn apply_override(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("nonempty key");
    let mut table = root;
    for p in parts {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{p}' is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Parses config text with `key=value` overrides applied on top.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    for o in overrides {
        let (k, v) = parse_override(o)?;
        apply_override(&mut table, &k, v)?;
    }
    let raw: RawConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    resolve(raw)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config '{}': {e}", path.display())))?;
    parse_config(&text, overrides).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig> {
    let model_name = raw
        .model
        .ok_or_else(|| Error::Config("missing key 'model' (ch, bbm or kdv)".into()))?;
    let model = KappaModel::preset(&model_name)?;

    let mut registry = KernelRegistry::default();
    for k in raw.kernels {
        registry.register(table_kernel(&k.name, k.order, k.eta, k.values)?);
    }

    let kernel = raw
        .kernel
        .as_deref()
        .map(|n| registry.get(n).cloned())
        .transpose()?;
    let target = match (raw.target.as_deref(), kernel) {
        (Some("ib") | None, None) => Target::ImprovedBoussinesq,
        (Some("ib"), Some(_)) => {
            return Err(Error::Config(
                "target 'ib' takes no kernel; use target = \"nonlocal\"".into(),
            ))
        }
        (Some("nonlocal") | None, Some(k)) => Target::Nonlocal(k),
        (Some("nonlocal"), None) => {
            return Err(Error::Config(
                "target 'nonlocal' requires a 'kernel'".into(),
            ))
        }
        (Some(other), _) => {
            return Err(Error::Config(format!(
                "unknown target '{other}' (ib or nonlocal)"
            )))
        }
    };

    let path: Vec<(f64, f64)> = raw
        .path
        .ok_or_else(|| Error::Config("missing key 'path' (list of [epsilon, delta])".into()))?
        .into_iter()
        .map(|[e, d]| (e, d))
        .collect();

    let mut sweep = SweepConfig::new(model, target, path);
    let grid = raw.grid.unwrap_or_default();
    sweep.grid = GridSpec::new(
        grid.length.unwrap_or(sweep.grid.length()),
        grid.points.unwrap_or(sweep.grid.points()),
    )?;
    if let Some(b) = raw.w0 {
        sweep.w0 = InitialBump {
            a: b.a.unwrap_or(1.0),
            b: b.b.unwrap_or(1.0),
        };
    }
    sweep.s = raw.s.unwrap_or(sweep.s);
    sweep.t_horizon = raw.t_horizon.unwrap_or(sweep.t_horizon);
    sweep.t_cap = raw.t_cap;
    sweep.dt = raw.dt.unwrap_or(sweep.dt);
    sweep.sample_interval = raw.sample_interval.unwrap_or(sweep.sample_interval);
    sweep.band = raw.band.map(|[a, b]| (a, b));
    sweep.workers = raw.workers;
    if sweep.workers == Some(0) {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    sweep.validate()?;

    let law = match raw.law.as_deref() {
        None if sweep.band.is_some() => ErrorLaw::EpsSq,
        None => ErrorLaw::EpsSqPlusDeltaFourth,
        Some("eps2+delta4") => ErrorLaw::EpsSqPlusDeltaFourth,
        Some("eps2") => ErrorLaw::EpsSq,
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown law '{other}' (eps2+delta4 or eps2)"
            )))
        }
    };
    let t_stars = raw.t_star.unwrap_or_else(|| vec![1.0, 2.0, 5.0, 10.0]);
    let residual_times = raw.residual_times.unwrap_or_else(|| vec![0.0]);
    if t_stars
        .iter()
        .chain(&residual_times)
        .any(|t| !(t.is_finite() && *t >= 0.0))
    {
        return Err(Error::Config("sample times must be finite and >= 0".into()));
    }

    Ok(ExperimentConfig {
        sweep,
        registry,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        t_stars,
        law,
        residual_times,
    })
}
