//! Solver output and its on-disk export.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};

/// Default L-infinity threshold above which a run is declared blown up.
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;

/// Fixed-step integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `stride`-th step; `None` picks a stride retaining at most 2000 states.
    pub stride: Option<usize>,
    pub blowup_threshold: f64,
}

impl StepOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            stride: None,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = Some(stride);
        self
    }

    /// Options ending at the largest of `times`, with a stride that stores every
    /// one of them exactly when they are commensurate with the step.
    pub fn for_samples(dt: f64, times: &[f64]) -> Result<Self> {
        let t_end = times.iter().cloned().fold(f64::NAN, f64::max);
        let mut options = Self::new(dt, t_end);
        let (steps, dt_eff, _) = options.resolve()?;
        let mut stride = steps;
        for &t in times {
            let idx = (t / dt_eff).round();
            if !(t > 0.0) || (idx * dt_eff - t).abs() > 1e-9 * t.max(1.0) {
                stride = 1;
                break;
            }
            stride = gcd(stride, idx as usize);
        }
        options.stride = Some(stride.max(1));
        Ok(options)
    }

    /// Step count and the step size that lands exactly on `t_end`.
    pub(crate) fn resolve(&self) -> Result<(usize, f64, usize)> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt = {} must be positive",
                self.dt
            )));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} must be positive",
                self.t_end
            )));
        }
        let steps = ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize;
        let dt = self.t_end / steps as f64;
        let stride = match self.stride {
            Some(0) => return Err(Error::InvalidParameter("stride must be >= 1".into())),
            Some(s) => s,
            None => steps.div_ceil(1998).max(1),
        };
        Ok((steps, dt, stride))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowUpEvent {
    pub time: f64,
    pub max_abs: f64,
    pub last_valid_index: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: GridSpec,
    /// Model preset or bidirectional target name.
    pub label: String,
    pub epsilon: f64,
    pub delta: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    /// Time derivatives, stored by second-order-in-time solvers.
    pub rates: Option<Vec<Field>>,
    pub blow_up: Option<BlowUpEvent>,
}

impl Trajectory {
    pub fn last(&self) -> &Field {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("trajectory holds the initial time")
    }

    /// Index of the stored state at time `t`, within half a step.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 0.5 * self.dt)
    }

    /// Fails with `BlowUp` if the run did not reach its end time.
    pub fn ensure_complete(&self) -> Result<()> {
        match self.blow_up {
            Some(ev) => Err(Error::BlowUp {
                time: ev.time,
                last_valid_time: self.times[ev.last_valid_index],
                max_abs: ev.max_abs,
            }),
            None => Ok(()),
        }
    }

    pub fn manifest(&self) -> TrajectoryManifest {
        let width = digits(self.states.len());
        TrajectoryManifest {
            grid: ManifestGrid {
                length: self.grid.length(),
                points: self.grid.points(),
            },
            model: self.label.clone(),
            epsilon: self.epsilon,
            delta: self.delta,
            dt: self.dt,
            times: self.times.clone(),
            state_files: (0..self.states.len())
                .map(|i| format!("state_{i:0width$}.csv"))
                .collect(),
            rate_files: self.rates.as_ref().map(|r| {
                (0..r.len())
                    .map(|i| format!("rate_{i:0width$}.csv"))
                    .collect()
            }),
            blow_up: self.blow_up,
        }
    }

    /// Writes `manifest.json` plus one snapshot CSV per stored state (and rate).
    pub fn export(&self, dir: &Path) -> Result<TrajectoryManifest> {
        std::fs::create_dir_all(dir)?;
        let manifest = self.manifest();
        for (state, name) in self.states.iter().zip(&manifest.state_files) {
            state.write_csv(&dir.join(name))?;
        }
        if let (Some(rates), Some(names)) = (&self.rates, &manifest.rate_files) {
            for (rate, name) in rates.iter().zip(names) {
                rate.write_csv(&dir.join(name))?;
            }
        }
        let mut out = std::fs::File::create(dir.join("manifest.json"))?;
        serde_json::to_writer_pretty(&mut out, &manifest)?;
        writeln!(out)?;
        Ok(manifest)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len().max(4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestGrid {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "N")]
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub grid: ManifestGrid,
    pub model: String,
    pub epsilon: f64,
    pub delta: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub state_files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_files: Option<Vec<String>>,
    pub blow_up: Option<BlowUpEvent>,
}
