//! Approximation sweeps: unidirectional solutions against bidirectional ones
//! along a parameter path, and fits of the observed error law.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bidirectional::{solve_bidirectional, Target};
use crate::energy::{build_error_state, energy_es_m, energy_sample, EnergySample};
use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::grid::{sobolev_norm, Field, GridSpec};
use crate::residuals::check_regime;
use crate::trajectory::{StepOptions, Trajectory};
use crate::unidirectional::{solve_unidirectional, time_derivative, KappaModel};

/// Errors below this are treated as roundoff.
pub const ERROR_FLOOR: f64 = 1e-12;

/// `a sech^2(b (x - L/2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialBump {
    pub a: f64,
    pub b: f64,
}

impl Default for InitialBump {
    fn default() -> Self {
        Self { a: 1.0, b: 1.0 }
    }
}

impl InitialBump {
    pub fn field(&self, grid: GridSpec) -> Field {
        let c = grid.length() / 2.0;
        Field::from_fn(grid, |x| self.a / (self.b * (x - c)).cosh().powi(2))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub model: KappaModel,
    pub target: Target,
    pub path: Vec<(f64, f64)>,
    pub s: f64,
    /// Horizon constant: runs end at `min(T / epsilon, t_cap)`.
    pub t_horizon: f64,
    pub t_cap: Option<f64>,
    pub dt: f64,
    /// Spacing of recorded samples; must be a multiple of `dt`.
    pub sample_interval: f64,
    pub grid: GridSpec,
    pub w0: InitialBump,
    /// KdV band `c1 <= delta^2/epsilon <= c2`.
    pub band: Option<(f64, f64)>,
    /// Cap on concurrently running path points; `None` uses all cores.
    pub workers: Option<usize>,
}

impl SweepConfig {
    /// Defaults: `L = 64 pi`, `N = 1024`, `dt = 1e-3`, `T = 5`, `s = 1`.
    pub fn new(model: KappaModel, target: Target, path: Vec<(f64, f64)>) -> Self {
        Self {
            model,
            target,
            path,
            s: 1.0,
            t_horizon: 5.0,
            t_cap: None,
            dt: 1e-3,
            sample_interval: 0.1,
            grid: GridSpec::new(64.0 * std::f64::consts::PI, 1024).expect("default grid"),
            w0: InitialBump::default(),
            band: None,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.path.is_empty() {
            return Err(Error::Config("parameter path is empty".into()));
        }
        for &(e, d) in &self.path {
            check_regime(e, d)?;
            if let Some((c1, c2)) = self.band {
                if !(0.0 < c1 && c1 <= c2) {
                    return Err(Error::Config(format!(
                        "KdV band needs 0 < c1 <= c2, got [{c1}, {c2}]"
                    )));
                }
                let ratio = d * d / e;
                let tol = 1e-12 * ratio;
                if ratio < c1 - tol || ratio > c2 + tol {
                    return Err(Error::Band { ratio, c1, c2 });
                }
                if d * d > 1.0 / 3.0 + 1e-15 {
                    return Err(Error::Config(format!(
                        "KdV runs need delta^2 <= 1/3, got {}",
                        d * d
                    )));
                }
            }
        }
        if !(self.t_horizon > 0.0) || !(self.dt > 0.0) || !(self.sample_interval >= self.dt) {
            return Err(Error::Config(
                "T, dt must be positive and sample_interval >= dt".into(),
            ));
        }
        if !(self.s >= 0.0) {
            return Err(Error::Config(format!("s = {} must be >= 0", self.s)));
        }
        if let Target::Nonlocal(k) = &self.target {
            for &(_, d) in &self.path {
                k.validate_on(&self.grid, d)?;
            }
        }
        Ok(())
    }

    pub fn end_time(&self, epsilon: f64) -> f64 {
        let t = self.t_horizon / epsilon;
        self.t_cap.map_or(t, |c| t.min(c))
    }

    fn step_options(&self, epsilon: f64) -> Result<StepOptions> {
        let t_end = self.end_time(epsilon);
        let dt_eff = StepOptions::new(self.dt, t_end).resolve()?.1;
        let stride = (self.sample_interval / dt_eff).round().max(1.0) as usize;
        Ok(StepOptions::new(self.dt, t_end).with_stride(stride))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    Blowup,
    EnergyRegimeExit,
    Failed,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Blowup => "blowup",
            RunStatus::EnergyRegimeExit => "energy-regime-exit",
            RunStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub epsilon: f64,
    pub delta: f64,
    pub model: String,
    pub target: String,
    pub s: f64,
    pub status: RunStatus,
    pub message: Option<String>,
    pub times: Vec<f64>,
    /// `||u - w||_{H^s}` at `times`.
    pub errors: Vec<f64>,
    /// One entry per time; `None` where the energy left its positivity regime.
    pub energies: Vec<Option<EnergySample>>,
    /// `E_s,M` for nonlocal targets.
    pub energies_m: Vec<Option<f64>>,
}

impl RunRecord {
    pub fn error_at(&self, t: f64) -> Option<f64> {
        let tol = 1e-9 * t.max(1.0);
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .map(|i| self.errors[i])
    }

    fn failed(
        epsilon: f64,
        delta: f64,
        config: &SweepConfig,
        status: RunStatus,
        message: String,
    ) -> Self {
        Self {
            epsilon,
            delta,
            model: config.model.name.clone(),
            target: config.target.label(),
            s: config.s,
            status,
            message: Some(message),
            times: Vec::new(),
            errors: Vec::new(),
            energies: Vec::new(),
            energies_m: Vec::new(),
        }
    }
}

/// The pair of trajectories behind one path point.
pub struct PointRun {
    pub w: Trajectory,
    pub u: Trajectory,
}

/// Solves the unidirectional model and the bidirectional target from matched
/// data `u(0) = w0`, `u_t(0) = w_t(0)`.
pub fn run_point_trajectories(config: &SweepConfig, epsilon: f64, delta: f64) -> Result<PointRun> {
    let w0 = config.w0.field(config.grid);
    let options = config.step_options(epsilon)?;
    let w = solve_unidirectional(&w0, &config.model, epsilon, delta, &options)?;
    let u1 = time_derivative(&w0, &config.model, epsilon, delta)?;
    let u = solve_bidirectional(&w0, &u1, &config.target, epsilon, delta, &options)?;
    Ok(PointRun { w, u })
}

fn run_point(config: &SweepConfig, epsilon: f64, delta: f64) -> RunRecord {
    let run = match run_point_trajectories(config, epsilon, delta) {
        Ok(r) => r,
        Err(e) => {
            return RunRecord::failed(epsilon, delta, config, RunStatus::Failed, e.to_string())
        }
    };
    let mut record = RunRecord {
        epsilon,
        delta,
        model: config.model.name.clone(),
        target: config.target.label(),
        s: config.s,
        status: RunStatus::Ok,
        message: None,
        times: Vec::new(),
        errors: Vec::new(),
        energies: Vec::new(),
        energies_m: Vec::new(),
    };
    let blown = run.w.blow_up.is_some() || run.u.blow_up.is_some();
    let rates = run
        .u
        .rates
        .as_ref()
        .expect("bidirectional runs store rates");
    for (i, ((w, u), u_t)) in run
        .w
        .states
        .iter()
        .zip(&run.u.states)
        .zip(rates)
        .enumerate()
    {
        let error = match sobolev_norm(&(u - w), config.s) {
            Ok(v) => v,
            Err(e) => {
                record.status = RunStatus::Failed;
                record.message = Some(e.to_string());
                break;
            }
        };
        record.times.push(run.w.times[i]);
        record.errors.push(error);
        let state = build_error_state(
            u,
            u_t,
            w,
            &config.model,
            epsilon,
            delta,
            config.s,
            run.w.times[i],
        );
        let (sample, sample_m) = match state {
            Ok(st) => {
                let em = match &config.target {
                    Target::Nonlocal(k) => energy_es_m(&st, k).ok(),
                    Target::ImprovedBoussinesq => None,
                };
                (energy_sample(&st).ok(), em)
            }
            Err(_) => (None, None),
        };
        if sample.is_none() && record.status == RunStatus::Ok {
            record.status = RunStatus::EnergyRegimeExit;
            record.message = Some(format!("energy not positive at t = {}", run.w.times[i]));
        }
        record.energies.push(sample);
        record.energies_m.push(sample_m);
    }
    if blown {
        record.status = RunStatus::Blowup;
        let t = run
            .w
            .blow_up
            .or(run.u.blow_up)
            .map(|b| b.time)
            .unwrap_or(f64::NAN);
        record.message = Some(format!("blow-up at t = {t}"));
    }
    record
}

/// Runs every path point (concurrently, capped by `workers`); records are in path order.
pub fn run_approximation(config: &SweepConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let work = || -> Vec<RunRecord> {
        config
            .path
            .par_iter()
            .map(|&(e, d)| run_point(config, e, d))
            .collect()
    };
    match config.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorLaw {
    /// `C (e^2 + d^4) t`
    EpsSqPlusDeltaFourth,
    /// `C e^2 t`
    EpsSq,
}

impl ErrorLaw {
    pub fn scale(&self, epsilon: f64, delta: f64) -> f64 {
        match self {
            ErrorLaw::EpsSqPlusDeltaFourth => epsilon * epsilon + delta.powi(4),
            ErrorLaw::EpsSq => epsilon * epsilon,
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            ErrorLaw::EpsSqPlusDeltaFourth => "C (eps^2 + delta^4) t",
            ErrorLaw::EpsSq => "C eps^2 t",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeAt {
    /// Fixed time (for slopes in epsilon) or fixed epsilon (for slopes in t).
    pub at: f64,
    pub fit: LineFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorLawFit {
    pub law: ErrorLaw,
    pub t_stars: Vec<f64>,
    pub slopes_in_epsilon: Vec<SlopeAt>,
    pub slopes_in_t: Vec<SlopeAt>,
    /// Smallest `C` with `error <= C scale(e, d) t` at every `(point, t*)`.
    pub constant: f64,
    /// Smallest ratio `error / (C scale t)` over the same samples.
    pub min_ratio: f64,
    /// Largest `error / (C scale t)` over every recorded `t > 0`; `<= 1` means the bound holds.
    pub max_violation: f64,
    pub notes: Vec<String>,
}

/// Fits the error law on the records with status ok at the fixed times `t_stars`.
pub fn fit_error_law(records: &[RunRecord], law: ErrorLaw, t_stars: &[f64]) -> Result<ErrorLawFit> {
    let usable: Vec<&RunRecord> = records
        .iter()
        .filter(|r| matches!(r.status, RunStatus::Ok | RunStatus::EnergyRegimeExit))
        .collect();
    if usable.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} usable path point(s); need 3",
            usable.len()
        )));
    }
    let times: Vec<f64> = t_stars
        .iter()
        .copied()
        .filter(|&t| usable.iter().all(|r| r.error_at(t).is_some()))
        .collect();
    if times.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} sample time(s) common to all points; need 3",
            times.len()
        )));
    }
    let all_errors: Vec<f64> = usable
        .iter()
        .flat_map(|r| times.iter().map(|&t| r.error_at(t).unwrap()))
        .collect();
    if all_errors.iter().all(|&e| e < ERROR_FLOOR) {
        return Err(Error::DegenerateFit("errors at the noise floor".into()));
    }
    let eps: Vec<f64> = usable.iter().map(|r| r.epsilon).collect();
    let slopes_in_epsilon = times
        .iter()
        .map(|&t| {
            let errs: Vec<f64> = usable.iter().map(|r| r.error_at(t).unwrap()).collect();
            Ok(SlopeAt {
                at: t,
                fit: loglog_fit(&eps, &errs, ERROR_FLOOR)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slopes_in_t = usable
        .iter()
        .map(|r| {
            let errs: Vec<f64> = times.iter().map(|&t| r.error_at(t).unwrap()).collect();
            Ok(SlopeAt {
                at: r.epsilon,
                fit: loglog_fit(&times, &errs, ERROR_FLOOR)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let ratio = |r: &RunRecord, t: f64, e: f64| e / (law.scale(r.epsilon, r.delta) * t);
    let mut constant: f64 = 0.0;
    let mut low = f64::INFINITY;
    for r in &usable {
        for &t in &times {
            let q = ratio(r, t, r.error_at(t).unwrap());
            constant = constant.max(q);
            low = low.min(q);
        }
    }
    let max_violation = usable
        .iter()
        .flat_map(|r| {
            r.times
                .iter()
                .zip(&r.errors)
                .filter(|(t, _)| **t > 0.0)
                .map(move |(&t, &e)| ratio(r, t, e))
        })
        .fold(0.0f64, f64::max)
        / constant;

    let mut notes = Vec::new();
    for s in &slopes_in_epsilon {
        if s.fit.slope > 2.3 {
            notes.push(format!(
                "t = {}: slope in epsilon {:.3} is sharper than the bound",
                s.at, s.fit.slope
            ));
        }
    }
    if max_violation > 1.0 + 1e-9 {
        notes.push(format!(
            "bound with the fitted C is exceeded by a factor {max_violation:.3} at some recorded time"
        ));
    }
    Ok(ErrorLawFit {
        law,
        t_stars: times,
        slopes_in_epsilon,
        slopes_in_t,
        constant,
        min_ratio: low / constant,
        max_violation,
        notes,
    })
}

/// Maps KdV data to the normalized form `q_t + q_x + 3/2 eb q q_x + 1/6 eb q_xxx = 0`:
/// `q0 = (2/9)(e/d^2) w0` and `eb = 3 d^2`.
pub fn kdv_normalization(
    w0: &Field,
    epsilon: f64,
    delta: f64,
    band: (f64, f64),
) -> Result<(Field, f64)> {
    let (c1, c2) = band;
    let ratio = delta * delta / epsilon;
    if !(epsilon > 0.0 && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon}, delta = {delta} must be positive"
        )));
    }
    let tol = 1e-12 * ratio;
    if ratio < c1 - tol || ratio > c2 + tol {
        return Err(Error::Band { ratio, c1, c2 });
    }
    Ok((w0.scale(2.0 / 9.0 / ratio), 3.0 * delta * delta))
}

/// Solves KdV through the normalized form and maps the result back to `w`.
pub fn solve_kdv_normalized(
    w0: &Field,
    epsilon: f64,
    delta: f64,
    band: (f64, f64),
    options: &StepOptions,
) -> Result<Trajectory> {
    let (q0, eb) = kdv_normalization(w0, epsilon, delta, band)?;
    let mut traj =
        solve_unidirectional(&q0, &KappaModel::normalized_kdv(), eb, eb.sqrt(), options)?;
    let back = 4.5 * delta * delta / epsilon;
    traj.states = traj.states.iter().map(|q| q.scale(back)).collect();
    traj.label = "kdv".into();
    traj.epsilon = epsilon;
    traj.delta = delta;
    Ok(traj)
}
