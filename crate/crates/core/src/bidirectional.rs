//! Improved Boussinesq and nonlocal wave equations,
//! `u_tt = beta_delta * (u + e u^2)_xx`, stepped as first-order systems in `(u, u_t)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{dealias_in_place, fft_forward, fft_inverse, Field, GridSpec};
use crate::kernels::Kernel;
use crate::trajectory::{BlowUpEvent, StepOptions, Trajectory};

/// Which second-order equation to integrate.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// `u_tt - u_xx - d^2 u_xxtt - e (u^2)_xx = 0`.
    ImprovedBoussinesq,
    Nonlocal(Kernel),
}

impl Target {
    pub fn label(&self) -> String {
        match self {
            Target::ImprovedBoussinesq => "ib".into(),
            Target::Nonlocal(k) => format!("nonlocal:{}", k.name),
        }
    }

    /// `-k^2 beta_hat(delta k)` at every FFT index.
    fn symbols(&self, grid: &GridSpec, delta: f64) -> Result<Vec<f64>> {
        if let Target::Nonlocal(kernel) = self {
            kernel.validate_on(grid, delta)?;
        }
        let d2 = delta * delta;
        Ok(grid
            .wavenumbers()
            .into_iter()
            .map(|k| match self {
                Target::ImprovedBoussinesq => -k * k / (1.0 + d2 * k * k),
                Target::Nonlocal(kernel) => -k * k * kernel.symbol_at(delta * k),
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BidiState {
    pub u: Field,
    pub v: Field,
    pub time: f64,
}

fn check_parameters(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} must be >= 0"
        )));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} must be > 0"
        )));
    }
    Ok(())
}

struct Accel {
    grid: GridSpec,
    epsilon: f64,
    symbols: Vec<f64>,
}

impl Accel {
    fn new(target: &Target, grid: GridSpec, epsilon: f64, delta: f64) -> Result<Self> {
        check_parameters(epsilon, delta)?;
        Ok(Self {
            grid,
            epsilon,
            symbols: target.symbols(&grid, delta)?,
        })
    }

    /// Spectral acceleration from spectral `u`; also returns physical `u`.
    fn eval(&self, u_hat: &[Complex64]) -> (Vec<Complex64>, Vec<f64>) {
        let u = fft_inverse(u_hat);
        let mut out = if self.epsilon != 0.0 {
            let sq: Vec<f64> = u.iter().map(|x| x * x).collect();
            let mut sq_hat = fft_forward(&sq);
            dealias_in_place(&self.grid, &mut sq_hat);
            u_hat
                .iter()
                .zip(&sq_hat)
                .map(|(a, b)| a + b * self.epsilon)
                .collect()
        } else {
            u_hat.to_vec()
        };
        out.iter_mut()
            .zip(&self.symbols)
            .for_each(|(c, s)| *c *= *s);
        (out, u)
    }

    fn field(&self, u: &Field) -> Field {
        let (a, _) = self.eval(&fft_forward(u.samples()));
        Field::from_raw(self.grid, fft_inverse(&a))
    }
}

/// `u_tt` of the improved Boussinesq equation.
pub fn ib_accel(u: &Field, epsilon: f64, delta: f64) -> Result<Field> {
    Ok(Accel::new(&Target::ImprovedBoussinesq, u.grid(), epsilon, delta)?.field(u))
}

/// `u_tt` of the nonlocal wave equation with `kernel`.
pub fn nonlocal_accel(u: &Field, kernel: &Kernel, epsilon: f64, delta: f64) -> Result<Field> {
    Ok(Accel::new(&Target::Nonlocal(kernel.clone()), u.grid(), epsilon, delta)?.field(u))
}

pub fn accel(u: &Field, target: &Target, epsilon: f64, delta: f64) -> Result<Field> {
    Ok(Accel::new(target, u.grid(), epsilon, delta)?.field(u))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(
        0.0f64,
        |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) },
    )
}

/// Classical RK4 on `(u, v)' = (v, accel(u))`. Both `u` and `u_t` are stored.
pub fn solve_bidirectional(
    u0: &Field,
    u1: &Field,
    target: &Target,
    epsilon: f64,
    delta: f64,
    options: &StepOptions,
) -> Result<Trajectory> {
    u0.check_same_grid(u1)?;
    let grid = u0.grid();
    let (steps, dt, stride) = options.resolve()?;
    let acc = Accel::new(target, grid, epsilon, delta)?;
    let n = grid.points();

    let mut u = fft_forward(u0.samples());
    let mut v = fft_forward(u1.samples());
    let mut traj = Trajectory {
        grid,
        label: target.label(),
        epsilon,
        delta,
        dt,
        times: vec![0.0],
        states: vec![u0.clone()],
        rates: Some(vec![u1.clone()]),
        blow_up: None,
    };
    let mut tu = vec![Complex64::new(0.0, 0.0); n];
    let mut tv = vec![Complex64::new(0.0, 0.0); n];
    let blow_up = |traj: &Trajectory, time: f64, peak: f64| BlowUpEvent {
        time,
        max_abs: peak,
        last_valid_index: traj.states.len() - 1,
    };
    for step in 1..=steps {
        let (a1, current) = acc.eval(&u);
        let peak = max_abs(&current);
        if !(peak <= options.blowup_threshold) {
            traj.blow_up = Some(blow_up(&traj, (step - 1) as f64 * dt, peak));
            return Ok(traj);
        }
        let h = 0.5 * dt;
        for i in 0..n {
            tu[i] = u[i] + v[i] * h;
            tv[i] = v[i] + a1[i] * h;
        }
        let (a2, _) = acc.eval(&tu);
        let v2 = tv.clone();
        for i in 0..n {
            tu[i] = u[i] + v2[i] * h;
            tv[i] = v[i] + a2[i] * h;
        }
        let (a3, _) = acc.eval(&tu);
        let v3 = tv.clone();
        for i in 0..n {
            tu[i] = u[i] + v3[i] * dt;
            tv[i] = v[i] + a3[i] * dt;
        }
        let (a4, _) = acc.eval(&tu);
        let w = dt / 6.0;
        for i in 0..n {
            u[i] += (v[i] + (v2[i] + v3[i]) * 2.0 + tv[i]) * w;
            v[i] += (a1[i] + (a2[i] + a3[i]) * 2.0 + a4[i]) * w;
        }
        if step % stride == 0 || step == steps {
            let us = fft_inverse(&u);
            let peak = max_abs(&us);
            if !(peak <= options.blowup_threshold) {
                traj.blow_up = Some(blow_up(&traj, step as f64 * dt, peak));
                return Ok(traj);
            }
            traj.times.push(step as f64 * dt);
            traj.states.push(Field::from_raw(grid, us));
            if let Some(rates) = traj.rates.as_mut() {
                rates.push(Field::from_raw(grid, fft_inverse(&v)));
            }
        }
    }
    Ok(traj)
}

/// Snapshot `index` of a bidirectional trajectory as a state pair.
pub fn state_at(traj: &Trajectory, index: usize) -> Option<BidiState> {
    let rates = traj.rates.as_ref()?;
    Some(BidiState {
        u: traj.states.get(index)?.clone(),
        v: rates.get(index)?.clone(),
        time: traj.times[index],
    })
}
