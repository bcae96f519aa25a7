//! The seven-coefficient family of unidirectional long-wave models
//!
//! ```text
//! w_t + w_x + k1 e w w_x + k2 e^2 w^2 w_x + k3 e^3 w^3 w_x
//!     + d^2 (k4 w_xxx + k5 w_xxt) - e d^2 (k6 w w_xxx + k7 w_x w_xx) = 0
//! ```
//!
//! with Camassa-Holm, BBM and KdV presets, integrated by an
//! integrating-factor RK4 scheme that treats the dispersive linear part exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    dealias_in_place, derivative_multiplier, fft_forward, fft_inverse, Field, GridSpec,
};
use crate::trajectory::{BlowUpEvent, StepOptions, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaModel {
    pub name: String,
    pub kappa: [f64; 7],
}

impl KappaModel {
    pub fn new(name: &str, kappa: [f64; 7]) -> Self {
        Self {
            name: name.into(),
            kappa,
        }
    }

    /// `w_t + w_x + e w w_x - 3/4 d^2 w_xxx - 5/4 d^2 w_xxt - 3/4 e d^2 (2 w_x w_xx + w w_xxx) = 0`.
    pub fn camassa_holm() -> Self {
        Self::new("ch", [1.0, 0.0, 0.0, -0.75, -1.25, 0.75, 1.5])
    }

    /// Camassa-Holm without its `e d^2` terms.
    pub fn bbm() -> Self {
        Self::new("bbm", [1.0, 0.0, 0.0, -0.75, -1.25, 0.0, 0.0])
    }

    /// `w_t + w_x + e w w_x + d^2/2 w_xxx = 0`.
    pub fn kdv() -> Self {
        Self::new("kdv", [1.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0])
    }

    /// `q_t + q_x + 3/2 e q q_x + 1/6 e q_xxx = 0`, realized with `d^2 = e`.
    pub fn normalized_kdv() -> Self {
        Self::new("kdv-normalized", [1.5, 0.0, 0.0, 1.0 / 6.0, 0.0, 0.0, 0.0])
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ch" | "camassa-holm" => Ok(Self::camassa_holm()),
            "bbm" => Ok(Self::bbm()),
            "kdv" => Ok(Self::kdv()),
            "kdv-normalized" => Ok(Self::normalized_kdv()),
            other => Err(Error::Config(format!(
                "unknown model '{other}'; expected one of ch, bbm, kdv"
            ))),
        }
    }

    fn k(&self, i: usize) -> f64 {
        self.kappa[i - 1]
    }
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

/// How pointwise products are projected back into spectral space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Products {
    /// Two-thirds rule after every product.
    Dealiased,
    /// No truncation; used on refined grids where products are exact.
    Exact,
}

/// Spectral evaluator for one model at fixed parameters on one grid.
pub(crate) struct ModelOperator<'a> {
    model: &'a KappaModel,
    epsilon: f64,
    delta: f64,
    grid: GridSpec,
    products: Products,
    /// `1 / (1 - k5 d^2 k^2)`
    inv_left: Vec<f64>,
    /// `(-ik - k4 d^2 (ik)^3) / (1 - k5 d^2 k^2)`
    linear: Vec<Complex64>,
    d1: Vec<Complex64>,
    d2: Vec<Complex64>,
    d3: Vec<Complex64>,
}

/// Physical-space values of a field and its first three derivatives.
struct Jet {
    v: Vec<f64>,
    x: Vec<f64>,
    xx: Vec<f64>,
    xxx: Vec<f64>,
}

impl<'a> ModelOperator<'a> {
    pub(crate) fn new(
        model: &'a KappaModel,
        epsilon: f64,
        delta: f64,
        grid: GridSpec,
        products: Products,
    ) -> Result<Self> {
        check_parameters(epsilon, delta)?;
        let d2 = delta * delta;
        let n = grid.points();
        let mut inv_left = Vec::with_capacity(n);
        let mut linear = Vec::with_capacity(n);
        for j in 0..n {
            let k = grid.wavenumber(j);
            let left = 1.0 - model.k(5) * d2 * k * k;
            if !(left > 0.0) {
                return Err(Error::InvertibilityViolation { wavenumber: k });
            }
            let inv = 1.0 / left;
            inv_left.push(inv);
            let ik = derivative_multiplier(&grid, j, 1);
            let ik3 = derivative_multiplier(&grid, j, 3);
            linear.push((-ik - ik3 * (model.k(4) * d2)) * inv);
        }
        let mult = |order| {
            (0..n)
                .map(|j| derivative_multiplier(&grid, j, order))
                .collect()
        };
        Ok(Self {
            model,
            epsilon,
            delta,
            grid,
            products,
            inv_left,
            linear,
            d1: mult(1),
            d2: mult(2),
            d3: mult(3),
        })
    }

    fn jet(&self, hat: &[Complex64]) -> Jet {
        let apply = |m: &[Complex64]| -> Vec<f64> {
            let c: Vec<Complex64> = hat.iter().zip(m).map(|(a, b)| a * b).collect();
            fft_inverse(&c)
        };
        Jet {
            v: fft_inverse(hat),
            x: apply(&self.d1),
            xx: apply(&self.d2),
            xxx: apply(&self.d3),
        }
    }

    /// Projects a physical-space bracket back to spectral space and applies
    /// the inverse of the left operator.
    fn close(&self, bracket: Vec<f64>) -> Vec<Complex64> {
        let mut hat = fft_forward(&bracket);
        if self.products == Products::Dealiased {
            dealias_in_place(&self.grid, &mut hat);
        }
        hat.iter_mut()
            .zip(&self.inv_left)
            .for_each(|(c, s)| *c *= *s);
        hat
    }

    fn has_nonlinearity(&self) -> bool {
        let m = self.model;
        self.epsilon != 0.0 && [1, 2, 3, 6, 7].iter().any(|&i| m.k(i) != 0.0)
    }

    /// Nonlinear part of `w_t`, already divided by the left operator.
    fn nonlinear_from_jet(&self, w: &Jet) -> Vec<Complex64> {
        let n = self.grid.points();
        if !self.has_nonlinearity() {
            return vec![Complex64::new(0.0, 0.0); n];
        }
        let m = self.model;
        let e = self.epsilon;
        let ed2 = e * self.delta * self.delta;
        let (c1, c2, c3) = (m.k(1) * e, m.k(2) * e * e, m.k(3) * e * e * e);
        let (c6, c7) = (m.k(6) * ed2, m.k(7) * ed2);
        let bracket = (0..n)
            .map(|i| {
                let (v, x) = (w.v[i], w.x[i]);
                -(c1 + (c2 + c3 * v) * v) * v * x + c6 * v * w.xxx[i] + c7 * x * w.xx[i]
            })
            .collect();
        self.close(bracket)
    }

    pub(crate) fn nonlinear(&self, hat: &[Complex64]) -> (Vec<Complex64>, Vec<f64>) {
        let jet = self.jet(hat);
        let nl = self.nonlinear_from_jet(&jet);
        (nl, jet.v)
    }

    /// Spectral `w_t`.
    pub(crate) fn rate(&self, hat: &[Complex64]) -> Vec<Complex64> {
        let (mut nl, _) = self.nonlinear(hat);
        nl.iter_mut()
            .zip(hat.iter().zip(&self.linear))
            .for_each(|(c, (h, l))| *c += h * l);
        nl
    }

    /// Spectral `w_tt`: the derivative of the rate along `g_hat = w_t`.
    pub(crate) fn rate_derivative(&self, hat: &[Complex64], g_hat: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.points();
        let mut out: Vec<Complex64> = g_hat.iter().zip(&self.linear).map(|(g, l)| g * l).collect();
        if !self.has_nonlinearity() {
            return out;
        }
        let w = self.jet(hat);
        let g = self.jet(g_hat);
        let m = self.model;
        let e = self.epsilon;
        let ed2 = e * self.delta * self.delta;
        let (c1, c2, c3) = (m.k(1) * e, m.k(2) * e * e, m.k(3) * e * e * e);
        let (c6, c7) = (m.k(6) * ed2, m.k(7) * ed2);
        let bracket = (0..n)
            .map(|i| {
                let (v, x, gv, gx) = (w.v[i], w.x[i], g.v[i], g.x[i]);
                -c1 * (gv * x + v * gx)
                    - c2 * (2.0 * v * gv * x + v * v * gx)
                    - c3 * (3.0 * v * v * gv * x + v * v * v * gx)
                    + c6 * (gv * w.xxx[i] + v * g.xxx[i])
                    + c7 * (gx * w.xx[i] + x * g.xx[i])
            })
            .collect();
        let nl = self.close(bracket);
        out.iter_mut().zip(nl).for_each(|(o, c)| *o += c);
        out
    }

    pub(crate) fn linear_symbols(&self) -> &[Complex64] {
        &self.linear
    }
}

/// `w_t` of the model at `w`, with dealiased products.
pub fn kappa_rhs(w: &Field, model: &KappaModel, epsilon: f64, delta: f64) -> Result<Field> {
    let op = ModelOperator::new(model, epsilon, delta, w.grid(), Products::Dealiased)?;
    let rate = op.rate(&fft_forward(w.samples()));
    Ok(Field::from_raw(w.grid(), fft_inverse(&rate)))
}

/// Same as [`kappa_rhs`]; the coupled initial velocity `u_t(x, 0)`.
pub fn time_derivative(w: &Field, model: &KappaModel, epsilon: f64, delta: f64) -> Result<Field> {
    kappa_rhs(w, model, epsilon, delta)
}

/// `w_tt` along the flow, assembled term by term with the product rule.
pub fn second_time_derivative(
    w: &Field,
    model: &KappaModel,
    epsilon: f64,
    delta: f64,
) -> Result<Field> {
    let op = ModelOperator::new(model, epsilon, delta, w.grid(), Products::Dealiased)?;
    let hat = fft_forward(w.samples());
    let g = op.rate(&hat);
    Ok(Field::from_raw(
        w.grid(),
        fft_inverse(&op.rate_derivative(&hat, &g)),
    ))
}

/// `Q = (1 - 5/4 d^2 D_x^2)^{-1}`.
pub fn apply_q(field: &Field, delta: f64) -> Result<Field> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} not in (0, 1]"
        )));
    }
    let d2 = delta * delta;
    crate::grid::apply_symbol(field, |k| 1.0 / (1.0 + 1.25 * d2 * k * k))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(
        0.0f64,
        |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) },
    )
}

/// Integrates the model from `w0` with Lawson's integrating-factor RK4:
/// the linear part is propagated exactly by `exp(t L)` mode by mode and the
/// nonlinear remainder by classical RK4 in the transformed variable.
pub fn solve_unidirectional(
    w0: &Field,
    model: &KappaModel,
    epsilon: f64,
    delta: f64,
    options: &StepOptions,
) -> Result<Trajectory> {
    let grid = w0.grid();
    let (steps, dt, stride) = options.resolve()?;
    let op = ModelOperator::new(model, epsilon, delta, grid, Products::Dealiased)?;
    let full: Vec<Complex64> = op.linear_symbols().iter().map(|l| (l * dt).exp()).collect();
    let half: Vec<Complex64> = op
        .linear_symbols()
        .iter()
        .map(|l| (l * (0.5 * dt)).exp())
        .collect();

    let mut hat = fft_forward(w0.samples());
    let mut traj = Trajectory {
        grid,
        label: model.name.clone(),
        epsilon,
        delta,
        dt,
        times: vec![0.0],
        states: vec![w0.clone()],
        rates: None,
        blow_up: None,
    };
    let n = grid.points();
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    for step in 1..=steps {
        let (k1, current) = op.nonlinear(&hat);
        let peak = max_abs(&current);
        if !(peak <= options.blowup_threshold) {
            traj.blow_up = Some(BlowUpEvent {
                time: (step - 1) as f64 * dt,
                max_abs: peak,
                last_valid_index: traj.states.len() - 1,
            });
            return Ok(traj);
        }
        for i in 0..n {
            tmp[i] = half[i] * (hat[i] + k1[i] * (0.5 * dt));
        }
        let (k2, _) = op.nonlinear(&tmp);
        for i in 0..n {
            tmp[i] = half[i] * hat[i] + k2[i] * (0.5 * dt);
        }
        let (k3, _) = op.nonlinear(&tmp);
        for i in 0..n {
            tmp[i] = full[i] * hat[i] + half[i] * k3[i] * dt;
        }
        let (k4, _) = op.nonlinear(&tmp);
        for i in 0..n {
            hat[i] = full[i] * hat[i]
                + (full[i] * k1[i] + half[i] * (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        if step % stride == 0 || step == steps {
            let samples = fft_inverse(&hat);
            let peak = max_abs(&samples);
            if !(peak <= options.blowup_threshold) {
                traj.blow_up = Some(BlowUpEvent {
                    time: step as f64 * dt,
                    max_abs: peak,
                    last_valid_index: traj.states.len() - 1,
                });
                return Ok(traj);
            }
            traj.times.push(step as f64 * dt);
            traj.states.push(Field::from_raw(grid, samples));
        }
    }
    Ok(traj)
}
