//! Nonlocal kernels described by their Fourier symbols.
//!
//! A kernel `beta` enters the nonlocal wave equation through the scaled
//! symbol `beta_hat(delta k)`. Under the moment normalization
//! `int beta = 1`, `int X^2 beta = 2` the reciprocal symbol splits as
//! `1/beta_hat(eta) = 1 + eta^2 + eta^4 m(eta)` with `m` continuous; `m`
//! drives the correction operator `M_delta`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{apply_symbol, Field, GridSpec};

/// Below this `|eta|` the correction symbol is replaced by its limit `m(0)`.
pub const ETA_CUT: f64 = 1e-2;

/// Fourier symbol of an even kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Symbol {
    /// `(1 + eta^2)^{-1}`, kernel `exp(-|X|)/2`.
    Exponential,
    /// `exp(-eta^2)`, kernel `exp(-X^2/4)/sqrt(4 pi)`.
    Gaussian,
    /// `(1 + 2 eta^2 / r)^{-r/2}`: order `r`, scaled so the second moment is 2.
    Rational { order: f64 },
    /// Piecewise-linear table of `(eta, beta_hat)` for `eta >= 0`, extended evenly.
    Table { eta: Vec<f64>, values: Vec<f64> },
}

impl Symbol {
    pub fn eval(&self, eta: f64) -> f64 {
        let a = eta.abs();
        match self {
            Symbol::Exponential => 1.0 / (1.0 + a * a),
            Symbol::Gaussian => (-a * a).exp(),
            Symbol::Rational { order } => (1.0 + 2.0 * a * a / order).powf(-order / 2.0),
            Symbol::Table { eta, values } => interpolate(eta, values, a),
        }
    }

    /// `1 / beta_hat(eta)`, in closed form where one exists.
    pub fn reciprocal(&self, eta: f64) -> f64 {
        let a = eta.abs();
        match self {
            Symbol::Exponential => 1.0 + a * a,
            Symbol::Gaussian => (a * a).exp(),
            Symbol::Rational { order } => (1.0 + 2.0 * a * a / order).powf(order / 2.0),
            Symbol::Table { .. } => 1.0 / self.eval(a),
        }
    }

    /// Closed-form correction symbol, when available.
    fn correction(&self, eta: f64) -> Option<f64> {
        let a = eta.abs();
        let x = a * a;
        match self {
            Symbol::Exponential => Some(0.0),
            Symbol::Gaussian => Some(if x < 0.5 {
                // (e^x - 1 - x)/x^2 = sum_{j>=2} x^{j-2}/j!
                let mut term: f64 = 0.5;
                let mut sum: f64 = 0.0;
                let mut j = 2.0;
                while term.abs() > 1e-18 * sum.abs().max(1e-300) || sum == 0.0 {
                    sum += term;
                    j += 1.0;
                    term *= x / j;
                }
                sum
            } else {
                (x.exp_m1() - x) / (x * x)
            }),
            Symbol::Rational { order } => {
                let p = order / 2.0;
                let c = 1.0 / p;
                if c * x < 0.5 {
                    // binomial series of (1 + c x)^p beyond the linear term
                    let mut coeff = p * (p - 1.0) / 2.0 * c * c;
                    let mut sum: f64 = 0.0;
                    let mut j = 2.0;
                    while coeff != 0.0 && (coeff.abs() > 1e-18 * sum.abs() || sum == 0.0) {
                        sum += coeff;
                        coeff *= (p - j) / (j + 1.0) * c * x;
                        j += 1.0;
                    }
                    Some(sum)
                } else {
                    Some(((1.0 + c * x).powf(p) - 1.0 - x) / (x * x))
                }
            }
            Symbol::Table { .. } => None,
        }
    }
}

fn interpolate(eta: &[f64], values: &[f64], a: f64) -> f64 {
    if eta.is_empty() || a > *eta.last().unwrap() || a < eta[0] {
        return f64::NAN;
    }
    let i = eta.partition_point(|&e| e <= a);
    if i == 0 {
        return values[0];
    }
    if i >= eta.len() {
        return values[eta.len() - 1];
    }
    let (e0, e1) = (eta[i - 1], eta[i]);
    let t = (a - e0) / (e1 - e0);
    values[i - 1] * (1.0 - t) + values[i] * t
}

/// Spatial form `beta(X)`, attached where known; used only by quadrature checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpatialForm {
    Exponential,
    Gaussian,
}

impl SpatialForm {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SpatialForm::Exponential => 0.5 * (-x.abs()).exp(),
            SpatialForm::Gaussian => (-x * x / 4.0).exp() / (4.0 * std::f64::consts::PI).sqrt(),
        }
    }

    /// Half-width beyond which the kernel is negligible at double precision.
    fn support(&self) -> f64 {
        match self {
            SpatialForm::Exponential => 60.0,
            SpatialForm::Gaussian => 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub name: String,
    pub order: f64,
    pub symbol: Symbol,
    pub spatial: Option<SpatialForm>,
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (r = {})", self.name, self.order)
    }
}

/// The kernel that turns the nonlocal equation into the improved Boussinesq equation.
pub fn exponential_kernel() -> Kernel {
    Kernel {
        name: "exponential".into(),
        order: 2.0,
        symbol: Symbol::Exponential,
        spatial: Some(SpatialForm::Exponential),
    }
}

/// Gaussian kernel with unit mass and second moment 2. Its symbol decays faster
/// than any power, so it fails ellipticity and is excluded from solver runs.
pub fn gaussian_kernel() -> Kernel {
    Kernel {
        name: "gaussian".into(),
        order: 2.0,
        symbol: Symbol::Gaussian,
        spatial: Some(SpatialForm::Gaussian),
    }
}

/// Algebraic symbol `(1 + 2 eta^2/r)^{-r/2}` of order `r`.
pub fn rational_kernel(order: f64) -> Result<Kernel> {
    if !(order.is_finite() && order >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel order {order} must be >= 2"
        )));
    }
    Ok(Kernel {
        name: format!("rational{order}"),
        order,
        symbol: Symbol::Rational { order },
        spatial: None,
    })
}

/// Table-defined kernel with linear interpolation in `|eta|`.
pub fn table_kernel(name: &str, order: f64, eta: Vec<f64>, values: Vec<f64>) -> Result<Kernel> {
    if eta.len() != values.len() || eta.len() < 2 {
        return Err(Error::Config(format!(
            "kernel '{name}': table needs >= 2 matching (eta, value) pairs"
        )));
    }
    if eta[0] != 0.0 || eta.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "kernel '{name}': eta must start at 0 and increase strictly"
        )));
    }
    if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::EllipticityViolation {
            kernel: name.into(),
            eta: eta[i],
            value: values[i],
        });
    }
    if !(order.is_finite() && order >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel order {order} must be >= 2"
        )));
    }
    Ok(Kernel {
        name: name.into(),
        order,
        symbol: Symbol::Table { eta, values },
        spatial: None,
    })
}

impl Kernel {
    pub fn symbol_at(&self, eta: f64) -> f64 {
        self.symbol.eval(eta)
    }

    /// Checks that `beta_hat(delta k)` is finite and positive at every grid mode.
    pub fn validate_on(&self, grid: &GridSpec, delta: f64) -> Result<()> {
        for k in grid.wavenumbers() {
            let eta = delta * k;
            let v = self.symbol_at(eta);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "kernel '{}' symbol undefined at eta = {eta} (table must cover [0, delta k_max])",
                    self.name
                )));
            }
            if v <= 0.0 {
                return Err(Error::EllipticityViolation {
                    kernel: self.name.clone(),
                    eta,
                    value: v,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub c1_est: f64,
    pub c2_est: f64,
    pub pass: bool,
}

fn ellipticity_extremes(kernel: &Kernel, samples: impl Iterator<Item = f64>) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for eta in samples {
        let v = kernel.symbol_at(eta);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "kernel '{}' symbol {v} at eta = {eta}",
                kernel.name
            )));
        }
        let ratio = v * (1.0 + eta * eta).powf(kernel.order / 2.0);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((lo, hi))
}

/// Estimates the two-sided bound `c1 (1+eta^2)^{-r/2} <= beta_hat <= c2 (1+eta^2)^{-r/2}`
/// on the given samples. Passing also requires the estimates to be stable when
/// the sample range is doubled: neither bound may move by more than a factor 2.
pub fn check_ellipticity(kernel: &Kernel, samples: &[f64]) -> Result<EllipticityReport> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no eta samples".into()));
    }
    let (c1, c2) = ellipticity_extremes(kernel, samples.iter().copied())?;
    let base_ok = c1 > 0.0 && c1 <= c2 && c2.is_finite();
    let pass = base_ok && {
        match ellipticity_extremes(kernel, samples.iter().chain(samples).map(|e| 2.0 * e)) {
            Ok((d1, d2)) => d1 > 0.0 && d1 >= 0.5 * c1 && d2 <= 2.0 * c2 && d2.is_finite(),
            Err(_) => false,
        }
    };
    Ok(EllipticityReport {
        c1_est: c1,
        c2_est: c2,
        pass,
    })
}

/// `count + 1` equispaced samples of `[0, eta_max]`.
pub fn eta_samples(eta_max: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|i| eta_max * i as f64 / count as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub m0: f64,
    pub m2: f64,
    pub m4_abs: f64,
    /// `true` when `m4_abs` came from quadrature of the spatial form; a
    /// symbol-derived value is the signed fourth moment and cannot certify
    /// absolute integrability.
    pub m4_verified: bool,
    pub m0_ok: bool,
    pub m2_ok: bool,
    pub m4_ok: Option<bool>,
}

const MOMENT_TOLERANCE: f64 = 1e-6;

fn second_derivative_at_zero(f: &impl Fn(f64) -> f64, h: f64) -> (f64, f64) {
    let f0 = f(0.0);
    let o2 = (f(h) - 2.0 * f0 + f(-h)) / (h * h);
    let o4 = (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f0 + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h);
    (o2, o4)
}

/// Fourth-order accurate fourth derivative at 0.
fn fourth_derivative_at_zero(f: &impl Fn(f64) -> f64, h: f64) -> f64 {
    (-f(3.0 * h) + 12.0 * f(2.0 * h) - 39.0 * f(h) + 56.0 * f(0.0) - 39.0 * f(-h)
        + 12.0 * f(-2.0 * h)
        - f(-3.0 * h))
        / (6.0 * h.powi(4))
}

/// Fourth derivative at 0 with step halving until two estimates agree to `1e-6`.
fn converged_fourth_derivative(f: &impl Fn(f64) -> f64) -> Result<f64> {
    let mut h = 0.2;
    let mut prev = fourth_derivative_at_zero(f, h);
    for _ in 0..8 {
        h *= 0.5;
        let next = fourth_derivative_at_zero(f, h);
        if (next - prev).abs() <= 1e-6 * (1.0 + next.abs()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::SymbolNotSmooth(format!(
        "fourth derivative estimates did not settle (last {prev})"
    )))
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Moments of an even kernel: `m0 = beta_hat(0)`, `m2 = -beta_hat''(0)`, and
/// the absolute fourth moment by quadrature when a spatial form is attached.
pub fn check_moments(kernel: &Kernel) -> Result<MomentReport> {
    let f = |eta: f64| kernel.symbol_at(eta);
    let m0 = f(0.0);
    let h = 1e-4;
    let (o2, o4) = second_derivative_at_zero(&f, h);
    let (_, o4_half) = second_derivative_at_zero(&f, h / 2.0);
    if !(o4.is_finite()
        && (o4 - o4_half).abs() <= 1e-4 * (1.0 + o4.abs())
        && (o2 - o4).abs() <= 1e-4 * (1.0 + o4.abs()))
    {
        return Err(Error::SymbolNotSmooth(format!(
            "second-derivative estimates {o2}, {o4}, {o4_half} disagree"
        )));
    }
    let m2 = -o4;
    let (m4_abs, m4_verified) = match kernel.spatial {
        Some(form) => {
            let x_max = form.support();
            let v = 2.0 * simpson(|x| x.powi(4) * form.eval(x).abs(), 0.0, x_max, 400_000);
            (v, true)
        }
        None => (converged_fourth_derivative(&f)?.abs(), false),
    };
    Ok(MomentReport {
        m0,
        m2,
        m4_abs,
        m4_verified,
        m0_ok: (m0 - 1.0).abs() <= MOMENT_TOLERANCE,
        m2_ok: (m2 - 2.0).abs() <= MOMENT_TOLERANCE,
        m4_ok: m4_verified.then(|| m4_abs.is_finite() && m4_abs >= 0.0),
    })
}

/// Limit `m(0)` from fourth-order differences of `1/beta_hat`, valid only
/// under the moment normalization.
pub fn correction_at_zero(kernel: &Kernel) -> Result<f64> {
    let g = |eta: f64| 1.0 / kernel.symbol_at(eta);
    let g0 = g(0.0);
    let (_, g2) = second_derivative_at_zero(&g, 1e-4);
    if (g0 - 1.0).abs() > MOMENT_TOLERANCE || (g2 - 2.0).abs() > 1e-5 {
        return Err(Error::InvalidParameter(format!(
            "kernel '{}' is not moment-normalized (1/beta_hat(0) = {g0}, (1/beta_hat)''(0) = {g2}); m is not continuous at 0",
            kernel.name
        )));
    }
    Ok(converged_fourth_derivative(&g)? / 24.0)
}

/// The generic route for `m(eta)`: the defining quotient away from zero and
/// the finite-difference limit inside `|eta| <= ETA_CUT`.
pub fn m_symbol_generic(kernel: &Kernel, eta: f64) -> Result<f64> {
    let b = kernel.symbol_at(eta);
    if !(b > 0.0) {
        return Err(Error::EllipticityViolation {
            kernel: kernel.name.clone(),
            eta,
            value: b,
        });
    }
    if eta.abs() <= ETA_CUT {
        return correction_at_zero(kernel);
    }
    let e2 = eta * eta;
    Ok((1.0 / b - 1.0 - e2) / (e2 * e2))
}

/// Correction symbol `m(eta)` with `1/beta_hat = 1 + eta^2 + eta^4 m`.
/// Built-in symbols use closed forms; table kernels use the generic route.
pub fn m_symbol(kernel: &Kernel, eta: f64) -> Result<f64> {
    let b = kernel.symbol_at(eta);
    if !(b > 0.0) {
        return Err(Error::EllipticityViolation {
            kernel: kernel.name.clone(),
            eta,
            value: b,
        });
    }
    match kernel.symbol.correction(eta) {
        Some(m) => Ok(m),
        None => m_symbol_generic(kernel, eta),
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} not in (0, 1]"
        )));
    }
    Ok(())
}

/// `beta_delta * u`: multiplies mode `k` by `beta_hat(delta k)`.
pub fn apply_beta_delta(field: &Field, kernel: &Kernel, delta: f64) -> Result<Field> {
    check_delta(delta)?;
    kernel.validate_on(&field.grid(), delta)?;
    apply_symbol(field, |k| kernel.symbol_at(delta * k))
}

/// `M_delta u`: multiplies mode `k` by `m(delta k)`.
pub fn apply_m_delta(field: &Field, kernel: &Kernel, delta: f64) -> Result<Field> {
    check_delta(delta)?;
    let grid = field.grid();
    let symbols = m_delta_symbols(kernel, &grid, delta)?;
    let mut coeffs = crate::grid::fft_forward(field.samples());
    coeffs.iter_mut().zip(&symbols).for_each(|(c, m)| *c *= *m);
    Ok(Field::from_raw(grid, crate::grid::fft_inverse(&coeffs)))
}

/// `m(delta k)` for every FFT index of `grid`.
pub fn m_delta_symbols(kernel: &Kernel, grid: &GridSpec, delta: f64) -> Result<Vec<f64>> {
    let mut m_zero = None;
    grid.wavenumbers()
        .into_iter()
        .map(|k| {
            let eta = delta * k;
            if kernel.symbol.correction(eta).is_none() && eta.abs() <= ETA_CUT {
                if m_zero.is_none() {
                    m_zero = Some(correction_at_zero(kernel)?);
                }
                return Ok(m_zero.unwrap());
            }
            m_symbol(kernel, eta)
        })
        .collect()
}

/// Named kernels available to configs and the CLI.
#[derive(Debug, Clone)]
pub struct KernelRegistry {
    kernels: BTreeMap<String, Kernel>,
}

impl Default for KernelRegistry {
    fn default() -> Self {
        let mut kernels = BTreeMap::new();
        for k in [
            exponential_kernel(),
            gaussian_kernel(),
            rational_kernel(6.0).expect("order 6 is valid"),
        ] {
            kernels.insert(k.name.clone(), k);
        }
        Self { kernels }
    }
}

impl KernelRegistry {
    pub fn register(&mut self, kernel: Kernel) {
        self.kernels.insert(kernel.name.clone(), kernel);
    }

    pub fn get(&self, name: &str) -> Result<&Kernel> {
        self.kernels.get(name).ok_or_else(|| Error::UnknownKernel {
            name: name.into(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.kernels.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Kernel> {
        self.kernels.values()
    }

    /// Kernels that pass ellipticity on `[0, eta_max]` and the moment normalization.
    pub fn admissible(&self, eta_max: f64) -> Vec<&Kernel> {
        self.iter().filter(|k| is_admissible(k, eta_max)).collect()
    }
}

pub fn is_admissible(kernel: &Kernel, eta_max: f64) -> bool {
    let ell = check_ellipticity(kernel, &eta_samples(eta_max, 4000))
        .map(|r| r.pass)
        .unwrap_or(false);
    let mom = check_moments(kernel)
        .map(|m| m.m0_ok && m.m2_ok)
        .unwrap_or(false);
    ell && mom
}
