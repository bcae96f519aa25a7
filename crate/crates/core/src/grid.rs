//! Periodic grids, discrete Fourier analysis and Sobolev-space arithmetic.
//!
//! Coefficients follow the convention `u(x) = sum_k c_k exp(i k x)`, so
//! `c_k = (1/N) sum_j u_j exp(-i k x_j)`. Spectra are stored in FFT order:
//! index `j <= N/2` carries wavenumber `2 pi j / L`, index `j > N/2` carries
//! `2 pi (j - N) / L`. The Nyquist index `N/2` carries the positive wavenumber
//! `pi N / L`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest spatial derivative order accepted by [`derivative`].
pub const MAX_DERIVATIVE_ORDER: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    length: f64,
    points: usize,
}

impl GridSpec {
    pub fn new(length: f64, points: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::NonPositiveLength(length));
        }
        if !points.is_multiple_of(2) {
            return Err(Error::OddPoints(points));
        }
        if points < 8 {
            return Err(Error::TooFewPoints(points));
        }
        Ok(Self { length, points })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.length / self.points as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.node(j)).collect()
    }

    /// Integer mode number of FFT index `j`, in `-N/2+1 ..= N/2`.
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.points as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Wavenumber of FFT index `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.mode(j) as f64 / self.length
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.wavenumber(j)).collect()
    }

    /// `k_{N/2} = pi N / L`.
    pub fn k_max(&self) -> f64 {
        PI * self.points as f64 / self.length
    }

    pub fn nyquist_index(&self) -> usize {
        self.points / 2
    }

    /// The same domain sampled with `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.length, self.points * factor)
    }
}

/// A real periodic grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    samples: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.points() {
            return Err(Error::SizeMismatch {
                expected: grid.points(),
                actual: samples.len(),
            });
        }
        if let Some(j) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {j} = {}", samples[j])));
        }
        Ok(Self { grid, samples })
    }

    /// Builds a field without the finiteness scan; used on solver hot paths
    /// where blow-up is monitored separately.
    pub(crate) fn from_raw(grid: GridSpec, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), grid.points());
        Self { grid, samples }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            samples: grid.nodes().into_iter().map(f).collect(),
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            samples: vec![value; grid.points()],
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L2 norm `sqrt(h sum |u_j|^2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.samples.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Field {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Pointwise product without dealiasing.
    pub fn pointwise(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Pointwise product followed by the two-thirds rule.
    pub fn product(&self, other: &Field) -> Result<Field> {
        let raw = self.pointwise(other)?;
        Ok(inverse(&dealias(&forward(&raw))))
    }

    pub fn scale(&self, factor: f64) -> Field {
        self.map(|v| v * factor)
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Trigonometric interpolation onto a grid with `factor` times as many
    /// points. The Nyquist coefficient is split evenly between `+-k_max`.
    pub fn upsample(&self, factor: usize) -> Result<Field> {
        if factor == 1 {
            return Ok(self.clone());
        }
        let fine = self.grid.refined(factor)?;
        let spec = forward(self);
        let n = self.grid.points();
        let m = fine.points();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..n {
            let mode = self.grid.mode(j);
            if j == self.grid.nyquist_index() {
                let half = spec.coeffs[j] * 0.5;
                coeffs[n / 2] += half;
                coeffs[m - n / 2] += half;
            } else {
                coeffs[mode.rem_euclid(m as i64) as usize] = spec.coeffs[j];
            }
        }
        Ok(inverse(&Spectrum { grid: fine, coeffs }))
    }

    /// Spectral restriction onto a coarser grid of the same length, keeping
    /// only modes with `|mode| < coarse.points / 2`.
    pub fn restrict(&self, coarse: GridSpec) -> Result<Field> {
        if coarse.length() != self.grid.length()
            || !self.grid.points().is_multiple_of(coarse.points())
        {
            return Err(Error::GridMismatch);
        }
        let spec = forward(self);
        let n = coarse.points();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (j, c) in spec.coeffs.iter().enumerate() {
            let mode = self.grid.mode(j);
            if mode.unsigned_abs() < (n / 2) as u64 {
                coeffs[mode.rem_euclid(n as i64) as usize] = *c;
            }
        }
        Ok(inverse(&Spectrum {
            grid: coarse,
            coeffs,
        }))
    }

    /// Writes the snapshot CSV (`x,value`, one row per node).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_csv_to(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "x,value")?;
        for (x, v) in self.grid.nodes().iter().zip(&self.samples) {
            writeln!(out, "{x},{v}")?;
        }
        Ok(())
    }

    /// Reads a snapshot CSV back onto `grid`.
    pub fn read_csv(grid: GridSpec, path: &Path) -> Result<Field> {
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut samples = Vec::with_capacity(grid.points());
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line.trim() != "x,value" {
                    return Err(Error::Config(format!("bad snapshot header '{line}'")));
                }
                continue;
            }
            let value = line
                .split(',')
                .nth(1)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Config(format!("bad snapshot row {i}: '{line}'")))?;
            samples.push(value);
        }
        Field::new(grid, samples)
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a + b)
            .expect("grid mismatch in field addition")
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a - b)
            .expect("grid mismatch in field subtraction")
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scale(rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale(-1.0)
    }
}

/// Fourier coefficients of a field, FFT ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: GridSpec,
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.points() {
            return Err(Error::SizeMismatch {
                expected: grid.points(),
                actual: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    /// Coefficient of integer mode `mode` (`-N/2 < mode <= N/2`).
    pub fn coefficient(&self, mode: i64) -> Complex64 {
        let n = self.grid.points() as i64;
        self.coeffs[mode.rem_euclid(n) as usize]
    }

    /// Largest relative deviation from `c_{-k} = conj(c_k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.coeffs.len();
        let scale = self
            .coeffs
            .iter()
            .fold(0.0f64, |m, c| m.max(c.norm()))
            .max(f64::MIN_POSITIVE);
        (1..n)
            .map(|j| (self.coeffs[j] - self.coeffs[n - j].conj()).norm())
            .fold(self.coeffs[0].im.abs(), f64::max)
            / scale
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward transform of raw samples to normalized coefficients.
pub(crate) fn fft_forward(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(&mut buf);
    let inv_n = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= inv_n);
    buf
}

/// Inverse transform of normalized coefficients; returns the real part.
pub(crate) fn fft_inverse(coeffs: &[Complex64]) -> Vec<f64> {
    let n = coeffs.len();
    let mut buf = coeffs.to_vec();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    fft.process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

pub fn forward(field: &Field) -> Spectrum {
    Spectrum {
        grid: field.grid,
        coeffs: fft_forward(&field.samples),
    }
}

pub fn inverse(spec: &Spectrum) -> Field {
    Field {
        grid: spec.grid,
        samples: fft_inverse(&spec.coeffs),
    }
}

/// Checked transform pair entry points for data of external origin.
pub fn forward_checked(grid: GridSpec, samples: &[f64]) -> Result<Spectrum> {
    let field = Field::new(grid, samples.to_vec())?;
    Ok(forward(&field))
}

pub fn inverse_checked(spec: &Spectrum) -> Result<Field> {
    if spec.coeffs.len() != spec.grid.points() {
        return Err(Error::SizeMismatch {
            expected: spec.grid.points(),
            actual: spec.coeffs.len(),
        });
    }
    Ok(inverse(spec))
}

/// Multiplier `(ik)^order` for FFT index `j`, with the Nyquist mode dropped
/// for odd orders so real fields stay real.
pub(crate) fn derivative_multiplier(grid: &GridSpec, j: usize, order: u32) -> Complex64 {
    if order % 2 == 1 && j == grid.nyquist_index() {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, grid.wavenumber(j)).powu(order)
}

pub(crate) fn spectral_derivative(
    grid: &GridSpec,
    coeffs: &[Complex64],
    order: u32,
) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| c * derivative_multiplier(grid, j, order))
        .collect()
}

pub fn derivative(field: &Field, order: u32) -> Result<Field> {
    if order > MAX_DERIVATIVE_ORDER {
        return Err(Error::DerivativeOrder(order));
    }
    if order == 0 {
        return Ok(field.clone());
    }
    let coeffs = spectral_derivative(&field.grid, &fft_forward(&field.samples), order);
    Ok(Field {
        grid: field.grid,
        samples: fft_inverse(&coeffs),
    })
}

/// Multiplies every Fourier coefficient by the real symbol `sigma(k)`.
pub fn apply_symbol(field: &Field, sigma: impl Fn(f64) -> f64) -> Result<Field> {
    let grid = field.grid;
    let mut coeffs = fft_forward(&field.samples);
    for (j, c) in coeffs.iter_mut().enumerate() {
        let k = grid.wavenumber(j);
        let s = sigma(k);
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("symbol value {s} at k = {k}")));
        }
        *c *= s;
    }
    Ok(Field {
        grid,
        samples: fft_inverse(&coeffs),
    })
}

fn check_sobolev_index(s: f64) -> Result<()> {
    if !(-4.0..=12.0).contains(&s) {
        return Err(Error::SobolevIndex(s));
    }
    Ok(())
}

/// `L sum_k (1 + k^2)^s |c_k|^2`.
pub(crate) fn sobolev_norm_sq_spectral(grid: &GridSpec, coeffs: &[Complex64], s: f64) -> f64 {
    grid.length()
        * coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let k = grid.wavenumber(j);
                (1.0 + k * k).powf(s) * c.norm_sqr()
            })
            .sum::<f64>()
}

pub fn sobolev_norm(field: &Field, s: f64) -> Result<f64> {
    check_sobolev_index(s)?;
    Ok(sobolev_norm_sq_spectral(&field.grid, &fft_forward(&field.samples), s).sqrt())
}

/// `L sum_k (1 + k^2)^s Re(c_k conj(d_k))`, the inner product behind `<Lambda^s u, Lambda^s v>`.
pub fn sobolev_inner(u: &Field, v: &Field, s: f64) -> Result<f64> {
    check_sobolev_index(s)?;
    u.check_same_grid(v)?;
    let grid = u.grid;
    let cu = fft_forward(&u.samples);
    let cv = fft_forward(&v.samples);
    Ok(grid.length()
        * cu.iter()
            .zip(&cv)
            .enumerate()
            .map(|(j, (a, b))| {
                let k = grid.wavenumber(j);
                (1.0 + k * k).powf(s) * (a * b.conj()).re
            })
            .sum::<f64>())
}

/// `sqrt(|f|_{H^s}^2 + delta^2 |f_x|_{H^s}^2)`.
pub fn xnorm(field: &Field, s: f64, delta: f64) -> Result<f64> {
    check_sobolev_index(s)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} not in (0, 1]"
        )));
    }
    let grid = field.grid;
    let coeffs = fft_forward(&field.samples);
    let dx = spectral_derivative(&grid, &coeffs, 1);
    let a = sobolev_norm_sq_spectral(&grid, &coeffs, s);
    let b = sobolev_norm_sq_spectral(&grid, &dx, s);
    Ok((a + delta * delta * b).sqrt())
}

/// True when FFT index `j` survives the two-thirds rule.
pub(crate) fn is_resolved(grid: &GridSpec, j: usize) -> bool {
    let cutoff = 2.0 / 3.0 * (grid.points() / 2) as f64;
    (grid.mode(j).abs() as f64) <= cutoff
}

pub(crate) fn dealias_in_place(grid: &GridSpec, coeffs: &mut [Complex64]) {
    for (j, c) in coeffs.iter_mut().enumerate() {
        if !is_resolved(grid, j) {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Zeroes every mode with `|k| > (2/3) k_max`.
pub fn dealias(spec: &Spectrum) -> Spectrum {
    let mut coeffs = spec.coeffs.clone();
    dealias_in_place(&spec.grid, &mut coeffs);
    Spectrum {
        grid: spec.grid,
        coeffs,
    }
}

pub fn default_mean_tolerance(field: &Field) -> f64 {
    1e-8 * field.l2_norm() + 1e-14
}

/// Zero-mean periodic antiderivative, with the default mean tolerance.
pub fn antiderivative(field: &Field) -> Result<Field> {
    antiderivative_with_tolerance(field, default_mean_tolerance(field))
}

pub fn antiderivative_with_tolerance(field: &Field, tolerance: f64) -> Result<Field> {
    let mean = field.mean();
    if mean.abs() > tolerance {
        return Err(Error::NonZeroMean { mean, tolerance });
    }
    let grid = field.grid;
    let mut coeffs = fft_forward(&field.samples);
    for (j, c) in coeffs.iter_mut().enumerate() {
        if j == 0 || j == grid.nyquist_index() {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c /= Complex64::new(0.0, grid.wavenumber(j));
        }
    }
    Ok(Field {
        grid,
        samples: fft_inverse(&coeffs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(l: f64, n: usize) -> GridSpec {
        GridSpec::new(l, n).unwrap()
    }

    fn pseudo_random(grid: GridSpec, seed: u64) -> Field {
        let mut state = seed;
        let samples = (0..grid.points())
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect();
        Field::new(grid, samples).unwrap()
    }

    #[test]
    fn make_grid_small() {
        let g = grid(2.0 * PI, 8);
        let nodes = g.nodes();
        for (j, x) in nodes.iter().enumerate() {
            assert!((x - j as f64 * PI / 4.0).abs() < 1e-15);
        }
        let mut ks: Vec<i64> = (0..8).map(|j| g.wavenumber(j).round() as i64).collect();
        ks.sort();
        assert_eq!(ks, vec![-3, -2, -1, 0, 1, 2, 3, 4]);
        assert_eq!(g.wavenumbers().iter().filter(|k| **k == 0.0).count(), 1);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(matches!(
            GridSpec::new(2.0 * PI, 7),
            Err(Error::OddPoints(7))
        ));
        assert!(matches!(
            GridSpec::new(2.0 * PI, 6),
            Err(Error::TooFewPoints(6))
        ));
        assert!(matches!(
            GridSpec::new(0.0, 16),
            Err(Error::NonPositiveLength(_))
        ));
        assert!(matches!(
            GridSpec::new(-1.0, 16),
            Err(Error::NonPositiveLength(_))
        ));
        assert_eq!(
            GridSpec::new(2.0 * PI, 7).unwrap_err().to_string(),
            "N must be even, got 7"
        );
    }

    #[test]
    fn k_max_of_default_grid() {
        let g = grid(64.0 * PI, 1024);
        assert!((g.k_max() - 16.0).abs() < 1e-12);
        assert!((g.wavenumber(g.nyquist_index()) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn forward_of_cosine_and_constant() {
        let g = grid(2.0 * PI, 64);
        let spec = forward(&Field::from_fn(g, f64::cos));
        for j in 0..64 {
            let c = spec.coeffs[j];
            if g.mode(j).abs() == 1 {
                assert!((c - Complex64::new(0.5, 0.0)).norm() < 1e-14);
            } else {
                assert!(c.norm() < 1e-13);
            }
        }
        let spec = forward(&Field::constant(g, 1.0));
        assert!((spec.coeffs[0] - 1.0).norm() < 1e-15);
        assert!(spec.coeffs[1..].iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = grid(3.7, 128);
        let u = pseudo_random(g, 7);
        let spec = forward(&u);
        let back = inverse(&spec);
        let scale = u.max_abs();
        for (a, b) in u.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
        let lhs: f64 = u.samples().iter().map(|v| v * v).sum::<f64>() * g.spacing();
        let rhs: f64 = g.length() * spec.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs);
        assert!(spec.hermitian_defect() < 1e-12);
    }

    #[test]
    fn size_mismatch_is_reported() {
        let g = grid(1.0, 16);
        assert!(matches!(
            forward_checked(g, &[0.0; 15]),
            Err(Error::SizeMismatch {
                expected: 16,
                actual: 15
            })
        ));
        let spec = Spectrum {
            grid: g,
            coeffs: vec![Complex64::new(0.0, 0.0); 3],
        };
        assert!(inverse_checked(&spec).is_err());
        assert!(Spectrum::new(g, vec![Complex64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn derivative_examples() {
        let g = grid(2.0 * PI, 64);
        let d = derivative(&Field::from_fn(g, f64::sin), 1).unwrap();
        let expected = Field::from_fn(g, f64::cos);
        assert!((&d - &expected).max_abs() < 1e-12);
        // coarse grid: roundoff in unresolved modes is amplified by k^3
        let g = grid(2.0 * PI, 16);
        let d3 = derivative(&Field::from_fn(g, |x| (2.0 * x).sin()), 3).unwrap();
        let expected = Field::from_fn(g, |x| -8.0 * (2.0 * x).cos());
        assert!((&d3 - &expected).max_abs() < 1e-12);
        assert!(matches!(
            derivative(&expected, 9),
            Err(Error::DerivativeOrder(9))
        ));
    }

    #[test]
    fn apply_symbol_examples() {
        let g = grid(2.0 * PI, 32);
        let c2 = Field::from_fn(g, |x| (2.0 * x).cos());
        assert!((&apply_symbol(&c2, |_| 1.0).unwrap() - &c2).max_abs() < 1e-14);
        let lap = apply_symbol(&c2, |k| -k * k).unwrap();
        assert!((&lap - &(&c2 * -4.0)).max_abs() < 1e-12);
        let c1 = Field::from_fn(g, f64::cos);
        let smoothed = apply_symbol(&c1, |k| 1.0 / (1.0 + k * k)).unwrap();
        assert!((&smoothed - &(&c1 * 0.5)).max_abs() < 1e-14);
        assert!(matches!(
            apply_symbol(&c1, |k| 1.0 / k),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn sobolev_norm_examples() {
        let g = grid(2.0 * PI, 256);
        let s1 = Field::from_fn(g, f64::sin);
        assert!((sobolev_norm(&s1, 0.0).unwrap() - PI.sqrt()).abs() < 1e-12);
        assert!((sobolev_norm(&s1, 1.0).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-12);
        let s2 = Field::from_fn(g, |x| (2.0 * x).sin());
        assert!((sobolev_norm(&s2, 2.0).unwrap() - 5.0 * PI.sqrt()).abs() < 1e-11);
        assert!((sobolev_norm(&s1, 0.0).unwrap() - s1.l2_norm()).abs() < 1e-12);
        assert!(matches!(
            sobolev_norm(&s1, 13.0),
            Err(Error::SobolevIndex(_))
        ));
    }

    #[test]
    fn sobolev_inner_examples() {
        let g = grid(2.0 * PI, 64);
        let s = Field::from_fn(g, f64::sin);
        let c = Field::from_fn(g, f64::cos);
        for order in [-2.0, 0.0, 1.5, 4.0] {
            assert!(sobolev_inner(&s, &c, order).unwrap().abs() < 1e-12);
        }
        assert!((sobolev_inner(&s, &s, 1.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        let other = Field::zeros(grid(2.0 * PI, 32));
        assert!(matches!(
            sobolev_inner(&s, &other, 0.0),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn xnorm_examples() {
        let g = grid(2.0 * PI, 64);
        let s = Field::from_fn(g, f64::sin);
        assert!((xnorm(&s, 0.0, 1.0).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-12);
        let plain = sobolev_norm(&s, 2.0).unwrap();
        assert!(xnorm(&s, 2.0, 0.3).unwrap() >= plain);
        assert!(xnorm(&s, 0.0, 0.0).is_err());
    }

    #[test]
    fn dealias_examples() {
        let g = grid(2.0 * PI, 48);
        let banded = Field::from_fn(g, |x| (16.0 * x).cos() + (3.0 * x).sin());
        let spec = forward(&banded);
        let out = dealias(&spec);
        for (a, b) in out.coeffs.iter().zip(&spec.coeffs) {
            assert!((a - b).norm() < 1e-14);
        }
        assert_eq!(dealias(&out), out);
        let top = forward(&Field::from_fn(g, |x| (24.0 * x).cos()));
        let cut = dealias(&top);
        assert_eq!(cut.coeffs[24].norm(), 0.0);
        assert!(inverse(&cut).max_abs() < 1e-14);
    }

    #[test]
    fn antiderivative_examples() {
        let g = grid(2.0 * PI, 64);
        let a = antiderivative(&Field::from_fn(g, f64::cos)).unwrap();
        assert!((&a - &Field::from_fn(g, f64::sin)).max_abs() < 1e-14);
        let z = antiderivative(&Field::zeros(g)).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let f = Field::from_fn(g, |x| (3.0 * x).cos() + (5.0 * x).sin());
        let expected = Field::from_fn(g, |x| (3.0 * x).sin() / 3.0 - (5.0 * x).cos() / 5.0);
        assert!((&antiderivative(&f).unwrap() - &expected).max_abs() < 1e-14);
        let shifted = f.map(|v| v + 0.1);
        assert!(matches!(
            antiderivative(&shifted),
            Err(Error::NonZeroMean { .. })
        ));
    }

    #[test]
    fn upsample_then_restrict_is_identity() {
        let g = grid(20.0, 128);
        let u = Field::from_fn(g, |x| (-(x - 10.0).powi(2)).exp());
        let fine = u.upsample(2).unwrap();
        assert_eq!(fine.grid().points(), 256);
        for j in 0..128 {
            assert!((fine.samples()[2 * j] - u.samples()[j]).abs() < 1e-13);
        }
        let back = fine.restrict(g).unwrap();
        // restriction drops the Nyquist mode, which is ~1e-30 here
        assert!((&back - &u).max_abs() < 1e-13);
    }

    #[test]
    fn snapshot_csv_round_trip() {
        let g = grid(2.0 * PI, 16);
        let u = Field::from_fn(g, |x| x.sin() + 0.25);
        let dir = std::env::temp_dir().join(format!("longwave-grid-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("u.csv");
        u.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,value\n0,0.25\n"));
        assert_eq!(text.lines().count(), 17);
        assert_eq!(Field::read_csv(g, &path).unwrap(), u);
        std::fs::remove_dir_all(&dir).ok();
    }
}
