//! Residuals of unidirectional solutions inserted into the bidirectional
//! equations, their explicit potentials `F` (with `f = F_x`), and scaling scans.
//!
//! Everything here is evaluated on a grid refined by two with untruncated
//! products and then projected onto the modes `|k| < k_max` of the input grid.
//! Every expression is at most cubic in `w`, so the projected result is free of
//! aliasing and `D_x F = f` holds to roundoff rather than to truncation error.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::grid::{
    derivative, fft_forward, fft_inverse, sobolev_norm, spectral_derivative, Field, GridSpec,
};
use crate::kernels::{apply_m_delta, Kernel};
use crate::trajectory::StepOptions;
use crate::unidirectional::{solve_unidirectional, KappaModel, ModelOperator, Products};

/// `w`, `w_t`, `w_tt` on the refined grid.
struct Fine {
    coarse: GridSpec,
    grid: GridSpec,
    w: Vec<Complex64>,
    wt: Vec<Complex64>,
    wtt: Vec<Complex64>,
}

impl Fine {
    fn new(w: &Field, model: &KappaModel, epsilon: f64, delta: f64) -> Result<Self> {
        let coarse = w.grid();
        let up = w.upsample(2)?;
        let grid = up.grid();
        let op = ModelOperator::new(model, epsilon, delta, grid, Products::Exact)?;
        let w_hat = fft_forward(up.samples());
        let wt = op.rate(&w_hat);
        let wtt = op.rate_derivative(&w_hat, &wt);
        Ok(Self {
            coarse,
            grid,
            w: w_hat,
            wt,
            wtt,
        })
    }

    fn d(&self, hat: &[Complex64], order: u32) -> Vec<f64> {
        fft_inverse(&spectral_derivative(&self.grid, hat, order))
    }

    /// x-derivatives `0..=max` of `w`.
    fn w(&self, max: u32) -> Vec<Vec<f64>> {
        (0..=max).map(|j| self.d(&self.w, j)).collect()
    }

    fn wt(&self, max: u32) -> Vec<Vec<f64>> {
        (0..=max).map(|j| self.d(&self.wt, j)).collect()
    }

    fn dx(&self, v: &[f64], order: u32) -> Vec<f64> {
        self.d(&fft_forward(v), order)
    }

    fn project(&self, v: Vec<f64>) -> Result<Field> {
        Field::from_raw(self.grid, v).restrict(self.coarse)
    }
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// `sum c_i v_i`.
fn comb(terms: &[(f64, &[f64])]) -> Vec<f64> {
    let n = terms[0].1.len();
    (0..n)
        .map(|i| terms.iter().map(|(c, v)| c * v[i]).sum())
        .collect()
}

fn remove_mean(f: Field) -> Field {
    let m = f.mean();
    f.map(|v| v - m)
}

/// `f = w_tt - w_xx - d^2 w_xxtt - e (w^2)_xx` with `w_t`, `w_tt` from the model.
pub fn residual_direct(w: &Field, model: &KappaModel, epsilon: f64, delta: f64) -> Result<Field> {
    let fine = Fine::new(w, model, epsilon, delta)?;
    let wtt = fine.d(&fine.wtt, 0);
    let wtt_xx = fine.d(&fine.wtt, 2);
    let wxx = fine.d(&fine.w, 2);
    let w0 = fine.d(&fine.w, 0);
    let sq_xx = fine.dx(&mul(&w0, &w0), 2);
    let d2 = delta * delta;
    fine.project(comb(&[
        (1.0, &wtt),
        (-1.0, &wxx),
        (-d2, &wtt_xx),
        (-epsilon, &sq_xx),
    ]))
}

/// Residual of the nonlocal equation, `(1/beta_hat(d k)) w_tt - (w + e w^2)_xx`.
pub fn residual_direct_nonlocal(
    w: &Field,
    model: &KappaModel,
    kernel: &Kernel,
    epsilon: f64,
    delta: f64,
) -> Result<Field> {
    let fine = Fine::new(w, model, epsilon, delta)?;
    let w0 = fine.d(&fine.w, 0);
    let rhs = fine.project(fine.dx(&comb(&[(1.0, &w0), (epsilon, &mul(&w0, &w0))]), 2))?;
    let wtt = fine.project(fine.d(&fine.wtt, 0))?;
    let lhs = crate::grid::apply_symbol(&wtt, |k| kernel.symbol.reciprocal(delta * k))?;
    Ok(&lhs - &rhs)
}

/// Camassa-Holm potential.
pub fn ch_potential(w: &Field, epsilon: f64, delta: f64) -> Result<Field> {
    let fine = Fine::new(w, &KappaModel::camassa_holm(), epsilon, delta)?;
    let (e, d2) = (epsilon, delta * delta);
    let d4 = d2 * d2;
    let w = fine.w(5);
    let wt = fine.wt(4);
    let wtt_xxx = fine.d(&fine.wtt, 3);

    // P = w_x^2 + 2 w w_xx and its time derivative
    let p = comb(&[(1.0, &mul(&w[1], &w[1])), (2.0, &mul(&w[0], &w[2]))]);
    let p1 = fine.dx(&p, 1);
    let p2 = fine.dx(&p, 2);
    let p3 = fine.dx(&p, 3);
    let pt = comb(&[
        (2.0, &mul(&w[1], &wt[1])),
        (2.0, &mul(&wt[0], &w[2])),
        (2.0, &mul(&w[0], &wt[2])),
    ]);
    let pt_xx = fine.dx(&pt, 2);
    let sq = mul(&w[0], &w[0]);
    let (s1, s2, s3) = (fine.dx(&sq, 1), fine.dx(&sq, 2), fine.dx(&sq, 3));
    // G = 3 w_xxx + 5 w_xxt
    let g = comb(&[(3.0, &w[3]), (5.0, &wt[2])]);
    let g1 = comb(&[(3.0, &w[4]), (5.0, &wt[3])]);
    let g2 = comb(&[(3.0, &w[5]), (5.0, &wt[4])]);

    let cubic = mul(&sq, &w[1]);
    // every e^2 term is cubic in w; the leading one is w (w_x^2 + 2 w w_xx)_x
    let t2 = comb(&[
        (3.0, &mul(&w[0], &p1)),
        (-3.0, &mul(&w[0], &s3)),
        (2.0, &mul(&w[2], &s1)),
        (1.0, &mul(&w[1], &s2)),
    ]);
    let t3 = comb(&[(5.0, &wtt_xxx), (-12.0, &wt[4]), (-9.0, &w[5])]);
    let t4 = comb(&[
        (3.0, &pt_xx),
        (-9.0, &p3),
        (-6.0, &mul(&w[0], &g2)),
        (4.0, &mul(&w[2], &g)),
        (2.0, &mul(&w[1], &g1)),
    ]);
    let t5 = comb(&[
        (-9.0, &mul(&w[0], &p3)),
        (6.0, &mul(&w[2], &p1)),
        (3.0, &mul(&w[1], &p2)),
    ]);
    let f = comb(&[
        (e * e, &cubic),
        (-e * e * d2 / 8.0, &t2),
        (d4 / 16.0, &t3),
        (e * d4 / 32.0, &t4),
        (e * e * d4 / 32.0, &t5),
    ]);
    Ok(remove_mean(fine.project(f)?))
}

/// BBM potential.
pub fn bbm_potential(w: &Field, epsilon: f64, delta: f64) -> Result<Field> {
    let fine = Fine::new(w, &KappaModel::bbm(), epsilon, delta)?;
    let (e, d2) = (epsilon, delta * delta);
    let w = fine.w(2);
    let wt = fine.wt(2);
    let cubic = mul(&mul(&w[0], &w[0]), &w[1]);
    let mixed = comb(&[
        (6.0, &mul(&w[0], &wt[2])),
        (2.0, &mul(&w[1], &wt[1])),
        (1.0, &mul(&wt[0], &w[2])),
        (-9.0, &mul(&w[1], &w[2])),
    ]);
    let inner: Vec<Complex64> = (0..fine.w.len())
        .map(|j| fine.wtt[j] * 5.0 - spectral_derivative(&fine.grid, &fine.wt, 1)[j] * 12.0)
        .collect();
    let lin = comb(&[(1.0, &fine.d(&inner, 3)), (-9.0, &fine.d(&fine.w, 5))]);
    let f = comb(&[
        (e * e, &cubic),
        (-e * d2 / 4.0, &mixed),
        (d2 * d2 / 16.0, &lin),
    ]);
    Ok(remove_mean(fine.project(f)?))
}

/// KdV potential.
pub fn kdv_potential(w: &Field, epsilon: f64, delta: f64) -> Result<Field> {
    let fine = Fine::new(w, &KappaModel::kdv(), epsilon, delta)?;
    let (e, d2) = (epsilon, delta * delta);
    let w = fine.w(4);
    let wt = fine.wt(3);
    let inside = comb(&[
        (e * e / 3.0, &mul(&mul(&w[0], &w[0]), &w[0])),
        (-0.75 * e * d2, &mul(&w[1], &w[1])),
        (e * d2, &mul(&wt[0], &w[1])),
        (e * d2, &mul(&w[0], &wt[1])),
        (-0.25 * d2 * d2, &w[4]),
        (0.5 * d2 * d2, &wt[3]),
    ]);
    Ok(remove_mean(fine.project(fine.dx(&inside, 1))?))
}

/// Which explicit potential belongs to `model`.
pub fn potential(w: &Field, model: &KappaModel, epsilon: f64, delta: f64) -> Result<Field> {
    if model.kappa == KappaModel::camassa_holm().kappa {
        ch_potential(w, epsilon, delta)
    } else if model.kappa == KappaModel::bbm().kappa {
        bbm_potential(w, epsilon, delta)
    } else if model.kappa == KappaModel::kdv().kappa {
        kdv_potential(w, epsilon, delta)
    } else {
        Err(Error::InvalidParameter(format!(
            "no explicit potential for model '{}'; available for ch, bbm, kdv",
            model.name
        )))
    }
}

/// `d^4 D_x^3 M_delta w_tt`; added to the base potential for nonlocal targets.
pub fn nonlocal_correction(
    w: &Field,
    model: &KappaModel,
    kernel: &Kernel,
    epsilon: f64,
    delta: f64,
) -> Result<Field> {
    let fine = Fine::new(w, model, epsilon, delta)?;
    let wtt = fine.project(fine.d(&fine.wtt, 0))?;
    let m = apply_m_delta(&wtt, kernel, delta)?;
    Ok(derivative(&m, 3)?.scale(delta.powi(4)))
}

/// `(||D_x^3 D_t^2 w||_{H^s}, ||w_t||_{H^{s+4}})`.
pub fn mixed_derivative_bound(
    w: &Field,
    model: &KappaModel,
    epsilon: f64,
    delta: f64,
    s: f64,
) -> Result<(f64, f64)> {
    let fine = Fine::new(w, model, epsilon, delta)?;
    let wtt_xxx = fine.project(fine.d(&fine.wtt, 3))?;
    let wt = fine.project(fine.d(&fine.wt, 0))?;
    Ok((sobolev_norm(&wtt_xxx, s)?, sobolev_norm(&wt, s + 4.0)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub epsilon: f64,
    pub delta: f64,
    pub t: f64,
    pub s: f64,
    pub norm_f: f64,
    pub model: String,
    pub kernel: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanFit {
    pub t: f64,
    pub path: String,
    /// `None` when the norms sit at the noise floor.
    pub fit: Option<LineFit>,
    /// Smallest `C` with `||F|| <= C (e^2 + d^4)` (or `C e^2` on the KdV path).
    pub constant: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub samples: Vec<ResidualSample>,
    pub fits: Vec<ScanFit>,
}

/// Shape of a parameter path.
pub fn path_label(params: &[(f64, f64)]) -> &'static str {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    if params.iter().all(|&(e, d)| close(e, d)) {
        "epsilon=delta"
    } else if params.iter().all(|&(e, d)| close(e, d * d)) {
        "epsilon=delta^2"
    } else {
        "custom"
    }
}

/// Checks `0 < epsilon <= delta <= 1`.
pub fn check_regime(epsilon: f64, delta: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= delta && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Regime { epsilon, delta })
    }
}

/// Norm floor below which scan fits are reported as degenerate.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Solves the model from `w0` for every `(epsilon, delta)`, evaluates `||F||_{H^s}`
/// at each sample time, and fits `log ||F||` against `log epsilon` per time.
#[allow(clippy::too_many_arguments)]
pub fn residual_scan(
    w0: &Field,
    model: &KappaModel,
    kernel: Option<&Kernel>,
    s: f64,
    params: &[(f64, f64)],
    times: &[f64],
    dt: f64,
) -> Result<ScanResult> {
    if params.is_empty() || times.is_empty() {
        return Err(Error::Config(
            "residual scan needs parameters and sample times".into(),
        ));
    }
    for &(e, d) in params {
        check_regime(e, d)?;
    }
    // only t = 0 requested: the datum itself, no solve
    let options = if times.iter().any(|&t| t > 0.0) {
        Some(StepOptions::for_samples(dt, times)?)
    } else {
        None
    };
    let per_point: Vec<Result<Vec<ResidualSample>>> = params
        .par_iter()
        .map(|&(e, d)| {
            let traj = match &options {
                Some(o) => {
                    let traj = solve_unidirectional(w0, model, e, d, o)?;
                    traj.ensure_complete()?;
                    Some(traj)
                }
                None => None,
            };
            times
                .iter()
                .map(|&t| {
                    let w = match &traj {
                        Some(traj) => {
                            let idx = traj.index_at(t).ok_or_else(|| {
                                Error::InvalidParameter(format!("time {t} not on the step grid"))
                            })?;
                            &traj.states[idx]
                        }
                        None => w0,
                    };
                    let mut f = potential(w, model, e, d)?;
                    if let Some(k) = kernel {
                        f = &f + &nonlocal_correction(w, model, k, e, d)?;
                    }
                    Ok(ResidualSample {
                        epsilon: e,
                        delta: d,
                        t,
                        s,
                        norm_f: sobolev_norm(&f, s)?,
                        model: model.name.clone(),
                        kernel: kernel.map(|k| k.name.clone()),
                    })
                })
                .collect()
        })
        .collect();
    let mut samples = Vec::new();
    for r in per_point {
        samples.extend(r?);
    }
    let path = path_label(params);
    let kdv_law = path == "epsilon=delta^2";
    let fits = times
        .iter()
        .map(|&t| {
            let rows: Vec<&ResidualSample> = samples.iter().filter(|r| r.t == t).collect();
            let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
            let norms: Vec<f64> = rows.iter().map(|r| r.norm_f).collect();
            let constant = rows
                .iter()
                .map(|r| {
                    let scale = if kdv_law {
                        r.epsilon.powi(2)
                    } else {
                        r.epsilon.powi(2) + r.delta.powi(4)
                    };
                    r.norm_f / scale
                })
                .fold(0.0, f64::max);
            let (fit, status) = match loglog_fit(&eps, &norms, NOISE_FLOOR) {
                Ok(f) => (Some(f), "ok".to_string()),
                Err(e) => (None, format!("degenerate: {e}")),
            };
            ScanFit {
                t,
                path: path.into(),
                fit,
                constant,
                status,
            }
        })
        .collect();
    Ok(ScanResult { samples, fits })
}

/// Writes `epsilon,delta,t,s,norm_F` rows.
pub fn write_scan_csv(samples: &[ResidualSample], out: &mut impl std::io::Write) -> Result<()> {
    writeln!(out, "epsilon,delta,t,s,norm_F")?;
    for r in samples {
        writeln!(
            out,
            "{},{},{},{},{:e}",
            r.epsilon, r.delta, r.t, r.s, r.norm_f
        )?;
    }
    Ok(())
}
