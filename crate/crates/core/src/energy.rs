//! Energy functionals of the error `r = u - w` between a bidirectional solution
//! `u` and a unidirectional approximation `w`, with `r = rho_x`.
//!
//! ```text
//! E_s^2   = 1/2 (|rho_t|^2 + d^2 |r_t|^2 + |r|^2) + e <wr, r> + e/2 <r^2, r>
//! E_s,M^2 = E_s^2 + 1/2 d^4 <M_d D_x r_t, D_x r_t>
//! ```
//!
//! with all norms and inner products in `H^s`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    antiderivative_with_tolerance, default_mean_tolerance, derivative, sobolev_inner, sobolev_norm,
    Field, GridSpec,
};
use crate::kernels::{apply_m_delta, check_ellipticity, Kernel};
use crate::unidirectional::{time_derivative, KappaModel};

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorState {
    pub r: Field,
    pub r_t: Field,
    pub rho_t: Field,
    pub w: Field,
    pub epsilon: f64,
    pub delta: f64,
    pub s: f64,
    pub time: f64,
}

/// Builds the error state from `(u, u_t)` and `w` at a common time; `w_t` comes
/// from the model.
#[allow(clippy::too_many_arguments)]
pub fn build_error_state(
    u: &Field,
    u_t: &Field,
    w: &Field,
    model: &KappaModel,
    epsilon: f64,
    delta: f64,
    s: f64,
    time: f64,
) -> Result<ErrorState> {
    u.check_same_grid(w)?;
    u_t.check_same_grid(w)?;
    let w_t = time_derivative(w, model, epsilon, delta)?;
    let r = u - w;
    let r_t = u_t - &w_t;
    // the mean of r_t vanishes analytically; allow roundoff relative to the data
    let tol = default_mean_tolerance(&r_t) + 1e-12 * (u_t.l2_norm() + w_t.l2_norm());
    let rho_t = antiderivative_with_tolerance(&r_t, tol)?;
    Ok(ErrorState {
        r,
        r_t,
        rho_t,
        w: w.clone(),
        epsilon,
        delta,
        s,
        time,
    })
}

impl ErrorState {
    pub fn zero(grid: GridSpec, epsilon: f64, delta: f64, s: f64) -> Self {
        let z = Field::zeros(grid);
        Self {
            r: z.clone(),
            r_t: z.clone(),
            rho_t: z.clone(),
            w: z,
            epsilon,
            delta,
            s,
            time: 0.0,
        }
    }

    /// `|rho_t|^2 + d^2 |r_t|^2 + |r|^2` in `H^s`.
    pub fn quadratic(&self) -> Result<f64> {
        let s = self.s;
        Ok(sobolev_norm(&self.rho_t, s)?.powi(2)
            + self.delta.powi(2) * sobolev_norm(&self.r_t, s)?.powi(2)
            + sobolev_norm(&self.r, s)?.powi(2))
    }

    pub fn norm_r(&self) -> Result<f64> {
        sobolev_norm(&self.r, self.s)
    }
}

fn checked_sqrt(value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value.sqrt())
    } else if value.is_nan() {
        Err(Error::NonFinite("energy".into()))
    } else {
        Err(Error::NegativeEnergy { value })
    }
}

/// `E_s^2`, possibly negative outside the small-amplitude regime.
pub fn energy_squared(state: &ErrorState) -> Result<f64> {
    let s = state.s;
    let e = state.epsilon;
    let wr = state.w.product(&state.r)?;
    let rr = state.r.product(&state.r)?;
    Ok(0.5 * state.quadratic()?
        + e * sobolev_inner(&wr, &state.r, s)?
        + 0.5 * e * sobolev_inner(&rr, &state.r, s)?)
}

pub fn energy_es(state: &ErrorState) -> Result<f64> {
    checked_sqrt(energy_squared(state)?)
}

/// `1/2 d^4 <M_d D_x r_t, D_x r_t>_s`.
fn m_term(state: &ErrorState, kernel: &Kernel) -> Result<f64> {
    let drt = derivative(&state.r_t, 1)?;
    let m = apply_m_delta(&drt, kernel, state.delta)?;
    Ok(0.5 * state.delta.powi(4) * sobolev_inner(&m, &drt, state.s)?)
}

pub fn energy_es_m(state: &ErrorState, kernel: &Kernel) -> Result<f64> {
    checked_sqrt(energy_squared(state)? + m_term(state, kernel)?)
}

/// The plain quadratic energy.
pub fn energy_tilde(state: &ErrorState) -> Result<f64> {
    checked_sqrt(0.5 * state.quadratic()?)
}

/// `(|rho_t|^2 + d^2 |r_t|^2 + d^4 <M D r_t, D r_t>,  |rho_t|^2 + d^2 |r_t|^2)`:
/// the kinetic part of `2 E_s,M^2` and the norm it must dominate up to `1/c2`.
pub fn kinetic_coercivity(state: &ErrorState, kernel: &Kernel) -> Result<(f64, f64)> {
    let s = state.s;
    let base = sobolev_norm(&state.rho_t, s)?.powi(2)
        + state.delta.powi(2) * sobolev_norm(&state.r_t, s)?.powi(2);
    Ok((base + 2.0 * m_term(state, kernel)?, base))
}

/// Per-mode margins of the operator bounds, each of which must be `>= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMargins {
    /// `min_k (1 - 1/(1 + 5/4 d^2 k^2))`
    pub q: f64,
    /// `min_k (4/5 - d^2 k^2/(1 + 5/4 d^2 k^2))`
    pub q_d2: f64,
}

pub fn q_operator_margins(grid: &GridSpec, delta: f64) -> ModeMargins {
    let d2 = delta * delta;
    grid.wavenumbers().into_iter().fold(
        ModeMargins {
            q: f64::INFINITY,
            q_d2: f64::INFINITY,
        },
        |acc, k| {
            let den = 1.0 + 1.25 * d2 * k * k;
            ModeMargins {
                q: acc.q.min(1.0 - 1.0 / den),
                q_d2: acc.q_d2.min(0.8 - d2 * k * k / den),
            }
        },
    )
}

/// Smallest per-mode margin of `1/beta_hat(d k) - (1 + d^2 k^2)/c2` over the grid,
/// with `c2` the upper ellipticity constant measured on the grid's own `d k`;
/// multiplying by the common weight `(1+k^2)^s` does not change the sign.
pub fn coercivity_margin(kernel: &Kernel, grid: &GridSpec, delta: f64) -> Result<(f64, f64)> {
    kernel.validate_on(grid, delta)?;
    let etas: Vec<f64> = grid
        .wavenumbers()
        .iter()
        .map(|k| (delta * k).abs())
        .collect();
    let c2 = check_ellipticity(kernel, &etas)?.c2_est;
    let margin = etas
        .iter()
        .map(|&eta| {
            let lhs = kernel.symbol.reciprocal(eta);
            let rhs = (1.0 + eta * eta) / c2;
            (lhs - rhs) / lhs.max(1.0)
        })
        .fold(f64::INFINITY, f64::min);
    Ok((margin, c2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub e_s: f64,
    pub e_tilde: f64,
    pub norm_r: f64,
    /// `4 E_s^2 - (|rho_t|^2 + d^2 |r_t|^2 + |r|^2)`; nonnegative when positivity holds.
    pub positivity_margin: f64,
}

pub fn energy_sample(state: &ErrorState) -> Result<EnergySample> {
    let e2 = energy_squared(state)?;
    let q = state.quadratic()?;
    Ok(EnergySample {
        t: state.time,
        e_s: checked_sqrt(e2)?,
        e_tilde: (0.5 * q).sqrt(),
        norm_r: state.norm_r()?,
        positivity_margin: 4.0 * e2 - q,
    })
}

/// Writes `t,E_s,E_tilde,norm_r_Hs` rows.
pub fn write_energy_csv(samples: &[EnergySample], out: &mut impl Write) -> Result<()> {
    writeln!(out, "t,E_s,E_tilde,norm_r_Hs")?;
    for e in samples {
        writeln!(out, "{},{:e},{:e},{:e}", e.t, e.e_s, e.e_tilde, e.norm_r)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{exponential_kernel, rational_kernel};
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(2.0 * PI, 64).unwrap()
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let st = ErrorState::zero(grid(), 0.1, 0.1, 1.0);
        assert_eq!(energy_es(&st).unwrap(), 0.0);
        assert_eq!(energy_tilde(&st).unwrap(), 0.0);
        assert_eq!(
            energy_es_m(&st, &rational_kernel(6.0).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn tilde_of_unit_cosine() {
        let g = grid();
        let mut st = ErrorState::zero(g, 0.1, 0.1, 1.0);
        let c = Field::from_fn(g, f64::cos);
        st.r = c.scale(1.0 / sobolev_norm(&c, 1.0).unwrap());
        assert!((energy_tilde(&st).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    fn sample_state(epsilon: f64) -> ErrorState {
        let g = grid();
        let w = Field::from_fn(g, |x| 1.0 + 0.5 * x.cos());
        let r = Field::from_fn(g, |x| 0.01 * (2.0 * x).sin());
        let r_t = Field::from_fn(g, |x| 0.02 * (3.0 * x).cos());
        let rho_t = crate::grid::antiderivative(&r_t).unwrap();
        ErrorState {
            r,
            r_t,
            rho_t,
            w,
            epsilon,
            delta: 0.3,
            s: 1.0,
            time: 0.0,
        }
    }

    #[test]
    fn epsilon_zero_is_quadratic() {
        let st = sample_state(0.0);
        assert_eq!(energy_es(&st).unwrap(), energy_tilde(&st).unwrap());
    }

    #[test]
    fn exponential_kernel_adds_nothing() {
        let st = sample_state(0.1);
        assert_eq!(
            energy_es_m(&st, &exponential_kernel()).unwrap(),
            energy_es(&st).unwrap()
        );
    }

    #[test]
    fn negative_energy_is_reported() {
        let mut st = sample_state(1.0);
        st.w = st.w.scale(-100.0);
        st.r = Field::from_fn(grid(), |x| x.cos());
        assert!(matches!(energy_es(&st), Err(Error::NegativeEnergy { .. })));
    }

    #[test]
    fn q_bounds_hold_per_mode() {
        for delta in [0.05, 0.3, 1.0] {
            let m = q_operator_margins(&GridSpec::new(64.0 * PI, 1024).unwrap(), delta);
            assert!(m.q >= 0.0 && m.q_d2 >= 0.0);
        }
    }

    #[test]
    fn coercivity_chain() {
        let g = GridSpec::new(64.0 * PI, 1024).unwrap();
        let k = rational_kernel(6.0).unwrap();
        let (margin, c2) = coercivity_margin(&k, &g, 0.1).unwrap();
        assert!(margin >= -1e-12 && c2 >= 1.0);
        let st = sample_state(0.1);
        let (lhs, rhs) = kinetic_coercivity(&st, &k).unwrap();
        assert!(lhs >= rhs / c2);
    }
}
