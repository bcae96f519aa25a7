use std::f64::consts::PI;

use proptest::prelude::*;

use longwave::bidirectional::{accel, Target};
use longwave::config::parse_override;
use longwave::fit::loglog_fit;
use longwave::grid::{antiderivative, derivative, forward, inverse, sobolev_norm, Field, GridSpec};
use longwave::kernels::rational_kernel;
use longwave::unidirectional::{apply_q, kappa_rhs, KappaModel};

const N: usize = 64;

fn grid() -> GridSpec {
    GridSpec::new(2.0 * PI, N).unwrap()
}

/// Smooth periodic field from random low-mode coefficients.
fn smooth() -> impl Strategy<Value = Field> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6).prop_map(|c| {
        Field::from_fn(grid(), |x| {
            c.iter()
                .enumerate()
                .map(|(m, (a, b))| {
                    let k = m as f64;
                    (a * (k * x).cos() + b * (k * x).sin()) / (1.0 + k * k)
                })
                .sum()
        })
    })
}

fn rough() -> impl Strategy<Value = Field> {
    prop::collection::vec(-10.0f64..10.0, N).prop_map(|v| Field::new(grid(), v).unwrap())
}

fn model() -> impl Strategy<Value = KappaModel> {
    prop_oneof![
        Just(KappaModel::camassa_holm()),
        Just(KappaModel::bbm()),
        Just(KappaModel::kdv()),
    ]
}

proptest! {
    #[test]
    fn transform_round_trip(u in rough()) {
        let back = inverse(&forward(&u));
        prop_assert!((&back - &u).max_abs() <= 1e-12 * (1.0 + u.max_abs()));
    }

    #[test]
    fn parseval(u in rough()) {
        let l2 = u.l2_norm().powi(2);
        prop_assert!((sobolev_norm(&u, 0.0).unwrap().powi(2) - l2).abs() <= 1e-12 * (1.0 + l2));
    }

    #[test]
    fn sobolev_norms_increase_with_s(u in rough(), s in 0.0f64..3.0) {
        prop_assert!(sobolev_norm(&u, s).unwrap() <= sobolev_norm(&u, s + 0.5).unwrap() * (1.0 + 1e-14));
    }

    #[test]
    fn derivatives_have_zero_mean_and_invert(u in smooth()) {
        let du = derivative(&u, 1).unwrap();
        prop_assert!(du.mean().abs() < 1e-13);
        let back = antiderivative(&du).unwrap();
        let centred = u.map(|v| v - u.mean());
        prop_assert!((&back - &centred).max_abs() < 1e-12);
    }

    #[test]
    fn model_rates_have_zero_mean(u in smooth(), m in model(), eps in 0.01f64..1.0, r in 0.0f64..1.0) {
        let delta = eps + r * (1.0 - eps);
        let rate = kappa_rhs(&u, &m, eps, delta).unwrap();
        prop_assert!(rate.mean().abs() < 1e-12 * (1.0 + rate.max_abs()));
    }

    #[test]
    fn accelerations_have_zero_mean(u in smooth(), eps in 0.0f64..1.0, delta in 0.05f64..1.0) {
        for target in [Target::ImprovedBoussinesq, Target::Nonlocal(rational_kernel(6.0).unwrap())] {
            let a = accel(&u, &target, eps, delta).unwrap();
            prop_assert!(a.mean().abs() < 1e-12 * (1.0 + a.max_abs()));
        }
    }

    #[test]
    fn q_is_a_contraction(u in rough(), delta in 0.01f64..=1.0) {
        let q = apply_q(&u, delta).unwrap();
        prop_assert!(sobolev_norm(&q, 1.0).unwrap() <= sobolev_norm(&u, 1.0).unwrap() * (1.0 + 1e-14));
    }

    #[test]
    fn exact_power_laws_are_recovered(p in -3.0f64..3.0, c in 0.1f64..10.0) {
        let x = [0.4, 0.2, 0.1, 0.05];
        let y: Vec<f64> = x.iter().map(|v: &f64| c * v.powf(p)).collect();
        let fit = loglog_fit(&x, &y, 1e-300).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-10);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-10);
    }

    #[test]
    fn numeric_overrides_parse_as_numbers(v in -1e6f64..1e6) {
        let (k, value) = parse_override(&format!("grid.L={v:?}")).unwrap();
        prop_assert_eq!(k, "grid.L");
        prop_assert_eq!(value.as_float(), Some(v));
    }
}
