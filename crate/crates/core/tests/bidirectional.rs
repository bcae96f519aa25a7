use std::f64::consts::PI;

use longwave::bidirectional::{
    accel, ib_accel, nonlocal_accel, solve_bidirectional, state_at, Target,
};
use longwave::grid::{Field, GridSpec};
use longwave::kernels::{exponential_kernel, rational_kernel};
use longwave::trajectory::StepOptions;
use longwave::unidirectional::{time_derivative, KappaModel};

fn pseudo_random(g: GridSpec) -> Field {
    let base = 2.0 * PI / g.length();
    Field::from_fn(g, |x| {
        (1..9)
            .map(|m| {
                let m = m as f64;
                ((m * 1.618).sin() * (m * base * x).cos() + (m * 2.9).cos() * (m * base * x).sin())
                    / m
            })
            .sum::<f64>()
    })
}

fn bump(g: GridSpec) -> Field {
    let c = g.length() / 2.0;
    Field::from_fn(g, |x| 1.0 / (x - c).cosh().powi(2))
}

#[test]
fn ib_acceleration_matches_exponential_kernel() {
    let g = GridSpec::new(2.0 * PI, 128).unwrap();
    let u = pseudo_random(g);
    let a = ib_accel(&u, 0.3, 0.6).unwrap();
    let b = nonlocal_accel(&u, &exponential_kernel(), 0.3, 0.6).unwrap();
    assert!((&a - &b).max_abs() < 1e-12);
}

#[test]
fn acceleration_examples() {
    let g = GridSpec::new(2.0 * PI, 32).unwrap();
    let c = Field::from_fn(g, f64::cos);
    let a = nonlocal_accel(&c, &exponential_kernel(), 0.0, 1.0).unwrap();
    assert!((&a - &c.scale(-0.5)).max_abs() < 1e-14);
    let k = 3.0;
    let delta = 0.5;
    let c3 = Field::from_fn(g, |x| (k * x).cos());
    let a = ib_accel(&c3, 0.0, delta).unwrap();
    assert!((&a - &c3.scale(-k * k / (1.0 + delta * delta * k * k))).max_abs() < 1e-12);
    assert!(
        ib_accel(&Field::constant(g, 2.0), 0.5, 0.5)
            .unwrap()
            .max_abs()
            < 1e-14
    );
    let zero = accel(
        &Field::zeros(g),
        &Target::Nonlocal(rational_kernel(6.0).unwrap()),
        0.5,
        0.5,
    )
    .unwrap();
    assert_eq!(zero.max_abs(), 0.0);
}

#[test]
fn linear_dispersion_for_rational_kernel() {
    let g = GridSpec::new(2.0 * PI, 32).unwrap();
    let kernel = rational_kernel(6.0).unwrap();
    let delta = 0.5;
    for k in [1.0, 3.0] {
        let u0 = Field::from_fn(g, |x| (k * x).cos());
        let traj = solve_bidirectional(
            &u0,
            &Field::zeros(g),
            &Target::Nonlocal(kernel.clone()),
            0.0,
            delta,
            &StepOptions::new(1e-3, 10.0),
        )
        .unwrap();
        let omega = k * kernel.symbol_at(delta * k).sqrt();
        let exact = u0.scale((omega * traj.final_time()).cos());
        assert!((traj.last() - &exact).max_abs() < 1e-6, "k = {k}");
    }
}

#[test]
fn mean_of_u_is_conserved_with_matched_data() {
    let g = GridSpec::new(32.0 * PI, 256).unwrap();
    let u0 = bump(g);
    let u1 = time_derivative(&u0, &KappaModel::camassa_holm(), 0.2, 0.2).unwrap();
    assert!(u1.mean().abs() < 1e-14);
    for target in [
        Target::ImprovedBoussinesq,
        Target::Nonlocal(rational_kernel(6.0).unwrap()),
    ] {
        let traj = solve_bidirectional(&u0, &u1, &target, 0.2, 0.2, &StepOptions::new(1e-2, 10.0))
            .unwrap();
        for (i, u) in traj.states.iter().enumerate() {
            assert!((u.mean() - u0.mean()).abs() < 1e-10);
            let v = &state_at(&traj, i).unwrap().v;
            assert!(v.mean().abs() < 1e-10);
        }
    }
}

#[test]
fn reversing_velocity_returns_to_the_start() {
    let g = GridSpec::new(32.0 * PI, 256).unwrap();
    let u0 = bump(g);
    let u1 = time_derivative(&u0, &KappaModel::camassa_holm(), 0.3, 0.3).unwrap();
    let target = Target::ImprovedBoussinesq;
    let defect = |dt: f64| {
        let opts = StepOptions::new(dt, 2.0);
        let fwd = solve_bidirectional(&u0, &u1, &target, 0.3, 0.3, &opts).unwrap();
        let end = state_at(&fwd, fwd.states.len() - 1).unwrap();
        let back =
            solve_bidirectional(&end.u, &end.v.scale(-1.0), &target, 0.3, 0.3, &opts).unwrap();
        (back.last() - &u0).max_abs()
    };
    let (coarse, fine) = (defect(0.1), defect(0.05));
    assert!(fine < 1e-5, "{fine}");
    // O(dt^4): halving the step shrinks the defect by about 16
    assert!(coarse / fine > 12.0, "{coarse} {fine}");
}

#[test]
fn exponential_target_reproduces_ib_trajectory() {
    let g = GridSpec::new(32.0 * PI, 256).unwrap();
    let u0 = bump(g);
    let u1 = time_derivative(&u0, &KappaModel::bbm(), 0.1, 0.1).unwrap();
    let opts = StepOptions::new(1e-2, 10.0);
    let a = solve_bidirectional(&u0, &u1, &Target::ImprovedBoussinesq, 0.1, 0.1, &opts).unwrap();
    let b = solve_bidirectional(
        &u0,
        &u1,
        &Target::Nonlocal(exponential_kernel()),
        0.1,
        0.1,
        &opts,
    )
    .unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        assert!((x - y).max_abs() < 1e-10);
    }
}

#[test]
fn large_data_blows_up_and_is_reported() {
    let g = GridSpec::new(32.0 * PI, 256).unwrap();
    // strongly negative data drives the quadratic term to finite-time blow-up
    let u0 = bump(g).scale(-40.0);
    let traj = solve_bidirectional(
        &u0,
        &Field::zeros(g),
        &Target::ImprovedBoussinesq,
        1.0,
        1.0,
        &StepOptions::new(1e-3, 20.0),
    )
    .unwrap();
    let event = traj.blow_up.expect("blow-up event");
    assert!(event.time < 20.0);
    assert!(traj.ensure_complete().is_err());
}
