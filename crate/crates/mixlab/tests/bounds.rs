use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI, SQRT_2};

use mixlab::bounds::{
    alpha_of_r, gap_delta, integrate_equality_case, integrate_equality_rk4, new_bound, ode_rhs,
    old_bound, s_alpha, s_inverse,
};
use mixlab::torus_field::hminus1_norm_lift;
use mixlab::{BoundReport, GridFunction, MixError, MixParams};
use proptest::prelude::*;

const L: f64 = 2.0 * PI;

fn params() -> MixParams {
    MixParams::new(L, 1.0, 2).unwrap()
}

/// S by direct quadrature of S′(α) = √(1 − α²), composite Simpson.
fn s_quadrature(alpha: f64) -> f64 {
    let n = 2000;
    let h = alpha / n as f64;
    let g = |a: f64| (1.0 - a * a).max(0.0).sqrt();
    let mut acc = g(0.0) + g(alpha);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn s_examples() {
    assert_eq!(s_alpha(0.0).unwrap(), 0.0);
    assert!((s_alpha(1.0).unwrap() - FRAC_PI_4).abs() < 1e-15);
    assert!((s_alpha(FRAC_1_SQRT_2).unwrap() - 0.5 * (FRAC_PI_4 + 0.5)).abs() < 1e-15);
    assert!((s_alpha(FRAC_1_SQRT_2).unwrap() - 0.642_699).abs() < 1e-6);
    for &a in &[0.1, 0.4, 0.9, 0.99] {
        assert!(
            (s_alpha(a).unwrap() - s_quadrature(a)).abs() < 1e-9,
            "alpha {a}"
        );
    }
    assert!(matches!(s_alpha(1.1), Err(MixError::OutOfRange { .. })));
}

#[test]
fn s_inverse_examples() {
    assert_eq!(s_inverse(0.0).unwrap(), 0.0);
    assert!((s_inverse(FRAC_PI_4).unwrap() - 1.0).abs() < 1e-13);
    assert!((s_inverse(0.642_699f64).unwrap() - FRAC_1_SQRT_2).abs() < 1e-6);
    assert!(matches!(s_inverse(1.0), Err(MixError::OutOfRange { .. })));
    assert!(matches!(s_inverse(-0.1), Err(MixError::OutOfRange { .. })));
}

#[test]
fn s_inverse_round_trip_on_grid() {
    for i in 0..=999 {
        let a = i as f64 / 999.0;
        let back = s_inverse(s_alpha(a).unwrap()).unwrap();

        assert!((back - a).abs() < 1e-10, "alpha {a}: {back}");
    }
}

#[test]
fn alpha_of_r_examples() {
    assert_eq!(alpha_of_r(0.0).unwrap(), 0.0);
    assert!((alpha_of_r(1.0f64).unwrap() - 1.0).abs() < 1e-15);
    assert!((alpha_of_r(3f64.sqrt() / 2.0).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
    assert!(alpha_of_r(1.5).is_err());
}

#[test]
fn old_bound_examples() {
    assert_eq!(old_bound(0.0, 1.0).unwrap(), 0.0);
    let p = params();
    let sq = GridFunction::square_wave(L, 1 << 14).unwrap();
    let h = hminus1_norm_lift(&sq, &p).unwrap();
    assert!((old_bound(h, 1.0).unwrap() - p.big_h_max()).abs() < 1e-5);
    assert!((old_bound(h, 4.0).unwrap() - 0.5 * old_bound(h, 1.0).unwrap()).abs() < 1e-15);
    assert!(matches!(
        old_bound(1.0, 0.0),
        Err(MixError::NonPositiveEnergy(_))
    ));
}

#[test]
fn new_bound_examples() {
    let p = params();
    assert_eq!(new_bound(0.0, &p).unwrap(), 0.0);
    let top = new_bound(1.0, &p).unwrap();
    assert!((top - p.big_h_max() * SQRT_2 * FRAC_PI_4).abs() < 1e-13);
    assert!((top - p.sharp_mixing_time()).abs() < 1e-12);
    let ratio = top / old_bound(p.big_h_max(), 1.0).unwrap();
    assert!((ratio - SQRT_2 * FRAC_PI_4).abs() < 1e-14);
    assert!((ratio - 1.110_721).abs() < 1e-6);
}

#[test]
fn gap_examples() {
    assert_eq!(gap_delta(0.0).unwrap(), 0.0);
    assert!((gap_delta(1.0).unwrap() - (SQRT_2 * FRAC_PI_4 - 1.0)).abs() < 1e-15);
    assert!((gap_delta(1.0f64).unwrap() - 0.110_721).abs() < 1e-6);
    let (a, b, c) = (
        gap_delta(0.9).unwrap(),
        gap_delta(0.95).unwrap(),
        gap_delta(1.0).unwrap(),
    );
    assert!(a < b && b < c);
}

#[test]
fn gap_is_monotone_on_fine_grid() {
    let n = 10_000;
    let mut prev = gap_delta(0.0).unwrap();
    for i in 1..=n {
        let d = gap_delta(i as f64 / n as f64).unwrap();
        assert!(d - prev >= -1e-12, "i {i}");
        prev = d;
    }
}

#[test]
fn report_columns() {
    let p = params();
    let rep = BoundReport::new(0.5, &p).unwrap();
    assert!((rep.new_bound - rep.old_bound - rep.gap).abs() < 1e-13);
    assert!(rep.gap > 0.0);
    assert!(BoundReport::new(-0.1, &p).is_err());
}

#[test]
fn ode_rhs_examples() {
    let p = params();
    let kappa = p.energy_rate() / p.h_max();
    assert_eq!(ode_rhs(0.0, &p).unwrap(), 0.0);
    assert_eq!(ode_rhs(1.0, &p).unwrap(), 0.0);
    let q = 0.75f64.sqrt();
    assert!((ode_rhs(q, &p).unwrap() + 2.0 * kappa * 0.5f64.sqrt()).abs() < 1e-14);
    assert!(ode_rhs(1.2, &p).is_err());
}

#[test]
fn equality_trace_terminal_time() {
    let p = params();
    let tr = integrate_equality_case(1.0, &p, 200).unwrap();
    let c = p.rate_c();
    assert!((tr.terminal_time() - FRAC_PI_4 / c).abs() < 1e-12);
    let direct = p.h_max() * (L / p.e).sqrt() * SQRT_2 * PI / 4.0;
    assert!((tr.terminal_time() - direct).abs() < 1e-12);
    let tiny = integrate_equality_case(1e-6, &p, 10).unwrap();
    assert!(tiny.terminal_time() < 1e-4);
    assert!(integrate_equality_case(0.0, &p, 10).is_err());
}

#[test]
fn equality_trace_is_linear_in_s() {
    let p = params();
    let c = p.rate_c();
    for &a0 in &[0.3, 0.7, 1.0] {
        let tr = integrate_equality_case(a0, &p, 500).unwrap();
        assert!(tr.consistency_defect() < 1e-10);
        let s0 = s_alpha(a0).unwrap();
        for i in 0..tr.len() {
            let inv = s_alpha(tr.alpha_values[i]).unwrap() + c * tr.times[i];
            assert!((inv - s0).abs() < 1e-10, "a0 {a0} i {i}");
        }
    }
}

#[test]
fn runge_kutta_reproduces_the_closed_form() {
    let p = params();
    let c = p.rate_c();
    for &a0 in &[0.5f64, 0.9, 0.999] {
        let q0 = a0 * (2.0 - a0 * a0).sqrt();
        let tr = integrate_equality_rk4(q0, 0.0, &p, 1e-12).unwrap();
        let s0 = s_alpha(a0).unwrap();
        let mut worst = 0.0f64;
        for i in 0..tr.len() {
            let a = s_inverse((s0 - c * tr.times[i]).max(0.0)).unwrap();
            let q = a * (2.0 - a * a).sqrt();
            worst = worst.max((q - tr.q_values[i]).abs());
        }
        assert!(worst < 1e-6, "a0 {a0}: {worst}");
        assert!((tr.terminal_time() - s0 / c).abs() < 1e-5 * (s0 / c));
        assert!(tr.consistency_defect() < 1e-10);
    }
}

proptest! {
    #[test]
    fn new_bound_dominates_old(r in 0.0f64..=1.0, e in 0.1f64..10.0, d in 2usize..5) {
        let p = MixParams::new(L, e, d).unwrap();
        let new = new_bound(r, &p).unwrap();
        let old = old_bound(r * p.big_h_max(), e).unwrap();
        prop_assert!(new >= old - 1e-12);
    }

    #[test]
    fn s_is_increasing_and_inverse_is_exact(a in 0.0f64..0.99, b in 0.0f64..0.99) {
        let (sa, sb) = (s_alpha(a).unwrap(), s_alpha(b).unwrap());
        if a < b {
            prop_assert!(sa < sb);
        }
        prop_assert!((s_inverse(sa).unwrap() - a).abs() < 1e-10);
    }

    #[test]
    fn bounds_scale_with_energy(r in 0.0f64..=1.0, e in 0.1f64..10.0) {
        let p1 = MixParams::new(L, 1.0, 2).unwrap();
        let pe = MixParams::new(L, e, 2).unwrap();
        let a = new_bound(r, &pe).unwrap();
        let b = new_bound(r, &p1).unwrap() / e.sqrt();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
    }
}
