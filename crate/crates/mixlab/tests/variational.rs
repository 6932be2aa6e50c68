use std::f64::consts::PI;

use mixlab::torus_field::{h_max, lipschitz_seminorm};
use mixlab::variational::{
    alpha_of_h, certify_supremum, extremizer_w_alpha, functional_f, functional_f1, functional_f2,
    inf_f2_closed_form, l2_sq, lifted_extremizer, reduce_to_w0, sample_admissible,
    sup_f_closed_form, sup_l2_over_x, w_alpha_at, w_alpha_slope_at,
};
use mixlab::{GridFunction, MixError};
use proptest::prelude::*;

const L: f64 = 2.0 * PI;

/// ∫ (w^α)_x² (w^α)² over one half period, integrated by hand: α⁴ l³/12 with l = L/2.
fn f2_oracle(alpha: f64, period: f64) -> f64 {
    let l = period / 2.0;
    alpha.powi(4) * l.powi(3) / 12.0
}

/// ∫ (w^α)² over one half period: (l/2)³ · 2α²(2 − α²)/3.
fn l2_oracle(alpha: f64, period: f64) -> f64 {
    let hl = period / 4.0;
    hl.powi(3) * 2.0 * alpha * alpha * (2.0 - alpha * alpha) / 3.0
}

#[test]
fn triangle_wave_saturates_the_constraint() {
    let tri = GridFunction::triangle_wave(L, 256).unwrap();
    assert!(functional_f(&tri).abs() < 1e-12);
    assert!((l2_sq(&tri) - sup_l2_over_x(L)).abs() < 1e-12);
    assert!((sup_l2_over_x(L) - h_max(L).powi(2)).abs() < 1e-12);
    assert!(sup_f_closed_form(h_max(L), L).unwrap().abs() < 1e-12);
}

#[test]
fn closed_forms_are_consistent() {
    let hm = h_max(L);
    for i in 0..=20 {
        let h = hm * i as f64 / 20.0;
        let a = alpha_of_h(h, L).unwrap();
        let sup = sup_f_closed_form(h, L).unwrap();
        let inf = inf_f2_closed_form(h, L).unwrap();
        assert!((sup + 2.0 * inf - h * h).abs() < 1e-12);
        assert!((inf - f2_oracle(a, L)).abs() < 1e-12);
        let naive = (1.0 - (1.0 - (h / hm).powi(2)).sqrt()).sqrt();
        assert!((a - naive).abs() < 1e-7);
    }
    assert_eq!(alpha_of_h(0.0, L).unwrap(), 0.0);
    assert!((alpha_of_h(hm, L).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn alpha_is_accurate_for_small_h() {
    let hm = h_max(L);
    let h = 1e-9 * hm;
    let a = alpha_of_h(h, L).unwrap();
    // α ≈ r/√2 for small r = h/h_max
    assert!((a / (1e-9 / 2f64.sqrt()) - 1.0).abs() < 1e-12);
    let sup = sup_f_closed_form(h, L).unwrap();
    assert!((sup / (h * h) - 1.0).abs() < 1e-12);
}

#[test]
fn out_of_range_h_is_rejected() {
    assert!(matches!(
        alpha_of_h(-1.0, L),
        Err(MixError::OutOfRange { .. })
    ));
    assert!(matches!(
        sup_f_closed_form(1.01 * h_max(L), L),
        Err(MixError::OutOfRange { .. })
    ));
    assert!(extremizer_w_alpha(1.5, L, 64).is_err());
}

#[test]
fn extremizer_matches_hand_integrals() {
    for &alpha in &[0.2, 0.5, 0.8, 1.0] {
        let w = extremizer_w_alpha(alpha, L, 1 << 16).unwrap();
        let pw = w.to_piecewise();
        assert!(
            (functional_f2(&w) - f2_oracle(alpha, L)).abs() < 1e-6,
            "alpha {alpha}"
        );
        assert!(
            (pw.integral_sq() - l2_oracle(alpha, L)).abs() < 1e-8,
            "alpha {alpha}"
        );
        assert!(w.max_slope() <= 1.0 + 1e-10, "{}", w.max_slope() - 1.0);
        assert!(w.min_slope() >= 0.0);
    }
}

#[test]
fn extremizer_is_odd_continuous_and_one_lipschitz() {
    let alpha = 0.6;
    let hl = L / 4.0;
    let knee = alpha * alpha * hl;
    let gap = (w_alpha_at(alpha, L, knee + 1e-9) - w_alpha_at(alpha, L, knee - 1e-9)).abs();
    assert!(gap < 1e-8);
    assert!((w_alpha_at(alpha, L, hl) - alpha * hl).abs() < 1e-14);
    for i in 0..=100 {
        let x = hl * (i as f64 / 50.0 - 1.0);
        assert_eq!(w_alpha_at(alpha, L, -x), -w_alpha_at(alpha, L, x));
        let s = w_alpha_slope_at(alpha, L, x);
        assert!((0.0..=1.0 + 1e-12).contains(&s));
        let fd = (w_alpha_at(alpha, L, x + 1e-7) - w_alpha_at(alpha, L, x - 1e-7)) / 2e-7;
        if (x.abs() - knee).abs() > 1e-5 && x.abs() < hl - 1e-5 {
            assert!((fd - s).abs() < 1e-5, "x {x}: {fd} vs {s}");
        }
    }
}

#[test]
fn lifted_extremizer_attains_the_supremum() {
    let hm = h_max(L);
    for &frac in &[0.1, 0.5, 0.9, 1.0] {
        let h = frac * hm;
        let w = lifted_extremizer(h, L, 1 << 15).unwrap();
        assert!(w.mean().abs() < 1e-10);
        assert!(
            lipschitz_seminorm(&w) <= 1.0 + 1e-10,
            "{}",
            lipschitz_seminorm(&w) - 1.0
        );
        assert!((l2_sq(&w) - h * h).abs() < 1e-6);
        let sup = sup_f_closed_form(h, L).unwrap();
        assert!((functional_f(&w) - sup).abs() < 1e-5, "frac {frac}");
    }
}

#[test]
fn supremum_is_certified_across_levels() {
    let hm = h_max(L);
    for (i, &frac) in [0.25, 0.6, 0.95].iter().enumerate() {
        let rep = certify_supremum(frac * hm, L, 200, 256, 11 + i as u64).unwrap();
        assert!(rep.accepted >= 10);
        assert!(rep.certified(1e-5), "{rep:?}");
        assert!(rep.best_numeric_value <= rep.best_pipeline_value + 1e-12);
    }
}

#[test]
fn certification_at_the_top_level() {
    let rep = certify_supremum(h_max(L), L, 50, 256, 3).unwrap();
    assert!(rep.closed_form_value.abs() < 1e-12);
    assert!(rep.certified(1e-5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_identity_is_exact(vals in prop::collection::vec(-2.0f64..2.0, 32)) {
        let m = vals.iter().sum::<f64>() / 32.0;
        let w = GridFunction::new(L, vals.into_iter().map(|v| v - m).collect()).unwrap();
        let (f, f1, l2) = (functional_f(&w), functional_f1(&w), l2_sq(&w));
        prop_assert!((f + f1 - l2).abs() <= 1e-12 * (1.0 + l2));
        prop_assert!(f1 >= 0.0);
    }

    #[test]
    fn samples_never_beat_the_closed_form(frac in 0.05f64..1.0, seed in 0u64..1000) {
        let h = frac * h_max(L);
        let w = sample_admissible(h, L, 128, seed).unwrap();
        prop_assert!((l2_sq(&w) - h * h).abs() < 1e-10);
        prop_assert!(lipschitz_seminorm(&w) <= 1.0 + 1e-9);
        let f = functional_f(&w);
        let sup = sup_f_closed_form(h, L).unwrap();
        prop_assert!(f <= sup + 1e-10, "{f} > {sup}");
        let reduced = reduce_to_w0(&w).unwrap();
        let bound = h * h - 2.0 * reduced.integral_slope_sq_weighted();
        prop_assert!(f <= bound + 1e-10);
        prop_assert!(bound <= sup + 1e-10);
    }
}
