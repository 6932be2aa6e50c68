use std::f64::consts::PI;

use mixlab::bounds::new_bound;
use mixlab::descent_pde::{
    alpha_eff, evolve_to_mixed, evolve_to_mixed_with, initial_state, lambda_of_state, stable_dt,
    step_hamilton_jacobi, verify_steepest_descent_identity, EvolveOptions,
};
use mixlab::subsolution::big_w_alpha;
use mixlab::torus_field::{hminus1_norm_1d, hminus1_norm_lift};
use mixlab::{EvolutionState, GridFunction, MixError, MixParams, SharpFamily};

const L: f64 = 2.0 * PI;

fn params() -> MixParams {
    MixParams::new(L, 1.0, 2).unwrap()
}

fn sup_distance(a: &GridFunction, b: &GridFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Evolves the exact profile at `t1` to `t2` on an n-point grid and returns the
/// sup-distance to the exact profile at `t2`.
fn family_error(n: usize, t1: f64, t2: f64) -> f64 {
    let p = params();
    let fam = SharpFamily::new(&p);
    let w = big_w_alpha(fam.alpha_at(t1).unwrap(), L, n).unwrap();
    let mut state = EvolutionState::new(t1, w, &p).unwrap();
    while state.t < t2 - 1e-15 {
        let dt = stable_dt(&state.w, state.lambda).min(t2 - state.t);
        state = step_hamilton_jacobi(&state, dt, &p).unwrap();
    }
    let exact = big_w_alpha(fam.alpha_at(t2).unwrap(), L, n).unwrap();
    sup_distance(&state.w, &exact)
}

#[test]
fn lambda_on_exact_profiles() {
    let p = params();
    let c = p.rate_c();
    for &alpha in &[0.2, 0.5, 0.7, 0.9] {
        let w = big_w_alpha(alpha, L, 1 << 14).unwrap();
        let lam = lambda_of_state(&w, &p).unwrap();
        let want = c / (alpha * (1.0 - alpha * alpha).sqrt());
        assert!(
            (lam - want).abs() < 1e-6 * want,
            "alpha {alpha}: {lam} vs {want}"
        );
    }
}

#[test]
fn lambda_is_undefined_on_degenerate_states() {
    let p = params();
    let tri = GridFunction::triangle_wave(L, 256).unwrap();
    assert!(matches!(
        lambda_of_state(&tri, &p),
        Err(MixError::DegenerateState(_))
    ));
    let zero = GridFunction::zeros(L, 256).unwrap();
    assert!(matches!(
        lambda_of_state(&zero, &p),
        Err(MixError::DegenerateState(_))
    ));
}

#[test]
fn zero_state_is_a_fixed_point() {
    let p = params();
    let s = EvolutionState::new(0.0, GridFunction::zeros(L, 64).unwrap(), &p).unwrap();
    assert_eq!(s.lambda, 0.0);
    let next = step_hamilton_jacobi(&s, 0.1, &p).unwrap();
    assert_eq!(next.w.values(), s.w.values());
    assert_eq!(next.h, 0.0);
}

#[test]
fn oversized_step_is_rejected() {
    let p = params();
    let w = big_w_alpha(0.5, L, 256).unwrap();
    let s = EvolutionState::new(0.0, w, &p).unwrap();
    let dt = stable_dt(&s.w, s.lambda);
    assert!(step_hamilton_jacobi(&s, dt, &p).is_ok());
    assert!(matches!(
        step_hamilton_jacobi(&s, 2.0 * dt, &p),
        Err(MixError::CflViolation { .. })
    ));
}

#[test]
fn one_step_tracks_the_exact_family() {
    let p = params();
    let fam = SharpFamily::new(&p);
    let t = fam.time_of_alpha(0.6).unwrap();
    let mut errs = Vec::new();
    for &n in &[512usize, 1024] {
        let s = EvolutionState::new(t, big_w_alpha(fam.alpha_at(t).unwrap(), L, n).unwrap(), &p)
            .unwrap();
        let dt = stable_dt(&s.w, s.lambda);
        let next = step_hamilton_jacobi(&s, dt, &p).unwrap();
        let exact = big_w_alpha(fam.alpha_at(t + dt).unwrap(), L, n).unwrap();
        let err = sup_distance(&next.w, &exact);
        assert!(err <= 10.0 * dt * (dt + s.w.dx()), "n {n}: {err}");
        errs.push(err);
    }
    assert!(errs[0] / errs[1] >= 1.8, "{errs:?}");
}

#[test]
fn refinement_converges_to_the_exact_family() {
    let p = params();
    let fam = SharpFamily::new(&p);
    let t1 = fam.time_of_alpha(0.8).unwrap();
    let t2 = fam.time_of_alpha(0.6).unwrap();
    let coarse = family_error(512, t1, t2);
    let fine = family_error(1024, t1, t2);
    assert!(coarse / fine >= 1.8, "{coarse} vs {fine}");
    assert!(fine < 5e-3);
}

#[test]
fn refinement_over_a_long_window() {
    let p = params();
    let fam = SharpFamily::new(&p);
    let t1 = fam.time_of_alpha(0.99).unwrap();
    let t2 = fam.time_of_alpha(0.3).unwrap();
    let errs: Vec<f64> = [256usize, 512, 1024]
        .iter()
        .map(|&n| family_error(n, t1, t2))
        .collect();
    for pair in errs.windows(2) {
        assert!(pair[0] / pair[1] >= 1.7, "{errs:?}");
    }
}

#[test]
fn zero_density_stops_immediately() {
    let p = params();
    let (t, states) =
        evolve_to_mixed(&GridFunction::zeros(L, 64).unwrap(), &p, 0.01 * p.h_max()).unwrap();
    assert_eq!(t, 0.0);
    assert_eq!(states.len(), 1);
}

#[test]
fn oversized_density_is_rejected() {
    let p = params();
    let rho = GridFunction::from_fn(L, 64, |x| 1.5 * x.sin()).unwrap();
    assert!(initial_state(&rho, &p).is_err());
}

#[test]
fn extremal_start_sits_on_the_exact_family() {
    let p = params();
    let rho = GridFunction::square_wave(L, 1024).unwrap();
    let s = initial_state(&rho, &p).unwrap();
    let fam = SharpFamily::new(&p);
    let alpha = fam.alpha_at(s.t).unwrap();
    assert!((alpha - (1.0 - 1e-3)).abs() < 1e-9);
    assert!(s.t > 0.0 && s.t < 1e-2 * p.sharp_mixing_time());
}

#[test]
fn smooth_profile_respects_the_lower_bound() {
    let p = params();
    let rho = GridFunction::from_fn(L, 512, |x| 0.8 * x.sin()).unwrap();
    let r0 = hminus1_norm_lift(&rho, &p).unwrap() / p.big_h_max();
    let r_stop = 1e-3;
    let (t, _) = evolve_to_mixed(&rho, &p, r_stop * p.h_max()).unwrap();
    let bound = new_bound(r0, &p).unwrap();
    let bound_to_stop = bound - new_bound(r_stop, &p).unwrap();
    assert!(t >= 0.98 * bound_to_stop, "{t} < {bound_to_stop}");
    assert!(t >= 0.98 * bound, "{t} < {bound}");
}

#[test]
fn square_wave_trajectory_invariants() {
    let p = params();
    let rho = GridFunction::square_wave(L, 1024).unwrap();
    let opts = EvolveOptions {
        max_steps: 5_000_000,
        samples: 400,
    };
    let (t, states) = evolve_to_mixed_with(&rho, &p, 0.01 * p.h_max(), &opts).unwrap();
    assert!((t / p.sharp_mixing_time() - 1.0).abs() < 0.02);
    let mut worst_slope = 0.0f64;
    for pair in states.windows(2) {
        assert!(pair[1].h <= pair[0].h + 1e-8);
        assert!(pair[1].t > pair[0].t);
    }
    for s in &states {
        assert!(s.rho.mean().abs() < 1e-12);
        assert!(s.w.mean().abs() < 1e-12);
        assert!((s.h - s.w.l2_norm()).abs() < 1e-8);
        worst_slope = worst_slope.max(s.rho.max_abs());
    }
    assert!(worst_slope <= 1.0 + 1e-3, "{worst_slope}");
}

#[test]
fn descent_identity_improves_under_refinement() {
    let p = params();
    let mut residuals = Vec::new();
    for &n in &[512usize, 1024] {
        let rho = GridFunction::square_wave(L, n).unwrap();
        let (_, states) = evolve_to_mixed(&rho, &p, 0.05 * p.h_max()).unwrap();
        residuals.push(verify_steepest_descent_identity(&states).unwrap());
    }
    assert!(residuals[0] / residuals[1] >= 1.5, "{residuals:?}");
}

#[test]
fn descent_identity_on_exact_snapshots() {
    let p = params();
    let fam = SharpFamily::new(&p);
    let t = fam.time_of_alpha(0.6).unwrap();
    let n = 1 << 14;
    let res = |dt: f64| {
        let states: Vec<EvolutionState> = [t - dt, t, t + dt]
            .iter()
            .map(|&s| {
                EvolutionState::new(s, big_w_alpha(fam.alpha_at(s).unwrap(), L, n).unwrap(), &p)
                    .unwrap()
            })
            .collect();
        verify_steepest_descent_identity(&states).unwrap()
    };
    let (a, b) = (res(1e-2), res(5e-3));
    assert!(b < 1e-2, "{b}");
    assert!(b <= a + 1e-4);
}

#[test]
fn descent_identity_edge_cases() {
    let p = params();
    let zero = EvolutionState::new(0.0, GridFunction::zeros(L, 64).unwrap(), &p).unwrap();
    let still: Vec<EvolutionState> = (0..3)
        .map(|i| EvolutionState {
            t: i as f64,
            ..zero.clone()
        })
        .collect();
    assert_eq!(verify_steepest_descent_identity(&still).unwrap(), 0.0);
    assert!(matches!(
        verify_steepest_descent_identity(&still[..2]),
        Err(MixError::TooFewStates { needed: 3, got: 2 })
    ));
}

#[test]
fn alpha_eff_inverts_the_norm() {
    let p = params();
    let fam = SharpFamily::new(&p);
    for &alpha in &[0.3, 0.7] {
        let w = big_w_alpha(alpha, L, 1 << 14).unwrap();
        assert!((alpha_eff(w.l2_norm(), &p) - alpha).abs() < 1e-4);
        assert!((fam.h_closed(alpha) - w.l2_norm()).abs() < 1e-4);
    }
    let rho = GridFunction::from_fn(L, 64, |x| 0.5 * x.sin()).unwrap();
    let h = hminus1_norm_1d(&rho).unwrap();
    assert!(alpha_eff(h, &p) > 0.0 && alpha_eff(h, &p) < 1.0);
}
