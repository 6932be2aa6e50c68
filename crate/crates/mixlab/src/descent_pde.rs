//! Steepest-descent evolution in Hamilton-Jacobi form.
//!
//! The state is w = φₓ with ρ = wₓ. Each step solves
//! `∂ₜw + λ(t)(1 − wₓ²)w = mean` with a local Lax-Friedrichs Hamiltonian and
//! Heun time stepping; λ is frozen over the step.

use serde::Serialize;

use crate::bounds::s_alpha;
use crate::error::{MixError, Result};
use crate::scalar::Scalar;
use crate::subsolution::big_w_alpha_at;
use crate::torus_field::{hminus1_norm_1d, potential_derivative, sum, GridFunction, MixParams};
use crate::variational::{alpha_of_h, functional_f};

/// F below which λ is undefined.
pub const DEGENERATE_F: f64 = 1e-14;
pub const CFL: f64 = 0.4;
/// α on the exact family used to leave a degenerate start.
pub const DEGENERATE_START_ALPHA: f64 = 1.0 - 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionState<T> {
    pub t: T,
    #[serde(skip)]
    pub w: GridFunction<T>,
    #[serde(skip)]
    pub rho: GridFunction<T>,
    pub lambda: T,
    pub h: T,
}

impl<T: Scalar> EvolutionState<T> {
    /// Assembles ρ, λ and h from w. A vanishing w gets λ = 0.
    pub fn new(t: T, w: GridFunction<T>, params: &MixParams<T>) -> Result<Self> {
        let rho = w.derivative_centered();
        let h = w.l2_norm();
        let lambda = if w.max_abs() == T::zero() {
            T::zero()
        } else {
            lambda_of_state(&w, params)?
        };
        Ok(Self {
            t,
            w,
            rho,
            lambda,
            h,
        })
    }

    /// q = h / h_max.
    pub fn q(&self, params: &MixParams<T>) -> T {
        self.h / params.h_max()
    }

    /// m₁ = λ(1 − ρ²)w.
    pub fn momentum(&self) -> Vec<T> {
        self.w
            .values()
            .iter()
            .zip(self.rho.values())
            .map(|(&w, &r)| self.lambda * (T::one() - r * r) * w)
            .collect()
    }
}

/// λ = (E/L^{d−1})^{1/2} F(w)^{−1/2}.
pub fn lambda_of_state<T: Scalar>(w: &GridFunction<T>, params: &MixParams<T>) -> Result<T> {
    let f = functional_f(w);
    if !(f > T::lit(DEGENERATE_F)) {
        return Err(MixError::DegenerateState(format!("F(w) = {f}")));
    }
    Ok(params.energy_rate() / f.sqrt())
}

/// Largest stable step for `w` at rate `lambda`.
pub fn stable_dt<T: Scalar>(w: &GridFunction<T>, lambda: T) -> T {
    let nu = wave_speed(w, lambda);
    let dx = w.dx();
    let advective = T::lit(CFL) * dx / (nu + T::lit(1e-300).max(T::min_positive_value()));
    if lambda > T::zero() {
        advective.min(T::lit(CFL) / lambda)
    } else {
        advective
    }
}

fn wave_speed<T: Scalar>(w: &GridFunction<T>, lambda: T) -> T {
    let v = w.values();
    let n = v.len();
    let dx = w.dx();
    let mut m = T::zero();
    for j in 0..n {
        let pm = (v[j] - v[(j + n - 1) % n]) / dx;
        let pp = (v[(j + 1) % n] - v[j]) / dx;
        m = m
            .max((T::lit(2.0) * v[j] * pm).abs())
            .max((T::lit(2.0) * v[j] * pp).abs());
    }
    lambda * m
}

/// −Ĥ(p⁻, p⁺; w) + mean, the semi-discrete right-hand side.
fn hj_rhs<T: Scalar>(v: &[T], dx: T, lambda: T, nu: T) -> Vec<T> {
    let n = v.len();
    let two = T::lit(2.0);
    let mut out: Vec<T> = (0..n)
        .map(|j| {
            let pm = (v[j] - v[(j + n - 1) % n]) / dx;
            let pp = (v[(j + 1) % n] - v[j]) / dx;
            let p = (pm + pp) / two;
            let ham = lambda * (T::one() - p * p) * v[j] - nu / two * (pp - pm);
            -ham
        })
        .collect();
    let mean = sum(&out) / T::from_usize_lossy(n);
    out.iter_mut().for_each(|x| *x = *x - mean);
    out
}

/// One Heun step of the Hamilton-Jacobi flow.
pub fn step_hamilton_jacobi<T: Scalar>(
    state: &EvolutionState<T>,
    dt: T,
    params: &MixParams<T>,
) -> Result<EvolutionState<T>> {
    let lambda = state.lambda;
    if lambda == T::zero() {
        return Ok(EvolutionState {
            t: state.t + dt,
            ..state.clone()
        });
    }
    let limit = stable_dt(&state.w, lambda);
    if dt > limit * T::lit(1.0 + 1e-12) {
        return Err(MixError::CflViolation {
            dt: dt.as_f64(),
            limit: limit.as_f64(),
        });
    }
    let dx = state.w.dx();
    let nu = wave_speed(&state.w, lambda);
    let v0 = state.w.values();
    let k1 = hj_rhs(v0, dx, lambda, nu);
    let v1: Vec<T> = v0.iter().zip(&k1).map(|(&a, &k)| a + dt * k).collect();
    let k2 = hj_rhs(&v1, dx, lambda, nu);
    let two = T::lit(2.0);
    let v2: Vec<T> = v0
        .iter()
        .zip(k1.iter().zip(&k2))
        .map(|(&a, (&p, &q))| a + dt / two * (p + q))
        .collect();
    let w = state.w.with_values(v2)?;
    let rho = w.derivative_centered();
    let h = w.l2_norm();
    let lambda = if w.max_abs() == T::zero() {
        T::zero()
    } else {
        lambda_of_state(&w, params)?
    };
    Ok(EvolutionState {
        t: state.t + dt,
        w,
        rho,
        lambda,
        h,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub max_steps: usize,
    /// Approximate number of states kept in the returned trajectory.
    pub samples: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            max_steps: 5_000_000,
            samples: 400,
        }
    }
}

/// Initial state for `rho0`: either w = φₓ directly, or for the extremal
/// density the exact family at α = 1 − 1e−3, translated onto the peak of w.
pub fn initial_state<T: Scalar>(
    rho0: &GridFunction<T>,
    params: &MixParams<T>,
) -> Result<EvolutionState<T>> {
    if rho0.max_abs() > T::lit(1.0 + 1e-9) {
        return Err(MixError::InvalidParams(format!(
            "|rho0| exceeds 1: {}",
            rho0.max_abs()
        )));
    }
    let w = potential_derivative(rho0)?;
    let h = hminus1_norm_1d(rho0)?;
    let h_max = params.h_max();
    if h < h_max * T::lit(1.0 - 1e-4) {
        return EvolutionState::new(T::zero(), w, params);
    }
    let alpha0 = T::lit(DEGENERATE_START_ALPHA);
    let t0 = (T::FRAC_PI_4() - s_alpha(alpha0)?) / params.rate_c();
    let peak = (0..w.n())
        .max_by(|&a, &b| w.values()[a].partial_cmp(&w.values()[b]).unwrap())
        .unwrap_or(0);
    let x_peak = w.x(peak);
    let period = w.period();
    let quarter = period / T::lit(4.0);
    let half = period / T::lit(2.0);
    let start = GridFunction::from_fn(period, w.n(), |x| {
        // W^α has its peak at L/4; wrap x − x_peak + L/4 into [−L/2, L/2)
        let mut y = x - x_peak + quarter;
        while y >= half {
            y = y - period;
        }
        while y < -half {
            y = y + period;
        }
        big_w_alpha_at(alpha0, period, y)
    })?;
    EvolutionState::new(t0, start, params)
}

/// Evolves until h ≤ `h_stop`; returns the stopping time and sampled states.
pub fn evolve_to_mixed<T: Scalar>(
    rho0: &GridFunction<T>,
    params: &MixParams<T>,
    h_stop: T,
) -> Result<(T, Vec<EvolutionState<T>>)> {
    evolve_to_mixed_with(rho0, params, h_stop, &EvolveOptions::default())
}

pub fn evolve_to_mixed_with<T: Scalar>(
    rho0: &GridFunction<T>,
    params: &MixParams<T>,
    h_stop: T,
    opts: &EvolveOptions,
) -> Result<(T, Vec<EvolutionState<T>>)> {
    let mut state = initial_state(rho0, params)?;
    let mut states = vec![state.clone()];
    if state.h <= h_stop {
        return Ok((state.t, states));
    }
    let mut steps_since = 0usize;
    let mut stride = 1usize;
    for step in 0..opts.max_steps {
        let dt = stable_dt(&state.w, state.lambda);
        let next = step_hamilton_jacobi(&state, dt, params)?;
        steps_since += 1;
        if next.h <= h_stop {
            let frac = (state.h - h_stop) / (state.h - next.h);
            let t_stop = state.t + frac * (next.t - state.t);
            states.push(next);
            return Ok((t_stop, states));
        }
        state = next;
        if step == 64 {
            // estimate total steps from the early rate to space out samples
            let elapsed = state.t - states[0].t;
            let total =
                params.sharp_mixing_time() / elapsed.max(T::min_positive_value()) * T::lit(65.0);
            stride = (total.as_f64() / opts.samples.max(1) as f64).max(1.0) as usize;
        }
        if steps_since >= stride {
            states.push(state.clone());
            steps_since = 0;
        }
    }
    Err(MixError::StepBudgetExhausted(opts.max_steps))
}

/// max over interior samples of |Δ(h²)/Δt + 2∫m₁w dx|.
pub fn verify_steepest_descent_identity<T: Scalar>(states: &[EvolutionState<T>]) -> Result<T> {
    if states.len() < 3 {
        return Err(MixError::TooFewStates {
            needed: 3,
            got: states.len(),
        });
    }
    let mut worst = T::zero();
    for i in 1..states.len() - 1 {
        let (a, b, s) = (&states[i - 1], &states[i + 1], &states[i]);
        let dt = b.t - a.t;
        if dt <= T::zero() {
            continue;
        }
        let dh2 = (b.h * b.h - a.h * a.h) / dt;
        let work: Vec<T> = s
            .momentum()
            .iter()
            .zip(s.w.values())
            .map(|(&m, &w)| m * w)
            .collect();
        let flux = T::lit(2.0) * sum(&work) * s.w.dx();
        worst = worst.max((dh2 + flux).abs());
    }
    Ok(worst)
}

/// h and the effective α(h) for trajectory output.
pub fn alpha_eff<T: Scalar>(h: T, params: &MixParams<T>) -> T {
    alpha_of_h(h.min(params.h_max()), params.l).unwrap_or_else(|_| T::nan())
}
