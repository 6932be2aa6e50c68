//! Scalar lower bounds for the mixing time and the ODE inequality behind them.

use serde::Serialize;

use crate::error::{MixError, Result};
use crate::scalar::Scalar;
use crate::torus_field::MixParams;

fn check_unit<T: Scalar>(name: &'static str, x: T) -> Result<()> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(MixError::OutOfRange {
            name,
            value: x.as_f64(),
        });
    }
    Ok(())
}

/// S(α) = ½(arcsin α + α√(1 − α²)).
pub fn s_alpha<T: Scalar>(alpha: T) -> Result<T> {
    check_unit("alpha", alpha)?;
    Ok((alpha.asin() + alpha * (T::one() - alpha * alpha).sqrt()) / T::lit(2.0))
}

/// Inverse of S on [0, π/4] by bisection.
pub fn s_inverse<T: Scalar>(s: T) -> Result<T> {
    let top = T::FRAC_PI_4();
    if !(s >= T::zero() && s <= top * T::lit(1.0 + 1e-15)) {
        return Err(MixError::OutOfRange {
            name: "s",
            value: s.as_f64(),
        });
    }
    if s >= top {
        return Ok(T::one());
    }
    if s == T::zero() {
        return Ok(T::zero());
    }
    // bisect to the last representable midpoint, well below 1e−13
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if s_alpha(mid)? < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}

/// α(r) = (1 − √(1 − r²))^{1/2}.
pub fn alpha_of_r<T: Scalar>(r: T) -> Result<T> {
    check_unit("r", r)?;
    let r2 = r * r;
    Ok((r2 / (T::one() + (T::one() - r2).sqrt())).sqrt())
}

/// E^{−1/2}‖ρ₀‖_{H⁻¹(𝕋^d)}.
pub fn old_bound<T: Scalar>(h_norm_d: T, e: T) -> Result<T> {
    if !(e > T::zero()) {
        return Err(MixError::NonPositiveEnergy(e.as_f64()));
    }
    if !(h_norm_d >= T::zero()) {
        return Err(MixError::OutOfRange {
            name: "h_norm",
            value: h_norm_d.as_f64(),
        });
    }
    Ok(h_norm_d / e.sqrt())
}

/// E^{−1/2} H_max √2 S(α(r₀)).
pub fn new_bound<T: Scalar>(r0: T, params: &MixParams<T>) -> Result<T> {
    let s = s_alpha(alpha_of_r(r0)?)?;
    Ok(params.big_h_max() / params.e.sqrt() * T::SQRT_2() * s)
}

/// δ(r₀) = √2 S(α(r₀)) − r₀.
pub fn gap_delta<T: Scalar>(r0: T) -> Result<T> {
    Ok(T::SQRT_2() * s_alpha(alpha_of_r(r0)?)? - r0)
}

/// √(q² − (1 − √(1 − q²))²) written as √(2Qs/(1+s)), Q = q², s = √(1 − Q).
fn radicand_root<T: Scalar>(big_q: T) -> T {
    let big_q = big_q.max(T::zero()).min(T::one());
    let s = (T::one() - big_q).sqrt();
    (T::lit(2.0) * big_q * s / (T::one() + s)).sqrt()
}

/// Equality-case rate of d(q²)/dt.
pub fn ode_rhs<T: Scalar>(q: T, params: &MixParams<T>) -> Result<T> {
    check_unit("q", q)?;
    Ok(-T::lit(2.0) * params.energy_rate() / params.h_max() * radicand_root(q * q))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport<T> {
    pub r0: T,
    pub old_bound: T,
    pub new_bound: T,
    pub gap: T,
    #[serde(skip)]
    pub params: MixParams<T>,
}

impl<T: Scalar> BoundReport<T> {
    pub fn new(r0: T, params: &MixParams<T>) -> Result<Self> {
        check_unit("r0", r0)?;
        let old = old_bound(r0 * params.big_h_max(), params.e)?;
        let new = new_bound(r0, params)?;
        let gap = gap_delta(r0)? * params.big_h_max() / params.e.sqrt();
        Ok(Self {
            r0,
            old_bound: old,
            new_bound: new,
            gap,
            params: *params,
        })
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OdeTrace<T> {
    pub times: Vec<T>,
    pub q_values: Vec<T>,
    pub alpha_values: Vec<T>,
}

impl<T: Scalar> OdeTrace<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal_time(&self) -> T {
        self.times.last().copied().unwrap_or_else(T::zero)
    }

    /// max |q² − α²(2 − α²)| along the trace.
    pub fn consistency_defect(&self) -> T {
        self.q_values
            .iter()
            .zip(&self.alpha_values)
            .fold(T::zero(), |m, (&q, &a)| {
                m.max((q * q - a * a * (T::lit(2.0) - a * a)).abs())
            })
    }

    fn push(&mut self, t: T, q: T, alpha: T) {
        self.times.push(t);
        self.q_values.push(q);
        self.alpha_values.push(alpha);
    }
}

fn q_of_alpha<T: Scalar>(alpha: T) -> T {
    alpha * (T::lit(2.0) - alpha * alpha).sqrt()
}

/// α from Q = q² = α²(2 − α²) without cancellation.
fn alpha_of_q_sq<T: Scalar>(big_q: T) -> T {
    let big_q = big_q.max(T::zero()).min(T::one());
    (big_q / (T::one() + (T::one() - big_q).sqrt())).sqrt()
}

/// Closed-form equality trace α(t) = S⁻¹(S(α₀) − ct) on `steps` uniform
/// times from 0 to S(α₀)/c.
pub fn integrate_equality_case<T: Scalar>(
    alpha0: T,
    params: &MixParams<T>,
    steps: usize,
) -> Result<OdeTrace<T>> {
    if !(alpha0 > T::zero() && alpha0 <= T::one()) {
        return Err(MixError::OutOfRange {
            name: "alpha0",
            value: alpha0.as_f64(),
        });
    }
    let steps = steps.max(2);
    let c = params.rate_c();
    let s0 = s_alpha(alpha0)?;
    let t_end = s0 / c;
    let mut trace = OdeTrace::default();
    for i in 0..steps {
        let t = if i == steps - 1 {
            t_end
        } else {
            t_end * T::from_usize_lossy(i) / T::from_usize_lossy(steps - 1)
        };
        let alpha = if i == 0 {
            alpha0
        } else {
            s_inverse((s0 - c * t).max(T::zero()))?
        };
        trace.push(t, q_of_alpha(alpha), alpha);
    }
    Ok(trace)
}

/// Adaptive RK4 (step doubling) on Q = q² with the equality right-hand side,
/// started at time `t0` from `q0`. Integration stops once Q drops below
/// 1e−14; the remaining time √Q/κ of the limiting law d√Q/dt = −κ is added
/// as a final sample at q = 0.
pub fn integrate_equality_rk4<T: Scalar>(
    q0: T,
    t0: T,
    params: &MixParams<T>,
    tol: T,
) -> Result<OdeTrace<T>> {
    check_unit("q0", q0)?;
    let kappa = params.energy_rate() / params.h_max();
    let rhs = |big_q: T| -T::lit(2.0) * kappa * radicand_root(big_q);
    let rk4 = |y: T, dt: T| {
        let k1 = rhs(y);
        let k2 = rhs(y + dt / T::lit(2.0) * k1);
        let k3 = rhs(y + dt / T::lit(2.0) * k2);
        let k4 = rhs(y + dt * k3);
        y + dt / T::lit(6.0) * (k1 + T::lit(2.0) * k2 + T::lit(2.0) * k3 + k4)
    };
    let floor = T::lit(1e-14);
    let mut trace = OdeTrace::default();
    let mut t = t0;
    let mut y = q0 * q0;
    trace.push(t, q0, alpha_of_q_sq(y));
    let scale = T::one() / kappa;
    let mut dt = scale * T::lit(1e-4);
    let mut guard = 0usize;
    while y >= floor {
        guard += 1;
        if guard > 10_000_000 {
            return Err(MixError::StepBudgetExhausted(guard));
        }
        let full = rk4(y, dt);
        let half = rk4(rk4(y, dt / T::lit(2.0)), dt / T::lit(2.0));
        let err = (full - half).abs();
        if err > tol && dt > scale * T::lit(1e-14) {
            dt = dt / T::lit(2.0);
            continue;
        }
        if half < T::zero() {
            // overshoot past the floor: shrink so the step lands inside
            dt = dt / T::lit(2.0);
            if dt < scale * T::lit(1e-16) {
                break;
            }
            continue;
        }
        y = half + (half - full) / T::lit(15.0);
        y = y.max(T::zero());
        t = t + dt;
        trace.push(t, y.sqrt(), alpha_of_q_sq(y));
        if err < tol / T::lit(32.0) {
            dt = dt * T::lit(2.0);
        }
    }
    t = t + y.sqrt() / kappa;
    trace.push(t, T::zero(), T::zero());
    Ok(trace)
}
