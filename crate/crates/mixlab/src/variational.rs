//! The constrained variational problems behind the mixing-time bound.
//!
//! Grid functions are evaluated through their piecewise-linear interpolants,
//! so `F(w) + F₁(w) = ∫w²` holds exactly and every sample is a genuine
//! Lipschitz competitor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{MixError, Result};
use crate::piecewise::PiecewiseLinear;
use crate::rearrange::{odd_competitor_exact, symmetric_competitor_exact, CompactFunction};
use crate::scalar::Scalar;
use crate::torus_field::{h_max, GridFunction};

/// F(w) = ∫_𝕋 (1 − w_x²) w² dx.
pub fn functional_f<T: Scalar>(w: &GridFunction<T>) -> T {
    PiecewiseLinear::from_periodic(w).integral_one_minus_slope_sq_weighted()
}

/// F₁(w) = ∫_𝕋 w_x² w² dx.
pub fn functional_f1<T: Scalar>(w: &GridFunction<T>) -> T {
    PiecewiseLinear::from_periodic(w).integral_slope_sq_weighted()
}

/// ∫_𝕋 w² dx of the interpolant.
pub fn l2_sq<T: Scalar>(w: &GridFunction<T>) -> T {
    PiecewiseLinear::from_periodic(w).integral_sq()
}

/// F₂(w) = ∫_{−l/2}^{l/2} w_x² w² dx.
pub fn functional_f2<T: Scalar>(w: &CompactFunction<T>) -> T {
    w.to_piecewise().integral_slope_sq_weighted()
}

fn ratio_sq<T: Scalar>(h: T, l: T) -> Result<T> {
    let hm = h_max(l);
    if !(h >= T::zero()) || h > hm * T::lit(1.0 + 1e-12) {
        return Err(MixError::OutOfRange {
            name: "h",
            value: h.as_f64(),
        });
    }
    let r = (h / hm).min(T::one());
    Ok(r * r)
}

/// 1 − √(1 − r²) written without cancellation.
fn one_minus_sqrt_complement<T: Scalar>(r2: T) -> T {
    r2 / (T::one() + (T::one() - r2).sqrt())
}

/// α(h) = (1 − √(1 − h²/h_max²))^{1/2}.
pub fn alpha_of_h<T: Scalar>(h: T, l: T) -> Result<T> {
    Ok(one_minus_sqrt_complement(ratio_sq(h, l)?).sqrt())
}

/// sup_{X_h} F = h² − h_max² (1 − √(1 − h²/h_max²))².
pub fn sup_f_closed_form<T: Scalar>(h: T, l: T) -> Result<T> {
    let a2 = one_minus_sqrt_complement(ratio_sq(h, l)?);
    let hm = h_max(l);
    Ok(h * h - hm * hm * a2 * a2)
}

/// inf_{𝒲₀^h} F₂ = (h_max²/2)(1 − √(1 − h²/h_max²))².
pub fn inf_f2_closed_form<T: Scalar>(h: T, l: T) -> Result<T> {
    let a2 = one_minus_sqrt_complement(ratio_sq(h, l)?);
    let hm = h_max(l);
    Ok(hm * hm * a2 * a2 / T::lit(2.0))
}

/// sup_X ∫w² = L³/48.
pub fn sup_l2_over_x<T: Scalar>(l: T) -> T {
    l * l * l / T::lit(48.0)
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(MixError::OutOfRange {
            name: "alpha",
            value: alpha.as_f64(),
        });
    }
    Ok(())
}

/// w^α(x) on [−l/2, l/2] with l = L/2 (odd; identity near 0, arc outside).
pub fn w_alpha_at<T: Scalar>(alpha: T, period: T, x: T) -> T {
    let half_l = period / T::lit(4.0);
    let s = x.abs().min(half_l);
    let a2 = alpha * alpha;
    let v = if s <= a2 * half_l || alpha >= T::one() {
        s
    } else {
        let u = T::one() - s / half_l;
        let inner = T::one() - u * u / (T::one() - a2);
        alpha * half_l * inner.max(T::zero()).sqrt()
    };
    if x < T::zero() {
        -v
    } else {
        v
    }
}

/// Derivative of w^α (even in x).
pub fn w_alpha_slope_at<T: Scalar>(alpha: T, period: T, x: T) -> T {
    let half_l = period / T::lit(4.0);
    let s = x.abs().min(half_l);
    let a2 = alpha * alpha;
    if s <= a2 * half_l || alpha >= T::one() {
        return T::one();
    }
    let u = T::one() - s / half_l;
    let c = T::one() - a2;
    let inner = T::one() - u * u / c;
    alpha * u / (c * inner.sqrt())
}

/// Grid samples of w^α on [−L/4, L/4].
pub fn extremizer_w_alpha<T: Scalar>(alpha: T, period: T, n: usize) -> Result<CompactFunction<T>> {
    check_alpha(alpha)?;
    CompactFunction::from_fn(period / T::lit(4.0), n, |x| w_alpha_at(alpha, period, x))
}

/// w̄^h: even L-periodic extension of x ↦ w^{α(h)}(x + l/2) on [−l, 0].
pub fn lifted_extremizer<T: Scalar>(h: T, period: T, n: usize) -> Result<GridFunction<T>> {
    let alpha = alpha_of_h(h, period)?;
    let half_l = period / T::lit(4.0);
    GridFunction::from_fn(period, n, |x| w_alpha_at(alpha, period, half_l - x.abs()))
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalReport<T> {
    pub h: f64,
    pub closed_form_value: f64,
    /// max F(w) over admissible samples.
    pub best_numeric_value: f64,
    /// max of h² − 2F₂(w̃) over the rearranged samples; bounds every sample's F.
    pub best_pipeline_value: f64,
    /// F of the lifted extremizer w̄^h.
    pub extremizer_value: f64,
    /// Worst constraint or monotonicity residual observed.
    pub violation: f64,
    pub accepted: usize,
    pub attempted: usize,
    #[serde(skip)]
    pub extremizer: GridFunction<T>,
}

impl<T: Scalar> VariationalReport<T> {
    /// Sup never exceeded and attained by the extremizer, both within `tol`.
    pub fn certified(&self, tol: f64) -> bool {
        self.best_numeric_value <= self.closed_form_value + tol
            && self.best_pipeline_value <= self.closed_form_value + tol
            && self.extremizer_value >= self.closed_form_value - tol
            && self.violation <= tol
    }
}

/// Random mean-zero periodic profile with slopes in [−1, 1] and max |slope| = 1.
pub(crate) fn random_profile(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if rng.gen_bool(0.05) {
        // grid-aligned translate of w₀
        let shift = rng.gen_range(0..n);
        return (0..n)
            .map(|j| if (j + shift) % n < n / 2 { 1.0 } else { -1.0 })
            .collect();
    }
    let segments = rng.gen_range(1..=8usize);
    let mut cuts: Vec<usize> = (0..segments - 1).map(|_| rng.gen_range(0..n)).collect();
    cuts.sort_unstable();
    let seg_slopes: Vec<f64> = (0..segments)
        .map(|_| {
            if rng.gen_bool(0.5) {
                let m = rng.gen_range(0.6..1.0);
                if rng.gen_bool(0.5) {
                    m
                } else {
                    -m
                }
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect();
    let noise = if rng.gen_bool(0.5) {
        rng.gen_range(0.0..0.3)
    } else {
        0.0
    };
    let mut slopes: Vec<f64> = (0..n)
        .map(|j| {
            let seg = cuts.partition_point(|&c| c <= j);
            seg_slopes[seg] + noise * rng.gen_range(-1.0..1.0)
        })
        .collect();
    let mean = slopes.iter().sum::<f64>() / n as f64;
    slopes.iter_mut().for_each(|s| *s -= mean);
    let max = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if max > 0.0 {
        slopes.iter_mut().for_each(|s| *s /= max);
    }
    slopes
}

/// Values from periodic slopes by cumulative summation, then mean-projected.
pub(crate) fn integrate_slopes<T: Scalar>(slopes: &[f64], period: T) -> Result<GridFunction<T>> {
    let n = slopes.len();
    let dx = period.as_f64() / n as f64;
    let mut vals = Vec::with_capacity(n);
    let mut acc = 0.0;
    for s in slopes {
        vals.push(acc);
        acc += s * dx;
    }
    let mean = vals.iter().sum::<f64>() / n as f64;
    GridFunction::new(period, vals.into_iter().map(|v| T::lit(v - mean)).collect())
}

/// Draws an admissible element of X_h, or `None` if the profile is rejected.
pub(crate) fn sample_x_h<T: Scalar>(
    rng: &mut ChaCha8Rng,
    h: T,
    period: T,
    n: usize,
) -> Result<Option<GridFunction<T>>> {
    let w = integrate_slopes(&random_profile(rng, n), period)?;
    let norm_sq = l2_sq(&w);
    if h == T::zero() {
        return Ok(Some(w.map(|_| T::zero())?));
    }
    if norm_sq <= T::zero() {
        return Ok(None);
    }
    let s = h / norm_sq.sqrt();
    if s > T::lit(1.0 + 1e-12) {
        return Ok(None);
    }
    let w = w.map(|v| v * s)?;
    if crate::torus_field::lipschitz_seminorm(&w) > T::lit(1.0 + 1e-9) {
        return Ok(None);
    }
    Ok(Some(w))
}

/// First admissible element of X_h drawn from `seed`.
pub fn sample_admissible<T: Scalar>(
    h: T,
    period: T,
    n: usize,
    seed: u64,
) -> Result<GridFunction<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        if let Some(w) = sample_x_h(&mut rng, h, period, n)? {
            return Ok(w);
        }
    }
    Err(MixError::SamplingExhausted { accepted: 0 })
}

/// The chain X_h → even competitor → 𝒲 → 𝒲₀: returns the rearranged
/// element on [−l/2, l/2].
pub fn reduce_to_w0<T: Scalar>(w: &GridFunction<T>) -> Result<PiecewiseLinear<T>> {
    let period = w.period();
    let l = period / T::lit(2.0);
    let even = symmetric_competitor_exact(&PiecewiseLinear::from_periodic(w))?;
    let rising = even.restrict(-l, T::zero())?.shifted(l / T::lit(2.0));
    odd_competitor_exact(&rising)
}

/// Stochastic certification of sup_{X_h} F.
///
/// Samples `n_samples` admissible profiles on an `n`-point grid, pushes each
/// through [`reduce_to_w0`] and records the best values found. The lifted
/// extremizer is evaluated on a fine grid.
pub fn certify_supremum<T: Scalar>(
    h: T,
    period: T,
    n_samples: usize,
    n: usize,
    seed: u64,
) -> Result<VariationalReport<T>> {
    let closed = sup_f_closed_form(h, period)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    let mut best_pipeline = f64::NEG_INFINITY;
    let mut violation = 0.0f64;
    let mut accepted = 0usize;
    let mut attempted = 0usize;
    let budget = 50 * n_samples.max(1);
    while accepted < n_samples && attempted < budget {
        attempted += 1;
        let Some(w) = sample_x_h(&mut rng, h, period, n)? else {
            continue;
        };
        accepted += 1;
        let norm_sq = l2_sq(&w);
        let f = functional_f(&w);
        violation = violation.max((norm_sq - h * h).abs().as_f64());
        violation = violation.max(w.mean().abs().as_f64());
        let pipeline = if h == T::zero() {
            T::zero()
        } else {
            norm_sq - T::lit(2.0) * reduce_to_w0(&w)?.integral_slope_sq_weighted()
        };
        violation = violation.max((f - pipeline).as_f64());
        best = best.max(f.as_f64());
        best_pipeline = best_pipeline.max(pipeline.as_f64());
    }
    if accepted < 10.min(n_samples) || accepted == 0 {
        return Err(MixError::SamplingExhausted { accepted });
    }
    let extremizer = lifted_extremizer(h, period, n.max(1 << 16))?;
    let extremizer_value = functional_f(&extremizer).as_f64();
    Ok(VariationalReport {
        h: h.as_f64(),
        closed_form_value: closed.as_f64(),
        best_numeric_value: best,
        best_pipeline_value: best_pipeline,
        extremizer_value,
        violation,
        accepted,
        attempted,
        extremizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_alpha_branches_meet() {
        let period = 2.0 * std::f64::consts::PI;
        let l = period / 2.0;
        let alpha = 0.6;
        let seam = alpha * alpha * l / 2.0;
        let left = w_alpha_at(alpha, period, seam);
        let right = w_alpha_at(alpha, period, seam * (1.0 + 1e-12));
        assert!((left - seam).abs() < 1e-15);
        assert!((right - seam).abs() < 1e-10);
        assert!((w_alpha_slope_at(alpha, period, seam * (1.0 + 1e-12)) - 1.0).abs() < 1e-9);
        assert!((w_alpha_at(alpha, period, l / 2.0) - 0.3 * l).abs() < 1e-14);
    }

    #[test]
    fn closed_forms_at_endpoints() {
        let period = 1.0f64;
        let hm = h_max(period);
        assert_eq!(sup_f_closed_form(0.0, period).unwrap(), 0.0);
        assert!(sup_f_closed_form(hm, period).unwrap().abs() < 1e-15);
        assert!((inf_f2_closed_form(hm, period).unwrap() - hm * hm / 2.0).abs() < 1e-15);
        assert!(alpha_of_h(hm * 1.01, period).is_err());
    }
}
