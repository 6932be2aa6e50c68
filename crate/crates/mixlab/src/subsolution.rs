//! The sharp explicit subsolution and the strict ε-gap family.
//!
//! Both are built from W^α, the odd L-periodic profile that is the identity
//! near 0, reflects as l − x near l = L/2, and follows an elliptic arc in
//! between. α(t) = S⁻¹(π/4 − ct) drives the family from the square wave at
//! t = 0 to the mixed state at t = T = π/(4c).

use serde::Serialize;

use crate::bounds::{s_alpha, s_inverse};
use crate::error::{MixError, Result};
use crate::scalar::Scalar;
use crate::torus_field::{sum, GridFunction, MixParams};
use crate::variational::{w_alpha_at, w_alpha_slope_at};

/// Tolerance for the λ cross-check between integral and closed form.
pub const LAMBDA_TOL: f64 = 1e-6;

/// Region of a point in one period of W^α.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// |x| ≤ α²l/2, slope +1.
    Inner,
    /// |x| ≥ l − α²l/2, slope −1.
    Outer,
    /// α²l/2 < x < l − α²l/2.
    ArcPositive,
    /// −l + α²l/2 < x < −α²l/2.
    ArcNegative,
}

fn wrap<T: Scalar>(period: T, x: T) -> T {
    let half = period / T::lit(2.0);
    let mut y = x;
    while y >= half {
        y = y - period;
    }
    while y < -half {
        y = y + period;
    }
    y
}

pub fn region_of<T: Scalar>(alpha: T, period: T, x: T) -> Region {
    let x = wrap(period, x);
    let l = period / T::lit(2.0);
    let seam = alpha * alpha * l / T::lit(2.0);
    let s = x.abs();
    if s <= seam {
        Region::Inner
    } else if s >= l - seam {
        Region::Outer
    } else if x > T::zero() {
        Region::ArcPositive
    } else {
        Region::ArcNegative
    }
}

/// Whether x lies in the mixing zone 𝒰 = {α²l/2 < |x| < l − α²l/2}.
pub fn in_mixing_zone<T: Scalar>(alpha: T, period: T, x: T) -> bool {
    matches!(
        region_of(alpha, period, x),
        Region::ArcPositive | Region::ArcNegative
    )
}

/// W^α(x).
pub fn big_w_alpha_at<T: Scalar>(alpha: T, period: T, x: T) -> T {
    let x = wrap(period, x);
    let l = period / T::lit(2.0);
    let s = x.abs();
    let v = if s <= l / T::lit(2.0) {
        w_alpha_at(alpha, period, s)
    } else {
        w_alpha_at(alpha, period, l - s)
    };
    if x < T::zero() {
        -v
    } else {
        v
    }
}

/// ∂ₓW^α(x), taken from the region containing x.
pub fn big_w_alpha_slope_at<T: Scalar>(alpha: T, period: T, x: T) -> T {
    let x = wrap(period, x);
    let l = period / T::lit(2.0);
    let s = x.abs();
    if s <= l / T::lit(2.0) {
        w_alpha_slope_at(alpha, period, s)
    } else {
        -w_alpha_slope_at(alpha, period, l - s)
    }
}

/// W^α sampled on the periodic grid.
pub fn big_w_alpha<T: Scalar>(alpha: T, period: T, n: usize) -> Result<GridFunction<T>> {
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(MixError::OutOfRange {
            name: "alpha",
            value: alpha.as_f64(),
        });
    }
    GridFunction::from_fn(period, n, |x| big_w_alpha_at(alpha, period, x))
}

/// Three-point Gauss-Legendre rule on [a, b]; exact for quintics.
fn gauss3<T: Scalar>(a: T, b: T, f: impl Fn(T) -> T) -> T {
    let mid = (a + b) / T::lit(2.0);
    let half = (b - a) / T::lit(2.0);
    let node = T::lit((3.0f64 / 5.0).sqrt());
    let (w0, w1) = (T::lit(8.0 / 9.0), T::lit(5.0 / 9.0));
    half * (w0 * f(mid) + w1 * (f(mid - half * node) + f(mid + half * node)))
}

/// ∫_𝕋 (1 − (W^α)ₓ²)(W^α)² dx by region-wise quadrature. The integrand is a
/// polynomial of degree 2 in the arc coordinate u = 1 − x/(l/2), so the
/// Gauss rule is exact.
pub fn sharp_functional_f<T: Scalar>(alpha: T, period: T) -> T {
    let l = period / T::lit(2.0);
    let half_l = l / T::lit(2.0);
    let c1 = T::one() - alpha * alpha;
    if c1 <= T::zero() || alpha <= T::zero() {
        return T::zero();
    }
    let integrand = |u: T| {
        let x = half_l * (T::one() - u);
        let w = w_alpha_at(alpha, period, x);
        let p = w_alpha_slope_at(alpha, period, x);
        (T::one() - p * p) * w * w
    };
    T::lit(4.0) * half_l * gauss3(T::zero(), c1, integrand)
}

/// ∫_𝕋 (W^α)² dx by region-wise quadrature.
pub fn sharp_l2_sq<T: Scalar>(alpha: T, period: T) -> T {
    let l = period / T::lit(2.0);
    let half_l = l / T::lit(2.0);
    let seam = alpha * alpha * half_l;
    let c1 = T::one() - alpha * alpha;
    let inner = gauss3(T::zero(), seam, |x| x * x);
    let arc = if c1 > T::zero() {
        half_l
            * gauss3(T::zero(), c1, |u| {
                let w = w_alpha_at(alpha, period, half_l * (T::one() - u));
                w * w
            })
    } else {
        T::zero()
    };
    T::lit(4.0) * (inner + arc)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SharpFamily<T> {
    #[serde(skip)]
    pub params: MixParams<T>,
    pub c: T,
    #[serde(rename = "T")]
    pub t_final: T,
}

impl<T: Scalar> SharpFamily<T> {
    pub fn new(params: &MixParams<T>) -> Self {
        let c = params.rate_c();
        Self {
            params: *params,
            c,
            t_final: T::FRAC_PI_4() / c,
        }
    }

    pub fn period(&self) -> T {
        self.params.l
    }

    fn check_time(&self, t: T) -> Result<()> {
        if !(t >= T::zero() && t <= self.t_final) {
            return Err(MixError::OutOfTimeRange {
                t: t.as_f64(),
                t_max: self.t_final.as_f64(),
            });
        }
        Ok(())
    }

    /// α(t) = S⁻¹(π/4 − ct).
    pub fn alpha_at(&self, t: T) -> Result<T> {
        self.check_time(t)?;
        s_inverse((T::FRAC_PI_4() - self.c * t).max(T::zero()))
    }

    /// Inverse of [`alpha_at`](Self::alpha_at).
    pub fn time_of_alpha(&self, alpha: T) -> Result<T> {
        Ok((T::FRAC_PI_4() - s_alpha(alpha)?) / self.c)
    }

    /// c/(α√(1 − α²)).
    pub fn lambda_closed(&self, alpha: T) -> T {
        self.c / (alpha * (T::one() - alpha * alpha).sqrt())
    }

    /// (E/L^{d−1})^{1/2} F(W^α)^{−1/2}, the λ that saturates the energy budget.
    pub fn lambda_integral(&self, alpha: T) -> T {
        self.params.energy_rate() / sharp_functional_f(alpha, self.period()).sqrt()
    }

    /// h(t) = h_max α√(2 − α²).
    pub fn h_closed(&self, alpha: T) -> T {
        self.params.h_max() * alpha * (T::lit(2.0) - alpha * alpha).sqrt()
    }

    pub fn snapshot_at(&self, t: T, n: usize) -> Result<SubsolutionSnapshot<T>> {
        if !(t > T::zero() && t < self.t_final) {
            return Err(MixError::OutOfTimeRange {
                t: t.as_f64(),
                t_max: self.t_final.as_f64(),
            });
        }
        let alpha = self.alpha_at(t)?;
        let lambda = self.lambda_closed(alpha);
        let lambda_int = self.lambda_integral(alpha);
        if ((lambda_int - lambda) / lambda).abs() > T::lit(LAMBDA_TOL) {
            return Err(MixError::ConstraintViolation(format!(
                "lambda closed form {lambda} disagrees with integral form {lambda_int}"
            )));
        }
        assemble(
            t,
            alpha,
            lambda,
            lambda,
            self.params.l,
            self.params.transverse_volume(),
            n,
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsolutionSnapshot<T> {
    pub t: T,
    #[serde(skip)]
    pub rho: GridFunction<T>,
    #[serde(skip)]
    pub m1: GridFunction<T>,
    #[serde(skip)]
    pub e: GridFunction<T>,
    #[serde(skip)]
    pub w: GridFunction<T>,
    /// λ entering m₁.
    pub lambda: T,
    /// λ entering e (equal to `lambda` for the sharp family).
    pub lambda_e: T,
    pub alpha: T,
    /// L^{d−1}∫e dx₁, integrated exactly over each region.
    pub energy: T,
}

fn assemble<T: Scalar>(
    t: T,
    alpha: T,
    lambda_m: T,
    lambda_e: T,
    period: T,
    lift: T,
    n: usize,
) -> Result<SubsolutionSnapshot<T>> {
    let w = big_w_alpha(alpha, period, n)?;
    let rho = GridFunction::from_fn(period, n, |x| big_w_alpha_slope_at(alpha, period, x))?;
    let m1 = w.with_values(
        w.values()
            .iter()
            .zip(rho.values())
            .map(|(&w, &r)| lambda_m * (T::one() - r * r) * w)
            .collect(),
    )?;
    let e = w.with_values(
        w.values()
            .iter()
            .zip(rho.values())
            .map(|(&w, &r)| lambda_e * lambda_e * (T::one() - r * r) * w * w)
            .collect(),
    )?;
    let energy = lift * lambda_e * lambda_e * sharp_functional_f(alpha, period);
    Ok(SubsolutionSnapshot {
        t,
        rho,
        m1,
        e,
        w,
        lambda: lambda_m,
        lambda_e,
        alpha,
        energy,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SnapshotMargins {
    /// max(|ρ| − 1).
    pub rho_excess: f64,
    /// min over the grid of e(1 − ρ²) − m₁².
    pub hull_slack: f64,
    /// min over 𝒰 of e(1 − ρ²) − m₁².
    pub zone_slack: f64,
    /// max over 𝒰 of |e(1 − ρ²) − m₁²|.
    pub zone_saturation: f64,
    /// E − L^{d−1}∫e.
    pub energy_slack: f64,
}

impl<T: Scalar> SubsolutionSnapshot<T> {
    pub fn period(&self) -> T {
        self.w.period()
    }

    pub fn margins(&self, params: &MixParams<T>) -> SnapshotMargins {
        let period = self.period();
        let mut m = SnapshotMargins {
            rho_excess: f64::NEG_INFINITY,
            hull_slack: f64::INFINITY,
            zone_slack: f64::INFINITY,
            zone_saturation: 0.0,
            energy_slack: (params.e - self.energy).as_f64(),
        };
        for j in 0..self.w.n() {
            let r = self.rho.values()[j];
            let slack =
                (self.e.values()[j] * (T::one() - r * r) - self.m1.values()[j].powi(2)).as_f64();
            m.rho_excess = m.rho_excess.max((r.abs() - T::one()).as_f64());
            m.hull_slack = m.hull_slack.min(slack);
            if in_mixing_zone(self.alpha, period, self.w.x(j)) {
                m.zone_slack = m.zone_slack.min(slack);
                m.zone_saturation = m.zone_saturation.max(slack.abs());
            }
        }
        m
    }

    /// Checks |ρ| ≤ 1, m₁² ≤ e(1 − ρ²) + 1e−9 and the energy budget to 1e−8.
    pub fn check_invariants(&self, params: &MixParams<T>) -> Result<SnapshotMargins> {
        let m = self.margins(params);
        if m.rho_excess > 1e-12 {
            return Err(MixError::ConstraintViolation(format!(
                "|rho| exceeds 1 by {}",
                m.rho_excess
            )));
        }
        if m.hull_slack < -1e-9 {
            return Err(MixError::ConstraintViolation(format!(
                "m1^2 exceeds e(1-rho^2) by {}",
                -m.hull_slack
            )));
        }
        if m.energy_slack < -1e-8 {
            return Err(MixError::ConstraintViolation(format!(
                "energy exceeds budget by {}",
                -m.energy_slack
            )));
        }
        Ok(m)
    }

    /// ‖ρ‖_{H⁻¹(𝕋)} = ‖w‖_{L²(𝕋)}, integrated exactly over each region.
    pub fn h(&self) -> T {
        sharp_l2_sq(self.alpha, self.period()).sqrt()
    }
}

/// Span of grid indices `j − 2 ..= j + 2` restricted to the region of x_j.
fn same_region<T: Scalar>(alpha: T, w: &GridFunction<T>, j: usize, k: isize) -> bool {
    let n = w.n() as isize;
    let idx = ((j as isize + k) % n + n) % n;
    let p = w.period();
    region_of(alpha, p, w.x(idx as usize)) == region_of(alpha, p, w.x(j))
}

/// Second-order difference of `w` at node j that never reaches across a seam.
fn region_slope<T: Scalar>(alpha: T, w: &GridFunction<T>, j: usize) -> Option<T> {
    let n = w.n();
    let v = w.values();
    let dx = w.dx();
    let at = |k: isize| v[((j as isize + k).rem_euclid(n as isize)) as usize];
    let two = T::lit(2.0);
    if same_region(alpha, w, j, -1) && same_region(alpha, w, j, 1) {
        return Some((at(1) - at(-1)) / (two * dx));
    }
    if same_region(alpha, w, j, 1) && same_region(alpha, w, j, 2) {
        return Some((-T::lit(3.0) * at(0) + T::lit(4.0) * at(1) - at(2)) / (two * dx));
    }
    if same_region(alpha, w, j, -1) && same_region(alpha, w, j, -2) {
        return Some((T::lit(3.0) * at(0) - T::lit(4.0) * at(-1) + at(-2)) / (two * dx));
    }
    None
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HjReport {
    /// sup over arc-region nodes of |∂ₜw + λ(1 − wₓ²)w|.
    pub residual: f64,
    /// |τ̇ − λ| / λ with τ = −log α.
    pub tau_defect: f64,
    pub nodes: usize,
}

/// Hamilton-Jacobi residual of the sharp family at time t on an n-point grid.
pub fn verify_hamilton_jacobi<T: Scalar>(
    family: &SharpFamily<T>,
    t: T,
    n: usize,
) -> Result<HjReport> {
    let dt = T::lit(1e-5) * family.t_final;
    if !(t - T::lit(2.0) * dt > T::zero() && t + T::lit(2.0) * dt < family.t_final) {
        return Err(MixError::OutOfTimeRange {
            t: t.as_f64(),
            t_max: family.t_final.as_f64(),
        });
    }
    let period = family.period();
    let alpha = family.alpha_at(t)?;
    let a_prev = family.alpha_at(t - dt)?;
    let a_next = family.alpha_at(t + dt)?;
    let lambda = family.lambda_closed(alpha);
    let w = big_w_alpha(alpha, period, n)?;
    let mut residual = 0.0f64;
    let mut nodes = 0usize;
    for j in 0..n {
        let x = w.x(j);
        // α decreases in time, so the arc at t − dt is the narrowest of the three
        if !in_mixing_zone(a_prev, period, x) {
            continue;
        }
        let Some(p) = region_slope(alpha, &w, j) else {
            continue;
        };
        let wt = (big_w_alpha_at(a_next, period, x) - big_w_alpha_at(a_prev, period, x))
            / (T::lit(2.0) * dt);
        let r = wt + lambda * (T::one() - p * p) * w.values()[j];
        residual = residual.max(r.abs().as_f64());
        nodes += 1;
    }
    // fourth-order central difference
    let a_prev2 = family.alpha_at(t - T::lit(2.0) * dt)?;
    let a_next2 = family.alpha_at(t + T::lit(2.0) * dt)?;
    let tau_dot = -(T::lit(8.0) * (a_next.ln() - a_prev.ln()) - (a_next2.ln() - a_prev2.ln()))
        / (T::lit(12.0) * dt);
    let tau_defect = ((tau_dot - lambda) / lambda).abs().as_f64();
    Ok(HjReport {
        residual,
        tau_defect,
        nodes,
    })
}

/// ψ(t, x) = χ(t) sin(2π(x − x₀)/L) with a smooth bump χ supported in
/// (T/10, 9T/10). With x₀ = 0 the pairing vanishes by parity alone.
#[derive(Debug, Clone, Copy)]
pub struct BumpSineTest<T> {
    pub t_lo: T,
    pub t_hi: T,
    pub period: T,
    pub phase: T,
}

impl<T: Scalar> BumpSineTest<T> {
    pub fn for_family(family: &SharpFamily<T>) -> Self {
        Self {
            t_lo: family.t_final / T::lit(10.0),
            t_hi: family.t_final * T::lit(0.9),
            period: family.period(),
            phase: T::zero(),
        }
    }

    pub fn with_phase(self, phase: T) -> Self {
        Self { phase, ..self }
    }

    fn chi_and_derivative(&self, t: T) -> (T, T) {
        if t <= self.t_lo || t >= self.t_hi {
            return (T::zero(), T::zero());
        }
        let half = (self.t_hi - self.t_lo) / T::lit(2.0);
        let s = (t - self.t_lo) / half - T::one();
        let g = T::one() - s * s;
        let chi = (-T::one() / g).exp();
        let dchi = chi * (-T::lit(2.0) * s / (g * g)) / half;
        (chi, dchi)
    }
}

pub trait SpaceTimeTest<T> {
    fn dt(&self, t: T, x: T) -> T;
    fn dx(&self, t: T, x: T) -> T;
}

impl<T: Scalar> SpaceTimeTest<T> for BumpSineTest<T> {
    fn dt(&self, t: T, x: T) -> T {
        let k = T::lit(2.0) * T::PI() / self.period;
        self.chi_and_derivative(t).1 * (k * (x - self.phase)).sin()
    }

    fn dx(&self, t: T, x: T) -> T {
        let k = T::lit(2.0) * T::PI() / self.period;
        self.chi_and_derivative(t).0 * k * (k * (x - self.phase)).cos()
    }
}

/// |∫∫ ρψₜ + m₁ψₓ dx dt| with the midpoint rule in t and the trapezoid rule
/// in x.
pub fn weak_form_residual<T: Scalar>(
    family: &SharpFamily<T>,
    test_fn: &impl SpaceTimeTest<T>,
    n: usize,
    nt: usize,
) -> Result<T> {
    let period = family.period();
    let ht = family.t_final / T::from_usize_lossy(nt);
    let mut slices = Vec::with_capacity(nt);
    for i in 0..nt {
        let t = (T::from_usize_lossy(i) + T::lit(0.5)) * ht;
        let alpha = family.alpha_at(t)?;
        let lambda = family.lambda_closed(alpha);
        let g = GridFunction::from_fn(period, n, |x| {
            let w = big_w_alpha_at(alpha, period, x);
            let r = big_w_alpha_slope_at(alpha, period, x);
            let m = lambda * (T::one() - r * r) * w;
            r * test_fn.dt(t, x) + m * test_fn.dx(t, x)
        })?;
        slices.push(g.integral());
    }
    Ok((sum(&slices) * ht).abs())
}

/// Snapshot of the ε-gap family: m from λ_{E−2ε}, e from λ_{E−ε}.
pub fn epsilon_gap_family<T: Scalar>(
    eps: T,
    params: &MixParams<T>,
    t: T,
    n: usize,
) -> Result<SubsolutionSnapshot<T>> {
    if !(eps > T::zero() && eps < params.e / T::lit(2.0)) {
        return Err(MixError::OutOfRange {
            name: "eps",
            value: eps.as_f64(),
        });
    }
    let family_m = SharpFamily::new(&params.with_energy(params.e - T::lit(2.0) * eps)?);
    if !(t > T::zero() && t < family_m.t_final) {
        return Err(MixError::OutOfTimeRange {
            t: t.as_f64(),
            t_max: family_m.t_final.as_f64(),
        });
    }
    let alpha = family_m.alpha_at(t)?;
    let lambda_m = family_m.lambda_closed(alpha);
    let lambda_e = lambda_m * ((params.e - eps) / (params.e - T::lit(2.0) * eps)).sqrt();
    let snap = assemble(
        t,
        alpha,
        lambda_m,
        lambda_e,
        params.l,
        params.transverse_volume(),
        n,
    )?;
    let margins = snap.margins(params);
    if margins.zone_slack.is_finite() && !(margins.zone_slack > 0.0) {
        return Err(MixError::ConstraintViolation(format!(
            "hull inequality not strict on the mixing zone: slack {}",
            margins.zone_slack
        )));
    }
    let target = params.e - eps;
    if ((snap.energy - target) / params.e).abs() > T::lit(1e-8) {
        return Err(MixError::ConstraintViolation(format!(
            "energy {} differs from E - eps = {target}",
            snap.energy
        )));
    }
    Ok(snap)
}

/// T_ε = h_max (L^{d−1}/(E − 2ε))^{1/2} √2π/4.
pub fn epsilon_gap_time<T: Scalar>(eps: T, params: &MixParams<T>) -> Result<T> {
    if !(eps >= T::zero() && eps < params.e / T::lit(2.0)) {
        return Err(MixError::OutOfRange {
            name: "eps",
            value: eps.as_f64(),
        });
    }
    Ok(params
        .with_energy(params.e - T::lit(2.0) * eps)?
        .sharp_mixing_time())
}

/// γ(t) = 5E/(4(E − 2ε)) λ²_{E−2ε} α² l².
pub fn gamma_of<T: Scalar>(snapshot: &SubsolutionSnapshot<T>, eps: T, params: &MixParams<T>) -> T {
    let l = params.l / T::lit(2.0);
    T::lit(5.0) * params.e / (T::lit(4.0) * (params.e - T::lit(2.0) * eps))
        * snapshot.lambda
        * snapshot.lambda
        * snapshot.alpha
        * snapshot.alpha
        * l
        * l
}

/// min over 𝒰 of γ − (4m₁²/(1 − ρ²)² + e).
pub fn gamma_certificate<T: Scalar>(
    snapshot: &SubsolutionSnapshot<T>,
    eps: T,
    params: &MixParams<T>,
) -> Result<T> {
    let alpha = snapshot.alpha;
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(MixError::EmptyMixingZone {
            alpha: alpha.as_f64(),
        });
    }
    let gamma = gamma_of(snapshot, eps, params);
    let period = snapshot.period();
    let mut margin: Option<T> = None;
    for j in 0..snapshot.w.n() {
        if !in_mixing_zone(alpha, period, snapshot.w.x(j)) {
            continue;
        }
        let r = snapshot.rho.values()[j];
        let m = snapshot.m1.values()[j];
        let g = T::one() - r * r;
        let lhs = T::lit(4.0) * m * m / (g * g) + snapshot.e.values()[j];
        let here = gamma - lhs;
        margin = Some(margin.map_or(here, |v: T| v.min(here)));
    }
    margin.ok_or(MixError::EmptyMixingZone {
        alpha: alpha.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_partition_the_period() {
        let p = 2.0 * std::f64::consts::PI;
        assert_eq!(region_of(0.5, p, 0.1), Region::Inner);
        assert_eq!(region_of(0.5, p, 1.5), Region::ArcPositive);
        assert_eq!(region_of(0.5, p, -1.5), Region::ArcNegative);
        assert_eq!(region_of(0.5, p, 3.1), Region::Outer);
    }

    #[test]
    fn big_w_is_odd_and_peaks_at_quarter() {
        let p = 2.0 * std::f64::consts::PI;
        let a = 0.7;
        let peak = big_w_alpha_at(a, p, p / 4.0);
        assert!((peak - a * p / 4.0).abs() < 1e-14);
        for &x in &[0.3, 1.2, 2.9] {
            assert!((big_w_alpha_at(a, p, x) + big_w_alpha_at(a, p, -x)).abs() < 1e-15);
        }
    }
}
