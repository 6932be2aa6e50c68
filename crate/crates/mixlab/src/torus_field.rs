//! Periodic grid functions on the circle 𝕋 = [−L/2, L/2).
//!
//! Samples live at `x_j = −L/2 + jL/n`. Fourier coefficients follow
//! `f(x) = Σ c_k exp(2πikx/L)` with `c_k = (1/n) Σ_j f_j exp(−2πik x_j/L)`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{MixError, Result};
use crate::scalar::Scalar;

/// Absolute tolerance on the mean of a density handed to the Poisson solver.
pub const MEAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    period: T,
    values: Vec<T>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(period: T, values: Vec<T>) -> Result<Self> {
        check_grid(period, values.len())?;
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(MixError::InvalidGrid(format!(
                "non-finite sample at index {bad}"
            )));
        }
        Ok(Self { period, values })
    }

    pub fn from_fn(period: T, n: usize, f: impl Fn(T) -> T) -> Result<Self> {
        check_grid(period, n)?;
        let dx = period / T::from_usize_lossy(n);
        let half = period / T::lit(2.0);
        let values = (0..n)
            .map(|j| f(T::from_usize_lossy(j) * dx - half))
            .collect();
        Self::new(period, values)
    }

    pub fn zeros(period: T, n: usize) -> Result<Self> {
        Self::new(period, vec![T::zero(); n])
    }

    /// ρ̂₀: +1 on (−L/2, 0), −1 on (0, L/2).
    ///
    /// Node `j` carries the value on the cell `[x_j, x_{j+1})`, so both jumps
    /// fall between samples and every value is exactly ±1.
    pub fn square_wave(period: T, n: usize) -> Result<Self> {
        check_grid(period, n)?;
        let values = (0..n)
            .map(|j| if j < n / 2 { T::one() } else { -T::one() })
            .collect();
        Self::new(period, values)
    }

    /// w₀(x) = L/4 − |x|, the triangle wave.
    pub fn triangle_wave(period: T, n: usize) -> Result<Self> {
        let quarter = period / T::lit(4.0);
        Self::from_fn(period, n, |x| quarter - x.abs())
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn dx(&self) -> T {
        self.period / T::from_usize_lossy(self.n())
    }

    pub fn x(&self, j: usize) -> T {
        T::from_usize_lossy(j) * self.dx() - self.period / T::lit(2.0)
    }

    pub fn grid(&self) -> Vec<T> {
        (0..self.n()).map(|j| self.x(j)).collect()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        if values.len() != self.n() {
            return Err(MixError::DimensionMismatch(values.len(), self.n()));
        }
        Self::new(self.period, values)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn mean(&self) -> T {
        sum(&self.values) / T::from_usize_lossy(self.n())
    }

    /// ∫_𝕋 f dx with the periodic trapezoid rule.
    pub fn integral(&self) -> T {
        sum(&self.values) * self.dx()
    }

    /// ∫_𝕋 f² dx on the grid (equals L Σ|c_k|² exactly).
    pub fn l2_norm_sq(&self) -> T {
        let sq: Vec<T> = self.values.iter().map(|&v| v * v).collect();
        sum(&sq) * self.dx()
    }

    pub fn l2_norm(&self) -> T {
        self.l2_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Centered difference (f_{j+1} − f_{j−1}) / 2Δx with periodic wrap.
    pub fn derivative_centered(&self) -> Self {
        let n = self.n();
        let two_dx = T::lit(2.0) * self.dx();
        let values = (0..n)
            .map(|j| (self.values[(j + 1) % n] - self.values[(j + n - 1) % n]) / two_dx)
            .collect();
        Self {
            period: self.period,
            values,
        }
    }

    pub fn spectral(&self) -> SpectralField<T> {
        SpectralField::from_grid(self)
    }

    /// Value of the periodic piecewise-linear interpolant at `x`.
    pub fn interpolate(&self, x: T) -> T {
        let n = self.n();
        let s = (x + self.period / T::lit(2.0)) / self.dx();
        let fl = s.floor();
        let theta = s - fl;
        let nn = n as i64;
        let i = (fl.to_i64().unwrap_or(0).rem_euclid(nn)) as usize;
        let a = self.values[i];
        let b = self.values[(i + 1) % n];
        a + (b - a) * theta
    }
}

fn check_grid<T: Scalar>(period: T, n: usize) -> Result<()> {
    if !(period > T::zero()) || !period.is_finite() {
        return Err(MixError::InvalidGrid(format!(
            "period must be positive, got {period}"
        )));
    }
    if n < 16 || !n.is_power_of_two() {
        return Err(MixError::InvalidGrid(format!(
            "sample count must be a power of two >= 16, got {n}"
        )));
    }
    Ok(())
}

/// Pairwise summation keeps round-off at O(log n · ε).
pub(crate) fn sum<T: Scalar>(xs: &[T]) -> T {
    if xs.len() <= 32 {
        return xs.iter().fold(T::zero(), |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    sum(&xs[..mid]) + sum(&xs[mid..])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    period: T,
    coeffs: Vec<Complex<T>>,
}

impl<T: Scalar> SpectralField<T> {
    pub fn from_grid(f: &GridFunction<T>) -> Self {
        let n = f.n();
        let mut buf: Vec<Complex<T>> = f
            .values()
            .iter()
            .map(|&v| Complex::new(v, T::zero()))
            .collect();
        FftPlanner::<T>::new().plan_fft_forward(n).process(&mut buf);
        let inv_n = T::one() / T::from_usize_lossy(n);
        // x_0 = −L/2 contributes the phase (−1)^k.
        for (i, c) in buf.iter_mut().enumerate() {
            let s = if i % 2 == 0 { inv_n } else { -inv_n };
            *c = *c * s;
        }
        Self {
            period: f.period(),
            coeffs: buf,
        }
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// Signed wavenumber of storage index `i`; the Nyquist slot maps to −n/2.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n();
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn hermitian_defect(&self) -> T {
        let n = self.n();
        (1..n).fold(T::zero(), |m, i| {
            let d = self.coeffs[i] - self.coeffs[n - i].conj();
            m.max(d.norm())
        })
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermitian_defect() <= tol
    }

    /// Multiply every coefficient by `g(k)`.
    pub fn scaled(&self, g: impl Fn(i64) -> Complex<T>) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * g(self.wavenumber(i)))
            .collect();
        Self {
            period: self.period,
            coeffs,
        }
    }

    /// L Σ |c_k|², the grid L² norm squared by Parseval.
    pub fn parseval_sq(&self) -> T {
        let terms: Vec<T> = self.coeffs.iter().map(|c| c.norm_sqr()).collect();
        self.period * sum(&terms)
    }

    pub fn to_grid(&self) -> Result<GridFunction<T>> {
        let mut buf: Vec<Complex<T>> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if i % 2 == 0 { c } else { -c })
            .collect();
        FftPlanner::<T>::new()
            .plan_fft_inverse(self.n())
            .process(&mut buf);
        GridFunction::new(self.period, buf.into_iter().map(|c| c.re).collect())
    }
}

fn require_zero_mean<T: Scalar>(rho: &GridFunction<T>) -> Result<()> {
    let mean = rho.mean();
    if mean.abs() > T::lit(MEAN_TOL) {
        return Err(MixError::NonZeroMean {
            mean: mean.as_f64(),
        });
    }
    Ok(())
}

/// (L / 2πk)², zero for k = 0.
fn inverse_laplacian_symbol<T: Scalar>(period: T, k: i64) -> T {
    if k == 0 {
        return T::zero();
    }
    let q = period / (T::lit(2.0) * T::PI() * T::lit(k as f64));
    q * q
}

/// φ with ∂²ₓφ = ρ and zero mean.
pub fn solve_potential<T: Scalar>(rho: &GridFunction<T>) -> Result<GridFunction<T>> {
    require_zero_mean(rho)?;
    let period = rho.period();
    rho.spectral()
        .scaled(|k| Complex::new(-inverse_laplacian_symbol(period, k), T::zero()))
        .to_grid()
}

/// φₓ, computed spectrally; this is the function w of the variational problems.
pub fn potential_derivative<T: Scalar>(rho: &GridFunction<T>) -> Result<GridFunction<T>> {
    require_zero_mean(rho)?;
    let n = rho.n() as i64;
    let period = rho.period();
    rho.spectral()
        .scaled(|k| {
            if k == 0 || k == -n / 2 {
                return Complex::new(T::zero(), T::zero());
            }
            let q = period / (T::lit(2.0) * T::PI() * T::lit(k as f64));
            Complex::new(T::zero(), -q)
        })
        .to_grid()
}

/// ‖ρ‖_{H⁻¹(𝕋)} = (L Σ_{k≠0} |c_k|² (L/2πk)²)^{1/2}.
pub fn hminus1_norm_1d<T: Scalar>(rho: &GridFunction<T>) -> Result<T> {
    require_zero_mean(rho)?;
    let spec = rho.spectral();
    let period = rho.period();
    let terms: Vec<T> = spec
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c.norm_sqr() * inverse_laplacian_symbol(period, spec.wavenumber(i)))
        .collect();
    Ok((period * sum(&terms)).sqrt())
}

/// ‖ρ‖_{H⁻¹(𝕋^d)} of the x₁-only extension: L^{(d−1)/2} ‖ρ‖_{H⁻¹(𝕋)}.
pub fn hminus1_norm_lift<T: Scalar>(rho: &GridFunction<T>, params: &MixParams<T>) -> Result<T> {
    Ok(params.lift_factor() * hminus1_norm_1d(rho)?)
}

/// max_j |f_{j+1} − f_j| / Δx with periodic wrap.
pub fn lipschitz_seminorm<T: Scalar>(f: &GridFunction<T>) -> T {
    let n = f.n();
    let v = f.values();
    let dx = f.dx();
    (0..n).fold(T::zero(), |m, j| m.max((v[(j + 1) % n] - v[j]).abs() / dx))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixParams<T> {
    pub l: T,
    pub e: T,
    pub d: usize,
}

impl<T: Scalar> MixParams<T> {
    pub fn new(l: T, e: T, d: usize) -> Result<Self> {
        if !(l > T::zero()) || !l.is_finite() {
            return Err(MixError::InvalidParams(format!(
                "L must be positive, got {l}"
            )));
        }
        if !(e > T::zero()) || !e.is_finite() {
            return Err(MixError::InvalidParams(format!(
                "E must be positive, got {e}"
            )));
        }
        if d < 2 {
            return Err(MixError::InvalidParams(format!(
                "d must be at least 2, got {d}"
            )));
        }
        Ok(Self { l, e, d })
    }

    /// Same box and dimension, different energy budget.
    pub fn with_energy(&self, e: T) -> Result<Self> {
        Self::new(self.l, e, self.d)
    }

    /// L^{(d−1)/2}.
    pub fn lift_factor(&self) -> T {
        self.l.powf(T::lit((self.d as f64 - 1.0) / 2.0))
    }

    /// L^{d−1}.
    pub fn transverse_volume(&self) -> T {
        self.l.powi(self.d as i32 - 1)
    }

    /// h_max = L^{3/2}/√48.
    pub fn h_max(&self) -> T {
        h_max(self.l)
    }

    /// H_max = L^{(d+2)/2}/√48.
    pub fn big_h_max(&self) -> T {
        self.lift_factor() * self.h_max()
    }

    /// (E / L^{d−1})^{1/2}.
    pub fn energy_rate(&self) -> T {
        (self.e / self.l.powi(self.d as i32 - 1)).sqrt()
    }

    /// c = 2^{−1/2} E^{1/2} L^{−(d−1)/2} h_max^{−1}.
    pub fn rate_c(&self) -> T {
        self.energy_rate() / (T::SQRT_2() * self.h_max())
    }

    /// T̂₀ = π/(4c) = h_max (L^{d−1}/E)^{1/2} √2 π/4.
    pub fn sharp_mixing_time(&self) -> T {
        T::FRAC_PI_4() / self.rate_c()
    }
}

/// h_max(L) = L^{3/2}/√48.
pub fn h_max<T: Scalar>(l: T) -> T {
    l.powf(T::lit(1.5)) / T::lit(48.0).sqrt()
}
