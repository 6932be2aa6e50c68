//! Symmetric-decreasing and odd rearrangements.
//!
//! The `*_exact` functions act on piecewise-linear functions and return the
//! exact rearrangement of the interpolant, which is again piecewise linear.
//! The grid-level wrappers sample that result back onto the input grid.

use crate::error::{MixError, Result};
use crate::piecewise::PiecewiseLinear;
use crate::scalar::Scalar;
use crate::torus_field::{lipschitz_seminorm, GridFunction};

/// Samples on [−a, a] at `x_j = −a + 2aj/n`, `j = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactFunction<T> {
    a: T,
    values: Vec<T>,
}

impl<T: Scalar> CompactFunction<T> {
    pub fn new(a: T, values: Vec<T>) -> Result<Self> {
        if !(a > T::zero()) || !a.is_finite() {
            return Err(MixError::InvalidGrid(format!(
                "half-width must be positive, got {a}"
            )));
        }
        let n = values.len().saturating_sub(1);
        if n < 16 || !n.is_multiple_of(2) {
            return Err(MixError::InvalidGrid(format!(
                "need an even sample count n >= 16 (n + 1 values), got n = {n}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MixError::InvalidGrid("non-finite sample".into()));
        }
        Ok(Self { a, values })
    }

    pub fn from_fn(a: T, n: usize, f: impl Fn(T) -> T) -> Result<Self> {
        let dx = T::lit(2.0) * a / T::from_usize_lossy(n.max(1));
        let values = (0..=n)
            .map(|j| f(T::from_usize_lossy(j) * dx - a))
            .collect();
        Self::new(a, values)
    }

    pub fn half_width(&self) -> T {
        self.a
    }

    /// Number of intervals.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dx(&self) -> T {
        T::lit(2.0) * self.a / T::from_usize_lossy(self.n())
    }

    pub fn x(&self, j: usize) -> T {
        if j == self.n() {
            return self.a;
        }
        T::from_usize_lossy(j) * self.dx() - self.a
    }

    pub fn grid(&self) -> Vec<T> {
        (0..=self.n()).map(|j| self.x(j)).collect()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn to_piecewise(&self) -> PiecewiseLinear<T> {
        PiecewiseLinear::new(self.grid(), self.values.clone()).expect("uniform grid is ordered")
    }

    /// Samples `f` on this grid.
    pub fn resample(&self, f: &PiecewiseLinear<T>) -> Result<Self> {
        Self::new(self.a, f.sample(&self.grid()))
    }

    /// max_j |f_{j+1} − f_j| / Δx.
    pub fn lipschitz(&self) -> T {
        let dx = self.dx();
        self.values
            .windows(2)
            .fold(T::zero(), |m, w| m.max((w[1] - w[0]).abs() / dx))
    }

    pub fn min_slope(&self) -> T {
        let dx = self.dx();
        self.values
            .windows(2)
            .fold(T::infinity(), |m, w| m.min((w[1] - w[0]) / dx))
    }

    pub fn max_slope(&self) -> T {
        let dx = self.dx();
        self.values
            .windows(2)
            .fold(T::neg_infinity(), |m, w| m.max((w[1] - w[0]) / dx))
    }

    /// Σ_j |f_j|^p Δx over all n + 1 nodes; invariant under permutations.
    pub fn grid_power_sum(&self, p: i32) -> T {
        let terms: Vec<T> = self.values.iter().map(|v| v.abs().powi(p)).collect();
        crate::torus_field::sum(&terms) * self.dx()
    }
}

/// Discrete f^♯: values sorted in decreasing order and placed at the centre
/// index, then alternately right and left.
pub fn symmetric_decreasing<T: Scalar>(f: &CompactFunction<T>) -> Result<CompactFunction<T>> {
    if let Some(&v) = f.values().iter().find(|&&v| v < T::lit(-1e-12)) {
        return Err(MixError::NegativeInput { value: v.as_f64() });
    }
    let mut sorted = f.values().to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
    let n = f.n();
    let c = n / 2;
    let mut out = vec![T::zero(); n + 1];
    out[c] = sorted[0];
    for (i, &v) in sorted.iter().enumerate().skip(1) {
        let k = i.div_ceil(2);
        let idx = if i % 2 == 1 { c + k } else { c - k };
        out[idx] = v;
    }
    CompactFunction::new(f.half_width(), out)
}

/// Exact symmetric-decreasing rearrangement of a non-negative
/// piecewise-linear function extended by zero to ℝ.
///
/// The result is even, non-increasing on [0, ∞), equidistributed with `f`,
/// and supported on [−a₁, a₁] with 2a₁ = |{f > 0}|. Returns `None` when
/// `f` vanishes identically.
pub fn symmetric_rearrangement_exact<T: Scalar>(
    f: &PiecewiseLinear<T>,
) -> Result<Option<PiecewiseLinear<T>>> {
    let (xs, ys) = (f.xs(), f.ys());
    if let Some(&v) = ys.iter().find(|&&v| v < T::zero()) {
        return Err(MixError::NegativeInput { value: v.as_f64() });
    }
    let mut levels: Vec<T> = ys.iter().copied().filter(|&y| y > T::zero()).collect();
    if levels.is_empty() {
        return Ok(None);
    }
    levels.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    levels.dedup();
    let m = levels.len();
    // Index of a node value in the descending level list; 0 maps past the end.
    let idx = |y: T| -> usize {
        if y <= T::zero() {
            m
        } else {
            levels.partition_point(|&t| t > y)
        }
    };
    let mut activate = vec![T::zero(); m + 1];
    let mut deactivate = vec![T::zero(); m + 1];
    let mut plateau = vec![T::zero(); m + 1];
    for i in 1..xs.len() {
        let h = xs[i] - xs[i - 1];
        if h <= T::zero() {
            continue;
        }
        let (lo, hi) = if ys[i - 1] <= ys[i] {
            (ys[i - 1], ys[i])
        } else {
            (ys[i], ys[i - 1])
        };
        if hi <= T::zero() {
            continue;
        }
        if hi == lo {
            plateau[idx(hi)] = plateau[idx(hi)] + h;
            continue;
        }
        let rate = h / (hi - lo);
        activate[idx(hi)] = activate[idx(hi)] + rate;
        deactivate[idx(lo)] = deactivate[idx(lo)] + rate;
    }
    let half = T::lit(0.5);
    let mut right: Vec<(T, T)> = Vec::with_capacity(2 * m + 1);
    let mut lam = T::zero();
    let mut rate = T::zero();
    for k in 0..m {
        let t = levels[k];
        right.push((lam * half, t));
        if plateau[k] > T::zero() {
            lam = lam + plateau[k];
            right.push((lam * half, t));
        }
        rate = rate + activate[k] - deactivate[k];
        let next = if k + 1 < m { levels[k + 1] } else { T::zero() };
        lam = lam + rate * (t - next);
    }
    right.push((lam * half, T::zero()));
    let mut nodes: Vec<(T, T)> = right.iter().rev().map(|&(x, y)| (-x, y)).collect();
    // x = 0 appears once from each side
    nodes.pop();
    nodes.extend(right.iter().copied());
    Ok(Some(PiecewiseLinear::from_nodes_clamped(nodes)?))
}

fn support_half_width<T: Scalar>(f: &Option<PiecewiseLinear<T>>) -> T {
    f.as_ref().map_or(T::zero(), |g| g.x_max())
}

/// Exact symmetric competitor of one period `w` on [−l, l].
///
/// Positive and negative parts are rearranged separately; the positive part
/// is centred at 0 and the negative part at ±l, giving
/// `v(x) = v₊(x) − v₋(x − l) − v₋(x + l)`.
pub fn symmetric_competitor_exact<T: Scalar>(w: &PiecewiseLinear<T>) -> Result<PiecewiseLinear<T>> {
    let l = (w.x_max() - w.x_min()) / T::lit(2.0);
    let vp = symmetric_rearrangement_exact(&w.positive_part())?;
    let vm = symmetric_rearrangement_exact(&w.negative_part())?;
    let a1 = support_half_width(&vp);
    let mut nodes: Vec<(T, T)> = Vec::new();
    match &vm {
        Some(g) => {
            for (&x, &y) in g.xs().iter().zip(g.ys()) {
                if x >= T::zero() {
                    nodes.push((x - l, -y));
                }
            }
        }
        None => nodes.push((-l, T::zero())),
    }
    match &vp {
        Some(g) => {
            nodes.push((-a1, T::zero()));
            nodes.extend(g.xs().iter().copied().zip(g.ys().iter().copied()));
        }
        None => nodes.push((T::zero(), T::zero())),
    }
    match &vm {
        Some(g) => {
            for (&x, &y) in g.xs().iter().zip(g.ys()) {
                if x <= T::zero() {
                    nodes.push((x + l, -y));
                }
            }
        }
        None => nodes.push((l, T::zero())),
    }
    let shift = w.x_min() + l;
    let nodes = nodes.into_iter().map(|(x, y)| (x + shift, y)).collect();
    PiecewiseLinear::from_nodes_clamped(nodes)
}

/// Grid-level symmetric competitor: the exact competitor of the interpolant,
/// sampled back on the grid of `w`.
pub fn symmetric_competitor<T: Scalar>(w: &GridFunction<T>) -> Result<GridFunction<T>> {
    let mean = w.mean();
    if mean.abs() > T::lit(1e-10) {
        return Err(MixError::ConstraintViolation(format!(
            "mean {mean} is not zero"
        )));
    }
    let lip = lipschitz_seminorm(w);
    if lip > T::lit(1.0 + 1e-9) {
        return Err(MixError::ConstraintViolation(format!(
            "slope {lip} exceeds 1"
        )));
    }
    let exact = symmetric_competitor_exact(&PiecewiseLinear::from_periodic(w))?;
    w.with_values(exact.sample(&w.grid()))
}

/// Generalised odd rearrangement of a non-decreasing function on [−a, a]
/// with f(−a) = −f(a).
///
/// Flat pieces are allowed: the inverse is taken as a monotone graph, whose
/// vertical pieces become flat pieces of the result.
pub fn odd_rearrangement_exact<T: Scalar>(f: &PiecewiseLinear<T>) -> Result<PiecewiseLinear<T>> {
    let n = f.len();
    let (xs, ys0) = (f.xs(), f.ys());
    let scale = T::one().max(xs[n - 1].abs()).max(ys0[n - 1].abs());
    let tol = T::lit(1e-9) * scale;
    if (xs[0] + xs[n - 1]).abs() > tol {
        return Err(MixError::InvalidGrid("domain is not symmetric".into()));
    }
    let defect = ys0[0] + ys0[n - 1];
    if defect.abs() > tol {
        return Err(MixError::NotAntiBalanced {
            defect: defect.as_f64(),
        });
    }
    let min_step = ys0
        .windows(2)
        .fold(T::infinity(), |m, w| m.min(w[1] - w[0]));
    if min_step < -tol {
        return Err(MixError::NotIncreasing {
            min_slope: min_step.as_f64(),
        });
    }
    let top = (ys0[n - 1] - ys0[0]) / T::lit(2.0);
    let mut ys = ys0.to_vec();
    ys[0] = -top;
    ys[n - 1] = top;
    for i in 1..n {
        ys[i] = ys[i].max(ys[i - 1]).min(top);
    }
    let mut mags: Vec<T> = ys.iter().map(|y| y.abs()).collect();
    mags.push(T::zero());
    mags.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    mags.dedup();
    let mut levels: Vec<T> = mags
        .iter()
        .rev()
        .filter(|&&z| z > T::zero())
        .map(|&z| -z)
        .collect();
    levels.extend(mags.iter().copied());

    // interval {x : f(x) = y} of the monotone graph
    let x_lo = |y: T| -> T {
        let i = ys.partition_point(|&v| v < y);
        if i == 0 {
            return xs[0];
        }
        if i >= n {
            return xs[n - 1];
        }
        xs[i - 1] + (xs[i] - xs[i - 1]) * ((y - ys[i - 1]) / (ys[i] - ys[i - 1]))
    };
    let x_hi = |y: T| -> T {
        let i = ys.partition_point(|&v| v <= y);
        if i == 0 {
            return xs[0];
        }
        if i >= n {
            return xs[n - 1];
        }
        xs[i - 1] + (xs[i] - xs[i - 1]) * ((y - ys[i - 1]) / (ys[i] - ys[i - 1]))
    };
    let half = T::lit(0.5);
    let mut nodes = Vec::with_capacity(2 * levels.len());
    for &y in &levels {
        let g_lo = half * (x_lo(y) - x_hi(-y));
        let g_hi = half * (x_hi(y) - x_lo(-y));
        nodes.push((g_lo, y));
        if g_hi > g_lo {
            nodes.push((g_hi, y));
        }
    }
    PiecewiseLinear::from_nodes_clamped(nodes)
}

/// f^o on the grid of `f`. Requires a strictly increasing, anti-balanced input.
pub fn odd_rearrangement<T: Scalar>(f: &CompactFunction<T>) -> Result<CompactFunction<T>> {
    let min_slope = f.min_slope();
    if min_slope < T::lit(1e-9) {
        return Err(MixError::NotIncreasing {
            min_slope: min_slope.as_f64(),
        });
    }
    let v = f.values();
    let defect = v[0] + v[f.n()];
    if defect.abs() > T::lit(1e-9) {
        return Err(MixError::NotAntiBalanced {
            defect: defect.as_f64(),
        });
    }
    f.resample(&odd_rearrangement_exact(&f.to_piecewise())?)
}

/// Smallest x₀ ∈ (0, a] with w(−x₀) = −w(x₀), located exactly on the linear
/// piece of x ↦ w(x) + w(−x) where the sign first changes.
pub fn balance_point<T: Scalar>(w: &PiecewiseLinear<T>) -> Result<T> {
    let a = w.x_max().min(-w.x_min());
    let g = |x: T| w.eval(x) + w.eval(-x);
    let g0 = g(T::zero());
    let mut knots: Vec<T> = w
        .xs()
        .iter()
        .map(|x| x.abs())
        .filter(|&x| x > T::zero() && x <= a)
        .collect();
    knots.push(a);
    knots.sort_by(|p, q| p.partial_cmp(q).expect("finite"));
    knots.dedup();
    let mut prev = (T::zero(), g0);
    for &x in &knots {
        let gx = g(x);
        if gx == T::zero() {
            return Ok(x);
        }
        if gx.signum() != g0.signum() {
            let (xp, gp) = prev;
            let root = xp + (x - xp) * (gp / (gp - gx));
            return Ok(root.max(xp).min(x));
        }
        prev = (x, gx);
    }
    Err(MixError::NoBalancePoint)
}

/// Exact odd competitor: odd rearrangement of `w` on [−x₀, x₀], identity
/// outside. Flat pieces are handled by the generalised inverse, so no
/// ε-perturbation is needed.
pub fn odd_competitor_exact<T: Scalar>(w: &PiecewiseLinear<T>) -> Result<PiecewiseLinear<T>> {
    let scale = T::one().max(w.max_value().abs()).max(w.min_value().abs());
    if w.eval(T::zero()).abs() <= T::lit(1e-14) * scale {
        return Ok(w.clone());
    }
    let x0 = balance_point(w)?;
    let inner = odd_rearrangement_exact(&w.restrict(-x0, x0)?)?;
    let mut nodes: Vec<(T, T)> = Vec::new();
    for (&x, &y) in w.xs().iter().zip(w.ys()) {
        if x < -x0 {
            nodes.push((x, y));
        }
    }
    nodes.extend(inner.xs().iter().copied().zip(inner.ys().iter().copied()));
    for (&x, &y) in w.xs().iter().zip(w.ys()) {
        if x > x0 {
            nodes.push((x, y));
        }
    }
    PiecewiseLinear::from_nodes_clamped(nodes)
}

/// Checks membership of the interpolant in 𝒲: slopes in [0, 1], zero mean.
pub fn check_admissible_monotone<T: Scalar>(w: &PiecewiseLinear<T>) -> Result<()> {
    let (lo, hi) = (w.min_slope(), w.max_slope());
    if lo < T::lit(-1e-9) || hi > T::lit(1.0 + 1e-9) {
        return Err(MixError::ConstraintViolation(format!(
            "slopes [{lo}, {hi}] outside [0, 1]"
        )));
    }
    let mean = w.integral() / (w.x_max() - w.x_min());
    if mean.abs() > T::lit(1e-9) {
        return Err(MixError::ConstraintViolation(format!(
            "mean {mean} is not zero"
        )));
    }
    Ok(())
}

/// Grid-level odd competitor on [−L/4, L/4].
pub fn odd_competitor<T: Scalar>(w: &CompactFunction<T>) -> Result<CompactFunction<T>> {
    let pw = w.to_piecewise();
    check_admissible_monotone(&pw)?;
    w.resample(&odd_competitor_exact(&pw)?)
}
