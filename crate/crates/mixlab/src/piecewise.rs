//! Continuous piecewise-linear functions with exact integrals.
//!
//! A grid function is identified with its linear interpolant. Integrals of
//! polynomial expressions in `w` and `w_x` are then exact, so inequalities
//! that hold for Lipschitz functions hold for the discrete objects up to
//! round-off.

use crate::error::{MixError, Result};
use crate::scalar::Scalar;
use crate::torus_field::{sum, GridFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear<T> {
    xs: Vec<T>,
    ys: Vec<T>,
}

impl<T: Scalar> PiecewiseLinear<T> {
    /// Nodes must have non-decreasing abscissae; zero-length segments are
    /// allowed only when they carry no jump.
    pub fn new(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(MixError::DimensionMismatch(xs.len(), ys.len()));
        }
        if xs.len() < 2 {
            return Err(MixError::InvalidGrid("need at least two nodes".into()));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(MixError::InvalidGrid("non-finite node".into()));
        }
        for i in 1..xs.len() {
            if xs[i] < xs[i - 1] {
                return Err(MixError::InvalidGrid(format!(
                    "abscissae decrease at node {i}"
                )));
            }
        }
        Ok(Self { xs, ys })
    }

    /// Builds a function from possibly slightly disordered nodes: abscissae
    /// that fall behind their predecessor by round-off are clamped forward.
    pub(crate) fn from_nodes_clamped(nodes: Vec<(T, T)>) -> Result<Self> {
        let mut xs = Vec::with_capacity(nodes.len());
        let mut ys = Vec::with_capacity(nodes.len());
        for (x, y) in nodes {
            let x = match xs.last() {
                Some(&prev) if x < prev => prev,
                _ => x,
            };
            xs.push(x);
            ys.push(y);
        }
        Self::new(xs, ys)
    }

    /// Interpolant of one period of a grid function on [−L/2, L/2].
    pub fn from_periodic(f: &GridFunction<T>) -> Self {
        let mut xs = f.grid();
        let mut ys = f.values().to_vec();
        xs.push(f.period() / T::lit(2.0));
        ys.push(f.values()[0]);
        Self { xs, ys }
    }

    pub fn xs(&self) -> &[T] {
        &self.xs
    }

    pub fn ys(&self) -> &[T] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_min(&self) -> T {
        self.xs[0]
    }

    pub fn x_max(&self) -> T {
        self.xs[self.xs.len() - 1]
    }

    /// Value at `x`, constant extrapolation outside the domain.
    pub fn eval(&self, x: T) -> T {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        // first index with xs[i] > x
        let i = self.xs.partition_point(|&xi| xi <= x);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (y0, y1) = (self.ys[i - 1], self.ys[i]);
        if x1 == x0 {
            return y1;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn sample(&self, grid: &[T]) -> Vec<T> {
        grid.iter().map(|&x| self.eval(x)).collect()
    }

    fn segments(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        (1..self.xs.len()).map(move |i| (self.xs[i] - self.xs[i - 1], self.ys[i - 1], self.ys[i]))
    }

    fn segment_sum(&self, f: impl Fn(T, T, T) -> T) -> T {
        let terms: Vec<T> = self.segments().map(|(h, a, b)| f(h, a, b)).collect();
        sum(&terms)
    }

    /// ∫ w dx.
    pub fn integral(&self) -> T {
        self.segment_sum(|h, a, b| h * (a + b) / T::lit(2.0))
    }

    /// ∫ w² dx.
    pub fn integral_sq(&self) -> T {
        self.segment_sum(|h, a, b| h * (a * a + a * b + b * b) / T::lit(3.0))
    }

    /// ∫ w_x² w² dx.
    pub fn integral_slope_sq_weighted(&self) -> T {
        self.segment_sum(|h, a, b| {
            if h == T::zero() {
                return T::zero();
            }
            let dy = b - a;
            dy * dy / h * (a * a + a * b + b * b) / T::lit(3.0)
        })
    }

    /// ∫ (1 − w_x²) w² dx.
    pub fn integral_one_minus_slope_sq_weighted(&self) -> T {
        self.segment_sum(|h, a, b| {
            let q = (a * a + a * b + b * b) / T::lit(3.0);
            if h == T::zero() {
                return T::zero();
            }
            let s = (b - a) / h;
            (T::one() - s * s) * h * q
        })
    }

    /// ∫ w_x² dx.
    pub fn integral_slope_sq(&self) -> T {
        self.segment_sum(|h, a, b| {
            if h == T::zero() {
                T::zero()
            } else {
                (b - a) * (b - a) / h
            }
        })
    }

    fn slopes(&self) -> impl Iterator<Item = T> + '_ {
        self.segments()
            .filter(|(h, _, _)| *h > T::zero())
            .map(|(h, a, b)| (b - a) / h)
    }

    pub fn min_slope(&self) -> T {
        self.slopes().fold(T::infinity(), |m, s| m.min(s))
    }

    pub fn max_slope(&self) -> T {
        self.slopes().fold(T::neg_infinity(), |m, s| m.max(s))
    }

    pub fn lipschitz(&self) -> T {
        self.slopes().fold(T::zero(), |m, s| m.max(s.abs()))
    }

    pub fn max_value(&self) -> T {
        self.ys.iter().fold(T::neg_infinity(), |m, &y| m.max(y))
    }

    pub fn min_value(&self) -> T {
        self.ys.iter().fold(T::infinity(), |m, &y| m.min(y))
    }

    /// Inserts a node at every sign change so that max(w, 0) stays exact.
    fn with_zero_crossings(&self) -> Vec<(T, T)> {
        let mut nodes = vec![(self.xs[0], self.ys[0])];
        for i in 1..self.xs.len() {
            let (x0, y0, x1, y1) = (self.xs[i - 1], self.ys[i - 1], self.xs[i], self.ys[i]);
            if (y0 < T::zero() && y1 > T::zero()) || (y0 > T::zero() && y1 < T::zero()) {
                let xc = x0 + (x1 - x0) * (y0 / (y0 - y1));
                nodes.push((xc.max(x0).min(x1), T::zero()));
            }
            nodes.push((x1, y1));
        }
        nodes
    }

    /// max(w, 0).
    pub fn positive_part(&self) -> Self {
        let nodes = self.with_zero_crossings();
        Self {
            xs: nodes.iter().map(|p| p.0).collect(),
            ys: nodes.iter().map(|p| p.1.max(T::zero())).collect(),
        }
    }

    /// max(−w, 0).
    pub fn negative_part(&self) -> Self {
        let nodes = self.with_zero_crossings();
        Self {
            xs: nodes.iter().map(|p| p.0).collect(),
            ys: nodes.iter().map(|p| (-p.1).max(T::zero())).collect(),
        }
    }

    /// Restriction to [a, b] ⊂ domain, with nodes inserted at a and b.
    pub fn restrict(&self, a: T, b: T) -> Result<Self> {
        if !(a < b) || a < self.x_min() || b > self.x_max() {
            return Err(MixError::InvalidGrid(format!(
                "cannot restrict to [{a}, {b}]"
            )));
        }
        let mut xs = vec![a];
        let mut ys = vec![self.eval(a)];
        for (&x, &y) in self.xs.iter().zip(&self.ys) {
            if x > a && x < b {
                xs.push(x);
                ys.push(y);
            }
        }
        xs.push(b);
        ys.push(self.eval(b));
        Self::new(xs, ys)
    }

    /// x ↦ w(x − s), i.e. the graph moved right by `s`.
    pub fn shifted(&self, s: T) -> Self {
        Self {
            xs: self.xs.iter().map(|&x| x + s).collect(),
            ys: self.ys.clone(),
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            xs: self.xs.clone(),
            ys: self.ys.iter().map(|&y| c * y).collect(),
        }
    }

    /// Sup-distance to another function, evaluated on the union of nodes.
    pub fn sup_distance(&self, other: &Self) -> T {
        self.xs
            .iter()
            .chain(other.xs.iter())
            .fold(T::zero(), |m, &x| {
                m.max((self.eval(x) - other.eval(x)).abs())
            })
    }
}
