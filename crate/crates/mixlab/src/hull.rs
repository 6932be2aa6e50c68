//! The constraint set K = {(ρ, v, m, e): |ρ| ≤ 1, m = ρv, |v|² = e}, its
//! closed convex hull, the truncated interiors and the wave cone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MixError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct HullPoint<T> {
    pub rho: T,
    pub v: Vec<T>,
    pub m: Vec<T>,
    pub e: T,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

impl<T: Scalar> HullPoint<T> {
    pub fn new(rho: T, v: Vec<T>, m: Vec<T>, e: T) -> Result<Self> {
        if v.len() != m.len() {
            return Err(MixError::DimensionMismatch(v.len(), m.len()));
        }
        if v.len() < 2 {
            return Err(MixError::InvalidParams(format!(
                "dimension must be at least 2, got {}",
                v.len()
            )));
        }
        if !rho.is_finite() || !e.is_finite() || v.iter().chain(&m).any(|x| !x.is_finite()) {
            return Err(MixError::InvalidParams(
                "non-finite hull point entry".into(),
            ));
        }
        Ok(Self { rho, v, m, e })
    }

    /// The point (ρ, v, ρv, |v|²) of K.
    pub fn on_k(rho: T, v: Vec<T>) -> Result<Self> {
        let m = v.iter().map(|&x| rho * x).collect();
        let e = norm_sq(&v);
        Self::new(rho, v, m, e)
    }

    pub fn d(&self) -> usize {
        self.v.len()
    }

    /// m − ρv.
    fn defect(&self) -> Vec<T> {
        self.m
            .iter()
            .zip(&self.v)
            .map(|(&m, &v)| m - self.rho * v)
            .collect()
    }

    /// (e − |v|²)(1 − ρ²) − |m − ρv|², the slack of the hull condition.
    pub fn hull_slack(&self) -> T {
        (self.e - norm_sq(&self.v)) * (T::one() - self.rho * self.rho) - norm_sq(&self.defect())
    }

    /// |m − ρv|² − (e − |v|²)(1 − ρ²).
    pub fn k1_defect(&self) -> T {
        -self.hull_slack()
    }

    pub fn axpy(&self, s: T, dir: &Self) -> Result<Self> {
        if self.d() != dir.d() {
            return Err(MixError::DimensionMismatch(self.d(), dir.d()));
        }
        Ok(Self {
            rho: self.rho + s * dir.rho,
            v: self
                .v
                .iter()
                .zip(&dir.v)
                .map(|(&a, &b)| a + s * b)
                .collect(),
            m: self
                .m
                .iter()
                .zip(&dir.m)
                .map(|(&a, &b)| a + s * b)
                .collect(),
            e: self.e + s * dir.e,
        })
    }

    /// Σ λᵢ zᵢ.
    pub fn combination(points: &[Self], weights: &[T]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| MixError::InvalidParams("empty combination".into()))?;
        if points.len() != weights.len() {
            return Err(MixError::DimensionMismatch(points.len(), weights.len()));
        }
        let d = first.d();
        let mut out = Self {
            rho: T::zero(),
            v: vec![T::zero(); d],
            m: vec![T::zero(); d],
            e: T::zero(),
        };
        for (p, &w) in points.iter().zip(weights) {
            out = out.axpy(w, p)?;
        }
        Ok(out)
    }
}

pub fn in_k<T: Scalar>(z: &HullPoint<T>, tol: T) -> bool {
    z.rho.abs() <= T::one() + tol
        && norm_sq(&z.defect()).sqrt() <= tol
        && (norm_sq(&z.v) - z.e).abs() <= tol
}

/// Membership in the closed convex hull of K:
/// (i) |ρ| = 1, m = ρv, |v|² ≤ e, or
/// (ii) |ρ| < 1, |m − ρv|² ≤ (e − |v|²)(1 − ρ²).
pub fn in_k_hull<T: Scalar>(z: &HullPoint<T>, tol: T) -> bool {
    let v2 = norm_sq(&z.v);
    let cond_i = (z.rho.abs() - T::one()).abs() <= tol
        && norm_sq(&z.defect()).sqrt() <= tol
        && v2 <= z.e + tol;
    let one_minus = (T::one() - z.rho * z.rho).max(T::zero());
    let cond_ii = z.rho.abs() <= T::one() + tol
        && z.e >= v2 - tol
        && norm_sq(&z.defect()) <= (z.e - v2) * one_minus + tol;
    cond_i || cond_ii
}

/// e(1 − ρ²) − m₁² for a point with v₁ = 0.
pub fn zero_velocity_inequality<T: Scalar>(z: &HullPoint<T>) -> Result<T> {
    if z.v[0].abs() > T::lit(1e-12) {
        return Err(MixError::NonzeroFirstVelocity(z.v[0].as_f64()));
    }
    Ok(z.e * (T::one() - z.rho * z.rho) - z.m[0] * z.m[0])
}

/// Sufficient condition for z to be interior to the hull truncated at e ≤ γ,
/// for points with v = 0.
pub fn in_k_gamma_interior<T: Scalar>(z: &HullPoint<T>, gamma: T, tol: T) -> Result<bool> {
    let vn = norm_sq(&z.v).sqrt();
    if vn > T::lit(1e-12) {
        return Err(MixError::NonzeroVelocity(vn.as_f64()));
    }
    if !(gamma > T::zero()) {
        return Err(MixError::OutOfRange {
            name: "gamma",
            value: gamma.as_f64(),
        });
    }
    let g = T::one() - z.rho * z.rho;
    let m2 = norm_sq(&z.m);
    Ok(z.rho.abs() < T::one() - tol
        && m2 < z.e * g - tol
        && T::lit(4.0) * m2 / (g * g) + z.e < gamma - tol)
}

/// Endpoints z + (1 − ρ)ẑ and z − (1 + ρ)ẑ of the segment through a point of
/// K₁ = {|ρ| < 1, |m − ρv|² = (e − |v|²)(1 − ρ²)}.
pub fn k1_segment<T: Scalar>(z: &HullPoint<T>, tol: T) -> Result<(HullPoint<T>, HullPoint<T>)> {
    let defect = z.k1_defect();
    if !(z.rho.abs() < T::one()) || defect.abs() > tol {
        return Err(MixError::NotInK1 {
            defect: defect.as_f64(),
        });
    }
    let rho = z.rho;
    let g = T::one() - rho * rho;
    let sum: Vec<T> = z.m.iter().zip(&z.v).map(|(&m, &v)| m + v).collect();
    let zhat = HullPoint {
        rho: T::one(),
        v: z.m
            .iter()
            .zip(&z.v)
            .map(|(&m, &v)| (m - rho * v) / g)
            .collect(),
        m: z.v
            .iter()
            .zip(&z.m)
            .map(|(&v, &m)| (v - rho * m) / g)
            .collect(),
        e: norm_sq(&sum) / (g * (T::one() + rho)) - z.e / (T::one() - rho),
    };
    Ok((
        z.axpy(T::one() - rho, &zhat)?,
        z.axpy(-T::one() - rho, &zhat)?,
    ))
}

/// Wave-cone membership: everything in d ≥ 3; in d = 2 all but directions
/// with ρ̂ = 0 and v̂ not parallel to m̂.
pub fn in_wave_cone<T: Scalar>(zhat: &HullPoint<T>) -> bool {
    if zhat.d() >= 3 {
        return true;
    }
    if zhat.rho != T::zero() {
        return true;
    }
    let cross = zhat.v[0] * zhat.m[1] - zhat.v[1] * zhat.m[0];
    let scale = norm_sq(&zhat.v).sqrt() * norm_sq(&zhat.m).sqrt();
    cross.abs() <= T::lit(1e-12) * scale
}

/// First standard basis vector with the component along m removed, normalized.
fn unit_orthogonal_to<T: Scalar>(m: &[T]) -> Vec<T> {
    let d = m.len();
    let mn = norm_sq(m).sqrt();
    for i in 0..d {
        let mut u = vec![T::zero(); d];
        u[i] = T::one();
        if mn > T::zero() {
            let c = m[i] / mn;
            for (k, uk) in u.iter_mut().enumerate() {
                *uk = *uk - c * m[k] / mn;
            }
        }
        let un = norm_sq(&u).sqrt();
        if un > T::lit(1e-6) {
            return u.into_iter().map(|x| x / un).collect();
        }
    }
    unreachable!("d ≥ 2 always leaves an orthogonal direction")
}

/// Endpoints z₀ ± sẑ, ẑ = (0, v̂, ρv̂, 0), s² = e − |m|²/(1 − ρ²).
pub fn hull_gap_segment<T: Scalar>(
    z0: &HullPoint<T>,
    gamma: T,
) -> Result<(HullPoint<T>, HullPoint<T>)> {
    match in_k_gamma_interior(z0, gamma, T::zero()) {
        Ok(true) => {}
        Ok(false) => {
            return Err(MixError::HypothesisViolated(
                "point is not strictly inside the truncated hull".into(),
            ))
        }
        Err(e) => return Err(MixError::HypothesisViolated(e.to_string())),
    }
    let rho = z0.rho;
    let vhat = unit_orthogonal_to(&z0.m);
    let zhat = HullPoint {
        rho: T::zero(),
        m: vhat.iter().map(|&x| rho * x).collect(),
        v: vhat,
        e: T::zero(),
    };
    let s = (z0.e - norm_sq(&z0.m) / (T::one() - rho * rho)).sqrt();
    let plus = z0.axpy(s, &zhat)?;
    let minus = z0.axpy(-s, &zhat)?;
    let tol = T::lit(1e-9) * (T::one() + z0.e);
    for p in [&plus, &minus] {
        if p.k1_defect().abs() > tol {
            return Err(MixError::HypothesisViolated(format!(
                "endpoint leaves K1 by {}",
                p.k1_defect()
            )));
        }
        let (hi, lo) = gap_endpoint_energies(p);
        if hi > gamma + tol || lo > gamma + tol {
            return Err(MixError::HypothesisViolated(format!(
                "endpoint energy exceeds gamma: {hi}, {lo}"
            )));
        }
    }
    Ok((plus, minus))
}

/// |(m + v)/(1 + ρ)|² and |(m − v)/(1 − ρ)|², the energies of the K points
/// reached from a K₁ point.
pub fn gap_endpoint_energies<T: Scalar>(p: &HullPoint<T>) -> (T, T) {
    let plus: Vec<T> =
        p.m.iter()
            .zip(&p.v)
            .map(|(&m, &v)| (m + v) / (T::one() + p.rho))
            .collect();
    let minus: Vec<T> =
        p.m.iter()
            .zip(&p.v)
            .map(|(&m, &v)| (m - v) / (T::one() - p.rho))
            .collect();
    (norm_sq(&plus), norm_sq(&minus))
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSummary {
    pub suite: String,
    pub seed: u64,
    pub probes: usize,
    pub violations: usize,
    /// Smallest slack seen; negative values are violations.
    pub worst_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<HullPoint<f64>>,
}

impl ProbeSummary {
    fn merge(mut self, other: Self) -> Self {
        self.probes += other.probes;
        self.violations += other.violations;
        self.worst_margin = self.worst_margin.min(other.worst_margin);
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

const CHUNK: usize = 1024;

fn run_chunks(
    suite: &str,
    seed: u64,
    probes: usize,
    f: impl Fn(&mut ChaCha8Rng) -> (f64, bool, Option<HullPoint<f64>>) + Sync,
) -> ProbeSummary {
    let chunks = probes.div_ceil(CHUNK);
    let empty = ProbeSummary {
        suite: suite.to_string(),
        seed,
        probes: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
        first_violation: None,
    };
    let parts: Vec<ProbeSummary> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(probes - c * CHUNK);
            let mut part = empty.clone();
            for _ in 0..count {
                let (margin, ok, point) = f(&mut rng);
                part.probes += 1;
                part.worst_margin = part.worst_margin.min(margin);
                if !ok {
                    part.violations += 1;
                    if part.first_violation.is_none() {
                        part.first_violation = point;
                    }
                }
            }
            part
        })
        .collect();
    parts.into_iter().fold(empty, ProbeSummary::merge)
}

fn random_vector(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-radius..=radius)).collect();
        if norm_sq(&v) <= radius * radius {
            return v;
        }
    }
}

/// Random point of K with velocity in a ball of the given radius.
pub fn random_k_point(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> HullPoint<f64> {
    let rho = match rng.gen_range(0..10) {
        0 => 1.0,
        1 => -1.0,
        _ => rng.gen_range(-1.0..=1.0),
    };
    HullPoint::on_k(rho, random_vector(rng, d, radius)).expect("valid dimension")
}

/// Random point of K₁.
pub fn random_k1_point(rng: &mut ChaCha8Rng, d: usize) -> HullPoint<f64> {
    let rho: f64 = rng.gen_range(-0.95..0.95);
    let v = random_vector(rng, d, 1.0);
    let e = norm_sq(&v) + rng.gen_range(0.0..2.0);
    let mut u = random_vector(rng, d, 1.0);
    let un = norm_sq(&u).sqrt().max(1e-12);
    u.iter_mut().for_each(|x| *x /= un);
    let r = ((e - norm_sq(&v)) * (1.0 - rho * rho)).sqrt();
    let m = v
        .iter()
        .zip(&u)
        .map(|(&vi, &ui)| rho * vi + r * ui)
        .collect();
    HullPoint { rho, v, m, e }
}

/// Random convex combinations of 2 to 6 points of K tested against the hull
/// predicate.
pub fn probe_convex_combinations(seed: u64, probes: usize, d: usize, tol: f64) -> ProbeSummary {
    run_chunks("convex_combinations", seed, probes, |rng| {
        let k = rng.gen_range(2..=6);
        let points: Vec<HullPoint<f64>> = (0..k).map(|_| random_k_point(rng, d, 2.0)).collect();
        let raw: Vec<f64> = (0..k).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let z = HullPoint::combination(&points, &weights).expect("consistent dimensions");
        let ok = in_k_hull(&z, tol);
        (z.hull_slack(), ok, Some(z))
    })
}

/// Endpoints of k1_segment on random K₁ points tested against K.
pub fn probe_k1_segments(seed: u64, probes: usize, d: usize, tol: f64) -> ProbeSummary {
    run_chunks("k1_segments", seed, probes, |rng| {
        let z = random_k1_point(rng, d);
        match k1_segment(&z, tol) {
            Ok((a, b)) => {
                let ok = in_k(&a, 10.0 * tol) && in_k(&b, 10.0 * tol);
                let margin = -(a.rho.abs() - 1.0).abs().max((b.rho.abs() - 1.0).abs());
                (margin, ok, Some(z))
            }
            Err(_) => (f64::NEG_INFINITY, false, Some(z)),
        }
    })
}

/// Points passing in_k_gamma_interior must be in the hull with e < γ.
pub fn probe_gamma_implication(seed: u64, probes: usize, d: usize) -> ProbeSummary {
    run_chunks("gamma_implication", seed, probes, |rng| {
        let rho: f64 = rng.gen_range(-1.0..1.0);
        let m = random_vector(rng, d, 1.0);
        let e = rng.gen_range(0.0..3.0);
        let gamma = rng.gen_range(0.1..10.0);
        let z = HullPoint {
            rho,
            v: vec![0.0; d],
            m,
            e,
        };
        let interior = in_k_gamma_interior(&z, gamma, 0.0).unwrap_or(false);
        let ok = !interior || (in_k_hull(&z, 0.0) && z.e < gamma);
        (
            if interior {
                z.hull_slack()
            } else {
                f64::INFINITY
            },
            ok,
            Some(z),
        )
    })
}

/// Every direction lies in the wave cone for d ≥ 3.
pub fn probe_wave_cone(seed: u64, probes: usize, d: usize) -> ProbeSummary {
    run_chunks("wave_cone", seed, probes, |rng| {
        let zhat = HullPoint {
            rho: if rng.gen_bool(0.5) {
                0.0
            } else {
                rng.gen_range(-1.0..1.0)
            },
            v: random_vector(rng, d, 1.0),
            m: random_vector(rng, d, 1.0),
            e: rng.gen_range(-1.0..1.0),
        };
        let expected = d >= 3 || zhat.rho != 0.0 || {
            let cross = zhat.v[0] * zhat.m[1] - zhat.v[1] * zhat.m[0];
            cross.abs() <= 1e-12 * (norm_sq(&zhat.v) * norm_sq(&zhat.m)).sqrt()
        };
        let ok = in_wave_cone(&zhat) == expected && (d < 3 || in_wave_cone(&zhat));
        (0.0, ok, Some(zhat))
    })
}

/// Points violating condition (ii) by at least `gap` must be rejected.
pub fn probe_negative_controls(seed: u64, probes: usize, d: usize, gap: f64) -> ProbeSummary {
    run_chunks("negative_controls", seed, probes, |rng| {
        let rho: f64 = rng.gen_range(-0.9..0.9);
        let v = random_vector(rng, d, 1.0);
        let e = norm_sq(&v) + rng.gen_range(0.0..1.0);
        let mut u = random_vector(rng, d, 1.0);
        let un = norm_sq(&u).sqrt().max(1e-12);
        u.iter_mut().for_each(|x| *x /= un);
        let r = ((e - norm_sq(&v)) * (1.0 - rho * rho) + gap).sqrt();
        let m = v
            .iter()
            .zip(&u)
            .map(|(&vi, &ui)| rho * vi + r * ui)
            .collect();
        let z = HullPoint { rho, v, m, e };
        let ok = !in_k_hull(&z, 1e-9);
        (-z.hull_slack(), ok, Some(z))
    })
}
