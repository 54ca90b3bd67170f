//! The one-point stress profile `S¹(v) = ∫_W S(v, u) du` and its first two
//! moments over the window, by nested quadrature: a midpoint tensor grid
//! outside and a Halton quasi-Monte Carlo rule inside.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::geometry::{Point2, PointSet, ProjectionPlane, Window, WindowKind};
use crate::stress::{tree_sum, StressWeight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct S1Quadrature {
    /// Midpoint cells per axis of the outer tensor grid.
    pub outer_per_axis: usize,
    /// Halton points of the inner rule (over the bounding box of `W`).
    pub inner_points: usize,
}

impl Default for S1Quadrature {
    fn default() -> Self {
        Self { outer_per_axis: 32, inner_points: 100_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressProfileIntegrals {
    /// `∫_W S¹(v) dv`
    pub integral: f64,
    /// `∫_W S¹(v)² dv`
    pub integral_sq: f64,
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let (mut f, mut r) = (inv, 0.0);
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

/// The first `n` points (skipping the origin) of the `dim`-dimensional Halton
/// sequence in `[0, 1)^dim`.
pub fn halton(dim: usize, n: usize) -> Result<PointSet> {
    if dim > PRIMES.len() {
        return arg_err(format!("Halton rule supports at most {} dimensions", PRIMES.len()));
    }
    let mut out = PointSet::with_capacity(dim, n);
    let mut p = vec![0.0; dim];
    for i in 1..=n as u64 {
        for (k, x) in p.iter_mut().enumerate() {
            *x = radical_inverse(i, PRIMES[k]);
        }
        out.push(&p);
    }
    Ok(out)
}

/// Inner rule: nodes in `W` with their projections and a common weight.
struct InnerRule {
    nodes: PointSet,
    proj: Vec<Point2>,
    weight: f64,
}

impl InnerRule {
    fn new(window: &Window, plane: &ProjectionPlane, n: usize) -> Result<Self> {
        if n == 0 {
            return arg_err("inner quadrature needs at least one point");
        }
        let dim = window.dim();
        let (lo, hi) = window.axis_bounds();
        let unit = halton(dim, n)?;
        let mut nodes = PointSet::with_capacity(dim, n);
        let mut x = vec![0.0; dim];
        for u in unit.iter() {
            for (xk, uk) in x.iter_mut().zip(u) {
                *xk = lo + (hi - lo) * uk;
            }
            if window.kind() == WindowKind::Cube || window.contains(&x) {
                nodes.push(&x);
            }
        }
        let proj = plane.project_all(&nodes);
        Ok(Self { nodes, proj, weight: (hi - lo).powi(dim as i32) / n as f64 })
    }

    fn s1(&self, v: &[f64], pv: Point2, weight: &StressWeight) -> f64 {
        let dim = v.len();
        let flat = self.nodes.as_flat();
        let mut acc = 0.0;
        for (u, pu) in flat.chunks_exact(dim).zip(&self.proj) {
            let mut d0_sq = 0.0;
            for k in 0..dim {
                let t = v[k] - u[k];
                d0_sq += t * t;
            }
            if d0_sq == 0.0 {
                continue;
            }
            let (dx, dy) = (pv.x - pu.x, pv.y - pu.y);
            acc += weight.eval_sq(d0_sq, (dx * dx + dy * dy).min(d0_sq));
        }
        acc * self.weight
    }
}

fn check(window: &Window, plane: &ProjectionPlane) -> Result<()> {
    if plane.dim() != window.dim() {
        return arg_err("plane and window dimensions differ");
    }
    window.projected_bounds(plane).map(|_| ())
}

/// `S¹(v) = ∫_W S(v, u) du` for a single `v ∈ W`.
pub fn stress_profile_s1(
    window: &Window,
    plane: &ProjectionPlane,
    weight: &StressWeight,
    v: &[f64],
    quadrature: S1Quadrature,
) -> Result<f64> {
    check(window, plane)?;
    if v.len() != window.dim() || !window.contains(v) {
        return arg_err("stress profile point must lie in the window");
    }
    let rule = InnerRule::new(window, plane, quadrature.inner_points)?;
    Ok(rule.s1(v, plane.project(v), weight))
}

/// `∫_W S¹` and `∫_W (S¹)²` by an outer midpoint grid over the bounding box of
/// `W` (cells whose midpoint lies outside `W` are dropped).
pub fn stress_profile_integrals(
    window: &Window,
    plane: &ProjectionPlane,
    weight: &StressWeight,
    quadrature: S1Quadrature,
) -> Result<StressProfileIntegrals> {
    check(window, plane)?;
    let n = quadrature.outer_per_axis;
    if n == 0 {
        return arg_err("outer quadrature needs at least one cell per axis");
    }
    let dim = window.dim();
    let total = (n as u128).checked_pow(dim as u32).filter(|&m| m <= 1 << 32);
    let Some(total) = total else {
        return arg_err("outer grid too large; reduce outer_per_axis");
    };
    let rule = InnerRule::new(window, plane, quadrature.inner_points)?;
    let (lo, hi) = window.axis_bounds();
    let h = (hi - lo) / n as f64;
    let profile: Vec<f64> = (0..total as u64)
        .into_par_iter()
        .map(|mut idx| {
            let mut v = vec![0.0; dim];
            for x in v.iter_mut() {
                *x = lo + ((idx % n as u64) as f64 + 0.5) * h;
                idx /= n as u64;
            }
            if window.contains(&v) {
                rule.s1(&v, plane.project(&v), weight)
            } else {
                f64::NAN
            }
        })
        .collect();
    let inside: Vec<f64> = profile.into_iter().filter(|x| !x.is_nan()).collect();
    let squares: Vec<f64> = inside.iter().map(|x| x * x).collect();
    let cell = h.powi(dim as i32);
    Ok(StressProfileIntegrals { integral: tree_sum(&inside) * cell, integral_sq: tree_sum(&squares) * cell })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RngStream;
    use crate::stress::pair_stress;
    use rand::Rng;

    #[test]
    fn halton_prefix() {
        let h = halton(2, 4).unwrap();
        assert_eq!(h.get(0), &[0.5, 1.0 / 3.0]);
        assert_eq!(h.get(1), &[0.25, 2.0 / 3.0]);
        assert_eq!(h.get(2), &[0.75, 1.0 / 9.0]);
        assert!(halton(13, 1).is_err());
    }

    #[test]
    fn centre_profile_matches_monte_carlo() {
        let w = Window::cube(3).unwrap();
        let pl = ProjectionPlane::coordinate(3);
        let v = [0.5, 0.5, 0.5];
        let s1 = stress_profile_s1(&w, &pl, &StressWeight::InverseSq, &v, S1Quadrature::default()).unwrap();
        let mut rng = RngStream::new(77, 0).rng();
        let n = 1_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let u: [f64; 3] = [rng.random(), rng.random(), rng.random()];
            let s = pair_stress(&v, &u, &pl, &StressWeight::InverseSq).unwrap();
            sum += s;
            sum_sq += s * s;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((s1 - mean).abs() <= 3.0 * se, "{s1} vs {mean} ± {se}");
        assert!((0.0..=1.0).contains(&s1));
    }

    #[test]
    fn profile_symmetric_and_bounded() {
        let w = Window::cube(3).unwrap();
        let pl = ProjectionPlane::coordinate(3);
        let q = S1Quadrature { outer_per_axis: 4, inner_points: 50_000 };
        let a = stress_profile_s1(&w, &pl, &StressWeight::InverseSq, &[0.1, 0.2, 0.3], q).unwrap();
        let b = stress_profile_s1(&w, &pl, &StressWeight::InverseSq, &[0.9, 0.8, 0.7], q).unwrap();
        assert!((a - b).abs() < 2e-3, "{a} {b}");
        assert!(stress_profile_s1(&w, &pl, &StressWeight::InverseSq, &[1.5, 0.2, 0.3], q).is_err());
    }

    #[test]
    fn integrals_consistent() {
        let pl = ProjectionPlane::coordinate(3);
        let q = S1Quadrature { outer_per_axis: 6, inner_points: 20_000 };
        for w in [Window::cube(3).unwrap(), Window::ball(3).unwrap()] {
            let r = stress_profile_integrals(&w, &pl, &StressWeight::InverseSq, q).unwrap();
            assert!(r.integral > 0.0 && r.integral < 1.0);
            // Jensen on a unit-volume window.
            assert!(r.integral_sq >= r.integral * r.integral * 0.9, "{r:?}");
            assert!(r.integral_sq <= r.integral);
        }
    }
}
