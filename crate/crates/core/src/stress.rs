//! Stress between a point configuration in `ℝ^d` and its planar projection:
//! `½ Σ_{v≠w} w(v,w) (d₀(v,w) − d₁(v,w))²` with `d₀` the ambient and `d₁` the
//! projected Euclidean distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::geometry::{PointSet, ProjectionPlane, Window};

/// Piecewise-constant weight as a function of the ambient distance `d₀`:
/// `weights[k]` applies on `[breaks[k], breaks[k+1])`, the last weight on
/// `[breaks.last(), ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeightTable")]
pub struct WeightTable {
    breaks: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeightTable {
    breaks: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawWeightTable> for WeightTable {
    type Error = crate::error::Error;

    fn try_from(raw: RawWeightTable) -> Result<Self> {
        Self::new(raw.breaks, raw.weights)
    }
}

impl WeightTable {
    pub fn new(breaks: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != weights.len() {
            return arg_err("weight table needs one weight per break point");
        }
        if breaks[0] != 0.0 || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return arg_err("weight table breaks must start at 0 and increase strictly");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return arg_err("weights must be finite and non-negative");
        }
        Ok(Self { breaks, weights })
    }

    fn weight(&self, d0: f64) -> f64 {
        let k = self.breaks.partition_point(|&b| b <= d0);
        self.weights[k.saturating_sub(1)]
    }

    /// Supremum of `w(d₀)·d₀²` over `d₀ ≤ diameter`.
    fn bound(&self, diameter: f64) -> f64 {
        let mut sup: f64 = 0.0;
        for (k, &w) in self.weights.iter().enumerate() {
            if self.breaks[k] > diameter {
                break;
            }
            let upper = self.breaks.get(k + 1).copied().unwrap_or(f64::INFINITY).min(diameter);
            sup = sup.max(w * upper * upper);
        }
        sup
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum StressWeight {
    /// `w = 1/d₀²`, giving `S = (1 − d₁/d₀)² ∈ [0, 1]`.
    #[default]
    InverseSq,
    Unit,
    Table(WeightTable),
}

impl StressWeight {
    /// A constant `s` with `S(v, w) ≤ s` for all pairs in the window.
    pub fn bound(&self, window: &Window) -> f64 {
        match self {
            Self::InverseSq => 1.0,
            Self::Unit => window.diameter().powi(2),
            Self::Table(t) => t.bound(window.diameter()),
        }
    }

    /// Pair stress from squared ambient and projected distances.
    #[inline]
    pub(crate) fn eval_sq(&self, d0_sq: f64, d1_sq: f64) -> f64 {
        debug_assert!(d1_sq <= d0_sq * (1.0 + 1e-12), "projection increased a distance");
        match self {
            Self::InverseSq => {
                let r = 1.0 - (d1_sq / d0_sq).min(1.0).sqrt();
                r * r
            }
            Self::Unit => {
                let r = d0_sq.sqrt() - d1_sq.sqrt();
                r * r
            }
            Self::Table(t) => {
                let d0 = d0_sq.sqrt();
                let r = d0 - d1_sq.sqrt();
                t.weight(d0) * r * r
            }
        }
    }
}

fn squared_distances(v1: &[f64], v2: &[f64], plane: &ProjectionPlane) -> (f64, f64) {
    let d0_sq: f64 = v1.iter().zip(v2).map(|(a, b)| (a - b) * (a - b)).sum();
    let (p, q) = (plane.project(v1), plane.project(v2));
    let d1_sq = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y);
    (d0_sq, d1_sq.min(d0_sq))
}

/// `S(v₁, v₂) = w(v₁, v₂)(d₀ − d₁)²`. Coincident points are rejected since the
/// inverse-square weight is singular there.
pub fn pair_stress(v1: &[f64], v2: &[f64], plane: &ProjectionPlane, weight: &StressWeight) -> Result<f64> {
    if v1.len() != v2.len() || v1.len() != plane.dim() {
        return arg_err("dimension mismatch between points and plane");
    }
    let (d0_sq, d1_sq) = squared_distances(v1, v2, plane);
    if d0_sq == 0.0 {
        return arg_err("pair stress is undefined for coincident points");
    }
    Ok(weight.eval_sq(d0_sq, d1_sq))
}

/// Pairwise (tree) summation; the result depends only on the input order.
pub(crate) fn tree_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    tree_sum(a) + tree_sum(b)
}

const ROW_BLOCK: usize = 64;

/// Stress over all unordered pairs of `points`. Coincident pairs contribute 0.
///
/// Rows are processed in fixed blocks; each block sum is computed
/// sequentially and block sums are combined by tree summation, so the result
/// is bit-identical under any thread count.
pub fn stress_total(points: &PointSet, plane: &ProjectionPlane, weight: &StressWeight) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let dim = points.dim();
    let proj = plane.project_all(points);
    let flat = points.as_flat();
    let row = |i: usize| -> f64 {
        let vi = &flat[i * dim..(i + 1) * dim];
        let pi = proj[i];
        let mut acc = 0.0;
        for j in (i + 1)..n {
            let vj = &flat[j * dim..(j + 1) * dim];
            let mut d0_sq = 0.0;
            for k in 0..dim {
                let t = vi[k] - vj[k];
                d0_sq += t * t;
            }
            if d0_sq == 0.0 {
                continue;
            }
            let (dx, dy) = (pi.x - proj[j].x, pi.y - proj[j].y);
            let d1_sq = (dx * dx + dy * dy).min(d0_sq);
            acc += weight.eval_sq(d0_sq, d1_sq);
        }
        acc
    };
    let blocks: Vec<f64> = (0..n.div_ceil(ROW_BLOCK))
        .into_par_iter()
        .map(|b| {
            let rows: Vec<f64> = (b * ROW_BLOCK..((b + 1) * ROW_BLOCK).min(n)).map(row).collect();
            tree_sum(&rows)
        })
        .collect();
    tree_sum(&blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_poisson_process, RngStream};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pl() -> ProjectionPlane {
        ProjectionPlane::coordinate(3)
    }

    #[test]
    fn pair_examples() {
        let w = StressWeight::InverseSq;
        assert_eq!(pair_stress(&[0., 0., 0.], &[1., 1., 0.], &pl(), &w).unwrap(), 0.0);
        assert_eq!(pair_stress(&[0., 0., 0.], &[0., 0., 1.], &pl(), &w).unwrap(), 1.0);
        let s = pair_stress(&[0., 0., 0.], &[1., 0., 1.], &pl(), &w).unwrap();
        assert_relative_eq!(s, (1.0 - std::f64::consts::FRAC_1_SQRT_2).powi(2), max_relative = 1e-14);
        assert_relative_eq!(s, 0.085_786_437_626_905, epsilon = 1e-12);
        assert!(pair_stress(&[0.3, 0.3, 0.3], &[0.3, 0.3, 0.3], &pl(), &w).is_err());
    }

    #[test]
    fn total_examples() {
        let w = StressWeight::InverseSq;
        assert_eq!(stress_total(&PointSet::new(3), &pl(), &w), 0.0);
        assert_eq!(stress_total(&PointSet::from_points(3, [[0.1, 0.2, 0.3]]).unwrap(), &pl(), &w), 0.0);
        let flat = PointSet::from_points(3, [[0.1, 0.2, 0.5], [0.7, 0.2, 0.5], [0.3, 0.9, 0.5]]).unwrap();
        assert_eq!(stress_total(&flat, &pl(), &w), 0.0);
        let pts = PointSet::from_points(3, [[0., 0., 0.], [0., 0., 1.], [1., 0., 1.]]).unwrap();
        assert_relative_eq!(stress_total(&pts, &pl(), &w), 1.085_786_437_626_905, epsilon = 1e-12);
    }

    #[test]
    fn unit_and_table_weights() {
        let a = [0.0, 0.0, 0.0];
        let b = [3.0, 0.0, 4.0];
        assert_relative_eq!(pair_stress(&a, &b, &pl(), &StressWeight::Unit).unwrap(), 4.0, epsilon = 1e-12);
        let table = WeightTable::new(vec![0.0, 1.0], vec![2.0, 0.5]).unwrap();
        assert_relative_eq!(
            pair_stress(&a, &b, &pl(), &StressWeight::Table(table.clone())).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            pair_stress(&a, &[0.0, 0.0, 0.5], &pl(), &StressWeight::Table(table)).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(WeightTable::new(vec![0.1], vec![1.0]).is_err());
        assert!(WeightTable::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(WeightTable::new(vec![0.0], vec![-1.0]).is_err());
        let parsed: StressWeight =
            serde_json::from_str(r#"{"kind":"table","breaks":[0.0,1.0],"weights":[2.0,0.5]}"#).unwrap();
        assert!(matches!(parsed, StressWeight::Table(_)));
        assert!(serde_json::from_str::<StressWeight>(r#"{"kind":"table","breaks":[0.5],"weights":[1.0]}"#).is_err());
    }

    #[test]
    fn sampled_pairs_within_bound() {
        let w = crate::geometry::Window::cube(3).unwrap();
        let pts = sample_poisson_process(&w, 300.0, &mut RngStream::new(2, 0).rng()).unwrap();
        let table = StressWeight::Table(WeightTable::new(vec![0.0, 0.5], vec![3.0, 1.0]).unwrap());
        for weight in [StressWeight::InverseSq, StressWeight::Unit, table] {
            let s = weight.bound(&w);
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    let v = pair_stress(pts.get(i), pts.get(j), &pl(), &weight).unwrap();
                    assert!((0.0..=s).contains(&v), "{v} > {s}");
                }
            }
        }
    }

    #[test]
    fn total_is_thread_count_independent() {
        let w = crate::geometry::Window::ball(3).unwrap();
        let pts = sample_poisson_process(&w, 1500.0, &mut RngStream::new(8, 0).rng()).unwrap();
        let a = stress_total(&pts, &pl(), &StressWeight::InverseSq);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| stress_total(&pts, &pl(), &StressWeight::InverseSq));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn invariant_under_permutation_and_planar_shift(
            raw in prop::collection::vec(prop::array::uniform3(0.0f64..1.0), 2..40),
            shift in prop::array::uniform2(-5.0f64..5.0),
            rot in 0usize..40,
        ) {
            let pts = PointSet::from_points(3, &raw).unwrap();
            let base = stress_total(&pts, &pl(), &StressWeight::InverseSq);
            let n = raw.len();
            let perm: Vec<usize> = (0..n).map(|k| (k + rot) % n).rev().collect();
            let permuted = stress_total(&pts.permuted(&perm), &pl(), &StressWeight::InverseSq);
            prop_assert!((base - permuted).abs() <= 1e-10 * base.max(1.0));
            let moved: Vec<[f64; 3]> = raw.iter().map(|p| [p[0] + shift[0], p[1] + shift[1], p[2]]).collect();
            let shifted = stress_total(&PointSet::from_points(3, &moved).unwrap(), &pl(), &StressWeight::InverseSq);
            prop_assert!((base - shifted).abs() <= 1e-9 * base.max(1.0));
        }
    }
}
