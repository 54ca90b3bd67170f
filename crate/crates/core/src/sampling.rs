//! Poisson point processes in a window and grid-accelerated random geometric
//! graph construction.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, config_err, Result};
use crate::geometry::{PointSet, Window};

/// Scaling of the connection radius with the intensity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Regime {
    /// `t² δ^{d+1} = c`: finitely many crossings in expectation.
    Sparse { c: f64 },
    /// `t δ^d = c`: bounded expected degree.
    Thermodynamic { c: f64 },
    /// Fixed radius, independent of `t`.
    Explicit { delta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeSpec {
    regime: Regime,
    dim: usize,
}

impl RegimeSpec {
    pub fn new(regime: Regime, dim: usize) -> Result<Self> {
        let value = match regime {
            Regime::Sparse { c } | Regime::Thermodynamic { c } => c,
            Regime::Explicit { delta } => delta,
        };
        if !(value.is_finite() && value > 0.0) {
            return config_err(format!("regime parameter must be positive and finite, got {value}"));
        }
        if dim == 0 {
            return config_err("regime dimension must be positive");
        }
        Ok(Self { regime, dim })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The radius `δ_t` for intensity `t`.
    pub fn delta_for(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t > 0.0) {
            return arg_err(format!("intensity must be positive, got {t}"));
        }
        let d = self.dim as f64;
        Ok(match self.regime {
            Regime::Sparse { c } => (c / (t * t)).powf(1.0 / (d + 1.0)),
            Regime::Thermodynamic { c } => (c / t).powf(1.0 / d),
            Regime::Explicit { delta } => delta,
        })
    }
}

/// A reproducible random stream: one `(seed, stream)` pair per replication.
///
/// Backed by ChaCha8 with its native 64-bit stream selector, so distinct
/// replications draw from non-overlapping keystreams regardless of the order
/// in which they are run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// An independent family of streams derived from this one, indexed by `k`.
    pub fn substream(&self, k: u64) -> RngStream {
        RngStream::new(splitmix64(self.seed ^ splitmix64(self.stream)), k)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Homogeneous Poisson process of intensity `t` on a unit-volume window:
/// `N ~ Poisson(t)` followed by `N` i.i.d. uniform points.
pub fn sample_poisson_process<R: Rng + ?Sized>(window: &Window, t: f64, rng: &mut R) -> Result<PointSet> {
    if !(t.is_finite() && t > 0.0) {
        return arg_err(format!("intensity must be positive, got {t}"));
    }
    let n = Poisson::new(t).map_err(|e| crate::Error::Argument(format!("poisson intensity {t}: {e}")))?.sample(rng)
        as usize;
    let dim = window.dim();
    let mut points = PointSet::with_capacity(dim, n);
    let mut x = vec![0.0; dim];
    for _ in 0..n {
        window.sample_uniform(rng, &mut x);
        points.push(&x);
    }
    Ok(points)
}

/// Vertex indices of an edge, smaller index first.
pub type Edge = (u32, u32);

/// A random geometric graph: vertices plus all pairs at distance `≤ δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    points: PointSet,
    edges: Vec<Edge>,
    delta: f64,
}

impl Graph {
    pub fn points(&self) -> &PointSet {
        &self.points
    }

    /// Edges sorted lexicographically, each `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn into_points(self) -> PointSet {
        self.points
    }
}

/// Uniform d-dimensional grid over the bounding box of a point set, with
/// occupied cells addressed by a mixed-radix linear key.
struct CellGrid {
    origin: Vec<f64>,
    cell: f64,
    extent: Vec<i64>,
    stride: Vec<u128>,
}

impl CellGrid {
    fn new(points: &PointSet, cell: f64) -> Result<Self> {
        let dim = points.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in points.iter() {
            for k in 0..dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent: Vec<i64> = lo.iter().zip(&hi).map(|(l, h)| ((h - l) / cell).floor() as i64 + 1).collect();
        let mut stride = vec![1u128; dim];
        let mut total: u128 = 1;
        for k in (0..dim).rev() {
            stride[k] = total;
            total = total
                .checked_mul(extent[k] as u128)
                .ok_or_else(|| crate::Error::Argument("radius too small for the grid index".into()))?;
        }
        Ok(Self { origin: lo, cell, extent, stride })
    }

    fn coords(&self, p: &[f64], out: &mut [i64]) {
        for k in 0..p.len() {
            out[k] = (((p[k] - self.origin[k]) / self.cell).floor() as i64).clamp(0, self.extent[k] - 1);
        }
    }

    fn key(&self, c: &[i64]) -> u128 {
        c.iter().zip(&self.stride).map(|(&ci, &s)| ci as u128 * s).sum()
    }

    fn shifted_key(&self, c: &[i64], offset: &[i64]) -> Option<u128> {
        let mut key = 0u128;
        for k in 0..c.len() {
            let ck = c[k] + offset[k];
            if ck < 0 || ck >= self.extent[k] {
                return None;
            }
            key += ck as u128 * self.stride[k];
        }
        Some(key)
    }
}

/// All offsets in `{-r..=r}^dim`.
pub(crate) fn stencil(dim: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-r..=r).map(move |o| {
                    let mut v = prefix.clone();
                    v.push(o);
                    v
                })
            })
            .collect();
    }
    out
}

/// Builds the graph on `points` with edges `{v, w}` for `‖v − w‖ ≤ delta`.
///
/// Points are bucketed into cells of side `delta`; candidate pairs come from
/// the same or adjacent cells (a `3^d` stencil), each unordered cell pair
/// being visited once from its smaller key.
pub fn build_rgg(points: PointSet, delta: f64) -> Result<Graph> {
    if !(delta.is_finite() && delta > 0.0) {
        return arg_err(format!("connection radius must be positive, got {delta}"));
    }
    if points.len() > u32::MAX as usize {
        return arg_err("too many points");
    }
    if points.len() < 2 {
        return Ok(Graph { points, edges: Vec::new(), delta });
    }
    let dim = points.dim();
    // Slightly enlarged cells: pairs at distance exactly `delta` must still
    // land in adjacent cells after rounding.
    let grid = CellGrid::new(&points, delta * (1.0 + 1e-9))?;

    let mut c = vec![0i64; dim];
    let mut keyed: Vec<(u128, u32)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            grid.coords(p, &mut c);
            (grid.key(&c), i as u32)
        })
        .collect();
    keyed.sort_unstable();

    let mut cells: HashMap<u128, (usize, usize)> = HashMap::new();
    let mut start = 0;
    for i in 1..=keyed.len() {
        if i == keyed.len() || keyed[i].0 != keyed[start].0 {
            cells.insert(keyed[start].0, (start, i));
            start = i;
        }
    }

    let offsets = stencil(dim, 1);
    let delta_sq = delta * delta;
    let within = |i: u32, j: u32| {
        let (a, b) = (points.get(i as usize), points.get(j as usize));
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() <= delta_sq
    };
    let mut edges = Vec::new();
    let mut occupied: Vec<(u128, (usize, usize))> = cells.iter().map(|(&k, &r)| (k, r)).collect();
    occupied.sort_unstable();
    for &(key, (s, e)) in &occupied {
        grid.coords(points.get(keyed[s].1 as usize), &mut c);
        for a in s..e {
            for b in (a + 1)..e {
                let (i, j) = (keyed[a].1, keyed[b].1);
                if within(i, j) {
                    edges.push((i.min(j), i.max(j)));
                }
            }
        }
        for off in &offsets {
            let Some(nkey) = grid.shifted_key(&c, off) else { continue };
            if nkey <= key {
                continue;
            }
            let Some(&(ns, ne)) = cells.get(&nkey) else { continue };
            for a in s..e {
                for b in ns..ne {
                    let (i, j) = (keyed[a].1, keyed[b].1);
                    if within(i, j) {
                        edges.push((i.min(j), i.max(j)));
                    }
                }
            }
        }
    }
    edges.sort_unstable();
    Ok(Graph { points, edges, delta })
}
