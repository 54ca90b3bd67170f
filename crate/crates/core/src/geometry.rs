//! Observation windows, projection planes, fiber (slice) measures and exact
//! planar segment intersection.
//!
//! Windows have unit volume: the cube is `[0,1]^d`, the ball is centred at the
//! origin with radius `κ_d^{-1/d}`. Slices `(v + L^⊥) ∩ W` have closed-form
//! `(d-2)`-volumes for the cube projected onto two coordinate axes and for the
//! ball projected onto any plane through the origin; other combinations are
//! rejected.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, config_err, Result};
use crate::special::unit_ball_volume;

/// Tolerance for the orthonormality check of a user supplied plane basis.
const ORTHONORMAL_TOL: f64 = 1e-12;

/// A point of the projection plane, in plane coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    fn lex_lt(self, other: Self) -> bool {
        (self.x, self.y) < (other.x, other.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Self::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Points of `ℝ^d` in a flat row-major buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        Self { dim, coords: Vec::new() }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        Self { dim, coords: Vec::with_capacity(dim * n) }
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return arg_err(format!("flat buffer of length {} is not a multiple of dimension {dim}", coords.len()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return arg_err("point coordinates must be finite");
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: impl IntoIterator<Item = P>) -> Result<Self> {
        let mut set = Self::new(dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return arg_err(format!("point of length {} in a {dim}-dimensional set", p.len()));
            }
            set.coords.extend_from_slice(p);
        }
        Self::from_flat(dim, set.coords)
    }

    pub fn push(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.dim, "point dimension mismatch");
        self.coords.extend_from_slice(p);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Reorders the points so that new index `k` holds old point `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.len());
        let mut out = Self::with_capacity(self.dim, perm.len());
        for &i in perm {
            out.push(self.get(i));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Cube,
    Ball,
}

/// A unit-volume convex body in `ℝ^d`, `d ≥ 3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    kind: WindowKind,
    dim: usize,
    radius: f64,
}

impl Window {
    pub fn new(kind: WindowKind, dim: usize) -> Result<Self> {
        if dim < 3 {
            return config_err(format!("window dimension must be at least 3, got {dim}"));
        }
        let radius = match kind {
            WindowKind::Cube => 0.5,
            WindowKind::Ball => unit_ball_volume(dim).powf(-1.0 / dim as f64),
        };
        Ok(Self { kind, dim, radius })
    }

    pub fn cube(dim: usize) -> Result<Self> {
        Self::new(WindowKind::Cube, dim)
    }

    pub fn ball(dim: usize) -> Result<Self> {
        Self::new(WindowKind::Ball, dim)
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Radius `r_d` of the unit-volume ball; `None` for the cube.
    pub fn ball_radius(&self) -> Option<f64> {
        (self.kind == WindowKind::Ball).then_some(self.radius)
    }

    /// Per-axis extent `[lo, hi]` of the axis-aligned bounding box.
    pub fn axis_bounds(&self) -> (f64, f64) {
        match self.kind {
            WindowKind::Cube => (0.0, 1.0),
            WindowKind::Ball => (-self.radius, self.radius),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.kind {
            WindowKind::Cube => (self.dim as f64).sqrt(),
            WindowKind::Ball => 2.0 * self.radius,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.inner_parallel_contains(x, 0.0)
    }

    /// Whether the closed `delta`-ball around `x` lies in the window, i.e.
    /// `x ∈ W_{-δ}`.
    pub fn inner_parallel_contains(&self, x: &[f64], delta: f64) -> bool {
        debug_assert!(delta >= 0.0);
        match self.kind {
            WindowKind::Cube => x.iter().all(|&c| c >= delta && c <= 1.0 - delta),
            WindowKind::Ball => {
                let r = self.radius - delta;
                r >= 0.0 && x.iter().map(|c| c * c).sum::<f64>() <= r * r
            }
        }
    }

    /// Draws one uniform point of the window into `out`.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match self.kind {
            WindowKind::Cube => out.iter_mut().for_each(|c| *c = rng.random::<f64>()),
            WindowKind::Ball => {
                // Rejection from the bounding cube [-r, r]^d.
                let r = self.radius;
                loop {
                    let mut norm_sq = 0.0;
                    for c in out.iter_mut() {
                        *c = r * (2.0 * rng.random::<f64>() - 1.0);
                        norm_sq += *c * *c;
                    }
                    if norm_sq <= r * r {
                        return;
                    }
                }
            }
        }
    }

    fn check_plane(&self, plane: &ProjectionPlane) -> Result<()> {
        if plane.dim() != self.dim {
            return config_err(format!(
                "plane lives in dimension {} but window has dimension {}",
                plane.dim(),
                self.dim
            ));
        }
        if self.kind == WindowKind::Cube && plane.coordinate_axes().is_none() {
            return config_err("the cube window requires a projection plane spanned by two coordinate axes");
        }
        Ok(())
    }

    /// Bounding box `(lo, hi)` of the projected window `W|_L`.
    pub fn projected_bounds(&self, plane: &ProjectionPlane) -> Result<(Point2, Point2)> {
        self.check_plane(plane)?;
        let (lo, hi) = self.axis_bounds();
        Ok((Point2::new(lo, lo), Point2::new(hi, hi)))
    }

    /// `λ_{d-2}((v + L^⊥) ∩ W)`.
    pub fn fiber_measure(&self, plane: &ProjectionPlane, v: Point2) -> Result<f64> {
        self.check_plane(plane)?;
        Ok(self.fiber_unchecked(v, 0.0))
    }

    /// `λ_{d-2}((v + L^⊥) ∩ W_{-margin})`, the slice of the inner parallel body.
    pub fn inner_fiber_measure(&self, plane: &ProjectionPlane, v: Point2, margin: f64) -> Result<f64> {
        self.check_plane(plane)?;
        if margin < 0.0 {
            return arg_err("inner parallel margin must be non-negative");
        }
        Ok(self.fiber_unchecked(v, margin))
    }

    fn fiber_unchecked(&self, v: Point2, margin: f64) -> f64 {
        let k = self.dim - 2;
        match self.kind {
            WindowKind::Cube => {
                let (lo, hi) = (margin, 1.0 - margin);
                if lo <= hi && v.x >= lo && v.x <= hi && v.y >= lo && v.y <= hi {
                    (hi - lo).powi(k as i32)
                } else {
                    0.0
                }
            }
            WindowKind::Ball => {
                let r = self.radius - margin;
                let h = r * r - v.norm_sq();
                if r < 0.0 || h < 0.0 {
                    0.0
                } else {
                    unit_ball_volume(k) * h.powf(k as f64 / 2.0)
                }
            }
        }
    }

    /// Extremes of the slice measure over the closed disk `B_2(v, rho)`:
    /// `(inf of the W_{-margin} slice, sup of the W slice)`.
    pub(crate) fn fiber_extremes_on_disk(&self, v: Point2, rho: f64, margin: f64) -> (f64, f64) {
        match self.kind {
            WindowKind::Cube => {
                let (lo, hi) = (margin, 1.0 - margin);
                let inner = if v.x - rho >= lo && v.x + rho <= hi && v.y - rho >= lo && v.y + rho <= hi {
                    (hi - lo).powi(self.dim as i32 - 2)
                } else {
                    0.0
                };
                let dx = (0.0 - v.x).max(v.x - 1.0).max(0.0);
                let dy = (0.0 - v.y).max(v.y - 1.0).max(0.0);
                let outer = if dx * dx + dy * dy <= rho * rho { 1.0 } else { 0.0 };
                (inner, outer)
            }
            WindowKind::Ball => {
                // Radially decreasing slice: extremes at the farthest and nearest points.
                let n = v.norm_sq().sqrt();
                let far = Point2::new(n + rho, 0.0);
                let near = Point2::new((n - rho).max(0.0), 0.0);
                (self.fiber_unchecked(far, margin), self.fiber_unchecked(near, 0.0))
            }
        }
    }
}

/// A two-dimensional linear subspace `L ⊂ ℝ^d` with an orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionPlane {
    dim: usize,
    b1: Vec<f64>,
    b2: Vec<f64>,
    axes: Option<(usize, usize)>,
}

impl ProjectionPlane {
    /// The plane `ℝ² × {0}^{d-2}` spanned by the first two axes.
    pub fn coordinate(dim: usize) -> Self {
        Self::axes(dim, 0, 1).expect("dim >= 2")
    }

    pub fn axes(dim: usize, i: usize, j: usize) -> Result<Self> {
        if i == j || i >= dim || j >= dim {
            return config_err(format!("invalid coordinate axes ({i}, {j}) in dimension {dim}"));
        }
        let mut b1 = vec![0.0; dim];
        let mut b2 = vec![0.0; dim];
        b1[i] = 1.0;
        b2[j] = 1.0;
        Ok(Self { dim, b1, b2, axes: Some((i, j)) })
    }

    pub fn from_basis(b1: Vec<f64>, b2: Vec<f64>) -> Result<Self> {
        if b1.len() != b2.len() || b1.len() < 2 {
            return config_err("plane basis vectors must have equal length of at least 2");
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        if (dot(&b1, &b1) - 1.0).abs() > ORTHONORMAL_TOL
            || (dot(&b2, &b2) - 1.0).abs() > ORTHONORMAL_TOL
            || dot(&b1, &b2).abs() > ORTHONORMAL_TOL
        {
            return config_err("plane basis is not orthonormal");
        }
        let unit_axis = |b: &[f64]| {
            let mut hit = None;
            for (k, &c) in b.iter().enumerate() {
                if c == 1.0 && hit.is_none() {
                    hit = Some(k);
                } else if c != 0.0 {
                    return None;
                }
            }
            hit
        };
        let axes = unit_axis(&b1).zip(unit_axis(&b2));
        Ok(Self { dim: b1.len(), b1, b2, axes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> (&[f64], &[f64]) {
        (&self.b1, &self.b2)
    }

    /// `Some((i, j))` when the basis is `(e_i, e_j)`.
    pub fn coordinate_axes(&self) -> Option<(usize, usize)> {
        self.axes
    }

    pub fn project(&self, p: &[f64]) -> Point2 {
        debug_assert_eq!(p.len(), self.dim);
        match self.axes {
            Some((i, j)) => Point2::new(p[i], p[j]),
            None => Point2::new(
                p.iter().zip(&self.b1).map(|(a, b)| a * b).sum(),
                p.iter().zip(&self.b2).map(|(a, b)| a * b).sum(),
            ),
        }
    }

    pub fn project_all(&self, points: &PointSet) -> Vec<Point2> {
        points.iter().map(|p| self.project(p)).collect()
    }
}

/// Measurable subsets of the projection plane used for region counts.
/// Membership is closed: boundary points belong to the region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region2 {
    Rectangle { lo: Point2, hi: Point2 },
    Disk { center: Point2, radius: f64 },
    FullPlane,
}

impl Region2 {
    pub fn rectangle(lo: Point2, hi: Point2) -> Result<Self> {
        let r = Self::Rectangle { lo, hi };
        r.validate()?;
        Ok(r)
    }

    pub fn disk(center: Point2, radius: f64) -> Result<Self> {
        let r = Self::Disk { center, radius };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Rectangle { lo, hi } => {
                if !(lo.x.is_finite() && lo.y.is_finite() && hi.x.is_finite() && hi.y.is_finite()) {
                    return arg_err("rectangle corners must be finite");
                }
                if lo.x > hi.x || lo.y > hi.y {
                    return arg_err("rectangle requires lo <= hi componentwise");
                }
            }
            Self::Disk { center, radius } => {
                if !(center.x.is_finite() && center.y.is_finite() && radius.is_finite()) || radius < 0.0 {
                    return arg_err("disk requires a finite centre and radius >= 0");
                }
            }
            Self::FullPlane => {}
        }
        Ok(())
    }

    pub fn contains(&self, p: Point2) -> bool {
        match *self {
            Self::Rectangle { lo, hi } => p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y,
            Self::Disk { center, radius } => {
                let (dx, dy) = (p.x - center.x, p.y - center.y);
                dx * dx + dy * dy <= radius * radius
            }
            Self::FullPlane => true,
        }
    }

    /// Whether the two regions share a set of positive area. Regions that
    /// only touch along their boundaries do not overlap.
    pub fn overlaps(&self, other: &Region2) -> bool {
        use Region2::*;
        match (*self, *other) {
            (FullPlane, r) | (r, FullPlane) => r.area() > 0.0,
            (Rectangle { lo: a, hi: b }, Rectangle { lo: c, hi: d }) => {
                b.x.min(d.x) > a.x.max(c.x) && b.y.min(d.y) > a.y.max(c.y)
            }
            (Disk { center: c1, radius: r1 }, Disk { center: c2, radius: r2 }) => {
                r1 > 0.0 && r2 > 0.0 && Point2::new(c1.x - c2.x, c1.y - c2.y).norm_sq() < (r1 + r2) * (r1 + r2)
            }
            (Rectangle { lo, hi }, Disk { center, radius }) | (Disk { center, radius }, Rectangle { lo, hi }) => {
                if radius <= 0.0 || hi.x <= lo.x || hi.y <= lo.y {
                    return false;
                }
                let dx = (lo.x - center.x).max(center.x - hi.x).max(0.0);
                let dy = (lo.y - center.y).max(center.y - hi.y).max(0.0);
                dx * dx + dy * dy < radius * radius
            }
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Self::Rectangle { lo, hi } => (hi.x - lo.x) * (hi.y - lo.y),
            Self::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            Self::FullPlane => f64::INFINITY,
        }
    }
}

/// Uniform midpoint rule on an `n × n` grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridQuadrature {
    pub cells_per_axis: usize,
}

impl Default for GridQuadrature {
    fn default() -> Self {
        Self { cells_per_axis: 1024 }
    }
}

impl GridQuadrature {
    pub fn new(cells_per_axis: usize) -> Result<Self> {
        if cells_per_axis == 0 {
            return arg_err("quadrature resolution must be positive");
        }
        Ok(Self { cells_per_axis })
    }

    /// Midpoint rule for `f` over the box `[lo, hi]`.
    pub fn integrate(&self, lo: Point2, hi: Point2, mut f: impl FnMut(Point2) -> f64) -> f64 {
        let n = self.cells_per_axis;
        let hx = (hi.x - lo.x) / n as f64;
        let hy = (hi.y - lo.y) / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let x = lo.x + (i as f64 + 0.5) * hx;
            let mut row = 0.0;
            for j in 0..n {
                row += f(Point2::new(x, lo.y + (j as f64 + 0.5) * hy));
            }
            total += row;
        }
        total * hx * hy
    }
}

fn fiber_power_integral(
    window: &Window,
    plane: &ProjectionPlane,
    region: &Region2,
    quadrature: GridQuadrature,
    power: i32,
) -> Result<f64> {
    region.validate()?;
    if quadrature.cells_per_axis == 0 {
        return arg_err("quadrature resolution must be positive");
    }
    let (lo, hi) = window.projected_bounds(plane)?;
    Ok(quadrature.integrate(
        lo,
        hi,
        |v| {
            if region.contains(v) {
                window.fiber_unchecked(v, 0.0).powi(power)
            } else {
                0.0
            }
        },
    ))
}

/// `∫_A λ_{d-2}((v + L^⊥) ∩ W)² dv` by the midpoint rule on the bounding box
/// of `W|_L`.
pub fn fiber_sq_integral(
    window: &Window,
    plane: &ProjectionPlane,
    region: &Region2,
    quadrature: GridQuadrature,
) -> Result<f64> {
    fiber_power_integral(window, plane, region, quadrature, 2)
}

/// `∫_A λ_{d-2}((v + L^⊥) ∩ W) dv`; over the full plane this is `λ_d(W) = 1`.
pub fn fiber_integral(
    window: &Window,
    plane: &ProjectionPlane,
    region: &Region2,
    quadrature: GridQuadrature,
) -> Result<f64> {
    fiber_power_integral(window, plane, region, quadrature, 1)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    robust::orient2d(
        robust::Coord { x: a.x, y: a.y },
        robust::Coord { x: b.x, y: b.y },
        robust::Coord { x: c.x, y: c.y },
    )
}

/// Intersection of the closed segments `[a1, a2]` and `[b1, b2]`.
///
/// Orientation signs are exact (adaptive-precision predicates), so whether
/// the result is `Some` is decided exactly for representable inputs. A proper
/// crossing returns the intersection point (exact up to rounding when the
/// segments are far from parallel, and always inside both bounding boxes); an
/// endpoint lying on the
/// other segment returns that endpoint; collinear overlaps return the midpoint
/// of the overlap.
pub fn segments_intersect(a1: Point2, a2: Point2, b1: Point2, b2: Point2) -> Option<Point2> {
    let o1 = orient(a1, a2, b1);
    let o2 = orient(a1, a2, b2);
    if (o1 > 0.0 && o2 > 0.0) || (o1 < 0.0 && o2 < 0.0) {
        return None;
    }
    let o3 = orient(b1, b2, a1);
    let o4 = orient(b1, b2, a2);
    if (o3 > 0.0 && o4 > 0.0) || (o3 < 0.0 && o4 < 0.0) {
        return None;
    }
    if o1 == 0.0 && o2 == 0.0 && o3 == 0.0 && o4 == 0.0 {
        return collinear_overlap(a1, a2, b1, b2);
    }
    if o1 == 0.0 {
        return Some(b1);
    }
    if o2 == 0.0 {
        return Some(b2);
    }
    if o3 == 0.0 {
        return Some(a1);
    }
    if o4 == 0.0 {
        return Some(a2);
    }
    let s = (o3 / (o3 - o4)).clamp(0.0, 1.0);
    let p = Point2::new(a1.x + s * (a2.x - a1.x), a1.y + s * (a2.y - a1.y));
    // Nearly parallel segments make `s` ill-conditioned; keep the point in
    // both bounding boxes, which intersect whenever the segments do.
    let clamp = |v: f64, a: f64, b: f64, c: f64, d: f64| v.clamp(a.min(b).max(c.min(d)), a.max(b).min(c.max(d)));
    Some(Point2::new(clamp(p.x, a1.x, a2.x, b1.x, b2.x), clamp(p.y, a1.y, a2.y, b1.y, b2.y)))
}

fn collinear_overlap(a1: Point2, a2: Point2, b1: Point2, b2: Point2) -> Option<Point2> {
    // All four points lie on one line; parametrise by x unless it is vertical.
    let vertical = a1.x == a2.x && a1.x == b1.x && a1.x == b2.x;
    let key = |p: Point2| if vertical { p.y } else { p.x };
    let order = |p: Point2, q: Point2| if key(p) <= key(q) { (p, q) } else { (q, p) };
    let (amin, amax) = order(a1, a2);
    let (bmin, bmax) = order(b1, b2);
    let lo = if key(amin) >= key(bmin) { amin } else { bmin };
    let hi = if key(amax) <= key(bmax) { amax } else { bmax };
    if key(lo) > key(hi) {
        return None;
    }
    Some(Point2::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)))
}

/// Whether `p` is lexicographically smaller than `q`.
pub(crate) fn lex_lt(p: Point2, q: Point2) -> bool {
    p.lex_lt(q)
}
