//! The crossing point process of a projected graph.
//!
//! Two vertex-disjoint edges cross when their projections onto the plane
//! intersect. Each unordered pair of crossing edges is one event, located at
//! the intersection point.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{lex_lt, segments_intersect, Point2, ProjectionPlane, Region2};
use crate::sampling::{Edge, Graph};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
/// Events are canonical: `edge_a < edge_b`, and the location is computed from
/// the edges in that order so that it is bit-reproducible.
pub struct CrossingEvent {
    pub edge_a: Edge,
    pub edge_b: Edge,
    pub location: Point2,
}

fn disjoint(e: Edge, f: Edge) -> bool {
    e.0 != f.0 && e.0 != f.1 && e.1 != f.0 && e.1 != f.1
}

fn crossing(proj: &[Point2], e: Edge, f: Edge) -> Option<CrossingEvent> {
    if !disjoint(e, f) {
        return None;
    }
    let (e, f) = if e < f { (e, f) } else { (f, e) };
    let (a1, a2) = (proj[e.0 as usize], proj[e.1 as usize]);
    let (b1, b2) = (proj[f.0 as usize], proj[f.1 as usize]);
    segments_intersect(a1, a2, b1, b2).map(|location| CrossingEvent { edge_a: e, edge_b: f, location })
}

fn sort_events(events: &mut [CrossingEvent]) {
    events.sort_unstable_by_key(|e| (e.edge_a, e.edge_b));
}

/// All crossings of the projected graph, sorted by `(edge_a, edge_b)`.
///
/// Each edge is filed under the planar grid cell (side `δ`) of its
/// lexicographically smaller projected endpoint. A projected edge has length
/// at most `δ`, so the filed endpoints of two crossing edges are within `2δ`
/// of each other and candidates come from a 5 × 5 cell stencil.
pub fn enumerate_crossings(graph: &Graph, plane: &ProjectionPlane) -> Vec<CrossingEvent> {
    let edges = graph.edges();
    if edges.len() < 2 {
        return Vec::new();
    }
    let proj = plane.project_all(graph.points());
    let anchor = |e: Edge| {
        let (p, q) = (proj[e.0 as usize], proj[e.1 as usize]);
        if lex_lt(q, p) {
            q
        } else {
            p
        }
    };

    let (mut lo, mut hi) =
        (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for &e in edges {
        let a = anchor(e);
        lo = Point2::new(lo.x.min(a.x), lo.y.min(a.y));
        hi = Point2::new(hi.x.max(a.x), hi.y.max(a.y));
    }
    let cell = graph.delta() * (1.0 + 1e-9);
    let nx = ((hi.x - lo.x) / cell).floor() as i64 + 1;
    let ny = ((hi.y - lo.y) / cell).floor() as i64 + 1;
    let cell_of = |p: Point2| {
        let cx = (((p.x - lo.x) / cell).floor() as i64).clamp(0, nx - 1);
        let cy = (((p.y - lo.y) / cell).floor() as i64).clamp(0, ny - 1);
        (cx, cy)
    };

    let mut filed: Vec<((i64, i64), Edge)> = edges.iter().map(|&e| (cell_of(anchor(e)), e)).collect();
    filed.sort_unstable();
    let mut ranges: Vec<((i64, i64), usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=filed.len() {
        if i == filed.len() || filed[i].0 != filed[start].0 {
            ranges.push((filed[start].0, start, i));
            start = i;
        }
    }
    let lookup: HashMap<(i64, i64), (usize, usize)> = ranges.iter().map(|&(c, s, e)| (c, (s, e))).collect();

    let mut events: Vec<CrossingEvent> = ranges
        .par_iter()
        .flat_map_iter(|&(c, s, e)| {
            let mut local = Vec::new();
            for a in s..e {
                for b in (a + 1)..e {
                    local.extend(crossing(&proj, filed[a].1, filed[b].1));
                }
            }
            for dx in -2..=2i64 {
                for dy in -2..=2i64 {
                    let n = (c.0 + dx, c.1 + dy);
                    if n <= c {
                        continue;
                    }
                    let Some(&(ns, ne)) = lookup.get(&n) else { continue };
                    for a in s..e {
                        for b in ns..ne {
                            local.extend(crossing(&proj, filed[a].1, filed[b].1));
                        }
                    }
                }
            }
            local
        })
        .collect();
    sort_events(&mut events);
    events
}

/// Quadratic scan over all edge pairs; reference for [`enumerate_crossings`].
pub fn enumerate_crossings_bruteforce(graph: &Graph, plane: &ProjectionPlane) -> Vec<CrossingEvent> {
    let proj = plane.project_all(graph.points());
    let edges = graph.edges();
    let mut events = Vec::new();
    for (i, &e) in edges.iter().enumerate() {
        for &f in &edges[i + 1..] {
            events.extend(crossing(&proj, e, f));
        }
    }
    sort_events(&mut events);
    events
}

/// Number of events located in the closed region.
pub fn count_in_region(events: &[CrossingEvent], region: &Region2) -> usize {
    events.iter().filter(|ev| region.contains(ev.location)).count()
}
