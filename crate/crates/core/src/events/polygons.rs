//! Enumeration of convex-closed subsets of a two-dimensional grid.
//!
//! A set `S` of grid points is convex-closed when `S = hull(S) ∩ grid`. Such a
//! set is determined by the vertices of its hull, so we enumerate:
//! singletons, segments (by their two endpoints) and strictly convex lattice
//! polygons. Polygons are grown as counterclockwise vertex chains from their
//! lowest-then-leftmost vertex; every chain of three or more vertices that
//! keeps the start strictly on its left closes into a distinct polygon.
//!
//! All geometry runs on integer axis indices, which is exact on uniform grids.

use std::sync::Arc;

use super::{EventFamily, EventLabel, FamilyBuilder, Membership};
use crate::error::{Error, Result};
use crate::geometry::PredictionGrid;

pub const DEFAULT_POLYGON_CAP: usize = 5_000_000;

type P = (i64, i64);

#[inline]
fn cross(o: P, a: P, b: P) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Strictly after `v0` in lowest-then-leftmost order.
#[inline]
fn after(v0: P, w: P) -> bool {
    w.1 > v0.1 || (w.1 == v0.1 && w.0 > v0.0)
}

/// Receives each convex-closed set found by the enumeration.
trait Sink {
    /// Whether the enumerator should build memberships at all.
    const MEMBERSHIP: bool;
    fn emit(&mut self, membership: Membership, chain: &[usize], pts: &[P]) -> Result<()>;
}

impl Sink for FamilyBuilder {
    const MEMBERSHIP: bool = true;
    fn emit(&mut self, membership: Membership, chain: &[usize], pts: &[P]) -> Result<()> {
        let label = EventLabel::Polygon { vertices: chain.iter().map(|&i| [pts[i].0 as u32, pts[i].1 as u32]).collect() };
        self.push_distinct(membership, label)
    }
}

struct Counter(u64);

impl Sink for Counter {
    const MEMBERSHIP: bool = false;
    fn emit(&mut self, _: Membership, _: &[usize], _: &[P]) -> Result<()> {
        self.0 += 1;
        Ok(())
    }
}

struct Enumerator<'a, S: Sink> {
    pts: Vec<P>,
    sink: &'a mut S,
}

impl<S: Sink> Enumerator<'_, S> {
    fn blank(&self) -> Membership {
        Membership::empty(if S::MEMBERSHIP { self.pts.len() } else { 0 })
    }

    fn triangle(&self, a: P, b: P, c: P) -> Membership {
        if !S::MEMBERSHIP {
            return self.blank();
        }
        // a, b, c counterclockwise
        Membership::from_indices(
            self.pts.len(),
            self.pts
                .iter()
                .enumerate()
                .filter(|(_, &p)| cross(a, b, p) >= 0 && cross(b, c, p) >= 0 && cross(c, a, p) >= 0)
                .map(|(i, _)| i),
        )
    }

    fn segment(&self, a: P, b: P) -> Membership {
        if !S::MEMBERSHIP {
            return self.blank();
        }
        let (lo_x, hi_x) = (a.0.min(b.0), a.0.max(b.0));
        let (lo_y, hi_y) = (a.1.min(b.1), a.1.max(b.1));
        Membership::from_indices(
            self.pts.len(),
            self.pts
                .iter()
                .enumerate()
                .filter(|(_, &p)| {
                    cross(a, b, p) == 0 && (lo_x..=hi_x).contains(&p.0) && (lo_y..=hi_y).contains(&p.1)
                })
                .map(|(i, _)| i),
        )
    }

    fn run(&mut self) -> Result<()> {
        let n = self.pts.len();
        for i in 0..n {
            let m = if S::MEMBERSHIP { Membership::from_indices(n, [i]) } else { self.blank() };
            self.sink.emit(m, &[i], &self.pts)?;
        }
        for i0 in 0..n {
            let v0 = self.pts[i0];
            for i1 in 0..n {
                if !after(v0, self.pts[i1]) {
                    continue;
                }
                let seg = self.segment(v0, self.pts[i1]);
                self.sink.emit(seg.clone(), &[i0, i1], &self.pts)?;
                let mut chain = vec![i0, i1];
                self.grow(&mut chain, &seg)?;
            }
        }
        Ok(())
    }

    /// `inside` is the closed region spanned by the current chain.
    fn grow(&mut self, chain: &mut Vec<usize>, inside: &Membership) -> Result<()> {
        let v0 = self.pts[chain[0]];
        let last = self.pts[*chain.last().unwrap()];
        let prev = self.pts[chain[chain.len() - 2]];
        for iw in 0..self.pts.len() {
            let w = self.pts[iw];
            if !after(v0, w)
                || cross(prev, last, w) <= 0
                || cross(v0, last, w) <= 0
                || cross(last, w, v0) <= 0
            {
                continue;
            }
            let mut region = self.triangle(v0, last, w);
            region.union_with(inside);
            chain.push(iw);
            self.sink.emit(region.clone(), chain, &self.pts)?;
            self.grow(chain, &region)?;
            chain.pop();
        }
        Ok(())
    }
}

fn lattice_points(grid: &PredictionGrid) -> Result<Vec<P>> {
    if grid.free_dims() != 2 {
        return Err(Error::invalid(format!(
            "polygon events need two free dimensions, grid has {}",
            grid.free_dims()
        )));
    }
    if !grid.is_uniform() {
        return Err(Error::invalid("polygon events need a uniform grid (1/epsilon integral)"));
    }
    Ok((0..grid.len())
        .map(|i| {
            let c = grid.lattice_coords(i);
            (c[0] as i64, c[1] as i64)
        })
        .collect())
}

/// Number of convex-closed subsets, found by the same enumeration as
/// [`convex_polygon_events_2d`] but without storing memberships. Usable on
/// grids whose family would not fit in memory.
pub fn count_convex_closed_sets_2d(grid: &PredictionGrid) -> Result<u64> {
    let pts = lattice_points(grid)?;
    let mut counter = Counter(0);
    Enumerator { pts, sink: &mut counter }.run()?;
    Ok(counter.0)
}

/// Every convex-closed subset of a two-dimensional uniform grid, including
/// degenerate hulls (single points and collinear segments).
pub fn convex_polygon_events_2d(grid: Arc<PredictionGrid>, cap: usize) -> Result<EventFamily> {
    let pts = lattice_points(&grid)?;
    let mut builder = FamilyBuilder::new(grid.clone(), cap);
    Enumerator { pts, sink: &mut builder }.run()?;
    Ok(builder.finish("polygons"))
}
