//! Brute-force convex-closure checks used to validate the enumerators.

use std::collections::HashSet;

use super::Membership;
use crate::error::{Error, Result};
use crate::geometry::PredictionGrid;

/// Largest grid the subset oracle accepts (2^16 subsets).
pub const ORACLE_MAX_POINTS: usize = 16;

fn orient(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain; returns hull vertices counterclockwise without
/// collinear points (a degenerate hull comes back as 1 or 2 points).
fn hull(mut pts: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    pts.sort_unstable();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<(i64, i64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(i64, i64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn in_hull(h: &[(i64, i64)], p: (i64, i64)) -> bool {
    match h.len() {
        0 => false,
        1 => h[0] == p,
        2 => {
            let (a, b) = (h[0], h[1]);
            orient(a, b, p) == 0
                && p.0 >= a.0.min(b.0)
                && p.0 <= a.0.max(b.0)
                && p.1 >= a.1.min(b.1)
                && p.1 <= a.1.max(b.1)
        }
        n => (0..n).all(|k| orient(h[k], h[(k + 1) % n], p) >= 0),
    }
}

/// `hull(S) ∩ grid` for a set `S` of grid points (1 or 2 free dimensions).
pub fn convex_closure(grid: &PredictionGrid, set: &Membership) -> Result<Membership> {
    let n = grid.len();
    match grid.free_dims() {
        1 => {
            let mut ones = set.ones();
            let Some(lo) = ones.next() else { return Ok(Membership::empty(n)) };
            let hi = ones.last().unwrap_or(lo);
            Ok(Membership::from_indices(n, lo..=hi))
        }
        2 => {
            if !grid.is_uniform() {
                return Err(Error::invalid("convex closure needs a uniform grid"));
            }
            let lat = |i: usize| {
                let c = grid.lattice_coords(i);
                (c[0] as i64, c[1] as i64)
            };
            let h = hull(set.ones().map(lat).collect());
            Ok(Membership::from_indices(n, (0..n).filter(|&i| in_hull(&h, lat(i)))))
        }
        d => Err(Error::invalid(format!("convex closure supports 1 or 2 free dimensions, not {d}"))),
    }
}

pub fn is_convex_closed(grid: &PredictionGrid, set: &Membership) -> Result<bool> {
    Ok(convex_closure(grid, set)? == *set)
}

/// Counts distinct nonempty convex-closed subsets by checking every subset.
pub fn polygon_subset_oracle(grid: &PredictionGrid) -> Result<usize> {
    let n = grid.len();
    if n > ORACLE_MAX_POINTS {
        return Err(Error::invalid(format!("subset oracle accepts at most {ORACLE_MAX_POINTS} points, grid has {n}")));
    }
    let mut seen = HashSet::new();
    for mask in 1u32..(1u32 << n) {
        let s = Membership::from_indices(n, (0..n).filter(|&i| mask >> i & 1 == 1));
        if is_convex_closed(grid, &s)? {
            seen.insert(mask);
        }
    }
    Ok(seen.len())
}
