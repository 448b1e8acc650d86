use serde::{Deserialize, Serialize};

use super::UtilityFunction;
use crate::error::{Error, Result};

pub const DEFAULT_COVER_CAP: u128 = 10_000_000;

/// Every utility with `k` actions whose payoff entries lie on the δ-grid of
/// `[0,1]`, in lexicographic order of the flattened (action-major) entries.
/// The utility id is its position in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityCover {
    pub delta: f64,
    pub k: usize,
    /// Lifted dimension (free dimensions plus the lift coordinate).
    pub dim: usize,
    values: Vec<f64>,
    pub utilities: Vec<UtilityFunction>,
}

fn delta_values(delta: f64) -> Vec<f64> {
    let steps = (1.0 / delta + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=steps).map(|i| (i as f64 * delta).min(1.0)).collect();
    if 1.0 - v[v.len() - 1] > 1e-12 {
        v.push(1.0);
    }
    v
}

impl UtilityCover {
    /// Number of utilities `build` would produce, without building them.
    pub fn size(k: usize, lifted_dim: usize, delta: f64) -> u128 {
        let base = delta_values(delta).len() as u128;
        let exp = (k * lifted_dim) as u32;
        base.checked_pow(exp).unwrap_or(u128::MAX)
    }

    pub fn build(k: usize, lifted_dim: usize, delta: f64, cap: u128) -> Result<Self> {
        if k == 0 || lifted_dim == 0 {
            return Err(Error::invalid("cover needs k ≥ 1 and lifted_dim ≥ 1"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::invalid(format!("cover delta must lie in (0,1], got {delta}")));
        }
        let size = Self::size(k, lifted_dim, delta);
        if size > cap {
            return Err(Error::CapExceeded { what: "utility cover size".into(), size, cap });
        }
        let values = delta_values(delta);
        let slots = k * lifted_dim;
        let mut digits = vec![0usize; slots];
        let mut utilities = Vec::with_capacity(size as usize);
        for id in 0..size as usize {
            let vectors = digits
                .chunks(lifted_dim)
                .map(|c| c.iter().map(|&j| values[j]).collect())
                .collect();
            utilities.push(UtilityFunction::new(id, vectors, true)?);
            for s in (0..slots).rev() {
                digits[s] += 1;
                if digits[s] < values.len() {
                    break;
                }
                digits[s] = 0;
            }
        }
        Ok(Self { delta, k, dim: lifted_dim, values, utilities })
    }

    /// The δ-grid alone, without materializing the utilities. Enough for
    /// [`snap_utility`], whatever the cover size.
    pub fn lattice(k: usize, lifted_dim: usize, delta: f64) -> Result<Self> {
        if k == 0 || lifted_dim == 0 {
            return Err(Error::invalid("cover needs k ≥ 1 and lifted_dim ≥ 1"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::invalid(format!("cover delta must lie in (0,1], got {delta}")));
        }
        Ok(Self { delta, k, dim: lifted_dim, values: delta_values(delta), utilities: Vec::new() })
    }

    pub fn is_materialized(&self) -> bool {
        !self.utilities.is_empty()
    }

    pub fn len(&self) -> usize {
        self.utilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utilities.is_empty()
    }

    /// The δ-grid of payoff entries.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the δ-grid value nearest to `x`; ties go to the larger value.
    fn nearest_value(&self, x: f64) -> usize {
        let mut best = 0;
        for (j, &v) in self.values.iter().enumerate() {
            if (v - x).abs() <= (self.values[best] - x).abs() + 1e-12 {
                best = j;
            }
        }
        best
    }
}

/// The cover element obtained by rounding every payoff entry of `u` to the
/// nearest δ-grid value (ties round up). On a lattice-only cover the result
/// keeps the id of `u`.
pub fn snap_utility(u: &UtilityFunction, cover: &UtilityCover) -> Result<UtilityFunction> {
    if u.action_count() != cover.k {
        return Err(Error::invalid(format!(
            "utility has {} actions, cover was built for {}",
            u.action_count(),
            cover.k
        )));
    }
    if u.dim() != cover.dim {
        return Err(Error::DimensionMismatch { expected: cover.dim, got: u.dim() });
    }
    if cover.is_materialized() {
        let base = cover.values.len();
        let id = u.vectors().iter().flatten().fold(0usize, |acc, &x| acc * base + cover.nearest_value(x));
        return Ok(cover.utilities[id].clone());
    }
    let vectors = u
        .vectors()
        .iter()
        .map(|v| v.iter().map(|&x| cover.values[cover.nearest_value(x)]).collect())
        .collect();
    UtilityFunction::new(u.id, vectors, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cover_sizes() {
        let c = UtilityCover::build(1, 1, 0.5, DEFAULT_COVER_CAP).unwrap();
        assert_eq!(c.len(), 3);
        let entries: Vec<f64> = c.utilities.iter().map(|u| u.vectors()[0][0]).collect();
        assert_eq!(entries, vec![0.0, 0.5, 1.0]);
        assert_eq!(UtilityCover::build(2, 1, 1.0, DEFAULT_COVER_CAP).unwrap().len(), 4);
        assert_eq!(UtilityCover::build(1, 2, 1.0, DEFAULT_COVER_CAP).unwrap().len(), 4);
        assert_eq!(UtilityCover::build(2, 2, 0.25, DEFAULT_COVER_CAP).unwrap().len(), 625);
    }

    #[test]
    fn cover_entries_are_multiples_of_delta_and_ids_are_stable() {
        let c = UtilityCover::build(2, 2, 0.25, DEFAULT_COVER_CAP).unwrap();
        for (i, u) in c.utilities.iter().enumerate() {
            assert_eq!(u.id, i);
            for &x in u.vectors().iter().flatten() {
                assert!(((x / 0.25).round() * 0.25 - x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cover_cap_reports_size() {
        match UtilityCover::build(3, 3, 0.1, 1000).unwrap_err() {
            Error::CapExceeded { size, .. } => assert_eq!(size, 11u128.pow(9)),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn snap_examples() {
        let c = UtilityCover::build(1, 1, 0.5, DEFAULT_COVER_CAP).unwrap();
        let snap = |x: f64| snap_utility(&UtilityFunction::new(9, vec![vec![x]], true).unwrap(), &c).unwrap().vectors()[0][0];
        assert_eq!(snap(0.3), 0.5);
        assert_eq!(snap(0.25), 0.5);
        assert_eq!(snap(0.2), 0.0);
        assert_eq!(snap(1.0), 1.0);
        assert_eq!(snap(-0.7), 0.0);
    }

    #[test]
    fn snap_rejects_mismatch() {
        let c = UtilityCover::build(2, 2, 0.5, DEFAULT_COVER_CAP).unwrap();
        let u = UtilityFunction::new(0, vec![vec![0.1, 0.2]], true).unwrap();
        assert!(snap_utility(&u, &c).is_err());
        let u = UtilityFunction::new(0, vec![vec![0.1], vec![0.2]], true).unwrap();
        assert!(snap_utility(&u, &c).is_err());
    }

    #[test]
    fn lattice_cover_snaps_like_materialized() {
        let full = UtilityCover::build(2, 2, 0.25, DEFAULT_COVER_CAP).unwrap();
        let lat = UtilityCover::lattice(2, 2, 0.25).unwrap();
        assert!(!lat.is_materialized());
        let u = UtilityFunction::new(7, vec![vec![0.13, 0.9], vec![0.61, 0.37]], true).unwrap();
        let a = snap_utility(&u, &full).unwrap();
        let b = snap_utility(&u, &lat).unwrap();
        assert_eq!(a.vectors(), b.vectors());
        assert_eq!(b.id, 7);
        assert!(UtilityCover::lattice(2, 2, 1.0 / 1000.0).is_ok());
    }
}
