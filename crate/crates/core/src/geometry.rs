//! Prediction geometry: the discretized outcome box, outcome points and
//! forecast distributions over grid points.
//!
//! A grid is always a Cartesian product of one sorted list of axis values per
//! free coordinate. When the grid is *lifted*, every point carries one extra
//! trailing coordinate pinned to 1 so that affine utilities become linear.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for coordinate comparisons.
pub const COORD_TOL: f64 = 1e-12;

/// Tolerance on the total mass of a forecast distribution.
pub const MASS_TOL: f64 = 1e-9;

/// A finite ℓ∞-net of the outcome box `[0,1]^d` (optionally lifted).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGrid {
    dim: usize,
    epsilon: f64,
    lifted: bool,
    axes: Vec<Vec<f64>>,
    uniform: bool,
    coords: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridDoc {
    dim: usize,
    epsilon: f64,
    lifted: bool,
    points: Vec<Vec<f64>>,
}

fn axis_values(epsilon: f64) -> Vec<f64> {
    let steps = (1.0 / epsilon + 1e-9).floor() as usize;
    let mut axis: Vec<f64> = (0..=steps).map(|i| (i as f64 * epsilon).min(1.0)).collect();
    let last = *axis.last().unwrap();
    if (last - 1.0).abs() <= 1e-9 {
        *axis.last_mut().unwrap() = 1.0;
    } else {
        axis.push(1.0);
    }
    axis
}

fn is_arithmetic(axis: &[f64]) -> bool {
    if axis.len() <= 2 {
        return true;
    }
    let step = axis[1] - axis[0];
    axis.iter().enumerate().all(|(i, v)| (v - axis[0] - i as f64 * step).abs() <= 1e-9)
}

fn covering_radius(axis: &[f64]) -> f64 {
    let mut radius = axis[0].max(1.0 - axis[axis.len() - 1]);
    for w in axis.windows(2) {
        radius = radius.max((w[1] - w[0]) / 2.0);
    }
    radius
}

impl PredictionGrid {
    /// Builds the standard box net: every free coordinate takes the values
    /// `0, ε, 2ε, …` clipped to `[0,1]`, always including both endpoints.
    pub fn epsilon_net(dim: usize, epsilon: f64, lifted: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("grid dimension must be at least 1"));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0,1], got {epsilon}")));
        }
        let axis = axis_values(epsilon);
        let free = dim - usize::from(lifted);
        Ok(Self::from_parts(epsilon, lifted, vec![axis; free]))
    }

    /// Product grid with the same explicit axis values on every free
    /// coordinate. The reported `epsilon` is the covering radius.
    pub fn from_axis(dim: usize, axis: Vec<f64>, lifted: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("grid dimension must be at least 1"));
        }
        let free = dim - usize::from(lifted);
        Self::from_axes(vec![axis; free], lifted)
    }

    /// Product grid with one explicit axis per free coordinate.
    pub fn from_axes(axes: Vec<Vec<f64>>, lifted: bool) -> Result<Self> {
        if axes.is_empty() && !lifted {
            return Err(Error::invalid("grid dimension must be at least 1"));
        }
        let mut clean = Vec::with_capacity(axes.len());
        let mut radius: f64 = 0.0;
        for mut axis in axes {
            if axis.is_empty() || axis.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid("axis values must be nonempty and lie in [0,1]"));
            }
            axis.sort_by(f64::total_cmp);
            axis.dedup_by(|a, b| (*a - *b).abs() <= COORD_TOL);
            radius = radius.max(covering_radius(&axis));
            clean.push(axis);
        }
        Ok(Self::from_parts(radius.max(f64::MIN_POSITIVE), lifted, clean))
    }

    fn from_parts(epsilon: f64, lifted: bool, axes: Vec<Vec<f64>>) -> Self {
        let free = axes.len();
        let dim = free + usize::from(lifted);
        let count: usize = axes.iter().map(Vec::len).product();
        let mut coords = Vec::with_capacity(count * dim);
        let mut idx = vec![0usize; free];
        for _ in 0..count {
            coords.extend(idx.iter().zip(&axes).map(|(&j, a)| a[j]));
            if lifted {
                coords.push(1.0);
            }
            // odometer, last free coordinate fastest (lexicographic order)
            for (slot, a) in idx.iter_mut().zip(&axes).rev() {
                *slot += 1;
                if *slot < a.len() {
                    break;
                }
                *slot = 0;
            }
        }
        let uniform = axes.iter().all(|a| is_arithmetic(a));
        Self { dim, epsilon, lifted, axes, uniform, coords }
    }

    /// Number of points the standard net would have, without building it.
    pub fn net_size(dim: usize, epsilon: f64, lifted: bool) -> u128 {
        if dim == 0 || !(epsilon > 0.0 && epsilon <= 1.0) {
            return 0;
        }
        (axis_values(epsilon).len() as u128).pow((dim - usize::from(lifted)) as u32)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lifted(&self) -> bool {
        self.lifted
    }

    /// Coordinates that vary across the grid (excludes the lift coordinate).
    pub fn free_dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    /// True when every axis is an arithmetic progression, so integer axis
    /// indices are an exact per-coordinate affine image of the coordinates.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.coords[index * self.dim..(index + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Axis indices of the free coordinates of point `index`.
    pub fn lattice_coords(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        let mut rest = index;
        for (slot, a) in out.iter_mut().zip(&self.axes).rev() {
            *slot = rest % a.len();
            rest /= a.len();
        }
        out
    }

    /// Inverse of [`lattice_coords`](Self::lattice_coords).
    pub fn index_of_lattice(&self, lattice: &[usize]) -> usize {
        lattice.iter().zip(&self.axes).fold(0, |acc, (&j, a)| acc * a.len() + j)
    }

    /// Checks that `y` is a valid outcome for this grid.
    pub fn check_outcome(&self, y: &OutcomePoint) -> Result<()> {
        if y.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: y.dim() });
        }
        if y.coords().iter().any(|c| !(-COORD_TOL..=1.0 + COORD_TOL).contains(c)) {
            return Err(Error::invalid("outcome coordinates must lie in [0,1]"));
        }
        if self.lifted && (y.coords()[self.dim - 1] - 1.0).abs() > COORD_TOL {
            return Err(Error::invalid("lift coordinate of a lifted outcome must equal 1"));
        }
        Ok(())
    }

    /// Index of a grid point at minimal ℓ∞ distance from `y`; among all
    /// minimizers the smallest canonical index wins.
    pub fn nearest(&self, y: &OutcomePoint) -> Result<usize> {
        if y.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: y.dim() });
        }
        let free = &y.coords()[..self.free_dims()];
        let best = free
            .iter()
            .zip(&self.axes)
            .map(|(&c, axis)| axis.iter().map(|a| (a - c).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        // Lexicographically smallest point whose every free coordinate is
        // within the optimal distance.
        let lattice: Vec<usize> = free
            .iter()
            .zip(&self.axes)
            .map(|(&c, axis)| {
                axis.iter()
                    .position(|a| (a - c).abs() <= best + COORD_TOL)
                    .expect("optimal distance is attained on every axis")
            })
            .collect();
        Ok(self.index_of_lattice(&lattice))
    }

    /// ℓ∞ distance between a grid point and an outcome.
    pub fn distance(&self, index: usize, y: &OutcomePoint) -> f64 {
        self.point(index)
            .iter()
            .zip(y.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(GridDoc {
            dim: self.dim,
            epsilon: self.epsilon,
            lifted: self.lifted,
            points: self.points().map(<[f64]>::to_vec).collect(),
        })
        .expect("grid serializes")
    }
}

impl Serialize for PredictionGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PredictionGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = GridDoc::deserialize(d)?;
        let free = doc.dim.checked_sub(usize::from(doc.lifted)).ok_or_else(|| D::Error::custom("bad dim"))?;
        let axes: Vec<Vec<f64>> = (0..free)
            .map(|j| {
                let mut a: Vec<f64> = doc.points.iter().map(|p| p[j]).collect();
                a.sort_by(f64::total_cmp);
                a.dedup();
                a
            })
            .collect();
        let grid = Self::from_parts(doc.epsilon, doc.lifted, axes);
        if grid.len() != doc.points.len() || grid.points().zip(&doc.points).any(|(a, b)| a != b.as_slice()) {
            return Err(D::Error::custom("grid points are not a canonical product grid"));
        }
        Ok(grid)
    }
}

/// A realized outcome (or any point of the outcome box).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutcomePoint(Vec<f64>);

impl OutcomePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    /// Appends the lift coordinate to free coordinates.
    pub fn lifted(mut free: Vec<f64>) -> Self {
        free.push(1.0);
        Self(free)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for OutcomePoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// A probability distribution over grid points, stored sparsely by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastDistribution {
    support: Vec<usize>,
    weights: Vec<f64>,
}

impl ForecastDistribution {
    /// Builds a distribution from `(index, weight)` pairs; duplicates are
    /// summed and zero weights dropped.
    pub fn new(entries: impl IntoIterator<Item = (usize, f64)>, grid_len: usize) -> Result<Self> {
        let mut entries: Vec<(usize, f64)> = entries.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        let mut support = Vec::with_capacity(entries.len());
        let mut weights: Vec<f64> = Vec::with_capacity(entries.len());
        for (i, w) in entries {
            if i >= grid_len {
                return Err(Error::invalid(format!("support index {i} out of range ({grid_len} points)")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::invalid(format!("negative or non-finite forecast weight {w}")));
            }
            if support.last() == Some(&i) {
                *weights.last_mut().unwrap() += w;
            } else {
                support.push(i);
                weights.push(w);
            }
        }
        let keep: Vec<bool> = weights.iter().map(|&w| w > 0.0).collect();
        let mut k = keep.iter();
        support.retain(|_| *k.next().unwrap());
        weights.retain(|&w| w > 0.0);
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::invalid(format!("forecast weights sum to {total}, not 1")));
        }
        Ok(Self { support, weights })
    }

    pub fn point_mass(index: usize) -> Self {
        Self { support: vec![index], weights: vec![1.0] }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.support.binary_search(&index).map_or(0.0, |k| self.weights[k])
    }

    pub fn contains(&self, index: usize) -> bool {
        self.support.binary_search(&index).is_ok()
    }

    /// Inverse-CDF sampling over the canonical grid order; `u` in `[0,1)`.
    pub fn sample(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, w) in self.iter() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        *self.support.last().expect("distribution has nonempty support")
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.weights.iter().filter(|&&w| w > 0.0).map(|w| w * w.ln()).sum::<f64>()
    }
}
