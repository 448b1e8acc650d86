//! Events induced by agents: best-response regions and logistic-probability
//! buckets.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EventFamily, EventLabel, FamilyBuilder, Membership};
use crate::agents::{TieRule, UtilityFunction};
use crate::error::{Error, Result};
use crate::geometry::PredictionGrid;

/// Width-τ buckets of `[0,1]`: `[iτ, (i+1)τ)` for all but the last bucket,
/// which is closed and absorbs everything above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketScheme {
    tau: f64,
}

impl BucketScheme {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::invalid(format!("bucket width must lie in (0,1], got {tau}")));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `⌊1/τ⌋`.
    pub fn count(&self) -> usize {
        ((1.0 / self.tau) + 1e-9).floor() as usize
    }

    pub fn index(&self, q: f64) -> usize {
        let i = (q / self.tau).floor().max(0.0) as usize;
        i.min(self.count() - 1)
    }

    /// `(lo, hi)` edges of bucket `i`; the last bucket's upper edge is closed.
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        (i as f64 * self.tau, (i + 1) as f64 * self.tau)
    }
}

fn check_dims(utilities: &[UtilityFunction], grid: &PredictionGrid) -> Result<()> {
    for u in utilities {
        u.check_dim(grid.dim())?;
    }
    Ok(())
}

/// One event per (utility, action): the grid points where that action is the
/// best response.
pub fn best_response_events(
    utilities: &[UtilityFunction],
    grid: Arc<PredictionGrid>,
    tie_rule: TieRule,
    cap: usize,
) -> Result<EventFamily> {
    check_dims(utilities, &grid)?;
    let n = grid.len();
    let mut b = FamilyBuilder::new(grid.clone(), cap);
    for u in utilities {
        let mut rows = vec![Membership::empty(n); u.action_count()];
        for (j, y) in grid.points().enumerate() {
            rows[crate::agents::best_response_raw(u, y, tie_rule)].set(j);
        }
        for (a, m) in rows.into_iter().enumerate() {
            b.push(m, EventLabel::BestResponse { utility: u.id, action: a })?;
        }
    }
    Ok(b.finish("best_response"))
}

/// One event per (utility, action, bucket): the grid points where the logistic
/// probability of that action falls in the bucket.
pub fn logistic_bucket_events(
    utilities: &[UtilityFunction],
    grid: Arc<PredictionGrid>,
    eta: f64,
    scheme: BucketScheme,
    cap: usize,
) -> Result<EventFamily> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("logistic eta must be positive, got {eta}")));
    }
    check_dims(utilities, &grid)?;
    let n = grid.len();
    let buckets = scheme.count();
    let mut b = FamilyBuilder::new(grid.clone(), cap);
    for u in utilities {
        let k = u.action_count();
        let mut rows = vec![Membership::empty(n); k * buckets];
        for (j, y) in grid.points().enumerate() {
            let q = crate::agents::softmax(&u.payoffs(y), eta);
            for a in 0..k {
                rows[a * buckets + scheme.index(q[a])].set(j);
            }
        }
        for (r, m) in rows.into_iter().enumerate() {
            b.push(m, EventLabel::Bucket { utility: u.id, action: r / buckets, bucket: r % buckets })?;
        }
    }
    Ok(b.finish("logistic_buckets"))
}
