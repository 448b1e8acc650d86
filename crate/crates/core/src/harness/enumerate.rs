//! Stand-alone family construction for the `enumerate-events` command.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{TieRule, UtilityCover, DEFAULT_COVER_CAP};
use crate::error::{Error, Result};
use crate::events::{
    best_response_events, convex_polygon_events_2d, count_convex_closed_sets_2d, intervals_1d,
    logistic_bucket_events, BucketScheme, EventFamily, DEFAULT_POLYGON_CAP,
};
use crate::geometry::PredictionGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Intervals,
    Polygons,
    BrCover,
    LogisticCover,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerateRequest {
    pub family: FamilyKind,
    /// Free dimension. Cover families use the lifted grid.
    pub dim: usize,
    pub epsilon: f64,
    pub k: usize,
    pub delta: f64,
    pub tau: f64,
    pub eta: f64,
    pub tie_rule: TieRule,
    pub cap: usize,
}

impl Default for EnumerateRequest {
    fn default() -> Self {
        Self {
            family: FamilyKind::Intervals,
            dim: 1,
            epsilon: 0.1,
            k: 2,
            delta: 0.25,
            tau: 0.25,
            eta: 32.0,
            tie_rule: TieRule::HighestIndex,
            cap: DEFAULT_POLYGON_CAP,
        }
    }
}

impl EnumerateRequest {
    pub fn grid(&self) -> Result<Arc<PredictionGrid>> {
        let lifted = matches!(self.family, FamilyKind::BrCover | FamilyKind::LogisticCover);
        let gdim = self.dim + usize::from(lifted);
        Ok(Arc::new(PredictionGrid::epsilon_net(gdim, self.epsilon, lifted)?))
    }
}

pub fn enumerate_events(req: &EnumerateRequest) -> Result<EventFamily> {
    let grid = req.grid()?;
    match req.family {
        FamilyKind::Intervals => {
            let n = grid.len() as u128;
            if n * (n + 1) / 2 > req.cap as u128 {
                return Err(Error::CapExceeded { what: "event family size".into(), size: n * (n + 1) / 2, cap: req.cap as u128 });
            }
            intervals_1d(grid)
        }
        FamilyKind::Polygons => convex_polygon_events_2d(grid, req.cap),
        FamilyKind::BrCover => {
            let cover = UtilityCover::build(req.k, grid.dim(), req.delta, DEFAULT_COVER_CAP)?;
            best_response_events(&cover.utilities, grid, req.tie_rule, req.cap)
        }
        FamilyKind::LogisticCover => {
            let cover = UtilityCover::build(req.k, grid.dim(), req.delta, DEFAULT_COVER_CAP)?;
            logistic_bucket_events(&cover.utilities, grid, req.eta, BucketScheme::new(req.tau)?, req.cap)
        }
    }
}

/// Number of convex-closed sets without storing them.
pub fn count_polygons(req: &EnumerateRequest) -> Result<u64> {
    if req.family != FamilyKind::Polygons {
        return Err(Error::Config("count-only is available for the polygon family".into()));
    }
    count_convex_closed_sets_2d(&*req.grid()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_by_kind() {
        let r = EnumerateRequest { epsilon: 1.0 / 64.0, ..Default::default() };
        assert_eq!(enumerate_events(&r).unwrap().len(), 2145);
        let r = EnumerateRequest { family: FamilyKind::Polygons, dim: 2, epsilon: 1.0, ..Default::default() };
        assert_eq!(enumerate_events(&r).unwrap().len(), 15);
        assert_eq!(count_polygons(&r).unwrap(), 15);
        let r = EnumerateRequest { family: FamilyKind::BrCover, epsilon: 0.5, delta: 1.0, ..Default::default() };
        let f = enumerate_events(&r).unwrap();
        assert!(f.len() <= 2 * 16 && !f.is_empty());
        let r = EnumerateRequest { family: FamilyKind::LogisticCover, epsilon: 0.5, delta: 1.0, tau: 0.5, eta: 2.0, ..Default::default() };
        assert!(!enumerate_events(&r).unwrap().is_empty());
    }

    #[test]
    fn caps_and_mismatches() {
        let r = EnumerateRequest { epsilon: 0.01, cap: 100, ..Default::default() };
        assert!(matches!(enumerate_events(&r), Err(Error::CapExceeded { .. })));
        let r = EnumerateRequest { family: FamilyKind::Polygons, dim: 1, ..Default::default() };
        assert!(enumerate_events(&r).is_err());
        assert!(count_polygons(&EnumerateRequest::default()).is_err());
    }
}
