use std::sync::Arc;

use super::{EventFamily, EventLabel, FamilyBuilder, Membership};
use crate::error::{Error, Result};
use crate::geometry::PredictionGrid;

/// All closed intervals `[y_lo, y_hi]` with endpoints on a one-dimensional grid.
pub fn intervals_1d(grid: Arc<PredictionGrid>) -> Result<EventFamily> {
    if grid.free_dims() != 1 {
        return Err(Error::invalid(format!(
            "interval events need one free dimension, grid has {}",
            grid.free_dims()
        )));
    }
    let n = grid.len();
    let mut b = FamilyBuilder::new(grid.clone(), usize::MAX);
    for lo in 0..n {
        for hi in lo..n {
            b.push(Membership::from_indices(n, lo..=hi), EventLabel::Interval { lo, hi })?;
        }
    }
    Ok(b.finish("intervals"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(eps: f64, lifted: bool) -> Arc<PredictionGrid> {
        Arc::new(PredictionGrid::epsilon_net(1 + usize::from(lifted), eps, lifted).unwrap())
    }

    #[test]
    fn counts() {
        let f = intervals_1d(grid(0.5, false)).unwrap();
        assert_eq!(f.len(), 6);
        let sets: Vec<Vec<usize>> = f.events.iter().map(|e| e.membership.ones().collect()).collect();
        assert_eq!(sets, vec![vec![0], vec![0, 1], vec![0, 1, 2], vec![1], vec![1, 2], vec![2]]);
        assert_eq!(intervals_1d(grid(1.0, false)).unwrap().len(), 3);
        assert_eq!(intervals_1d(grid(1.0 / 64.0, true)).unwrap().len(), 2145);
    }

    #[test]
    fn rejects_two_dimensional_grid() {
        let g = Arc::new(PredictionGrid::epsilon_net(2, 0.5, false).unwrap());
        assert!(intervals_1d(g).is_err());
    }
}
