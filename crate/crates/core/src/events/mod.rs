//! Event families: deduplicated sets of binary events over a prediction grid.
//!
//! Every event is stored as a membership bit-vector indexed by grid point.
//! Families are built through [`FamilyBuilder`], which drops empty events and
//! merges events with identical membership (keeping every label).

mod intervals;
mod matrix;
mod oracle;
mod polygons;
mod response;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PredictionGrid;

pub use intervals::intervals_1d;
pub use matrix::{read_membership_matrix, write_membership_matrix, MATRIX_MAGIC};
pub use oracle::{convex_closure, is_convex_closed, polygon_subset_oracle, ORACLE_MAX_POINTS};
pub use polygons::{convex_polygon_events_2d, count_convex_closed_sets_2d, DEFAULT_POLYGON_CAP};
pub use response::{best_response_events, logistic_bucket_events, BucketScheme};

/// Fixed-length bit-vector over grid points.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Membership {
    len: usize,
    words: Vec<u64>,
}

impl Membership {
    pub fn empty(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn full(len: usize) -> Self {
        let mut m = Self::empty(len);
        for i in 0..len {
            m.set(i);
        }
        m
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Self::empty(len);
        for i in indices {
            m.set(i);
        }
        m
    }

    pub fn from_words(len: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != len.div_ceil(64) {
            return Err(Error::invalid("membership word count does not match length"));
        }
        let tail = len % 64;
        if tail != 0 && words.last().is_some_and(|w| w >> tail != 0) {
            return Err(Error::invalid("membership has bits beyond its length"));
        }
        Ok(Self { len, words })
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn union_with(&mut self, other: &Membership) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Indices of set bits in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + b)
            })
        })
    }
}

/// Where an event came from. Polygon vertices are grid axis indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventLabel {
    Interval { lo: usize, hi: usize },
    Polygon { vertices: Vec<[u32; 2]> },
    BestResponse { utility: usize, action: usize },
    Bucket { utility: usize, action: usize, bucket: usize },
}

impl std::fmt::Display for EventLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EventLabel::Interval { lo, hi } => write!(f, "interval[{lo},{hi}]"),
            EventLabel::Polygon { vertices } => {
                write!(f, "polygon")?;
                for v in vertices {
                    write!(f, "({},{})", v[0], v[1])?;
                }
                Ok(())
            }
            EventLabel::BestResponse { utility, action } => write!(f, "br(u{utility},a{action})"),
            EventLabel::Bucket { utility, action, bucket } => write!(f, "bucket(u{utility},a{action},i{bucket})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub membership: Membership,
    /// First label is the one the event was created under; later ones were merged in.
    pub labels: Vec<EventLabel>,
}

impl Event {
    pub fn label(&self) -> &EventLabel {
        &self.labels[0]
    }

    #[inline]
    pub fn contains(&self, point: usize) -> bool {
        self.membership.get(point)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupLog {
    /// Events generated before dropping empties and merging duplicates.
    pub raw: usize,
    pub duplicates_merged: usize,
    pub empties_dropped: usize,
}

/// An immutable, deduplicated collection of events over one grid.
#[derive(Debug, Clone)]
pub struct EventFamily {
    pub name: String,
    pub grid: Arc<PredictionGrid>,
    pub events: Vec<Event>,
    pub dedup: DedupLog,
}

/// Short description of a family, emitted by `enumerate-events`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FamilySummary {
    pub family: String,
    pub grid_size: usize,
    pub raw_count: usize,
    pub deduped_count: usize,
    pub dropped_empties: usize,
    pub merged_duplicates: usize,
}

impl EventFamily {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn summary(&self) -> FamilySummary {
        FamilySummary {
            family: self.name.clone(),
            grid_size: self.grid.len(),
            raw_count: self.dedup.raw,
            deduped_count: self.events.len(),
            dropped_empties: self.dedup.empties_dropped,
            merged_duplicates: self.dedup.duplicates_merged,
        }
    }

    /// Map from every label (including merged aliases) to its event index.
    pub fn label_index(&self) -> HashMap<EventLabel, usize> {
        self.events
            .iter()
            .enumerate()
            .flat_map(|(k, e)| e.labels.iter().map(move |l| (l.clone(), k)))
            .collect()
    }

    /// For each grid point, the indices of events containing it.
    pub fn events_by_point(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.grid.len()];
        for (k, e) in self.events.iter().enumerate() {
            for p in e.membership.ones() {
                out[p].push(k as u32);
            }
        }
        out
    }

    /// Merges several families over the same grid into one.
    pub fn union(name: impl Into<String>, families: &[&EventFamily]) -> Result<Self> {
        let grid = families.first().ok_or_else(|| Error::invalid("union of no families"))?.grid.clone();
        let mut b = FamilyBuilder::new(grid.clone(), usize::MAX);
        for f in families {
            if *f.grid != *grid {
                return Err(Error::invalid("families live on different grids"));
            }
            for e in &f.events {
                for l in &e.labels {
                    b.push(e.membership.clone(), l.clone())?;
                }
            }
        }
        Ok(b.finish(name))
    }
}

/// Accumulates events while dropping empties and merging duplicates.
pub struct FamilyBuilder {
    grid: Arc<PredictionGrid>,
    events: Vec<Event>,
    index: HashMap<Membership, usize>,
    log: DedupLog,
    cap: usize,
}

impl FamilyBuilder {
    pub fn new(grid: Arc<PredictionGrid>, cap: usize) -> Self {
        Self { grid, events: Vec::new(), index: HashMap::new(), log: DedupLog::default(), cap }
    }

    pub fn push(&mut self, membership: Membership, label: EventLabel) -> Result<()> {
        debug_assert_eq!(membership.len(), self.grid.len());
        self.log.raw += 1;
        if membership.is_empty() {
            self.log.empties_dropped += 1;
            return Ok(());
        }
        if let Some(&k) = self.index.get(&membership) {
            self.log.duplicates_merged += 1;
            self.events[k].labels.push(label);
            return Ok(());
        }
        if self.events.len() >= self.cap {
            return Err(Error::CapExceeded {
                what: "event family size (partial count)".into(),
                size: self.events.len() as u128 + 1,
                cap: self.cap as u128,
            });
        }
        self.index.insert(membership.clone(), self.events.len());
        self.events.push(Event { membership, labels: vec![label] });
        Ok(())
    }

    /// Pushes an event the caller knows is nonempty and distinct from every
    /// other event pushed this way. Skips the hash index.
    pub(crate) fn push_distinct(&mut self, membership: Membership, label: EventLabel) -> Result<()> {
        debug_assert!(!membership.is_empty());
        self.log.raw += 1;
        if self.events.len() >= self.cap {
            return Err(Error::CapExceeded {
                what: "event family size (partial count)".into(),
                size: self.events.len() as u128 + 1,
                cap: self.cap as u128,
            });
        }
        self.events.push(Event { membership, labels: vec![label] });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn finish(self, name: impl Into<String>) -> EventFamily {
        EventFamily { name: name.into(), grid: self.grid, events: self.events, dedup: self.log }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_bits() {
        let mut m = Membership::empty(130);
        m.set(0);
        m.set(64);
        m.set(129);
        assert_eq!(m.ones().collect::<Vec<_>>(), vec![0, 64, 129]);
        assert_eq!(m.count(), 3);
        assert!(m.get(129) && !m.get(128));
        assert!(Membership::from_words(130, vec![0, 0, 1 << 5]).is_err());
    }

    #[test]
    fn builder_drops_empties_and_merges_duplicates() {
        let g = Arc::new(PredictionGrid::epsilon_net(1, 0.5, false).unwrap());
        let mut b = FamilyBuilder::new(g, 10);
        b.push(Membership::empty(3), EventLabel::Interval { lo: 0, hi: 0 }).unwrap();
        b.push(Membership::from_indices(3, [1]), EventLabel::BestResponse { utility: 0, action: 0 }).unwrap();
        b.push(Membership::from_indices(3, [1]), EventLabel::BestResponse { utility: 1, action: 1 }).unwrap();
        let f = b.finish("t");
        assert_eq!(f.len(), 1);
        assert_eq!(f.dedup, DedupLog { raw: 3, duplicates_merged: 1, empties_dropped: 1 });
        assert_eq!(f.events[0].labels.len(), 2);
        assert_eq!(f.label_index().len(), 2);
    }

    #[test]
    fn builder_cap_reports_partial_count() {
        let g = Arc::new(PredictionGrid::epsilon_net(1, 0.5, false).unwrap());
        let mut b = FamilyBuilder::new(g, 1);
        b.push(Membership::from_indices(3, [0]), EventLabel::Interval { lo: 0, hi: 0 }).unwrap();
        let err = b.push(Membership::from_indices(3, [1]), EventLabel::Interval { lo: 1, hi: 1 }).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
