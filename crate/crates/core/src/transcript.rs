//! The record of a forecasting run that every metric consumes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{ForecastDistribution, OutcomePoint, PredictionGrid};

/// One protocol round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub forecast: ForecastDistribution,
    pub realized: usize,
    pub outcome: OutcomePoint,
    /// Hash of `(round, outcome)` taken when the adversary committed.
    pub commitment: String,
}

/// Hash committing to the adversary's outcome for round `t` (1-based).
pub fn outcome_commitment(t: usize, outcome: &OutcomePoint) -> String {
    let mut h = Sha256::new();
    h.update((t as u64).to_le_bytes());
    for c in outcome.coords() {
        h.update(c.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Append-only list of rounds over a shared grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transcript {
    pub grid: Arc<PredictionGrid>,
    pub horizon: usize,
    pub rounds: Vec<RoundRecord>,
}

impl Transcript {
    pub fn new(grid: Arc<PredictionGrid>, horizon: usize) -> Self {
        Self { grid, horizon, rounds: Vec::with_capacity(horizon) }
    }

    /// Appends a round after validating it against the grid.
    pub fn push(&mut self, forecast: ForecastDistribution, realized: usize, outcome: OutcomePoint) -> Result<()> {
        let commitment = outcome_commitment(self.rounds.len() + 1, &outcome);
        self.push_committed(forecast, realized, outcome, commitment)
    }

    pub(crate) fn push_committed(
        &mut self,
        forecast: ForecastDistribution,
        realized: usize,
        outcome: OutcomePoint,
        commitment: String,
    ) -> Result<()> {
        self.grid.check_outcome(&outcome)?;
        if !forecast.contains(realized) {
            return Err(Error::invalid(format!("realized index {realized} outside forecast support")));
        }
        if forecast.support().last().is_some_and(|&i| i >= self.grid.len()) {
            return Err(Error::invalid("forecast support outside grid"));
        }
        self.rounds.push(RoundRecord { forecast, realized, outcome, commitment });
        Ok(())
    }

    /// Convenience for scripted transcripts where every forecast is a point mass.
    pub fn from_point_forecasts(
        grid: Arc<PredictionGrid>,
        predictions: &[usize],
        outcomes: &[OutcomePoint],
    ) -> Result<Self> {
        if predictions.len() != outcomes.len() {
            return Err(Error::invalid("prediction and outcome sequences differ in length"));
        }
        let mut tr = Transcript::new(grid, predictions.len());
        for (&i, y) in predictions.iter().zip(outcomes) {
            tr.push(ForecastDistribution::point_mass(i), i, y.clone())?;
        }
        Ok(tr)
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.rounds.len() == self.horizon
    }

    pub fn require_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::IncompleteTranscript { rounds: self.rounds.len(), horizon: self.horizon })
        }
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("transcript serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
