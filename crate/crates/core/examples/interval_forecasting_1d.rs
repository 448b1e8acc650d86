//! The forecasting loop driven by hand: an interval event family on a 1D grid,
//! the greedy-bias adversary, and the per-round solver certificate.
//!
//! `cargo run --release --example interval_forecasting_1d -- 4096`

use std::sync::Arc;

use forecast_core::adversaries::{AdversaryKind, AdversaryState};
use forecast_core::agents::{expected_swap_regret, AgentModel, UtilityFunction};
use forecast_core::events::intervals_1d;
use forecast_core::forecaster::{forecast_round, update_state, ForecasterParams, ForecasterState};
use forecast_core::geometry::PredictionGrid;
use forecast_core::metrics::conditional_bias;
use forecast_core::transcript::Transcript;

fn main() -> forecast_core::Result<()> {
    let horizon: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1024);
    let eps = 1.0 / (horizon as f64).sqrt();
    let grid = Arc::new(PredictionGrid::epsilon_net(2, eps, true)?);
    let family = Arc::new(intervals_1d(grid.clone())?);
    println!("T = {horizon}, grid {} points, {} interval events", grid.len(), family.len());

    let mut forecaster = ForecasterState::new(family.clone(), horizon, ForecasterParams::default(), 1)?;
    let mut adversary = AdversaryState::new(AdversaryKind::GreedyBias, grid.clone(), Some(family.clone()), 2)?;
    let mut transcript = Transcript::new(grid.clone(), horizon);
    let mut worst_gap: f64 = 0.0;
    for t in 1..=horizon {
        let y = adversary.next_outcome(t, &transcript.rounds)?;
        let round = forecast_round(&mut forecaster)?;
        worst_gap = worst_gap.max(round.diagnostics.gap);
        update_state(&mut forecaster, &round.forecast, &y)?;
        transcript.push(round.forecast, round.realized, y)?;
    }

    let bias = conditional_bias(&transcript, &family)?;
    println!("largest per-round bias over all intervals: {:.5}", bias.max_bias_inf_expected);
    println!("largest duality gap: {worst_gap:.2e} (tolerance {:.2e})", forecaster.gap_tol());

    // A two-action agent: act when the forecast is above 0.6.
    let u = UtilityFunction::new(0, vec![vec![0.0, 0.0], vec![1.0, -0.6]], true)?;
    let regret = expected_swap_regret(&transcript, &AgentModel::exact(u), None)?;
    println!("agent swap regret: {:.5} (best swap {:?})", regret.value, regret.best_swap);
    Ok(())
}
