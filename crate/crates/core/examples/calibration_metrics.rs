//! Metrics on hand-built transcripts: calibration error, conditional bias on
//! intervals, and swap regret under a chosen modification rule.
//!
//! `cargo run --example calibration_metrics`

use std::sync::Arc;

use forecast_core::agents::{expected_swap_regret, swap_regret_of, AgentModel, UtilityFunction};
use forecast_core::events::intervals_1d;
use forecast_core::geometry::{OutcomePoint, PredictionGrid};
use forecast_core::metrics::{conditional_bias, l1_calibration, l2_calibration};
use forecast_core::transcript::Transcript;

fn main() -> forecast_core::Result<()> {
    let grid = Arc::new(PredictionGrid::epsilon_net(2, 0.25, true)?);
    let at = |y: f64| grid.nearest(&OutcomePoint::lifted(vec![y]));

    // Always predicting 0.5 when the outcome is always 1.
    let tr = Transcript::from_point_forecasts(grid.clone(), &[at(0.5)?; 100], &vec![OutcomePoint::lifted(vec![1.0]); 100])?;
    println!("constant 0.5 vs outcome 1: l1 {} l2 {}", l1_calibration(&tr)?, l2_calibration(&tr)?);

    // Predictions that alternate 0.25 / 0.75 over outcomes 0 / 1.
    let preds: Vec<usize> = (0..100).map(|t| at(if t % 2 == 0 { 0.25 } else { 0.75 })).collect::<Result<_, _>>()?;
    let outs: Vec<OutcomePoint> = (0..100).map(|t| OutcomePoint::lifted(vec![(t % 2) as f64])).collect();
    let tr = Transcript::from_point_forecasts(grid.clone(), &preds, &outs)?;
    println!("alternating: l1 {} l2 {}", l1_calibration(&tr)?, l2_calibration(&tr)?);

    let bias = conditional_bias(&tr, &intervals_1d(grid.clone())?)?;
    for e in bias.events.iter().filter(|e| e.n_t > 0.0).take(6) {
        println!("  {:<22} n_T {:>5} conditional bias {:+.3}", e.label, e.n_t, e.conditional_expected);
    }

    // Act (payoff y − 0.5) or abstain (payoff 0).
    let u = UtilityFunction::new(0, vec![vec![0.0, 0.0], vec![1.0, -0.5]], true)?;
    let agent = AgentModel::exact(u);
    let best = expected_swap_regret(&tr, &agent, None)?;
    println!(
        "swap regret {:.3} via {:?}; identity {:.3}; always-swap {:.3}",
        best.value,
        best.best_swap,
        swap_regret_of(&tr, &agent, None, &[0, 1])?,
        swap_regret_of(&tr, &agent, None, &[1, 0])?
    );
    Ok(())
}
