//! Two-dimensional outcomes with every convex-closed grid set as an event,
//! run through the harness from a JSON config.
//!
//! `cargo run --release --example convex_forecasting_2d`

use forecast_core::harness::{run_experiment, ExperimentConfig};

fn main() -> forecast_core::Result<()> {
    let config = ExperimentConfig::from_json(
        r#"{
            "horizon": 256,
            "dim": 2,
            "lifted": true,
            "epsilon": 0.25,
            "family": { "kind": "polygons" },
            "adversary": { "kind": "iid_uniform_corners" },
            "agents": [
                { "id": 0, "mode": "exact", "vectors": "random", "actions": 3, "seed": 1 },
                { "id": 1, "mode": "exact", "vectors": "random", "actions": 4, "seed": 2 }
            ],
            "seeds": { "master": 9 },
            "strict": true
        }"#,
    )?;
    let out = run_experiment(&config)?;
    let r = &out.report;
    println!(
        "{}x{} grid, {} convex-closed events, {:.1}s",
        r.resolved.epsilon.recip() as usize + 1,
        r.resolved.epsilon.recip() as usize + 1,
        r.resolved.family_size,
        out.timing.total_secs
    );
    println!("largest per-round bias: {:.5}", r.bias.max_bias_inf_expected);
    for a in &r.agents {
        println!("agent {} ({} actions): swap regret {:.5}", a.id, a.actions, a.expected.value);
    }
    Ok(())
}
