//! Agents that best-respond to the nearest utility in a δ-cover, against a
//! forecaster that is unbiased on the cover's best-response events.
//!
//! `cargo run --release --example snapped_agents`

use forecast_core::harness::{run_experiment, ExperimentConfig};

fn main() -> forecast_core::Result<()> {
    let config = ExperimentConfig::from_json(
        r#"{
            "horizon": 2048,
            "dim": 1,
            "lifted": true,
            "epsilon": "auto",
            "family": { "kind": "br_cover", "k": 2, "delta": 0.25 },
            "adversary": { "kind": "iid_uniform_corners" },
            "agents": [
                { "id": 0, "mode": "snapped", "delta": 0.25, "vectors": "random", "actions": 2, "seed": 5 },
                { "id": 1, "mode": "snapped", "delta": 0.25, "vectors": "random", "actions": 2, "seed": 6 },
                { "id": 2, "mode": "exact", "vectors": "random", "actions": 2, "seed": 7 }
            ]
        }"#,
    )?;
    let out = run_experiment(&config)?;
    let r = &out.report;
    println!(
        "cover of {} utilities gives {} distinct best-response events",
        r.resolved.cover_size.unwrap_or(0),
        r.resolved.family_size
    );
    println!("largest per-round bias on those events: {:.5}", r.bias.max_bias_inf_expected);
    for a in &r.agents {
        println!("agent {} {:?}: swap regret {:.5}", a.id, a.mode, a.expected.value);
    }
    Ok(())
}
