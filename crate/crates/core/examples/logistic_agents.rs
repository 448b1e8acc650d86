//! Logistic-response agents and the bucket events that make a forecaster
//! useful to them. Prints the weighted-bias check for every cover utility.
//!
//! `cargo run --release --example logistic_agents`

use forecast_core::harness::{run_experiment, ExperimentConfig};

fn main() -> forecast_core::Result<()> {
    let config = ExperimentConfig::from_json(
        r#"{
            "horizon": 1024,
            "dim": 1,
            "lifted": true,
            "epsilon": "auto",
            "family": { "kind": "logistic_cover", "k": 2, "delta": 0.5, "eta": 16.0, "tau": 0.25 },
            "adversary": { "kind": "iid_uniform_corners" },
            "agents": [
                { "id": 0, "mode": "logistic", "eta": 16.0, "vectors": "random", "actions": 2, "seed": 1, "lattice": 0.5 },
                { "id": 1, "mode": "logistic", "eta": 16.0, "vectors": "random", "actions": 2, "seed": 2 }
            ]
        }"#,
    )?;
    let out = run_experiment(&config)?;
    let r = &out.report;
    println!("{} bucket events over a cover of {}", r.resolved.family_size, r.resolved.cover_size.unwrap_or(0));
    let worst = r.weighted_bucket.iter().max_by(|a, b| (a.inf / a.bound).total_cmp(&(b.inf / b.bound)));
    let holding = r.weighted_bucket.iter().filter(|w| w.holds()).count();
    println!("weighted bias within its bucket bound for {holding}/{} (utility, action) pairs", r.weighted_bucket.len());
    if let Some(w) = worst {
        println!("tightest: utility {} action {}: {:.5} <= {:.5}", w.utility, w.action, w.inf, w.bound);
    }
    for a in &r.agents {
        println!(
            "agent {}: distance to cover {:.3}, swap regret {:.5}",
            a.id,
            a.cover_distance.unwrap_or(f64::NAN),
            a.expected.value
        );
    }
    Ok(())
}
