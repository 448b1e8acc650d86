//! Loads a JSON config, runs it, and writes the report files.
//!
//! `cargo run --release --example run_config -- configs/theorem_1d.json out/example`

use std::path::PathBuf;

use forecast_core::harness::{emit_report, run_experiment, ExperimentConfig, Format};

fn main() -> forecast_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "configs/smoke_2d.json".into()));
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "out/example".into()));
    let config = ExperimentConfig::from_file(&path)?;
    let out = run_experiment(&config)?;
    emit_report(&out, &dir, &[Format::Json, Format::Csv], false)?;
    let r = &out.report;
    println!("{}: {} rounds, transcript {}", path.display(), r.rounds, r.transcript_hash);
    println!("max bias {:.5}, max swap regret {:.5}", r.bias.max_bias_inf_expected, r.max_expected_regret());
    for w in &r.resolved.warnings {
        println!("warning: {w}");
    }
    println!("wrote {}", dir.display());
    Ok(())
}
