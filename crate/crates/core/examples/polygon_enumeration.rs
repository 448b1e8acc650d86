//! Counts convex-closed subsets of m×m grids and checks small grids against
//! the brute-force subset oracle. Grids up to 6×6 are materialized as event
//! families; larger ones are only counted.
//!
//! `cargo run --release --example polygon_enumeration -- 8`

use std::sync::Arc;
use std::time::Instant;

use forecast_core::events::{
    convex_polygon_events_2d, count_convex_closed_sets_2d, polygon_subset_oracle, DEFAULT_POLYGON_CAP,
    ORACLE_MAX_POINTS,
};
use forecast_core::geometry::PredictionGrid;

fn main() -> forecast_core::Result<()> {
    let max_m: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    println!("{:>3} {:>8} {:>12} {:>9}", "m", "points", "sets", "seconds");
    for m in 1..=max_m {
        let axis: Vec<f64> = if m == 1 { vec![0.5] } else { (0..m).map(|i| i as f64 / (m - 1) as f64).collect() };
        let grid = Arc::new(PredictionGrid::from_axis(2, axis, false)?);
        let start = Instant::now();
        let count = if m <= 6 {
            let family = convex_polygon_events_2d(grid.clone(), DEFAULT_POLYGON_CAP)?;
            family.len() as u64
        } else {
            count_convex_closed_sets_2d(&grid)?
        };
        let secs = start.elapsed().as_secs_f64();
        print!("{m:>3} {:>8} {count:>12} {secs:>9.3}", grid.len());
        if grid.len() <= ORACLE_MAX_POINTS {
            print!("  oracle {}", polygon_subset_oracle(&grid)?);
        }
        println!();
    }
    Ok(())
}
