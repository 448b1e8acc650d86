//! The per-round game on its own: `min_p p·A + Σ_i max(0, p·B_i)` over the
//! simplex, solved exactly and by no-regret dynamics, with duality gaps.
//!
//! `cargo run --release --example minmax_solver`

use forecast_core::forecaster::{MinmaxProblem, SolverKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> forecast_core::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 40;
    let grid: Vec<f64> = (0..n).map(|j| j as f64 / (n - 1) as f64).collect();
    // Net expert weight `s` on the event covering the grid; the game then
    // has A[j] = s·y_j and B[j] = −s, the shape of a single forecasting round.
    let s: f64 = rng.random_range(-1.0..1.0);
    let noise: Vec<f64> = (0..n).map(|_| rng.random_range(-0.01..0.01)).collect();
    let problem = MinmaxProblem {
        a: grid.iter().zip(&noise).map(|(y, e)| s * y + e).collect(),
        b: vec![vec![-s; n]],
    };
    for (kind, tol) in [(SolverKind::Simplex, 1e-9), (SolverKind::Dynamics, 1e-2), (SolverKind::Dynamics, 1e-3)] {
        let sol = problem.solve(kind, tol)?;
        let support = sol.p.iter().filter(|&&w| w > 1e-12).count();
        println!(
            "{kind:?} tol {tol:.0e}: value {:+.6}, gap {:.2e}, {} iterations, support {support}",
            sol.value, sol.gap, sol.iterations
        );
    }
    Ok(())
}
