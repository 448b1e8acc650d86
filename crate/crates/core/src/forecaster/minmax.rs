//! The per-round zero-sum game, after eliminating the outcome player.
//!
//! For fixed expert weights the adversary's best outcome decomposes per
//! coordinate, leaving the convex piecewise-linear objective
//! `f(p) = p·A + Σ_i max(0, p·B_i)` over the simplex on grid points. Writing
//! `max(0, x) = max_{λ∈[0,1]} λx` gives the bilinear saddle problem whose dual
//! value `g(λ) = min_j (A_j + Σ_i λ_i B_ij)` lower-bounds `f`. Every solver here
//! returns a primal `p`, a dual `λ`, and the certified gap `f(p) − g(λ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Exact primal simplex on the LP form.
    #[default]
    Simplex,
    /// Exponential weights for `p` against best-responding `λ`, averaged.
    Dynamics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinmaxProblem {
    /// `A[j]` for each grid point `j`.
    pub a: Vec<f64>,
    /// `B[i][j]` for each free coordinate `i`.
    pub b: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinmaxSolution {
    /// Dense weights over grid points.
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `f(p)`.
    pub value: f64,
    /// `f(p) − g(λ)`, never negative.
    pub gap: f64,
    pub iterations: usize,
}

impl MinmaxProblem {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn coords(&self) -> usize {
        self.b.len()
    }

    fn dot(row: &[f64], p: &[f64]) -> f64 {
        row.iter().zip(p).map(|(x, y)| x * y).sum()
    }

    pub fn objective(&self, p: &[f64]) -> f64 {
        Self::dot(&self.a, p) + self.b.iter().map(|bi| Self::dot(bi, p).max(0.0)).sum::<f64>()
    }

    pub fn dual_bound(&self, lambda: &[f64]) -> f64 {
        (0..self.len())
            .map(|j| self.a[j] + self.b.iter().zip(lambda).map(|(bi, l)| l * bi[j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    fn certify(&self, p: Vec<f64>, lambda: Vec<f64>, iterations: usize) -> MinmaxSolution {
        let value = self.objective(&p);
        let gap = (value - self.dual_bound(&lambda)).max(0.0);
        MinmaxSolution { p, lambda, value, gap, iterations }
    }

    pub fn solve(&self, kind: SolverKind, gap_tol: f64) -> Result<MinmaxSolution> {
        self.solve_with_limit(kind, gap_tol, None)
    }

    /// `max_iter` bounds the dynamics solver, which otherwise runs up to
    /// `10·⌈1/gap_tol²⌉` steps. The simplex ignores it.
    pub fn solve_with_limit(&self, kind: SolverKind, gap_tol: f64, max_iter: Option<usize>) -> Result<MinmaxSolution> {
        if self.is_empty() {
            return Err(Error::invalid("minmax over an empty grid"));
        }
        if !(gap_tol > 0.0) {
            return Err(Error::invalid(format!("gap tolerance must be positive, got {gap_tol}")));
        }
        match kind {
            SolverKind::Simplex => self.simplex(),
            SolverKind::Dynamics => {
                let default = (10.0 * (1.0 / (gap_tol * gap_tol)).ceil()).min(usize::MAX as f64) as usize;
                Ok(self.dynamics(gap_tol, max_iter.unwrap_or(default)))
            }
        }
    }

    /// Primal simplex with Bland's rule on
    /// `min p·A + Σ s_i` s.t. `Σ p = 1`, `p·B_i − s_i + w_i = 0`, all vars ≥ 0.
    /// Columns: `p_0..p_{n−1}`, then `s_i`, then `w_i`.
    pub fn simplex(&self) -> Result<MinmaxSolution> {
        const TOL: f64 = 1e-12;
        let n = self.len();
        let d = self.coords();
        let m = d + 1;
        let total = n + 2 * d;
        let column = |j: usize| -> Vec<f64> {
            let mut c = vec![0.0; m];
            if j < n {
                c[0] = 1.0;
                for i in 0..d {
                    c[1 + i] = self.b[i][j];
                }
            } else if j < n + d {
                c[1 + j - n] = -1.0;
            } else {
                c[1 + j - n - d] = 1.0;
            }
            c
        };
        let cost = |j: usize| if j < n { self.a[j] } else if j < n + d { 1.0 } else { 0.0 };

        let start = (0..n).min_by(|&x, &y| self.a[x].total_cmp(&self.a[y])).unwrap();
        let mut basis = vec![start];
        for i in 0..d {
            basis.push(if self.b[i][start] >= 0.0 { n + i } else { n + d + i });
        }

        let max_pivots = 50 * (total + m) + 1000;
        let mut iterations = 0;
        loop {
            let binv = invert(&basis.iter().map(|&j| column(j)).collect::<Vec<_>>())
                .ok_or(Error::SolverFailure { gap: f64::NAN, tol: TOL, iterations })?;
            // x_B = B⁻¹ e_0, y = c_B B⁻¹
            let x: Vec<f64> = (0..m).map(|r| binv[r][0]).collect();
            let y: Vec<f64> = (0..m).map(|c| (0..m).map(|r| cost(basis[r]) * binv[r][c]).sum()).collect();

            let reduced = |j: usize| -> f64 {
                if j < n {
                    self.a[j] - y[0] - (0..d).map(|i| y[1 + i] * self.b[i][j]).sum::<f64>()
                } else if j < n + d {
                    1.0 + y[1 + j - n]
                } else {
                    -y[1 + j - n - d]
                }
            };
            let entering = (0..total).find(|&j| reduced(j) < -TOL && !basis.contains(&j));
            let Some(j) = entering else {
                let mut p = vec![0.0; n];
                for (r, &bj) in basis.iter().enumerate() {
                    if bj < n {
                        p[bj] = x[r].max(0.0);
                    }
                }
                let z: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= z);
                let lambda = (0..d).map(|i| (-y[1 + i]).clamp(0.0, 1.0)).collect();
                return Ok(self.certify(p, lambda, iterations));
            };
            if iterations >= max_pivots {
                return Err(Error::SolverFailure { gap: f64::NAN, tol: TOL, iterations });
            }
            let col = column(j);
            let dir: Vec<f64> = (0..m).map(|r| (0..m).map(|c| binv[r][c] * col[c]).sum()).collect();
            let mut leave: Option<usize> = None;
            for r in 0..m {
                if dir[r] > TOL {
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            let (ra, rb) = (x[r] / dir[r], x[l] / dir[l]);
                            ra < rb - TOL || (ra <= rb + TOL && basis[r] < basis[l])
                        }
                    };
                    if better {
                        leave = Some(r);
                    }
                }
            }
            let r = leave.ok_or(Error::SolverFailure { gap: f64::INFINITY, tol: TOL, iterations })?;
            basis[r] = j;
            iterations += 1;
        }
    }

    /// Averaged no-regret dynamics; stops once the averaged pair certifies
    /// `gap_tol` or after `max_iter` steps.
    pub fn dynamics(&self, gap_tol: f64, max_iter: usize) -> MinmaxSolution {
        let n = self.len();
        let d = self.coords();
        let range = 1.0 + d as f64;
        let mut cum_loss = vec![0.0; n];
        let mut p_sum = vec![0.0; n];
        let mut l_sum = vec![0.0; d];
        let mut p = vec![1.0 / n as f64; n];
        let mut best: Option<MinmaxSolution> = None;
        for t in 1..=max_iter.max(1) {
            let lambda: Vec<f64> =
                self.b.iter().map(|bi| if Self::dot(bi, &p) > 0.0 { 1.0 } else { 0.0 }).collect();
            for j in 0..n {
                cum_loss[j] += self.a[j] + self.b.iter().zip(&lambda).map(|(bi, l)| l * bi[j]).sum::<f64>();
                p_sum[j] += p[j];
            }
            for i in 0..d {
                l_sum[i] += lambda[i];
            }
            if t % 16 == 0 || t == max_iter {
                let pa: Vec<f64> = p_sum.iter().map(|v| v / t as f64).collect();
                let la: Vec<f64> = l_sum.iter().map(|v| v / t as f64).collect();
                let sol = self.certify(pa, la, t);
                let done = sol.gap <= gap_tol;
                if best.as_ref().is_none_or(|b| sol.gap < b.gap) {
                    best = Some(sol);
                }
                if done {
                    break;
                }
            }
            let eta = (8.0 * (n as f64).ln().max(1.0) / (t as f64)).sqrt() / range;
            let lo = cum_loss.iter().copied().fold(f64::INFINITY, f64::min);
            for j in 0..n {
                p[j] = (-eta * (cum_loss[j] - lo)).exp();
            }
            let z: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= z);
        }
        best.unwrap_or_else(|| self.certify(p, vec![0.0; d], 0))
    }
}

/// Gauss–Jordan inverse of a small square matrix given by columns.
fn invert(cols: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let m = cols.len();
    let mut a: Vec<Vec<f64>> = (0..m).map(|r| (0..m).map(|c| cols[c][r]).collect()).collect();
    let mut inv: Vec<Vec<f64>> = (0..m).map(|r| (0..m).map(|c| f64::from(u8::from(r == c))).collect()).collect();
    for c in 0..m {
        let piv = (c..m).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[piv][c].abs() < 1e-14 {
            return None;
        }
        a.swap(c, piv);
        inv.swap(c, piv);
        let s = a[c][c];
        for k in 0..m {
            a[c][k] /= s;
            inv[c][k] /= s;
        }
        for r in 0..m {
            if r != c && a[r][c] != 0.0 {
                let f = a[r][c];
                for k in 0..m {
                    a[r][k] -= f * a[c][k];
                    inv[r][k] -= f * inv[c][k];
                }
            }
        }
    }
    Some(inv)
}
