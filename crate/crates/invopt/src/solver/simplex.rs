//! Two-phase dense primal simplex for LPs in the canonical form
//! `min cᵀx  s.t.  Ax ≥ b` with free variables.
//!
//! Free variables are split into positive and negative parts and surplus
//! variables turn the rows into equalities. Bland's rule is used throughout so
//! degenerate instances terminate. The tableau is rebuilt from the basis by
//! dense elimination every 50 pivots to keep drift in check, and the final
//! basic solution is refined by solving the basis system directly.

use crate::linalg;

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct CanonicalLp {
    /// Objective coefficients (minimization).
    pub cost: Vec<f64>,
    /// Row-major constraint matrix for `Ax ≥ b`.
    pub a: Vec<Vec<f64>>,
    /// Right-hand side.
    pub b: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimplexOut {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Dual multipliers of the `≥` rows (nonnegative at optimality).
    pub dual: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    /// Standard-form columns: [A | -A | -σ·I | I(artificials)], rows scaled so rhs ≥ 0.
    cols: usize,
    m: usize,
    art_start: usize,
    t: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    sigma: Vec<f64>,
    std_cols: Vec<Vec<f64>>, // original standard-form matrix, column-major
}

impl Tableau {
    fn new(lp: &CanonicalLp) -> Self {
        let m = lp.b.len();
        let n = lp.cost.len();
        let art_start = 2 * n + m;
        let cols = art_start + m;
        let sigma: Vec<f64> = lp.b.iter().map(|&bi| if bi < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut t = vec![vec![0.0; cols]; m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            for j in 0..n {
                t[i][j] = sigma[i] * lp.a[i][j];
                t[i][n + j] = -sigma[i] * lp.a[i][j];
            }
            t[i][2 * n + i] = -sigma[i];
            t[i][art_start + i] = 1.0;
            rhs[i] = sigma[i] * lp.b[i];
        }
        let mut std_cols = vec![vec![0.0; m]; cols];
        for i in 0..m {
            for j in 0..cols {
                std_cols[j][i] = t[i][j];
            }
        }
        let basis: Vec<usize> = (0..m).map(|i| art_start + i).collect();
        Tableau { cols, m, art_start, t, rhs, basis, sigma, std_cols }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= piv;
        }
        self.rhs[row] /= piv;
        for r in 0..self.m {
            if r != row {
                let f = self.t[r][col];
                if f.abs() > 1e-13 {
                    for j in 0..self.cols {
                        let v = self.t[row][j];
                        self.t[r][j] -= f * v;
                    }
                    let v = self.rhs[row];
                    self.rhs[r] -= f * v;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Recompute the tableau from the current basis by elimination on the
    /// original standard-form columns.
    fn rebuild(&mut self, b_orig: &[f64]) -> bool {
        let m = self.m;
        // Assemble [B | A_std | rhs] and eliminate B to the identity.
        let mut aug = vec![vec![0.0; m + self.cols + 1]; m];
        for i in 0..m {
            for (k, &bc) in self.basis.iter().enumerate() {
                aug[i][k] = self.std_cols[bc][i];
            }
            for j in 0..self.cols {
                aug[i][m + j] = self.std_cols[j][i];
            }
            aug[i][m + self.cols] = self.sigma[i] * b_orig[i];
        }
        for col in 0..m {
            let piv = (col..m).max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()));
            let piv = match piv {
                Some(p) if aug[p][col].abs() > 1e-11 => p,
                _ => return false,
            };
            aug.swap(col, piv);
            let d = aug[col][col];
            for v in aug[col].iter_mut() {
                *v /= d;
            }
            for r in 0..m {
                if r != col {
                    let f = aug[r][col];
                    if f.abs() > 1e-13 {
                        for k in 0..(m + self.cols + 1) {
                            let v = aug[col][k];
                            aug[r][k] -= f * v;
                        }
                    }
                }
            }
        }
        for i in 0..m {
            for j in 0..self.cols {
                self.t[i][j] = aug[i][m + j];
            }
            self.rhs[i] = aug[i][m + self.cols];
        }
        true
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut z = cost.to_vec();
        for (i, &bc) in self.basis.iter().enumerate() {
            let cb = cost[bc];
            if cb != 0.0 {
                for j in 0..self.cols {
                    z[j] -= cb * self.t[i][j];
                }
            }
        }
        z
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis.iter().zip(&self.rhs).map(|(&bc, &v)| cost[bc] * v).sum()
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

fn run_phase(
    tab: &mut Tableau,
    cost: &[f64],
    allow_artificial: bool,
    b_orig: &[f64],
    pivots: &mut usize,
    max_pivots: usize,
) -> PhaseEnd {
    loop {
        if *pivots >= max_pivots {
            return PhaseEnd::IterationLimit;
        }
        let z = tab.reduced_costs(cost);
        // Bland: smallest eligible entering index.
        let mut entering = None;
        for j in 0..tab.cols {
            if !allow_artificial && j >= tab.art_start {
                continue;
            }
            if z[j] < -PIVOT_TOL {
                entering = Some(j);
                break;
            }
        }
        let col = match entering {
            Some(c) => c,
            None => return PhaseEnd::Optimal,
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..tab.m {
            if tab.t[r][col] > PIVOT_TOL {
                let ratio = tab.rhs[r] / tab.t[r][col];
                let better = match leave {
                    None => true,
                    Some((lr, lv)) => {
                        ratio < lv - 1e-12
                            || (ratio < lv + 1e-12 && tab.basis[r] < tab.basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let (row, _) = match leave {
            Some(x) => x,
            None => return PhaseEnd::Unbounded,
        };
        tab.pivot(row, col);
        *pivots += 1;
        if *pivots % 50 == 0 {
            tab.rebuild(b_orig);
        }
    }
}

pub fn solve_canonical(lp: &CanonicalLp, max_pivots: usize) -> SimplexOut {
    let m = lp.b.len();
    let n = lp.cost.len();
    for row in &lp.a {
        assert_eq!(row.len(), n, "row length mismatch");
    }
    let fail = |status| SimplexOut {
        status,
        x: vec![0.0; n],
        dual: vec![0.0; m],
        objective: 0.0,
        pivots: 0,
    };
    if m == 0 {
        // Unconstrained: optimal iff the objective is identically zero.
        if lp.cost.iter().all(|&c| c == 0.0) {
            return SimplexOut {
                status: LpStatus::Optimal,
                x: vec![0.0; n],
                dual: vec![],
                objective: 0.0,
                pivots: 0,
            };
        }
        return fail(LpStatus::Unbounded);
    }

    let mut tab = Tableau::new(lp);
    let mut pivots = 0usize;

    // Phase 1: minimize the sum of artificials.
    let mut c1 = vec![0.0; tab.cols];
    for j in tab.art_start..tab.cols {
        c1[j] = 1.0;
    }
    match run_phase(&mut tab, &c1, true, &lp.b, &mut pivots, max_pivots) {
        PhaseEnd::Optimal => {}
        PhaseEnd::IterationLimit => return fail(LpStatus::IterationLimit),
        PhaseEnd::Unbounded => unreachable!("phase-1 objective is bounded below"),
    }
    if tab.objective(&c1) > FEAS_TOL {
        return fail(LpStatus::Infeasible);
    }
    // Drive artificials out of the basis where possible.
    for r in 0..m {
        if tab.basis[r] >= tab.art_start {
            if let Some(j) = (0..tab.art_start).find(|&j| tab.t[r][j].abs() > 1e-7) {
                tab.pivot(r, j);
                pivots += 1;
            }
        }
    }

    // Phase 2.
    let mut c2 = vec![0.0; tab.cols];
    for j in 0..n {
        c2[j] = lp.cost[j];
        c2[n + j] = -lp.cost[j];
    }
    let status = match run_phase(&mut tab, &c2, false, &lp.b, &mut pivots, max_pivots) {
        PhaseEnd::Optimal => LpStatus::Optimal,
        PhaseEnd::Unbounded => return fail(LpStatus::Unbounded),
        PhaseEnd::IterationLimit => return fail(LpStatus::IterationLimit),
    };

    // Refine the basic solution against the original data.
    let basis_mat: Vec<Vec<f64>> = (0..m)
        .map(|i| tab.basis.iter().map(|&bc| tab.std_cols[bc][i]).collect())
        .collect();
    let scaled_b: Vec<f64> = (0..m).map(|i| tab.sigma[i] * lp.b[i]).collect();
    let xb = linalg::solve_square(&basis_mat, &scaled_b).unwrap_or_else(|| tab.rhs.clone());
    let mut x = vec![0.0; n];
    for (k, &bc) in tab.basis.iter().enumerate() {
        if bc < n {
            x[bc] += xb[k];
        } else if bc < 2 * n {
            x[bc - n] -= xb[k];
        }
    }
    // Duals: solve Bᵀy = c_B, then unscale row multipliers.
    let bt: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|k| basis_mat[k][i]).collect())
        .collect();
    let cb: Vec<f64> = tab.basis.iter().map(|&bc| c2[bc]).collect();
    let y = linalg::solve_square(&bt, &cb).unwrap_or_else(|| {
        let z = tab.reduced_costs(&c2);
        (0..m).map(|i| -z[tab.art_start + i]).collect()
    });
    let dual: Vec<f64> = (0..m).map(|i| (tab.sigma[i] * y[i]).max(0.0)).collect();
    let objective = linalg::dot(&lp.cost, &x);
    SimplexOut { status, x, dual, objective, pivots }
}

/// Residuals of a primal/dual pair for `min cᵀx, Ax ≥ b`.
pub fn residuals(lp: &CanonicalLp, x: &[f64], dual: &[f64]) -> (f64, f64, f64) {
    let ax = linalg::mat_vec(&lp.a, x);
    let primal = ax
        .iter()
        .zip(&lp.b)
        .fold(0.0f64, |acc, (&axi, &bi)| acc.max(bi - axi));
    let aty = linalg::vec_mat(dual, &lp.a);
    let mut dualres = dual.iter().fold(0.0f64, |acc, &l| acc.max(-l));
    dualres = dualres.max(linalg::norm_inf(&linalg::sub(&aty, &lp.cost)));
    let comp: f64 = dual
        .iter()
        .zip(ax.iter().zip(&lp.b))
        .map(|(&l, (&axi, &bi))| (l * (axi - bi)).abs())
        .fold(0.0f64, f64::max);
    (primal.max(0.0), dualres, comp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_lp() -> CanonicalLp {
        // min x1 + x2 s.t. x1 + x2 >= 1, x1 >= 0, x2 >= 0
        CanonicalLp {
            cost: vec![1.0, 1.0],
            a: vec![vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            b: vec![1.0, 0.0, 0.0],
        }
    }

    #[test]
    fn solves_simple_lp_with_duals() {
        let out = solve_canonical(&simple_lp(), 1000);
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective - 1.0).abs() < 1e-9);
        // Strong duality: bᵀλ = 1.
        assert!((out.dual[0] - 1.0).abs() < 1e-9);
        assert!(out.dual[1].abs() < 1e-9 && out.dual[2].abs() < 1e-9);
    }

    #[test]
    fn detects_unbounded() {
        let lp = CanonicalLp {
            cost: vec![-1.0, 0.0],
            a: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            b: vec![0.0, 0.0],
        };
        assert_eq!(solve_canonical(&lp, 1000).status, LpStatus::Unbounded);
    }

    #[test]
    fn detects_infeasible() {
        let lp = CanonicalLp {
            cost: vec![0.0],
            a: vec![vec![1.0], vec![-1.0]],
            b: vec![2.0, -1.0],
        };
        assert_eq!(solve_canonical(&lp, 1000).status, LpStatus::Infeasible);
    }

    #[test]
    fn free_variable_optimum() {
        // min x s.t. x >= -3 (free variable reaching a negative vertex).
        let lp = CanonicalLp {
            cost: vec![1.0],
            a: vec![vec![1.0]],
            b: vec![-3.0],
        };
        let out = solve_canonical(&lp, 1000);
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.x[0] + 3.0).abs() < 1e-9);
        assert!((out.objective + 3.0).abs() < 1e-9);
        assert!((out.dual[0] - 1.0).abs() < 1e-9);
    }
}
