//! Incremental LP/MILP builder. Variables are free by default with optional
//! bounds and integrality; rows may be `≥`, `≤`, or `=`. Everything lowers
//! to the canonical `min cᵀx, Ax ≥ b` simplex form; duals are mapped back
//! to the rows as added (nonnegative for `≥`/`≤` in their natural sense,
//! free for equalities).

use super::milp::solve_canonical_milp;
use super::simplex::{solve_canonical, CanonicalLp, LpStatus};
use crate::model::RowSense;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// One dual per added row (empty for MILP solves).
    pub row_duals: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LpBuilder {
    obj: Vec<f64>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
    integer: Vec<bool>,
    rows: Vec<(Vec<(usize, f64)>, RowSense, f64)>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.obj.len()
    }

    pub fn add_var(&mut self, obj: f64, lower: Option<f64>, upper: Option<f64>) -> usize {
        self.obj.push(obj);
        self.lower.push(lower);
        self.upper.push(upper);
        self.integer.push(false);
        self.obj.len() - 1
    }

    pub fn add_int_var(&mut self, obj: f64, lower: Option<f64>, upper: Option<f64>) -> usize {
        let v = self.add_var(obj, lower, upper);
        self.integer[v] = true;
        v
    }

    pub fn add_binary_var(&mut self, obj: f64) -> usize {
        self.add_int_var(obj, Some(0.0), Some(1.0))
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> usize {
        debug_assert!(terms.iter().all(|&(v, _)| v < self.obj.len()));
        self.rows.push((terms, sense, rhs));
        self.rows.len() - 1
    }

    pub fn set_obj(&mut self, var: usize, coef: f64) {
        self.obj[var] = coef;
    }

    fn lower_to_canonical(&self) -> (CanonicalLp, Vec<Vec<(usize, f64)>>) {
        let n = self.obj.len();
        let mut a = Vec::new();
        let mut b = Vec::new();
        // dual_map[user_row] = [(canonical_row, sign), ...]
        let mut dual_map: Vec<Vec<(usize, f64)>> = Vec::with_capacity(self.rows.len());
        for (terms, sense, rhs) in &self.rows {
            let mut dense = vec![0.0; n];
            for &(v, c) in terms {
                dense[v] += c;
            }
            match sense {
                RowSense::Ge => {
                    a.push(dense);
                    b.push(*rhs);
                    dual_map.push(vec![(a.len() - 1, 1.0)]);
                }
                RowSense::Le => {
                    a.push(dense.iter().map(|c| -c).collect());
                    b.push(-rhs);
                    dual_map.push(vec![(a.len() - 1, 1.0)]);
                }
                RowSense::Eq => {
                    let neg: Vec<f64> = dense.iter().map(|c| -c).collect();
                    a.push(dense);
                    b.push(*rhs);
                    a.push(neg);
                    b.push(-rhs);
                    dual_map.push(vec![(a.len() - 2, 1.0), (a.len() - 1, -1.0)]);
                }
            }
        }
        for i in 0..n {
            if let Some(l) = self.lower[i] {
                let mut row = vec![0.0; n];
                row[i] = 1.0;
                a.push(row);
                b.push(l);
            }
            if let Some(u) = self.upper[i] {
                let mut row = vec![0.0; n];
                row[i] = -1.0;
                a.push(row);
                b.push(-u);
            }
        }
        (CanonicalLp { cost: self.obj.clone(), a, b }, dual_map)
    }

    pub fn solve(&self) -> LpSolution {
        let (lp, dual_map) = self.lower_to_canonical();
        let out = solve_canonical(&lp, super::DEFAULT_LP_PIVOT_CAP);
        let row_duals = dual_map
            .iter()
            .map(|parts| parts.iter().map(|&(r, s)| s * out.dual[r]).collect::<Vec<_>>())
            .map(|v| v.iter().sum())
            .collect();
        LpSolution {
            status: out.status,
            x: out.x,
            row_duals,
            objective: out.objective,
        }
    }

    pub fn solve_milp(&self) -> LpSolution {
        self.solve_milp_capped(super::DEFAULT_MILP_NODE_CAP)
    }

    pub fn solve_milp_capped(&self, node_cap: usize) -> LpSolution {
        let (lp, _) = self.lower_to_canonical();
        let ints: Vec<usize> = self
            .integer
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| i)
            .collect();
        let out = solve_canonical_milp(&lp, &ints, node_cap);
        LpSolution {
            status: out.status,
            x: out.x,
            row_duals: vec![],
            objective: out.objective,
        }
    }
}
