//! Depth-first branch and bound over the canonical-form simplex.
//! Branching on the most-fractional integer variable; bounds are added as
//! extra `≥` rows on the child nodes.

use super::simplex::{solve_canonical, CanonicalLp, LpStatus};

pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct MilpOut {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub nodes: usize,
}

struct Node {
    /// Extra bound rows (coef on one variable, rhs) in `≥` form.
    bounds: Vec<(usize, f64, f64)>,
}

pub fn solve_canonical_milp(lp: &CanonicalLp, integer_vars: &[usize], node_cap: usize) -> MilpOut {
    let n = lp.cost.len();
    if integer_vars.is_empty() {
        let out = solve_canonical(lp, super::DEFAULT_LP_PIVOT_CAP);
        return MilpOut {
            status: out.status,
            x: out.x,
            objective: out.objective,
            nodes: 1,
        };
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut stack = vec![Node { bounds: vec![] }];
    let mut nodes = 0usize;
    let mut hit_cap = false;
    while let Some(node) = stack.pop() {
        if nodes >= node_cap {
            hit_cap = true;
            break;
        }
        nodes += 1;
        let mut sub = lp.clone();
        for &(var, coef, rhs) in &node.bounds {
            let mut row = vec![0.0; n];
            row[var] = coef;
            sub.a.push(row);
            sub.b.push(rhs);
        }
        let rel = solve_canonical(&sub, super::DEFAULT_LP_PIVOT_CAP);
        match rel.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                // An unbounded relaxation at the root means the MILP itself is
                // unbounded or ill-posed for branch and bound; report as such.
                return MilpOut {
                    status: LpStatus::Unbounded,
                    x: vec![0.0; n],
                    objective: f64::NEG_INFINITY,
                    nodes,
                };
            }
            LpStatus::IterationLimit => {
                hit_cap = true;
                break;
            }
            LpStatus::Optimal => {}
        }
        if let Some((incumbent, _)) = &best {
            if rel.objective >= incumbent - 1e-9 {
                continue;
            }
        }
        // Most-fractional branching variable.
        let mut branch: Option<(usize, f64)> = None;
        for &i in integer_vars {
            let frac = (rel.x[i] - rel.x[i].round()).abs();
            if frac > INT_TOL {
                let dist = (rel.x[i].fract().abs() - 0.5).abs();
                if branch.is_none() || dist < branch.unwrap().1 {
                    branch = Some((i, dist));
                }
            }
        }
        match branch {
            None => {
                let mut x = rel.x.clone();
                for &i in integer_vars {
                    x[i] = x[i].round();
                }
                let obj: f64 = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                if best.as_ref().is_none_or(|(b, _)| obj < b - 1e-12) {
                    best = Some((obj, x));
                }
            }
            Some((i, _)) => {
                let floor = rel.x[i].floor();
                // Down branch (x_i ≤ floor) explored first: push it last.
                let mut up = node.bounds.clone();
                up.push((i, 1.0, floor + 1.0));
                stack.push(Node { bounds: up });
                let mut down = node.bounds;
                down.push((i, -1.0, -floor));
                stack.push(Node { bounds: down });
            }
        }
    }
    match best {
        Some((obj, x)) => MilpOut {
            status: LpStatus::Optimal,
            x,
            objective: obj,
            nodes,
        },
        None => MilpOut {
            status: if hit_cap { LpStatus::IterationLimit } else { LpStatus::Infeasible },
            x: vec![0.0; n],
            objective: 0.0,
            nodes,
        },
    }
}
