//! Conditional gradient (Frank–Wolfe) for smooth convex objectives over a
//! bounded polyhedron, using only the embedded LP oracle. Exact line search
//! for quadratics, backtracking otherwise.

use super::simplex::{solve_canonical, CanonicalLp, LpStatus};
use super::{SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ConvexForwardModel, ObjectiveSpec};

pub fn solve_fw(
    model: &ConvexForwardModel,
    theta: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    let n = model.num_vars();
    let region = |cost: Vec<f64>| CanonicalLp {
        cost,
        a: model.a.clone(),
        b: model.b.clone(),
    };
    // Feasible starting vertex.
    let start = solve_canonical(&region(vec![0.0; n]), super::DEFAULT_LP_PIVOT_CAP);
    match start.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Ok(SolveReport {
                primal: vec![0.0; n],
                dual: vec![],
                objective: 0.0,
                status: SolveStatus::Infeasible,
                residuals: (f64::NAN, f64::NAN, f64::NAN),
            })
        }
        _ => return Err(Error::Solver("could not find a starting vertex".into())),
    }
    let mut x = start.x;
    let mut gap = f64::INFINITY;
    let mut status = SolveStatus::IterationLimit;
    for _ in 0..max_iter {
        let g = model.objective.grad(&x, theta);
        let lin = solve_canonical(&region(g.clone()), super::DEFAULT_LP_PIVOT_CAP);
        match lin.status {
            LpStatus::Optimal => {}
            LpStatus::Unbounded => return Err(Error::ForwardUnbounded),
            _ => return Err(Error::Solver("linear oracle failed".into())),
        }
        let s = lin.x;
        let d = linalg::sub(&s, &x);
        gap = -linalg::dot(&g, &d);
        if gap <= tol {
            status = SolveStatus::Optimal;
            break;
        }
        let t = match &model.objective {
            ObjectiveSpec::Quadratic { phi, .. } => {
                let dpd = linalg::dot(&d, &linalg::mat_vec(phi, &d));
                if dpd <= 1e-14 {
                    1.0
                } else {
                    (gap / dpd).clamp(0.0, 1.0)
                }
            }
            _ => {
                // Backtracking with an Armijo condition on the FW direction.
                let f0 = model.objective.eval(&x, theta);
                let slope = linalg::dot(&g, &d);
                let mut t = 1.0;
                while t > 1e-12 {
                    let mut xt = x.clone();
                    linalg::axpy(&mut xt, t, &d);
                    if model.objective.eval(&xt, theta) <= f0 + 0.3 * t * slope {
                        break;
                    }
                    t *= 0.5;
                }
                t
            }
        };
        linalg::axpy(&mut x, t, &d);
    }
    let obj = model.objective.eval(&x, theta);
    let feas = model.feasibility_violation(&x);
    Ok(SolveReport {
        primal: x,
        dual: vec![],
        objective: obj,
        status,
        residuals: (feas.max(0.0), gap.max(0.0), 0.0),
    })
}
