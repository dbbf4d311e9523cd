//! Embedded solver stack: dense simplex LP with dual extraction,
//! branch-and-bound MILP, and conditional gradient for smooth convex
//! objectives over polyhedra.

pub mod fw;
pub mod lp;
pub mod milp;
pub mod simplex;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{canonicalize, ConvexForwardModel, LinearForwardModel, ObjectiveSpec};

pub use lp::LpBuilder;
pub use simplex::LpStatus;

pub const DEFAULT_LP_PIVOT_CAP: usize = 200_000;
pub const DEFAULT_MILP_NODE_CAP: usize = 100_000;
pub const DEFAULT_FW_TOL: f64 = 1e-7;
pub const DEFAULT_FW_MAX_ITER: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl From<LpStatus> for SolveStatus {
    fn from(s: LpStatus) -> Self {
        match s {
            LpStatus::Optimal => SolveStatus::Optimal,
            LpStatus::Infeasible => SolveStatus::Infeasible,
            LpStatus::Unbounded => SolveStatus::Unbounded,
            LpStatus::IterationLimit => SolveStatus::IterationLimit,
        }
    }
}

/// Primal/dual solution with residuals
/// (primal feasibility, dual feasibility, complementarity gap).
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub residuals: (f64, f64, f64),
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solve a continuous linear forward model. The model is canonicalized
/// first; duals refer to the canonical `≥` rows.
pub fn solve_lp(model: &LinearForwardModel) -> Result<SolveReport> {
    let c = canonicalize(model)?;
    let lp = simplex::CanonicalLp {
        cost: c.cost.clone(),
        a: c.a.clone(),
        b: c.b.clone(),
    };
    let out = simplex::solve_canonical(&lp, DEFAULT_LP_PIVOT_CAP);
    let residuals = if out.status == LpStatus::Optimal {
        simplex::residuals(&lp, &out.x, &out.dual)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let sign = if model.sense == crate::model::Sense::Max { -1.0 } else { 1.0 };
    Ok(SolveReport {
        primal: out.x,
        dual: out.dual,
        objective: sign * out.objective,
        status: out.status.into(),
        residuals,
    })
}

/// Solve a mixed-integer linear forward model by branch and bound.
pub fn solve_milp(model: &LinearForwardModel) -> Result<SolveReport> {
    let c = canonicalize(model)?;
    let lp = simplex::CanonicalLp {
        cost: c.cost.clone(),
        a: c.a.clone(),
        b: c.b.clone(),
    };
    let ints: Vec<usize> = c
        .integrality
        .iter()
        .enumerate()
        .filter(|(_, k)| **k == crate::model::VarKind::Integer)
        .map(|(i, _)| i)
        .collect();
    let out = milp::solve_canonical_milp(&lp, &ints, DEFAULT_MILP_NODE_CAP);
    let sign = if model.sense == crate::model::Sense::Max { -1.0 } else { 1.0 };
    let feas = if out.status == LpStatus::Optimal {
        c.feasibility_violation(&out.x)
    } else {
        f64::NAN
    };
    Ok(SolveReport {
        primal: out.x,
        dual: vec![],
        objective: sign * out.objective,
        status: out.status.into(),
        residuals: (feas, f64::NAN, f64::NAN),
    })
}

/// Minimize a smooth convex objective over the model's polyhedron by
/// conditional gradient (Frank–Wolfe).
pub fn solve_convex(
    model: &ConvexForwardModel,
    theta: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    model.validate()?;
    if let ObjectiveSpec::Linear = model.objective {
        // Degenerate smooth case: a single LP solve.
        let lin = LinearForwardModel::canonical(theta.to_vec(), model.a.clone(), model.b.clone());
        return solve_lp(&lin);
    }
    fw::solve_fw(model, theta, tol, max_iter)
}

/// Optimal value of `min θᵀx` over a canonical linear model's region,
/// failing on unbounded/infeasible regions.
pub fn forward_value(model: &LinearForwardModel, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let solve = if model.is_integer() { solve_milp } else { solve_lp };
    let rep = solve(&model.with_cost(theta.to_vec()))?;
    match rep.status {
        SolveStatus::Optimal => Ok((rep.objective, rep.primal)),
        SolveStatus::Unbounded => Err(Error::ForwardUnbounded),
        SolveStatus::Infeasible => Err(Error::Solver("forward region infeasible".into())),
        SolveStatus::IterationLimit => {
            Err(Error::IterationLimit("forward solve hit its cap".into()))
        }
    }
}

/// Convenience: θᵀx for linear forwards.
pub fn linear_value(theta: &[f64], x: &[f64]) -> f64 {
    linalg::dot(theta, x)
}
