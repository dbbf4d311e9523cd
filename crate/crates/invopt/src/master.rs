//! Shared master-problem scaffolding: minimize the inverse objective h(θ)
//! over the convex pieces of a parameter space, with estimator-specific
//! auxiliary variables and coupling rows added through a callback. Each
//! piece is one LP/MILP; the best piece wins, first piece on ties.

use crate::error::{Error, Result};
use crate::model::{ObjectiveMode, ParameterSpace, RowSense};
use crate::solver::lp::{LpBuilder, LpSolution};
use crate::solver::simplex::LpStatus;

#[derive(Debug, Clone)]
pub struct MasterOut {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub solution: LpSolution,
    pub piece: usize,
}

/// Add θ variables and the h(θ) objective encoding to a builder.
/// Returns the θ variable indices.
pub fn add_theta_with_objective(b: &mut LpBuilder, space: &ParameterSpace) -> Vec<usize> {
    let d = space.dim;
    let theta: Vec<usize> = (0..d).map(|_| b.add_var(0.0, None, None)).collect();
    match &space.objective_mode {
        ObjectiveMode::NormToPrior { p } => {
            let prior = space.prior.clone().unwrap_or_else(|| vec![0.0; d]);
            match p {
                crate::model::NormP::One => {
                    for (i, &t) in theta.iter().enumerate() {
                        let u = b.add_var(1.0, Some(0.0), None);
                        b.add_row(vec![(u, 1.0), (t, -1.0)], RowSense::Ge, -prior[i]);
                        b.add_row(vec![(u, 1.0), (t, 1.0)], RowSense::Ge, prior[i]);
                    }
                }
                crate::model::NormP::Inf => {
                    let u = b.add_var(1.0, Some(0.0), None);
                    for (i, &t) in theta.iter().enumerate() {
                        b.add_row(vec![(u, 1.0), (t, -1.0)], RowSense::Ge, -prior[i]);
                        b.add_row(vec![(u, 1.0), (t, 1.0)], RowSense::Ge, prior[i]);
                    }
                }
            }
        }
        ObjectiveMode::LinearCost { w } => {
            for (&t, &wi) in theta.iter().zip(w) {
                b.set_obj(t, wi);
            }
        }
        ObjectiveMode::Zero => {}
    }
    theta
}

/// Minimize h(θ) over every convex piece of Θ subject to the rows the
/// callback installs. The callback receives the builder, the θ variable
/// indices, and the piece index. Returns None when every piece is
/// infeasible.
pub fn solve_master<F>(space: &ParameterSpace, integer: bool, mut build: F) -> Result<Option<MasterOut>>
where
    F: FnMut(&mut LpBuilder, &[usize], usize) -> Result<()>,
{
    let pieces = space.convex_pieces()?;
    let mut best: Option<MasterOut> = None;
    for (pi, piece) in pieces.iter().enumerate() {
        let mut b = LpBuilder::new();
        let theta = add_theta_with_objective(&mut b, space);
        for (g, h) in &piece.ineq {
            let terms: Vec<(usize, f64)> = theta
                .iter()
                .zip(g)
                .filter(|(_, &c)| c != 0.0)
                .map(|(&v, &c)| (v, c))
                .collect();
            b.add_row(terms, RowSense::Ge, *h);
        }
        for (e, f) in &piece.eq {
            let terms: Vec<(usize, f64)> = theta
                .iter()
                .zip(e)
                .filter(|(_, &c)| c != 0.0)
                .map(|(&v, &c)| (v, c))
                .collect();
            b.add_row(terms, RowSense::Eq, *f);
        }
        build(&mut b, &theta, pi)?;
        let sol = if integer { b.solve_milp() } else { b.solve() };
        match sol.status {
            LpStatus::Optimal => {
                let tv: Vec<f64> = theta.iter().map(|&v| sol.x[v]).collect();
                if best
                    .as_ref()
                    .is_none_or(|cur| sol.objective < cur.objective - 1e-12)
                {
                    best = Some(MasterOut {
                        theta: tv,
                        objective: sol.objective,
                        solution: sol,
                        piece: pi,
                    });
                }
            }
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(Error::Solver(
                    "master problem unbounded; parameter space lacks a bounding objective".into(),
                ))
            }
            LpStatus::IterationLimit => {
                return Err(Error::IterationLimit("master solve hit its pivot cap".into()))
            }
        }
    }
    Ok(best)
}
