//! Independent brute-force ground truth: vertex enumeration, exhaustive
//! optimal sets, inverse-feasibility checks, value iteration, and grid
//! search over parameter spaces. These exist for verification, not speed.

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{LinearForwardModel, MdpModel, ParameterSpace, VarKind};
use crate::solver;

const DEDUPE_TOL: f64 = 1e-8;
const FEAS_TOL: f64 = 1e-7;

/// All vertices (basic feasible solutions) of `{x : Ax ≥ b}`.
/// Guarded to n ≤ 8, m ≤ 12.
pub fn enumerate_vertices(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<Vec<f64>>> {
    let m = b.len();
    let n = a.first().map_or(0, |r| r.len());
    if n > 8 || m > 12 {
        return Err(Error::TooLarge(format!(
            "vertex enumeration limited to n ≤ 8, m ≤ 12 (got n={n}, m={m})"
        )));
    }
    if n == 0 || m < n {
        return Ok(vec![]);
    }
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let rows: Vec<Vec<f64>> = subset.iter().map(|&i| a[i].clone()).collect();
        let rhs: Vec<f64> = subset.iter().map(|&i| b[i]).collect();
        if let Some(x) = linalg::solve_square(&rows, &rhs) {
            let feasible = a
                .iter()
                .zip(b)
                .all(|(row, &bi)| linalg::dot(row, &x) >= bi - FEAS_TOL);
            if feasible
                && !vertices
                    .iter()
                    .any(|v| linalg::norm_inf(&linalg::sub(v, &x)) < DEDUPE_TOL)
            {
                vertices.push(x);
            }
        }
        // Next n-subset of rows in lexicographic order.
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(vertices);
            }
            i -= 1;
            if subset[i] < m - (n - i) {
                subset[i] += 1;
                for j in (i + 1)..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Exact optimal set of a small canonical model at θ: for continuous models
/// the optimal vertices; for integer models the optimal lattice points
/// (enumeration capped at 2^15 candidates).
pub fn brute_force_optimal_set(
    model: &LinearForwardModel,
    theta: &[f64],
) -> Result<(Vec<Vec<f64>>, f64)> {
    let candidates = if model.is_integer() {
        enumerate_lattice(model)?
    } else {
        enumerate_vertices(&model.a, &model.b)?
    };
    if candidates.is_empty() {
        return Ok((vec![], f64::INFINITY));
    }
    let values: Vec<f64> = candidates.iter().map(|x| linalg::dot(theta, x)).collect();
    let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = 1e-8 * (1.0 + best.abs());
    let opt: Vec<Vec<f64>> = candidates
        .into_iter()
        .zip(&values)
        .filter(|(_, &v)| v <= best + tol)
        .map(|(x, _)| x)
        .collect();
    Ok((opt, best))
}

/// All feasible integer points of an all-integer canonical model, with
/// per-variable bounds taken from the LP relaxation.
fn enumerate_lattice(model: &LinearForwardModel) -> Result<Vec<Vec<f64>>> {
    let n = model.num_vars();
    if model.integrality.iter().any(|k| *k == VarKind::Continuous) {
        return Err(Error::TooLarge(
            "lattice enumeration supports all-integer models only".into(),
        ));
    }
    let mut lo = vec![0i64; n];
    let mut hi = vec![0i64; n];
    let mut count: u64 = 1;
    for i in 0..n {
        let mut probe = vec![0.0; n];
        probe[i] = 1.0;
        let min_rep = solver::solve_lp(&model.with_cost(probe.clone()))?;
        probe[i] = -1.0;
        let max_rep = solver::solve_lp(&model.with_cost(probe))?;
        if min_rep.status != solver::SolveStatus::Optimal
            || max_rep.status != solver::SolveStatus::Optimal
        {
            return Err(Error::TooLarge(format!(
                "variable {i} is unbounded; lattice enumeration impossible"
            )));
        }
        lo[i] = (min_rep.objective - 1e-7).ceil() as i64;
        hi[i] = (-max_rep.objective + 1e-7).floor() as i64;
        if hi[i] < lo[i] {
            return Ok(vec![]);
        }
        count = count.saturating_mul((hi[i] - lo[i] + 1) as u64);
        if count > 1 << 15 {
            return Err(Error::TooLarge(format!(
                "lattice has more than 2^15 candidate points"
            )));
        }
    }
    let mut out = Vec::new();
    let mut point = lo.clone();
    'outer: loop {
        let x: Vec<f64> = point.iter().map(|&v| v as f64).collect();
        if model.feasibility_violation(&x) <= FEAS_TOL {
            out.push(x);
        }
        for i in 0..n {
            if point[i] < hi[i] {
                point[i] += 1;
                continue 'outer;
            }
            point[i] = lo[i];
        }
        break;
    }
    Ok(out)
}

/// True iff `x̂` is feasible and optimal for the model under θ within `tol`;
/// the optimality gap `θᵀx̂ − min θᵀx` is returned either way.
pub fn verify_inverse_feasible(
    model: &LinearForwardModel,
    theta: &[f64],
    x_hat: &[f64],
    tol: f64,
) -> (bool, f64) {
    let violation = model.feasibility_violation(x_hat);
    match solver::forward_value(&model.with_cost(theta.to_vec()), theta) {
        Ok((opt, _)) => {
            let gap = linalg::dot(theta, x_hat) - opt;
            (violation <= tol.max(FEAS_TOL) && gap <= tol, gap)
        }
        Err(_) => (false, f64::INFINITY),
    }
}

/// Value iteration to sup-norm 1e-10; greedy ties broken by action index.
pub fn mdp_value_iteration(mdp: &MdpModel, theta: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let ns = mdp.n_states;
    let na = mdp.n_actions;
    let mut v = vec![0.0; ns];
    for _ in 0..1_000_000 {
        let mut next = vec![f64::NEG_INFINITY; ns];
        for s in 0..ns {
            for a in 0..na {
                let q = theta[mdp.reward_index(s, a)]
                    + mdp.gamma * linalg::dot(&mdp.transition[s][a], &v);
                if q > next[s] {
                    next[s] = q;
                }
            }
        }
        let delta = linalg::norm_inf(&linalg::sub(&next, &v));
        v = next;
        if delta <= 1e-10 {
            break;
        }
    }
    let mut policy = vec![0; ns];
    for s in 0..ns {
        let mut best = f64::NEG_INFINITY;
        for a in 0..na {
            let q = theta[mdp.reward_index(s, a)]
                + mdp.gamma * linalg::dot(&mdp.transition[s][a], &v);
            if q > best + 1e-12 {
                best = q;
                policy[s] = a;
            }
        }
    }
    (v, policy)
}

/// Discounted value of following a fixed policy.
pub fn mdp_policy_value(mdp: &MdpModel, theta: &[f64], policy: &[usize]) -> Vec<f64> {
    let ns = mdp.n_states;
    let mut v = vec![0.0; ns];
    for _ in 0..1_000_000 {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            let a = policy[s];
            next[s] = theta[mdp.reward_index(s, a)]
                + mdp.gamma * linalg::dot(&mdp.transition[s][a], &v);
        }
        let delta = linalg::norm_inf(&linalg::sub(&next, &v));
        v = next;
        if delta <= 1e-10 {
            break;
        }
    }
    v
}

/// Candidate parameter points covering Θ at resolution `r`: a lattice over
/// the bounding box, mapped onto the normalization surface and filtered for
/// membership. Dimension ≤ 3.
pub fn grid_points(space: &ParameterSpace, r: f64) -> Result<Vec<Vec<f64>>> {
    if space.dim > 3 {
        return Err(Error::TooLarge(format!(
            "grid search limited to dim(θ) ≤ 3 (got {})",
            space.dim
        )));
    }
    lattice_net(space, r, 2_000_000)
}

/// The lattice construction behind [`grid_points`], with an explicit cap on
/// candidate count; also serves as the δ-net for enumerative estimators.
pub fn lattice_net(space: &ParameterSpace, r: f64, cap: usize) -> Result<Vec<Vec<f64>>> {
    let d = space.dim;
    if !(r > 0.0) {
        return Err(Error::InvalidInput("grid resolution must be positive".into()));
    }
    let lo: Vec<f64> = space
        .lower
        .iter()
        .map(|l| l.unwrap_or(-1.0))
        .collect();
    let hi: Vec<f64> = space.upper.iter().map(|u| u.unwrap_or(1.0)).collect();
    let steps: Vec<usize> = lo
        .iter()
        .zip(&hi)
        .map(|(&l, &h)| ((h - l) / r).round().max(1.0) as usize)
        .collect();
    let total: usize = steps
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s + 1))
        .unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::TooLarge(format!(
            "lattice would hold {total} points (cap {cap}); raise the resolution"
        )));
    }
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut idx = vec![0usize; d];
    'outer: loop {
        let mut theta: Vec<f64> = (0..d)
            .map(|i| lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / steps[i] as f64)
            .collect();
        match space.normalization {
            crate::model::Normalization::L1Sphere => {
                let n1 = linalg::norm_1(&theta);
                if n1 > 1e-9 {
                    theta = linalg::scale(&theta, 1.0 / n1);
                }
            }
            crate::model::Normalization::LInfSphere => {
                let ni = linalg::norm_inf(&theta);
                if ni > 1e-9 {
                    theta = linalg::scale(&theta, 1.0 / ni);
                }
            }
            crate::model::Normalization::FixedComponent { index, value } => {
                theta[index] = value;
            }
            crate::model::Normalization::None => {}
        }
        if space.validate_parameter(&theta).is_empty() {
            let key: Vec<i64> = theta.iter().map(|&v| (v * 1e9).round() as i64).collect();
            if seen.insert(key) {
                out.push(theta);
            }
        }
        for i in 0..d {
            if idx[i] < steps[i] {
                idx[i] += 1;
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    Ok(out)
}

/// Exhaustive minimum of an arbitrary loss over a grid on Θ.
pub fn grid_min_loss<F: FnMut(&[f64]) -> f64>(
    space: &ParameterSpace,
    r: f64,
    mut loss: F,
) -> Result<(Vec<f64>, f64)> {
    let pts = grid_points(space, r)?;
    if pts.is_empty() {
        return Err(Error::EmptyNet);
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for p in pts {
        let v = loss(&p);
        if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
            best = Some((p, v));
        }
    }
    Ok(best.unwrap())
}
