//! Data-driven inverse estimators: minimize an empirical risk of
//! per-observation suboptimality losses over Θ, without requiring any single
//! parameter to rationalize every observation exactly. Losses: absolute and
//! relative suboptimality gaps, distance to the optimal set, first-order
//! (variational-inequality) gap, and KKT residual. Risks: weighted mean,
//! CVaR, and a value-at-risk estimator that excludes a loss quantile. The
//! risk is the sole objective here; any norm-to-prior mode on the parameter
//! space is ignored by these estimators.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::master;
use crate::model::{
    canonical_with_sign, ConvexForwardModel, Dataset, EstStatus, EstimationResult,
    LinearForwardModel, NormP, ObjectiveMode, ObjectiveSpec, ParameterSpace, RowSense, PARAM_TOL,
};
use crate::oracles;
use crate::solver::{self, LpBuilder};
use crate::solver::simplex::LpStatus;

/// Convergence budget for the nearest-point subproblems.
const FW_TOL: f64 = 1e-10;
const FW_ITERS: usize = 20_000;
/// Slack keeping the optimal face numerically nonempty.
const FACE_TOL: f64 = 1e-9;

/// Knobs shared by the data-driven estimators.
#[derive(Debug, Clone)]
pub struct DataDrivenConfig {
    /// Constraint/value relaxation for enumerative distance estimation.
    pub epsilon: f64,
    /// Resolution of the candidate net over Θ.
    pub delta: f64,
    /// Cap on the candidate-net size.
    pub net_cap: usize,
    /// Big-M gating excluded observations in quantile selection; every loss
    /// is validated against it.
    pub big_m: f64,
}

impl Default for DataDrivenConfig {
    fn default() -> Self {
        DataDrivenConfig {
            epsilon: 1e-6,
            delta: 0.05,
            net_cap: 200_000,
            big_m: 1e4,
        }
    }
}

/// How per-observation losses aggregate into the estimation objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskSpec {
    /// Weighted mean loss.
    Expected,
    /// Conditional value at risk: mean of the worst α tail.
    Cvar { alpha: f64 },
    /// Value at risk: the ⌈Nχ⌉-th smallest loss (lower quantile).
    Var { chi: f64 },
}

fn zero_admissible(space: &ParameterSpace) -> bool {
    space.validate_parameter(&vec![0.0; space.dim]).is_empty()
}

/// Status flag shared by every risk estimator: θ = 0 being admissible makes
/// scale-covariant losses trivially minimizable.
fn risk_status(space: &ParameterSpace) -> EstStatus {
    if zero_admissible(space) {
        EstStatus::Degenerate
    } else {
        EstStatus::Optimal
    }
}

/// The same space with the inverse objective switched off: data-driven
/// masters minimize risk, not distance to a prior.
fn risk_space(space: &ParameterSpace) -> ParameterSpace {
    let mut s = space.clone();
    s.objective_mode = ObjectiveMode::Zero;
    s
}

fn check_dataset_lp(
    ds: &Dataset<LinearForwardModel>,
    space: &ParameterSpace,
) -> Result<Vec<(LinearForwardModel, f64)>> {
    ds.validate_shape()?;
    let canon: Vec<(LinearForwardModel, f64)> = ds
        .models
        .iter()
        .map(canonical_with_sign)
        .collect::<Result<_>>()?;
    for (cm, _) in &canon {
        if cm.is_integer() {
            return Err(Error::UnsupportedCombination(
                "risk estimation over integer models is not supported; \
                 use the cutting-plane estimator"
                    .into(),
            ));
        }
        if cm.num_vars() != space.dim {
            return Err(Error::DimensionMismatch(
                "space dim vs model variables".into(),
            ));
        }
    }
    for (i, o) in ds.observations.iter().enumerate() {
        if o.x_hat.len() != space.dim {
            return Err(Error::DimensionMismatch(format!(
                "observation {i} length vs space dim"
            )));
        }
    }
    Ok(canon)
}

fn weight_total<M>(ds: &Dataset<M>) -> f64 {
    ds.observations.iter().map(|o| o.weight).sum()
}

// ---------------------------------------------------------------------------
// Loss evaluation at a fixed parameter.
// ---------------------------------------------------------------------------

/// Absolute suboptimality `θᵀx̂ − min θᵀx` (sense-adjusted, clamped at 0).
pub fn eval_aso(model: &LinearForwardModel, theta: &[f64], x_hat: &[f64]) -> Result<f64> {
    let (cm, sign) = canonical_with_sign(model)?;
    let cost = linalg::scale(theta, sign);
    let (opt, _) = solver::forward_value(&cm, &cost)?;
    Ok((linalg::dot(&cost, x_hat) - opt).max(0.0))
}

/// Relative suboptimality `θᵀx̂ / min θᵀx − 1`; requires strictly positive
/// right-hand sides so the forward value stays positive.
pub fn eval_rso(model: &LinearForwardModel, theta: &[f64], x_hat: &[f64]) -> Result<f64> {
    let (cm, sign) = canonical_with_sign(model)?;
    check_positive_rhs(&cm)?;
    let cost = linalg::scale(theta, sign);
    let (opt, _) = solver::forward_value(&cm, &cost)?;
    if opt <= 1e-12 {
        return Err(Error::NormalizationRequired(format!(
            "forward value {opt:.3e} is not positive; the ratio loss is undefined"
        )));
    }
    Ok((linalg::dot(&cost, x_hat) / opt - 1.0).max(0.0))
}

fn check_positive_rhs(cm: &LinearForwardModel) -> Result<()> {
    if cm.b.iter().any(|&bi| bi <= 0.0) {
        return Err(Error::NormalizationRequired(
            "ratio loss needs strictly positive right-hand sides in ≥ form".into(),
        ));
    }
    Ok(())
}

/// Euclidean distance from x̂ to the optimal set X*(θ). The observation may
/// be infeasible; continuous regions only.
pub fn eval_distance(model: &LinearForwardModel, theta: &[f64], x_hat: &[f64]) -> Result<f64> {
    let (cm, sign) = canonical_with_sign(model)?;
    check_continuous(&cm)?;
    let cost = linalg::scale(theta, sign);
    let (opt, _) = solver::forward_value(&cm, &cost)?;
    let mut a = cm.a.clone();
    let mut b = cm.b.clone();
    a.push(linalg::scale(&cost, -1.0));
    b.push(-(opt + FACE_TOL));
    nearest_point_distance(&a, &b, x_hat)?
        .ok_or_else(|| Error::Solver("optimal face unexpectedly empty".into()))
}

/// p-norm (p ∈ {1, ∞}) distance from x̂ to X*(θ), by LP.
pub fn eval_distance_p(
    model: &LinearForwardModel,
    theta: &[f64],
    x_hat: &[f64],
    p: NormP,
) -> Result<f64> {
    let (cm, sign) = canonical_with_sign(model)?;
    check_continuous(&cm)?;
    let cost = linalg::scale(theta, sign);
    let (opt, _) = solver::forward_value(&cm, &cost)?;
    let n = cm.num_vars();
    let mut b = LpBuilder::new();
    let x: Vec<usize> = (0..n).map(|_| b.add_var(0.0, None, None)).collect();
    for (row, &rhs) in cm.a.iter().zip(&cm.b) {
        let terms: Vec<(usize, f64)> = x
            .iter()
            .zip(row)
            .filter(|(_, &c)| c != 0.0)
            .map(|(&v, &c)| (v, c))
            .collect();
        b.add_row(terms, RowSense::Ge, rhs);
    }
    let cut: Vec<(usize, f64)> = x
        .iter()
        .zip(&cost)
        .filter(|(_, &c)| c != 0.0)
        .map(|(&v, &c)| (v, c))
        .collect();
    b.add_row(cut, RowSense::Le, opt + FACE_TOL);
    match p {
        NormP::One => {
            for j in 0..n {
                let u = b.add_var(1.0, Some(0.0), None);
                b.add_row(vec![(u, 1.0), (x[j], -1.0)], RowSense::Ge, -x_hat[j]);
                b.add_row(vec![(u, 1.0), (x[j], 1.0)], RowSense::Ge, x_hat[j]);
            }
        }
        NormP::Inf => {
            let u = b.add_var(1.0, Some(0.0), None);
            for j in 0..n {
                b.add_row(vec![(u, 1.0), (x[j], -1.0)], RowSense::Ge, -x_hat[j]);
                b.add_row(vec![(u, 1.0), (x[j], 1.0)], RowSense::Ge, x_hat[j]);
            }
        }
    }
    let sol = b.solve();
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!(
            "distance projection LP ended {:?}",
            sol.status
        )));
    }
    Ok(sol.objective.max(0.0))
}

fn check_continuous(cm: &LinearForwardModel) -> Result<()> {
    if cm.is_integer() {
        return Err(Error::UnsupportedCombination(
            "distance losses support continuous regions only".into(),
        ));
    }
    Ok(())
}

/// First-order (variational-inequality) gap
/// `∇f(x̂,θ)ᵀx̂ − min_x ∇f(x̂,θ)ᵀx`, clamped at 0.
pub fn eval_vi(model: &ConvexForwardModel, theta: &[f64], x_hat: &[f64]) -> Result<f64> {
    model.validate()?;
    let g = model.objective.grad(x_hat, theta);
    let lin = LinearForwardModel::canonical(g.clone(), model.a.clone(), model.b.clone());
    let (opt, _) = solver::forward_value(&lin, &g)?;
    Ok((linalg::dot(&g, x_hat) - opt).max(0.0))
}

/// KKT residual: 1-norm of the stationarity defect plus a p-norm
/// complementarity penalty, minimized over dual multipliers. x̂ must be
/// feasible.
pub fn eval_kkt(
    model: &ConvexForwardModel,
    theta: &[f64],
    x_hat: &[f64],
    comp_norm: NormP,
) -> Result<f64> {
    model.validate()?;
    let viol = model.feasibility_violation(x_hat);
    if viol > 1e-7 {
        return Err(Error::ObservationInfeasible(viol));
    }
    let g = model.objective.grad(x_hat, theta);
    let n = model.num_vars();
    let m = model.b.len();
    let slack: Vec<f64> = linalg::mat_vec(&model.a, x_hat)
        .iter()
        .zip(&model.b)
        .map(|(ax, bi)| (ax - bi).max(0.0))
        .collect();
    let mut b = LpBuilder::new();
    let lam: Vec<usize> = (0..m).map(|_| b.add_var(0.0, Some(0.0), None)).collect();
    for r in 0..n {
        let u = b.add_var(1.0, Some(0.0), None);
        // u ≥ ±(g_r − (Aᵀλ)_r)
        let mut lo: Vec<(usize, f64)> = vec![(u, 1.0)];
        let mut hi: Vec<(usize, f64)> = vec![(u, 1.0)];
        for (i, &lv) in lam.iter().enumerate() {
            if model.a[i][r] != 0.0 {
                lo.push((lv, -model.a[i][r]));
                hi.push((lv, model.a[i][r]));
            }
        }
        b.add_row(lo, RowSense::Ge, -g[r]);
        b.add_row(hi, RowSense::Ge, g[r]);
    }
    match comp_norm {
        NormP::One => {
            for (i, &lv) in lam.iter().enumerate() {
                if slack[i] != 0.0 {
                    b.set_obj(lv, slack[i]);
                }
            }
        }
        NormP::Inf => {
            let v = b.add_var(1.0, Some(0.0), None);
            for (i, &lv) in lam.iter().enumerate() {
                if slack[i] != 0.0 {
                    b.add_row(vec![(v, 1.0), (lv, -slack[i])], RowSense::Ge, 0.0);
                }
            }
        }
    }
    let sol = b.solve();
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!("KKT residual LP ended {:?}", sol.status)));
    }
    Ok(sol.objective.max(0.0))
}

// ---------------------------------------------------------------------------
// Risk-minimizing estimators.
// ---------------------------------------------------------------------------

/// Minimize the weighted mean absolute suboptimality via the dual epigraph
/// LP: one multiplier block per instance, `Aᵀλ = sign·θ`, and
/// `t_i ≥ sign·θᵀx̂_i − bᵀλ`.
pub fn estimate_aso(
    ds: &Dataset<LinearForwardModel>,
    space: &ParameterSpace,
) -> Result<EstimationResult> {
    let canon = check_dataset_lp(ds, space)?;
    let w_total = weight_total(ds);
    let rs = risk_space(space);
    let mut t_vars: Vec<usize> = vec![];
    let mut lam_of_obs: Vec<Vec<usize>> = vec![];
    let out = master::solve_master(&rs, false, |b, theta, _| {
        t_vars.clear();
        lam_of_obs.clear();
        let mut inst_lambda: HashMap<usize, Vec<usize>> = HashMap::new();
        for o in &ds.observations {
            let inst = if ds.shared_region { 0 } else { o.instance };
            let (cm, sign) = &canon[inst];
            if !inst_lambda.contains_key(&inst) {
                let lam = add_dual_block(b, cm, *sign, theta);
                inst_lambda.insert(inst, lam);
            }
            let lam = &inst_lambda[&inst];
            let t = b.add_var(o.weight / w_total, Some(0.0), None);
            let mut terms: Vec<(usize, f64)> = vec![(t, 1.0)];
            terms.extend(
                theta
                    .iter()
                    .zip(&o.x_hat)
                    .filter(|(_, &x)| x != 0.0)
                    .map(|(&tv, &x)| (tv, -sign * x)),
            );
            terms.extend(
                lam.iter()
                    .zip(&cm.b)
                    .filter(|(_, &bi)| bi != 0.0)
                    .map(|(&lv, &bi)| (lv, bi)),
            );
            b.add_row(terms, RowSense::Ge, 0.0);
            t_vars.push(t);
            lam_of_obs.push(lam.clone());
        }
        Ok(())
    })?;
    let out = out.ok_or(Error::InverseInfeasible)?;
    finish_master(space, out, &t_vars, &lam_of_obs, w_total)
}

/// Minimize the weighted mean relative suboptimality: the dual value is
/// pinned to 1 (`bᵀλ = 1`), which fixes the scale of θ.
pub fn estimate_rso(
    ds: &Dataset<LinearForwardModel>,
    space: &ParameterSpace,
) -> Result<EstimationResult> {
    let canon = check_dataset_lp(ds, space)?;
    for (cm, _) in &canon {
        check_positive_rhs(cm)?;
    }
    let w_total = weight_total(ds);
    let rs = risk_space(space);
    let mut t_vars: Vec<usize> = vec![];
    let mut lam_of_obs: Vec<Vec<usize>> = vec![];
    let out = master::solve_master(&rs, false, |b, theta, _| {
        t_vars.clear();
        lam_of_obs.clear();
        let mut inst_lambda: HashMap<usize, Vec<usize>> = HashMap::new();
        for o in &ds.observations {
            let inst = if ds.shared_region { 0 } else { o.instance };
            let (cm, sign) = &canon[inst];
            if !inst_lambda.contains_key(&inst) {
                let lam = add_dual_block(b, cm, *sign, theta);
                let norm: Vec<(usize, f64)> = lam
                    .iter()
                    .zip(&cm.b)
                    .map(|(&lv, &bi)| (lv, bi))
                    .collect();
                b.add_row(norm, RowSense::Eq, 1.0);
                inst_lambda.insert(inst, lam);
            }
            let t = b.add_var(o.weight / w_total, Some(0.0), None);
            let mut terms: Vec<(usize, f64)> = vec![(t, 1.0)];
            terms.extend(
                theta
                    .iter()
                    .zip(&o.x_hat)
                    .filter(|(_, &x)| x != 0.0)
                    .map(|(&tv, &x)| (tv, -sign * x)),
            );
            b.add_row(terms, RowSense::Ge, -1.0);
            t_vars.push(t);
            lam_of_obs.push(inst_lambda[&inst].clone());
        }
        Ok(())
    })?;
    let out = out.ok_or(Error::InverseInfeasible)?;
    finish_master(space, out, &t_vars, &lam_of_obs, w_total)
}

/// Dual multipliers for one canonical instance plus the feasibility rows
/// `Aᵀλ = sign·θ`.
fn add_dual_block(
    b: &mut LpBuilder,
    cm: &LinearForwardModel,
    sign: f64,
    theta: &[usize],
) -> Vec<usize> {
    let lam: Vec<usize> = (0..cm.num_rows())
        .map(|_| b.add_var(0.0, Some(0.0), None))
        .collect();
    for j in 0..cm.num_vars() {
        let mut terms: Vec<(usize, f64)> = lam
            .iter()
            .enumerate()
            .filter(|(i, _)| cm.a[*i][j] != 0.0)
            .map(|(i, &lv)| (lv, cm.a[i][j]))
            .collect();
        terms.push((theta[j], -sign));
        b.add_row(terms, RowSense::Eq, 0.0);
    }
    lam
}

fn finish_master(
    space: &ParameterSpace,
    out: master::MasterOut,
    t_vars: &[usize],
    lam_of_obs: &[Vec<usize>],
    w_total: f64,
) -> Result<EstimationResult> {
    let per: Vec<f64> = t_vars.iter().map(|&v| out.solution.x[v].max(0.0)).collect();
    let duals: Vec<Vec<f64>> = lam_of_obs
        .iter()
        .map(|lam| lam.iter().map(|&v| out.solution.x[v]).collect())
        .collect();
    Ok(EstimationResult {
        theta: out.theta,
        objective: out.objective.max(0.0),
        per_obs_loss: per,
        duals,
        status: risk_status(space),
        diagnostics: Default::default(),
    }
    .with_diag("weight_total", w_total)
    .with_diag("piece", out.piece as f64))
}

/// Minimize the weighted mean first-order gap: the inner minimization is
/// dualized per observation around the gradient at x̂.
pub fn estimate_vi(
    ds: &Dataset<ConvexForwardModel>,
    space: &ParameterSpace,
) -> Result<EstimationResult> {
    ds.validate_shape()?;
    for m in &ds.models {
        m.validate()?;
        if m.objective.theta_dim(m.num_vars()) != space.dim {
            return Err(Error::DimensionMismatch(
                "space dim vs objective parameters".into(),
            ));
        }
    }
    let w_total = weight_total(ds);
    let rs = risk_space(space);
    let mut t_vars: Vec<usize> = vec![];
    let mut lam_of_obs: Vec<Vec<usize>> = vec![];
    let out = master::solve_master(&rs, false, |b, theta, _| {
        t_vars.clear();
        lam_of_obs.clear();
        for o in &ds.observations {
            let m = ds.model_of(o);
            let n = m.num_vars();
            if o.x_hat.len() != n {
                return Err(Error::DimensionMismatch(
                    "observation length vs model variables".into(),
                ));
            }
            let (g0, gmat) = m.objective.grad_affine(&o.x_hat);
            let lam: Vec<usize> = (0..m.b.len())
                .map(|_| b.add_var(0.0, Some(0.0), None))
                .collect();
            // Aᵀλ = g₀(x̂) + G(x̂)θ componentwise.
            for r in 0..n {
                let mut terms: Vec<(usize, f64)> = lam
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| m.a[*i][r] != 0.0)
                    .map(|(i, &lv)| (lv, m.a[i][r]))
                    .collect();
                for (k, &tv) in theta.iter().enumerate() {
                    if gmat[r][k] != 0.0 {
                        terms.push((tv, -gmat[r][k]));
                    }
                }
                b.add_row(terms, RowSense::Eq, g0[r]);
            }
            // t ≥ ∇fᵀx̂ − bᵀλ with ∇fᵀx̂ affine in θ.
            let g0x = linalg::dot(&g0, &o.x_hat);
            let t = b.add_var(o.weight / w_total, Some(0.0), None);
            let mut terms: Vec<(usize, f64)> = vec![(t, 1.0)];
            for (k, &tv) in theta.iter().enumerate() {
                let coef: f64 = (0..n).map(|r| gmat[r][k] * o.x_hat[r]).sum();
                if coef != 0.0 {
                    terms.push((tv, -coef));
                }
            }
            terms.extend(
                lam.iter()
                    .zip(&m.b)
                    .filter(|(_, &bi)| bi != 0.0)
                    .map(|(&lv, &bi)| (lv, bi)),
            );
            b.add_row(terms, RowSense::Ge, g0x);
            t_vars.push(t);
            lam_of_obs.push(lam);
        }
        Ok(())
    })?;
    let out = out.ok_or(Error::InverseInfeasible)?;
    finish_master(space, out, &t_vars, &lam_of_obs, w_total)
}

/// Minimize the weighted mean KKT residual jointly over θ and per-
/// observation multipliers.
pub fn estimate_kkt(
    ds: &Dataset<ConvexForwardModel>,
    space: &ParameterSpace,
    comp_norm: NormP,
) -> Result<EstimationResult> {
    ds.validate_shape()?;
    for m in &ds.models {
        m.validate()?;
        if m.objective.theta_dim(m.num_vars()) != space.dim {
            return Err(Error::DimensionMismatch(
                "space dim vs objective parameters".into(),
            ));
        }
    }
    for o in &ds.observations {
        let viol = ds.model_of(o).feasibility_violation(&o.x_hat);
        if viol > 1e-7 {
            return Err(Error::ObservationInfeasible(viol));
        }
    }
    let w_total = weight_total(ds);
    let rs = risk_space(space);
    // Per observation: objective terms (var, coef) making up its loss.
    let mut loss_terms: Vec<Vec<(usize, f64)>> = vec![];
    let mut lam_of_obs: Vec<Vec<usize>> = vec![];
    let out = master::solve_master(&rs, false, |b, theta, _| {
        loss_terms.clear();
        lam_of_obs.clear();
        for o in &ds.observations {
            let m = ds.model_of(o);
            let n = m.num_vars();
            let w = o.weight / w_total;
            let (g0, gmat) = m.objective.grad_affine(&o.x_hat);
            let slack: Vec<f64> = linalg::mat_vec(&m.a, &o.x_hat)
                .iter()
                .zip(&m.b)
                .map(|(ax, bi)| (ax - bi).max(0.0))
                .collect();
            let lam: Vec<usize> = (0..m.b.len())
                .map(|_| b.add_var(0.0, Some(0.0), None))
                .collect();
            let mut terms_of_loss: Vec<(usize, f64)> = vec![];
            for r in 0..n {
                let u = b.add_var(w, Some(0.0), None);
                terms_of_loss.push((u, 1.0));
                // u ≥ ±(g₀ + Gθ − Aᵀλ)_r
                let mut lo: Vec<(usize, f64)> = vec![(u, 1.0)];
                let mut hi: Vec<(usize, f64)> = vec![(u, 1.0)];
                for (k, &tv) in theta.iter().enumerate() {
                    if gmat[r][k] != 0.0 {
                        lo.push((tv, gmat[r][k]));
                        hi.push((tv, -gmat[r][k]));
                    }
                }
                for (i, &lv) in lam.iter().enumerate() {
                    if m.a[i][r] != 0.0 {
                        lo.push((lv, -m.a[i][r]));
                        hi.push((lv, m.a[i][r]));
                    }
                }
                b.add_row(lo, RowSense::Ge, -g0[r]);
                b.add_row(hi, RowSense::Ge, g0[r]);
            }
            match comp_norm {
                NormP::One => {
                    for (i, &lv) in lam.iter().enumerate() {
                        if slack[i] != 0.0 {
                            b.set_obj(lv, w * slack[i]);
                            terms_of_loss.push((lv, slack[i]));
                        }
                    }
                }
                NormP::Inf => {
                    let v = b.add_var(w, Some(0.0), None);
                    terms_of_loss.push((v, 1.0));
                    for (i, &lv) in lam.iter().enumerate() {
                        if slack[i] != 0.0 {
                            b.add_row(vec![(v, 1.0), (lv, -slack[i])], RowSense::Ge, 0.0);
                        }
                    }
                }
            }
            loss_terms.push(terms_of_loss);
            lam_of_obs.push(lam);
        }
        Ok(())
    })?;
    let out = out.ok_or(Error::InverseInfeasible)?;
    let per: Vec<f64> = loss_terms
        .iter()
        .map(|ts| ts.iter().map(|&(v, c)| out.solution.x[v] * c).sum::<f64>().max(0.0))
        .collect();
    let duals: Vec<Vec<f64>> = lam_of_obs
        .iter()
        .map(|lam| lam.iter().map(|&v| out.solution.x[v]).collect())
        .collect();
    Ok(EstimationResult {
        theta: out.theta,
        objective: out.objective.max(0.0),
        per_obs_loss: per,
        duals,
        status: risk_status(space),
        diagnostics: Default::default(),
    }
    .with_diag("weight_total", w_total)
    .with_diag("piece", out.piece as f64))
}

/// Minimize the weighted mean distance to the optimal set. Shared-region
/// datasets use exact facet search: the best unit direction is the normal of
/// some region facet, so each facet is scored by projecting every
/// observation onto it. Per-instance datasets fall back to a δ-net over Θ
/// with ε-relaxed projections.
pub fn estimate_distance(
    ds: &Dataset<LinearForwardModel>,
    space: &ParameterSpace,
    cfg: &DataDrivenConfig,
) -> Result<EstimationResult> {
    let canon = check_dataset_lp(ds, space)?;
    let w_total = weight_total(ds);
    if ds.shared_region {
        return distance_facet_search(ds, space, &canon[0], w_total);
    }
    let net = oracles::lattice_net(space, cfg.delta, cfg.net_cap)?;
    if net.is_empty() {
        return Err(Error::EmptyNet);
    }
    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    for theta in &net {
        let mut risk = 0.0;
        let mut per = Vec::with_capacity(ds.observations.len());
        let mut ok = true;
        for o in &ds.observations {
            let (cm, sign) = &canon[o.instance];
            let cost = linalg::scale(theta, *sign);
            let opt = match solver::forward_value(cm, &cost) {
                Ok((v, _)) => v,
                Err(_) => {
                    ok = false;
                    break;
                }
            };
            let mut a = cm.a.clone();
            let mut b: Vec<f64> = cm.b.iter().map(|&bi| bi - cfg.epsilon).collect();
            a.push(linalg::scale(&cost, -1.0));
            b.push(-(opt + cfg.epsilon));
            match nearest_point_distance(&a, &b, &o.x_hat) {
                Ok(Some(d)) => {
                    per.push(d);
                    risk += o.weight * d / w_total;
                }
                Ok(None) | Err(Error::ForwardUnbounded) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if ok
            && best
                .as_ref()
                .is_none_or(|(_, br, _)| risk < *br - 1e-12)
        {
            best = Some((theta.clone(), risk, per));
        }
    }
    let (theta, risk, per) = best.ok_or(Error::EmptyNet)?;
    Ok(EstimationResult {
        theta,
        objective: risk,
        per_obs_loss: per,
        duals: vec![],
        status: risk_status(space),
        diagnostics: Default::default(),
    }
    .with_diag("net_size", net.len() as f64)
    .with_diag("delta", cfg.delta)
    .with_diag("epsilon", cfg.epsilon))
}

fn distance_facet_search(
    ds: &Dataset<LinearForwardModel>,
    space: &ParameterSpace,
    canon: &(LinearForwardModel, f64),
    w_total: f64,
) -> Result<EstimationResult> {
    let (cm, sign) = canon;
    let mut best: Option<(usize, Vec<f64>, f64, Vec<f64>)> = None;
    for (j, row) in cm.a.iter().enumerate() {
        let nrm = linalg::norm_2(row);
        if nrm < 1e-12 {
            continue;
        }
        // The facet normal, 2-normalized, reported in the original sense.
        let theta = linalg::scale(row, *sign / nrm);
        if !linear_membership(space, &theta) {
            continue;
        }
        // Facet j: region ∩ {a_jᵀx ≤ b_j}.
        let mut a = cm.a.clone();
        let mut b = cm.b.clone();
        a.push(linalg::scale(row, -1.0));
        b.push(-(cm.b[j] + FACE_TOL));
        let mut risk = 0.0;
        let mut per = Vec::with_capacity(ds.observations.len());
        let mut ok = true;
        for o in &ds.observations {
            match nearest_point_distance(&a, &b, &o.x_hat) {
                Ok(Some(d)) => {
                    per.push(d);
                    risk += o.weight * d / w_total;
                }
                Ok(None) | Err(Error::ForwardUnbounded) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if ok
            && best
                .as_ref()
                .is_none_or(|(_, _, br, _)| risk < *br - 1e-12)
        {
            best = Some((j, theta, risk, per));
        }
    }
    let (j, theta, risk, per) = best.ok_or(Error::NoCandidateFacet)?;
    Ok(EstimationResult {
        theta,
        objective: risk,
        per_obs_loss: per,
        duals: vec![],
        status: risk_status(space),
        diagnostics: Default::default(),
    }
    .with_diag("row", j as f64))
}

/// Membership in the linear part of Θ (inequalities, equalities, bounds).
/// Facet-search candidates are 2-normalized directions, so the
/// normalization rule is deliberately not checked here.
fn linear_membership(space: &ParameterSpace, theta: &[f64]) -> bool {
    if theta.len() != space.dim {
        return false;
    }
    let ineq_ok = space
        .ineq
        .iter()
        .all(|(g, h)| linalg::dot(g, theta) >= h - PARAM_TOL);
    let eq_ok = space
        .eq
        .iter()
        .all(|(e, f)| (linalg::dot(e, theta) - f).abs() <= PARAM_TOL);
    let box_ok = space
        .lower
        .iter()
        .zip(&space.upper)
        .zip(theta)
        .all(|((lo, up), &t)| {
            lo.is_none_or(|l| t >= l - PARAM_TOL) && up.is_none_or(|u| t <= u + PARAM_TOL)
        });
    ineq_ok && eq_ok && box_ok
}

/// Euclidean projection distance from x̂ onto `{x : Ax ≥ b}` by conditional
/// gradient; None when the region is empty.
fn nearest_point_distance(a: &[Vec<f64>], b: &[f64], x_hat: &[f64]) -> Result<Option<f64>> {
    let n = x_hat.len();
    let mut phi = vec![vec![0.0; n]; n];
    for (i, row) in phi.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let qm = ConvexForwardModel {
        objective: ObjectiveSpec::Quadratic {
            phi,
            psi: vec![0.0; n],
        },
        a: a.to_vec(),
        b: b.to_vec(),
    };
    // With θ = x̂ the quadratic reads ½‖x‖² − x̂ᵀx = ½‖x − x̂‖² − ½‖x̂‖².
    let rep = solver::solve_convex(&qm, x_hat, FW_TOL, FW_ITERS)?;
    if rep.status == solver::SolveStatus::Infeasible {
        return Ok(None);
    }
    let d2 = 2.0 * rep.objective + linalg::dot(x_hat, x_hat);
    Ok(Some(d2.max(0.0).sqrt()))
}

/// Value-at-risk estimation: pick θ minimizing the ⌈Nχ⌉-th smallest p-norm
/// distance loss over a δ-net, then certify the quantile with a big-M
/// selection MILP whose binaries mark the covered observations.
pub fn estimate_var(
    ds: &Dataset<LinearForwardModel>,
    space: &ParameterSpace,
    chi: f64,
    p: NormP,
    cfg: &DataDrivenConfig,
) -> Result<EstimationResult> {
    if !(chi > 0.0 && chi <= 1.0) {
        return Err(Error::InvalidInput("coverage χ must lie in (0, 1]".into()));
    }
    check_dataset_lp(ds, space)?;
    let n_obs = ds.observations.len();
    let k = ((n_obs as f64 * chi).ceil() as usize).clamp(1, n_obs);
    let net = oracles::lattice_net(space, cfg.delta, cfg.net_cap)?;
    if net.is_empty() {
        return Err(Error::EmptyNet);
    }
    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    for theta in &net {
        let mut losses = Vec::with_capacity(n_obs);
        let mut ok = true;
        for o in &ds.observations {
            match eval_distance_p(ds.model_of(o), theta, &o.x_hat, p) {
                Ok(d) => losses.push(d),
                Err(Error::ForwardUnbounded) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !ok {
            continue;
        }
        let mut sorted = losses.clone();
        sorted.sort_by(f64::total_cmp);
        let tau = sorted[k - 1];
        if best.as_ref().is_none_or(|(_, bt, _)| tau < *bt - 1e-12) {
            best = Some((theta.clone(), tau, losses));
        }
    }
    let (theta, _, losses) = best.ok_or(Error::EmptyNet)?;
    let max_loss = losses.iter().cloned().fold(0.0f64, f64::max);
    if max_loss > cfg.big_m - 1.0 {
        return Err(Error::BigMViolation(max_loss));
    }
    // Selection MILP at θ*: min τ with τ + M(1−π_i) ≥ ℓ_i, Σπ ≥ ⌈Nχ⌉.
    let mut b = LpBuilder::new();
    let tau = b.add_var(1.0, Some(0.0), None);
    let pis: Vec<usize> = (0..n_obs).map(|_| b.add_binary_var(0.0)).collect();
    for (i, &l) in losses.iter().enumerate() {
        b.add_row(
            vec![(tau, 1.0), (pis[i], -cfg.big_m)],
            RowSense::Ge,
            l - cfg.big_m,
        );
    }
    b.add_row(
        pis.iter().map(|&v| (v, 1.0)).collect(),
        RowSense::Ge,
        k as f64,
    );
    let sol = b.solve_milp();
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!(
            "quantile selection MILP ended {:?}",
            sol.status
        )));
    }
    let mut res = EstimationResult {
        theta,
        objective: sol.objective.max(0.0),
        per_obs_loss: losses,
        duals: vec![],
        status: risk_status(space),
        diagnostics: Default::default(),
    }
    .with_diag("net_size", net.len() as f64)
    .with_diag("coverage_count", k as f64);
    for (i, &v) in pis.iter().enumerate() {
        res = res.with_diag(&format!("selected_{i}"), sol.x[v].round());
    }
    Ok(res)
}

/// Collapse per-observation losses into a scalar risk.
pub fn aggregate_risk(losses: &[f64], weights: Option<&[f64]>, risk: &RiskSpec) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::InvalidInput("no losses to aggregate".into()));
    }
    let ones;
    let w: &[f64] = match weights {
        Some(w) => {
            if w.len() != losses.len() {
                return Err(Error::DimensionMismatch("weights vs losses".into()));
            }
            w
        }
        None => {
            ones = vec![1.0; losses.len()];
            &ones
        }
    };
    let wt: f64 = w.iter().sum();
    if !(wt > 0.0) {
        return Err(Error::InvalidInput("weights must sum > 0".into()));
    }
    match *risk {
        RiskSpec::Expected => Ok(losses.iter().zip(w).map(|(&l, &wi)| wi * l).sum::<f64>() / wt),
        RiskSpec::Cvar { alpha } => {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::InvalidInput("CVaR level must lie in (0, 1]".into()));
            }
            // The optimal threshold is attained at one of the losses.
            let mut best = f64::INFINITY;
            for &t in losses {
                let tail: f64 = losses
                    .iter()
                    .zip(w)
                    .map(|(&l, &wi)| wi * (l - t).max(0.0))
                    .sum();
                best = best.min(t + tail / (alpha * wt));
            }
            Ok(best)
        }
        RiskSpec::Var { chi } => {
            if !(chi > 0.0 && chi <= 1.0) {
                return Err(Error::InvalidInput("VaR level must lie in (0, 1]".into()));
            }
            let mut pairs: Vec<(f64, f64)> = losses.iter().cloned().zip(w.iter().cloned()).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut cum = 0.0;
            for (l, wi) in &pairs {
                cum += wi;
                if cum >= chi * wt - 1e-12 {
                    return Ok(*l);
                }
            }
            Ok(pairs.last().unwrap().0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Normalization, Observation, Sense, VarKind};

    fn square() -> LinearForwardModel {
        LinearForwardModel::canonical(
            vec![0.0, 0.0],
            vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
            ],
            vec![0.0, 0.0, -1.0, -1.0],
        )
    }

    fn halfplane() -> LinearForwardModel {
        LinearForwardModel::canonical(
            vec![0.0, 0.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            vec![0.0, 0.0, 1.0],
        )
    }

    /// [0,5]×[2,5] box with a displaced observation outside it.
    fn rectangle() -> LinearForwardModel {
        LinearForwardModel::canonical(
            vec![0.0, 0.0],
            vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
            vec![0.0, -5.0, 2.0, -5.0],
        )
    }

    fn obs(x: Vec<f64>) -> Observation {
        Observation {
            x_hat: x,
            instance: 0,
            weight: 1.0,
        }
    }

    fn simplex_space(d: usize) -> ParameterSpace {
        ParameterSpace::unit_simplex(d, vec![0.0; d], NormP::One)
    }

    #[test]
    fn aso_gap_on_square() {
        let m = square();
        assert!((eval_aso(&m, &[1.0, 2.0], &[1.0, 1.0]).unwrap() - 3.0).abs() < 1e-9);
        assert!(eval_aso(&m, &[1.0, 2.0], &[0.0, 0.0]).unwrap() < 1e-9);
    }

    #[test]
    fn aso_two_vertices_balance_theta() {
        let ds = Dataset {
            observations: vec![obs(vec![1.0, 0.0]), obs(vec![0.0, 1.0])],
            models: vec![halfplane()],
            shared_region: true,
        };
        let res = estimate_aso(&ds, &simplex_space(2)).unwrap();
        assert!(res.objective < 1e-8);
        assert!((res.theta[0] - 0.5).abs() < 1e-7);
        assert!((res.theta[1] - 0.5).abs() < 1e-7);
        assert!(res.per_obs_loss.iter().all(|&l| l < 1e-7));
        assert_eq!(res.status, EstStatus::Optimal);
    }

    #[test]
    fn aso_interior_observation_pays_half() {
        // θᵀ(1,1) = 1 on the simplex; min over the region is min(θ₁,θ₂),
        // so the best mean gap is 1 − 0.5 = 0.5 at θ = (½, ½).
        let ds = Dataset {
            observations: vec![obs(vec![1.0, 1.0])],
            models: vec![halfplane()],
            shared_region: true,
        };
        let res = estimate_aso(&ds, &simplex_space(2)).unwrap();
        assert!((res.objective - 0.5).abs() < 1e-7);
        let direct = eval_aso(&halfplane(), &res.theta, &[1.0, 1.0]).unwrap();
        assert!((res.per_obs_loss[0] - direct).abs() < 1e-7);
    }

    #[test]
    fn aso_flags_zero_admissible_space() {
        let mut space = ParameterSpace::free(2, vec![0.0; 2], NormP::One);
        space.objective_mode = ObjectiveMode::Zero;
        let ds = Dataset {
            observations: vec![obs(vec![1.0, 0.0])],
            models: vec![halfplane()],
            shared_region: true,
        };
        let res = estimate_aso(&ds, &space).unwrap();
        assert_eq!(res.status, EstStatus::Degenerate);
        assert!(res.objective < 1e-9);
    }

    #[test]
    fn aso_respects_max_sense() {
        // Max θᵀx over the unit square: x̂ = (1,1) is optimal for θ ≥ 0.
        let mut m = square();
        m.sense = Sense::Max;
        assert!(eval_aso(&m, &[1.0, 2.0], &[1.0, 1.0]).unwrap() < 1e-9);
        assert!((eval_aso(&m, &[1.0, 2.0], &[0.0, 0.0]).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn rso_requires_positive_rhs() {
        assert!(matches!(
            eval_rso(&halfplane(), &[0.5, 0.5], &[1.0, 0.0]),
            Err(Error::NormalizationRequired(_))
        ));
    }

    #[test]
    fn rso_recovers_ratio_minimizer() {
        // Region {x ≥ (1,1)}; x̂ = (2,1). Ratio loss θ₁/(θ₁+θ₂) vanishes
        // only as θ₁ → 0; the dual normalization picks θ = (0, 1).
        let model = LinearForwardModel::canonical(
            vec![0.0, 0.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![1.0, 1.0],
        );
        let mut space = ParameterSpace::free(2, vec![0.0; 2], NormP::One);
        space.lower = vec![Some(0.0), Some(0.0)];
        let ds = Dataset {
            observations: vec![obs(vec![2.0, 1.0])],
            models: vec![model.clone()],
            shared_region: true,
        };
        let res = estimate_rso(&ds, &space).unwrap();
        assert!(res.objective < 1e-7);
        assert!(res.theta[0].abs() < 1e-7);
        assert!((res.theta[1] - 1.0).abs() < 1e-7);
        assert!(eval_rso(&model, &res.theta, &[2.0, 1.0]).unwrap() < 1e-7);
    }

    #[test]
    fn distance_is_discontinuous_across_cost_tilt() {
        // Nearby parameters select opposite corners of the rectangle: the
        // displaced point (5.5, 4) is ~1.118 from (5,5) but ~5.590 from (0,5).
        let m = rectangle();
        let x_hat = [5.5, 4.0];
        let d_right = eval_distance(&m, &[-5e-4, -1.0], &x_hat).unwrap();
        let d_left = eval_distance(&m, &[5e-4, -1.0], &x_hat).unwrap();
        assert!((d_right - 1.25f64.sqrt()).abs() < 1e-3, "{d_right}");
        assert!((d_left - 31.25f64.sqrt()).abs() < 1e-3, "{d_left}");
    }

    #[test]
    fn distance_facet_search_picks_nearest_facet() {
        let ds = Dataset {
            observations: vec![obs(vec![5.5, 4.0])],
            models: vec![rectangle()],
            shared_region: true,
        };
        let space = ParameterSpace::free(2, vec![0.0; 2], NormP::One);
        let res = estimate_distance(&ds, &space, &DataDrivenConfig::default()).unwrap();
        // Nearest facet is x₁ = 5, at distance 0.5, normal (−1, 0).
        assert!((res.objective - 0.5).abs() < 1e-6, "{}", res.objective);
        assert!((res.theta[0] + 1.0).abs() < 1e-9);
        assert!(res.theta[1].abs() < 1e-9);
    }

    #[test]
    fn distance_net_finds_zero_loss_direction() {
        // x̂ sits mid-left-edge of the square: only θ = (1, 0) makes the
        // whole edge optimal.
        let ds = Dataset {
            observations: vec![obs(vec![0.0, 0.5])],
            models: vec![square()],
            shared_region: false,
        };
        let res = estimate_distance(&ds, &simplex_space(2), &DataDrivenConfig::default()).unwrap();
        assert!(res.objective < 1e-3, "{}", res.objective);
        assert!((res.theta[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn distance_p_norms_on_square() {
        // X*(θ=(1,0)) is the left edge; (1, 0.5) is 1 away in both norms.
        let m = square();
        let d1 = eval_distance_p(&m, &[1.0, 0.0], &[1.0, 0.5], NormP::One).unwrap();
        let di = eval_distance_p(&m, &[1.0, 0.0], &[1.0, 0.5], NormP::Inf).unwrap();
        assert!((d1 - 1.0).abs() < 1e-7);
        assert!((di - 1.0).abs() < 1e-7);
        // (0.9, 0.9): 1-norm distance 0.9, ∞-norm 0.9 (shift x₁ only).
        let d2 = eval_distance_p(&m, &[1.0, 0.0], &[0.9, 0.9], NormP::One).unwrap();
        assert!((d2 - 0.9).abs() < 1e-7);
    }

    #[test]
    fn vi_matches_aso_for_linear_objectives() {
        let lin = halfplane();
        let conv = ConvexForwardModel {
            objective: ObjectiveSpec::Linear,
            a: lin.a.clone(),
            b: lin.b.clone(),
        };
        for theta in [[0.3, 0.7], [1.0, 0.0], [0.5, 0.5]] {
            for x_hat in [[1.0, 0.0], [1.0, 1.0], [0.25, 0.75]] {
                let a = eval_aso(&lin, &theta, &x_hat).unwrap();
                let v = eval_vi(&conv, &theta, &x_hat).unwrap();
                assert!((a - v).abs() < 1e-9, "aso {a} vs vi {v}");
            }
        }
    }

    #[test]
    fn vi_estimator_balances_two_vertices() {
        let lin = halfplane();
        let conv = ConvexForwardModel {
            objective: ObjectiveSpec::Linear,
            a: lin.a,
            b: lin.b,
        };
        let ds = Dataset {
            observations: vec![obs(vec![1.0, 0.0]), obs(vec![0.0, 1.0])],
            models: vec![conv],
            shared_region: true,
        };
        let res = estimate_vi(&ds, &simplex_space(2)).unwrap();
        assert!(res.objective < 1e-8);
        assert!((res.theta[0] - 0.5).abs() < 1e-7);
    }

    fn projection_model() -> ConvexForwardModel {
        // ½‖x‖² − θᵀx over [0,1]².
        ConvexForwardModel {
            objective: ObjectiveSpec::Quadratic {
                phi: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                psi: vec![0.0, 0.0],
            },
            a: vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
            ],
            b: vec![0.0, 0.0, -1.0, -1.0],
        }
    }

    #[test]
    fn kkt_interior_observation_recovers_theta() {
        let ds = Dataset {
            observations: vec![obs(vec![0.5, 0.5])],
            models: vec![projection_model()],
            shared_region: true,
        };
        let space = ParameterSpace::free(2, vec![0.0; 2], NormP::One);
        let res = estimate_kkt(&ds, &space, NormP::One).unwrap();
        assert!(res.objective < 1e-8);
        assert!((res.theta[0] - 0.5).abs() < 1e-7);
        assert!((res.theta[1] - 0.5).abs() < 1e-7);
        assert!(eval_kkt(&projection_model(), &res.theta, &[0.5, 0.5], NormP::One).unwrap() < 1e-8);
    }

    #[test]
    fn kkt_boundary_uses_active_multiplier() {
        // x̂ = (0, 0.5): row x₁ ≥ 0 is active, so θ₁ = −λ may go negative
        // at zero loss. Pin θ₁ = −2 and check λ picks up the slack.
        let mut space = ParameterSpace::free(2, vec![0.0; 2], NormP::One);
        space.eq.push((vec![1.0, 0.0], -2.0));
        let ds = Dataset {
            observations: vec![obs(vec![0.0, 0.5])],
            models: vec![projection_model()],
            shared_region: true,
        };
        let res = estimate_kkt(&ds, &space, NormP::One).unwrap();
        assert!(res.objective < 1e-7, "{}", res.objective);
        assert!((res.theta[0] + 2.0).abs() < 1e-7);
        assert!((res.theta[1] - 0.5).abs() < 1e-7);
        assert!((res.duals[0][0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn kkt_rejects_infeasible_observation() {
        let ds = Dataset {
            observations: vec![obs(vec![2.0, 2.0])],
            models: vec![projection_model()],
            shared_region: true,
        };
        let space = ParameterSpace::free(2, vec![0.0; 2], NormP::One);
        assert!(matches!(
            estimate_kkt(&ds, &space, NormP::One),
            Err(Error::ObservationInfeasible(_))
        ));
    }

    #[test]
    fn var_excludes_outliers() {
        // Three observations on the left edge (zero loss at θ = (1,0)) and
        // two displaced ones; 60% coverage leaves the outliers out.
        let ds = Dataset {
            observations: vec![
                obs(vec![0.0, 0.2]),
                obs(vec![0.0, 0.5]),
                obs(vec![0.0, 0.8]),
                obs(vec![1.0, 0.5]),
                obs(vec![0.9, 0.9]),
            ],
            models: vec![square()],
            shared_region: true,
        };
        let cfg = DataDrivenConfig::default();
        let res = estimate_var(&ds, &simplex_space(2), 0.6, NormP::One, &cfg).unwrap();
        assert!(res.objective < 1e-6, "{}", res.objective);
        assert!((res.theta[0] - 1.0).abs() < 1e-9);
        for i in 0..3 {
            assert_eq!(res.diagnostics[&format!("selected_{i}")], 1.0);
        }
        for i in 3..5 {
            assert_eq!(res.diagnostics[&format!("selected_{i}")], 0.0);
        }
    }

    #[test]
    fn var_full_coverage_is_minimax_over_net() {
        let ds = Dataset {
            observations: vec![obs(vec![0.0, 0.5]), obs(vec![1.0, 0.5])],
            models: vec![square()],
            shared_region: true,
        };
        let space = simplex_space(2);
        let cfg = DataDrivenConfig::default();
        let res = estimate_var(&ds, &space, 1.0, NormP::One, &cfg).unwrap();
        // Independent minimax over the same net.
        let net = oracles::lattice_net(&space, cfg.delta, cfg.net_cap).unwrap();
        let mut best = f64::INFINITY;
        for theta in &net {
            let worst = ds
                .observations
                .iter()
                .map(|o| eval_distance_p(&ds.models[0], theta, &o.x_hat, NormP::One).unwrap())
                .fold(0.0f64, f64::max);
            best = best.min(worst);
        }
        assert!((res.objective - best).abs() < 1e-6);
    }

    #[test]
    fn risk_aggregation_arithmetic() {
        let l = [1.0, 2.0, 3.0, 4.0];
        let e = aggregate_risk(&l, None, &RiskSpec::Expected).unwrap();
        assert!((e - 2.5).abs() < 1e-12);
        let c = aggregate_risk(&l, None, &RiskSpec::Cvar { alpha: 0.5 }).unwrap();
        assert!((c - 3.5).abs() < 1e-12);
        let c1 = aggregate_risk(&l, None, &RiskSpec::Cvar { alpha: 1.0 }).unwrap();
        assert!((c1 - e).abs() < 1e-12);
        let v = aggregate_risk(&l, None, &RiskSpec::Var { chi: 0.75 }).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        let we = aggregate_risk(&l, Some(&[3.0, 1.0, 0.0, 0.0]), &RiskSpec::Expected).unwrap();
        assert!((we - 1.25).abs() < 1e-12);
    }

    #[test]
    fn zero_loss_iff_observation_is_optimal() {
        let m = square();
        let thetas = [[1.0, 0.0], [0.3, 0.7], [0.5, 0.5]];
        let points = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.5, 0.5], [0.0, 0.3]];
        for theta in &thetas {
            for p in &points {
                let loss = eval_aso(&m, theta, p).unwrap();
                let (feasible, _) = oracles::verify_inverse_feasible(&m, theta, p, 1e-6);
                assert_eq!(loss < 1e-6, feasible, "θ={theta:?} x̂={p:?}");
            }
        }
    }

    #[test]
    fn estimators_reject_integer_models() {
        let mut m = square();
        m.integrality = vec![VarKind::Integer; 2];
        let ds = Dataset {
            observations: vec![obs(vec![0.0, 0.0])],
            models: vec![m],
            shared_region: true,
        };
        assert!(matches!(
            estimate_aso(&ds, &simplex_space(2)),
            Err(Error::UnsupportedCombination(_))
        ));
    }

    #[test]
    fn distance_facet_search_outside_right_edge() {
        // Observations clustered just beyond x₁ = 1: that facet wins with
        // mean distance 0.1 and θ* its normalized row.
        let ds = Dataset {
            observations: vec![obs(vec![1.1, 0.5])],
            models: vec![square()],
            shared_region: true,
        };
        let space = ParameterSpace::free(2, vec![0.0; 2], NormP::One);
        let res = estimate_distance(&ds, &space, &DataDrivenConfig::default()).unwrap();
        assert!((res.objective - 0.1).abs() < 1e-6, "{}", res.objective);
        assert!((res.theta[0] + 1.0).abs() < 1e-9 && res.theta[1].abs() < 1e-9);
    }

    #[test]
    fn distance_vertex_observation_ties_to_lowest_row() {
        // (0,0) lies on both facets x₁ ≥ 0 (row 0) and x₂ ≥ 0 (row 1) at
        // zero loss; the tie resolves to the lowest row index.
        let ds = Dataset {
            observations: vec![obs(vec![0.0, 0.0])],
            models: vec![square()],
            shared_region: true,
        };
        let space = ParameterSpace::free(2, vec![0.0; 2], NormP::One);
        let res = estimate_distance(&ds, &space, &DataDrivenConfig::default()).unwrap();
        assert!(res.objective < 1e-6);
        assert_eq!(res.diagnostics["row"], 0.0);
        assert!((res.theta[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rso_cone_vertex_attains_zero() {
        // X = {x₁+x₂ ≥ 2, 3x₁+x₂ ≥ 3, x₁+3x₂ ≥ 3}, x̂ = (0.5, 1.5) is a
        // vertex; a cost in its normal cone scaled to dual value 1 gives
        // zero ratio loss.
        let model = LinearForwardModel::canonical(
            vec![0.0, 0.0],
            vec![vec![1.0, 1.0], vec![3.0, 1.0], vec![1.0, 3.0]],
            vec![2.0, 3.0, 3.0],
        );
        let mut space = ParameterSpace::free(2, vec![0.0; 2], NormP::One);
        space.lower = vec![Some(0.0), Some(0.0)];
        let ds = Dataset {
            observations: vec![obs(vec![0.5, 1.5])],
            models: vec![model.clone()],
            shared_region: true,
        };
        let res = estimate_rso(&ds, &space).unwrap();
        assert!(res.objective < 1e-7, "{}", res.objective);
        assert!(eval_rso(&model, &res.theta, &[0.5, 1.5]).unwrap() < 1e-7);
    }

    #[test]
    fn vi_quadratic_interior_recovers_theta() {
        // ½‖x‖² − θᵀx over [0,1]²: an interior observation has zero
        // first-order gap only when the gradient vanishes, i.e. θ = x̂.
        let ds = Dataset {
            observations: vec![obs(vec![0.2, 0.7])],
            models: vec![projection_model()],
            shared_region: true,
        };
        let space = ParameterSpace::free(2, vec![0.0; 2], NormP::One);
        let res = estimate_vi(&ds, &space).unwrap();
        assert!(res.objective < 1e-8);
        assert!((res.theta[0] - 0.2).abs() < 1e-7);
        assert!((res.theta[1] - 0.7).abs() < 1e-7);
    }

    #[test]
    fn lattice_net_respects_normalization() {
        let mut space = simplex_space(2);
        space.normalization = Normalization::L1Sphere;
        let net = oracles::lattice_net(&space, 0.25, 10_000).unwrap();
        assert!(!net.is_empty());
        assert!(net
            .iter()
            .all(|t| (linalg::norm_1(t) - 1.0).abs() < 1e-9 && t.iter().all(|&v| v >= -1e-12)));
    }
}
