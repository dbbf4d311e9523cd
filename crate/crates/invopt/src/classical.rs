//! Classical inverse estimators: inverse-feasibility of the observation is
//! enforced as a hard constraint and the prior-distance objective h(θ) is
//! minimized over Θ. Covers LP objective estimation (complementary-slackness
//! and strong-duality forms), joint objective/RHS recovery, constraint
//! estimation, inverse MILP via cutting planes, inverse MDP rewards,
//! inverse optimal value, partial inverse LP, and KKT-based inverse for
//! smooth convex objectives.

use crate::error::{Error, Result};
use crate::linalg;
use crate::master::{self, MasterOut};
use crate::model::{
    canonical_with_sign, canonicalize, ConvexForwardModel, EstStatus, EstimationResult,
    LinearForwardModel, NormP, ObjectiveMode, ParameterSpace, RowSense,
};
use crate::oracles;
use crate::solver::{self, LpBuilder};

/// Knobs shared by the classical estimators.
#[derive(Debug, Clone)]
pub struct ClassicalConfig {
    /// Slack below which a constraint counts as active at x̂.
    pub activity_tol: f64,
    /// Initial big-M for complementarity linearizations.
    pub big_m: f64,
    /// Automatic ×10 big-M retries before reporting BigMViolation.
    pub big_m_retries: usize,
    /// Optimality-gap tolerance for forward re-solve certification.
    pub verify_tol: f64,
    /// Cutting-plane iteration cap.
    pub cut_cap: usize,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        ClassicalConfig {
            activity_tol: 1e-7,
            big_m: 1e4,
            big_m_retries: 3,
            verify_tol: 1e-6,
            cut_cap: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpObjectiveMode {
    /// Complementary slackness: `(Ax̂ − b)ᵀλ = 0`.
    Cs,
    /// Strong duality: `θᵀx̂ = bᵀλ`.
    Sd,
}

fn check_observation(model: &LinearForwardModel, x_hat: &[f64], tol: f64) -> Result<()> {
    if x_hat.len() != model.num_vars() {
        return Err(Error::DimensionMismatch(
            "observation length vs model variables".into(),
        ));
    }
    let v = model.feasibility_violation(x_hat);
    if v > tol {
        return Err(Error::ObservationInfeasible(v));
    }
    Ok(())
}

fn finish(space: &ParameterSpace, out: MasterOut) -> EstimationResult {
    EstimationResult {
        theta: out.theta.clone(),
        objective: out.objective,
        per_obs_loss: vec![],
        duals: vec![],
        status: EstStatus::Optimal,
        diagnostics: Default::default(),
    }
    .with_diag("h", space.objective_value(&out.theta))
    .with_diag("piece", out.piece as f64)
}

/// Estimate the cost vector of a linear forward model so the observed
/// decision is optimal, via dual feasibility plus either complementary
/// slackness or strong duality.
pub fn estimate_lp_objective(
    model: &LinearForwardModel,
    x_hat: &[f64],
    space: &ParameterSpace,
    mode: LpObjectiveMode,
    cfg: &ClassicalConfig,
) -> Result<EstimationResult> {
    let (model, sign) = canonical_with_sign(model)?;
    check_observation(&model, x_hat, cfg.activity_tol)?;
    let m = model.num_rows();
    let n = model.num_vars();
    if space.dim != n {
        return Err(Error::DimensionMismatch("space dim vs model vars".into()));
    }
    let slack: Vec<f64> = linalg::mat_vec(&model.a, x_hat)
        .iter()
        .zip(&model.b)
        .map(|(ax, b)| ax - b)
        .collect();
    let mut lambda_vars: Vec<usize> = vec![];
    let out = master::solve_master(space, false, |b, theta, _| {
        let lambda: Vec<usize> = (0..m).map(|_| b.add_var(0.0, Some(0.0), None)).collect();
        lambda_vars = lambda.clone();
        // Dual feasibility Aᵀλ = sign·θ.
        for j in 0..n {
            let mut terms: Vec<(usize, f64)> = lambda
                .iter()
                .enumerate()
                .filter(|(i, _)| model.a[*i][j] != 0.0)
                .map(|(i, &lv)| (lv, model.a[i][j]))
                .collect();
            terms.push((theta[j], -sign));
            b.add_row(terms, RowSense::Eq, 0.0);
        }
        match mode {
            LpObjectiveMode::Cs => {
                // (Ax̂ − b)ᵀλ = 0, linear since x̂ is fixed.
                let terms: Vec<(usize, f64)> = lambda
                    .iter()
                    .zip(&slack)
                    .filter(|(_, &s)| s != 0.0)
                    .map(|(&lv, &s)| (lv, s))
                    .collect();
                if !terms.is_empty() {
                    b.add_row(terms, RowSense::Eq, 0.0);
                }
            }
            LpObjectiveMode::Sd => {
                // sign·θᵀx̂ = bᵀλ.
                let mut terms: Vec<(usize, f64)> = theta
                    .iter()
                    .zip(x_hat)
                    .map(|(&tv, &x)| (tv, sign * x))
                    .collect();
                terms.extend(lambda.iter().zip(&model.b).map(|(&lv, &bi)| (lv, -bi)));
                b.add_row(terms, RowSense::Eq, 0.0);
            }
        }
        Ok(())
    })?;
    let out = out.ok_or(Error::InverseInfeasible)?;
    let duals: Vec<f64> = lambda_vars.iter().map(|&v| out.solution.x[v]).collect();
    let cost = linalg::scale(&out.theta, sign);
    let (_, gap) = oracles::verify_inverse_feasible(&model, &cost, x_hat, cfg.verify_tol);
    let mut res = finish(space, out);
    res.duals = vec![duals];
    Ok(res.with_diag("forward_gap", gap))
}

/// Jointly estimate the objective θ and right-hand side ψ of a linear
/// forward model (constraint matrix known), via a big-M complementarity
/// MILP. The space covers the stacked vector (θ, ψ).
pub fn estimate_lp_joint(
    model: &LinearForwardModel,
    x_hat: &[f64],
    space: &ParameterSpace,
    cfg: &ClassicalConfig,
) -> Result<EstimationResult> {
    let (model, sign) = canonical_with_sign(model)?;
    let m = model.num_rows();
    let n = model.num_vars();
    if space.dim != n + m {
        return Err(Error::DimensionMismatch(
            "joint space must cover (θ, ψ): dim n + m".into(),
        ));
    }
    if x_hat.len() != n {
        return Err(Error::DimensionMismatch("observation length".into()));
    }
    let ax: Vec<f64> = linalg::mat_vec(&model.a, x_hat);
    let mut big_m = cfg.big_m;
    for attempt in 0..=cfg.big_m_retries {
        let mut lambda_vars: Vec<usize> = vec![];
        let out = master::solve_master(space, true, |b, tp, _| {
            let theta = &tp[..n];
            let psi = &tp[n..];
            let lambda: Vec<usize> = (0..m).map(|_| b.add_var(0.0, Some(0.0), None)).collect();
            lambda_vars = lambda.clone();
            let z: Vec<usize> = (0..m).map(|_| b.add_binary_var(0.0)).collect();
            for i in 0..m {
                // Feasibility of x̂: aᵢᵀx̂ ≥ ψᵢ.
                b.add_row(vec![(psi[i], -1.0)], RowSense::Ge, -ax[i]);
                // Slack gated by zᵢ: aᵢᵀx̂ − ψᵢ ≤ M·zᵢ.
                b.add_row(vec![(psi[i], -1.0), (z[i], -big_m)], RowSense::Le, -ax[i]);
                // λᵢ ≤ M(1 − zᵢ).
                b.add_row(vec![(lambda[i], 1.0), (z[i], big_m)], RowSense::Le, big_m);
            }
            for j in 0..n {
                let mut terms: Vec<(usize, f64)> = lambda
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| model.a[*i][j] != 0.0)
                    .map(|(i, &lv)| (lv, model.a[i][j]))
                    .collect();
                terms.push((theta[j], -sign));
                b.add_row(terms, RowSense::Eq, 0.0);
            }
            Ok(())
        })?;
        let out = out.ok_or(Error::InverseInfeasible)?;
        let duals: Vec<f64> = lambda_vars.iter().map(|&v| out.solution.x[v]).collect();
        let psi_star = out.theta[n..].to_vec();
        let saturated = duals.iter().any(|&l| l >= big_m - 1e-6)
            || ax
                .iter()
                .zip(&psi_star)
                .any(|(&a, &p)| a - p >= big_m - 1e-6);
        if saturated {
            if attempt == cfg.big_m_retries {
                return Err(Error::BigMViolation(big_m));
            }
            big_m *= 10.0;
            continue;
        }
        let theta_star = linalg::scale(&out.theta[..n], sign);
        let mut verify = model.clone();
        verify.b = psi_star;
        let (_, gap) = oracles::verify_inverse_feasible(&verify, &theta_star, x_hat, cfg.verify_tol);
        let mut res = finish(space, out);
        res.duals = vec![duals];
        return Ok(res.with_diag("forward_gap", gap).with_diag("big_m", big_m));
    }
    unreachable!()
}

/// Estimate a constraint matrix by perturbing the single nearest facet of
/// the prior region so the observation becomes feasible and optimal for the
/// known cost. Returns the flattened perturbed matrix as θ; the chosen row
/// and perturbation norm are in the diagnostics.
pub fn estimate_constraint_matrix(
    model: &LinearForwardModel,
    x_hat: &[f64],
    p: NormP,
    cfg: &ClassicalConfig,
) -> Result<EstimationResult> {
    let model = canonicalize(model)?;
    let m = model.num_rows();
    let n = model.num_vars();
    if x_hat.len() != n {
        return Err(Error::DimensionMismatch("observation length".into()));
    }
    let c = &model.cost;
    let ax = linalg::mat_vec(&model.a, x_hat);
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    for j in 0..m {
        // All rows except j must already hold at x̂.
        let others_ok = (0..m).all(|i| i == j || ax[i] >= model.b[i] - cfg.activity_tol);
        if !others_ok {
            continue;
        }
        let active: Vec<usize> = (0..m)
            .filter(|&i| i != j && ax[i] - model.b[i] <= cfg.activity_tol)
            .collect();
        if let Some((phi, norm)) = best_row_perturbation(&model, x_hat, j, &active, c, p, cfg) {
            // Certify by forward re-solve on the perturbed region.
            let mut cand = model.clone();
            cand.a[j] = phi.clone();
            let (ok, _) = oracles::verify_inverse_feasible(&cand, c, x_hat, cfg.verify_tol);
            if ok
                && best
                    .as_ref()
                    .is_none_or(|(_, _, bn)| norm < bn - 1e-9)
            {
                best = Some((j, phi, norm));
            }
        }
    }
    let (j, phi, norm) = best.ok_or(Error::NoCandidateFacet)?;
    let mut full = Vec::with_capacity(m * n);
    for (i, row) in model.a.iter().enumerate() {
        if i == j {
            full.extend_from_slice(&phi);
        } else {
            full.extend_from_slice(row);
        }
    }
    Ok(EstimationResult::optimal(full, norm)
        .with_diag("row", j as f64)
        .with_diag("perturbation_norm", norm))
}

/// Minimal-norm replacement φ for row j such that φᵀx̂ = bⱼ and x̂ is
/// optimal for cost c over the perturbed region. Optimality is encoded via
/// a dual certificate c = s·φ + Σ λᵢaᵢ over the active rows; the fractional
/// objective ‖φ − φ̂‖_p = ‖ρ/s − φ̂‖_p (with ρ = s·φ) is minimized by
/// bisection on feasibility LPs.
fn best_row_perturbation(
    model: &LinearForwardModel,
    x_hat: &[f64],
    j: usize,
    active: &[usize],
    c: &[f64],
    p: NormP,
    cfg: &ClassicalConfig,
) -> Option<(Vec<f64>, f64)> {
    let n = model.num_vars();
    let phi_hat = &model.a[j];
    // Case 1: x̂ supported by the other active rows alone (λⱼ = 0).
    // Then φ is only pinned to the hyperplane through x̂: a projection LP.
    if dual_certificate_without_row(model, active, c) {
        let mut b = LpBuilder::new();
        let phi: Vec<usize> = (0..n).map(|_| b.add_var(0.0, None, None)).collect();
        add_norm_objective(&mut b, &phi, phi_hat, p);
        let terms: Vec<(usize, f64)> = phi.iter().zip(x_hat).map(|(&v, &x)| (v, x)).collect();
        b.add_row(terms, RowSense::Eq, model.b[j]);
        let sol = b.solve();
        if sol.status == crate::solver::LpStatus::Optimal {
            let phi_v: Vec<f64> = phi.iter().map(|&v| sol.x[v]).collect();
            return Some((phi_v, sol.objective));
        }
    }
    // Case 2: row j supports x̂ (s > 0). Bisection on the norm bound t.
    let feasible_at = |t: f64| -> Option<(Vec<f64>, f64)> {
        let mut b = LpBuilder::new();
        let rho: Vec<usize> = (0..n).map(|_| b.add_var(0.0, None, None)).collect();
        let s = b.add_var(0.0, Some(1e-7), None);
        let lam: Vec<usize> = active.iter().map(|_| b.add_var(0.0, Some(0.0), None)).collect();
        // ρ + Σ λᵢ aᵢ = c.
        for k in 0..n {
            let mut terms = vec![(rho[k], 1.0)];
            for (li, &i) in lam.iter().zip(active) {
                if model.a[i][k] != 0.0 {
                    terms.push((*li, model.a[i][k]));
                }
            }
            b.add_row(terms, RowSense::Eq, c[k]);
        }
        // ρᵀx̂ = s·bⱼ  (φᵀx̂ = bⱼ scaled by s).
        let mut terms: Vec<(usize, f64)> = rho.iter().zip(x_hat).map(|(&v, &x)| (v, x)).collect();
        terms.push((s, -model.b[j]));
        b.add_row(terms, RowSense::Eq, 0.0);
        // ‖ρ − s·φ̂‖_p ≤ t·s.
        match p {
            NormP::One => {
                let us: Vec<usize> = (0..n).map(|_| b.add_var(0.0, Some(0.0), None)).collect();
                for k in 0..n {
                    b.add_row(
                        vec![(us[k], 1.0), (rho[k], -1.0), (s, phi_hat[k])],
                        RowSense::Ge,
                        0.0,
                    );
                    b.add_row(
                        vec![(us[k], 1.0), (rho[k], 1.0), (s, -phi_hat[k])],
                        RowSense::Ge,
                        0.0,
                    );
                }
                let mut cap: Vec<(usize, f64)> = us.iter().map(|&u| (u, -1.0)).collect();
                cap.push((s, t));
                b.add_row(cap, RowSense::Ge, 0.0);
            }
            NormP::Inf => {
                for k in 0..n {
                    b.add_row(
                        vec![(s, t + phi_hat[k]), (rho[k], -1.0)],
                        RowSense::Ge,
                        0.0,
                    );
                    b.add_row(
                        vec![(s, t - phi_hat[k]), (rho[k], 1.0)],
                        RowSense::Ge,
                        0.0,
                    );
                }
            }
        }
        let sol = b.solve();
        if sol.status != crate::solver::LpStatus::Optimal {
            return None;
        }
        let sv = sol.x[s];
        if sv < 1e-9 {
            return None;
        }
        let phi_v: Vec<f64> = rho.iter().map(|&v| sol.x[v] / sv).collect();
        let d = linalg::sub(&phi_v, phi_hat);
        let norm = match p {
            NormP::One => linalg::norm_1(&d),
            NormP::Inf => linalg::norm_inf(&d),
        };
        Some((phi_v, norm))
    };
    // Grow the norm bound until feasible, then bisect down.
    let mut hi = 1.0;
    let mut best = loop {
        match feasible_at(hi) {
            Some(b) => break b,
            None if hi < 1e8 => hi *= 4.0,
            None => return None,
        }
    };
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match feasible_at(mid) {
            Some(cand) => {
                hi = mid;
                if cand.1 < best.1 {
                    best = cand;
                }
            }
            None => lo = mid,
        }
        if hi - lo < 1e-10 * (1.0 + hi) {
            break;
        }
    }
    let _ = cfg;
    Some(best)
}

fn dual_certificate_without_row(model: &LinearForwardModel, active: &[usize], c: &[f64]) -> bool {
    let mut b = LpBuilder::new();
    let lam: Vec<usize> = active.iter().map(|_| b.add_var(0.0, Some(0.0), None)).collect();
    for k in 0..model.num_vars() {
        let terms: Vec<(usize, f64)> = lam
            .iter()
            .zip(active)
            .filter(|(_, &i)| model.a[i][k] != 0.0)
            .map(|(&lv, &i)| (lv, model.a[i][k]))
            .collect();
        b.add_row(terms, RowSense::Eq, c[k]);
    }
    b.solve().status == crate::solver::LpStatus::Optimal
}

fn add_norm_objective(b: &mut LpBuilder, vars: &[usize], center: &[f64], p: NormP) {
    match p {
        NormP::One => {
            for (&v, &c) in vars.iter().zip(center) {
                let u = b.add_var(1.0, Some(0.0), None);
                b.add_row(vec![(u, 1.0), (v, -1.0)], RowSense::Ge, -c);
                b.add_row(vec![(u, 1.0), (v, 1.0)], RowSense::Ge, c);
            }
        }
        NormP::Inf => {
            let u = b.add_var(1.0, Some(0.0), None);
            for (&v, &c) in vars.iter().zip(center) {
                b.add_row(vec![(u, 1.0), (v, -1.0)], RowSense::Ge, -c);
                b.add_row(vec![(u, 1.0), (v, 1.0)], RowSense::Ge, c);
            }
        }
    }
}

/// Feasibility-based constraint estimation: minimally perturb the prior
/// constraint system (Φ̂, ψ̂) so the observation becomes feasible. The
/// space covers the stacked vector (Φ row-major, ψ) and carries the prior
/// and norm; extra structure (e.g. freezing Φ) is expressed through the
/// space's equality rows.
pub fn estimate_constraints_feasibility(
    m_rows: usize,
    x_hat: &[f64],
    space: &ParameterSpace,
    _cfg: &ClassicalConfig,
) -> Result<EstimationResult> {
    let n = x_hat.len();
    if space.dim != m_rows * n + m_rows {
        return Err(Error::DimensionMismatch(
            "space must cover (Φ, ψ): dim m·n + m".into(),
        ));
    }
    let out = master::solve_master(space, false, |b, tp, _| {
        for i in 0..m_rows {
            // Φᵢᵀx̂ − ψᵢ ≥ 0.
            let mut terms: Vec<(usize, f64)> = (0..n)
                .filter(|&k| x_hat[k] != 0.0)
                .map(|k| (tp[i * n + k], x_hat[k]))
                .collect();
            terms.push((tp[m_rows * n + i], -1.0));
            b.add_row(terms, RowSense::Ge, 0.0);
        }
        Ok(())
    })?;
    let out = out.ok_or(Error::InverseInfeasible)?;
    Ok(finish(space, out))
}

/// Inverse mixed-integer LP by cutting planes: alternately solve the
/// forward MILP at the current θ and cut off parameters under which some
/// feasible point beats the observation.
pub fn estimate_milp_cutting_plane(
    model: &LinearForwardModel,
    x_hat: &[f64],
    space: &ParameterSpace,
    cfg: &ClassicalConfig,
) -> Result<EstimationResult> {
    let (model, sign) = canonical_with_sign(model)?;
    check_observation(&model, x_hat, cfg.activity_tol)?;
    if space.dim != model.num_vars() {
        return Err(Error::DimensionMismatch("space dim vs model vars".into()));
    }
    let mut cuts: Vec<Vec<f64>> = vec![];
    loop {
        if cuts.len() > cfg.cut_cap {
            return Err(Error::IterationLimit(format!(
                "cutting plane exceeded {} cuts",
                cfg.cut_cap
            )));
        }
        let out = master::solve_master(space, false, |b, theta, _| {
            for x_tilde in &cuts {
                // x̂ at least as good as x̃: sign·θᵀ(x̃ − x̂) ≥ 0.
                let terms: Vec<(usize, f64)> = theta
                    .iter()
                    .enumerate()
                    .map(|(k, &tv)| (tv, sign * (x_tilde[k] - x_hat[k])))
                    .filter(|(_, c)| c.abs() > 1e-12)
                    .collect();
                if !terms.is_empty() {
                    b.add_row(terms, RowSense::Ge, 0.0);
                }
            }
            Ok(())
        })?;
        let out = out.ok_or(Error::InverseInfeasible)?;
        let cost = linalg::scale(&out.theta, sign);
        let (opt_val, x_tilde) = solver::forward_value(&model, &cost)?;
        let hat_val = linalg::dot(&cost, x_hat);
        if hat_val <= opt_val + 1e-7 {
            let ncuts = cuts.len();
            return Ok(finish(space, out)
                .with_diag("cuts", ncuts as f64)
                .with_diag("forward_gap", hat_val - opt_val));
        }
        cuts.push(x_tilde);
    }
}

/// Estimate MDP rewards rendering an observed deterministic policy optimal:
/// Bellman inequalities with equality on the policy's actions.
pub fn estimate_mdp_rewards(
    mdp: &crate::model::MdpModel,
    policy: &[usize],
    cfg: &ClassicalConfig,
) -> Result<EstimationResult> {
    mdp.validate()?;
    let ns = mdp.n_states;
    let na = mdp.n_actions;
    if policy.len() != ns || policy.iter().any(|&a| a >= na) {
        return Err(Error::InvalidInput("policy must pick an action per state".into()));
    }
    let space = &mdp.reward_space;
    let out = master::solve_master(space, false, |b, theta, _| {
        let v: Vec<usize> = (0..ns).map(|_| b.add_var(0.0, None, None)).collect();
        for s in 0..ns {
            for a in 0..na {
                // v_s − γ Σ p(s'|s,a) v_s' − θ_{s,a} ⪰ 0, equality on π̂(s).
                let mut terms = vec![(v[s], 1.0)];
                for (sp, &pr) in mdp.transition[s][a].iter().enumerate() {
                    if pr != 0.0 {
                        if sp == s {
                            terms[0].1 -= mdp.gamma * pr;
                        } else {
                            terms.push((v[sp], -mdp.gamma * pr));
                        }
                    }
                }
                terms.push((theta[mdp.reward_index(s, a)], -1.0));
                let sense = if policy[s] == a { RowSense::Eq } else { RowSense::Ge };
                b.add_row(terms, sense, 0.0);
            }
        }
        Ok(())
    })?;
    let out = out.ok_or(Error::InverseInfeasible)?;
    // Certify: the policy's value matches the optimal value under θ*.
    let (v_opt, _) = oracles::mdp_value_iteration(mdp, &out.theta);
    let v_pi = oracles::mdp_policy_value(mdp, &out.theta, policy);
    let gap = linalg::norm_inf(&linalg::sub(&v_opt, &v_pi));
    if gap > cfg.verify_tol {
        return Err(Error::Solver(format!(
            "reward certificate failed value-iteration check (gap {gap:.3e})"
        )));
    }
    Ok(finish(space, out).with_diag("policy_value_gap", gap))
}

/// Estimate a cost vector whose forward optimal value equals a given
/// target, via a complementarity big-M MILP carrying both the dual
/// certificate (Aᵀλ = θ, bᵀλ = target) and a primal witness.
pub fn estimate_inverse_optimal_value(
    model: &LinearForwardModel,
    target: f64,
    space: &ParameterSpace,
    cfg: &ClassicalConfig,
) -> Result<EstimationResult> {
    let (model, sign) = canonical_with_sign(model)?;
    let m = model.num_rows();
    let n = model.num_vars();
    if space.dim != n {
        return Err(Error::DimensionMismatch("space dim vs model vars".into()));
    }
    // In the canonical min form the target value is sign·target.
    let target_c = sign * target;
    let mut big_m = cfg.big_m;
    let attach = |b: &mut LpBuilder, theta: &[usize], big_m: f64, exact: bool| -> (Vec<usize>, Vec<usize>, Option<usize>) {
        let lambda: Vec<usize> = (0..m).map(|_| b.add_var(0.0, Some(0.0), None)).collect();
        let x: Vec<usize> = (0..n).map(|_| b.add_var(0.0, None, None)).collect();
        let z: Vec<usize> = (0..m).map(|_| b.add_binary_var(0.0)).collect();
        for j in 0..n {
            let mut terms: Vec<(usize, f64)> = lambda
                .iter()
                .enumerate()
                .filter(|(i, _)| model.a[*i][j] != 0.0)
                .map(|(i, &lv)| (lv, model.a[i][j]))
                .collect();
            terms.push((theta[j], -sign));
            b.add_row(terms, RowSense::Eq, 0.0);
        }
        for i in 0..m {
            let terms: Vec<(usize, f64)> = x
                .iter()
                .zip(&model.a[i])
                .filter(|(_, &c)| c != 0.0)
                .map(|(&v, &c)| (v, c))
                .collect();
            b.add_row(terms.clone(), RowSense::Ge, model.b[i]);
            let mut gated = terms;
            gated.push((z[i], -big_m));
            b.add_row(gated, RowSense::Le, model.b[i]);
            b.add_row(vec![(lambda[i], 1.0), (z[i], big_m)], RowSense::Le, big_m);
        }
        let dual_value: Vec<(usize, f64)> = lambda
            .iter()
            .zip(&model.b)
            .filter(|(_, &bi)| bi != 0.0)
            .map(|(&lv, &bi)| (lv, bi))
            .collect();
        if exact {
            b.add_row(dual_value, RowSense::Eq, target_c);
            (lambda, x, None)
        } else {
            let g = b.add_var(1.0, Some(0.0), None);
            let mut lo = dual_value.clone();
            lo.push((g, 1.0));
            b.add_row(lo, RowSense::Ge, target_c);
            let mut hi = dual_value;
            hi.push((g, -1.0));
            b.add_row(hi, RowSense::Le, target_c);
            (lambda, x, Some(g))
        }
    };
    for attempt in 0..=cfg.big_m_retries {
        let mut lambda_vars: Vec<usize> = vec![];
        let mut x_vars: Vec<usize> = vec![];
        let out = master::solve_master(space, true, |b, theta, _| {
            let (l, x, _) = attach(b, theta, big_m, true);
            lambda_vars = l;
            x_vars = x;
            Ok(())
        })?;
        match out {
            Some(out) => {
                let duals: Vec<f64> = lambda_vars.iter().map(|&v| out.solution.x[v]).collect();
                let witness: Vec<f64> = x_vars.iter().map(|&v| out.solution.x[v]).collect();
                let slack: Vec<f64> = linalg::mat_vec(&model.a, &witness)
                    .iter()
                    .zip(&model.b)
                    .map(|(ax, bi)| ax - bi)
                    .collect();
                let saturated = duals.iter().any(|&l| l >= big_m - 1e-6)
                    || slack.iter().any(|&s| s >= big_m - 1e-6);
                if saturated {
                    if attempt == cfg.big_m_retries {
                        return Err(Error::BigMViolation(big_m));
                    }
                    big_m *= 10.0;
                    continue;
                }
                let cost = linalg::scale(&out.theta, sign);
                let (val, _) = solver::forward_value(&model, &cost)?;
                let mut res = finish(space, out);
                res.duals = vec![duals];
                return Ok(res.with_diag("value_gap", (val - target_c).abs()));
            }
            None => {
                // Report the minimal attainable gap to the target.
                let mut relaxed = space.clone();
                relaxed.objective_mode = ObjectiveMode::Zero;
                let gap_out = master::solve_master(&relaxed, true, |b, theta, _| {
                    attach(b, theta, big_m, false);
                    Ok(())
                })?;
                return match gap_out {
                    Some(g) => Err(Error::TargetUnattainable { gap: g.objective }),
                    None => Err(Error::InverseInfeasible),
                };
            }
        }
    }
    unreachable!()
}

/// Partial inverse LP: some decision components are pinned to observed
/// values; find θ and a completion x* that is feasible, matches the pinned
/// components, and is optimal under θ (big-M complementarity MILP).
pub fn estimate_partial_lp(
    model: &LinearForwardModel,
    fixed: &[(usize, f64)],
    space: &ParameterSpace,
    cfg: &ClassicalConfig,
) -> Result<EstimationResult> {
    let (model, sign) = canonical_with_sign(model)?;
    let m = model.num_rows();
    let n = model.num_vars();
    if space.dim != n {
        return Err(Error::DimensionMismatch("space dim vs model vars".into()));
    }
    if fixed.iter().any(|&(i, _)| i >= n) {
        return Err(Error::DimensionMismatch("fixed index out of range".into()));
    }
    // Completion feasibility first, for a precise error.
    {
        let mut b = LpBuilder::new();
        let x: Vec<usize> = (0..n).map(|_| b.add_var(0.0, None, None)).collect();
        for i in 0..m {
            let terms: Vec<(usize, f64)> = x
                .iter()
                .zip(&model.a[i])
                .filter(|(_, &c)| c != 0.0)
                .map(|(&v, &c)| (v, c))
                .collect();
            b.add_row(terms, RowSense::Ge, model.b[i]);
        }
        for &(i, val) in fixed {
            b.add_row(vec![(x[i], 1.0)], RowSense::Eq, val);
        }
        if b.solve().status != crate::solver::LpStatus::Optimal {
            return Err(Error::CompletionInfeasible);
        }
    }
    let mut big_m = cfg.big_m;
    for attempt in 0..=cfg.big_m_retries {
        let mut lambda_vars: Vec<usize> = vec![];
        let mut x_vars: Vec<usize> = vec![];
        let out = master::solve_master(space, true, |b, theta, _| {
            let lambda: Vec<usize> = (0..m).map(|_| b.add_var(0.0, Some(0.0), None)).collect();
            let x: Vec<usize> = (0..n).map(|_| b.add_var(0.0, None, None)).collect();
            let z: Vec<usize> = (0..m).map(|_| b.add_binary_var(0.0)).collect();
            lambda_vars = lambda.clone();
            x_vars = x.clone();
            for &(i, val) in fixed {
                b.add_row(vec![(x[i], 1.0)], RowSense::Eq, val);
            }
            for j in 0..n {
                let mut terms: Vec<(usize, f64)> = lambda
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| model.a[*i][j] != 0.0)
                    .map(|(i, &lv)| (lv, model.a[i][j]))
                    .collect();
                terms.push((theta[j], -sign));
                b.add_row(terms, RowSense::Eq, 0.0);
            }
            for i in 0..m {
                let terms: Vec<(usize, f64)> = x
                    .iter()
                    .zip(&model.a[i])
                    .filter(|(_, &c)| c != 0.0)
                    .map(|(&v, &c)| (v, c))
                    .collect();
                b.add_row(terms.clone(), RowSense::Ge, model.b[i]);
                let mut gated = terms;
                gated.push((z[i], -big_m));
                b.add_row(gated, RowSense::Le, model.b[i]);
                b.add_row(vec![(lambda[i], 1.0), (z[i], big_m)], RowSense::Le, big_m);
            }
            Ok(())
        })?;
        let out = out.ok_or(Error::InverseInfeasible)?;
        let duals: Vec<f64> = lambda_vars.iter().map(|&v| out.solution.x[v]).collect();
        let completion: Vec<f64> = x_vars.iter().map(|&v| out.solution.x[v]).collect();
        let slack: Vec<f64> = linalg::mat_vec(&model.a, &completion)
            .iter()
            .zip(&model.b)
            .map(|(ax, bi)| ax - bi)
            .collect();
        let saturated = duals.iter().any(|&l| l >= big_m - 1e-6)
            || slack.iter().any(|&s| s >= big_m - 1e-6);
        if saturated {
            if attempt == cfg.big_m_retries {
                return Err(Error::BigMViolation(big_m));
            }
            big_m *= 10.0;
            continue;
        }
        let cost = linalg::scale(&out.theta, sign);
        let (_, gap) =
            oracles::verify_inverse_feasible(&model, &cost, &completion, cfg.verify_tol);
        let mut res = finish(space, out);
        res.duals = vec![duals];
        res.diagnostics.insert("forward_gap".into(), gap);
        for (k, &v) in completion.iter().enumerate() {
            res.diagnostics.insert(format!("completion_{k}"), v);
        }
        return Ok(res);
    }
    unreachable!()
}

/// Inverse estimation for smooth convex forwards with θ-free constraints:
/// fix the active set from the observation and solve the KKT system as an
/// LP over (θ, λ_active).
pub fn estimate_convex_objective_kkt(
    model: &ConvexForwardModel,
    x_hat: &[f64],
    space: &ParameterSpace,
    cfg: &ClassicalConfig,
) -> Result<EstimationResult> {
    model.validate()?;
    let n = model.num_vars();
    if x_hat.len() != n {
        return Err(Error::DimensionMismatch("observation length".into()));
    }
    let viol = model.feasibility_violation(x_hat);
    if viol > cfg.activity_tol {
        return Err(Error::ObservationInfeasible(viol));
    }
    if space.dim != model.objective.theta_dim(n) {
        return Err(Error::DimensionMismatch("space dim vs objective family".into()));
    }
    let ax = linalg::mat_vec(&model.a, x_hat);
    let active: Vec<usize> = (0..model.b.len())
        .filter(|&i| ax[i] - model.b[i] <= cfg.activity_tol)
        .collect();
    let (g0, gmat) = model.objective.grad_affine(x_hat);
    let mut lambda_vars: Vec<usize> = vec![];
    let out = master::solve_master(space, false, |b, theta, _| {
        let lam: Vec<usize> = active.iter().map(|_| b.add_var(0.0, Some(0.0), None)).collect();
        lambda_vars = lam.clone();
        // Stationarity: g0 + G·θ − Σ_{i active} λᵢaᵢ = 0 (inactive λ are 0).
        for r in 0..n {
            let mut terms: Vec<(usize, f64)> = theta
                .iter()
                .zip(&gmat[r])
                .filter(|(_, &c)| c != 0.0)
                .map(|(&v, &c)| (v, c))
                .collect();
            for (li, &i) in lam.iter().zip(&active) {
                if model.a[i][r] != 0.0 {
                    terms.push((*li, -model.a[i][r]));
                }
            }
            b.add_row(terms, RowSense::Eq, -g0[r]);
        }
        Ok(())
    })?;
    let out = out.ok_or(Error::InverseInfeasible)?;
    let duals: Vec<f64> = lambda_vars.iter().map(|&v| out.solution.x[v]).collect();
    let mut res = finish(space, out);
    res.duals = vec![duals];
    Ok(res.with_diag("active_rows", active.len() as f64))
}
