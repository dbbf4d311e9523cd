//! Online inverse estimation: parameters are revised after every observed
//! decision using only that round's forward solve. Updates: projected
//! subgradient descent, multiplicative weights on the probability simplex,
//! and an implicit (proximal fixed-point) step. Average regret is measured
//! against the best fixed parameter in hindsight, obtained from the batch
//! mean-suboptimality estimator.

use serde::{Deserialize, Serialize};

use crate::datadriven;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    canonical_with_sign, Dataset, LinearForwardModel, Normalization, ParameterSpace,
};
use crate::solver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnlineMethod {
    /// Projected subgradient descent.
    Ogd,
    /// Multiplicative weights (simplex spaces only).
    Mwu,
    /// Proximal step solved by fixed-point iteration.
    Implicit,
}

#[derive(Debug, Clone)]
pub struct OnlineConfig {
    /// Base step size; round t uses η₀/√t.
    pub eta0: f64,
    /// Record the average regret every this many rounds (0: final only).
    pub record_every: usize,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            eta0: 1.0,
            record_every: 0,
        }
    }
}

/// Trajectory and regret accounting for one pass over a stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OnlineReport {
    /// θ₁, …, θ_{T+1} (initial iterate included).
    pub thetas: Vec<Vec<f64>>,
    /// Per-round suboptimality losses ℓ_t(θ_t).
    pub losses: Vec<f64>,
    /// (t, average regret after t rounds) at the recorded horizons.
    pub regret_curve: Vec<(usize, f64)>,
    /// Mean loss of the best fixed parameter in hindsight.
    pub batch_loss: f64,
    /// Final average regret: mean online loss minus `batch_loss`.
    pub avg_regret: f64,
}

/// Euclidean projection onto Θ. Supported shapes: the probability simplex
/// (1-norm normalization with θ ≥ 0) and pure box bounds.
pub fn project_theta(space: &ParameterSpace, v: &[f64]) -> Result<Vec<f64>> {
    space.check_dims()?;
    if v.len() != space.dim {
        return Err(Error::DimensionMismatch("projection input".into()));
    }
    if is_simplex(space) {
        return Ok(simplex_projection(v));
    }
    if space.normalization == Normalization::None && space.ineq.is_empty() && space.eq.is_empty() {
        return Ok(v
            .iter()
            .zip(space.lower.iter().zip(&space.upper))
            .map(|(&x, (lo, up))| {
                let mut y = x;
                if let Some(l) = lo {
                    y = y.max(*l);
                }
                if let Some(u) = up {
                    y = y.min(*u);
                }
                y
            })
            .collect());
    }
    Err(Error::UnsupportedCombination(
        "online projection supports simplex and box parameter spaces".into(),
    ))
}

fn is_simplex(space: &ParameterSpace) -> bool {
    space.normalization == Normalization::L1Sphere
        && space
            .lower
            .iter()
            .all(|l| matches!(l, Some(v) if *v >= -1e-12))
        && space.ineq.is_empty()
        && space.eq.is_empty()
}

/// Projection onto `{θ ≥ 0, Σθ = 1}` by thresholding.
fn simplex_projection(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// One projected-subgradient step `Proj_Θ(θ − η g)`.
pub fn step_ogd(space: &ParameterSpace, theta: &[f64], grad: &[f64], eta: f64) -> Result<Vec<f64>> {
    let mut v = theta.to_vec();
    linalg::axpy(&mut v, -eta, grad);
    project_theta(space, &v)
}

/// One multiplicative-weights step: `θ_i ← θ_i(1 − η g_i)` clipped at zero,
/// then renormalized onto the simplex.
pub fn step_mwu(space: &ParameterSpace, theta: &[f64], grad: &[f64], eta: f64) -> Result<Vec<f64>> {
    if !is_simplex(space) {
        return Err(Error::UnsupportedCombination(
            "multiplicative weights require a simplex parameter space".into(),
        ));
    }
    let mut w: Vec<f64> = theta
        .iter()
        .zip(grad)
        .map(|(&t, &g)| (t * (1.0 - eta * g)).max(0.0))
        .collect();
    let s: f64 = w.iter().sum();
    if s <= 1e-12 {
        w = vec![1.0 / theta.len() as f64; theta.len()];
    } else {
        w = linalg::scale(&w, 1.0 / s);
    }
    Ok(w)
}

/// One implicit (proximal) step: the fixed point of
/// `θ = Proj_Θ(θ_t − η ∂ℓ_t(θ))`, iterated with the round's forward oracle.
/// Returns the last iterate if the cap is hit.
pub fn step_implicit(
    space: &ParameterSpace,
    theta_t: &[f64],
    canonical: &LinearForwardModel,
    sign: f64,
    x_hat: &[f64],
    eta: f64,
) -> Result<Vec<f64>> {
    let mut cur = project_theta(space, theta_t)?;
    for _ in 0..50 {
        let cost = linalg::scale(&cur, sign);
        let (_, x_star) = solver::forward_value(canonical, &cost)?;
        let grad: Vec<f64> = x_hat
            .iter()
            .zip(&x_star)
            .map(|(&xh, &xs)| sign * (xh - xs))
            .collect();
        let mut target = theta_t.to_vec();
        linalg::axpy(&mut target, -eta, &grad);
        let next = project_theta(space, &target)?;
        if linalg::norm_inf(&linalg::sub(&next, &cur)) < 1e-10 {
            return Ok(next);
        }
        cur = next;
    }
    Ok(cur)
}

/// Process the observation stream in order, one forward solve per round, and
/// compare the accumulated loss to the best fixed parameter in hindsight.
pub fn run_stream(
    ds: &Dataset<LinearForwardModel>,
    space: &ParameterSpace,
    method: OnlineMethod,
    cfg: &OnlineConfig,
) -> Result<OnlineReport> {
    ds.validate_shape()?;
    let canon: Vec<(LinearForwardModel, f64)> = ds
        .models
        .iter()
        .map(canonical_with_sign)
        .collect::<Result<_>>()?;
    for (cm, _) in &canon {
        if cm.is_integer() {
            return Err(Error::UnsupportedCombination(
                "online estimation requires continuous forward models".into(),
            ));
        }
        if cm.num_vars() != space.dim {
            return Err(Error::DimensionMismatch(
                "space dim vs model variables".into(),
            ));
        }
    }
    if method == OnlineMethod::Mwu && !is_simplex(space) {
        return Err(Error::UnsupportedCombination(
            "multiplicative weights require a simplex parameter space".into(),
        ));
    }
    let start = space.prior.clone().unwrap_or_else(|| vec![0.0; space.dim]);
    let mut theta = project_theta(space, &start)?;
    let t_total = ds.observations.len();
    let mut thetas = vec![theta.clone()];
    let mut losses = Vec::with_capacity(t_total);
    let mut record_at: Vec<usize> = if cfg.record_every > 0 {
        (1..=t_total).filter(|t| t % cfg.record_every == 0).collect()
    } else {
        vec![]
    };
    if record_at.last() != Some(&t_total) {
        record_at.push(t_total);
    }
    let mut regret_curve = Vec::with_capacity(record_at.len());
    for (t, o) in ds.observations.iter().enumerate() {
        let inst = if ds.shared_region { 0 } else { o.instance };
        let (cm, sign) = &canon[inst];
        if o.x_hat.len() != cm.num_vars() {
            return Err(Error::DimensionMismatch("observation length".into()));
        }
        let cost = linalg::scale(&theta, *sign);
        let (opt, x_star) = solver::forward_value(cm, &cost)?;
        losses.push((linalg::dot(&cost, &o.x_hat) - opt).max(0.0));
        let eta = cfg.eta0 / ((t + 1) as f64).sqrt();
        let grad: Vec<f64> = o
            .x_hat
            .iter()
            .zip(&x_star)
            .map(|(&xh, &xs)| sign * (xh - xs))
            .collect();
        theta = match method {
            OnlineMethod::Ogd => step_ogd(space, &theta, &grad, eta)?,
            OnlineMethod::Mwu => step_mwu(space, &theta, &grad, eta)?,
            OnlineMethod::Implicit => step_implicit(space, &theta, cm, *sign, &o.x_hat, eta)?,
        };
        thetas.push(theta.clone());
        if record_at.contains(&(t + 1)) {
            regret_curve.push((t + 1, prefix_regret(ds, space, &losses, t + 1)?));
        }
    }
    let (_, avg_regret) = *regret_curve.last().unwrap();
    let mean_online: f64 = losses.iter().sum::<f64>() / t_total as f64;
    Ok(OnlineReport {
        thetas,
        losses,
        regret_curve,
        batch_loss: mean_online - avg_regret,
        avg_regret,
    })
}

/// Average regret after `t` rounds: mean online loss minus the mean loss of
/// the hindsight-optimal fixed parameter over the same prefix.
fn prefix_regret(
    ds: &Dataset<LinearForwardModel>,
    space: &ParameterSpace,
    losses: &[f64],
    t: usize,
) -> Result<f64> {
    let prefix = Dataset {
        observations: ds.observations[..t].to_vec(),
        models: ds.models.clone(),
        shared_region: ds.shared_region,
    };
    let batch = datadriven::estimate_aso(&prefix, space)?;
    let mean_online: f64 = losses[..t].iter().sum::<f64>() / t as f64;
    Ok(mean_online - batch.objective)
}
