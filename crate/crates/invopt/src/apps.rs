//! Reference applications: pathway-cost estimation and concordance scoring
//! on shortest-path networks, Wardrop traffic calibration on parallel-link
//! networks, and seeded synthetic instance generators with planted
//! parameters.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::master;
use crate::model::{
    Dataset, LinearForwardModel, Monomial, Normalization, NormP, ObjectiveMode, ObjectiveSpec,
    Observation, ParameterSpace, RowSense, Sense, VarKind, WeightSign,
};
use crate::solver::{self, LpBuilder};
use crate::solver::simplex::LpStatus;

// ---------------------------------------------------------------------------
// Shortest-path networks and pathway-cost estimation.
// ---------------------------------------------------------------------------

/// Directed graph with one source and one sink; paths are 0/1 arc-incidence
/// vectors satisfying flow balance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathNetwork {
    pub n_nodes: usize,
    /// (tail, head) per arc.
    pub arcs: Vec<(usize, usize)>,
    pub source: usize,
    pub sink: usize,
}

impl PathNetwork {
    pub fn n_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.source >= self.n_nodes || self.sink >= self.n_nodes || self.source == self.sink {
            return Err(Error::InvalidInput(
                "source/sink must be distinct nodes in range".into(),
            ));
        }
        if self
            .arcs
            .iter()
            .any(|&(t, h)| t >= self.n_nodes || h >= self.n_nodes)
        {
            return Err(Error::InvalidInput("arc endpoint out of range".into()));
        }
        Ok(())
    }

    /// Node-arc incidence: +1 where the arc leaves the node, −1 where it
    /// enters.
    pub fn incidence(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n_arcs()]; self.n_nodes];
        for (k, &(t, h)) in self.arcs.iter().enumerate() {
            a[t][k] += 1.0;
            a[h][k] -= 1.0;
        }
        a
    }

    /// Right-hand side of flow balance: one unit from source to sink.
    pub fn balance(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.n_nodes];
        b[self.source] = 1.0;
        b[self.sink] = -1.0;
        b
    }

    /// True iff x is a 0/1 arc vector satisfying flow balance.
    pub fn is_path(&self, x: &[f64]) -> bool {
        if x.len() != self.n_arcs() {
            return false;
        }
        if x.iter().any(|&v| (v - v.round()).abs() > 1e-9 || v < -1e-9 || v > 1.0 + 1e-9) {
            return false;
        }
        let flow = linalg::mat_vec(&self.incidence(), x);
        linalg::norm_inf(&linalg::sub(&flow, &self.balance())) < 1e-9
    }

    /// `min θᵀx` over the flow polytope `{Ax = b, x ≥ 0}`; the incidence
    /// matrix is unimodular, so the optimum is a path when one exists.
    pub fn shortest_path(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.validate()?;
        if theta.len() != self.n_arcs() {
            return Err(Error::DimensionMismatch("arc costs vs arcs".into()));
        }
        let mut b = LpBuilder::new();
        let x: Vec<usize> = (0..self.n_arcs())
            .map(|k| b.add_var(theta[k], Some(0.0), None))
            .collect();
        let a = self.incidence();
        for (v, row) in a.iter().enumerate() {
            let terms: Vec<(usize, f64)> = x
                .iter()
                .zip(row)
                .filter(|(_, &c)| c != 0.0)
                .map(|(&xv, &c)| (xv, c))
                .collect();
            b.add_row(terms, RowSense::Eq, self.balance()[v]);
        }
        let sol = b.solve();
        match sol.status {
            LpStatus::Optimal => {
                let flow: Vec<f64> = x.iter().map(|&v| sol.x[v]).collect();
                Ok((sol.objective, flow))
            }
            LpStatus::Unbounded => Err(Error::ForwardUnbounded),
            _ => Err(Error::InfeasiblePaths),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathwayVariant {
    /// Sum of absolute duality gaps (exact LP per facet).
    L1,
    /// Sum of squared duality gaps (conditional gradient per facet).
    Squared,
}

/// Outcome of the two-stage pathway-cost estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathwayResult {
    /// Final arc costs (stage 2 when patient paths were supplied).
    pub theta: Vec<f64>,
    pub theta_stage1: Vec<f64>,
    /// Optimal duality gaps of the reference paths from stage 1.
    pub eps_reference: Vec<f64>,
    /// Stage-1 objective (Σ|ε| or Σε² by variant).
    pub stage1_gap: f64,
    /// Separation objective (D/S)Σε^s − Σε^d when stage 2 ran.
    pub stage2_objective: Option<f64>,
    /// Node potentials of the final solve.
    pub duals: Vec<f64>,
}

/// Bound on node potentials; optimal shortest-path potentials under
/// ‖θ‖∞ = 1 never exceed the node count.
fn potential_bound(net: &PathNetwork) -> f64 {
    (net.n_nodes + 1) as f64
}

fn infinity_sphere(dim: usize) -> ParameterSpace {
    let mut s = ParameterSpace::free(dim, vec![0.0; dim], NormP::One);
    s.normalization = Normalization::LInfSphere;
    s.objective_mode = ObjectiveMode::Zero;
    s
}

fn check_paths(net: &PathNetwork, paths: &[Vec<f64>]) -> Result<()> {
    for p in paths {
        if !net.is_path(p) {
            return Err(Error::InfeasiblePaths);
        }
    }
    Ok(())
}

/// Estimate a single set of arc costs making the reference paths as close
/// to shortest as possible (‖θ‖∞ = 1, one ∞-sphere facet at a time). When
/// survived/died patient paths are supplied, a second stage re-optimizes
/// among the stage-1 optima to separate their duality gaps, additionally
/// requiring the costs to have zero divergence (Aθ = 0).
pub fn estimate_pathway_costs(
    net: &PathNetwork,
    reference: &[Vec<f64>],
    survived: &[Vec<f64>],
    died: &[Vec<f64>],
    variant: PathwayVariant,
) -> Result<PathwayResult> {
    net.validate()?;
    if reference.is_empty() {
        return Err(Error::InvalidInput("at least one reference path".into()));
    }
    check_paths(net, reference)?;
    check_paths(net, survived)?;
    check_paths(net, died)?;
    let (theta1, eps, gap, duals1) = match variant {
        PathwayVariant::L1 => stage1_l1(net, reference)?,
        PathwayVariant::Squared => stage1_squared(net, reference)?,
    };
    if survived.is_empty() && died.is_empty() {
        return Ok(PathwayResult {
            theta: theta1.clone(),
            theta_stage1: theta1,
            eps_reference: eps,
            stage1_gap: gap,
            stage2_objective: None,
            duals: duals1,
        });
    }
    let (theta2, obj2, duals2) = stage2_separate(net, reference, &eps, survived, died)?;
    Ok(PathwayResult {
        theta: theta2,
        theta_stage1: theta1,
        eps_reference: eps,
        stage1_gap: gap,
        stage2_objective: Some(obj2),
        duals: duals2,
    })
}

/// Shared duality rows: θ_a − (Aᵀλ)_a ≥ 0 per arc.
fn add_reduced_cost_rows(b: &mut LpBuilder, net: &PathNetwork, theta: &[usize], lam: &[usize]) {
    let a = net.incidence();
    for (k, &tv) in theta.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = vec![(tv, 1.0)];
        for (v, &lv) in lam.iter().enumerate() {
            if a[v][k] != 0.0 {
                terms.push((lv, -a[v][k]));
            }
        }
        b.add_row(terms, RowSense::Ge, 0.0);
    }
}

fn stage1_l1(
    net: &PathNetwork,
    reference: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>, f64, Vec<f64>)> {
    let space = infinity_sphere(net.n_arcs());
    let bal = net.balance();
    let lbound = potential_bound(net);
    let mut eps_vars: Vec<usize> = vec![];
    let mut lam_vars: Vec<usize> = vec![];
    let out = master::solve_master(&space, false, |b, theta, _| {
        eps_vars.clear();
        lam_vars.clear();
        let lam: Vec<usize> = (0..net.n_nodes)
            .map(|_| b.add_var(0.0, Some(-lbound), Some(lbound)))
            .collect();
        add_reduced_cost_rows(b, net, theta, &lam);
        for path in reference {
            let e = b.add_var(1.0, Some(0.0), None);
            // θᵀx̂ − bᵀλ − ε = 0
            let mut terms: Vec<(usize, f64)> = theta
                .iter()
                .zip(path)
                .filter(|(_, &x)| x != 0.0)
                .map(|(&tv, &x)| (tv, x))
                .collect();
            terms.extend(
                lam.iter()
                    .zip(&bal)
                    .filter(|(_, &bv)| bv != 0.0)
                    .map(|(&lv, &bv)| (lv, -bv)),
            );
            terms.push((e, -1.0));
            b.add_row(terms, RowSense::Eq, 0.0);
            eps_vars.push(e);
        }
        lam_vars = lam;
        Ok(())
    })?;
    let out = out.ok_or(Error::InfeasiblePaths)?;
    let eps: Vec<f64> = eps_vars.iter().map(|&v| out.solution.x[v].max(0.0)).collect();
    let duals: Vec<f64> = lam_vars.iter().map(|&v| out.solution.x[v]).collect();
    Ok((out.theta, eps, out.objective.max(0.0), duals))
}

fn stage1_squared(
    net: &PathNetwork,
    reference: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>, f64, Vec<f64>)> {
    let na = net.n_arcs();
    let nn = net.n_nodes;
    let nr = reference.len();
    let nz = na + nn + nr;
    let space = infinity_sphere(na);
    let inc = net.incidence();
    let bal = net.balance();
    let lbound = potential_bound(net);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for piece in space.convex_pieces()? {
        // Rows over z = (θ, λ, ε) in ≥ form.
        let mut a: Vec<Vec<f64>> = vec![];
        let mut b: Vec<f64> = vec![];
        let push = |coef: Vec<f64>, rhs: f64, a: &mut Vec<Vec<f64>>, b: &mut Vec<f64>| {
            a.push(coef);
            b.push(rhs);
        };
        for (g, h) in &piece.ineq {
            let mut row = vec![0.0; nz];
            row[..na].copy_from_slice(g);
            push(row, *h, &mut a, &mut b);
        }
        for (e, f) in &piece.eq {
            let mut row = vec![0.0; nz];
            row[..na].copy_from_slice(e);
            push(row.clone(), *f, &mut a, &mut b);
            push(linalg::scale(&row, -1.0), -f, &mut a, &mut b);
        }
        for k in 0..na {
            let mut row = vec![0.0; nz];
            row[k] = 1.0;
            for v in 0..nn {
                row[na + v] = -inc[v][k];
            }
            push(row, 0.0, &mut a, &mut b);
        }
        for v in 0..nn {
            let mut lo = vec![0.0; nz];
            lo[na + v] = 1.0;
            push(lo.clone(), -lbound, &mut a, &mut b);
            push(linalg::scale(&lo, -1.0), -lbound, &mut a, &mut b);
        }
        for (r, path) in reference.iter().enumerate() {
            let mut row = vec![0.0; nz];
            row[..na].copy_from_slice(path);
            for v in 0..nn {
                row[na + v] = -bal[v];
            }
            row[na + nn + r] = -1.0;
            push(row.clone(), 0.0, &mut a, &mut b);
            push(linalg::scale(&row, -1.0), 0.0, &mut a, &mut b);
        }
        let mut phi = vec![vec![0.0; nz]; nz];
        for r in 0..nr {
            phi[na + nn + r][na + nn + r] = 2.0;
        }
        let qp = crate::model::ConvexForwardModel {
            objective: ObjectiveSpec::Quadratic {
                phi,
                psi: vec![0.0; nz],
            },
            a,
            b,
        };
        let rep = solver::solve_convex(&qp, &vec![0.0; nz], 1e-10, 20_000)?;
        if rep.status == solver::SolveStatus::Infeasible {
            continue;
        }
        if best
            .as_ref()
            .is_none_or(|(_, bv)| rep.objective < *bv - 1e-12)
        {
            best = Some((rep.primal, rep.objective));
        }
    }
    let (z, obj) = best.ok_or(Error::InfeasiblePaths)?;
    let theta = z[..na].to_vec();
    let duals = z[na..na + nn].to_vec();
    let eps: Vec<f64> = z[na + nn..].iter().map(|&e| e.max(0.0)).collect();
    Ok((theta, eps, obj.max(0.0), duals))
}

fn stage2_separate(
    net: &PathNetwork,
    reference: &[Vec<f64>],
    eps_star: &[f64],
    survived: &[Vec<f64>],
    died: &[Vec<f64>],
) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let space = infinity_sphere(net.n_arcs());
    let bal = net.balance();
    let inc = net.incidence();
    let lbound = potential_bound(net);
    let s_count = survived.len().max(1) as f64;
    let d_count = died.len() as f64;
    let mut lam_vars: Vec<usize> = vec![];
    let out = master::solve_master(&space, false, |b, theta, _| {
        lam_vars.clear();
        let lam: Vec<usize> = (0..net.n_nodes)
            .map(|_| b.add_var(0.0, Some(-lbound), Some(lbound)))
            .collect();
        add_reduced_cost_rows(b, net, theta, &lam);
        // Zero divergence: the cost vector may not point orthogonal to the
        // flow polytope's affine hull.
        for row in &inc {
            let terms: Vec<(usize, f64)> = theta
                .iter()
                .zip(row)
                .filter(|(_, &c)| c != 0.0)
                .map(|(&tv, &c)| (tv, c))
                .collect();
            if !terms.is_empty() {
                b.add_row(terms, RowSense::Eq, 0.0);
            }
        }
        let gap_row = |b: &mut LpBuilder, theta: &[usize], lam: &[usize], path: &[f64], evar: Option<(usize, f64)>, rhs: f64| {
            let mut terms: Vec<(usize, f64)> = theta
                .iter()
                .zip(path)
                .filter(|(_, &x)| x != 0.0)
                .map(|(&tv, &x)| (tv, x))
                .collect();
            terms.extend(
                lam.iter()
                    .zip(&bal)
                    .filter(|(_, &bv)| bv != 0.0)
                    .map(|(&lv, &bv)| (lv, -bv)),
            );
            if let Some((ev, c)) = evar {
                terms.push((ev, c));
            }
            b.add_row(terms, RowSense::Eq, rhs);
        };
        for (path, &e) in reference.iter().zip(eps_star) {
            gap_row(b, theta, &lam, path, None, e);
        }
        for path in survived {
            let e = b.add_var(d_count / s_count, Some(0.0), None);
            gap_row(b, theta, &lam, path, Some((e, -1.0)), 0.0);
        }
        for path in died {
            let e = b.add_var(-1.0, Some(0.0), None);
            gap_row(b, theta, &lam, path, Some((e, -1.0)), 0.0);
        }
        lam_vars = lam;
        Ok(())
    })?;
    let out = out.ok_or(Error::InfeasiblePaths)?;
    let duals: Vec<f64> = lam_vars.iter().map(|&v| out.solution.x[v]).collect();
    Ok((out.theta, out.objective, duals))
}

// ---------------------------------------------------------------------------
// Concordance metric.
// ---------------------------------------------------------------------------

/// Cost of the most expensive source→sink walk with exactly `steps` arcs,
/// by dynamic programming over (node, step) states.
pub fn max_cost_walk(net: &PathNetwork, theta: &[f64], steps: usize) -> Result<f64> {
    net.validate()?;
    if theta.len() != net.n_arcs() {
        return Err(Error::DimensionMismatch("arc costs vs arcs".into()));
    }
    let mut value = vec![f64::NEG_INFINITY; net.n_nodes];
    value[net.source] = 0.0;
    for _ in 0..steps {
        let mut next = vec![f64::NEG_INFINITY; net.n_nodes];
        for (k, &(t, h)) in net.arcs.iter().enumerate() {
            if value[t] > f64::NEG_INFINITY {
                next[h] = next[h].max(value[t] + theta[k]);
            }
        }
        value = next;
    }
    if value[net.sink] == f64::NEG_INFINITY {
        return Err(Error::InfeasiblePaths);
    }
    Ok(value[net.sink])
}

/// Concordance score ω ∈ [0,1]: the cost excess of x̂ over a shortest path,
/// normalized by the spread between the costliest equal-length walk and the
/// shortest path, then clipped. Shortest paths score 1.
pub fn concordance_omega(net: &PathNetwork, theta: &[f64], x_hat: &[f64]) -> Result<f64> {
    concordance_omega_with(net, theta, x_hat, false)
}

/// `displayed_denominator` switches the normalization to M(x̂) − θᵀx̂; the
/// default spread M(x̂) − θᵀx* guarantees ω(max-cost walk) = 0.
pub fn concordance_omega_with(
    net: &PathNetwork,
    theta: &[f64],
    x_hat: &[f64],
    displayed_denominator: bool,
) -> Result<f64> {
    if !net.is_path(x_hat) {
        return Err(Error::InfeasiblePaths);
    }
    let (shortest, _) = net.shortest_path(theta)?;
    let cost_hat = linalg::dot(theta, x_hat);
    let steps = x_hat.iter().sum::<f64>().round() as usize;
    let longest = max_cost_walk(net, theta, steps)?;
    let denom = if displayed_denominator {
        longest - cost_hat
    } else {
        longest - shortest
    };
    if denom.abs() <= 1e-9 {
        return Err(Error::DegenerateRange);
    }
    Ok((1.0 - (cost_hat - shortest) / denom).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Wardrop traffic calibration (parallel links, one origin–destination pair).
// ---------------------------------------------------------------------------

/// Parallel-link congestion instance: link a has travel time
/// `c_a · (1 + Σ_i θ_i (x_a/m_a)^i)` at flow x_a.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrafficInstance {
    /// Free-flow times c_a > 0.
    pub free_flow: Vec<f64>,
    /// Capacities m_a > 0.
    pub capacity: Vec<f64>,
    /// Total demand routed from source to sink.
    pub demand: f64,
    /// Degree of the polynomial congestion kernel.
    pub degree: usize,
}

impl TrafficInstance {
    pub fn n_links(&self) -> usize {
        self.free_flow.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.free_flow.len() != self.capacity.len() {
            return Err(Error::DimensionMismatch("free-flow vs capacity".into()));
        }
        if self.free_flow.iter().any(|&c| c <= 0.0) || self.capacity.iter().any(|&m| m <= 0.0) {
            return Err(Error::InvalidInput(
                "free-flow times and capacities must be positive".into(),
            ));
        }
        if self.demand < 0.0 || self.degree == 0 {
            return Err(Error::InvalidInput(
                "demand must be nonnegative and degree ≥ 1".into(),
            ));
        }
        Ok(())
    }

    /// Travel time of link `a` at the given flow.
    pub fn link_time(&self, a: usize, flow: f64, theta: &[f64]) -> f64 {
        let y = flow / self.capacity[a];
        let congestion: f64 = theta
            .iter()
            .enumerate()
            .map(|(i, &t)| t * y.powi(i as i32 + 1))
            .sum();
        self.free_flow[a] * (1.0 + congestion)
    }
}

/// User-equilibrium flows at θ: minimize the potential whose gradient is
/// the vector of link times, over `{x ≥ 0, Σx = demand}`.
pub fn solve_equilibrium(inst: &TrafficInstance, theta: &[f64]) -> Result<Vec<f64>> {
    inst.validate()?;
    if theta.len() != inst.degree {
        return Err(Error::DimensionMismatch("theta vs kernel degree".into()));
    }
    let n = inst.n_links();
    let mut a: Vec<Vec<f64>> = vec![];
    let mut b: Vec<f64> = vec![];
    for k in 0..n {
        let mut row = vec![0.0; n];
        row[k] = 1.0;
        a.push(row);
        b.push(0.0);
    }
    a.push(vec![1.0; n]);
    b.push(inst.demand);
    a.push(vec![-1.0; n]);
    b.push(-inst.demand);
    let (objective, param): (ObjectiveSpec, Vec<f64>) = if inst.degree == 1 {
        // Degree-1 kernels give a quadratic potential with exact line search:
        // Σ_a [c_a x + θ c_a x²/(2 m_a)].
        let mut phi = vec![vec![0.0; n]; n];
        for k in 0..n {
            phi[k][k] = theta[0] * inst.free_flow[k] / inst.capacity[k];
        }
        (
            ObjectiveSpec::Quadratic {
                phi,
                psi: inst.free_flow.clone(),
            },
            vec![0.0; n],
        )
    } else {
        let fixed: Vec<Monomial> = (0..n)
            .map(|k| Monomial {
                var: k,
                coef: inst.free_flow[k],
                power: 1.0,
            })
            .collect();
        let bases: Vec<Vec<Monomial>> = (1..=inst.degree)
            .map(|i| {
                (0..n)
                    .map(|k| Monomial {
                        var: k,
                        coef: inst.free_flow[k]
                            / ((i + 1) as f64 * inst.capacity[k].powi(i as i32)),
                        power: (i + 1) as f64,
                    })
                    .collect()
            })
            .collect();
        (
            ObjectiveSpec::Basis {
                fixed,
                bases,
                signs: vec![WeightSign::NonNeg; inst.degree],
            },
            theta.to_vec(),
        )
    };
    let model = crate::model::ConvexForwardModel { objective, a, b };
    let rep = solver::solve_convex(&model, &param, 1e-11, 50_000)?;
    if rep.status == solver::SolveStatus::Infeasible {
        return Err(Error::Solver("flow polytope infeasible".into()));
    }
    Ok(rep.primal)
}

const THETA_CAP: f64 = 1e3;

/// Calibrate the congestion kernel from observed per-period flows: minimize
/// the mean equilibrium-gap loss plus a ridge penalty κΣθ_i² over θ ≥ 0.
/// Each observed flow vector must route the full demand.
pub fn calibrate_traffic(
    inst: &TrafficInstance,
    observed: &[Vec<f64>],
    kappa: f64,
) -> Result<Vec<f64>> {
    inst.validate()?;
    if observed.is_empty() {
        return Err(Error::InvalidInput("no observed flow periods".into()));
    }
    if kappa < 0.0 {
        return Err(Error::InvalidInput("ridge weight must be ≥ 0".into()));
    }
    let n = inst.n_links();
    for flows in observed {
        if flows.len() != n {
            return Err(Error::DimensionMismatch("observed flows vs links".into()));
        }
        let total: f64 = flows.iter().sum();
        if flows.iter().any(|&f| f < -1e-9) || (total - inst.demand).abs() > 1e-6 {
            return Err(Error::DecompositionInfeasible);
        }
    }
    let deg = inst.degree;
    let periods = observed.len();
    // z = (θ, m_p, u_p): u_p overestimates the equilibrium gap of period p,
    // m_p underestimates the period's fastest link time.
    let nz = deg + 2 * periods;
    let mut a: Vec<Vec<f64>> = vec![];
    let mut b: Vec<f64> = vec![];
    for i in 0..deg {
        let mut row = vec![0.0; nz];
        row[i] = 1.0;
        a.push(row.clone());
        b.push(0.0);
        a.push(linalg::scale(&row, -1.0));
        b.push(-THETA_CAP);
    }
    for (p, flows) in observed.iter().enumerate() {
        let m_idx = deg + 2 * p;
        let u_idx = m_idx + 1;
        for k in 0..n {
            // t_k(θ) ≥ m_p, with t_k affine in θ.
            let y = flows[k] / inst.capacity[k];
            let mut row = vec![0.0; nz];
            for i in 0..deg {
                row[i] = inst.free_flow[k] * y.powi(i as i32 + 1);
            }
            row[m_idx] = -1.0;
            a.push(row);
            b.push(-inst.free_flow[k]);
        }
        // u_p ≥ Σ_k x̂_k t_k(θ) − d·m_p.
        let mut row = vec![0.0; nz];
        row[u_idx] = 1.0;
        row[m_idx] = inst.demand;
        let mut rhs = 0.0;
        for k in 0..n {
            let y = flows[k] / inst.capacity[k];
            for i in 0..deg {
                row[i] -= flows[k] * inst.free_flow[k] * y.powi(i as i32 + 1);
            }
            rhs += flows[k] * inst.free_flow[k];
        }
        a.push(row);
        b.push(rhs);
        // u_p ≥ 0 and a safety floor on m_p keep the polytope pointed.
        let mut up = vec![0.0; nz];
        up[u_idx] = 1.0;
        a.push(up);
        b.push(0.0);
        let mut mp = vec![0.0; nz];
        mp[m_idx] = 1.0;
        a.push(mp);
        b.push(-1e6);
    }
    let mut phi = vec![vec![0.0; nz]; nz];
    for i in 0..deg {
        phi[i][i] = 2.0 * kappa;
    }
    let mut psi = vec![0.0; nz];
    for p in 0..periods {
        psi[deg + 2 * p + 1] = 1.0 / periods as f64;
    }
    let qp = crate::model::ConvexForwardModel {
        objective: ObjectiveSpec::Quadratic { phi, psi },
        a,
        b,
    };
    let rep = solver::solve_convex(&qp, &vec![0.0; nz], 1e-12, 50_000)?;
    if rep.status == solver::SolveStatus::Infeasible {
        return Err(Error::Solver("calibration polytope infeasible".into()));
    }
    Ok(rep.primal[..deg].to_vec())
}

// ---------------------------------------------------------------------------
// Seeded synthetic instances with planted parameters.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Lp,
    Knapsack,
    Path,
    Traffic,
}

/// A generated benchmark instance with its planted ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratedInstance {
    Lp {
        dataset: Dataset<LinearForwardModel>,
        space: ParameterSpace,
        theta_true: Vec<f64>,
    },
    Knapsack {
        model: LinearForwardModel,
        theta_true: Vec<f64>,
        x_hat: Vec<f64>,
    },
    Path {
        network: PathNetwork,
        theta_true: Vec<f64>,
        paths: Vec<Vec<f64>>,
    },
    Traffic {
        instance: TrafficInstance,
        theta_true: Vec<f64>,
        flows: Vec<Vec<f64>>,
    },
}

/// Deterministic instance generator: the same (kind, seed, size, noise)
/// always yields the same instance. Noise-free observations are exact
/// optima of the planted parameter.
pub fn generate_instance(
    kind: InstanceKind,
    seed: u64,
    size: usize,
    noise: f64,
) -> Result<GeneratedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        InstanceKind::Lp => generate_lp(&mut rng, size, noise),
        InstanceKind::Knapsack => generate_knapsack(&mut rng, size),
        InstanceKind::Path => generate_path(&mut rng, size),
        InstanceKind::Traffic => generate_traffic(&mut rng, size, noise),
    }
}

fn generate_lp(rng: &mut ChaCha8Rng, size: usize, noise: f64) -> Result<GeneratedInstance> {
    let n = size.clamp(2, 6);
    let n_obs = size.max(3);
    let mut theta_true: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s = linalg::norm_1(&theta_true);
    theta_true = linalg::scale(&theta_true, 1.0 / s);
    let mut models = Vec::with_capacity(n_obs);
    let mut observations = Vec::with_capacity(n_obs);
    for i in 0..n_obs {
        // Unit box plus a few random halfspaces through its interior.
        let mut a: Vec<Vec<f64>> = vec![];
        let mut b: Vec<f64> = vec![];
        for k in 0..n {
            let mut lo = vec![0.0; n];
            lo[k] = 1.0;
            a.push(lo.clone());
            b.push(0.0);
            a.push(linalg::scale(&lo, -1.0));
            b.push(-1.0);
        }
        for _ in 0..n {
            let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let center: f64 = row.iter().sum::<f64>() * 0.5;
            let rhs = center - rng.gen_range(0.1..0.5);
            a.push(row);
            b.push(rhs);
        }
        let model = LinearForwardModel::canonical(vec![0.0; n], a, b);
        let (_, mut x_hat) = solver::forward_value(&model, &theta_true)?;
        if noise > 0.0 {
            for v in x_hat.iter_mut() {
                *v += rng.gen_range(-noise..noise);
            }
        }
        models.push(model);
        observations.push(Observation {
            x_hat,
            instance: i,
            weight: 1.0,
        });
    }
    Ok(GeneratedInstance::Lp {
        dataset: Dataset {
            observations,
            models,
            shared_region: false,
        },
        space: ParameterSpace::unit_simplex(n, vec![0.0; n], NormP::One),
        theta_true,
    })
}

fn generate_knapsack(rng: &mut ChaCha8Rng, size: usize) -> Result<GeneratedInstance> {
    let n = size.clamp(3, 10);
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(1..10) as f64).collect();
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(1..10) as f64).collect();
    let cap = (weights.iter().sum::<f64>() / 2.0).ceil();
    let mut a = vec![linalg::scale(&weights, -1.0)];
    let mut b = vec![-cap];
    for k in 0..n {
        let mut lo = vec![0.0; n];
        lo[k] = 1.0;
        a.push(lo.clone());
        b.push(0.0);
        a.push(linalg::scale(&lo, -1.0));
        b.push(-1.0);
    }
    let m = b.len();
    let model = LinearForwardModel {
        cost: values.clone(),
        a,
        b,
        row_sense: vec![RowSense::Ge; m],
        integrality: vec![VarKind::Integer; n],
        sense: Sense::Max,
    };
    let canonical = crate::model::canonicalize(&model)?;
    let neg: Vec<f64> = linalg::scale(&values, -1.0);
    let (_, x_hat) = solver::forward_value(&canonical, &neg)?;
    Ok(GeneratedInstance::Knapsack {
        model,
        theta_true: values,
        x_hat,
    })
}

fn generate_path(rng: &mut ChaCha8Rng, size: usize) -> Result<GeneratedInstance> {
    // Diamond with `size` parallel middle nodes.
    let k = size.clamp(2, 6);
    let mut arcs = Vec::with_capacity(2 * k);
    for mid in 1..=k {
        arcs.push((0, mid));
    }
    for mid in 1..=k {
        arcs.push((mid, k + 1));
    }
    let network = PathNetwork {
        n_nodes: k + 2,
        arcs,
        source: 0,
        sink: k + 1,
    };
    let theta_true: Vec<f64> = (0..network.n_arcs())
        .map(|_| rng.gen_range(0.1..1.0))
        .collect();
    let (_, path) = network.shortest_path(&theta_true)?;
    Ok(GeneratedInstance::Path {
        network,
        theta_true,
        paths: vec![path],
    })
}

fn generate_traffic(rng: &mut ChaCha8Rng, size: usize, noise: f64) -> Result<GeneratedInstance> {
    let n = size.clamp(2, 5);
    let instance = TrafficInstance {
        free_flow: (0..n).map(|_| rng.gen_range(1.0..3.0)).collect(),
        capacity: (0..n).map(|_| rng.gen_range(0.5..1.5)).collect(),
        demand: 1.0,
        degree: 1,
    };
    let theta_true = vec![rng.gen_range(0.5..4.0)];
    let mut flows = solve_equilibrium(&instance, &theta_true)?;
    if noise > 0.0 {
        for f in flows.iter_mut() {
            *f = (*f + rng.gen_range(-noise..noise)).max(0.0);
        }
        let total: f64 = flows.iter().sum();
        if total > 0.0 {
            flows = linalg::scale(&flows, instance.demand / total);
        }
    }
    Ok(GeneratedInstance::Traffic {
        instance,
        theta_true,
        flows: vec![flows],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datadriven;

    /// s → a → t with a direct shortcut s → t: arcs 0: s→a, 1: a→t, 2: s→t.
    fn shortcut_net() -> PathNetwork {
        PathNetwork {
            n_nodes: 3,
            arcs: vec![(0, 1), (1, 2), (0, 2)],
            source: 0,
            sink: 2,
        }
    }

    /// Diamond with three parallel middle nodes; arcs k and k+3 form path k.
    fn wide_diamond() -> PathNetwork {
        PathNetwork {
            n_nodes: 5,
            arcs: vec![(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)],
            source: 0,
            sink: 4,
        }
    }

    #[test]
    fn path_validation_and_shortest() {
        let net = shortcut_net();
        assert!(net.is_path(&[1.0, 1.0, 0.0]));
        assert!(net.is_path(&[0.0, 0.0, 1.0]));
        assert!(!net.is_path(&[1.0, 0.0, 0.0]));
        let (cost, flow) = net.shortest_path(&[1.0, 1.0, 1.0]).unwrap();
        assert!((cost - 1.0).abs() < 1e-9);
        assert!((flow[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stage1_unique_shortest_has_zero_gap() {
        let net = shortcut_net();
        let reference = vec![vec![0.0, 0.0, 1.0]];
        let res =
            estimate_pathway_costs(&net, &reference, &[], &[], PathwayVariant::L1).unwrap();
        assert!(res.stage1_gap < 1e-8, "{}", res.stage1_gap);
        assert!(res.eps_reference[0] < 1e-8);
        assert!((linalg::norm_inf(&res.theta) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stage1_matches_facet_grid_oracle() {
        // Two reference paths of unequal uniform-cost length; compare the
        // exact facet LP against a coarse grid over the ∞-sphere.
        let net = shortcut_net();
        let reference = vec![vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let res =
            estimate_pathway_costs(&net, &reference, &[], &[], PathwayVariant::L1).unwrap();
        let mut grid_best = f64::INFINITY;
        let n = 10;
        for facet in 0..3 {
            for sgn in [1.0, -1.0] {
                for i in 0..=n {
                    for j in 0..=n {
                        let mut theta = vec![0.0; 3];
                        theta[facet] = sgn;
                        let free: Vec<usize> = (0..3).filter(|&k| k != facet).collect();
                        theta[free[0]] = -1.0 + 2.0 * i as f64 / n as f64;
                        theta[free[1]] = -1.0 + 2.0 * j as f64 / n as f64;
                        let (short, _) = net.shortest_path(&theta).unwrap();
                        let total: f64 = reference
                            .iter()
                            .map(|p| linalg::dot(&theta, p) - short)
                            .sum();
                        grid_best = grid_best.min(total);
                    }
                }
            }
        }
        assert!(res.stage1_gap <= grid_best + 1e-9, "{} vs {grid_best}", res.stage1_gap);
        assert!(res.stage1_gap >= grid_best - 0.5, "grid resolution sanity");
    }

    #[test]
    fn stage1_squared_variant_agrees_on_zero_gap() {
        let net = shortcut_net();
        let reference = vec![vec![0.0, 0.0, 1.0]];
        let res =
            estimate_pathway_costs(&net, &reference, &[], &[], PathwayVariant::Squared).unwrap();
        assert!(res.stage1_gap < 1e-7, "{}", res.stage1_gap);
    }

    #[test]
    fn stage2_separates_survival_outcomes() {
        // Reference = survived = the shortcut; died = the long way. Under
        // zero divergence θ = t(1,1,−1), pinning the reference gap at 0
        // forces t = 1, giving separation 0 − 3 = −3.
        let net = shortcut_net();
        let shortcut = vec![0.0, 0.0, 1.0];
        let long_way = vec![1.0, 1.0, 0.0];
        let res = estimate_pathway_costs(
            &net,
            &[shortcut.clone()],
            &[shortcut.clone()],
            &[long_way.clone()],
            PathwayVariant::L1,
        )
        .unwrap();
        let obj = res.stage2_objective.unwrap();
        assert!((obj + 3.0).abs() < 1e-7, "{obj}");
        assert!((res.theta[0] - 1.0).abs() < 1e-7);
        assert!((res.theta[1] - 1.0).abs() < 1e-7);
        assert!((res.theta[2] + 1.0).abs() < 1e-7);
        // The pinned reference gap survives stage 2.
        let (short, _) = net.shortest_path(&res.theta).unwrap();
        let gap = linalg::dot(&res.theta, &shortcut) - short;
        assert!((gap - res.eps_reference[0]).abs() < 1e-7);
    }

    #[test]
    fn rejects_unbalanced_paths() {
        let net = shortcut_net();
        assert!(matches!(
            estimate_pathway_costs(&net, &[vec![1.0, 0.0, 0.0]], &[], &[], PathwayVariant::L1),
            Err(Error::InfeasiblePaths)
        ));
    }

    fn tiered_theta() -> Vec<f64> {
        // Path costs on the wide diamond: 2.0, 1.5, 0.5.
        vec![1.0, 0.75, 0.25, 1.0, 0.75, 0.25]
    }

    #[test]
    fn omega_bounds_and_intermediate_value() {
        let net = wide_diamond();
        let theta = tiered_theta();
        let cheap = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let mid = vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let dear = vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let w_cheap = concordance_omega(&net, &theta, &cheap).unwrap();
        let w_mid = concordance_omega(&net, &theta, &mid).unwrap();
        let w_dear = concordance_omega(&net, &theta, &dear).unwrap();
        assert!((w_cheap - 1.0).abs() < 1e-9);
        assert!(w_dear.abs() < 1e-9, "max-cost walk scores zero: {w_dear}");
        assert!(w_mid > 0.0 && w_mid < 1.0);
        // ω(mid) = 1 − (1.5 − 0.5)/(2 − 0.5) = 1/3.
        assert!((w_mid - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn omega_decreases_when_detour_cost_rises() {
        let net = wide_diamond();
        let theta = tiered_theta();
        let mid = vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let before = concordance_omega(&net, &theta, &mid).unwrap();
        let mut dearer = theta.clone();
        dearer[1] = 0.9; // arc used by the scored path but not by x* or M
        let after = concordance_omega(&net, &dearer, &mid).unwrap();
        assert!(after < before, "{after} vs {before}");
    }

    #[test]
    fn omega_degenerate_when_all_walks_tie() {
        let net = PathNetwork {
            n_nodes: 3,
            arcs: vec![(0, 1), (1, 2)],
            source: 0,
            sink: 2,
        };
        assert!(matches!(
            concordance_omega(&net, &[1.0, 1.0], &[1.0, 1.0]),
            Err(Error::DegenerateRange)
        ));
    }

    fn two_link() -> TrafficInstance {
        TrafficInstance {
            free_flow: vec![1.0, 2.0],
            capacity: vec![1.0, 1.0],
            demand: 1.0,
            degree: 1,
        }
    }

    #[test]
    fn two_link_calibration_recovers_four() {
        // Equal times at the observed split: 1 + 0.75θ = 2 + 0.5θ ⇒ θ = 4.
        let theta = calibrate_traffic(&two_link(), &[vec![0.75, 0.25]], 1e-9).unwrap();
        assert!((theta[0] - 4.0).abs() < 1e-3, "{}", theta[0]);
    }

    #[test]
    fn two_link_equilibrium_reproduces_split() {
        let flows = solve_equilibrium(&two_link(), &[4.0]).unwrap();
        assert!((flows[0] - 0.75).abs() < 1e-3, "{:?}", flows);
        assert!((flows[1] - 0.25).abs() < 1e-3);
    }

    #[test]
    fn symmetric_network_calibrates_to_zero() {
        let inst = TrafficInstance {
            free_flow: vec![1.0, 1.0],
            capacity: vec![1.0, 1.0],
            demand: 1.0,
            degree: 1,
        };
        let theta = calibrate_traffic(&inst, &[vec![0.5, 0.5]], 0.1).unwrap();
        assert!(theta[0].abs() < 1e-6, "{}", theta[0]);
    }

    #[test]
    fn observed_flows_must_route_demand() {
        assert!(matches!(
            calibrate_traffic(&two_link(), &[vec![0.5, 0.4]], 0.1),
            Err(Error::DecompositionInfeasible)
        ));
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_instance(InstanceKind::Lp, 0, 4, 0.0).unwrap();
        let b = generate_instance(InstanceKind::Lp, 0, 4, 0.0).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = generate_instance(InstanceKind::Lp, 1, 4, 0.0).unwrap();
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn planted_lp_instance_has_zero_risk() {
        let GeneratedInstance::Lp { dataset, space, theta_true } =
            generate_instance(InstanceKind::Lp, 7, 3, 0.0).unwrap()
        else {
            panic!("wrong kind");
        };
        let res = datadriven::estimate_aso(&dataset, &space).unwrap();
        assert!(res.objective < 1e-7, "{}", res.objective);
        // The planted parameter itself is zero-loss too.
        for (o, m) in dataset.observations.iter().zip(&dataset.models) {
            assert!(datadriven::eval_aso(m, &theta_true, &o.x_hat).unwrap() < 1e-7);
        }
    }

    #[test]
    fn noised_lp_instance_has_positive_risk() {
        let GeneratedInstance::Lp { dataset, space, .. } =
            generate_instance(InstanceKind::Lp, 7, 3, 0.1).unwrap()
        else {
            panic!("wrong kind");
        };
        let res = datadriven::estimate_aso(&dataset, &space).unwrap();
        assert!(res.objective > 1e-6, "{}", res.objective);
    }

    #[test]
    fn knapsack_and_path_generators_are_consistent() {
        let GeneratedInstance::Knapsack { model, theta_true, x_hat } =
            generate_instance(InstanceKind::Knapsack, 3, 5, 0.0).unwrap()
        else {
            panic!("wrong kind");
        };
        let canonical = crate::model::canonicalize(&model).unwrap();
        let neg = linalg::scale(&theta_true, -1.0);
        let (opt, _) = solver::forward_value(&canonical, &neg).unwrap();
        assert!((linalg::dot(&neg, &x_hat) - opt).abs() < 1e-9);

        let GeneratedInstance::Path { network, theta_true, paths } =
            generate_instance(InstanceKind::Path, 3, 3, 0.0).unwrap()
        else {
            panic!("wrong kind");
        };
        assert!(network.is_path(&paths[0]));
        let (short, _) = network.shortest_path(&theta_true).unwrap();
        assert!((linalg::dot(&theta_true, &paths[0]) - short).abs() < 1e-9);
    }

    #[test]
    fn traffic_generator_flows_are_equilibria() {
        let GeneratedInstance::Traffic { instance, theta_true, flows } =
            generate_instance(InstanceKind::Traffic, 11, 2, 0.0).unwrap()
        else {
            panic!("wrong kind");
        };
        let again = solve_equilibrium(&instance, &theta_true).unwrap();
        assert!(linalg::norm_inf(&linalg::sub(&again, &flows[0])) < 1e-6);
    }
}
