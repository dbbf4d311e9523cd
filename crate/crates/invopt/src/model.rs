//! Domain types: forward models, objective families, parameter spaces,
//! datasets, and MDPs, plus their validation and canonicalization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance used when deciding membership of θ in a parameter space.
pub const PARAM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSense {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Continuous,
    Integer,
}

/// A linear (or mixed-integer linear) forward model
/// `min/max cᵀx  s.t.  rows over x`, with per-variable integrality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearForwardModel {
    pub cost: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub row_sense: Vec<RowSense>,
    pub integrality: Vec<VarKind>,
    pub sense: Sense,
}

impl LinearForwardModel {
    /// Canonical continuous model `min cᵀx, Ax ≥ b`, all variables free.
    pub fn canonical(cost: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<f64>) -> Self {
        let m = b.len();
        let n = cost.len();
        LinearForwardModel {
            cost,
            a,
            b,
            row_sense: vec![RowSense::Ge; m],
            integrality: vec![VarKind::Continuous; n],
            sense: Sense::Min,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn is_integer(&self) -> bool {
        self.integrality.iter().any(|k| *k == VarKind::Integer)
    }

    pub fn check_dims(&self) -> Result<()> {
        let n = self.cost.len();
        let m = self.b.len();
        if self.a.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} rows but rhs has {} entries",
                self.a.len(),
                m
            )));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} columns but cost has {} entries",
                    i,
                    row.len(),
                    n
                )));
            }
        }
        if self.row_sense.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{} row senses for {} rows",
                self.row_sense.len(),
                m
            )));
        }
        if self.integrality.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} integrality flags for {} variables",
                self.integrality.len(),
                n
            )));
        }
        Ok(())
    }

    /// Max over rows of the `≥`-form violation `bᵢ − aᵢᵀx` at `x`
    /// (model must be canonical).
    pub fn feasibility_violation(&self, x: &[f64]) -> f64 {
        let ax = linalg::mat_vec(&self.a, x);
        ax.iter()
            .zip(&self.b)
            .fold(0.0f64, |acc, (&axi, &bi)| acc.max(bi - axi))
    }

    /// The same model with a different cost vector (θ candidates).
    pub fn with_cost(&self, cost: Vec<f64>) -> Self {
        let mut m = self.clone();
        m.cost = cost;
        m
    }
}

/// Rewrite a model into min-sense, all-`≥` form. Idempotent: a canonical
/// model maps to an identical model. `Eq` rows become a `≥`/`≤` pair.
pub fn canonicalize(model: &LinearForwardModel) -> Result<LinearForwardModel> {
    model.check_dims()?;
    let flip = model.sense == Sense::Max;
    let cost: Vec<f64> = if flip {
        model.cost.iter().map(|c| -c).collect()
    } else {
        model.cost.clone()
    };
    let mut a = Vec::with_capacity(model.a.len());
    let mut b = Vec::with_capacity(model.b.len());
    for ((row, &rhs), &sense) in model.a.iter().zip(&model.b).zip(&model.row_sense) {
        match sense {
            RowSense::Ge => {
                a.push(row.clone());
                b.push(rhs);
            }
            RowSense::Le => {
                a.push(linalg::scale(row, -1.0));
                b.push(-rhs);
            }
            RowSense::Eq => {
                a.push(row.clone());
                b.push(rhs);
                a.push(linalg::scale(row, -1.0));
                b.push(-rhs);
            }
        }
    }
    let m = b.len();
    Ok(LinearForwardModel {
        cost,
        a,
        b,
        row_sense: vec![RowSense::Ge; m],
        integrality: model.integrality.clone(),
        sense: Sense::Min,
    })
}

/// Canonicalize and remember the objective sense as a sign: estimated
/// parameters live in the model's original sense while duality runs on the
/// canonical min form with cost `sign·θ`.
pub fn canonical_with_sign(model: &LinearForwardModel) -> Result<(LinearForwardModel, f64)> {
    let sign = if model.sense == Sense::Max { -1.0 } else { 1.0 };
    Ok((canonicalize(model)?, sign))
}

/// A single-variable power term `coef · x_var^power`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Monomial {
    pub var: usize,
    pub coef: f64,
    pub power: f64,
}

pub type Poly = Vec<Monomial>;

pub fn poly_eval(p: &Poly, x: &[f64]) -> f64 {
    p.iter().map(|t| t.coef * x[t.var].powf(t.power)).sum()
}

pub fn poly_grad(p: &Poly, x: &[f64], out: &mut [f64]) {
    for t in p {
        out[t.var] += t.coef * t.power * x[t.var].powf(t.power - 1.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSign {
    Free,
    NonNeg,
    NonPos,
}

/// Parametric objective family `f(x, θ)` with gradient affine in θ.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    /// `f = θᵀx`.
    Linear,
    /// `f = ½xᵀΦx + ψᵀx − θᵀx` with Φ symmetric PSD.
    Quadratic { phi: Vec<Vec<f64>>, psi: Vec<f64> },
    /// `f = fixed(x) + Σ_b θ_b · base_b(x)` with per-weight sign constraints
    /// preserving convexity of the combination.
    Basis {
        fixed: Poly,
        bases: Vec<Poly>,
        signs: Vec<WeightSign>,
    },
}

impl ObjectiveSpec {
    /// Dimension of the parameter vector this family expects for an
    /// `n`-variable decision.
    pub fn theta_dim(&self, n: usize) -> usize {
        match self {
            ObjectiveSpec::Linear | ObjectiveSpec::Quadratic { .. } => n,
            ObjectiveSpec::Basis { bases, .. } => bases.len(),
        }
    }

    pub fn eval(&self, x: &[f64], theta: &[f64]) -> f64 {
        match self {
            ObjectiveSpec::Linear => linalg::dot(theta, x),
            ObjectiveSpec::Quadratic { phi, psi } => {
                0.5 * linalg::dot(x, &linalg::mat_vec(phi, x)) + linalg::dot(psi, x)
                    - linalg::dot(theta, x)
            }
            ObjectiveSpec::Basis { fixed, bases, .. } => {
                poly_eval(fixed, x)
                    + bases
                        .iter()
                        .zip(theta)
                        .map(|(b, &t)| t * poly_eval(b, x))
                        .sum::<f64>()
            }
        }
    }

    pub fn grad(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        match self {
            ObjectiveSpec::Linear => theta.to_vec(),
            ObjectiveSpec::Quadratic { phi, psi } => {
                let mut g = linalg::mat_vec(phi, x);
                linalg::axpy(&mut g, 1.0, psi);
                linalg::axpy(&mut g, -1.0, theta);
                g
            }
            ObjectiveSpec::Basis { fixed, bases, .. } => {
                let mut g = vec![0.0; x.len()];
                poly_grad(fixed, x, &mut g);
                let mut gb = vec![0.0; x.len()];
                for (b, &t) in bases.iter().zip(theta) {
                    gb.iter_mut().for_each(|v| *v = 0.0);
                    poly_grad(b, x, &mut gb);
                    linalg::axpy(&mut g, t, &gb);
                }
                g
            }
        }
    }

    /// Decompose the gradient as `grad(x, θ) = g₀(x) + G(x)·θ`.
    /// Every supported family has a gradient affine in θ.
    pub fn grad_affine(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = x.len();
        match self {
            ObjectiveSpec::Linear => {
                let mut g = vec![vec![0.0; n]; n];
                for (i, row) in g.iter_mut().enumerate() {
                    row[i] = 1.0;
                }
                (vec![0.0; n], g)
            }
            ObjectiveSpec::Quadratic { phi, psi } => {
                let mut g0 = linalg::mat_vec(phi, x);
                linalg::axpy(&mut g0, 1.0, psi);
                let mut g = vec![vec![0.0; n]; n];
                for (i, row) in g.iter_mut().enumerate() {
                    row[i] = -1.0;
                }
                (g0, g)
            }
            ObjectiveSpec::Basis { fixed, bases, .. } => {
                let mut g0 = vec![0.0; n];
                poly_grad(fixed, x, &mut g0);
                let mut g = vec![vec![0.0; bases.len()]; n];
                let mut gb = vec![0.0; n];
                for (k, b) in bases.iter().enumerate() {
                    gb.iter_mut().for_each(|v| *v = 0.0);
                    poly_grad(b, x, &mut gb);
                    for (i, &v) in gb.iter().enumerate() {
                        g[i][k] = v;
                    }
                }
                (g0, g)
            }
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            ObjectiveSpec::Linear => Ok(()),
            ObjectiveSpec::Quadratic { phi, psi } => {
                if phi.len() != n || phi.iter().any(|r| r.len() != n) || psi.len() != n {
                    return Err(Error::DimensionMismatch(
                        "quadratic objective dimensions".into(),
                    ));
                }
                for i in 0..n {
                    for j in (i + 1)..n {
                        if (phi[i][j] - phi[j][i]).abs() > 1e-9 {
                            return Err(Error::InvalidInput(
                                "quadratic matrix must be symmetric".into(),
                            ));
                        }
                    }
                }
                let ev = linalg::symmetric_eigenvalues(phi);
                if ev.iter().any(|&e| e < -1e-9) {
                    return Err(Error::InvalidInput(format!(
                        "quadratic matrix is not positive semidefinite (min eigenvalue {:.3e})",
                        ev.iter().cloned().fold(f64::INFINITY, f64::min)
                    )));
                }
                Ok(())
            }
            ObjectiveSpec::Basis { fixed, bases, signs } => {
                if signs.len() != bases.len() {
                    return Err(Error::DimensionMismatch(
                        "one sign constraint per basis weight required".into(),
                    ));
                }
                for t in fixed.iter().chain(bases.iter().flatten()) {
                    if t.var >= n {
                        return Err(Error::DimensionMismatch(format!(
                            "monomial refers to variable {} of {}",
                            t.var, n
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Check declared sign constraints on Basis weights; no-op otherwise.
    pub fn check_weight_signs(&self, theta: &[f64]) -> Result<()> {
        if let ObjectiveSpec::Basis { signs, .. } = self {
            for (k, (&s, &t)) in signs.iter().zip(theta).enumerate() {
                let ok = match s {
                    WeightSign::Free => true,
                    WeightSign::NonNeg => t >= -PARAM_TOL,
                    WeightSign::NonPos => t <= PARAM_TOL,
                };
                if !ok {
                    return Err(Error::InvalidInput(format!(
                        "basis weight {k} violates its sign constraint"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A smooth convex objective over the polyhedron `Ax ≥ b`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexForwardModel {
    pub objective: ObjectiveSpec,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl ConvexForwardModel {
    pub fn num_vars(&self) -> usize {
        self.a.first().map_or(0, |r| r.len())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.a.len() != self.b.len() {
            return Err(Error::DimensionMismatch(
                "constraint matrix and rhs disagree".into(),
            ));
        }
        if self.a.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("ragged constraint matrix".into()));
        }
        self.objective.validate(n)
    }

    pub fn feasibility_violation(&self, x: &[f64]) -> f64 {
        let ax = linalg::mat_vec(&self.a, x);
        ax.iter()
            .zip(&self.b)
            .fold(0.0f64, |acc, (&axi, &bi)| acc.max(bi - axi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormP {
    One,
    Inf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Normalization {
    None,
    L1Sphere,
    LInfSphere,
    FixedComponent { index: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveMode {
    /// Minimize `‖θ − θ̂‖_p` against the prior.
    NormToPrior { p: NormP },
    /// Minimize `wᵀθ`.
    LinearCost { w: Vec<f64> },
    /// Pure feasibility (only valid where the estimator allows it).
    Zero,
}

/// The admissible set Θ: linear inequalities `Gθ ≥ h`, equalities `Eθ = f`,
/// box bounds, and a normalization rule, plus the inverse objective h(θ).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub dim: usize,
    /// Rows `gᵀθ ≥ h`.
    pub ineq: Vec<(Vec<f64>, f64)>,
    /// Rows `eᵀθ = f`.
    pub eq: Vec<(Vec<f64>, f64)>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    pub normalization: Normalization,
    pub prior: Option<Vec<f64>>,
    pub objective_mode: ObjectiveMode,
}

/// One convex polyhedral piece of Θ after lowering the normalization rule.
#[derive(Debug, Clone)]
pub struct ConvexPiece {
    /// Rows `gᵀθ ≥ h` (box bounds already lowered here).
    pub ineq: Vec<(Vec<f64>, f64)>,
    /// Rows `eᵀθ = f`.
    pub eq: Vec<(Vec<f64>, f64)>,
}

impl ParameterSpace {
    /// An unconstrained space with a norm-to-prior objective.
    pub fn free(dim: usize, prior: Vec<f64>, p: NormP) -> Self {
        ParameterSpace {
            dim,
            ineq: vec![],
            eq: vec![],
            lower: vec![None; dim],
            upper: vec![None; dim],
            normalization: Normalization::None,
            prior: Some(prior),
            objective_mode: ObjectiveMode::NormToPrior { p },
        }
    }

    /// `θ ≥ 0, ‖θ‖₁ = 1` with a norm-to-prior objective.
    pub fn unit_simplex(dim: usize, prior: Vec<f64>, p: NormP) -> Self {
        let mut s = Self::free(dim, prior, p);
        s.lower = vec![Some(0.0); dim];
        s.normalization = Normalization::L1Sphere;
        s
    }

    pub fn check_dims(&self) -> Result<()> {
        let d = self.dim;
        let bad = self.ineq.iter().any(|(g, _)| g.len() != d)
            || self.eq.iter().any(|(e, _)| e.len() != d)
            || self.lower.len() != d
            || self.upper.len() != d
            || self.prior.as_ref().is_some_and(|p| p.len() != d);
        if bad {
            return Err(Error::DimensionMismatch("parameter space fields".into()));
        }
        if let Normalization::FixedComponent { index, .. } = self.normalization {
            if index >= d {
                return Err(Error::DimensionMismatch(
                    "fixed-component index out of range".into(),
                ));
            }
        }
        Ok(())
    }

    fn all_nonnegative(&self) -> bool {
        self.lower.iter().all(|l| matches!(l, Some(v) if *v >= -PARAM_TOL))
    }

    fn base_rows(&self) -> (Vec<(Vec<f64>, f64)>, Vec<(Vec<f64>, f64)>) {
        let mut ineq = self.ineq.clone();
        for (i, (lo, up)) in self.lower.iter().zip(&self.upper).enumerate() {
            if let Some(l) = lo {
                let mut g = vec![0.0; self.dim];
                g[i] = 1.0;
                ineq.push((g, *l));
            }
            if let Some(u) = up {
                let mut g = vec![0.0; self.dim];
                g[i] = -1.0;
                ineq.push((g, -u));
            }
        }
        (ineq, self.eq.clone())
    }

    /// Lower the normalization rule into explicit convex pieces. L1 spheres
    /// under a nonnegativity box collapse to one hyperplane; otherwise each
    /// sign pattern (L1) or each facet `θ_k = ±1` (L∞) is its own piece.
    pub fn convex_pieces(&self) -> Result<Vec<ConvexPiece>> {
        self.check_dims()?;
        let (ineq, eq) = self.base_rows();
        let d = self.dim;
        match self.normalization {
            Normalization::None => Ok(vec![ConvexPiece { ineq, eq }]),
            Normalization::FixedComponent { index, value } => {
                let mut e = vec![0.0; d];
                e[index] = 1.0;
                let mut eq = eq;
                eq.push((e, value));
                Ok(vec![ConvexPiece { ineq, eq }])
            }
            Normalization::L1Sphere => {
                if self.all_nonnegative() {
                    let mut eq = eq;
                    eq.push((vec![1.0; d], 1.0));
                    return Ok(vec![ConvexPiece { ineq, eq }]);
                }
                if d > 12 {
                    return Err(Error::TooLarge(format!(
                        "L1-sphere sign enumeration over {d} free components"
                    )));
                }
                let mut pieces = Vec::with_capacity(1 << d);
                for mask in 0..(1u32 << d) {
                    let signs: Vec<f64> = (0..d)
                        .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                        .collect();
                    let mut pi = ineq.clone();
                    for (i, &s) in signs.iter().enumerate() {
                        let mut g = vec![0.0; d];
                        g[i] = s;
                        pi.push((g, 0.0));
                    }
                    let mut pe = eq.clone();
                    pe.push((signs, 1.0));
                    pieces.push(ConvexPiece { ineq: pi, eq: pe });
                }
                Ok(pieces)
            }
            Normalization::LInfSphere => {
                let mut pieces = Vec::with_capacity(2 * d);
                for k in 0..d {
                    for sign in [1.0, -1.0] {
                        let mut pi = ineq.clone();
                        for j in 0..d {
                            if j == k {
                                continue;
                            }
                            let mut g = vec![0.0; d];
                            g[j] = 1.0;
                            pi.push((g.clone(), -1.0));
                            g[j] = -1.0;
                            pi.push((g, -1.0));
                        }
                        let mut pe = eq.clone();
                        let mut e = vec![0.0; d];
                        e[k] = 1.0;
                        pe.push((e, sign));
                        pieces.push(ConvexPiece { ineq: pi, eq: pe });
                    }
                }
                Ok(pieces)
            }
        }
    }

    /// Human-readable list of constraints θ violates; empty iff θ ∈ Θ
    /// within `PARAM_TOL`-scale tolerances.
    pub fn validate_parameter(&self, theta: &[f64]) -> Vec<String> {
        let mut out = Vec::new();
        if theta.len() != self.dim {
            out.push(format!(
                "parameter has {} entries, space expects {}",
                theta.len(),
                self.dim
            ));
            return out;
        }
        for (k, (g, h)) in self.ineq.iter().enumerate() {
            let v = linalg::dot(g, theta);
            if v < h - PARAM_TOL {
                out.push(format!("inequality {k}: {v:.9} < {h:.9}"));
            }
        }
        for (k, (e, f)) in self.eq.iter().enumerate() {
            let v = linalg::dot(e, theta);
            if (v - f).abs() > PARAM_TOL {
                out.push(format!("equality {k}: {v:.9} ≠ {f:.9}"));
            }
        }
        for (i, (lo, up)) in self.lower.iter().zip(&self.upper).enumerate() {
            if let Some(l) = lo {
                if theta[i] < l - PARAM_TOL {
                    out.push(format!("component {i} below lower bound {l}"));
                }
            }
            if let Some(u) = up {
                if theta[i] > u + PARAM_TOL {
                    out.push(format!("component {i} above upper bound {u}"));
                }
            }
        }
        match self.normalization {
            Normalization::None => {}
            Normalization::L1Sphere => {
                let n1 = linalg::norm_1(theta);
                if (n1 - 1.0).abs() > PARAM_TOL {
                    out.push(format!("1-norm is {n1:.9}, expected 1"));
                }
            }
            Normalization::LInfSphere => {
                let ni = linalg::norm_inf(theta);
                if (ni - 1.0).abs() > PARAM_TOL {
                    out.push(format!("∞-norm is {ni:.9}, expected 1"));
                }
            }
            Normalization::FixedComponent { index, value } => {
                if (theta[index] - value).abs() > PARAM_TOL {
                    out.push(format!("component {index} is not fixed at {value}"));
                }
            }
        }
        out
    }

    /// Value of the inverse objective h(θ).
    pub fn objective_value(&self, theta: &[f64]) -> f64 {
        match &self.objective_mode {
            ObjectiveMode::NormToPrior { p } => {
                let prior = self.prior.clone().unwrap_or_else(|| vec![0.0; self.dim]);
                let d = linalg::sub(theta, &prior);
                match p {
                    NormP::One => linalg::norm_1(&d),
                    NormP::Inf => linalg::norm_inf(&d),
                }
            }
            ObjectiveMode::LinearCost { w } => linalg::dot(w, theta),
            ObjectiveMode::Zero => 0.0,
        }
    }
}

/// One observed decision tied to an instance in the model table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Observation {
    pub x_hat: Vec<f64>,
    #[serde(default)]
    pub instance: usize,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

/// Weighted observations over one or many forward instances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset<M> {
    pub observations: Vec<Observation>,
    pub models: Vec<M>,
    #[serde(default)]
    pub shared_region: bool,
}

impl<M> Dataset<M> {
    pub fn model_of(&self, obs: &Observation) -> &M {
        if self.shared_region {
            &self.models[0]
        } else {
            &self.models[obs.instance]
        }
    }

    pub fn validate_shape(&self) -> Result<()> {
        if self.models.is_empty() || self.observations.is_empty() {
            return Err(Error::InvalidInput(
                "dataset needs at least one model and one observation".into(),
            ));
        }
        if self.shared_region && self.models.len() != 1 {
            return Err(Error::InvalidInput(
                "shared-region dataset must carry exactly one model".into(),
            ));
        }
        let mut total = 0.0;
        for (i, o) in self.observations.iter().enumerate() {
            if !self.shared_region && o.instance >= self.models.len() {
                return Err(Error::InvalidInput(format!(
                    "observation {i} references missing instance {}",
                    o.instance
                )));
            }
            if !(o.weight > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "observation {i} has non-positive weight"
                )));
            }
            total += o.weight;
        }
        if !(total > 0.0) {
            return Err(Error::InvalidInput("weights must sum > 0".into()));
        }
        Ok(())
    }
}

/// Finite MDP with reward parameters θ ∈ R^{|S|·|A|}, indexed s·|A| + a.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpModel {
    pub n_states: usize,
    pub n_actions: usize,
    /// transition[s][a][s'] = p(s' | s, a).
    pub transition: Vec<Vec<Vec<f64>>>,
    pub gamma: f64,
    pub reward_space: ParameterSpace,
}

impl MdpModel {
    pub fn reward_index(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidInput("discount must lie in [0, 1)".into()));
        }
        if self.transition.len() != self.n_states {
            return Err(Error::DimensionMismatch("transition state count".into()));
        }
        for (s, per_a) in self.transition.iter().enumerate() {
            if per_a.len() != self.n_actions {
                return Err(Error::DimensionMismatch(format!(
                    "state {s} action count"
                )));
            }
            for (a, row) in per_a.iter().enumerate() {
                if row.len() != self.n_states {
                    return Err(Error::DimensionMismatch(format!(
                        "transition row ({s},{a}) length"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&p| p < -1e-12) {
                    return Err(Error::InvalidInput(format!(
                        "transition row ({s},{a}) is not a distribution (sum {sum:.12})"
                    )));
                }
            }
        }
        if self.reward_space.dim != self.n_states * self.n_actions {
            return Err(Error::DimensionMismatch(
                "reward space dimension must be |S|·|A|".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    Degenerate,
}

/// Outcome of any estimator: parameter, inverse objective, certificates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimationResult {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub per_obs_loss: Vec<f64>,
    pub duals: Vec<Vec<f64>>,
    pub status: EstStatus,
    pub diagnostics: BTreeMap<String, f64>,
}

impl EstimationResult {
    pub fn optimal(theta: Vec<f64>, objective: f64) -> Self {
        EstimationResult {
            theta,
            objective,
            per_obs_loss: vec![],
            duals: vec![],
            status: EstStatus::Optimal,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with_diag(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalize_flips_max_and_le() {
        let m = LinearForwardModel {
            cost: vec![1.0, 2.0],
            a: vec![vec![1.0, 1.0]],
            b: vec![3.0],
            row_sense: vec![RowSense::Le],
            integrality: vec![VarKind::Continuous; 2],
            sense: Sense::Max,
        };
        let c = canonicalize(&m).unwrap();
        assert_eq!(c.sense, Sense::Min);
        assert_eq!(c.cost, vec![-1.0, -2.0]);
        assert_eq!(c.a, vec![vec![-1.0, -1.0]]);
        assert_eq!(c.b, vec![-3.0]);
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let m = LinearForwardModel {
            cost: vec![1.0],
            a: vec![vec![2.0], vec![1.0]],
            b: vec![1.0, 0.0],
            row_sense: vec![RowSense::Eq, RowSense::Ge],
            integrality: vec![VarKind::Continuous],
            sense: Sense::Min,
        };
        let c1 = canonicalize(&m).unwrap();
        let c2 = canonicalize(&c1).unwrap();
        assert_eq!(c1.cost, c2.cost);
        assert_eq!(c1.a, c2.a);
        assert_eq!(c1.b, c2.b);
        assert_eq!(c1.b.len(), 3); // Eq split into two rows once
    }

    #[test]
    fn canonicalize_rejects_bad_dims() {
        let m = LinearForwardModel {
            cost: vec![1.0, 2.0],
            a: vec![vec![1.0, 1.0, 1.0]],
            b: vec![1.0],
            row_sense: vec![RowSense::Ge],
            integrality: vec![VarKind::Continuous; 2],
            sense: Sense::Min,
        };
        assert!(matches!(canonicalize(&m), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn parameter_validation_examples() {
        let s = ParameterSpace::unit_simplex(2, vec![0.9, 0.1], NormP::One);
        assert!(s.validate_parameter(&[0.5, 0.5]).is_empty());
        assert!(!s.validate_parameter(&[1.0, 1.0]).is_empty());
        let mut inf = ParameterSpace::free(2, vec![0.0, 0.0], NormP::One);
        inf.normalization = Normalization::LInfSphere;
        assert!(inf.validate_parameter(&[1.0, 0.0]).is_empty());
    }

    #[test]
    fn l1_sphere_nonnegative_is_single_piece() {
        let s = ParameterSpace::unit_simplex(3, vec![0.0; 3], NormP::One);
        let pieces = s.convex_pieces().unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].eq.len(), 1);
    }

    #[test]
    fn linf_sphere_expands_to_two_n_pieces() {
        let mut s = ParameterSpace::free(3, vec![0.0; 3], NormP::One);
        s.normalization = Normalization::LInfSphere;
        assert_eq!(s.convex_pieces().unwrap().len(), 6);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let specs = vec![
            ObjectiveSpec::Quadratic {
                phi: vec![vec![2.0, 0.5], vec![0.5, 1.0]],
                psi: vec![0.3, -0.2],
            },
            ObjectiveSpec::Basis {
                fixed: vec![Monomial { var: 0, coef: 1.0, power: 1.0 }],
                bases: vec![
                    vec![Monomial { var: 0, coef: 0.5, power: 2.0 }],
                    vec![Monomial { var: 1, coef: 1.0, power: 3.0 }],
                ],
                signs: vec![WeightSign::NonNeg, WeightSign::NonNeg],
            },
        ];
        let x = [0.7, 1.3];
        let theta = [0.4, 0.9];
        let h = 1e-6;
        for spec in &specs {
            let g = spec.grad(&x, &theta);
            for i in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let fd = (spec.eval(&xp, &theta) - spec.eval(&xm, &theta)) / (2.0 * h);
                let rel = (g[i] - fd).abs() / (1.0 + fd.abs());
                assert!(rel < 1e-6, "grad mismatch at {i}: {} vs {}", g[i], fd);
            }
        }
    }

    #[test]
    fn quadratic_psd_check() {
        let bad = ObjectiveSpec::Quadratic {
            phi: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            psi: vec![0.0, 0.0],
        };
        assert!(bad.validate(2).is_err());
    }

    #[test]
    fn mdp_validation() {
        let mdp = MdpModel {
            n_states: 2,
            n_actions: 2,
            transition: vec![
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![0.5, 0.5], vec![1.0, 0.0]],
            ],
            gamma: 0.9,
            reward_space: ParameterSpace::free(4, vec![0.0; 4], NormP::One),
        };
        assert!(mdp.validate().is_ok());
        let mut bad = mdp.clone();
        bad.transition[0][0][0] = 0.8;
        assert!(bad.validate().is_err());
    }
}
