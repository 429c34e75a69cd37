//! Affine constraint sets of parallel, sequential and general testers, and of their duals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::ProductBasis;
use crate::linalg::c;
use crate::tensor::{LabeledOperator, SpaceLabel, TensorError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyClass {
    Par,
    Seq,
    Gen,
}

impl StrategyClass {
    pub const ALL: [StrategyClass; 3] = [StrategyClass::Par, StrategyClass::Seq, StrategyClass::Gen];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyClass::Par => "par",
            StrategyClass::Seq => "seq",
            StrategyClass::Gen => "gen",
        }
    }
}

impl fmt::Display for StrategyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for StrategyClass {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "par" => Ok(StrategyClass::Par),
            "seq" => Ok(StrategyClass::Seq),
            "gen" => Ok(StrategyClass::Gen),
            other => Err(StrategyError::UnknownStrategy(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("unsupported strategy {strategy} with k = {k}")]
    Unsupported { strategy: StrategyClass, k: usize },
    #[error("layout mismatch: {0}")]
    Layout(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Input and output dimension of every slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotDims {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

impl SlotDims {
    pub fn uniform(k: usize, d_in: usize, d_out: usize) -> Self {
        SlotDims { inputs: vec![d_in; k], outputs: vec![d_out; k] }
    }

    pub fn slots(&self) -> usize {
        self.inputs.len()
    }

    pub fn d_in(&self) -> usize {
        self.inputs.iter().product()
    }

    pub fn d_out(&self) -> usize {
        self.outputs.iter().product()
    }

    pub fn layout(&self) -> Vec<SpaceLabel> {
        let mut l: Vec<SpaceLabel> =
            self.inputs.iter().enumerate().map(|(j, &d)| SpaceLabel::input(format!("I{}", j + 1), d)).collect();
        l.extend(self.outputs.iter().enumerate().map(|(j, &d)| SpaceLabel::output(format!("O{}", j + 1), d)));
        l
    }
}

/// `Σ_t c_t · _{X_t}(·)`; an empty label set is the identity map.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    pub terms: Vec<(f64, Vec<String>)>,
}

impl LinearMap {
    fn difference(lhs: &[String], rhs: &[String]) -> Self {
        LinearMap { terms: vec![(1.0, lhs.to_vec()), (-1.0, rhs.to_vec())] }
    }

    pub fn apply(&self, op: &LabeledOperator) -> Result<LabeledOperator, TensorError> {
        let mut acc = LabeledOperator::zeros(op.layout().to_vec())?;
        for (coef, labels) in &self.terms {
            let names: Vec<&str> = labels.iter().map(String::as_str).collect();
            acc = acc.add(&op.trace_and_replace(&names)?.scale(*coef))?;
        }
        Ok(acc)
    }
}

/// A homogeneous equation `map(W) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub map: LinearMap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetKind {
    /// Σ_i T_i of a tester.
    Process,
    /// Normalized dual operator W̄.
    DualAffine,
}

#[derive(Clone, Debug)]
pub struct ConstraintSet {
    pub strategy: StrategyClass,
    pub k: usize,
    pub kind: SetKind,
    pub layout: Vec<SpaceLabel>,
    pub psd_vars: String,
    pub linear_eqs: Vec<Constraint>,
    pub trace_eq: f64,
}

fn names(prefix: &str, slots: impl IntoIterator<Item = usize>) -> Vec<String> {
    slots.into_iter().map(|j| format!("{prefix}{j}")).collect()
}

fn io(slots: impl IntoIterator<Item = usize>) -> Vec<String> {
    slots.into_iter().flat_map(|j| [format!("I{j}"), format!("O{j}")]).collect()
}

fn cat(parts: &[Vec<String>]) -> Vec<String> {
    parts.concat()
}

fn eq(name: impl Into<String>, map: LinearMap) -> Constraint {
    Constraint { name: name.into(), map }
}

fn labels(spec: &str) -> Vec<String> {
    spec.split_whitespace().map(str::to_string).collect()
}

fn weighted(terms: &[(f64, &str)]) -> LinearMap {
    LinearMap { terms: terms.iter().map(|(cf, s)| (*cf, labels(s))).collect() }
}

fn general_process_eqs(k: usize) -> Vec<Constraint> {
    let w = |a: &str, b: &str| LinearMap::difference(&labels(a), &labels(b));
    match k {
        1 => vec![eq("W = _O1 W", w("", "O1"))],
        2 => vec![
            eq("_A W = _{A BO} W", w("I1 O1", "I1 O1 O2")),
            eq("_B W = _{AO B} W", w("I2 O2", "O1 I2 O2")),
            eq(
                "W + _{AO BO} W = _AO W + _BO W",
                weighted(&[(1.0, ""), (1.0, "O1 O2"), (-1.0, "O1"), (-1.0, "O2")]),
            ),
        ],
        _ => vec![
            eq("_{AB} W = _{AB CO} W", w("I1 O1 I2 O2", "I1 O1 I2 O2 O3")),
            eq("_{BC} W = _{AO BC} W", w("I2 O2 I3 O3", "O1 I2 O2 I3 O3")),
            eq("_{AC} W = _{AC BO} W", w("I1 O1 I3 O3", "I1 O1 O2 I3 O3")),
            eq(
                "A marginal",
                weighted(&[(1.0, "I1 O1"), (1.0, "I1 O1 O2 O3"), (-1.0, "I1 O1 O2"), (-1.0, "I1 O1 O3")]),
            ),
            eq(
                "B marginal",
                weighted(&[(1.0, "I2 O2"), (1.0, "O1 I2 O2 O3"), (-1.0, "O1 I2 O2"), (-1.0, "I2 O2 O3")]),
            ),
            eq(
                "C marginal",
                weighted(&[(1.0, "I3 O3"), (1.0, "O1 O2 I3 O3"), (-1.0, "O1 I3 O3"), (-1.0, "O2 I3 O3")]),
            ),
            eq(
                "full",
                weighted(&[
                    (1.0, ""),
                    (1.0, "O1 O2"),
                    (1.0, "O1 O3"),
                    (1.0, "O2 O3"),
                    (-1.0, "O1"),
                    (-1.0, "O2"),
                    (-1.0, "O3"),
                    (-1.0, "O1 O2 O3"),
                ]),
            ),
        ],
    }
}

fn check_dims(strategy: StrategyClass, k: usize, dims: &SlotDims) -> Result<(), StrategyError> {
    if dims.slots() != k || k == 0 || (strategy == StrategyClass::Gen && k > 3) {
        return Err(StrategyError::Unsupported { strategy, k });
    }
    Ok(())
}

/// Affine description of `W = Σ_i T_i` for the given strategy class.
pub fn build_constraints(strategy: StrategyClass, k: usize, dims: &SlotDims) -> Result<ConstraintSet, StrategyError> {
    check_dims(strategy, k, dims)?;
    let outs = names("O", 1..=k);
    let linear_eqs = match strategy {
        StrategyClass::Par => vec![eq("W = _O W", LinearMap::difference(&[], &outs))],
        StrategyClass::Seq => {
            let mut v = vec![eq(format!("W = _O{k} W"), LinearMap::difference(&[], &[format!("O{k}")]))];
            for j in (2..=k).rev() {
                let tail = io(j..=k);
                let wider = cat(&[vec![format!("O{}", j - 1)], tail.clone()]);
                v.push(eq(format!("slot {j} comb condition"), LinearMap::difference(&tail, &wider)));
            }
            v
        }
        StrategyClass::Gen => general_process_eqs(k),
    };
    Ok(ConstraintSet {
        strategy,
        k,
        kind: SetKind::Process,
        layout: dims.layout(),
        psd_vars: "T_i ⪰ 0 for every outcome, W = Σ_i T_i".into(),
        linear_eqs,
        trace_eq: dims.d_out() as f64,
    })
}

/// Affine set of the normalized dual operator W̄: channels (PAR), channels with memory (SEQ),
/// non-signaling channels (GEN).
pub fn dual_affine_constraints(
    strategy: StrategyClass,
    k: usize,
    dims: &SlotDims,
) -> Result<ConstraintSet, StrategyError> {
    check_dims(strategy, k, dims)?;
    let outs = names("O", 1..=k);
    let all = io(1..=k);
    let channel = eq("Tr_O W̄ ∝ 𝟙_I", LinearMap::difference(&outs, &all));
    let linear_eqs = match strategy {
        StrategyClass::Par => vec![channel],
        StrategyClass::Seq => (1..=k)
            .rev()
            .map(|j| {
                let later = io(j + 1..=k);
                let lhs = cat(&[vec![format!("O{j}")], later.clone()]);
                let rhs = cat(&[vec![format!("I{j}"), format!("O{j}")], later]);
                eq(format!("memory condition at slot {j}"), LinearMap::difference(&lhs, &rhs))
            })
            .collect(),
        StrategyClass::Gen => {
            let mut v = vec![channel];
            for j in 1..=k {
                v.push(eq(
                    format!("no signaling from slot {j}"),
                    LinearMap::difference(&[format!("O{j}")], &[format!("I{j}"), format!("O{j}")]),
                ));
            }
            v
        }
    };
    Ok(ConstraintSet {
        strategy,
        k,
        kind: SetKind::DualAffine,
        layout: dims.layout(),
        psd_vars: "W̄ ⪰ 0".into(),
        linear_eqs,
        trace_eq: dims.d_in() as f64,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub constraint_residuals: Vec<(String, f64)>,
    pub trace_residual: f64,
    pub block_min_eigenvalues: Vec<f64>,
    pub failing_blocks: Vec<usize>,
    pub passed: bool,
}

impl ConstraintSet {
    pub fn side(&self) -> usize {
        self.layout.iter().map(|l| l.dim()).product()
    }

    fn bit(&self, name: &str) -> u32 {
        let p = self.layout.iter().position(|l| l.name() == name).expect("constraint labels come from the layout");
        1 << p
    }

    /// Eigenvalue of each equation's map on product-basis strings supported on `pattern`.
    pub fn eigenvalues(&self, pattern: u32) -> Vec<f64> {
        self.linear_eqs
            .iter()
            .map(|cst| {
                cst.map
                    .terms
                    .iter()
                    .filter(|(_, ls)| ls.iter().all(|l| pattern & self.bit(l) == 0))
                    .map(|(cf, _)| cf)
                    .sum()
            })
            .collect()
    }

    /// Whether strings supported on `pattern` lie in the kernel of every equation.
    pub fn allows(&self, pattern: u32) -> bool {
        self.eigenvalues(pattern).iter().all(|v| v.abs() < 1e-12)
    }

    /// Allowed flags for all `2^labels` support patterns.
    pub fn allowed_patterns(&self) -> Vec<bool> {
        (0..1u32 << self.layout.len()).map(|p| self.allows(p)).collect()
    }

    fn align(&self, op: &LabeledOperator) -> Result<LabeledOperator, StrategyError> {
        let names: Vec<&str> = self.layout.iter().map(|l| l.name()).collect();
        let out = op.permute(&names).map_err(|e| StrategyError::Layout(e.to_string()))?;
        if out.layout() != self.layout.as_slice() {
            return Err(StrategyError::Layout(format!(
                "operator layout {:?} does not match {:?}",
                op.names(),
                names
            )));
        }
        Ok(out)
    }

    /// Frobenius residual of every linear equation.
    pub fn residuals(&self, op: &LabeledOperator) -> Result<Vec<(String, f64)>, StrategyError> {
        let w = self.align(op)?;
        self.linear_eqs
            .iter()
            .map(|cst| Ok((cst.name.clone(), cst.map.apply(&w)?.norm())))
            .collect()
    }

    /// Orthogonal projection onto the affine set (ignoring positivity).
    pub fn project(&self, op: &LabeledOperator) -> Result<LabeledOperator, StrategyError> {
        let w = self.align(op)?;
        let dims: Vec<usize> = self.layout.iter().map(|l| l.dim()).collect();
        let basis = ProductBasis::new(&dims);
        let allowed = self.allowed_patterns();
        let h = crate::linalg::hermitian_part(w.matrix());
        let coeffs = basis.coefficients(&h);
        let root_n = (self.side() as f64).sqrt();
        let terms = coeffs.iter().enumerate().filter_map(|(s, &x)| {
            if s == 0 {
                Some((0, self.trace_eq / root_n))
            } else if allowed[basis.support(s) as usize] {
                Some((s, x))
            } else {
                None
            }
        });
        Ok(w.with_matrix(basis.expand(terms))?)
    }
}

/// Checks `Σ ops` against the set's linear equations and trace, and each block for positivity.
pub fn validate(ops: &[LabeledOperator], cs: &ConstraintSet, tol: f64) -> Result<ValidationReport, StrategyError> {
    if ops.is_empty() {
        return Err(StrategyError::Layout("no operators to validate".into()));
    }
    let aligned = ops.iter().map(|o| cs.align(o)).collect::<Result<Vec<_>, _>>()?;
    let w = crate::tensor::sum(&aligned)?;
    let constraint_residuals = cs.residuals(&w)?;
    let trace_residual = (w.trace() - c(cs.trace_eq, 0.0)).norm();
    let block_min_eigenvalues: Vec<f64> = aligned
        .iter()
        .map(|o| if o.is_hermitian(tol.max(1e-12) * o.side() as f64) { o.min_eigenvalue() } else { f64::NEG_INFINITY })
        .collect();
    let failing_blocks: Vec<usize> =
        block_min_eigenvalues.iter().enumerate().filter(|(_, &v)| v < -tol).map(|(i, _)| i).collect();
    let passed = failing_blocks.is_empty()
        && trace_residual <= tol
        && constraint_residuals.iter().all(|(_, r)| *r <= tol);
    Ok(ValidationReport { constraint_residuals, trace_residual, block_min_eigenvalues, failing_blocks, passed })
}
