//! Discrimination SDPs: assembly, solution and evaluation of testers.

mod ipm;
mod schur;

use serde::Serialize;
use thiserror::Error;

pub use ipm::{solve_blocks, IpmOutput, SolverOptions};
pub use schur::RowOperator;

use crate::basis::ProductBasis;
use crate::channels::{choi_power, Ensemble, UnitaryGate};
use crate::linalg::{self, c, CMat};
use crate::strategies::{self, ConstraintSet, SlotDims, StrategyClass, StrategyError};
use crate::tensor::{LabeledOperator, SpaceLabel, TensorError};

pub const MAX_BLOCK_SIDE: usize = 256;
pub const INACCURATE_GAP: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("block side {0} exceeds the supported maximum {MAX_BLOCK_SIDE}")]
    TooLarge(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("solver failed: gap {gap:.3e}, primal infeasibility {pinf:.3e}, dual infeasibility {dinf:.3e}")]
    Failed { gap: f64, pinf: f64, dinf: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Max,
    Min,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Solved,
    Inaccurate,
}

/// Block SDP over Hermitian matrices with constraint rows taken from a product basis.
///
/// `Max` problems are read through their primal objective, `Min` problems through
/// their dual objective; both are solved as the same primal-dual pair.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub strategy: StrategyClass,
    pub k: usize,
    pub sense: Sense,
    layout: Vec<SpaceLabel>,
    objective: Vec<CMat>,
    rows: RowOperator,
    rhs: Vec<f64>,
    d_in: usize,
}

/// Real parametrization of a Hermitian matrix: diagonal, then `√2·(Re, Im)` of the strict upper triangle.
pub fn hvec(h: &CMat) -> Vec<f64> {
    let n = h.nrows();
    let mut v: Vec<f64> = (0..n).map(|i| h[(i, i)].re).collect();
    let r2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in i + 1..n {
            v.push(r2 * h[(i, j)].re);
            v.push(r2 * h[(i, j)].im);
        }
    }
    v
}

impl SdpProblem {
    pub fn psd_blocks(&self) -> Vec<usize> {
        vec![self.rows.side(); self.objective.len()]
    }

    pub fn layout(&self) -> &[SpaceLabel] {
        &self.layout
    }

    pub fn objective_blocks(&self) -> &[CMat] {
        &self.objective
    }

    pub fn objective_hvec(&self) -> Vec<Vec<f64>> {
        self.objective.iter().map(hvec).collect()
    }

    pub fn constraint_count(&self) -> usize {
        self.rows.len()
    }

    /// Coefficient rows in the [`hvec`] parametrization; row `j` applies to `Σ_i X_i`.
    pub fn coefficient_rows(&self) -> Vec<Vec<f64>> {
        self.rows.dense_rows().iter().map(hvec).collect()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn row_operator(&self) -> &RowOperator {
        &self.rows
    }
}

#[derive(Clone, Debug)]
pub struct DualWitness {
    pub lambda: f64,
    pub wbar: LabeledOperator,
}

#[derive(Clone, Debug)]
pub struct DiscriminationResult {
    pub strategy: StrategyClass,
    pub k: usize,
    pub value: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub tester: Vec<LabeledOperator>,
    pub dual_witness: DualWitness,
    pub primal_dual_gap: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

fn validate_weights(weights: &[f64], gates: &[UnitaryGate]) -> Result<usize, SdpError> {
    if gates.is_empty() || gates.len() != weights.len() {
        return Err(SdpError::Invalid("weights and gates must be non-empty and of equal length".into()));
    }
    let d = gates[0].dim();
    if gates.iter().any(|g| g.dim() != d) {
        return Err(SdpError::Invalid("gates have mixed dimensions".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(SdpError::Invalid("weights must be finite and nonnegative".into()));
    }
    Ok(d)
}

fn objective_blocks(weights: &[f64], gates: &[UnitaryGate], k: usize) -> Vec<CMat> {
    gates
        .iter()
        .zip(weights)
        .map(|(g, w)| choi_power(g, k).into_matrix() * c(*w, 0.0))
        .collect()
}

fn build(
    weights: &[f64],
    gates: &[UnitaryGate],
    k: usize,
    strategy: StrategyClass,
    sense: Sense,
) -> Result<SdpProblem, SdpError> {
    let d = validate_weights(weights, gates)?;
    let dims = SlotDims::uniform(k, d, d);
    let side = dims.d_in() * dims.d_out();
    if side > MAX_BLOCK_SIDE {
        return Err(SdpError::TooLarge(side));
    }
    let layout = dims.layout();
    let ldims: Vec<usize> = layout.iter().map(|l| l.dim()).collect();
    let basis = ProductBasis::new(&ldims);
    let root_n = (side as f64).sqrt();
    let (rows, rhs) = match sense {
        Sense::Max => {
            let cs = strategies::build_constraints(strategy, k, &dims)?;
            let allowed = cs.allowed_patterns();
            let rows = basis.select(|p| p == 0 || !allowed[p as usize]);
            let rhs = rows.iter().map(|&s| if s == 0 { cs.trace_eq / root_n } else { 0.0 }).collect();
            (rows, rhs)
        }
        Sense::Min => {
            let cs = strategies::dual_affine_constraints(strategy, k, &dims)?;
            let allowed = cs.allowed_patterns();
            let rows = basis.select(|p| allowed[p as usize]);
            let rhs = rows.iter().map(|&s| if s == 0 { root_n / cs.trace_eq } else { 0.0 }).collect();
            (rows, rhs)
        }
    };
    Ok(SdpProblem {
        strategy,
        k,
        sense,
        layout,
        objective: objective_blocks(weights, gates, k),
        rows: RowOperator::new(basis, rows),
        rhs,
        d_in: dims.d_in(),
    })
}

/// Tester formulation: maximize `Σ p_i Tr(T_i C_i^{⊗k})` over testers of the strategy class.
pub fn assemble_primal(ensemble: &Ensemble, k: usize, strategy: StrategyClass) -> Result<SdpProblem, SdpError> {
    build(ensemble.probs(), ensemble.gates(), k, strategy, Sense::Max)
}

/// Dual-affine formulation: minimize `λ` subject to `p_i C_i^{⊗k} ⪯ λ W̄`.
pub fn assemble_dual(ensemble: &Ensemble, k: usize, strategy: StrategyClass) -> Result<SdpProblem, SdpError> {
    build(ensemble.probs(), ensemble.gates(), k, strategy, Sense::Min)
}

/// [`assemble_primal`] for arbitrary nonnegative weights that need not sum to one.
pub fn assemble_primal_weighted(
    weights: &[f64],
    gates: &[UnitaryGate],
    k: usize,
    strategy: StrategyClass,
) -> Result<SdpProblem, SdpError> {
    build(weights, gates, k, strategy, Sense::Max)
}

pub fn solve(problem: &SdpProblem, tol: f64) -> Result<DiscriminationResult, SdpError> {
    solve_with(problem, &SolverOptions { tol, ..SolverOptions::default() })
}

pub fn solve_with(problem: &SdpProblem, opts: &SolverOptions) -> Result<DiscriminationResult, SdpError> {
    let out = solve_blocks(&problem.rows, &problem.objective, &problem.rhs, opts)?;
    let abs_gap = (out.pobj - out.dobj).abs();
    let status = if out.converged {
        SolveStatus::Solved
    } else if out.rel_gap <= INACCURATE_GAP && out.pinf <= INACCURATE_GAP && out.dinf <= INACCURATE_GAP {
        SolveStatus::Inaccurate
    } else {
        return Err(SdpError::Failed { gap: out.rel_gap, pinf: out.pinf, dinf: out.dinf });
    };
    let tester = out
        .xs
        .iter()
        .map(|x| LabeledOperator::new(problem.layout.clone(), x.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let y_op = problem.rows.adjoint(&out.y);
    let lambda = y_op.trace().re / problem.d_in as f64;
    let wbar = LabeledOperator::new(problem.layout.clone(), linalg::hermitian_part(&y_op) / c(lambda, 0.0))?;
    let value = match problem.sense {
        Sense::Max => out.pobj,
        Sense::Min => out.dobj,
    };
    Ok(DiscriminationResult {
        strategy: problem.strategy,
        k: problem.k,
        value,
        primal_value: out.pobj,
        dual_value: out.dobj,
        tester,
        dual_witness: DualWitness { lambda, wbar },
        primal_dual_gap: abs_gap,
        status,
        iterations: out.iterations,
        primal_infeasibility: out.pinf,
        dual_infeasibility: out.dinf,
    })
}

/// Convenience: assemble the primal problem and solve it at the default tolerance.
pub fn discriminate(ensemble: &Ensemble, k: usize, strategy: StrategyClass) -> Result<DiscriminationResult, SdpError> {
    solve(&assemble_primal(ensemble, k, strategy)?, SolverOptions::default().tol)
}

/// `Σ_i p_i Tr(T_i C_i^{⊗k})`.
pub fn success_probability(tester: &[LabeledOperator], ensemble: &Ensemble, k: usize) -> Result<f64, SdpError> {
    if tester.len() != ensemble.len() {
        return Err(SdpError::Invalid(format!(
            "tester has {} outcomes for {} hypotheses",
            tester.len(),
            ensemble.len()
        )));
    }
    let mut total = 0.0;
    for ((t, g), p) in tester.iter().zip(ensemble.gates()).zip(ensemble.probs()) {
        let ch = choi_power(g, k);
        let t = t.permuted_like(&ch)?;
        total += p * t.trace_product(&ch)?.re;
    }
    Ok(total)
}

/// Checks a tester against the process constraints of a strategy class.
pub fn tester_constraints(strategy: StrategyClass, k: usize, d: usize) -> Result<ConstraintSet, SdpError> {
    Ok(strategies::build_constraints(strategy, k, &SlotDims::uniform(k, d, d))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> CMat {
        let g = crate::channels::haar_sample(n, rng);
        let d: Vec<f64> = (0..n).map(|i| 0.5 + i as f64 / n as f64).collect();
        let m = g.matrix();
        m * CMat::from_fn(n, n, |i, j| if i == j { c(d[i], 0.0) } else { c(0.0, 0.0) }) * m.adjoint()
    }

    #[test]
    fn schur_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = Ensemble::from_names(&["I", "sqrtX", "sqrtY"], None).unwrap();
        for s in StrategyClass::ALL {
            let p = assemble_primal(&e, 2, s).unwrap();
            let xs: Vec<CMat> = (0..3).map(|_| random_pd(16, &mut rng)).collect();
            let zs: Vec<CMat> = (0..3).map(|_| random_pd(16, &mut rng)).collect();
            let mut work = Vec::new();
            let fast = p.rows.schur(&xs, &zs, &mut work, crate::Execution::default());
            let slow = p.rows.schur_dense(&xs, &zs, crate::Execution::Sequential);
            assert!((fast - slow).norm() < 1e-9);
        }
    }

    #[test]
    fn pauli_single_copy_is_perfect() {
        let e = Ensemble::from_names(&["I", "X", "Y", "Z"], None).unwrap();
        for s in StrategyClass::ALL {
            let r = discriminate(&e, 1, s).unwrap();
            assert!((r.value - 1.0).abs() < 1e-7, "{s}: {}", r.value);
            let p = success_probability(&r.tester, &e, 1).unwrap();
            assert!((p - r.value).abs() < 1e-6);
        }
    }

    #[test]
    fn primal_and_dual_forms_agree() {
        let e = Ensemble::from_names(&["I", "sqrtX", "sqrtY", "sqrtZ"], None).unwrap();
        for s in StrategyClass::ALL {
            let a = discriminate(&e, 2, s).unwrap();
            let b = solve(&assemble_dual(&e, 2, s).unwrap(), 1e-8).unwrap();
            assert!((a.value - b.value).abs() < 1e-6, "{s}: {} vs {}", a.value, b.value);
        }
    }
}
