//! Unitary gates, Choi operators, ensembles, Haar sampling and design checks.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{self, c, CMat, C64};
use crate::tensor::{canonical_layout, LabeledOperator, SpaceLabel, TensorError};

pub const UNITARY_TOL: f64 = 1e-12;
pub const PHASE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("matrix is not unitary (‖UU† − 𝟙‖ = {0:.3e})")]
    NotUnitary(f64),
    #[error("unknown gate name {0:?}")]
    UnknownGate(String),
    #[error("gates have mixed dimensions")]
    MixedDimensions,
    #[error("unsupported (dim, k) = ({dim}, {k})")]
    Unsupported { dim: usize, k: usize },
    #[error("invalid probabilities: {0}")]
    Probabilities(String),
    #[error("eigendecomposition failed")]
    Eigen,
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryGate {
    matrix: CMat,
}

impl UnitaryGate {
    pub fn new(matrix: CMat) -> Result<Self, ChannelError> {
        if !matrix.is_square() {
            return Err(ChannelError::NotUnitary(f64::INFINITY));
        }
        let err = (&matrix * matrix.adjoint() - linalg::identity(matrix.nrows())).norm();
        if err > UNITARY_TOL * matrix.nrows() as f64 {
            return Err(ChannelError::NotUnitary(err));
        }
        Ok(UnitaryGate { matrix })
    }

    pub fn identity(d: usize) -> Self {
        UnitaryGate { matrix: linalg::identity(d) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dagger(&self) -> Self {
        UnitaryGate { matrix: self.matrix.adjoint() }
    }

    pub fn conj(&self) -> Self {
        UnitaryGate { matrix: self.matrix.map(|z| z.conj()) }
    }

    /// Matrix product `self · other`.
    pub fn then_after(&self, other: &UnitaryGate) -> Self {
        UnitaryGate { matrix: &self.matrix * &other.matrix }
    }

    pub fn tensor_power(&self, k: usize) -> CMat {
        (1..k).fold(self.matrix.clone(), |acc, _| acc.kronecker(&self.matrix))
    }

    /// Global phase equivalence: `|tr(A†B)| ≥ d − tol`.
    pub fn phase_equivalent(&self, other: &UnitaryGate, tol: f64) -> bool {
        self.dim() == other.dim()
            && linalg::hs_inner(&self.matrix.adjoint(), &other.matrix).norm() >= self.dim() as f64 - tol
    }
}

fn m2(a: [C64; 4]) -> CMat {
    CMat::from_row_slice(2, 2, &a)
}

fn base_gate(name: &str) -> Option<CMat> {
    let o = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let r = FRAC_1_SQRT_2;
    Some(match name {
        "I" => linalg::identity(2),
        "X" => m2([o, one, one, o]),
        "Y" => m2([o, c(0.0, -1.0), c(0.0, 1.0), o]),
        "Z" => m2([one, o, o, -one]),
        "H" => m2([c(r, 0.0), c(r, 0.0), c(r, 0.0), c(-r, 0.0)]),
        "Hy" => m2([c(r, 0.0), c(r, 0.0), c(0.0, r), c(0.0, -r)]),
        "Hp" => m2([c(0.6, 0.0), c(0.8, 0.0), c(0.8, 0.0), c(-0.6, 0.0)]),
        _ => {
            let inner = name.strip_prefix("sqrt")?;
            let m = base_gate(inner)?;
            return principal_sqrt(&UnitaryGate { matrix: m }).ok().map(|g| g.matrix);
        }
    })
}

const TOKENS: [&str; 12] = ["sqrtHy", "sqrtHp", "sqrtX", "sqrtY", "sqrtZ", "Hy", "Hp", "I", "X", "Y", "Z", "H"];

fn tokenize(word: &str) -> Option<Vec<&'static str>> {
    let mut rest = word;
    let mut out = Vec::new();
    while !rest.is_empty() {
        let t = TOKENS.iter().find(|t| rest.starts_with(**t))?;
        out.push(*t);
        rest = &rest[t.len()..];
    }
    Some(out)
}

/// Qubit gate by name: `I X Y Z H Hy Hp`, `sqrt` prefixed variants, and products such as `XH` or `X*H`.
pub fn named_gate(name: &str) -> Result<UnitaryGate, ChannelError> {
    let unknown = || ChannelError::UnknownGate(name.to_string());
    let mut m = linalg::identity(2);
    let mut any = false;
    for part in name.split('*').map(str::trim) {
        let tokens = tokenize(part).ok_or_else(unknown)?;
        for t in tokens {
            m = m * base_gate(t).ok_or_else(unknown)?;
            any = true;
        }
    }
    if !any {
        return Err(unknown());
    }
    UnitaryGate::new(m)
}

/// Principal square root: eigenphases `θ ∈ (−π, π]` map to `θ/2`.
pub fn principal_sqrt(u: &UnitaryGate) -> Result<UnitaryGate, ChannelError> {
    let m = u.matrix();
    let d = u.dim();
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let k = (m - m.adjoint()) * c(0.0, -0.5);
    for mix in [0.618_033_988_749_895, 0.302_775_637_731_995, 1.414_213_562_373_095] {
        let (_, v) = linalg::eigh(&(&h + &k * c(mix, 0.0)));
        let lambdas: Vec<C64> = (0..d).map(|j| (v.column(j).adjoint() * m * v.column(j))[(0, 0)]).collect();
        let diag = CMat::from_fn(d, d, |i, j| if i == j { lambdas[i] } else { c(0.0, 0.0) });
        if (m * &v - &v * &diag).norm() > 1e-9 {
            continue;
        }
        let roots = CMat::from_fn(d, d, |i, j| {
            if i != j {
                return c(0.0, 0.0);
            }
            let mut theta = lambdas[i].arg();
            if theta <= -PI + 1e-12 {
                theta = PI;
            }
            C64::from_polar(1.0, theta / 2.0)
        });
        return UnitaryGate::new(&v * roots * v.adjoint());
    }
    Err(ChannelError::Eigen)
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of `diag R` removed.
pub fn haar_sample<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryGate {
    let g = CMat::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMat::from_fn(dim, dim, |i, j| {
        if i != j {
            return c(0.0, 0.0);
        }
        let z = r[(i, i)];
        if z.norm() == 0.0 { c(1.0, 0.0) } else { z / z.norm() }
    });
    UnitaryGate { matrix: q * phases }
}

/// `|U⟩⟩ = Σ_i |i⟩ ⊗ U|i⟩`.
pub fn choi_vector(u: &UnitaryGate) -> Vec<C64> {
    let d = u.dim();
    let mut v = vec![c(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            v[i * d + j] = u.matrix()[(j, i)];
        }
    }
    v
}

pub fn choi_of_unitary(u: &UnitaryGate, input: SpaceLabel, output: SpaceLabel) -> Result<LabeledOperator, ChannelError> {
    if input.dim() != u.dim() || output.dim() != u.dim() {
        return Err(ChannelError::MixedDimensions);
    }
    Ok(LabeledOperator::projector(vec![input, output], &choi_vector(u))?)
}

/// `|U⟩⟩⟨⟨U|^{⊗k}` in the canonical layout `[I1..Ik, O1..Ok]`.
pub fn choi_power(u: &UnitaryGate, k: usize) -> LabeledOperator {
    let d = u.dim();
    let half = d.pow(k as u32);
    let mut v = vec![c(0.0, 0.0); half * half];
    for i in 0..half {
        for o in 0..half {
            let mut z = c(1.0, 0.0);
            let (mut ii, mut oo) = (i, o);
            for _ in 0..k {
                z *= u.matrix()[(oo % d, ii % d)];
                ii /= d;
                oo /= d;
            }
            v[i * half + o] = z;
        }
    }
    LabeledOperator::projector(canonical_layout(k, d, d), &v).expect("canonical layout matches")
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    gates: Vec<UnitaryGate>,
    probs: Vec<f64>,
    names: Option<Vec<String>>,
}

impl Ensemble {
    pub fn new(gates: Vec<UnitaryGate>, probs: Vec<f64>) -> Result<Self, ChannelError> {
        if gates.is_empty() {
            return Err(ChannelError::Probabilities("empty ensemble".into()));
        }
        if gates.len() != probs.len() {
            return Err(ChannelError::Probabilities(format!(
                "{} gates but {} probabilities",
                gates.len(),
                probs.len()
            )));
        }
        let d = gates[0].dim();
        if gates.iter().any(|g| g.dim() != d) {
            return Err(ChannelError::MixedDimensions);
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(ChannelError::Probabilities("negative or non-finite entry".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ChannelError::Probabilities(format!("sum is {total}")));
        }
        Ok(Ensemble { gates, probs, names: None })
    }

    pub fn uniform(gates: Vec<UnitaryGate>) -> Result<Self, ChannelError> {
        let n = gates.len();
        Self::new(gates, vec![1.0 / n as f64; n])
    }

    pub fn from_names(names: &[&str], probs: Option<Vec<f64>>) -> Result<Self, ChannelError> {
        let gates = names.iter().map(|n| named_gate(n)).collect::<Result<Vec<_>, _>>()?;
        let n = gates.len();
        let probs = probs.unwrap_or_else(|| vec![1.0 / n as f64; n]);
        Ok(Self::new(gates, probs)?.with_names(names.iter().map(|s| s.to_string()).collect()))
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        self.names = Some(names);
        self
    }

    pub fn gates(&self) -> &[UnitaryGate] {
        &self.gates
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.gates[0].dim()
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }
}

pub fn find_phase_equivalent(gates: &[UnitaryGate], u: &UnitaryGate, tol: f64) -> Option<usize> {
    gates.iter().position(|g| g.phase_equivalent(u, tol))
}

pub fn is_group_up_to_phase(gates: &[UnitaryGate], tol: f64) -> Result<bool, ChannelError> {
    let d = gates.first().map(|g| g.dim()).ok_or(ChannelError::MixedDimensions)?;
    if gates.iter().any(|g| g.dim() != d) {
        return Err(ChannelError::MixedDimensions);
    }
    if find_phase_equivalent(gates, &UnitaryGate::identity(d), tol).is_none() {
        return Ok(false);
    }
    for a in gates {
        if find_phase_equivalent(gates, &a.dagger(), tol).is_none() {
            return Ok(false);
        }
        for b in gates {
            if find_phase_equivalent(gates, &a.then_after(b), tol).is_none() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Closure of a generating set under products, one representative per phase class.
pub fn group_closure(generators: &[UnitaryGate]) -> Vec<UnitaryGate> {
    let d = generators[0].dim();
    let mut group = vec![UnitaryGate::identity(d)];
    let mut frontier = group.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for g in &frontier {
            for h in generators {
                let p = g.then_after(h);
                if find_phase_equivalent(&group, &p, PHASE_TOL).is_none() {
                    group.push(p.clone());
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    group
}

pub fn pauli_group() -> Vec<UnitaryGate> {
    ["I", "X", "Y", "Z"].iter().map(|n| named_gate(n).unwrap()).collect()
}

/// Single-qubit (24 elements) or qutrit (216 elements) Clifford group modulo phase.
pub fn clifford_group(d: usize) -> Result<Vec<UnitaryGate>, ChannelError> {
    match d {
        2 => {
            let s = UnitaryGate::new(m2([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]))?;
            Ok(group_closure(&[named_gate("H")?, s]))
        }
        3 => {
            let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
            let f = CMat::from_fn(3, 3, |i, j| w.powu((i * j) as u32) / 3f64.sqrt());
            let s = CMat::from_fn(3, 3, |i, j| {
                if i != j {
                    c(0.0, 0.0)
                } else if i == 2 {
                    w
                } else {
                    c(1.0, 0.0)
                }
            });
            Ok(group_closure(&[UnitaryGate::new(f)?, UnitaryGate::new(s)?]))
        }
        _ => Err(ChannelError::Unsupported { dim: d, k: 0 }),
    }
}

fn reference_design(dim: usize, k: usize) -> Result<Vec<UnitaryGate>, ChannelError> {
    match (dim, k) {
        (2, 1) => Ok(pauli_group()),
        (2, 2) | (2, 3) | (3, 1) | (3, 2) => clifford_group(dim),
        _ => Err(ChannelError::Unsupported { dim, k }),
    }
}

fn twirl_superoperator(gates: &[UnitaryGate], k: usize) -> CMat {
    let mut acc: Option<CMat> = None;
    for g in gates {
        let p = g.tensor_power(k);
        let term = p.kronecker(&p.map(|z| z.conj()));
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    acc.unwrap() / c(gates.len() as f64, 0.0)
}

pub fn is_k_design(gates: &[UnitaryGate], k: usize, tol: f64) -> Result<bool, ChannelError> {
    let d = gates.first().map(|g| g.dim()).ok_or(ChannelError::MixedDimensions)?;
    if gates.iter().any(|g| g.dim() != d) {
        return Err(ChannelError::MixedDimensions);
    }
    let reference = reference_design(d, k)?;
    let diff = twirl_superoperator(gates, k) - twirl_superoperator(&reference, k);
    Ok(diff.norm() <= tol)
}

/// `∫ |U⟩⟩⟨⟨U|^{⊗k} dU` in the canonical layout.
pub fn haar_twirl_process(dim: usize, k: usize) -> Result<LabeledOperator, ChannelError> {
    let reference = reference_design(dim, k)?;
    let mut acc = choi_power(&reference[0], k);
    for g in &reference[1..] {
        acc = acc.add(&choi_power(g, k))?;
    }
    Ok(acc.scale(1.0 / reference.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_parse_in_both_spellings() {
        let a = named_gate("XH").unwrap();
        let b = named_gate("X*H").unwrap();
        let want = named_gate("X").unwrap().then_after(&named_gate("H").unwrap());
        assert!((a.matrix() - want.matrix()).norm() < 1e-15);
        assert!((b.matrix() - want.matrix()).norm() < 1e-15);
        assert!(named_gate("Hx").is_err());
    }

    #[test]
    fn sqrt_of_minus_one_eigenvalue_takes_plus_i() {
        let s = named_gate("sqrtZ").unwrap();
        assert!((s.matrix()[(1, 1)] - c(0.0, 1.0)).norm() < 1e-12);
        assert!((s.matrix()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn clifford_orders() {
        assert_eq!(clifford_group(2).unwrap().len(), 24);
        assert_eq!(clifford_group(3).unwrap().len(), 216);
    }
}
