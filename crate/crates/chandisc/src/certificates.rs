//! Exact rational certificates for upper bounds on success probabilities.
//!
//! A certificate is a pair `(λ, W̄)` with `W̄` in the dual-affine set of a strategy
//! class and `λ W̄ ⪰ p_i C_i^{⊗k}` for every hypothesis. All arithmetic is over
//! Gaussian rationals; positivity is decided by fraction-free elimination.

use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::ProductBasis;
use crate::channels::{choi_vector, Ensemble};
use crate::linalg::{self, c, CMat};
use crate::sdp::DualWitness;
use crate::strategies::{dual_affine_constraints, SlotDims, StrategyClass, StrategyError};
use crate::tensor::{permute_raw, trace_and_replace_raw};

pub type Rational = BigRational;
pub type GaussRational = Complex<BigRational>;

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error("invalid certificate: {0}")]
    Invalid(String),
    #[error("non-rational input: {0}")]
    NonRational(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("no certificate within slack {slack:e} of λ = {lambda}")]
    SlackExceeded { lambda: f64, slack: f64 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `C(k + d² − 1, k)`, the number of irreducible blocks (with multiplicity) of `U^{⊗k} ⊗ Ū^{⊗k}`.
pub fn gamma(d: u64, k: u64) -> Result<BigUint, CertificateError> {
    if d < 2 || k < 1 {
        return Err(CertificateError::Invalid(format!("gamma needs d ≥ 2 and k ≥ 1, got d={d}, k={k}")));
    }
    let base = BigUint::from(d) * BigUint::from(d) - BigUint::one();
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc = acc * (&base + BigUint::from(i)) / BigUint::from(i);
    }
    Ok(acc)
}

/// Best rational approximation of `x` with denominator at most `max_den` (continued fractions).
pub fn rationalize(x: f64, max_den: u64) -> Result<Rational, CertificateError> {
    if !x.is_finite() {
        return Err(CertificateError::NonRational(format!("{x}")));
    }
    let neg = x < 0.0;
    let mut r = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let max = BigInt::from(max_den);
    for _ in 0..64 {
        let a = r.floor();
        let ai = BigInt::from(a as u64);
        let p2 = &ai * &p1 + &p0;
        let q2 = &ai * &q1 + &q0;
        if q2 > max {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a;
        if frac < 1e-15 || (p1.to_f64().unwrap() / q1.to_f64().unwrap() - x.abs()).abs() < 1e-16 * x.abs().max(1.0) {
            break;
        }
        r = 1.0 / frac;
    }
    if q1.is_zero() {
        return Ok(Rational::zero());
    }
    let v = Rational::new(p1, q1);
    Ok(if neg { -v } else { v })
}

fn ratio_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn gzero() -> GaussRational {
    Complex::new(Rational::zero(), Rational::zero())
}

/// Square Gaussian-rational matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMatrix {
    side: usize,
    data: Vec<GaussRational>,
}

impl ExactMatrix {
    pub fn zeros(side: usize) -> Self {
        ExactMatrix { side, data: vec![gzero(); side * side] }
    }

    pub fn identity(side: usize) -> Self {
        let mut m = Self::zeros(side);
        for i in 0..side {
            m.data[i * side + i] = Complex::new(Rational::one(), Rational::zero());
        }
        m
    }

    pub fn from_entries(side: usize, data: Vec<GaussRational>) -> Result<Self, CertificateError> {
        if data.len() != side * side {
            return Err(CertificateError::Invalid(format!("{} entries for side {side}", data.len())));
        }
        Ok(ExactMatrix { side, data })
    }

    /// Entrywise best rational approximation with bounded denominators.
    pub fn from_float(m: &CMat, max_den: u64) -> Result<Self, CertificateError> {
        let n = m.nrows();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = m[(i, j)];
                data.push(Complex::new(rationalize(z.re, max_den)?, rationalize(z.im, max_den)?));
            }
        }
        Ok(ExactMatrix { side: n, data })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, i: usize, j: usize) -> &GaussRational {
        &self.data[i * self.side + j]
    }

    pub fn entries(&self) -> &[GaussRational] {
        &self.data
    }

    pub fn to_float(&self) -> CMat {
        CMat::from_fn(self.side, self.side, |i, j| {
            let z = self.get(i, j);
            c(ratio_f64(&z.re), ratio_f64(&z.im))
        })
    }

    pub fn scale(&self, s: &Rational) -> Self {
        ExactMatrix { side: self.side, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.side, other.side);
        ExactMatrix { side: self.side, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.side, other.side);
        ExactMatrix { side: self.side, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.side, other.side);
        let mut data = vec![gzero(); n * n * m * m];
        for i in 0..n {
            for j in 0..n {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        data[(i * m + k) * n * m + j * m + l] = a * other.get(k, l);
                    }
                }
            }
        }
        ExactMatrix { side: n * m, data }
    }

    pub fn trace(&self) -> GaussRational {
        (0..self.side).fold(gzero(), |acc, i| acc + self.get(i, i))
    }

    pub fn is_hermitian(&self) -> bool {
        (0..self.side).all(|i| (i..self.side).all(|j| *self.get(i, j) == self.get(j, i).conj()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| ratio_f64(&z.re).abs().max(ratio_f64(&z.im).abs())).fold(0.0, f64::max)
    }

    fn permuted(&self, dims: &[usize], perm: &[usize]) -> Self {
        let data = permute_raw(dims, perm, |i, j| self.get(i, j).clone());
        ExactMatrix { side: self.side, data }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PsdVerdict {
    Psd { rank: usize },
    NotHermitian,
    NegativePivot { index: usize },
    ZeroPivotNonzeroRow { index: usize },
}

impl PsdVerdict {
    pub fn is_psd(&self) -> bool {
        matches!(self, PsdVerdict::Psd { .. })
    }
}

/// Exact positivity of a Hermitian Gaussian-rational matrix.
///
/// The matrix `A + iB` is realified to `[[A, −B], [B, A]]`, scaled to integers, and
/// eliminated with fraction-free (Bareiss) symmetric steps in a fixed pivot order.
pub fn psd_check(m: &ExactMatrix) -> PsdVerdict {
    if !m.is_hermitian() {
        return PsdVerdict::NotHermitian;
    }
    let n = m.side;
    let mut lcm = BigInt::one();
    for z in &m.data {
        lcm = lcm.lcm(z.re.denom()).lcm(z.im.denom());
    }
    let int = |r: &Rational| r.numer() * (&lcm / r.denom());
    let re: Vec<BigInt> = m.data.iter().map(|z| int(&z.re)).collect();
    let im: Vec<BigInt> = m.data.iter().map(|z| int(&z.im)).collect();
    let rows: Vec<Vec<BigInt>> = (0..2 * n)
        .map(|i| {
            (0..=i)
                .map(|j| {
                    let (bi, ii) = (i / n, i % n);
                    let (bj, jj) = (j / n, j % n);
                    let idx = ii * n + jj;
                    match (bi, bj) {
                        (0, 0) | (1, 1) => re[idx].clone(),
                        (1, 0) => im[idx].clone(),
                        _ => -im[idx].clone(),
                    }
                })
                .collect()
        })
        .collect();
    bareiss_psd(rows)
}

fn bareiss_psd(mut a: Vec<Vec<BigInt>>) -> PsdVerdict {
    let n = a.len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for k in 0..n {
        let p = a[k][k].clone();
        if p.is_negative() {
            return PsdVerdict::NegativePivot { index: k };
        }
        if p.is_zero() {
            if (k + 1..n).any(|i| !a[i][k].is_zero()) {
                return PsdVerdict::ZeroPivotNonzeroRow { index: k };
            }
            continue;
        }
        rank += 1;
        for i in k + 1..n {
            let (head, tail) = a.split_at_mut(i);
            let row = &mut tail[0];
            let aik = row[k].clone();
            for j in k + 1..=i {
                let ajk = if j == i { &aik } else { &head[j][k] };
                row[j] = (&p * &row[j] - &aik * ajk) / &prev;
            }
        }
        prev = p;
    }
    PsdVerdict::Psd { rank }
}

/// Ensemble data in exact form: rational probabilities and single-copy Choi matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactEnsemble {
    pub dim: usize,
    pub probs: Vec<Rational>,
    pub names: Option<Vec<String>>,
    pub choi: Vec<ExactMatrix>,
}

impl ExactEnsemble {
    /// Rationalizes probabilities and Choi entries with denominators at most `max_den`.
    ///
    /// Gates with algebraic-irrational Choi entries are replaced by their nearest
    /// rational Choi data; the certificate is exact for the data it carries.
    pub fn from_ensemble(e: &Ensemble, max_den: u64) -> Result<Self, CertificateError> {
        let mut probs = e.probs().iter().map(|&p| rationalize(p, max_den)).collect::<Result<Vec<_>, _>>()?;
        let total: Rational = probs.iter().cloned().sum();
        if total != Rational::one() {
            let last = probs.len() - 1;
            let fixed = Rational::one() - (total - &probs[last]);
            if fixed.is_negative() {
                return Err(CertificateError::NonRational("probabilities do not rationalize to a distribution".into()));
            }
            probs[last] = fixed;
        }
        let choi = e
            .gates()
            .iter()
            .map(|g| {
                let v = choi_vector(g);
                let n = v.len();
                let m = CMat::from_fn(n, n, |i, j| v[i] * v[j].conj());
                ExactMatrix::from_float(&linalg::hermitian_part(&m), max_den)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExactEnsemble { dim: e.dim(), probs, names: e.names().map(|n| n.to_vec()), choi })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `C_i^{⊗k}` in the canonical layout `[I1..Ik, O1..Ok]`.
    pub fn choi_power(&self, i: usize, k: usize) -> ExactMatrix {
        let mut m = ExactMatrix::identity(1);
        for _ in 0..k {
            m = m.kron(&self.choi[i]);
        }
        let dims = vec![self.dim; 2 * k];
        let perm: Vec<usize> = (0..k).map(|j| 2 * j).chain((0..k).map(|j| 2 * j + 1)).collect();
        m.permuted(&dims, &perm)
    }

    /// Largest entrywise deviation of the carried Choi data from the float ensemble.
    pub fn choi_deviation(&self, e: &Ensemble) -> f64 {
        self.choi
            .iter()
            .zip(e.gates())
            .map(|(cm, g)| {
                let v = choi_vector(g);
                let n = v.len();
                let f = CMat::from_fn(n, n, |i, j| v[i] * v[j].conj());
                (cm.to_float() - f).camax()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub strategy: StrategyClass,
    pub copies: usize,
    pub lambda: Rational,
    pub wbar: ExactMatrix,
    pub ensemble: ExactEnsemble,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProofReport {
    pub strategy: StrategyClass,
    pub copies: usize,
    pub lambda: String,
    pub proven_bound: Option<String>,
    pub conditions: Vec<ConditionReport>,
}

impl ProofReport {
    pub fn passed(&self) -> bool {
        self.proven_bound.is_some()
    }

    pub fn failures(&self) -> Vec<&ConditionReport> {
        self.conditions.iter().filter(|c| !c.passed).collect()
    }
}

fn condition(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> ConditionReport {
    ConditionReport { name: name.into(), passed, detail: detail.into() }
}

fn describe(v: &PsdVerdict) -> String {
    match v {
        PsdVerdict::Psd { rank } => format!("all pivots nonnegative, rank {rank}"),
        PsdVerdict::NotHermitian => "not Hermitian".into(),
        PsdVerdict::NegativePivot { index } => format!("negative pivot at index {index}"),
        PsdVerdict::ZeroPivotNonzeroRow { index } => format!("zero pivot with nonzero row at index {index}"),
    }
}

impl Certificate {
    pub fn slot_dims(&self) -> SlotDims {
        SlotDims::uniform(self.copies, self.ensemble.dim, self.ensemble.dim)
    }

    pub fn with_lambda(&self, lambda: Rational) -> Self {
        Certificate { lambda, ..self.clone() }
    }

    pub fn hypothesis_label(&self, i: usize) -> String {
        match &self.ensemble.names {
            Some(n) => format!("hypothesis {i} ({})", n[i]),
            None => format!("hypothesis {i}"),
        }
    }
}

/// Exact verification. Every condition is evaluated and reported; the bound is
/// proven only if all pass.
pub fn verify_certificate(cert: &Certificate) -> Result<ProofReport, CertificateError> {
    let k = cert.copies;
    let d = cert.ensemble.dim;
    if k == 0 || d < 2 {
        return Err(CertificateError::Invalid(format!("copies {k}, dimension {d}")));
    }
    let dims = cert.slot_dims();
    let n = dims.d_in() * dims.d_out();
    if cert.wbar.side() != n {
        return Err(CertificateError::Invalid(format!("Wbar side {} but expected {n}", cert.wbar.side())));
    }
    if cert.ensemble.choi.iter().any(|m| m.side() != d * d) || cert.ensemble.choi.len() != cert.ensemble.len() {
        return Err(CertificateError::Invalid("ensemble Choi data has the wrong shape".into()));
    }
    let cs = dual_affine_constraints(cert.strategy, k, &dims)?;
    let mut conditions = Vec::new();

    let probs_ok = cert.ensemble.probs.iter().all(|p| !p.is_negative())
        && cert.ensemble.probs.iter().cloned().sum::<Rational>() == Rational::one();
    conditions.push(condition("probabilities", probs_ok, if probs_ok { "nonnegative, sum exactly 1" } else { "not a distribution" }));

    let herm = cert.wbar.is_hermitian();
    conditions.push(condition("Wbar hermitian", herm, if herm { "exact" } else { "Wbar differs from its adjoint" }));

    let tr = cert.wbar.trace();
    let want = Rational::from_integer(BigInt::from(dims.d_in()));
    let tr_ok = tr.im.is_zero() && tr.re == want;
    conditions.push(condition("Wbar trace", tr_ok, format!("Tr Wbar = {} + {}i, required {want}", tr.re, tr.im)));

    let ldims: Vec<usize> = cs.layout.iter().map(|l| l.dim()).collect();
    for eq in &cs.linear_eqs {
        let mut acc = vec![gzero(); n * n];
        for (coef, labels) in &eq.map.terms {
            let cf = Rational::from_float(*coef).ok_or_else(|| CertificateError::NonRational(format!("{coef}")))?;
            let mask: Vec<bool> = cs.layout.iter().map(|l| labels.iter().any(|x| x == l.name())).collect();
            let traced: usize = ldims.iter().zip(&mask).filter(|(_, &m)| m).map(|(d, _)| *d).product();
            let inv = Rational::new(BigInt::one(), BigInt::from(traced));
            let part = trace_and_replace_raw(&ldims, &mask, |i, j| cert.wbar.get(i, j).clone(), |z| z * &inv);
            for (a, p) in acc.iter_mut().zip(part) {
                *a += p * &cf;
            }
        }
        let worst = acc.iter().map(|z| ratio_f64(&z.re).abs().max(ratio_f64(&z.im).abs())).fold(0.0, f64::max);
        let ok = acc.iter().all(|z| z.is_zero());
        let detail = if ok { "residual exactly zero".to_string() } else { format!("max residual entry {worst:.3e}") };
        conditions.push(condition(format!("linear: {}", eq.name), ok, detail));
    }

    let v = psd_check(&cert.wbar);
    conditions.push(condition("psd: Wbar", v.is_psd(), describe(&v)));

    let lw = cert.wbar.scale(&cert.lambda);
    for i in 0..cert.ensemble.len() {
        let m = lw.sub(&cert.ensemble.choi_power(i, k).scale(&cert.ensemble.probs[i]));
        let v = psd_check(&m);
        conditions.push(condition(
            format!("psd: lambda*Wbar - p_i C_i, {}", cert.hypothesis_label(i)),
            v.is_psd(),
            describe(&v),
        ));
    }

    let all = conditions.iter().all(|c| c.passed);
    Ok(ProofReport {
        strategy: cert.strategy,
        copies: k,
        lambda: cert.lambda.to_string(),
        proven_bound: all.then(|| cert.lambda.to_string()),
        conditions,
    })
}

#[derive(Clone, Debug)]
pub struct RoundingOptions {
    /// Common denominator of the rounded product-basis coefficients of `W̄`.
    pub denominator: u64,
    /// Denominator of the candidate `λ` values.
    pub lambda_denominator: u64,
    /// Largest admissible increase of `λ` over the floating-point witness.
    pub slack: f64,
    /// Weights of the maximally mixing channel blended into `W̄`, tried in order.
    pub mixing: Vec<f64>,
}

impl Default for RoundingOptions {
    fn default() -> Self {
        RoundingOptions { denominator: 1_000_000, lambda_denominator: 10_000, slack: 1e-4, mixing: vec![0.0, 1e-6, 1e-5, 3e-5] }
    }
}

/// Rationalizes `W̄` on the dual-affine subspace and searches the smallest passing `λ`.
pub fn round_to_certificate(
    witness: &DualWitness,
    ensemble: &Ensemble,
    strategy: StrategyClass,
    k: usize,
    opts: &RoundingOptions,
) -> Result<Certificate, CertificateError> {
    let d = ensemble.dim();
    let dims = SlotDims::uniform(k, d, d);
    let exact = ExactEnsemble::from_ensemble(ensemble, opts.denominator)?;
    let cs = dual_affine_constraints(strategy, k, &dims)?;
    let allowed = cs.allowed_patterns();
    let ldims: Vec<usize> = cs.layout.iter().map(|l| l.dim()).collect();
    let basis = ProductBasis::new(&ldims);
    let wbar = witness.wbar.permute(&cs.layout.iter().map(|l| l.name()).collect::<Vec<_>>()).map_err(|e| CertificateError::Invalid(e.to_string()))?;
    if wbar.layout() != cs.layout.as_slice() {
        return Err(CertificateError::Invalid("witness layout does not match the strategy".into()));
    }
    let ortho = basis.coefficients(&linalg::hermitian_part(wbar.matrix()));
    let norms: Vec<f64> = (0..basis.len())
        .map(|s| basis.digits(s).iter().enumerate().map(|(q, &x)| basis.local(q).norm_sq(x) as f64).product())
        .collect();
    let strings: Vec<(usize, f64)> = basis
        .select(|p| p != 0 && allowed[p as usize])
        .into_iter()
        .map(|s| (s, ortho[s] / norms[s].sqrt()))
        .collect();
    let chois: Vec<ExactMatrix> = (0..exact.len()).map(|i| exact.choi_power(i, k).scale(&exact.probs[i])).collect();
    let chois_f: Vec<CMat> = chois.iter().map(ExactMatrix::to_float).collect();

    let lam_f = witness.lambda;
    let lden = opts.lambda_denominator as f64;
    let scaled = lam_f * lden;
    let start = if (scaled - scaled.round()).abs() < 1e-9 { scaled.round() } else { scaled.ceil() } as i64;
    let max = ((lam_f + opts.slack) * lden).floor() as i64;

    for &eps in &opts.mixing {
        let w = exact_wbar(&basis, &strings, eps, opts.denominator, dims.d_out())?;
        let wf = w.to_float();
        if linalg::min_eigenvalue(&wf) < -1e-12 {
            continue;
        }
        for q in start..=max {
            let lf = q as f64 / lden;
            if chois_f.iter().any(|cf| linalg::min_eigenvalue(&(&wf * c(lf, 0.0) - cf)) < -1e-10) {
                continue;
            }
            let cert = Certificate {
                strategy,
                copies: k,
                lambda: Rational::new(BigInt::from(q), BigInt::from(opts.lambda_denominator)),
                wbar: w.clone(),
                ensemble: exact.clone(),
            };
            if verify_certificate(&cert)?.passed() {
                return Ok(cert);
            }
        }
    }
    Err(CertificateError::SlackExceeded { lambda: lam_f, slack: opts.slack })
}

/// `W̄ = 𝟙/d_O + (1 − ε) Σ_s a_s G_s` with each `a_s` rounded to the grid `1/den` and integer basis elements `G_s`.
fn exact_wbar(basis: &ProductBasis, strings: &[(usize, f64)], eps: f64, den: u64, d_out: usize) -> Result<ExactMatrix, CertificateError> {
    let n = basis.side();
    let common = BigInt::from(den).lcm(&BigInt::from(d_out));
    let common_i = common.to_i128().ok_or_else(|| CertificateError::Invalid("denominator too large".into()))?;
    let grid = common_i / den as i128;
    let mut acc = vec![(0i128, 0i128); n * n];
    for i in 0..n {
        acc[i * n + i].0 = common_i / d_out as i128;
    }
    let st = crate::tensor::strides(basis.dims());
    for &(s, a) in strings {
        let m = ((1.0 - eps) * a * den as f64).round() as i128 * grid;
        if m == 0 {
            continue;
        }
        let mut entries = vec![(0usize, 0usize, 1i128, 0i128)];
        for (q, &x) in basis.digits(s).iter().enumerate() {
            let mut next = Vec::new();
            for &(r, col, re, im) in &entries {
                for &(i, j, er, ei) in basis.local(q).entries(x) {
                    let (er, ei) = (er as i128, ei as i128);
                    next.push((r + i * st[q], col + j * st[q], re * er - im * ei, re * ei + im * er));
                }
            }
            entries = next;
        }
        for (r, col, re, im) in entries {
            let e = &mut acc[r * n + col];
            e.0 += m * re;
            e.1 += m * im;
        }
    }
    let data = acc
        .into_iter()
        .map(|(re, im)| Complex::new(Rational::new(BigInt::from(re), common.clone()), Rational::new(BigInt::from(im), common.clone())))
        .collect();
    ExactMatrix::from_entries(n, data)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum IntJson {
    Small(i64),
    Big(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RationalJson {
    num: IntJson,
    den: IntJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ComplexJson {
    re: RationalJson,
    im: RationalJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct EnsembleJson {
    dim: usize,
    probs: Vec<RationalJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    names: Option<Vec<String>>,
    choi: Vec<Vec<Vec<ComplexJson>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CertificateJson {
    strategy: StrategyClass,
    copies: usize,
    lambda: RationalJson,
    #[serde(rename = "Wbar")]
    wbar: Vec<Vec<ComplexJson>>,
    ensemble: EnsembleJson,
}

fn int_to_json(x: &BigInt) -> IntJson {
    x.to_i64().map(IntJson::Small).unwrap_or_else(|| IntJson::Big(x.to_string()))
}

fn int_from_json(x: &IntJson) -> Result<BigInt, CertificateError> {
    match x {
        IntJson::Small(v) => Ok(BigInt::from(*v)),
        IntJson::Big(s) => s.parse().map_err(|_| CertificateError::NonRational(s.clone())),
    }
}

pub fn rational_to_json(r: &Rational) -> RationalJson {
    RationalJson { num: int_to_json(r.numer()), den: int_to_json(r.denom()) }
}

pub fn rational_from_json(r: &RationalJson) -> Result<Rational, CertificateError> {
    let den = int_from_json(&r.den)?;
    if den.is_zero() {
        return Err(CertificateError::NonRational("zero denominator".into()));
    }
    Ok(Rational::new(int_from_json(&r.num)?, den))
}

fn matrix_to_json(m: &ExactMatrix) -> Vec<Vec<ComplexJson>> {
    (0..m.side())
        .map(|i| {
            (0..m.side())
                .map(|j| {
                    let z = m.get(i, j);
                    ComplexJson { re: rational_to_json(&z.re), im: rational_to_json(&z.im) }
                })
                .collect()
        })
        .collect()
}

fn matrix_from_json(rows: &[Vec<ComplexJson>]) -> Result<ExactMatrix, CertificateError> {
    let n = rows.len();
    let mut data = Vec::with_capacity(n * n);
    for row in rows {
        if row.len() != n {
            return Err(CertificateError::Invalid("matrix is not square".into()));
        }
        for z in row {
            data.push(Complex::new(rational_from_json(&z.re)?, rational_from_json(&z.im)?));
        }
    }
    ExactMatrix::from_entries(n, data)
}

impl Certificate {
    pub fn to_json(&self) -> Result<String, CertificateError> {
        let j = CertificateJson {
            strategy: self.strategy,
            copies: self.copies,
            lambda: rational_to_json(&self.lambda),
            wbar: matrix_to_json(&self.wbar),
            ensemble: EnsembleJson {
                dim: self.ensemble.dim,
                probs: self.ensemble.probs.iter().map(rational_to_json).collect(),
                names: self.ensemble.names.clone(),
                choi: self.ensemble.choi.iter().map(matrix_to_json).collect(),
            },
        };
        Ok(serde_json::to_string(&j)?)
    }

    pub fn from_json(text: &str) -> Result<Self, CertificateError> {
        let j: CertificateJson = serde_json::from_str(text)?;
        let ensemble = ExactEnsemble {
            dim: j.ensemble.dim,
            probs: j.ensemble.probs.iter().map(rational_from_json).collect::<Result<_, _>>()?,
            names: j.ensemble.names,
            choi: j.ensemble.choi.iter().map(|m| matrix_from_json(m)).collect::<Result<_, _>>()?,
        };
        if let Some(n) = &ensemble.names {
            if n.len() != ensemble.probs.len() {
                return Err(CertificateError::Invalid("names and probabilities differ in length".into()));
            }
        }
        Ok(Certificate {
            strategy: j.strategy,
            copies: j.copies,
            lambda: rational_from_json(&j.lambda)?,
            wbar: matrix_from_json(&j.wbar)?,
            ensemble,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, CertificateError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), CertificateError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
