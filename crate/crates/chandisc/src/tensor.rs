//! Operators over ordered, labeled tensor-product spaces.

use std::collections::HashSet;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, c, CMat, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Input,
    Output,
    Auxiliary,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceLabel {
    name: String,
    dim: usize,
    role: Role,
}

impl SpaceLabel {
    pub fn new(name: impl Into<String>, dim: usize, role: Role) -> Self {
        assert!(dim >= 1, "space dimension must be positive");
        SpaceLabel { name: name.into(), dim, role }
    }

    pub fn input(name: impl Into<String>, dim: usize) -> Self {
        Self::new(name, dim, Role::Input)
    }

    pub fn output(name: impl Into<String>, dim: usize) -> Self {
        Self::new(name, dim, Role::Output)
    }

    pub fn aux(name: impl Into<String>, dim: usize) -> Self {
        Self::new(name, dim, Role::Auxiliary)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        SpaceLabel { name: name.into(), ..self.clone() }
    }
}

impl fmt::Display for SpaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.name, self.dim)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("duplicate label {0}")]
    DuplicateLabel(String),
    #[error("unknown label {0}")]
    UnknownLabel(String),
    #[error("label {name} has dimension {left} on one side and {right} on the other")]
    DimensionMismatch { name: String, left: usize, right: usize },
    #[error("matrix side {side} does not match layout dimension {expected}")]
    ShapeMismatch { side: usize, expected: usize },
    #[error("layouts differ: {0}")]
    LayoutMismatch(String),
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut st = vec![1; dims.len()];
    for q in (0..dims.len().saturating_sub(1)).rev() {
        st[q] = st[q + 1] * dims[q + 1];
    }
    st
}

/// Full-space offsets of every joint index of the subsystems `sel`, enumerated row-major in `sel` order.
pub(crate) fn offsets(dims: &[usize], sel: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut out = vec![0usize];
    for &q in sel {
        let mut next = Vec::with_capacity(out.len() * dims[q]);
        for &o in &out {
            for x in 0..dims[q] {
                next.push(o + x * st[q]);
            }
        }
        out = next;
    }
    out
}

fn split(mask: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let on = (0..mask.len()).filter(|&q| mask[q]).collect();
    let off = (0..mask.len()).filter(|&q| !mask[q]).collect();
    (on, off)
}

/// Row-major partial trace over the masked subsystems.
pub(crate) fn partial_trace_raw<T, G>(dims: &[usize], mask: &[bool], get: G) -> Vec<T>
where
    T: Clone + Zero,
    G: Fn(usize, usize) -> T,
{
    let (on, off) = split(mask);
    let tr = offsets(dims, &on);
    let keep = offsets(dims, &off);
    let m = keep.len();
    let mut out = Vec::with_capacity(m * m);
    for &r in &keep {
        for &s in &keep {
            let mut acc = T::zero();
            for &t in &tr {
                acc = acc + get(r + t, s + t);
            }
            out.push(acc);
        }
    }
    out
}

/// Row-major `Tr_X(A) ⊗ 𝟙_X`, reinserted at the original positions, with `scale` applied to the reduced entries.
pub(crate) fn trace_and_replace_raw<T, G, S>(dims: &[usize], mask: &[bool], get: G, scale: S) -> Vec<T>
where
    T: Clone + Zero,
    G: Fn(usize, usize) -> T,
    S: Fn(T) -> T,
{
    let reduced = partial_trace_raw(dims, mask, get);
    let (on, off) = split(mask);
    let tr = offsets(dims, &on);
    let keep = offsets(dims, &off);
    let n: usize = dims.iter().product();
    let m = keep.len();
    let mut out = vec![T::zero(); n * n];
    for (i, &r) in keep.iter().enumerate() {
        for (j, &s) in keep.iter().enumerate() {
            let v = scale(reduced[i * m + j].clone());
            if v.is_zero() {
                continue;
            }
            for &t in &tr {
                out[(r + t) * n + s + t] = v.clone();
            }
        }
    }
    out
}

/// Row-major partial transpose on the masked subsystems.
pub(crate) fn partial_transpose_raw<T, G>(dims: &[usize], mask: &[bool], get: G) -> Vec<T>
where
    G: Fn(usize, usize) -> T,
{
    let n: usize = dims.iter().product();
    let mut out = Vec::with_capacity(n * n);
    let st = strides(dims);
    let decompose = |full: usize| -> (usize, usize) {
        let mut pa = 0;
        let mut pb = 0;
        for q in 0..dims.len() {
            let x = (full / st[q]) % dims[q];
            if mask[q] {
                pa += x * st[q];
            } else {
                pb += x * st[q];
            }
        }
        (pa, pb)
    };
    let parts: Vec<(usize, usize)> = (0..n).map(decompose).collect();
    for i in 0..n {
        for j in 0..n {
            let (ia, ib) = parts[i];
            let (ja, jb) = parts[j];
            out.push(get(ja + ib, ia + jb));
        }
    }
    out
}

/// Row-major reordering: new subsystem `p` is old subsystem `perm[p]`.
pub(crate) fn permute_raw<T, G>(dims: &[usize], perm: &[usize], get: G) -> Vec<T>
where
    G: Fn(usize, usize) -> T,
{
    let map = offsets(dims, perm);
    let n = map.len();
    let mut out = Vec::with_capacity(n * n);
    for &r in &map {
        for &s in &map {
            out.push(get(r, s));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledOperator {
    layout: Vec<SpaceLabel>,
    mat: CMat,
}

fn check_unique(layout: &[SpaceLabel]) -> Result<(), TensorError> {
    let mut seen = HashSet::new();
    for l in layout {
        if !seen.insert(l.name()) {
            return Err(TensorError::DuplicateLabel(l.name().to_string()));
        }
    }
    Ok(())
}

fn from_rows(n: usize, rows: Vec<C64>) -> CMat {
    CMat::from_row_slice(n, n, &rows)
}

impl LabeledOperator {
    pub fn new(layout: Vec<SpaceLabel>, mat: CMat) -> Result<Self, TensorError> {
        check_unique(&layout)?;
        let expected: usize = layout.iter().map(|l| l.dim()).product();
        if mat.nrows() != expected || mat.ncols() != expected {
            return Err(TensorError::ShapeMismatch { side: mat.nrows(), expected });
        }
        Ok(LabeledOperator { layout, mat })
    }

    pub fn identity(layout: Vec<SpaceLabel>) -> Result<Self, TensorError> {
        let n = layout.iter().map(|l| l.dim()).product();
        Self::new(layout, linalg::identity(n))
    }

    pub fn zeros(layout: Vec<SpaceLabel>) -> Result<Self, TensorError> {
        let n = layout.iter().map(|l| l.dim()).product();
        Self::new(layout, CMat::zeros(n, n))
    }

    /// Rank-one operator `|v⟩⟨v|`.
    pub fn projector(layout: Vec<SpaceLabel>, v: &[C64]) -> Result<Self, TensorError> {
        let n = v.len();
        let m = CMat::from_fn(n, n, |i, j| v[i] * v[j].conj());
        Self::new(layout, m)
    }

    pub fn layout(&self) -> &[SpaceLabel] {
        &self.layout
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn dims(&self) -> Vec<usize> {
        self.layout.iter().map(|l| l.dim()).collect()
    }

    pub fn side(&self) -> usize {
        self.mat.nrows()
    }

    pub fn names(&self) -> Vec<&str> {
        self.layout.iter().map(|l| l.name()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.layout.iter().position(|l| l.name() == name)
    }

    pub fn label(&self, name: &str) -> Option<&SpaceLabel> {
        self.layout.iter().find(|l| l.name() == name)
    }

    fn mask(&self, names: &[&str]) -> Result<Vec<bool>, TensorError> {
        let mut mask = vec![false; self.layout.len()];
        for n in names {
            let p = self.position(n).ok_or_else(|| TensorError::UnknownLabel(n.to_string()))?;
            mask[p] = true;
        }
        Ok(mask)
    }

    pub fn with_matrix(&self, mat: CMat) -> Result<Self, TensorError> {
        Self::new(self.layout.clone(), mat)
    }

    pub fn tensor(&self, other: &LabeledOperator) -> Result<Self, TensorError> {
        let mut layout = self.layout.clone();
        layout.extend(other.layout.iter().cloned());
        Self::new(layout, self.mat.kronecker(&other.mat))
    }

    pub fn partial_trace(&self, names: &[&str]) -> Result<Self, TensorError> {
        let mask = self.mask(names)?;
        let layout: Vec<SpaceLabel> =
            self.layout.iter().zip(&mask).filter(|(_, &m)| !m).map(|(l, _)| l.clone()).collect();
        let rows = partial_trace_raw(&self.dims(), &mask, |i, j| self.mat[(i, j)]);
        let n = layout.iter().map(|l| l.dim()).product();
        Self::new(layout, from_rows(n, rows))
    }

    pub fn trace_and_replace(&self, names: &[&str]) -> Result<Self, TensorError> {
        let mask = self.mask(names)?;
        if !mask.iter().any(|&m| m) {
            return Ok(self.clone());
        }
        let dx: usize = self.dims().iter().zip(&mask).filter(|(_, &m)| m).map(|(d, _)| d).product();
        let inv = 1.0 / dx as f64;
        let rows = trace_and_replace_raw(&self.dims(), &mask, |i, j| self.mat[(i, j)], |v| v * inv);
        Self::new(self.layout.clone(), from_rows(self.side(), rows))
    }

    pub fn partial_transpose(&self, names: &[&str]) -> Result<Self, TensorError> {
        let mask = self.mask(names)?;
        let rows = partial_transpose_raw(&self.dims(), &mask, |i, j| self.mat[(i, j)]);
        Self::new(self.layout.clone(), from_rows(self.side(), rows))
    }

    /// Reorders the layout to the given label order (a permutation of the current names).
    pub fn permute(&self, order: &[&str]) -> Result<Self, TensorError> {
        if order.len() != self.layout.len() {
            return Err(TensorError::LayoutMismatch(format!(
                "{} labels requested for a layout of {}",
                order.len(),
                self.layout.len()
            )));
        }
        let mut perm = Vec::with_capacity(order.len());
        for n in order {
            let p = self.position(n).ok_or_else(|| TensorError::UnknownLabel(n.to_string()))?;
            if perm.contains(&p) {
                return Err(TensorError::DuplicateLabel(n.to_string()));
            }
            perm.push(p);
        }
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let rows = permute_raw(&self.dims(), &perm, |i, j| self.mat[(i, j)]);
        let layout = perm.iter().map(|&p| self.layout[p].clone()).collect();
        Self::new(layout, from_rows(self.side(), rows))
    }

    /// Layout sorted by label name.
    pub fn normalized(&self) -> Self {
        let mut names: Vec<&str> = self.names();
        names.sort_unstable();
        self.permute(&names).expect("sorted names are a permutation")
    }

    pub fn permuted_like(&self, other: &LabeledOperator) -> Result<Self, TensorError> {
        let order = other.names();
        let out = self.permute(&order)?;
        for (a, b) in out.layout.iter().zip(&other.layout) {
            if a.dim() != b.dim() {
                return Err(TensorError::DimensionMismatch {
                    name: a.name().to_string(),
                    left: a.dim(),
                    right: b.dim(),
                });
            }
        }
        Ok(out)
    }

    /// Replaces labels; every `(old, new)` pair must name an existing label and keep its dimension.
    pub fn relabel(&self, pairs: &[(&str, SpaceLabel)]) -> Result<Self, TensorError> {
        let mut layout = self.layout.clone();
        for (old, new) in pairs {
            let p = self.position(old).ok_or_else(|| TensorError::UnknownLabel(old.to_string()))?;
            if new.dim() != layout[p].dim() {
                return Err(TensorError::DimensionMismatch {
                    name: new.name().to_string(),
                    left: layout[p].dim(),
                    right: new.dim(),
                });
            }
            layout[p] = new.clone();
        }
        Self::new(layout, self.mat.clone())
    }

    /// `𝟙 ⊗ local` on this operator's layout, with `local` acting on `names` in the given order.
    pub fn embed(&self, local: &CMat, names: &[&str]) -> Result<CMat, TensorError> {
        let mut sub = Vec::new();
        for n in names {
            sub.push(self.label(n).ok_or_else(|| TensorError::UnknownLabel(n.to_string()))?.clone());
        }
        let rest: Vec<SpaceLabel> =
            self.layout.iter().filter(|l| !names.contains(&l.name())).cloned().collect();
        let op = LabeledOperator::identity(rest)?.tensor(&LabeledOperator::new(sub, local.clone())?)?;
        Ok(op.permute(&self.names())?.mat)
    }

    /// Link product: shared labels are contracted, the rest are tensored.
    /// Result layout is `self`'s free labels followed by `other`'s free labels.
    pub fn link_product(&self, other: &LabeledOperator) -> Result<Self, TensorError> {
        let mut shared = Vec::new();
        for l in &self.layout {
            if let Some(r) = other.label(l.name()) {
                if r.dim() != l.dim() {
                    return Err(TensorError::DimensionMismatch {
                        name: l.name().to_string(),
                        left: l.dim(),
                        right: r.dim(),
                    });
                }
                shared.push(l.name());
            }
        }
        if shared.is_empty() {
            return self.tensor(other);
        }
        let x: Vec<&str> = self.names().into_iter().filter(|n| !shared.contains(n)).collect();
        let z: Vec<&str> = other.names().into_iter().filter(|n| !shared.contains(n)).collect();
        let a = self.permute(&[x.clone(), shared.clone()].concat())?;
        let b = other.permute(&[shared.clone(), z.clone()].concat())?;
        let dx: usize = x.iter().map(|n| self.label(n).unwrap().dim()).product();
        let dy: usize = shared.iter().map(|n| self.label(n).unwrap().dim()).product();
        let dz: usize = z.iter().map(|n| other.label(n).unwrap().dim()).product();
        // A∗B[(x z),(x' z')] = Σ_{y,y'} A[(x y'),(x' y)] B[(y' z),(y z')]
        let am = CMat::from_fn(dx * dx, dy * dy, |r, s| {
            let (xi, xj) = (r / dx, r % dx);
            let (yp, y) = (s / dy, s % dy);
            a.mat[(xi * dy + yp, xj * dy + y)]
        });
        let bm = CMat::from_fn(dy * dy, dz * dz, |s, t| {
            let (yp, y) = (s / dy, s % dy);
            let (zi, zj) = (t / dz, t % dz);
            b.mat[(yp * dz + zi, y * dz + zj)]
        });
        let prod = am * bm;
        let mat = CMat::from_fn(dx * dz, dx * dz, |r, s| {
            let (xi, zi) = (r / dz, r % dz);
            let (xj, zj) = (s / dz, s % dz);
            prod[(xi * dx + xj, zi * dz + zj)]
        });
        let mut layout: Vec<SpaceLabel> = x.iter().map(|n| self.label(n).unwrap().clone()).collect();
        layout.extend(z.iter().map(|n| other.label(n).unwrap().clone()));
        Self::new(layout, mat)
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn dagger(&self) -> Self {
        LabeledOperator { layout: self.layout.clone(), mat: self.mat.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        LabeledOperator { layout: self.layout.clone(), mat: self.mat.transpose() }
    }

    pub fn scale(&self, s: f64) -> Self {
        LabeledOperator { layout: self.layout.clone(), mat: &self.mat * c(s, 0.0) }
    }

    fn aligned(&self, other: &LabeledOperator) -> Result<CMat, TensorError> {
        if self.layout == other.layout {
            return Ok(other.mat.clone());
        }
        Ok(other.permuted_like(self)?.mat)
    }

    pub fn add(&self, other: &LabeledOperator) -> Result<Self, TensorError> {
        let m = self.aligned(other)?;
        Ok(LabeledOperator { layout: self.layout.clone(), mat: &self.mat + m })
    }

    pub fn sub(&self, other: &LabeledOperator) -> Result<Self, TensorError> {
        let m = self.aligned(other)?;
        Ok(LabeledOperator { layout: self.layout.clone(), mat: &self.mat - m })
    }

    /// Operator product on a common layout.
    pub fn mul(&self, other: &LabeledOperator) -> Result<Self, TensorError> {
        let m = self.aligned(other)?;
        Ok(LabeledOperator { layout: self.layout.clone(), mat: &self.mat * m })
    }

    /// Hilbert–Schmidt inner product `Tr(A† B)`.
    pub fn inner(&self, other: &LabeledOperator) -> Result<C64, TensorError> {
        let m = self.aligned(other)?;
        Ok(self.mat.adjoint().iter().zip(m.transpose().iter()).map(|(a, b)| a * b).sum())
    }

    /// `Tr(A B)` on a common layout.
    pub fn trace_product(&self, other: &LabeledOperator) -> Result<C64, TensorError> {
        let m = self.aligned(other)?;
        Ok(linalg::hs_inner(&self.mat, &m))
    }

    pub fn distance(&self, other: &LabeledOperator) -> Result<f64, TensorError> {
        Ok(self.sub(other)?.mat.norm())
    }

    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.mat - self.mat.adjoint()).norm() <= tol
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.mat)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.min_eigenvalue() >= -tol
    }
}

pub fn sum(ops: &[LabeledOperator]) -> Result<LabeledOperator, TensorError> {
    let mut it = ops.iter();
    let first = it.next().ok_or_else(|| TensorError::LayoutMismatch("empty operator list".into()))?.clone();
    it.try_fold(first, |acc, op| acc.add(op))
}

/// Labels `[I1..Ik, O1..Ok]` for `k` slots of the given input and output dimensions.
pub fn canonical_layout(k: usize, d_in: usize, d_out: usize) -> Vec<SpaceLabel> {
    let mut layout: Vec<SpaceLabel> = (1..=k).map(|j| SpaceLabel::input(format!("I{j}"), d_in)).collect();
    layout.extend((1..=k).map(|j| SpaceLabel::output(format!("O{j}"), d_out)));
    layout
}

pub fn input_names(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("I{j}")).collect()
}

pub fn output_names(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("O{j}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    #[test]
    fn offsets_enumerate_row_major() {
        assert_eq!(offsets(&[2, 3], &[0, 1]), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(offsets(&[2, 3], &[1, 0]), vec![0, 3, 1, 4, 2, 5]);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let a = LabeledOperator::identity(vec![SpaceLabel::input("A", 2)]).unwrap();
        assert_eq!(a.tensor(&a), Err(TensorError::DuplicateLabel("A".into())));
    }

    #[test]
    fn permute_roundtrip() {
        let x = LabeledOperator::new(vec![SpaceLabel::input("A", 2)], pauli_x()).unwrap();
        let i3 = LabeledOperator::identity(vec![SpaceLabel::output("B", 3)]).unwrap();
        let ab = x.tensor(&i3).unwrap();
        let ba = ab.permute(&["B", "A"]).unwrap();
        assert_eq!(ba.matrix(), &i3.tensor(&x).unwrap().permute(&["B", "A"]).unwrap().into_matrix());
        assert!(ba.permute(&["A", "B"]).unwrap().distance(&ab).unwrap() < 1e-15);
        assert!((ba.matrix() - linalg::identity(3).kronecker(&pauli_x())).norm() < 1e-15);
    }
}
