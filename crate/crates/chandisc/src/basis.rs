//! Product bases of Hermitian operators.
//!
//! Local element 0 is the identity; the rest are generalized Gell-Mann matrices
//! (the Pauli matrices X, Y, Z for qubits). Every trace-and-replace map is
//! diagonal in the product basis, which is what the constraint lowering uses.

use crate::exec::Execution;
use crate::linalg::{c, CMat, C64};
use crate::tensor::strides;

/// One entry `(row, col, re, im)` of an unnormalized local basis element (integer valued).
pub type Entry = (usize, usize, i64, i64);

#[derive(Clone, Debug)]
pub struct LocalBasis {
    dim: usize,
    elements: Vec<Vec<Entry>>,
    norms_sq: Vec<i64>,
}

impl LocalBasis {
    pub fn new(d: usize) -> Self {
        let mut elements = vec![(0..d).map(|i| (i, i, 1, 0)).collect::<Vec<_>>()];
        let mut norms_sq = vec![d as i64];
        for a in 0..d {
            for b in a + 1..d {
                elements.push(vec![(a, b, 1, 0), (b, a, 1, 0)]);
                norms_sq.push(2);
                elements.push(vec![(a, b, 0, -1), (b, a, 0, 1)]);
                norms_sq.push(2);
            }
        }
        for l in 1..d {
            let mut e: Vec<Entry> = (0..l).map(|j| (j, j, 1, 0)).collect();
            e.push((l, l, -(l as i64), 0));
            elements.push(e);
            norms_sq.push((l * (l + 1)) as i64);
        }
        LocalBasis { dim: d, elements, norms_sq }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn entries(&self, s: usize) -> &[Entry] {
        &self.elements[s]
    }

    pub fn norm_sq(&self, s: usize) -> i64 {
        self.norms_sq[s]
    }

    /// Orthonormal element `s` as a dense matrix.
    pub fn matrix(&self, s: usize) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        let f = 1.0 / (self.norms_sq[s] as f64).sqrt();
        for &(i, j, re, im) in &self.elements[s] {
            m[(i, j)] = c(re as f64 * f, im as f64 * f);
        }
        m
    }

    /// Orthonormal coefficients, `(s, (a, b), g_s[a, b])`.
    fn table(&self) -> Vec<(usize, usize, C64)> {
        let mut t = Vec::new();
        for s in 0..self.len() {
            let f = 1.0 / (self.norms_sq[s] as f64).sqrt();
            for &(i, j, re, im) in &self.elements[s] {
                t.push((s, i * self.dim + j, c(re as f64 * f, im as f64 * f)));
            }
        }
        t
    }
}

/// Orthonormal Hermitian product basis over subsystems of the given dimensions.
#[derive(Clone, Debug)]
pub struct ProductBasis {
    dims: Vec<usize>,
    locals: Vec<LocalBasis>,
    tables: Vec<Vec<(usize, usize, C64)>>,
    bases: Vec<Vec<usize>>,
}

impl ProductBasis {
    pub fn new(dims: &[usize]) -> Self {
        let locals: Vec<LocalBasis> = dims.iter().map(|&d| LocalBasis::new(d)).collect();
        let tables = locals.iter().map(|l| l.table()).collect();
        let n: usize = dims.iter().product();
        let st = strides(dims);
        let bases = (0..dims.len())
            .map(|q| {
                let (sa, sb, d) = (n * st[q], st[q], dims[q]);
                (0..n * n).filter(|&b| (b / sa) % d == 0 && (b / sb) % d == 0).collect()
            })
            .collect();
        ProductBasis { dims: dims.to_vec(), locals, tables, bases }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn local(&self, q: usize) -> &LocalBasis {
        &self.locals[q]
    }

    pub fn side(&self) -> usize {
        self.dims.iter().product()
    }

    /// Number of basis elements, `side²`.
    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Local indices of global element `s` (first subsystem most significant).
    pub fn digits(&self, mut s: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for q in (0..self.dims.len()).rev() {
            let r = self.dims[q] * self.dims[q];
            out[q] = s % r;
            s /= r;
        }
        out
    }

    /// Bit `q` is set iff element `s` acts non-trivially on subsystem `q`.
    pub fn support(&self, s: usize) -> u32 {
        self.digits(s)
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .fold(0u32, |acc, (q, _)| acc | (1 << q))
    }

    /// Global indices whose support satisfies `keep`.
    pub fn select(&self, keep: impl Fn(u32) -> bool) -> Vec<usize> {
        (0..self.len()).filter(|&s| keep(self.support(s))).collect()
    }

    /// Flat position in an `(a, b)` row of length `side²` where the transform stores element `s`.
    pub fn position(&self, s: usize) -> usize {
        let n = self.side();
        let st = strides(&self.dims);
        self.digits(s)
            .iter()
            .enumerate()
            .map(|(q, &x)| {
                let d = self.dims[q];
                (x / d) * n * st[q] + (x % d) * st[q]
            })
            .sum()
    }

    pub fn element(&self, s: usize) -> CMat {
        let digits = self.digits(s);
        let mut m = CMat::from_element(1, 1, c(1.0, 0.0));
        for (q, &x) in digits.iter().enumerate() {
            m = m.kronecker(&self.locals[q].matrix(x));
        }
        m
    }

    /// In-place map of a length-`side²` vector indexed by `(a, b)` to `u[s] = Σ g_s[a,b] v[a,b]`,
    /// stored at [`ProductBasis::position`].
    pub fn forward_in_place(&self, v: &mut [C64]) {
        let n = self.side();
        let st = strides(&self.dims);
        let mut buf_in = Vec::new();
        let mut buf_out = Vec::new();
        for q in 0..self.dims.len() {
            let d = self.dims[q];
            let (sa, sb) = (n * st[q], st[q]);
            buf_in.resize(d * d, C64::new(0.0, 0.0));
            buf_out.resize(d * d, C64::new(0.0, 0.0));
            let table = &self.tables[q];
            for &base in &self.bases[q] {
                for x in 0..d {
                    for y in 0..d {
                        buf_in[x * d + y] = v[base + x * sa + y * sb];
                    }
                }
                buf_out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                for &(s, ab, g) in table {
                    buf_out[s] += g * buf_in[ab];
                }
                for x in 0..d {
                    for y in 0..d {
                        v[base + x * sa + y * sb] = buf_out[x * d + y];
                    }
                }
            }
        }
    }

    /// Rebuilds the row-major matrix `Σ_s u_s G_s` from coefficients stored at [`ProductBasis::position`].
    pub fn backward_in_place(&self, v: &mut [C64]) {
        let n = self.side();
        let st = strides(&self.dims);
        let mut buf_in = Vec::new();
        let mut buf_out = Vec::new();
        for q in 0..self.dims.len() {
            let d = self.dims[q];
            let (sa, sb) = (n * st[q], st[q]);
            buf_in.resize(d * d, C64::new(0.0, 0.0));
            buf_out.resize(d * d, C64::new(0.0, 0.0));
            let table = &self.tables[q];
            for &base in &self.bases[q] {
                for x in 0..d {
                    for y in 0..d {
                        buf_in[x * d + y] = v[base + x * sa + y * sb];
                    }
                }
                buf_out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                for &(s, ab, g) in table {
                    buf_out[ab] += g * buf_in[s];
                }
                for x in 0..d {
                    for y in 0..d {
                        v[base + x * sa + y * sb] = buf_out[x * d + y];
                    }
                }
            }
        }
    }

    /// All coefficients `Tr(G_s H)` of a matrix, indexed by global element.
    pub fn coefficients(&self, h: &CMat) -> Vec<f64> {
        let mut v: Vec<C64> = h.as_slice().to_vec();
        self.forward_in_place(&mut v);
        (0..self.len()).map(|s| v[self.position(s)].re).collect()
    }

    /// Coefficients at the given global indices only.
    pub fn coefficients_at(&self, h: &CMat, idx: &[usize], positions: &[usize]) -> Vec<f64> {
        debug_assert_eq!(idx.len(), positions.len());
        let mut v: Vec<C64> = h.as_slice().to_vec();
        self.forward_in_place(&mut v);
        positions.iter().map(|&p| v[p].re).collect()
    }

    /// `Σ_s x_s G_s` for coefficients given at (global index, value) pairs.
    pub fn expand(&self, terms: impl IntoIterator<Item = (usize, f64)>) -> CMat {
        let n = self.side();
        let mut v = vec![C64::new(0.0, 0.0); n * n];
        for (s, x) in terms {
            v[self.position(s)] += c(x, 0.0);
        }
        self.backward_in_place(&mut v);
        CMat::from_row_slice(n, n, &v)
    }

    /// Applies the transform along the row index of a `side² × side²` row-major buffer:
    /// row `(a, b)` is replaced by the combination `Σ g_s[a,b] row(a,b)` stored at row `position(s)`.
    pub fn forward_columns(&self, buf: &mut [C64], exec: Execution) {
        let n = self.side();
        let len = n * n;
        let st = strides(&self.dims);
        for q in 0..self.dims.len() {
            let d = self.dims[q];
            let (sa, sb) = (n * st[q], st[q]);
            let table = &self.tables[q];
            let mut rows: Vec<&mut [C64]> = buf.chunks_mut(len).collect();
            let mut groups: Vec<Vec<&mut [C64]>> = self.bases[q]
                .iter()
                .map(|&base| {
                    (0..d * d)
                        .map(|xy| std::mem::take(&mut rows[base + (xy / d) * sa + (xy % d) * sb]))
                        .collect()
                })
                .collect();
            exec.for_each_mut(&mut groups, |group| {
                let mut out = vec![C64::new(0.0, 0.0); d * d * len];
                for &(s, ab, g) in table {
                    let src = &group[ab];
                    let dst = &mut out[s * len..(s + 1) * len];
                    for (o, x) in dst.iter_mut().zip(src.iter()) {
                        *o += g * x;
                    }
                }
                for (xy, row) in group.iter_mut().enumerate() {
                    row.copy_from_slice(&out[xy * len..(xy + 1) * len]);
                }
            });
        }
    }

    /// Applies [`ProductBasis::forward_in_place`] to every row of an `side² × side²` row-major buffer.
    pub fn forward_rows(&self, buf: &mut [C64], exec: Execution) {
        let row = self.len();
        exec.for_each_chunk_mut(buf, row, |_, r| self.forward_in_place(r));
    }
}
