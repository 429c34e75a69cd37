//! Schur complement `M_jk = Σ_i Re Tr(A_j X_i A_k Z_i⁻¹)` for product-basis constraint rows.

use nalgebra::DMatrix;

use crate::basis::ProductBasis;
use crate::exec::Execution;
use crate::linalg::{CMat, C64};

/// Constraint rows `A_j = G_{s_j}` drawn from an orthonormal product basis.
#[derive(Clone, Debug)]
pub struct RowOperator {
    pub basis: ProductBasis,
    pub rows: Vec<usize>,
    positions: Vec<usize>,
}

impl RowOperator {
    pub fn new(basis: ProductBasis, rows: Vec<usize>) -> Self {
        let positions = rows.iter().map(|&s| basis.position(s)).collect();
        RowOperator { basis, rows, positions }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn side(&self) -> usize {
        self.basis.side()
    }

    /// `(Re Tr(A_j H))_j`.
    pub fn apply(&self, h: &CMat) -> Vec<f64> {
        self.basis.coefficients_at(h, &self.rows, &self.positions)
    }

    /// `Σ_j y_j A_j`.
    pub fn adjoint(&self, y: &[f64]) -> CMat {
        self.basis.expand(self.rows.iter().copied().zip(y.iter().copied()))
    }

    pub fn dense_rows(&self) -> Vec<CMat> {
        self.rows.iter().map(|&s| self.basis.element(s)).collect()
    }

    /// Schur complement through the product-basis transform of
    /// `K[(a,b),(c,d)] = Σ_i X_i[b,c] Z_i⁻¹[d,a]`.
    pub fn schur(&self, xs: &[CMat], zinvs: &[CMat], work: &mut Vec<C64>, exec: Execution) -> DMatrix<f64> {
        let n = self.side();
        let len = n * n;
        work.clear();
        work.resize(len * len, C64::new(0.0, 0.0));
        exec.for_each_chunk_mut(work, len, |r, row| {
            let (a, b) = (r / n, r % n);
            for (x, zi) in xs.iter().zip(zinvs) {
                let zcol = zi.column(a);
                for cc in 0..n {
                    let xv = x[(b, cc)];
                    if xv == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let dst = &mut row[cc * n..(cc + 1) * n];
                    for (o, z) in dst.iter_mut().zip(zcol.iter()) {
                        *o += xv * z;
                    }
                }
            }
        });
        self.basis.forward_rows(work, exec);
        self.basis.forward_columns(work, exec);
        let m = self.len();
        let pos = &self.positions;
        let mut out = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            let base = pos[j] * len;
            for k in 0..m {
                out[(j, k)] = work[base + pos[k]].re;
            }
        }
        out
    }

    /// Reference route: `M_jk = Σ_i Re Tr(A_j (X_i A_k Z_i⁻¹))`, one dense product per row and block.
    pub fn schur_dense(&self, xs: &[CMat], zinvs: &[CMat], exec: Execution) -> DMatrix<f64> {
        let a = self.dense_rows();
        let cols = exec.map_range(self.len(), |k| {
            let mut g = CMat::zeros(self.side(), self.side());
            for (x, zi) in xs.iter().zip(zinvs) {
                g += x * &a[k] * zi;
            }
            self.apply(&g)
        });
        DMatrix::from_fn(self.len(), self.len(), |j, k| cols[k][j])
    }
}
