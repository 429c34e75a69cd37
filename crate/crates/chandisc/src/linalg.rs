//! Dense complex helpers shared by the numeric modules.

use nalgebra::{DMatrix, DMatrixViewMut, DVector};
use num_complex::Complex64;

use crate::exec::Execution;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `a`.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(a.nrows(), a.ncols(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(a).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    eigvalsh(a).first().copied().unwrap_or(0.0)
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn spectral_map(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(a);
    let mut scaled = vecs.clone();
    for (k, v) in vals.iter().enumerate() {
        let s = f(*v);
        scaled.column_mut(k).scale_mut(s);
    }
    scaled * vecs.adjoint()
}

pub fn psd_sqrt(a: &CMat) -> CMat {
    spectral_map(a, |v| v.max(0.0).sqrt())
}

/// Square-root pseudo-inverse and range projector; eigenvalues at or below `cutoff` count as zero.
pub fn psd_pinv_sqrt(a: &CMat, cutoff: f64) -> (CMat, CMat) {
    let inv = spectral_map(a, |v| if v > cutoff { 1.0 / v.sqrt() } else { 0.0 });
    let proj = spectral_map(a, |v| if v > cutoff { 1.0 } else { 0.0 });
    (inv, proj)
}

pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter()
        .zip(b.transpose().iter())
        .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x * y)
}

/// Re Tr(AB), without forming the product.
pub fn re_trace_product(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = a[(i, j)];
            let y = b[(j, i)];
            s += x.re * y.re - x.im * y.im;
        }
    }
    s
}

pub fn is_unitary(u: &CMat, tol: f64) -> bool {
    u.is_square() && (u * u.adjoint() - identity(u.nrows())).norm() <= tol
}

/// Largest step `a` with `x + a dx` positive semidefinite, capped at `cap`.
pub fn max_psd_step(x: &CMat, dx: &CMat, cap: f64) -> f64 {
    let chol = match hermitian_part(x).cholesky() {
        Some(ch) => ch,
        None => return 0.0,
    };
    let l = chol.l();
    let mut y = dx.clone();
    l.solve_lower_triangular_mut(&mut y);
    let mut z = y.adjoint();
    l.solve_lower_triangular_mut(&mut z);
    let lmin = min_eigenvalue(&z);
    if lmin >= 0.0 { cap } else { (-1.0 / lmin).min(cap) }
}

const BLOCK: usize = 96;

/// In-place blocked Cholesky factorization of a symmetric positive definite matrix.
/// Only the lower triangle is referenced and overwritten; on failure the offending pivot is returned.
pub fn cholesky_in_place(a: &mut DMatrix<f64>, exec: Execution) -> Result<(), usize> {
    let n = a.nrows();
    let mut kb = 0;
    while kb < n {
        let b = BLOCK.min(n - kb);
        for j in kb..kb + b {
            let mut d = a[(j, j)];
            for p in kb..j {
                d -= a[(j, p)] * a[(j, p)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(j);
            }
            let d = d.sqrt();
            a[(j, j)] = d;
            for i in j + 1..kb + b {
                let mut s = a[(i, j)];
                for p in kb..j {
                    s -= a[(i, p)] * a[(j, p)];
                }
                a[(i, j)] = s / d;
            }
        }
        let rest = n - kb - b;
        if rest > 0 {
            let l11 = a.view((kb, kb), (b, b)).clone_owned();
            let mut panel_t = a.view((kb + b, kb), (rest, b)).transpose();
            l11.solve_lower_triangular_mut(&mut panel_t);
            let panel = panel_t.transpose();
            a.view_mut((kb + b, kb), (rest, b)).copy_from(&panel);
            let start = kb + b;
            let storage = a.as_mut_slice();
            let trailing = &mut storage[start * n..];
            exec.for_each_chunk_mut(trailing, BLOCK * n, |ci, chunk| {
                let col0 = start + ci * BLOCK;
                let cols = chunk.len() / n;
                let mut view = DMatrixViewMut::from_slice(chunk, n, cols);
                let rows = n - col0;
                let lhs = panel.rows(col0 - start, rows);
                let rhs = panel.rows(col0 - start, cols).transpose();
                view.view_mut((col0, 0), (rows, cols)).gemm(-1.0, &lhs, &rhs, 1.0);
            });
        }
        kb += b;
    }
    Ok(())
}

/// Solves `L Lᵀ x = b` for a factor produced by [`cholesky_in_place`].
pub fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut x = b.clone();
    l.solve_lower_triangular_mut(&mut x);
    l.tr_solve_lower_triangular_mut(&mut x);
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocked_cholesky_matches_reconstruction() {
        let n = 211;
        let g = DMatrix::<f64>::from_fn(n, n, |i, j| ((i * 7 + j * 13) % 17) as f64 / 17.0 - 0.5);
        let a = &g * g.transpose() + DMatrix::<f64>::identity(n, n);
        for exec in [Execution::Sequential, Execution::Parallel] {
            let mut l = a.clone();
            cholesky_in_place(&mut l, exec).unwrap();
            let l = l.lower_triangle();
            assert!((&l * l.transpose() - &a).norm() < 1e-9);
            let b = DVector::from_fn(n, |i, _| i as f64);
            let x = cholesky_solve(&l, &b);
            assert!((&a * x - b).norm() < 1e-8);
        }
    }

    #[test]
    fn cholesky_reports_indefinite_pivot() {
        let mut a = DMatrix::<f64>::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(cholesky_in_place(&mut a, Execution::Sequential), Err(1));
    }

    #[test]
    fn psd_step_is_boundary() {
        let x = identity(3);
        let dx = CMat::from_diagonal(&DVector::from_vec(vec![c(-2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]));
        assert!((max_psd_step(&x, &dx, 10.0) - 0.5).abs() < 1e-12);
    }
}
