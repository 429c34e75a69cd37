//! Infeasible primal-dual interior point method (HKM direction, Mehrotra predictor-corrector)
//! for the block pair
//!
//! ```text
//! (P) max Σ_i ⟨C_i, X_i⟩  s.t.  ⟨A_j, Σ_i X_i⟩ = b_j,  X_i ⪰ 0
//! (D) min bᵀy             s.t.  Z_i = Σ_j y_j A_j − C_i ⪰ 0
//! ```

use nalgebra::{DMatrix, DVector};

use super::schur::RowOperator;
use super::SdpError;
use crate::exec::Execution;
use crate::linalg::{self, c, CMat};

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub exec: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 100, exec: Execution::default() }
    }
}

#[derive(Clone, Debug)]
pub struct IpmOutput {
    pub xs: Vec<CMat>,
    pub zs: Vec<CMat>,
    pub y: Vec<f64>,
    pub pobj: f64,
    pub dobj: f64,
    pub rel_gap: f64,
    pub pinf: f64,
    pub dinf: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct State {
    xs: Vec<CMat>,
    zs: Vec<CMat>,
    y: Vec<f64>,
}

struct Direction {
    dx: Vec<CMat>,
    dz: Vec<CMat>,
    dy: Vec<f64>,
}

fn inner(a: &CMat, b: &CMat) -> f64 {
    linalg::re_trace_product(a, b)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn factor(m: &DMatrix<f64>, exec: Execution) -> Result<DMatrix<f64>, SdpError> {
    let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut shift = 0.0;
    for _ in 0..8 {
        let mut l = m.clone();
        for i in 0..l.nrows() {
            l[(i, i)] += shift;
        }
        if linalg::cholesky_in_place(&mut l, exec).is_ok() {
            return Ok(l);
        }
        shift = if shift == 0.0 { 1e-14 * scale } else { shift * 100.0 };
    }
    Err(SdpError::Numerical("Schur complement is not positive definite".into()))
}

pub fn solve_blocks(op: &RowOperator, cs: &[CMat], b: &[f64], opts: &SolverOptions) -> Result<IpmOutput, SdpError> {
    let n = op.side();
    let nb = cs.len();
    let m = op.len();
    let exec = opts.exec;
    let b_norm = norm2(b);
    let c_norm = cs.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
    let b_max = b.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let c_max = cs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let xi = (10.0f64).max((n as f64).sqrt()).max(n as f64 * (1.0 + b_max) / 2.0);
    let eta = (10.0f64).max((n as f64).sqrt()).max(1.0 + c_max);
    let ident = linalg::identity(n);
    let mut st = State {
        xs: vec![&ident * c(xi, 0.0); nb],
        zs: vec![&ident * c(eta, 0.0); nb],
        y: vec![0.0; m],
    };
    let mut work = Vec::new();
    let dim = (nb * n) as f64;
    let mut last = None;

    for iter in 0..opts.max_iter {
        let zinvs: Vec<CMat> = st
            .zs
            .iter()
            .map(|z| {
                linalg::hermitian_part(z)
                    .cholesky()
                    .map(|ch| ch.inverse())
                    .ok_or_else(|| SdpError::Numerical("dual slack lost definiteness".into()))
            })
            .collect::<Result<_, _>>()?;
        let aty = op.adjoint(&st.y);
        let ax: Vec<f64> = exec
            .map(&st.xs, |x| op.apply(x))
            .into_iter()
            .fold(vec![0.0; m], |acc, v| acc.iter().zip(&v).map(|(a, b)| a + b).collect());
        let rp: Vec<f64> = b.iter().zip(&ax).map(|(bj, aj)| bj - aj).collect();
        let rd: Vec<CMat> = cs.iter().zip(&st.zs).map(|(ci, zi)| &aty - ci - zi).collect();
        let pobj: f64 = cs.iter().zip(&st.xs).map(|(ci, xi)| inner(ci, xi)).sum();
        let dobj: f64 = b.iter().zip(&st.y).map(|(bj, yj)| bj * yj).sum();
        let xz: f64 = st.xs.iter().zip(&st.zs).map(|(x, z)| inner(x, z)).sum();
        let mu = xz / dim;
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let pinf = norm2(&rp) / (1.0 + b_norm);
        let dinf = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + c_norm);
        let snapshot = |st: &State, converged: bool| IpmOutput {
            xs: st.xs.iter().map(linalg::hermitian_part).collect(),
            zs: st.zs.iter().map(linalg::hermitian_part).collect(),
            y: st.y.clone(),
            pobj,
            dobj,
            rel_gap,
            pinf,
            dinf,
            iterations: iter,
            converged,
        };
        if rel_gap <= opts.tol && pinf <= opts.tol && dinf <= opts.tol && xz / (1.0 + pobj.abs()) <= opts.tol * 10.0 {
            return Ok(snapshot(&st, true));
        }
        last = Some(snapshot(&st, false));

        let schur = op.schur(&st.xs, &zinvs, &mut work, exec);
        let l = match factor(&schur, exec) {
            Ok(l) => l,
            Err(_) => break,
        };

        let solve = |rc: &[CMat]| -> Direction {
            let mut rhs = vec![0.0; m];
            for i in 0..nb {
                let g = &rc[i] * &zinvs[i] - &st.xs[i] * &rd[i] * &zinvs[i];
                for (r, v) in rhs.iter_mut().zip(op.apply(&g)) {
                    *r += v;
                }
            }
            for (r, p) in rhs.iter_mut().zip(&rp) {
                *r -= p;
            }
            let dy = linalg::cholesky_solve(&l, &DVector::from_vec(rhs));
            let dy: Vec<f64> = dy.iter().copied().collect();
            let atdy = op.adjoint(&dy);
            let dz: Vec<CMat> = rd.iter().map(|r| &atdy + r).collect();
            let dx: Vec<CMat> = (0..nb)
                .map(|i| linalg::hermitian_part(&((&rc[i] - &st.xs[i] * &dz[i]) * &zinvs[i])))
                .collect();
            Direction { dx, dz, dy }
        };
        let steps = |d: &Direction, gamma: f64| -> (f64, f64) {
            let ap = (0..nb)
                .map(|i| linalg::max_psd_step(&st.xs[i], &d.dx[i], f64::INFINITY))
                .fold(f64::INFINITY, f64::min);
            let ad = (0..nb)
                .map(|i| linalg::max_psd_step(&st.zs[i], &d.dz[i], f64::INFINITY))
                .fold(f64::INFINITY, f64::min);
            ((gamma * ap).min(1.0), (gamma * ad).min(1.0))
        };

        let rc_aff: Vec<CMat> = st.xs.iter().zip(&st.zs).map(|(x, z)| -(x * z)).collect();
        let aff = solve(&rc_aff);
        let (ap, ad) = steps(&aff, 1.0);
        let mu_aff: f64 = (0..nb)
            .map(|i| inner(&(&st.xs[i] + &aff.dx[i] * c(ap, 0.0)), &(&st.zs[i] + &aff.dz[i] * c(ad, 0.0))))
            .sum::<f64>()
            / dim;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let rc: Vec<CMat> = (0..nb)
            .map(|i| &ident * c(sigma * mu, 0.0) - &st.xs[i] * &st.zs[i] - &aff.dx[i] * &aff.dz[i])
            .collect();
        let dir = solve(&rc);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let (ap, ad) = steps(&dir, gamma);
        for i in 0..nb {
            st.xs[i] += &dir.dx[i] * c(ap, 0.0);
            st.zs[i] += &dir.dz[i] * c(ad, 0.0);
            st.xs[i] = linalg::hermitian_part(&st.xs[i]);
            st.zs[i] = linalg::hermitian_part(&st.zs[i]);
        }
        for (y, d) in st.y.iter_mut().zip(&dir.dy) {
            *y += ad * d;
        }
    }
    last.ok_or_else(|| SdpError::Numerical("no iterations performed".into()))
}
