//! Constructions on testers and processes: group symmetrization, covariant
//! parallelization, switch-like processes with their sequential simulation, and an
//! explicit adaptive tester for `{𝟙, X, Y, √Z}`.

use rand::Rng;
use thiserror::Error;

use crate::channels::{find_phase_equivalent, haar_sample, ChannelError, Ensemble, UnitaryGate};
use crate::linalg::{self, c, CMat, C64};
use crate::tensor::{self, canonical_layout, LabeledOperator, SpaceLabel, TensorError};

pub const COMMUTATION_TOL: f64 = 1e-7;
pub const PINV_CUTOFF: f64 = 1e-10;
const GROUP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("gates are not closed under composition: {0}")]
    NotAGroup(String),
    #[error("process does not commute with the ensemble (relative residual {0:.3e})")]
    Commutation(f64),
    #[error("invalid switch-like specification: {0}")]
    Spec(String),
    #[error("{0}")]
    Shape(String),
}

fn canonical(tester: &[LabeledOperator], k: usize, d: usize) -> Result<Vec<LabeledOperator>, ConstructionError> {
    let layout = canonical_layout(k, d, d);
    let names: Vec<&str> = layout.iter().map(|l| l.name()).collect();
    tester
        .iter()
        .map(|t| {
            let p = t.permute(&names)?;
            if p.layout() != layout.as_slice() {
                return Err(ConstructionError::Shape(format!("tester layout {:?} is not a {k}-slot layout", t.names())));
            }
            Ok(p)
        })
        .collect()
}

/// `𝟙^I ⊗ V^{⊗k}` on the canonical layout.
fn output_action(v: &UnitaryGate, k: usize) -> CMat {
    let d = v.dim().pow(k as u32);
    linalg::identity(d).kronecker(&v.tensor_power(k))
}

/// `T_U = (1/N) Σ_V (𝟙 ⊗ V^{†⊗k}) T_{VU} (𝟙 ⊗ V^{⊗k})` with `VU` resolved up to phase.
pub fn symmetrize_tester(tester: &[LabeledOperator], group: &[UnitaryGate], k: usize) -> Result<Vec<LabeledOperator>, ConstructionError> {
    let n = group.len();
    if tester.len() != n || n == 0 {
        return Err(ConstructionError::Shape(format!("{} outcomes for {} group elements", tester.len(), n)));
    }
    let d = group[0].dim();
    let ts = canonical(tester, k, d)?;
    let mut table = vec![vec![0usize; n]; n];
    for (vi, v) in group.iter().enumerate() {
        for (ui, u) in group.iter().enumerate() {
            table[vi][ui] = find_phase_equivalent(group, &v.then_after(u), GROUP_TOL)
                .ok_or_else(|| ConstructionError::NotAGroup(format!("product of elements {vi} and {ui}")))?;
        }
    }
    let actions: Vec<CMat> = group.iter().map(|v| output_action(v, k)).collect();
    let side = ts[0].side();
    (0..n)
        .map(|ui| {
            let mut acc = CMat::zeros(side, side);
            for (vi, a) in actions.iter().enumerate() {
                acc += a.adjoint() * ts[table[vi][ui]].matrix() * a;
            }
            Ok(ts[0].with_matrix(linalg::hermitian_part(&acc) / c(n as f64, 0.0))?)
        })
        .collect()
}

/// Largest relative commutator `‖[W, 𝟙 ⊗ U^{⊗k}]‖ / ‖W‖` over the gates.
pub fn commutation_residual(w: &LabeledOperator, gates: &[UnitaryGate], k: usize) -> f64 {
    let norm = w.norm().max(1e-300);
    gates
        .iter()
        .map(|g| {
            let a = output_action(g, k);
            (w.matrix() * &a - &a * w.matrix()).norm() / norm
        })
        .fold(0.0, f64::max)
}

/// Parallel tester `T_U = ρ ∗ M_U` built from a covariant tester.
#[derive(Clone, Debug)]
pub struct ParallelTester {
    /// State on `[A1..Ak, I1..Ik]`, `A` being a reference copy of the inputs.
    pub state: LabeledOperator,
    /// POVM on `[A1..Ak, O1..Ok]`.
    pub povm: Vec<LabeledOperator>,
    /// `ρ ∗ M_U` on the canonical layout.
    pub tester: Vec<LabeledOperator>,
    pub commutation_residual: f64,
}

pub fn parallelize_covariant_tester(
    tester: &[LabeledOperator],
    gates: &[UnitaryGate],
    k: usize,
) -> Result<ParallelTester, ConstructionError> {
    let n = tester.len();
    if n == 0 || gates.is_empty() {
        return Err(ConstructionError::Shape("empty tester or gate set".into()));
    }
    let d = gates[0].dim();
    let ts = canonical(tester, k, d)?;
    let w = tensor::sum(&ts)?;
    let residual = commutation_residual(&w, gates, k);
    if residual > COMMUTATION_TOL {
        return Err(ConstructionError::Commutation(residual));
    }
    let wm = linalg::hermitian_part(w.matrix());
    let sqrt_t = linalg::psd_sqrt(&wm).transpose();
    let (pinv, proj) = linalg::psd_pinv_sqrt(&wm, PINV_CUTOFF);
    let half = d.pow(k as u32);
    let phi = CMat::from_fn(half * half, 1, |r, _| if r / half == r % half { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let v = &sqrt_t * phi;
    let rho = &v * v.adjoint();

    let refs: Vec<(String, String)> = (1..=k).map(|j| (format!("I{j}"), format!("A{j}"))).collect();
    let to_ref: Vec<(&str, SpaceLabel)> = refs.iter().map(|(i, a)| (i.as_str(), SpaceLabel::aux(a.clone(), d))).collect();
    let state_layout: Vec<SpaceLabel> = (1..=k)
        .map(|j| SpaceLabel::aux(format!("A{j}"), d))
        .chain((1..=k).map(|j| SpaceLabel::input(format!("I{j}"), d)))
        .collect();
    let state = LabeledOperator::new(state_layout, rho)?;
    let complement = (linalg::identity(half * half) - proj) / c(n as f64, 0.0);
    let povm = ts
        .iter()
        .map(|t| {
            let m = &pinv * t.matrix() * &pinv + &complement;
            Ok(t.with_matrix(linalg::hermitian_part(&m))?.relabel(&to_ref)?)
        })
        .collect::<Result<Vec<_>, ConstructionError>>()?;
    let layout = canonical_layout(k, d, d);
    let names: Vec<&str> = layout.iter().map(|l| l.name()).collect();
    let tester = povm
        .iter()
        .map(|m| Ok(state.link_product(m)?.permute(&names)?))
        .collect::<Result<Vec<_>, ConstructionError>>()?;
    Ok(ParallelTester { state, povm, tester, commutation_residual: residual })
}

/// Permutations of `0..k` in lexicographic order of their image tuples.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Switch-like superchannel data: one unitary on target ⊗ auxiliary for every
/// branch `π` (lexicographic permutation index) and step `n ∈ 0..=k`.
#[derive(Clone, Debug)]
pub struct SwitchLikeSpec {
    k: usize,
    target_dim: usize,
    aux_dim: usize,
    v: Vec<Vec<UnitaryGate>>,
}

impl SwitchLikeSpec {
    pub fn new(k: usize, target_dim: usize, aux_dim: usize, v: Vec<Vec<UnitaryGate>>) -> Result<Self, ConstructionError> {
        if k == 0 || target_dim == 0 || aux_dim == 0 {
            return Err(ConstructionError::Spec("k, target and auxiliary dimensions must be positive".into()));
        }
        let branches = permutations(k).len();
        if v.len() != branches || v.iter().any(|row| row.len() != k + 1) {
            return Err(ConstructionError::Spec(format!("expected {branches} branches of {} unitaries", k + 1)));
        }
        let dim = target_dim * aux_dim;
        if let Some((p, n)) = v
            .iter()
            .enumerate()
            .flat_map(|(p, row)| row.iter().enumerate().map(move |(n, g)| (p, n, g)))
            .find(|(_, _, g)| g.dim() != dim)
            .map(|(p, n, _)| (p, n))
        {
            return Err(ConstructionError::Spec(format!("V[{p}][{n}] does not act on dimension {dim}")));
        }
        Ok(SwitchLikeSpec { k, target_dim, aux_dim, v })
    }

    /// All `V_{πn} = 𝟙`, no auxiliary system: the quantum switch.
    pub fn standard_switch(k: usize, d: usize) -> Self {
        let branches = permutations(k).len();
        let v = vec![vec![UnitaryGate::identity(d); k + 1]; branches];
        SwitchLikeSpec { k, target_dim: d, aux_dim: 1, v }
    }

    pub fn random<R: Rng + ?Sized>(k: usize, d: usize, aux: usize, rng: &mut R) -> Self {
        let branches = permutations(k).len();
        let v = (0..branches).map(|_| (0..=k).map(|_| haar_sample(d * aux, rng)).collect()).collect();
        SwitchLikeSpec { k, target_dim: d, aux_dim: aux, v }
    }

    pub fn copies(&self) -> usize {
        self.k
    }

    pub fn branches(&self) -> usize {
        self.v.len()
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn aux_dim(&self) -> usize {
        self.aux_dim
    }

    /// Past and future labels `(Pc, Pt, Pa)` and `(Fc, Ft, Fa)`.
    pub fn past_labels(&self) -> Vec<SpaceLabel> {
        vec![
            SpaceLabel::aux("Pc", self.branches()),
            SpaceLabel::aux("Pt", self.target_dim),
            SpaceLabel::aux("Pa", self.aux_dim),
        ]
    }

    pub fn future_labels(&self) -> Vec<SpaceLabel> {
        vec![
            SpaceLabel::aux("Fc", self.branches()),
            SpaceLabel::aux("Ft", self.target_dim),
            SpaceLabel::aux("Fa", self.aux_dim),
        ]
    }

    /// `[Pc, Pt, Pa, I1..Ik, O1..Ok, Fc, Ft, Fa]`.
    pub fn layout(&self) -> Vec<SpaceLabel> {
        let mut l = self.past_labels();
        l.extend(canonical_layout(self.k, self.target_dim, self.target_dim));
        l.extend(self.future_labels());
        l
    }

    /// `Σ_π |π⟩⟨π| ⊗ V_{πk} (U_{σ_π(k)} ⊗ 𝟙) ⋯ (U_{σ_π(1)} ⊗ 𝟙) V_{π0}` on control ⊗ target ⊗ auxiliary.
    pub fn apply(&self, unitaries: &[UnitaryGate]) -> Result<CMat, ConstructionError> {
        if unitaries.len() != self.k || unitaries.iter().any(|u| u.dim() != self.target_dim) {
            return Err(ConstructionError::Spec(format!("expected {} unitaries of dimension {}", self.k, self.target_dim)));
        }
        let inner = self.target_dim * self.aux_dim;
        let mut out = CMat::zeros(self.branches() * inner, self.branches() * inner);
        let ia = linalg::identity(self.aux_dim);
        for (p, sigma) in permutations(self.k).iter().enumerate() {
            let mut m = self.v[p][0].matrix().clone();
            for n in 1..=self.k {
                m = self.v[p][n].matrix() * unitaries[sigma[n - 1]].matrix().kronecker(&ia) * m;
            }
            out.view_mut((p * inner, p * inner), (inner, inner)).copy_from(&m);
        }
        Ok(out)
    }

    /// Process vector of the comb whose branch `π` calls slot `order(π)[n−1]` at step `n`.
    fn process_vector(&self, orders: &[Vec<usize>]) -> Vec<C64> {
        let (k, d, a) = (self.k, self.target_dim, self.aux_dim);
        let b = self.branches();
        let half = d.pow(k as u32);
        let len = b * d * a * half * half * b * d * a;
        let mut w = vec![c(0.0, 0.0); len];
        let digit = |x: usize, j: usize| (x / d.pow((k - 1 - j) as u32)) % d;
        let auxes = a.pow(k as u32);
        for (p, order) in orders.iter().enumerate() {
            let v = &self.v[p];
            for pt in 0..d {
                for pa in 0..a {
                    for ii in 0..half {
                        for oo in 0..half {
                            for ft in 0..d {
                                for fa in 0..a {
                                    let mut amp = c(0.0, 0.0);
                                    for aa in 0..auxes {
                                        let ax = |n: usize| (aa / a.pow((k - 1 - n) as u32)) % a;
                                        let s0 = order[0];
                                        let mut z = v[0].matrix()[(digit(ii, s0) * a + ax(0), pt * a + pa)];
                                        for n in 1..k {
                                            let (prev, next) = (order[n - 1], order[n]);
                                            z *= v[n].matrix()[(digit(ii, next) * a + ax(n), digit(oo, prev) * a + ax(n - 1))];
                                        }
                                        z *= v[k].matrix()[(ft * a + fa, digit(oo, order[k - 1]) * a + ax(k - 1))];
                                        amp += z;
                                    }
                                    let idx = ((((((p * d + pt) * a + pa) * half + ii) * half + oo) * b + p) * d + ft) * a + fa;
                                    w[idx] = amp;
                                }
                            }
                        }
                    }
                }
            }
        }
        w
    }
}

/// `W^SL = |U_SL⟩⟩⟨⟨U_SL|` on [`SwitchLikeSpec::layout`].
pub fn build_switch_like_process(spec: &SwitchLikeSpec) -> Result<LabeledOperator, ConstructionError> {
    let w = spec.process_vector(&permutations(spec.k));
    Ok(LabeledOperator::projector(spec.layout(), &w)?)
}

/// Sequential comb built from the controlled unitaries `V_n^ctrl = Σ_π |π⟩⟨π| ⊗ V_{πn}`,
/// calling the slots in their natural order.
pub fn sequential_simulation_of_switch_like(spec: &SwitchLikeSpec) -> Result<LabeledOperator, ConstructionError> {
    let natural: Vec<usize> = (0..spec.k).collect();
    let w = spec.process_vector(&vec![natural; spec.branches()]);
    Ok(LabeledOperator::projector(spec.layout(), &w)?)
}

/// `W ∗ ⊗_j |U_j⟩⟩⟨⟨U_j|^{I_j O_j}`, an operator on the remaining labels.
pub fn plug_unitaries(process: &LabeledOperator, unitaries: &[UnitaryGate]) -> Result<LabeledOperator, ConstructionError> {
    let mut out = process.clone();
    for (j, u) in unitaries.iter().enumerate() {
        let choi = crate::channels::choi_of_unitary(
            u,
            SpaceLabel::input(format!("I{}", j + 1), u.dim()),
            SpaceLabel::output(format!("O{}", j + 1), u.dim()),
        )?;
        out = out.link_product(&choi)?;
    }
    Ok(out)
}

/// `T_i = Tr_PF[(ρ ⊗ 𝟙) W (𝟙 ⊗ M_i)]` with `ρ` on the past labels and `M_i` on the future labels.
pub fn switch_tester(
    spec: &SwitchLikeSpec,
    process: &LabeledOperator,
    rho: &CMat,
    effects: &[CMat],
) -> Result<Vec<LabeledOperator>, ConstructionError> {
    let layout = spec.layout();
    let names: Vec<&str> = layout.iter().map(|l| l.name()).collect();
    let w = process.permute(&names)?;
    if w.layout() != layout.as_slice() {
        return Err(ConstructionError::Shape(format!("process layout {:?} does not match the specification", process.names())));
    }
    let np: usize = spec.past_labels().iter().map(|l| l.dim()).product();
    let nf = np;
    let nx = spec.target_dim.pow(2 * spec.k as u32);
    if rho.shape() != (np, np) || effects.iter().any(|m| m.shape() != (nf, nf)) {
        return Err(ConstructionError::Shape(format!("state and effects must act on dimension {np}")));
    }
    let w = w.matrix();
    let at = |p: usize, x: usize, f: usize| (p * nx + x) * nf + f;
    let tester_layout = canonical_layout(spec.k, spec.target_dim, spec.target_dim);
    effects
        .iter()
        .map(|m| {
            let mut t = CMat::zeros(nx, nx);
            for p in 0..np {
                for q in 0..np {
                    let r = rho[(p, q)];
                    if r == c(0.0, 0.0) {
                        continue;
                    }
                    for f in 0..nf {
                        for g in 0..nf {
                            let z = r * m[(g, f)];
                            if z == c(0.0, 0.0) {
                                continue;
                            }
                            for x in 0..nx {
                                for y in 0..nx {
                                    t[(x, y)] += z * w[(at(q, x, f), at(p, y, g))];
                                }
                            }
                        }
                    }
                }
            }
            Ok(LabeledOperator::new(tester_layout.clone(), t)?)
        })
        .collect()
}

fn ket(v: [f64; 4]) -> CMat {
    CMat::from_fn(4, 1, |i, _| c(v[i], 0.0))
}

fn proj(v: &CMat) -> CMat {
    v * v.adjoint()
}

/// Choi vector `Σ_i |i⟩ ⊗ K|i⟩` of a Kraus operator.
fn choi_vec(k: &CMat) -> Vec<C64> {
    let (o, i) = (k.nrows(), k.ncols());
    let mut v = vec![c(0.0, 0.0); i * o];
    for a in 0..i {
        for b in 0..o {
            v[a * o + b] = k[(b, a)];
        }
    }
    v
}

struct Bell {
    phi_p: CMat,
    phi_m: CMat,
    psi_p: CMat,
    psi_m: CMat,
}

fn bell() -> Bell {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Bell {
        phi_p: ket([h, 0.0, 0.0, h]),
        phi_m: ket([h, 0.0, 0.0, -h]),
        psi_p: ket([0.0, h, h, 0.0]),
        psi_m: ket([0.0, h, -h, 0.0]),
    }
}

/// Two-copy sequential tester that discriminates `{𝟙, X, Y, √Z}` perfectly.
///
/// A Bell pair is sent through the first copy and measured with the Lüders instrument
/// `{M_φ, M_ψ+, M_ψ−}`; the outcome is stored as a normalized flag state and the
/// post-measurement state is sent through the second copy. Outcomes are ordered as
/// `𝟙, X, Y, √Z`.
pub fn bell_flag_tester() -> Result<Vec<LabeledOperator>, ConstructionError> {
    let b = bell();
    let m_phi = proj(&b.phi_p) + proj(&b.phi_m);
    let m_psi_p = proj(&b.psi_p);
    let m_psi_m = proj(&b.psi_m);
    let instruments = [&m_phi, &m_psi_p, &m_psi_m];

    let rho = LabeledOperator::projector(
        vec![SpaceLabel::input("I1", 2), SpaceLabel::aux("A1", 2)],
        b.phi_p.as_slice(),
    )?;
    let e_layout = vec![
        SpaceLabel::output("O1", 2),
        SpaceLabel::aux("A1", 2),
        SpaceLabel::input("I2", 2),
        SpaceLabel::aux("A2", 2),
        SpaceLabel::aux("F", 4),
    ];
    let mut e = CMat::zeros(64, 64);
    for m in instruments {
        let v = choi_vec(m);
        let kraus = CMat::from_fn(16, 16, |i, j| v[i] * v[j].conj());
        let flag = m / m.trace();
        e += kraus.kronecker(&flag);
    }
    let encoder = LabeledOperator::new(e_layout, e)?;
    let front = rho.link_product(&encoder)?;

    let n_layout = vec![SpaceLabel::output("O2", 2), SpaceLabel::aux("A2", 2), SpaceLabel::aux("F", 4)];
    let id = linalg::identity(4);
    let rest = proj(&b.psi_p) + proj(&b.psi_m);
    let effects = [
        (proj(&b.phi_p) + rest).kronecker(&m_phi),
        id.kronecker(&m_psi_p),
        id.kronecker(&m_psi_m),
        proj(&b.phi_m).kronecker(&m_phi),
    ];
    let layout = canonical_layout(2, 2, 2);
    let names: Vec<&str> = layout.iter().map(|l| l.name()).collect();
    effects
        .iter()
        .map(|n| {
            let eff = LabeledOperator::new(n_layout.clone(), n.transpose())?;
            Ok(front.link_product(&eff)?.permute(&names)?)
        })
        .collect()
}

/// Expected number of copies consumed by [`bell_flag_tester`]: the second copy is needed
/// only after the `M_φ` outcome.
pub fn bell_flag_expected_copies(ensemble: &Ensemble) -> Result<f64, ConstructionError> {
    if ensemble.dim() != 2 {
        return Err(ConstructionError::Shape("the Bell-flag strategy acts on qubits".into()));
    }
    let b = bell();
    let m_phi = proj(&b.phi_p) + proj(&b.phi_m);
    let mut total = 0.0;
    for (g, p) in ensemble.gates().iter().zip(ensemble.probs()) {
        let out = g.matrix().kronecker(&linalg::identity(2)) * &b.phi_p;
        let again = (out.adjoint() * &m_phi * &out)[(0, 0)].re;
        total += p * (1.0 + again);
    }
    Ok(total)
}

fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    use rand_distr::{Distribution, StandardNormal};
    CMat::from_fn(dim, dim, |_, _| c(StandardNormal.sample(rng), StandardNormal.sample(rng)))
}

/// Random full-rank density matrix `G G† / Tr(G G†)` with Gaussian `G`.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = ginibre(dim, rng);
    let r = &g * g.adjoint();
    let t = r.trace();
    r / t
}

/// Random POVM `S^{-1/2} A_i S^{-1/2}` with `A_i = G_i G_i†` and `S = Σ A_i`.
pub fn random_povm<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Vec<CMat> {
    let parts: Vec<CMat> = (0..outcomes)
        .map(|_| {
            let g = ginibre(dim, rng);
            &g * g.adjoint()
        })
        .collect();
    let total = parts.iter().fold(CMat::zeros(dim, dim), |acc, a| acc + a);
    let (inv, _) = linalg::psd_pinv_sqrt(&linalg::hermitian_part(&total), 0.0);
    parts.iter().map(|a| linalg::hermitian_part(&(&inv * a * &inv))).collect()
}
