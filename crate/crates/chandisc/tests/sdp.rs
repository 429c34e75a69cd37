use chandisc::channels::{choi_power, haar_sample, haar_twirl_process, named_gate, Ensemble};
use chandisc::linalg::{self, c, CMat};
use chandisc::sdp::*;
use chandisc::strategies::{build_constraints, validate, SlotDims, StrategyClass};
use chandisc::sweep::haar_ensemble;
use chandisc::tensor::{canonical_layout, LabeledOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn sqrt_paulis() -> Ensemble {
    Ensemble::from_names(&["I", "sqrtX", "sqrtY", "sqrtZ"], None).unwrap()
}

fn pi_weighted_group() -> Ensemble {
    let names = ["I", "X", "Y", "Z", "H", "XH", "YH", "ZH"];
    let digits = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
    let total: f64 = digits.iter().sum();
    Ensemble::from_names(&names, Some(digits.iter().map(|d| d / total).collect())).unwrap()
}

fn random_probs(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let t: f64 = w.iter().sum();
    w.iter().map(|x| x / t).collect()
}

/// Two unitaries: the optimal error is set by the distance from the origin to the convex hull
/// of the spectrum of `(U₁†U₂)^{⊗k}`, which lies on the unit circle.
fn two_unitary_oracle(e: &Ensemble, k: usize) -> f64 {
    let w = e.gates()[0].matrix().adjoint() * e.gates()[1].matrix();
    let phases: Vec<f64> = w.schur().eigenvalues().unwrap().iter().map(|z| z.arg()).collect();
    let mut all = Vec::new();
    let d = phases.len();
    for idx in 0..d.pow(k as u32) {
        let mut r = idx;
        let mut s = 0.0;
        for _ in 0..k {
            s += phases[r % d];
            r /= d;
        }
        all.push(s.rem_euclid(2.0 * PI));
    }
    all.sort_by(f64::total_cmp);
    let mut gap: f64 = all[0] + 2.0 * PI - all[all.len() - 1];
    for p in all.windows(2) {
        gap = gap.max(p[1] - p[0]);
    }
    let arc = 2.0 * PI - gap;
    let f = if arc >= PI { 0.0 } else { (arc / 2.0).cos() };
    let (p1, p2) = (e.probs()[0], e.probs()[1]);
    0.5 * (1.0 + (1.0 - 4.0 * p1 * p2 * f * f).max(0.0).sqrt())
}

#[test]
fn two_unitaries_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..8 {
        let gates = vec![haar_sample(2, &mut rng), haar_sample(2, &mut rng)];
        let e = Ensemble::new(gates, random_probs(2, &mut rng)).unwrap();
        for k in 1..=2 {
            let want = two_unitary_oracle(&e, k);
            for s in StrategyClass::ALL {
                let got = discriminate(&e, k, s).unwrap().value;
                assert!((got - want).abs() < 1e-6, "trial {trial} k={k} {s}: {got} vs {want}");
            }
        }
    }
    let close = Ensemble::from_names(&["I", "sqrtZ"], None).unwrap();
    let want = two_unitary_oracle(&close, 2);
    assert!((want - 1.0).abs() < 1e-12);
    assert!((discriminate(&close, 1, StrategyClass::Par).unwrap().value - 0.5 * (1.0 + 0.5f64.sqrt())).abs() < 1e-6);
}

#[test]
fn examples_at_two_copies() {
    let e = sqrt_paulis();
    let seq = discriminate(&e, 2, StrategyClass::Seq).unwrap();
    assert!(seq.value >= 1.0 - 1e-6);
    let par = discriminate(&e, 2, StrategyClass::Par).unwrap();
    assert!((par.value - (0.25 + 0.5f64.sqrt())).abs() < 1e-6, "{}", par.value);
    for r in [&seq, &par] {
        let cs = tester_constraints(r.strategy, 2, 2).unwrap();
        let total = r.tester.iter().skip(1).fold(r.tester[0].clone(), |a, t| a.add(t).unwrap());
        assert!(validate(&[total], &cs, 1e-6).unwrap().passed);
        assert!(r.tester.iter().all(|t| t.min_eigenvalue() > -1e-7));
        assert!((success_probability(&r.tester, &e, 2).unwrap() - r.value).abs() < 1e-6);
    }

    let dual = solve(&assemble_dual(&pi_weighted_group(), 2, StrategyClass::Seq).unwrap(), 1e-9).unwrap();
    assert!(dual.value > 0.8197 && dual.value < 0.8198, "{}", dual.value);
}

#[test]
fn trivial_cases() {
    let one = Ensemble::new(vec![named_gate("H").unwrap()], vec![1.0]).unwrap();
    for s in StrategyClass::ALL {
        assert!((discriminate(&one, 2, s).unwrap().value - 1.0).abs() < 1e-7);
    }
    let paulis = Ensemble::from_names(&["I", "X", "Y", "Z"], None).unwrap();
    assert!((discriminate(&paulis, 1, StrategyClass::Gen).unwrap().value - 1.0).abs() < 1e-7);
    let bad = Ensemble::from_names(&["I", "X"], None).unwrap();
    assert!(matches!(discriminate(&bad, 5, StrategyClass::Par), Err(SdpError::TooLarge(_))));
}

#[test]
fn duality_and_bounds_on_random_ensembles() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..50u64 {
        let n = 2 + (trial as usize % 4);
        let base = haar_ensemble(2, n, 1000 + trial);
        let e = Ensemble::new(base.gates().to_vec(), random_probs(n, &mut rng)).unwrap();
        let s = StrategyClass::ALL[trial as usize % 3];
        let p = discriminate(&e, 2, s).unwrap();
        let d = solve(&assemble_dual(&e, 2, s).unwrap(), 1e-8).unwrap();
        assert!(d.value >= p.value - 1e-6, "trial {trial}: dual {} < primal {}", d.value, p.value);
        assert!((d.value - p.value).abs() < 1e-6, "trial {trial}");
        assert!(p.value >= e.max_prob() - 1e-7);
        assert!(p.value <= 1.0 + 1e-7);
        assert!(p.primal_dual_gap < 1e-6);
    }
}

#[test]
fn dual_witness_bounds_each_hypothesis() {
    let e = sqrt_paulis();
    let r = discriminate(&e, 2, StrategyClass::Seq).unwrap();
    let w = &r.dual_witness;
    for g in e.gates() {
        let ch = choi_power(g, 2).permuted_like(&w.wbar).unwrap();
        let gap = w.wbar.matrix() * c(w.lambda, 0.0) - ch.matrix() * c(0.25, 0.0);
        assert!(linalg::min_eigenvalue(&gap) > -1e-6);
    }
    assert!((w.lambda - r.value).abs() < 1e-6);
}

#[test]
fn haar_twirl_is_a_general_dual_point() {
    let gamma = 10.0;
    let w = haar_twirl_process(2, 2).unwrap();
    for seed in 0..10 {
        let e = haar_ensemble(2, 5, seed);
        let lambda = gamma / e.len() as f64;
        for (g, p) in e.gates().iter().zip(e.probs()) {
            let ch = choi_power(g, 2).permuted_like(&w).unwrap();
            let gap = w.matrix() * c(lambda, 0.0) - ch.matrix() * c(*p, 0.0);
            assert!(linalg::min_eigenvalue(&gap) > -1e-9);
        }
        let r = discriminate(&e, 2, StrategyClass::Gen).unwrap();
        assert!(r.value <= lambda + 1e-6);
    }
}

#[test]
fn uniform_guess_tester() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let g = CMat::from_fn(4, 4, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    let w = (rho / tr).kronecker(&linalg::identity(4));
    let e = haar_ensemble(2, 5, 3);
    let t = LabeledOperator::new(canonical_layout(2, 2, 2), w * c(0.2, 0.0)).unwrap();
    let tester = vec![t; 5];
    let cs = build_constraints(StrategyClass::Par, 2, &SlotDims::uniform(2, 2, 2)).unwrap();
    let total = tester.iter().skip(1).fold(tester[0].clone(), |a, t| a.add(t).unwrap());
    assert!(validate(&[total], &cs, 1e-12).unwrap().passed);
    assert!((success_probability(&tester, &e, 2).unwrap() - 0.2).abs() < 1e-12);
}

#[test]
fn weights_scale_the_optimum() {
    let e = pi_weighted_group();
    for s in [StrategyClass::Par, StrategyClass::Gen] {
        let base = discriminate(&e, 2, s).unwrap().value;
        let doubled: Vec<f64> = e.probs().iter().map(|p| 2.0 * p).collect();
        let r = solve(&assemble_primal_weighted(&doubled, e.gates(), 2, s).unwrap(), 1e-8).unwrap();
        assert!((r.value - 2.0 * base).abs() < 2e-6, "{s}");
    }
    assert!(assemble_primal_weighted(&[0.5], e.gates(), 2, StrategyClass::Par).is_err());
    assert!(assemble_primal_weighted(&[-1.0, 2.0], &e.gates()[..2], 2, StrategyClass::Par).is_err());
}

#[test]
fn execution_paths_agree() {
    let e = haar_ensemble(2, 4, 21);
    let p = assemble_primal(&e, 2, StrategyClass::Seq).unwrap();
    let a = solve_with(&p, &SolverOptions { exec: chandisc::Execution::Sequential, ..SolverOptions::default() }).unwrap();
    let b = solve_with(&p, &SolverOptions::default()).unwrap();
    assert!((a.value - b.value).abs() < 1e-9);
}
