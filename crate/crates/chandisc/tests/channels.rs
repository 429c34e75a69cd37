use chandisc::channels::*;
use chandisc::linalg::{self, c, CMat, C64};
use chandisc::strategies::{dual_affine_constraints, validate, SlotDims, StrategyClass};
use chandisc::tensor::SpaceLabel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn labels() -> (SpaceLabel, SpaceLabel) {
    (SpaceLabel::input("I", 2), SpaceLabel::output("O", 2))
}

fn gates(names: &[&str]) -> Vec<UnitaryGate> {
    names.iter().map(|n| named_gate(n).unwrap()).collect()
}

#[test]
fn choi_examples() {
    let (i, o) = labels();
    let id = choi_of_unitary(&UnitaryGate::identity(2), i.clone(), o.clone()).unwrap();
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    let phi = CMat::from_fn(4, 4, |r, cc| if r % 3 == 0 && cc % 3 == 0 { one } else { zero });
    assert_eq!(id.matrix(), &phi);
    assert!((id.trace() - c(2.0, 0.0)).norm() < 1e-15);

    let x = choi_of_unitary(&named_gate("X").unwrap(), i.clone(), o.clone()).unwrap();
    let expect = CMat::from_fn(4, 4, |r, cc| if (r == 1 || r == 2) && (cc == 1 || cc == 2) { one } else { zero });
    assert_eq!(x.matrix(), &expect);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let u = haar_sample(2, &mut rng);
        let ch = choi_of_unitary(&u, i.clone(), o.clone()).unwrap();
        assert!((ch.partial_trace(&["O"]).unwrap().matrix() - linalg::identity(2)).norm() < 1e-12);
        let eig = linalg::eigvalsh(ch.matrix());
        assert!(eig[..3].iter().all(|v| v.abs() < 1e-12));
        assert!((eig[3] - 2.0).abs() < 1e-12);
    }
}

#[test]
fn named_gate_examples() {
    let sz = named_gate("sqrtZ").unwrap();
    assert!((sz.matrix() - CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]))).norm() < 1e-12);
    let hp = named_gate("Hp").unwrap();
    let col = hp.matrix().column(0);
    assert!((col[0] - c(0.6, 0.0)).norm() < 1e-15 && (col[1] - c(0.8, 0.0)).norm() < 1e-15);
    let x = named_gate("X").unwrap();
    assert!((x.then_after(&x).matrix() - linalg::identity(2)).norm() < 1e-15);
    assert!(matches!(named_gate("Q"), Err(ChannelError::UnknownGate(_))));
}

#[test]
fn principal_sqrt_examples() {
    let z = named_gate("Z").unwrap();
    let s = principal_sqrt(&z).unwrap();
    assert!((s.matrix()[(1, 1)] - c(0.0, 1.0)).norm() < 1e-12);
    assert!((principal_sqrt(&UnitaryGate::identity(2)).unwrap().matrix() - linalg::identity(2)).norm() < 1e-12);
    for name in ["H", "Hy", "Hp", "X", "Y"] {
        let g = named_gate(name).unwrap();
        let r = principal_sqrt(&g).unwrap();
        assert!((r.then_after(&r).matrix() - g.matrix()).norm() < 1e-10, "{name}");
    }
}

#[test]
fn haar_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut moment = 0.0;
    for _ in 0..2000 {
        let u = haar_sample(2, &mut rng);
        assert!(linalg::is_unitary(u.matrix(), 1e-12));
        moment += u.matrix().trace().norm_sqr();
    }
    moment /= 2000.0;
    assert!((moment / 2.0 - 0.5).abs() < 0.1, "{moment}");
    let a = haar_sample(3, &mut ChaCha8Rng::seed_from_u64(77));
    let b = haar_sample(3, &mut ChaCha8Rng::seed_from_u64(77));
    assert_eq!(a, b);
}

#[test]
fn group_examples() {
    assert!(is_group_up_to_phase(&gates(&["I", "X", "Y", "Z"]), 1e-9).unwrap());
    assert!(is_group_up_to_phase(&gates(&["I", "X", "Y", "Z", "H", "XH", "YH", "ZH"]), 1e-9).unwrap());
    assert!(!is_group_up_to_phase(&gates(&["I", "sqrtX", "sqrtY", "sqrtZ"]), 1e-9).unwrap());
    let mixed = vec![UnitaryGate::identity(2), UnitaryGate::identity(3)];
    assert!(is_group_up_to_phase(&mixed, 1e-9).is_err());
}

#[test]
fn design_examples() {
    let paulis = pauli_group();
    let cliff = clifford_group(2).unwrap();
    assert_eq!(cliff.len(), 24);
    assert!(is_k_design(&paulis, 1, 1e-9).unwrap());
    assert!(!is_k_design(&paulis, 2, 1e-9).unwrap());
    assert!(is_k_design(&cliff, 2, 1e-9).unwrap());
    assert!(is_k_design(&cliff, 1, 1e-9).unwrap());
    assert!(is_k_design(&cliff, 3, 1e-9).unwrap());
    assert!(!is_k_design(&gates(&["I", "X"]), 1, 1e-9).unwrap());
}

#[test]
fn twirl_examples() {
    let w1 = haar_twirl_process(2, 1).unwrap();
    assert!((w1.matrix() - linalg::identity(4) * c(0.5, 0.0)).norm() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 1..=3 {
        let w = haar_twirl_process(2, k).unwrap();
        assert!((w.trace() - c(2f64.powi(k as i32), 0.0)).norm() < 1e-10);
        assert!(w.min_eigenvalue() > -1e-10);
        for _ in 0..20 {
            let v = haar_sample(2, &mut rng);
            let act = linalg::identity(2usize.pow(k as u32)).kronecker(&v.tensor_power(k));
            let moved = &act * w.matrix() * act.adjoint();
            assert!((moved - w.matrix()).norm() < 1e-10);
        }
    }
    let w = haar_twirl_process(2, 2).unwrap();
    let cs = dual_affine_constraints(StrategyClass::Gen, 2, &SlotDims::uniform(2, 2, 2)).unwrap();
    assert!(validate(&[w], &cs, 1e-10).unwrap().passed);
    assert!(matches!(haar_twirl_process(2, 4), Err(ChannelError::Unsupported { .. })));
}

#[test]
fn qutrit_clifford_supports_two_designs() {
    let g = clifford_group(3).unwrap();
    assert!(is_group_up_to_phase(&g, 1e-9).unwrap());
    assert!(is_k_design(&g, 2, 1e-9).unwrap());
    let w = haar_twirl_process(3, 2).unwrap();
    assert!((w.trace() - c(9.0, 0.0)).norm() < 1e-9);
}

#[test]
fn ensemble_invariants() {
    let g = gates(&["I", "X"]);
    assert!(Ensemble::new(g.clone(), vec![0.5, 0.5]).is_ok());
    assert!(Ensemble::new(g.clone(), vec![0.5, 0.6]).is_err());
    assert!(Ensemble::new(g.clone(), vec![1.0]).is_err());
    assert!(Ensemble::new(g, vec![1.5, -0.5]).is_err());
    assert!(UnitaryGate::new(CMat::from_element(2, 2, C64::new(1.0, 0.0))).is_err());
}
