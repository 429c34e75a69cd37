use chandisc::channels::{haar_sample, named_gate, pauli_group, Ensemble, UnitaryGate};
use chandisc::constructions::*;
use chandisc::linalg::{self, c, CMat};
use chandisc::sdp::{discriminate, success_probability, tester_constraints};
use chandisc::strategies::{validate, StrategyClass};
use chandisc::tensor::{self, LabeledOperator, SpaceLabel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn group_of_eight() -> Vec<UnitaryGate> {
    ["I", "X", "Y", "Z", "H", "XH", "YH", "ZH"].iter().map(|n| named_gate(n).unwrap()).collect()
}

fn sqrt_paulis() -> Ensemble {
    Ensemble::from_names(&["I", "sqrtX", "sqrtY", "sqrtZ"], None).unwrap()
}

fn passes(tester: &[LabeledOperator], s: StrategyClass, k: usize) -> bool {
    validate(tester, &tester_constraints(s, k, 2).unwrap(), 1e-8).unwrap().passed
}

fn max_residual(tester: &[LabeledOperator], s: StrategyClass, k: usize) -> f64 {
    let rep = validate(tester, &tester_constraints(s, k, 2).unwrap(), 1e-8).unwrap();
    rep.constraint_residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max)
}

fn random_switch_tester(seed: u64, outcomes: usize) -> (SwitchLikeSpec, Vec<LabeledOperator>, Vec<LabeledOperator>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = SwitchLikeSpec::random(2, 2, 2, &mut rng);
    let rho = random_state(8, &mut rng);
    let povm = random_povm(8, outcomes, &mut rng);
    let sl = build_switch_like_process(&spec).unwrap();
    let seq = sequential_simulation_of_switch_like(&spec).unwrap();
    let t_sl = switch_tester(&spec, &sl, &rho, &povm).unwrap();
    let t_seq = switch_tester(&spec, &seq, &rho, &povm).unwrap();
    (spec, t_sl, t_seq)
}

#[test]
fn bell_flag_tester_is_sequential_and_perfect() {
    let e = Ensemble::from_names(&["I", "X", "Y", "sqrtZ"], None).unwrap();
    let t = bell_flag_tester().unwrap();
    assert!(passes(&t, StrategyClass::Seq, 2));
    assert!(!passes(&t, StrategyClass::Par, 2));
    let p = success_probability(&t, &e, 2).unwrap();
    assert!((p - 1.0).abs() < 1e-12, "{p}");
    assert!((bell_flag_expected_copies(&e).unwrap() - 1.5).abs() < 1e-12);
}

#[test]
fn symmetrization_preserves_probability_and_commutes() {
    let group = group_of_eight();
    let uniform = Ensemble::uniform(group.clone()).unwrap();
    for seed in 0..10 {
        let (_, t, t_seq) = random_switch_tester(seed, 8);
        assert!(passes(&t, StrategyClass::Gen, 2));
        let sym = symmetrize_tester(&t, &group, 2).unwrap();
        assert!(passes(&sym, StrategyClass::Gen, 2));
        let before = success_probability(&t, &uniform, 2).unwrap();
        let after = success_probability(&sym, &uniform, 2).unwrap();
        assert!((before - after).abs() < 1e-10, "{before} vs {after}");
        let w = tensor::sum(&sym).unwrap();
        assert!(commutation_residual(&w, &group, 2) * w.norm() < 1e-10);

        let sym_seq = symmetrize_tester(&t_seq, &group, 2).unwrap();
        assert!(passes(&sym_seq, StrategyClass::Seq, 2));
    }
}

#[test]
fn symmetrization_fixed_point() {
    let group = group_of_eight();
    let (_, t, _) = random_switch_tester(42, 8);
    let once = symmetrize_tester(&t, &group, 2).unwrap();
    let twice = symmetrize_tester(&once, &group, 2).unwrap();
    for (a, b) in once.iter().zip(&twice) {
        assert!(a.distance(b).unwrap() < 1e-12);
    }
}

#[test]
fn symmetrization_rejects_non_group() {
    let gates = sqrt_paulis().gates().to_vec();
    let (_, t, _) = random_switch_tester(1, 4);
    assert!(matches!(symmetrize_tester(&t, &gates, 2), Err(ConstructionError::NotAGroup(_))));
}

#[test]
fn parallelized_tester_matches_symmetrized() {
    let group = group_of_eight();
    for seed in 0..3 {
        let (_, t, _) = random_switch_tester(100 + seed, 8);
        let sym = symmetrize_tester(&t, &group, 2).unwrap();
        let par = parallelize_covariant_tester(&sym, &group, 2).unwrap();
        assert!(passes(&par.tester, StrategyClass::Par, 2));
        assert!((par.state.trace().re - 1.0).abs() < 1e-9);
        assert!(par.state.min_eigenvalue() > -1e-9);
        let total = tensor::sum(&par.povm).unwrap();
        assert!((total.matrix() - linalg::identity(16)).norm() < 1e-9);
        for (i, g) in group.iter().enumerate() {
            let single = Ensemble::new(vec![g.clone()], vec![1.0]).unwrap();
            let a = success_probability(&sym[i..=i], &single, 2).unwrap();
            let b = success_probability(&par.tester[i..=i], &single, 2).unwrap();
            assert!((a - b).abs() < 1e-9, "outcome {i}: {a} vs {b}");
        }
    }
}

#[test]
fn pauli_general_optimum_parallelizes() {
    let paulis = pauli_group();
    let e = Ensemble::uniform(paulis.clone()).unwrap();
    let gen = discriminate(&e, 2, StrategyClass::Gen).unwrap();
    let sym = symmetrize_tester(&gen.tester, &paulis, 2).unwrap();
    let par = parallelize_covariant_tester(&sym, &paulis, 2).unwrap();
    assert!(passes(&par.tester, StrategyClass::Par, 2));
    for (i, g) in paulis.iter().enumerate() {
        let single = Ensemble::new(vec![g.clone()], vec![1.0]).unwrap();
        let a = success_probability(&sym[i..=i], &single, 2).unwrap();
        let b = success_probability(&par.tester[i..=i], &single, 2).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
    let value = success_probability(&par.tester, &e, 2).unwrap();
    assert!((value - gen.value).abs() < 1e-6);
}

#[test]
fn uniform_split_gives_trivial_povm() {
    let layout = tensor::canonical_layout(2, 2, 2);
    let w = LabeledOperator::identity(layout).unwrap().scale(0.25);
    let paulis = pauli_group();
    let t = vec![w.scale(0.25); 4];
    let par = parallelize_covariant_tester(&t, &paulis, 2).unwrap();
    for m in &par.povm {
        assert!((m.matrix() - linalg::identity(16) * c(0.25, 0.0)).norm() < 1e-10);
    }
    let e = Ensemble::uniform(paulis).unwrap();
    assert!((success_probability(&par.tester, &e, 2).unwrap() - 0.25).abs() < 1e-10);
}

#[test]
fn rank_deficient_process_keeps_povm_complete() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let phi = [c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)];
    let rho = LabeledOperator::projector(vec![SpaceLabel::input("I1", 2), SpaceLabel::input("I2", 2)], &phi).unwrap();
    let outs = vec![SpaceLabel::output("O1", 2), SpaceLabel::output("O2", 2)];
    let t: Vec<LabeledOperator> = random_povm(4, 4, &mut rng)
        .into_iter()
        .map(|m| rho.transpose().tensor(&LabeledOperator::new(outs.clone(), m).unwrap()).unwrap())
        .collect();
    let paulis = pauli_group();
    let par = parallelize_covariant_tester(&t, &paulis, 2).unwrap();
    let total = tensor::sum(&par.povm).unwrap();
    assert!((total.matrix() - linalg::identity(16)).norm() < 1e-9);
    assert!(passes(&par.tester, StrategyClass::Par, 2));
    for (i, g) in paulis.iter().enumerate() {
        let single = Ensemble::new(vec![g.clone()], vec![1.0]).unwrap();
        let a = success_probability(&t[i..=i], &single, 2).unwrap();
        let b = success_probability(&par.tester[i..=i], &single, 2).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn parallelization_requires_covariance() {
    let (_, t, _) = random_switch_tester(3, 8);
    assert!(matches!(
        parallelize_covariant_tester(&t, &group_of_eight(), 2),
        Err(ConstructionError::Commutation(_))
    ));
}

fn choi_projector(u: &CMat) -> CMat {
    let n = u.nrows();
    let v = CMat::from_fn(n * n, 1, |r, _| u[(r % n, r / n)]);
    &v * v.adjoint()
}

#[test]
fn plugging_unitaries_reproduces_direct_action() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let spec = SwitchLikeSpec::random(2, 2, 2, &mut rng);
        let w = build_switch_like_process(&spec).unwrap();
        let us = [haar_sample(2, &mut rng), haar_sample(2, &mut rng)];
        let out = plug_unitaries(&w, &us).unwrap();
        let direct = spec.apply(&us).unwrap();
        assert!(linalg::is_unitary(&direct, 1e-10));
        assert!((out.matrix() - choi_projector(&direct)).norm() < 1e-10);
    }
}

#[test]
fn standard_switch_of_anticommuting_pair_flips_control() {
    let spec = SwitchLikeSpec::standard_switch(2, 2);
    let x = named_gate("X").unwrap();
    let z = named_gate("Z").unwrap();
    let u = spec.apply(&[x.clone(), z.clone()]).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = CMat::from_fn(2, 1, |_, _| c(h, 0.0));
    let minus = CMat::from_fn(2, 1, |r, _| c(if r == 0 { h } else { -h }, 0.0));
    let target = CMat::from_fn(2, 1, |r, _| c(if r == 0 { 1.0 } else { 0.0 }, 0.0));
    let out = &u * plus.kronecker(&target);
    let p_minus = (minus.kronecker(&linalg::identity(2)).adjoint() * &out).norm_squared();
    assert!((p_minus - 1.0).abs() < 1e-12);
    let coherence = out.rows(2, 2).clone_owned() - (x.matrix() * z.matrix() * &target) * c(h, 0.0);
    assert!(coherence.norm() < 1e-12);

    let w = build_switch_like_process(&spec).unwrap();
    let plugged = plug_unitaries(&w, &[x, z]).unwrap();
    assert!((plugged.matrix() - choi_projector(&u)).norm() < 1e-12);
}

#[test]
fn control_zero_branch_is_sequential_circuit() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = SwitchLikeSpec::random(2, 2, 2, &mut rng);
    let us = [haar_sample(2, &mut rng), haar_sample(2, &mut rng)];
    let u = spec.apply(&us).unwrap();
    let sim = sequential_simulation_of_switch_like(&spec).unwrap();
    let from_sim = plug_unitaries(&sim, &us).unwrap();
    let p0 = |m: &CMat| m.view((0, 0), (4, 4)).clone_owned();
    let direct0 = p0(&u);
    let n = 8;
    let block = CMat::from_fn(n * n, n * n, |r, cc| from_sim.matrix()[(r, cc)]);
    let v = CMat::from_fn(16, 1, |r, _| direct0[(r % 4, r / 4)]);
    let idx = |r: usize| (r / 4) * n + (r % 4);
    let sub = CMat::from_fn(16, 16, |r, cc| block[(idx(r), idx(cc))]);
    assert!((sub - &v * v.adjoint()).norm() < 1e-10);
}

#[test]
fn sequential_simulation_matches_on_equal_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..3 {
        let spec = SwitchLikeSpec::random(2, 2, 2, &mut rng);
        let sl = build_switch_like_process(&spec).unwrap();
        let seq = sequential_simulation_of_switch_like(&spec).unwrap();
        for _ in 0..20 {
            let u = haar_sample(2, &mut rng);
            let a = plug_unitaries(&sl, &[u.clone(), u.clone()]).unwrap();
            let b = plug_unitaries(&seq, &[u.clone(), u]).unwrap();
            assert!(a.distance(&b).unwrap() < 1e-10);
        }
    }
    let spec = SwitchLikeSpec::standard_switch(2, 2);
    let sl = build_switch_like_process(&spec).unwrap();
    let seq = sequential_simulation_of_switch_like(&spec).unwrap();
    let us = [named_gate("X").unwrap(), named_gate("H").unwrap()];
    let a = plug_unitaries(&sl, &us).unwrap();
    let b = plug_unitaries(&seq, &us).unwrap();
    assert!(a.distance(&b).unwrap() > 1e-3);
}

#[test]
fn switch_testers_are_general_but_not_sequential() {
    for seed in 0..3 {
        let (_, t_sl, t_seq) = random_switch_tester(500 + seed, 4);
        assert!(passes(&t_sl, StrategyClass::Gen, 2));
        assert!(max_residual(&t_sl, StrategyClass::Seq, 2) > 1e-6);
        assert!(passes(&t_seq, StrategyClass::Seq, 2));
        let e = sqrt_paulis();
        let a = success_probability(&t_sl, &e, 2).unwrap();
        let b = success_probability(&t_seq, &e, 2).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

fn swap_slots(t: &LabeledOperator) -> LabeledOperator {
    t.relabel(&[
        ("I1", SpaceLabel::input("I2", 2)),
        ("I2", SpaceLabel::input("I1", 2)),
        ("O1", SpaceLabel::output("O2", 2)),
        ("O2", SpaceLabel::output("O1", 2)),
    ])
    .unwrap()
}

#[test]
fn quantum_switch_with_plus_control_fails_both_orders() {
    let spec = SwitchLikeSpec::standard_switch(2, 2);
    let w = build_switch_like_process(&spec).unwrap();
    let rho = CMat::from_element(2, 2, c(0.5, 0.0)).kronecker(&(linalg::identity(2) * c(0.5, 0.0)));
    let t = switch_tester(&spec, &w, &rho, &[linalg::identity(4)]).unwrap();
    assert!(passes(&t, StrategyClass::Gen, 2));
    assert!(max_residual(&t, StrategyClass::Seq, 2) > 1e-6);
    let swapped: Vec<LabeledOperator> = t.iter().map(swap_slots).collect();
    assert!(max_residual(&swapped, StrategyClass::Seq, 2) > 1e-6);
}
