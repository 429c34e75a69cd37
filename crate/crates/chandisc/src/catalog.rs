//! Named example ensembles and their scripted checks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::certificates::{gamma, ConditionReport};
use crate::channels::{clifford_group, haar_sample, is_k_design, pauli_group, ChannelError, Ensemble};
use crate::constructions::{
    bell_flag_expected_copies, bell_flag_tester, build_switch_like_process, plug_unitaries, random_povm, random_state,
    sequential_simulation_of_switch_like, switch_tester, ConstructionError, SwitchLikeSpec,
};
use crate::io::pi_digit_probs;
use crate::sdp::{assemble_primal, solve_with, success_probability, SdpError, SolverOptions};
use crate::strategies::StrategyClass;

pub const EXAMPLES: [&str; 7] = ["k2N4", "k2N4-avg1.5", "k2N8-pi", "k3N4", "pauli-k1", "clifford-design", "switch-sim"];

/// Half-width added to each rational interval endpoint.
pub const INTERVAL_MARGIN: f64 = 5e-5;

#[derive(Debug, Error)]
pub enum ExampleError {
    #[error("unknown example {0:?}; expected one of {EXAMPLES:?}")]
    Unknown(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error("{0}")]
    Other(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct ExampleReport {
    pub name: String,
    pub copies: usize,
    pub values: Vec<(String, f64)>,
    pub checks: Vec<ConditionReport>,
}

impl ExampleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn value(&mut self, name: impl Into<String>, v: f64) {
        self.values.push((name.into(), v));
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(ConditionReport { name: name.into(), passed, detail: detail.into() });
    }
}

fn named(names: &[&str], probs: Option<Vec<f64>>) -> Result<Ensemble, ChannelError> {
    Ensemble::from_names(names, probs)
}

/// Ensemble and copy count of a named example; `switch-sim` has none.
pub fn example_ensemble(name: &str) -> Result<Option<(Ensemble, usize)>, ExampleError> {
    Ok(Some(match name {
        "k2N4" => (named(&["I", "sqrtX", "sqrtY", "sqrtZ"], None)?, 2),
        "k2N4-avg1.5" => (named(&["I", "X", "Y", "sqrtZ"], None)?, 2),
        "k2N8-pi" => {
            let probs = pi_digit_probs(8).map_err(|e| ExampleError::Other(e.to_string()))?;
            (named(&["I", "X", "Y", "Z", "H", "XH", "YH", "ZH"], Some(probs))?, 2)
        }
        "k3N4" => (named(&["sqrtX", "sqrtZ", "sqrtHy", "sqrtHp"], None)?, 3),
        "pauli-k1" => (Ensemble::uniform(pauli_group())?.with_names(vec!["I".into(), "X".into(), "Y".into(), "Z".into()]), 1),
        "clifford-design" => (Ensemble::uniform(clifford_group(2)?)?, 2),
        "switch-sim" => return Ok(None),
        other => return Err(ExampleError::Unknown(other.to_string())),
    }))
}

#[derive(Clone, Debug)]
pub struct ExampleOptions {
    pub solver: SolverOptions,
    pub seed: u64,
}

impl Default for ExampleOptions {
    fn default() -> Self {
        ExampleOptions { solver: SolverOptions::default(), seed: 7 }
    }
}

fn solve_value(e: &Ensemble, k: usize, s: StrategyClass, opts: &ExampleOptions) -> Result<f64, ExampleError> {
    Ok(solve_with(&assemble_primal(e, k, s)?, &opts.solver)?.value)
}

fn frac(num: u32, den: u32) -> f64 {
    f64::from(num) / f64::from(den)
}

/// `lo − m < v < hi + m` with `m` = [`INTERVAL_MARGIN`].
fn within(report: &mut ExampleReport, label: &str, v: f64, lo: (u32, u32), hi: (u32, u32)) {
    let (a, b) = (frac(lo.0, lo.1), frac(hi.0, hi.1));
    report.check(
        format!("{label} in ({}/{}, {}/{})", lo.0, lo.1, hi.0, hi.1),
        a - INTERVAL_MARGIN < v && v < b + INTERVAL_MARGIN,
        format!("{v:.6}"),
    );
}

pub fn run_example(name: &str, opts: &ExampleOptions) -> Result<ExampleReport, ExampleError> {
    let found = example_ensemble(name)?;
    let copies = found.as_ref().map_or(2, |(_, k)| *k);
    let mut r = ExampleReport { name: name.to_string(), copies, values: Vec::new(), checks: Vec::new() };
    match (name, found) {
        ("k2N4", Some((e, k))) => {
            let par = solve_value(&e, k, StrategyClass::Par, opts)?;
            let seq = solve_value(&e, k, StrategyClass::Seq, opts)?;
            r.value("par", par);
            r.value("seq", seq);
            r.check("seq = 1", seq >= 1.0 - 1e-6, format!("{seq:.6}"));
            r.check("par <= 9571/10000", par <= frac(9571, 10000) + INTERVAL_MARGIN, format!("{par:.6}"));
            r.check("par < 1", par < 1.0 - 1e-3, format!("{par:.6}"));
        }
        ("k2N4-avg1.5", Some((e, k))) => {
            let tester = bell_flag_tester()?;
            let p = success_probability(&tester, &e, k)?;
            let copies = bell_flag_expected_copies(&e)?;
            let par = solve_value(&e, k, StrategyClass::Par, opts)?;
            r.value("adaptive", p);
            r.value("expected_copies", copies);
            r.value("par", par);
            r.check("adaptive tester is perfect", (p - 1.0).abs() < 1e-12, format!("{p:.12}"));
            r.check("expected copies = 1.5", (copies - 1.5).abs() < 1e-12, format!("{copies:.6}"));
            r.check("par <= 9741/10000", par <= frac(9741, 10000) + INTERVAL_MARGIN, format!("{par:.6}"));
        }
        ("k2N8-pi", Some((e, k))) => {
            let par = solve_value(&e, k, StrategyClass::Par, opts)?;
            let seq = solve_value(&e, k, StrategyClass::Seq, opts)?;
            r.value("par", par);
            r.value("seq", seq);
            within(&mut r, "par", par, (8196, 10000), (8197, 10000));
            within(&mut r, "seq", seq, (8197, 10000), (8198, 10000));
            r.check("seq - par > 5e-5", seq - par > INTERVAL_MARGIN, format!("{:.6}", seq - par));
        }
        ("k3N4", Some((e, k))) => {
            let bounds = [
                (StrategyClass::Par, (9570, 10000), (9571, 10000)),
                (StrategyClass::Seq, (9876, 10000), (9877, 10000)),
                (StrategyClass::Gen, (9881, 10000), (9882, 10000)),
            ];
            for (s, lo, hi) in bounds {
                let v = solve_value(&e, k, s, opts)?;
                r.value(s.as_str(), v);
                within(&mut r, s.as_str(), v, lo, hi);
            }
        }
        ("pauli-k1", Some((e, k))) => {
            let par = solve_value(&e, k, StrategyClass::Par, opts)?;
            r.value("par", par);
            r.check("par = 1", (par - 1.0).abs() < 1e-6, format!("{par:.6}"));
        }
        ("clifford-design", Some((e, k))) => {
            let design = is_k_design(e.gates(), k, 1e-9)?;
            let g = gamma(2, k as u64).map_err(|err| ExampleError::Other(err.to_string()))?;
            let par = solve_value(&e, k, StrategyClass::Par, opts)?;
            let target = 10.0 / e.len() as f64;
            r.value("par", par);
            r.value("gamma", 10.0);
            r.check("group 2-design", design, format!("N = {}", e.len()));
            r.check("gamma(2,2) = 10", g == 10u32.into(), g.to_string());
            r.check("par = gamma/N", (par - target).abs() < 1e-6, format!("{par:.6} vs {target:.6}"));
        }
        ("switch-sim", None) => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let spec = SwitchLikeSpec::random(2, 2, 2, &mut rng);
            let sl = build_switch_like_process(&spec)?;
            let seq = sequential_simulation_of_switch_like(&spec)?;
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let u = haar_sample(2, &mut rng);
                let a = plug_unitaries(&sl, &[u.clone(), u.clone()])?;
                let b = plug_unitaries(&seq, &[u.clone(), u])?;
                worst = worst.max(a.distance(&b).map_err(ConstructionError::from)?);
            }
            let (e, k) = example_ensemble("k2N4")?.expect("k2N4 has an ensemble");
            let rho = random_state(8, &mut rng);
            let povm = random_povm(8, e.len(), &mut rng);
            let p_sl = success_probability(&switch_tester(&spec, &sl, &rho, &povm)?, &e, k)?;
            let p_seq = success_probability(&switch_tester(&spec, &seq, &rho, &povm)?, &e, k)?;
            r.value("max_deviation", worst);
            r.value("switch_like", p_sl);
            r.value("sequential", p_seq);
            r.check("output Choi deviation < 1e-10", worst < 1e-10, format!("{worst:.3e}"));
            r.check("equal success probability", (p_sl - p_seq).abs() < 1e-9, format!("{:.3e}", (p_sl - p_seq).abs()));
        }
        _ => return Err(ExampleError::Unknown(name.to_string())),
    }
    Ok(r)
}
