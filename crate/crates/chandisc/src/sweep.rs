//! Haar-random ensemble sweeps.

use std::time::Instant;

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::certificates::gamma;
use crate::channels::{haar_sample, Ensemble};
use crate::exec::Execution;
use crate::sdp::{assemble_primal, solve_with, SdpError, SolveStatus, SolverOptions};
use crate::strategies::StrategyClass;

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub dim: usize,
    pub copies: usize,
    pub num_unitaries: usize,
    pub samples: usize,
    pub seed: u64,
    pub strategies: Vec<StrategyClass>,
    pub tol: f64,
    pub exec: Execution,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            dim: 2,
            copies: 2,
            num_unitaries: 4,
            samples: 30,
            seed: 0,
            strategies: StrategyClass::ALL.to_vec(),
            tol: SolverOptions::default().tol,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub sample: usize,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub strategy: StrategyClass,
    pub value: f64,
    pub gap: f64,
    pub status: String,
    pub millis: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct StrategySummary {
    pub strategy: StrategyClass,
    pub mean: f64,
    pub n_times_mean: f64,
    pub solved: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub per_strategy: Vec<StrategySummary>,
    pub par_over_seq: Option<f64>,
    pub seq_over_gen: Option<f64>,
    pub gamma: f64,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

/// `N` Haar-random unitaries drawn from a ChaCha8 stream seeded with `seed`, uniform probabilities.
pub fn haar_ensemble(dim: usize, n: usize, seed: u64) -> Ensemble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gates = (0..n).map(|_| haar_sample(dim, &mut rng)).collect();
    Ensemble::uniform(gates).expect("Haar samples form a valid ensemble")
}

fn run_sample(cfg: &SweepConfig, sample: usize, inner: Execution) -> Vec<SweepRow> {
    let seed = cfg.seed.wrapping_add(sample as u64);
    let ensemble = haar_ensemble(cfg.dim, cfg.num_unitaries, seed);
    let opts = SolverOptions { tol: cfg.tol, exec: inner, ..SolverOptions::default() };
    cfg.strategies
        .iter()
        .map(|&strategy| {
            let start = Instant::now();
            let outcome = assemble_primal(&ensemble, cfg.copies, strategy).and_then(|p| solve_with(&p, &opts));
            let millis = start.elapsed().as_millis();
            let (value, gap, status) = match outcome {
                Ok(r) => (
                    r.value,
                    r.primal_dual_gap,
                    match r.status {
                        SolveStatus::Solved => "solved",
                        SolveStatus::Inaccurate => "inaccurate",
                    }
                    .to_string(),
                ),
                Err(SdpError::Failed { gap, .. }) => (f64::NAN, gap, "failed".to_string()),
                Err(_) => (f64::NAN, f64::NAN, "failed".to_string()),
            };
            SweepRow { sample, seed, n: cfg.num_unitaries, k: cfg.copies, strategy, value, gap, status, millis }
        })
        .collect()
}

/// Solves every requested strategy on `samples` Haar ensembles; rows are ordered by sample index.
pub fn haar_sweep(cfg: &SweepConfig) -> Result<SweepReport, SdpError> {
    if cfg.strategies.is_empty() {
        return Err(SdpError::Invalid("no strategies requested".into()));
    }
    if cfg.dim < 2 || cfg.copies == 0 || cfg.num_unitaries == 0 {
        return Err(SdpError::Invalid("sweep needs dim ≥ 2, copies ≥ 1 and at least one unitary".into()));
    }
    let side = cfg.dim.pow(2 * cfg.copies as u32);
    if side > crate::sdp::MAX_BLOCK_SIDE {
        return Err(SdpError::TooLarge(side));
    }
    let inner = if cfg.exec.is_parallel() { Execution::Sequential } else { cfg.exec };
    let rows: Vec<SweepRow> = cfg.exec.map_range(cfg.samples, |i| run_sample(cfg, i, inner)).into_iter().flatten().collect();
    let summary = summarize(cfg, &rows);
    Ok(SweepReport { rows, summary })
}

fn summarize(cfg: &SweepConfig, rows: &[SweepRow]) -> SweepSummary {
    let per_strategy: Vec<StrategySummary> = cfg
        .strategies
        .iter()
        .map(|&s| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.strategy == s && r.value.is_finite()).map(|r| r.value).collect();
            let mean = if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 };
            StrategySummary { strategy: s, mean, n_times_mean: mean * cfg.num_unitaries as f64, solved: vals.len() }
        })
        .collect();
    let mean_of = |s: StrategyClass| per_strategy.iter().find(|p| p.strategy == s).map(|p| p.mean);
    let ratio = |a, b| match (mean_of(a), mean_of(b)) {
        (Some(x), Some(y)) => Some(x / y),
        _ => None,
    };
    let gamma = gamma(cfg.dim as u64, cfg.copies as u64)
        .ok()
        .and_then(|g| g.to_f64())
        .unwrap_or(f64::NAN);
    SweepSummary {
        par_over_seq: ratio(StrategyClass::Par, StrategyClass::Seq),
        seq_over_gen: ratio(StrategyClass::Seq, StrategyClass::Gen),
        per_strategy,
        gamma,
        failures: rows.iter().filter(|r| r.status == "failed").count(),
    }
}
