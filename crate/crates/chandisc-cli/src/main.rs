use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chandisc::catalog::{example_ensemble, run_example, ExampleOptions, EXAMPLES};
use chandisc::certificates::{round_to_certificate, verify_certificate, Certificate, RoundingOptions};
use chandisc::channels::Ensemble;
use chandisc::io::{read_ensemble, ProbSpec};
use chandisc::sdp::{assemble_primal, solve_with, SolveStatus, SolverOptions};
use chandisc::strategies::StrategyClass;
use chandisc::sweep::{haar_sweep, SweepConfig, SweepReport};
use chandisc::tensor::LabeledOperator;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

const MALFORMED: u8 = 2;
const SOLVER_FAILURE: u8 = 3;
const DISPROOF: u8 = 4;

#[derive(Parser)]
#[command(name = "chandisc", version, about = "Discrimination of unitary channel ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal success probability for each strategy class.
    Discriminate(DiscriminateArgs),
    /// Haar-random ensemble sweep written as CSV.
    Sweep(SweepArgs),
    /// Verify a rational certificate, or derive one from a solve with --write.
    Certify(CertifyArgs),
    /// Run a named example and check it against its published intervals.
    Example(ExampleArgs),
}

#[derive(Args)]
struct Source {
    /// Ensemble JSON file.
    #[arg(long, conflicts_with = "example")]
    ensemble: Option<PathBuf>,
    /// Named example ensemble.
    #[arg(long)]
    example: Option<String>,
    /// uniform, pi-digits, or a JSON file with a probability list.
    #[arg(long)]
    probs: Option<String>,
    /// Number of copies; defaults to the example's own count or 2.
    #[arg(long)]
    copies: Option<usize>,
}

#[derive(Args)]
struct DiscriminateArgs {
    #[command(flatten)]
    source: Source,
    /// Comma separated list of par, seq, gen.
    #[arg(long, default_value = "par,seq,gen")]
    strategy: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// JSON result file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include the optimal tester matrices in the JSON result.
    #[arg(long)]
    tester: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    copies: usize,
    #[arg(long = "num-unitaries", default_value_t = 4)]
    num_unitaries: usize,
    #[arg(long, default_value_t = 30)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "par,seq,gen")]
    strategy: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write 0 in the millis column so that reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct CertifyArgs {
    /// Certificate to verify.
    certificate: Option<PathBuf>,
    #[command(flatten)]
    source: Source,
    /// Strategy of the certificate to derive.
    #[arg(long)]
    strategy: Option<String>,
    /// Derive a certificate from a fresh solve and write it here.
    #[arg(long)]
    write: Option<PathBuf>,
    /// Denominator for the rounded witness.
    #[arg(long, default_value_t = 1_000_000)]
    denominator: u64,
    /// Print the proof report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExampleArgs {
    /// One of k2N4, k2N4-avg1.5, k2N8-pi, k3N4, pauli-k1, clifford-design, switch-sim.
    name: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

struct Failure {
    code: u8,
    message: String,
}

fn malformed(message: impl ToString) -> Failure {
    Failure { code: MALFORMED, message: message.to_string() }
}

fn parse_strategies(list: &str) -> Result<Vec<StrategyClass>, Failure> {
    let out: Vec<StrategyClass> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<StrategyClass>().map_err(malformed))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(malformed("empty strategy list"));
    }
    Ok(out)
}

fn load(source: &Source) -> Result<(Ensemble, usize), Failure> {
    let probs = source.probs.as_deref().map(ProbSpec::parse_arg).transpose().map_err(malformed)?;
    let (ensemble, default_k) = match (&source.ensemble, &source.example) {
        (Some(path), None) => (read_ensemble(path, probs.as_ref()).map_err(malformed)?, 2),
        (None, Some(name)) => {
            let (e, k) = example_ensemble(name)
                .map_err(malformed)?
                .ok_or_else(|| malformed(format!("example {name:?} has no ensemble")))?;
            let e = match probs {
                Some(p) => {
                    let w = p.resolve(e.len()).map_err(malformed)?;
                    let names = e.names().map(<[String]>::to_vec);
                    let fresh = Ensemble::new(e.gates().to_vec(), w).map_err(malformed)?;
                    match names {
                        Some(n) => fresh.with_names(n),
                        None => fresh,
                    }
                }
                None => e,
            };
            (e, k)
        }
        _ => return Err(malformed("exactly one of --ensemble or --example is required")),
    };
    let k = source.copies.unwrap_or(default_k);
    if k == 0 {
        return Err(malformed("--copies must be at least 1"));
    }
    Ok((ensemble, k))
}

fn status_str(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Solved => "solved",
        SolveStatus::Inaccurate => "inaccurate",
    }
}

fn operator_json(op: &LabeledOperator) -> Value {
    let m = op.matrix();
    let part = |f: fn(&chandisc::linalg::C64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
    };
    json!({ "layout": op.names(), "re": part(|z| z.re), "im": part(|z| z.im) })
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure { code: 1, message: format!("cannot write {}: {e}", path.display()) })
}

fn discriminate(args: &DiscriminateArgs) -> Result<(), Failure> {
    let (ensemble, k) = load(&args.source)?;
    let strategies = parse_strategies(&args.strategy)?;
    let opts = SolverOptions { tol: args.tol, ..SolverOptions::default() };
    let mut results = Vec::new();
    let mut failed = None;
    for s in strategies {
        let outcome = assemble_primal(&ensemble, k, s).and_then(|p| solve_with(&p, &opts));
        match outcome {
            Ok(r) => {
                println!("{:<4} {:.6}  gap {:.2e}  {}", s, r.value, r.primal_dual_gap, status_str(r.status));
                let mut entry = json!({
                    "strategy": s,
                    "value": r.value,
                    "primal": r.primal_value,
                    "dual": r.dual_value,
                    "gap": r.primal_dual_gap,
                    "status": status_str(r.status),
                    "iterations": r.iterations,
                });
                if args.tester {
                    entry["tester"] = Value::Array(r.tester.iter().map(operator_json).collect());
                }
                results.push(entry);
            }
            Err(e) => {
                println!("{s:<4} failed: {e}");
                results.push(json!({ "strategy": s, "status": "failed", "error": e.to_string() }));
                failed.get_or_insert(Failure { code: SOLVER_FAILURE, message: format!("{s}: {e}") });
            }
        }
    }
    if let Some(path) = &args.out {
        let doc = json!({
            "copies": k,
            "dim": ensemble.dim(),
            "names": ensemble.names(),
            "probs": ensemble.probs(),
            "results": results,
        });
        write_text(path, &serde_json::to_string_pretty(&doc).map_err(malformed)?)?;
    }
    failed.map_or(Ok(()), Err)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.6}"))
}

fn write_sweep<W: Write>(out: W, report: &SweepReport, no_timing: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample", "seed", "N", "k", "strategy", "value", "gap", "status", "millis"])?;
    for r in &report.rows {
        let millis = if no_timing { 0 } else { r.millis };
        w.write_record([
            r.sample.to_string(),
            r.seed.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.strategy.to_string(),
            format!("{:.6}", r.value),
            format!("{:.2e}", r.gap),
            r.status.clone(),
            millis.to_string(),
        ])?;
    }
    let (n, k) = report.rows.first().map_or((0, 0), |r| (r.n, r.k));
    for s in &report.summary.per_strategy {
        let row = |label: &str, v: f64| {
            [label.to_string(), String::new(), n.to_string(), k.to_string(), s.strategy.to_string(), format!("{v:.6}")]
        };
        let pad = [String::new(), String::new(), String::new()];
        w.write_record(row("mean", s.mean).iter().chain(&pad))?;
        w.write_record(row("n_times_mean", s.n_times_mean).iter().chain(&pad))?;
    }
    let ratios = [("par/seq", report.summary.par_over_seq), ("seq/gen", report.summary.seq_over_gen)];
    for (label, v) in ratios {
        if v.is_some() {
            w.write_record(["ratio", "", &n.to_string(), &k.to_string(), label, &fmt_opt(v), "", "", ""])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let cfg = SweepConfig {
        dim: args.dim,
        copies: args.copies,
        num_unitaries: args.num_unitaries,
        samples: args.samples,
        seed: args.seed,
        strategies: parse_strategies(&args.strategy)?,
        tol: args.tol,
        ..SweepConfig::default()
    };
    let report = haar_sweep(&cfg).map_err(malformed)?;
    let written = match &args.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| Failure { code: 1, message: format!("cannot write {}: {e}", path.display()) })?;
            write_sweep(f, &report, args.no_timing)
        }
        None => write_sweep(io::stdout().lock(), &report, args.no_timing),
    };
    written.map_err(|e| Failure { code: 1, message: e.to_string() })?;
    for s in &report.summary.per_strategy {
        eprintln!("{:<4} mean {:.6}  N*mean {:.6}  (gamma {})", s.strategy, s.mean, s.n_times_mean, report.summary.gamma);
    }
    if report.summary.failures > 0 {
        return Err(Failure { code: SOLVER_FAILURE, message: format!("{} solves failed", report.summary.failures) });
    }
    Ok(())
}

fn certify(args: &CertifyArgs) -> Result<(), Failure> {
    let cert = match (&args.certificate, &args.write) {
        (Some(path), None) => Certificate::read(path).map_err(malformed)?,
        (None, Some(path)) => {
            let (ensemble, k) = load(&args.source)?;
            let s: StrategyClass = args
                .strategy
                .as_deref()
                .ok_or_else(|| malformed("--strategy is required with --write"))?
                .parse()
                .map_err(malformed)?;
            let result = assemble_primal(&ensemble, k, s)
                .and_then(|p| solve_with(&p, &SolverOptions::default()))
                .map_err(|e| Failure { code: SOLVER_FAILURE, message: e.to_string() })?;
            let opts = RoundingOptions { denominator: args.denominator, ..RoundingOptions::default() };
            let cert = round_to_certificate(&result.dual_witness, &ensemble, s, k, &opts)
                .map_err(|e| Failure { code: SOLVER_FAILURE, message: e.to_string() })?;
            cert.write(path).map_err(|e| Failure { code: 1, message: e.to_string() })?;
            println!("wrote {} (solver value {:.6})", path.display(), result.value);
            cert
        }
        _ => return Err(malformed("give a certificate path to verify, or --write PATH to derive one")),
    };
    let report = verify_certificate(&cert).map_err(malformed)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(malformed)?);
    } else {
        for c in &report.conditions {
            println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        }
    }
    match &report.proven_bound {
        Some(b) => {
            println!("proven: P^{} <= {b} with {} copies", cert.strategy.as_str().to_uppercase(), cert.copies);
            Ok(())
        }
        None => {
            let names: Vec<String> = report.failures().iter().map(|c| c.name.clone()).collect();
            Err(Failure { code: DISPROOF, message: format!("certificate rejected: {}", names.join("; ")) })
        }
    }
}

fn example(args: &ExampleArgs) -> Result<(), Failure> {
    if !EXAMPLES.contains(&args.name.as_str()) {
        return Err(malformed(format!("unknown example {:?}; expected one of {}", args.name, EXAMPLES.join(", "))));
    }
    let opts = ExampleOptions { solver: SolverOptions { tol: args.tol, ..SolverOptions::default() }, seed: args.seed };
    let report = run_example(&args.name, &opts).map_err(|e| Failure { code: SOLVER_FAILURE, message: e.to_string() })?;
    println!("{} (k = {})", report.name, report.copies);
    for (name, v) in &report.values {
        if v.abs() < 1e-4 && *v != 0.0 {
            println!("  {name} = {v:.3e}");
        } else {
            println!("  {name} = {v:.6}");
        }
    }
    for c in &report.checks {
        println!("  {} {} ({})", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure { code: 1, message: "some checks failed".into() })
    }
}

fn configure_workers() {
    if let Some(n) = std::env::var("CT_WORKERS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|n| *n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { MALFORMED } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_workers();
    let outcome = match &cli.command {
        Command::Discriminate(a) => discriminate(a),
        Command::Sweep(a) => sweep(a),
        Command::Certify(a) => certify(a),
        Command::Example(a) => example(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
