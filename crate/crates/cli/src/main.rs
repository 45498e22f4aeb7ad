//! `hwproj`: build, run, verify, count and emit Hamming-weight measurement
//! circuits.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error, 3 I/O error.

mod states;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use hwproj::hamming::{build_variant, derive_params, Variant};
use hwproj::oracle::{circuit_report, exact_hamming_distribution, verify_variant};
use hwproj::scheduler::{measure_resources, SPolicy};
use hwproj::{hwc, BuiltCircuit, StateVector};

use states::{parse_amplitudes, NamedState};

const DEFAULT_MAX_QUBITS: usize = 24;
const MAX_BUILD_N: usize = 64;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "hwproj", version, about = "Hamming-weight measurement circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one circuit on one input and report the outcome distribution.
    Run(RunArgs),
    /// Check every variant against the exact projective measurement.
    Verify(VerifyArgs),
    /// Tabulate depth and qubit counts over a range of n.
    Resources(ResourcesArgs),
    /// Write a circuit in `.hwc` text form.
    Emit(EmitArgs),
    /// Sampled and exact distributions for the benchmark states.
    Figures(FiguresArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Shots,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct CircuitArgs {
    /// Number of input qubits.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value = "alg2")]
    variant: Variant,
    /// Control block width for the tradeoff and resets variants.
    #[arg(long, default_value_t = 1)]
    s: usize,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    circuit: CircuitArgs,
    /// Named input state.
    #[arg(long, default_value = "zeros", conflicts_with = "state_file")]
    state: NamedState,
    /// Amplitude file, one `re [im]` per line.
    #[arg(long)]
    state_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the circuit as `.hwc` text to this path.
    #[arg(long)]
    emit: Option<PathBuf>,
    /// Include post-measurement data states in exact mode.
    #[arg(long)]
    dump_states: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest n; every n from 1 up is checked.
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Random inputs per configuration.
    #[arg(long, default_value_t = 25)]
    seeds: u64,
    /// Base seed for the random inputs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Restrict to one variant.
    #[arg(long)]
    variant: Option<Variant>,
    /// Add this offset to the first controlled-rotation angle.
    #[arg(long, allow_negative_numbers = true)]
    corrupt_angle: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ResourcesArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16, 32, 64])]
    n: Vec<usize>,
    /// Block width policy: 1, n, n/<d> or a fixed integer.
    #[arg(long, default_value = "n")]
    s: SPolicy,
    #[arg(long, default_value = "resets")]
    variant: Variant,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EmitArgs {
    #[command(flatten)]
    circuit: CircuitArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FiguresArgs {
    /// Largest n; every n from 1 up is included.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Resources(a) => cmd_resources(a),
        Command::Emit(a) => cmd_emit(a),
        Command::Figures(a) => cmd_figures(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hwproj: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn max_qubits() -> Result<usize> {
    match std::env::var("HWPROJ_MAX_QUBITS") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("HWPROJ_MAX_QUBITS=`{v}` is not a qubit count"))),
        Err(_) => Ok(DEFAULT_MAX_QUBITS),
    }
}

fn build(variant: Variant, n: usize, s: usize) -> Result<BuiltCircuit> {
    if n > MAX_BUILD_N {
        return Err(CliError::Usage(format!("n={n} exceeds the builder limit of {MAX_BUILD_N}")));
    }
    let params = derive_params(n, s).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(build_variant(variant, &params))
}

fn check_cap(built: &BuiltCircuit, cap: usize) -> Result<()> {
    let m = built.circuit.num_qubits;
    if m > cap {
        return Err(CliError::Usage(format!(
            "{} with n={} s={} needs {m} qubits, above the simulation cap of {cap} (set HWPROJ_MAX_QUBITS to raise it)",
            built.variant, built.params.n, built.params.s
        )));
    }
    Ok(())
}

fn sim_err(e: hwproj::sim::SimError) -> CliError {
    CliError::Validation(format!("simulation failed: {e}"))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source }),
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text.into_bytes()
}

fn to_csv<R: Serialize>(rows: &[R]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("row serializes");
    }
    w.into_inner().expect("in-memory writer")
}

/// Input state and the register size it implies.
fn resolve_state(args: &RunArgs, cap: usize) -> Result<(StateVector, usize)> {
    if let Some(path) = &args.state_file {
        let st = parse_amplitudes(&read_file(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let n = st.num_qubits();
        if args.circuit.n.is_some_and(|m| m != n) {
            return Err(CliError::Usage(format!("{} holds {n} qubits but --n is {}", path.display(), args.circuit.n.unwrap())));
        }
        return Ok((st, n));
    }
    let n = args.circuit.n.or(args.state.fixed_size()).unwrap_or(3);
    if n > cap {
        return Err(CliError::Usage(format!("n={n} is above the simulation cap of {cap} qubits (set HWPROJ_MAX_QUBITS to raise it)")));
    }
    let st = args.state.build(n, args.seed).map_err(CliError::Usage)?;
    Ok((st, n))
}

#[derive(Serialize)]
struct RunReport {
    n: usize,
    variant: Variant,
    s: usize,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    probs: Option<BTreeMap<usize, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counts: Option<BTreeMap<usize, usize>>,
    oracle_probs: BTreeMap<usize, f64>,
    max_abs_dev: f64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    post_states: Option<BTreeMap<usize, Vec<[f64; 2]>>>,
}

fn max_gap(a: &BTreeMap<usize, f64>, b: &BTreeMap<usize, f64>) -> f64 {
    a.keys()
        .chain(b.keys())
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let cap = max_qubits()?;
    let (data, n) = resolve_state(&args, cap)?;
    let built = build(args.circuit.variant, n, args.circuit.s)?;
    check_cap(&built, cap)?;
    if let Some(path) = &args.emit {
        write_output(Some(path), hwc::emit(&built.circuit).as_bytes())?;
    }
    let oracle = exact_hamming_distribution(&data);
    let mut report = RunReport {
        n,
        variant: built.variant,
        s: built.params.s,
        mode: "exact",
        probs: None,
        counts: None,
        oracle_probs: oracle.probs.clone(),
        max_abs_dev: 0.0,
        seed: args.seed,
        post_states: None,
    };
    let column: BTreeMap<usize, f64> = match args.mode {
        Mode::Exact => {
            let r = circuit_report(&built, &data).map_err(sim_err)?;
            if args.dump_states {
                report.post_states = Some(
                    r.post_states
                        .iter()
                        .map(|(&a, st)| (a, st.amps().iter().map(|z| [z.re, z.im]).collect()))
                        .collect(),
                );
            }
            report.probs = Some(r.probs.clone());
            r.probs
        }
        Mode::Shots => {
            let shots = args.shots as usize;
            let counts = built.sample_counts(&data, shots, args.seed).map_err(sim_err)?;
            report.mode = "shots";
            let freqs = counts.iter().map(|(&a, &c)| (a, c as f64 / shots as f64)).collect();
            report.counts = Some(counts);
            freqs
        }
    };
    report.max_abs_dev = max_gap(&column, &oracle.probs);
    let bytes = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => {
            let values: BTreeMap<usize, f64> = match &report.counts {
                Some(c) => c.iter().map(|(&a, &v)| (a, v as f64)).collect(),
                None => column,
            };
            let value_name = if report.counts.is_some() { "count" } else { "prob" };
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["outcome", value_name, "oracle_prob"]).expect("in-memory writer");
            for a in (0..built.params.outcomes()).filter(|a| values.contains_key(a) || oracle.probs.contains_key(a)) {
                let value = values.get(&a).copied().unwrap_or(0.0);
                w.write_record([a.to_string(), value.to_string(), oracle.prob(a).to_string()]).expect("in-memory writer");
            }
            w.into_inner().expect("in-memory writer")
        }
    };
    write_output(args.output.out.as_deref(), &bytes)
}

#[derive(Clone, Debug)]
struct VerifyCase {
    n: usize,
    variant: Variant,
    s: usize,
    state: NamedState,
}

#[derive(Serialize)]
struct VerifyRow {
    n: usize,
    variant: Variant,
    s: usize,
    state: String,
    passed: bool,
    max_prob_dev: f64,
    max_infidelity: f64,
    stray_prob: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    passed: bool,
    total: usize,
    failures: usize,
    tol: f64,
    corrupt_angle: Option<f64>,
    cases: Vec<VerifyRow>,
}

fn widths(variant: Variant, n: usize) -> Vec<usize> {
    match variant {
        Variant::Alg1 | Variant::Alg2 => vec![1],
        Variant::Tradeoff | Variant::Resets => {
            let mut w = vec![1, 2.min(n), n];
            w.dedup();
            w
        }
    }
}

fn verify_cases(args: &VerifyArgs) -> Vec<VerifyCase> {
    let variants: Vec<Variant> = match args.variant {
        Some(v) => vec![v],
        None => Variant::ALL.to_vec(),
    };
    let mut cases = Vec::new();
    for n in 1..=args.n {
        let mut inputs = vec![
            NamedState::Zeros,
            NamedState::Ones,
            NamedState::Ghz,
            NamedState::W,
            NamedState::BellPairProduct,
            NamedState::RyProduct(0.7),
        ];
        if n == 3 {
            inputs.push(NamedState::Intro3);
        }
        inputs.extend((0..args.seeds).map(|i| NamedState::Random(Some(args.seed + i))));
        for &variant in &variants {
            for s in widths(variant, n) {
                for state in &inputs {
                    cases.push(VerifyCase { n, variant, s, state: state.clone() });
                }
            }
        }
    }
    cases
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if args.tol.is_nan() || args.tol < 0.0 {
        return Err(CliError::Usage("--tol must be non-negative".into()));
    }
    let cap = max_qubits()?;
    let cases = verify_cases(&args);
    for c in &cases {
        check_cap(&build(c.variant, c.n, c.s)?, cap)?;
    }
    let rows: Vec<VerifyRow> = cases
        .par_iter()
        .map(|c| -> Result<VerifyRow> {
            let mut built = build(c.variant, c.n, c.s)?;
            if let Some(delta) = args.corrupt_angle {
                built.perturb_first_beta(delta);
            }
            let data = c.state.build(c.n, 0).map_err(CliError::Usage)?;
            let v = verify_variant(&built, &data, args.tol).map_err(sim_err)?;
            Ok(VerifyRow {
                n: c.n,
                variant: c.variant,
                s: c.s,
                state: c.state.to_string(),
                passed: v.passed,
                max_prob_dev: v.max_prob_dev,
                max_infidelity: v.max_infidelity,
                stray_prob: v.stray_prob,
            })
        })
        .collect::<Result<_>>()?;
    let failures = rows.iter().filter(|r| !r.passed).count();
    let total = rows.len();
    let bytes = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&VerifyReport {
            passed: failures == 0,
            total,
            failures,
            tol: args.tol,
            corrupt_angle: args.corrupt_angle,
            cases: rows,
        }),
        Format::Csv => to_csv(&rows),
    };
    write_output(args.output.out.as_deref(), &bytes)?;
    if failures > 0 {
        return Err(CliError::Validation(format!("{failures} of {total} cases exceeded tolerance {:e}", args.tol)));
    }
    Ok(())
}

#[derive(Serialize)]
struct ResourceRow {
    n: usize,
    s: usize,
    depth: usize,
    control_qubits: usize,
    helpers: usize,
    two_qubit_gates: usize,
}

fn cmd_resources(args: ResourcesArgs) -> Result<()> {
    let mut rows = Vec::new();
    for &n in &args.n {
        let s = args.s.width(n).max(1);
        let built = build(args.variant, n, s)?;
        let r = measure_resources(&built.circuit, &built.layout).map_err(|e| CliError::Validation(e.to_string()))?;
        rows.push(ResourceRow {
            n,
            s: built.params.s,
            depth: r.quantum_depth,
            control_qubits: r.control_qubits,
            helpers: r.helper_qubits,
            two_qubit_gates: r.two_qubit_gate_count,
        });
    }
    let bytes = match args.output.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&rows),
        Format::Csv => to_csv(&rows),
    };
    write_output(args.output.out.as_deref(), &bytes)
}

fn cmd_emit(args: EmitArgs) -> Result<()> {
    let n = args.circuit.n.unwrap_or(3);
    let built = build(args.circuit.variant, n, args.circuit.s)?;
    write_output(args.out.as_deref(), hwc::emit(&built.circuit).as_bytes())
}

#[derive(Serialize)]
struct FigureRow {
    state: String,
    n: usize,
    variant: Variant,
    s: usize,
    outcome: usize,
    oracle_prob: f64,
    circuit_prob: f64,
    count: usize,
    shots: usize,
}

fn cmd_figures(args: FiguresArgs) -> Result<()> {
    let cap = max_qubits()?;
    let mut configs = Vec::new();
    for n in 1..=args.n {
        let inputs = [
            NamedState::Ghz,
            NamedState::W,
            NamedState::BellPairProduct,
            NamedState::RyProduct(std::f64::consts::FRAC_PI_3),
            NamedState::Random(Some(args.seed)),
        ];
        for state in inputs {
            for variant in Variant::ALL {
                let mut w = match variant {
                    Variant::Alg1 | Variant::Alg2 => vec![1],
                    _ => vec![1, n],
                };
                w.dedup();
                for s in w {
                    let built = build(variant, n, s)?;
                    check_cap(&built, cap)?;
                    configs.push((state.clone(), built));
                }
            }
        }
    }
    let shots = args.shots as usize;
    let blocks: Vec<Vec<FigureRow>> = configs
        .par_iter()
        .enumerate()
        .map(|(i, (state, built))| -> Result<Vec<FigureRow>> {
            let n = built.params.n;
            let data = state.build(n, args.seed).map_err(CliError::Usage)?;
            let oracle = exact_hamming_distribution(&data);
            let exact = circuit_report(built, &data).map_err(sim_err)?;
            let counts = built.sample_counts(&data, shots, args.seed + i as u64).map_err(sim_err)?;
            Ok((0..=n)
                .map(|a| FigureRow {
                    state: state.to_string(),
                    n,
                    variant: built.variant,
                    s: built.params.s,
                    outcome: a,
                    oracle_prob: oracle.prob(a),
                    circuit_prob: exact.prob(a),
                    count: counts.get(&a).copied().unwrap_or(0),
                    shots,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let rows: Vec<FigureRow> = blocks.into_iter().flatten().collect();
    let bytes = match args.output.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&rows),
        Format::Csv => to_csv(&rows),
    };
    write_output(args.output.out.as_deref(), &bytes)
}
