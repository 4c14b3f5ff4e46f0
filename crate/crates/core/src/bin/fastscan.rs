use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use serde_json::json;

use fastscan::engine::fastscan_window;
use fastscan::gen::{generate_manifest, generate_trace, ManifestParams, TraceModel, TraceParams, DEFAULT_RATES_MBPS};
use fastscan::io::{format_trace, manifest_to_json, read_manifest, read_trace};
use fastscan::model::{validate_beta, BandwidthTimeline, VideoManifest, WindowContext};
use fastscan::oracle::{enumerate_optimal, ratio_to_f64, OracleError};
use fastscan::qoe::{score_exact, ExactQoeParams};
use fastscan::simulator::{run_comparison, run_session, Algorithm, PredictorKind, SessionConfig, SimError};

const ABOUT: &str = "Bitrate adaptation with forward/backward scans, a trace-driven \
session simulator, rule-based baselines and an exhaustive oracle.";

const LONG_ABOUT: &str = "Bitrate adaptation with forward/backward scans, a trace-driven \
session simulator, rule-based baselines and an exhaustive oracle.

Manifests are JSON with chunk sizes in bytes. Traces are text files with one \
throughput value in Mbps per line, one line per second; lines starting with \
'#' are comments. Throughput converts to bytes at 1 Mbps = 125000 bytes per \
1-second slot.

Exit codes: 0 success, 2 invalid input or parameters, 3 simulation failure \
or an oracle mismatch on a CBR manifest. FASTSCAN_SEED overrides --seed.";

#[derive(Parser)]
#[command(name = "fastscan", version, about = ABOUT, long_about = LONG_ABOUT)]
struct Cli {
    /// Seed for generated data. FASTSCAN_SEED takes precedence when set.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one trace and write <out>.json and <out>.csv.
    Simulate {
        #[arg(long)]
        manifest: PathBuf,
        /// Trace file in Mbps (1 Mbps = 125000 bytes per slot).
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "fastscan")]
        algo: Algorithm,
        #[command(flatten)]
        session: SessionArgs,
        /// Output path prefix.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several algorithms over every trace in a directory.
    Compare {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory of trace files in Mbps.
        #[arg(long)]
        traces: PathBuf,
        /// Comma-separated algorithms.
        #[arg(long, value_delimiter = ',', default_value = "fastscan,rb,bba,festive")]
        algos: Vec<Algorithm>,
        #[command(flatten)]
        session: SessionArgs,
        /// Output path prefix for the summary JSON and CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the scan engine with exhaustive search on a small instance.
    OracleCheck {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 60)]
        buffer: u64,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        #[arg(long, default_value_t = 10.0)]
        lambda: f64,
    },
    /// Generate a synthetic trace or manifest.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Args)]
struct SessionArgs {
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    eta: usize,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 10.0)]
    lambda: f64,
    /// Buffer capacity in seconds.
    #[arg(long, default_value_t = 60)]
    buffer: u64,
    /// Low-buffer threshold in seconds for the one-level fallback.
    #[arg(long, default_value_t = 5.0)]
    threshold: f64,
    #[arg(long, default_value = "harmonic")]
    predictor: PredictorKind,
    /// Prediction before the first measurement, in Mbps.
    #[arg(long)]
    bootstrap_mbps: Option<f64>,
}

impl SessionArgs {
    fn config(&self, algorithm: Algorithm) -> SessionConfig {
        SessionConfig {
            algorithm,
            window: self.window,
            eta: self.eta,
            beta: self.beta,
            lambda: self.lambda,
            buffer_cap_s: self.buffer,
            low_buffer_threshold_s: self.threshold,
            predictor: self.predictor,
            bootstrap_rate: self.bootstrap_mbps.map(|m| m * fastscan::model::BYTES_PER_MBIT),
            ..SessionConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum GenCommand {
    /// Write a trace in Mbps, one line per second.
    Trace {
        #[arg(long, default_value = "constant")]
        model: TraceModel,
        #[arg(long, default_value_t = 300)]
        length: usize,
        #[arg(long, default_value_t = 1.0)]
        mean: f64,
        #[arg(long, default_value_t = 0.0)]
        stddev: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a manifest JSON.
    Manifest {
        #[arg(long, default_value_t = 75)]
        chunks: usize,
        /// Comma-separated nominal level rates in Mbps.
        #[arg(long, value_delimiter = ',')]
        rates: Option<Vec<f64>>,
        /// Per-size jitter in percent; 0 gives CBR.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[arg(long, default_value_t = 4)]
        chunk_duration: u64,
        #[arg(long, default_value_t = 4)]
        startup_delay: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Input(String),
    Run(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) | SimError::BetaCondition { .. } | SimError::Model(_) => {
                Failure::Input(e.to_string())
            }
            other => Failure::Run(other.to_string()),
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn simulate(manifest: &Path, trace: &Path, algo: Algorithm, session: &SessionArgs, out: &Path) -> Result<(), Failure> {
    let manifest = read_manifest(manifest).map_err(input)?;
    let trace = read_trace(trace).map_err(input)?;
    let log = run_session(&manifest, &trace, &session.config(algo))?;
    write(&with_suffix(out, "json"), &(log.to_json() + "\n"))?;
    write(&with_suffix(out, "csv"), &log.to_csv())?;
    println!(
        "{}: qoe {:.4}, stall {}s, {} fallbacks",
        log.trace,
        log.qoe,
        log.total_stall_s,
        log.fallback_count()
    );
    Ok(())
}

fn compare(manifest: &Path, dir: &Path, algos: &[Algorithm], session: &SessionArgs, out: &Path) -> Result<(), Failure> {
    let manifest = read_manifest(manifest).map_err(input)?;
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::Input(format!("{} holds no trace files", dir.display())));
    }
    let traces = paths
        .iter()
        .map(|p| read_trace(p))
        .collect::<Result<Vec<_>, _>>()
        .map_err(input)?;
    let configs: Vec<SessionConfig> = algos.iter().map(|&a| session.config(a)).collect();
    for c in &configs {
        c.validate(&manifest)?;
    }
    let report = run_comparison(&manifest, &traces, &configs, &configs[0].qoe_params());
    write(
        &with_suffix(out, "json"),
        &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
    )?;
    write(&with_suffix(out, "csv"), &report.summary.to_csv())?;
    for p in report.pairs.iter().filter(|p| p.error.is_some()) {
        eprintln!("{} / {}: {}", p.trace, p.algorithm, p.error.as_deref().unwrap_or(""));
    }
    if report.succeeded() == 0 {
        return Err(Failure::Run("every session failed".into()));
    }
    println!("{} of {} sessions succeeded", report.succeeded(), report.pairs.len());
    Ok(())
}

fn oracle_check(manifest_path: &Path, trace_path: &Path, buffer: u64, beta: f64, lambda: f64) -> Result<bool, Failure> {
    let manifest: VideoManifest = read_manifest(manifest_path).map_err(input)?;
    let trace = read_trace(trace_path).map_err(input)?;
    if !validate_beta(beta, manifest.num_chunks(), manifest.top_level()).map_err(input)? {
        return Err(Failure::Input(format!(
            "beta {beta} does not give diminishing returns for {} chunks and {} levels",
            manifest.num_chunks(),
            manifest.num_levels()
        )));
    }
    let exact = ExactQoeParams {
        beta: Ratio::approximate_float(beta).ok_or_else(|| input("beta is not representable"))?,
        lambda: Ratio::approximate_float(lambda).ok_or_else(|| input("lambda is not representable"))?,
    };
    let last = *trace.samples.last().expect("parsed traces are non-empty");
    let timeline = BandwidthTimeline::from_samples(trace.samples.clone())
        .and_then(|t| t.with_tail(last))
        .map_err(input)?;
    let ctx = WindowContext::whole_video(&manifest, buffer);
    let oracle = enumerate_optimal(&manifest, &timeline, &ctx, &exact).map_err(|e| match e {
        OracleError::InsufficientTrace { .. } => Failure::Run(e.to_string()),
        other => input(other),
    })?;
    let engine = fastscan_window(&ctx, &manifest, &timeline, beta).map_err(|e| Failure::Run(e.to_string()))?;
    let got = score_exact(&engine.decisions, &exact);
    let equal = got == oracle.best_qoe;
    let verdict = json!({
        "instance": {
            "manifest": manifest_path.display().to_string(),
            "trace": trace_path.display().to_string(),
            "chunks": manifest.num_chunks(),
            "levels": manifest.num_levels(),
            "buffer_s": buffer,
            "cbr": manifest.is_cbr(),
        },
        "fastscan_qoe": ratio_to_f64(&got),
        "oracle_qoe": ratio_to_f64(&oracle.best_qoe),
        "gap": ratio_to_f64(&(oracle.best_qoe - got)),
        "equal": equal,
        "fastscan_levels": engine.decisions.levels,
        "oracle_levels": oracle.best_decisions.levels,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&verdict).expect("verdict serializes")
    );
    Ok(equal || !manifest.is_cbr())
}

fn gen(cmd: &GenCommand, seed: u64) -> Result<(), Failure> {
    match cmd {
        GenCommand::Trace {
            model,
            length,
            mean,
            stddev,
            out,
        } => {
            let params = TraceParams {
                model: *model,
                length_s: *length,
                mean_mbps: *mean,
                stddev_mbps: *stddev,
                seed,
                ..TraceParams::default()
            };
            let trace = generate_trace(&params).map_err(input)?;
            emit(out.as_deref(), &format_trace(&trace))
        }
        GenCommand::Manifest {
            chunks,
            rates,
            jitter,
            chunk_duration,
            startup_delay,
            out,
        } => {
            let params = ManifestParams {
                chunks: *chunks,
                chunk_duration_s: *chunk_duration,
                startup_delay_s: *startup_delay,
                rates_mbps: rates.clone().unwrap_or_else(|| DEFAULT_RATES_MBPS.to_vec()),
                jitter_pct: *jitter,
                seed,
            };
            let manifest = generate_manifest(&params).map_err(input)?;
            emit(out.as_deref(), &manifest_to_json(&manifest))
        }
    }
}

fn seed(flag: u64) -> Result<u64, Failure> {
    match std::env::var("FASTSCAN_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("FASTSCAN_SEED={v:?} is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            manifest,
            trace,
            algo,
            session,
            out,
        } => simulate(manifest, trace, *algo, session, out),
        Command::Compare {
            manifest,
            traces,
            algos,
            session,
            out,
        } => compare(manifest, traces, algos, session, out),
        Command::OracleCheck {
            manifest,
            trace,
            buffer,
            beta,
            lambda,
        } => match oracle_check(manifest, trace, *buffer, *beta, *lambda) {
            Ok(true) => Ok(()),
            Ok(false) => Err(Failure::Run(
                "scan result differs from the optimum on a CBR manifest".into(),
            )),
            Err(e) => Err(e),
        },
        Command::Gen(cmd) => seed(cli.seed).and_then(|s| gen(cmd, s)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
