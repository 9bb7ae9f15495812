//! Command-line driver for the randomness pipeline.
//!
//! Exit codes are a stable contract:
//! * 0: success
//! * 1: usage or input error
//! * 2: requested parameters give vacuous security
//! * 3: a protocol aborted (expansion statistics, abort fraction, Bell test)
//!
//! Every numeric line printed to stdout carries a regime label, either
//! `[full-scale]` (formula evaluation at true magnitudes) or
//! `[toy-structural]` (numbers produced by actually running bits through
//! the toy pipeline). The two never mix on one line.

mod manifest;
mod report;

use std::path::{Path, PathBuf};

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};
use seedless_core::bitcore::BitString;
use seedless_core::error::CoreError;
use seedless_core::expansion::{self, ExpansionConfig, ExpansionStatus};
use seedless_core::ghz::{Device, DeviceModel, Script, Strategy};
use seedless_core::processing::{self, DeviceRole, ProcessingConfig, ProcessingStatus};
use seedless_core::qkd::{self, EveModel, SessionConfig, SessionStatus, SessionTranscript};
use seedless_core::simrng;
use seedless_core::trevisan::{self, WeakDesign};

use manifest::RunManifest;
use report::{print_line, Regime};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_VACUOUS: i32 = 2;
const EXIT_ABORT: i32 = 3;

#[derive(Parser)]
#[command(
    name = "seedless",
    about = "Randomness processing pipeline and device-independent QKD session simulator",
    version
)]
struct Cli {
    /// Master simulation seed; all device PRNG streams derive from it by
    /// labeled domain separation.
    #[arg(long, global = true, default_value_t = 1)]
    master_seed: u64,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Cap on concurrent per-seed pipelines (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the security-parameter formulas for a given min-entropy.
    Params(ParamsArgs),
    /// Extract bits from a message file with an explicit toy seed.
    Extract(ExtractArgs),
    /// Run the one-shot expansion protocol against a simulated device.
    Expand(ExpandArgs),
    /// Run the full structural pipeline: extract with all seeds, expand,
    /// fold.
    Process(ProcessArgs),
    /// Run a key-distribution session driven by a processed seed file.
    Qkd(QkdArgs),
    /// Re-verify the ordering invariants of a saved session transcript.
    Replay(ReplayArgs),
    /// Sweep the security parameter over a k-grid and emit CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ParamsArgs {
    /// Message min-entropy in bits.
    #[arg(long)]
    k: u64,
    /// Extractor output length (default k/2).
    #[arg(long)]
    m: Option<u64>,
    /// Error tolerance as a plain probability.
    #[arg(long, conflicts_with = "log2_eta")]
    eta: Option<f64>,
    /// Error tolerance as log2(eta) (default: the -k/125312 schedule).
    #[arg(long, allow_hyphen_values = true)]
    log2_eta: Option<f64>,
    /// Search (m, eta) for the smallest security parameter instead of
    /// using the defaults.
    #[arg(long)]
    optimize: bool,
    /// Write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Message file (.bits or .bin).
    #[arg(long)]
    message: PathBuf,
    /// Seed as '0'/'1' text (its length is the toy seed length).
    #[arg(long)]
    seed: String,
    /// Design subseed size.
    #[arg(long, default_value_t = 2)]
    t: usize,
    /// Output length.
    #[arg(long)]
    m: usize,
    /// Claimed min-entropy of the message (bookkeeping).
    #[arg(long)]
    k_claim: u64,
    /// Output file (.bits or .bin).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExpandArgs {
    /// Seed file (.bits or .bin).
    #[arg(long)]
    seed: PathBuf,
    /// Output length in rounds.
    #[arg(long)]
    rounds: u64,
    /// Error tolerance in (0, 1/2).
    #[arg(long, default_value_t = 0.2)]
    eta: f64,
    /// Test probability in [0, 1].
    #[arg(long, default_value_t = 1.0 / 256.0)]
    q: f64,
    /// Device model: honest | noisy=<p> | identity | zeros | script=<json file>.
    #[arg(long, default_value = "honest")]
    device: String,
    /// Round log output (JSON lines).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Output bits on success.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProcessArgs {
    /// Message file (.bits or .bin).
    #[arg(long)]
    message: PathBuf,
    /// Pipeline configuration (JSON; defaults used when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Device model for every factory device (honest | noisy=<p> |
    /// identity | zeros).
    #[arg(long, default_value = "honest")]
    devices: String,
    /// Output file for the folded string.
    #[arg(long)]
    z_out: Option<PathBuf>,
    /// Report JSON path.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory for per-seed expansion round logs (JSON lines).
    #[arg(long)]
    logs: Option<PathBuf>,
}

#[derive(Args)]
struct QkdArgs {
    /// Processed-seed file (.bits or .bin), e.g. the output of `process`.
    #[arg(long)]
    z: PathBuf,
    /// Session configuration (JSON; defaults used when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Adversary model: passive | intercept=<p> | tamper.
    #[arg(long, default_value = "passive")]
    eve: String,
    /// Security parameter of the seed, as log2(delta), for the composed
    /// error report.
    #[arg(long, allow_hyphen_values = true)]
    log2_delta: Option<f64>,
    /// Transcript output (JSON lines).
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Key material output (JSON).
    #[arg(long)]
    keys_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Saved transcript (JSON lines).
    #[arg(long)]
    transcript: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    k_min: u64,
    #[arg(long)]
    k_max: u64,
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Strategy: default | improved.
    #[arg(long, default_value = "default")]
    strategy: String,
    /// CSV output path.
    #[arg(long)]
    csv: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are success paths; everything else is a
            // usage error under the exit-code contract.
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .ok();
    }
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            classify_error(&e)
        }
    };
    std::process::exit(code);
}

fn classify_error(e: &anyhow::Error) -> i32 {
    if let Some(core) = e.downcast_ref::<CoreError>() {
        match core {
            CoreError::SeedExhausted { .. }
            | CoreError::Parse(_)
            | CoreError::Io(_)
            | CoreError::Json(_)
            | CoreError::InvalidParams(_)
            | CoreError::InvalidProbability { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::LengthMismatch { .. } => EXIT_USAGE,
            _ => EXIT_USAGE,
        }
    } else {
        EXIT_USAGE
    }
}

fn run(cli: &Cli) -> anyhow::Result<i32> {
    std::fs::create_dir_all(&cli.out_dir)?;
    match &cli.command {
        Command::Params(args) => cmd_params(cli, args),
        Command::Extract(args) => cmd_extract(cli, args),
        Command::Expand(args) => cmd_expand(cli, args),
        Command::Process(args) => cmd_process(cli, args),
        Command::Qkd(args) => cmd_qkd(cli, args),
        Command::Replay(args) => cmd_replay(cli, args),
        Command::Sweep(args) => cmd_sweep(cli, args),
    }
}

fn read_bit_file(path: &Path) -> anyhow::Result<BitString> {
    let by_ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let bits = match by_ext {
        "bin" => BitString::read_bin_file(path)?,
        _ => BitString::read_bits_file(path)?,
    };
    Ok(bits)
}

fn write_bit_file(path: &Path, bits: &BitString) -> anyhow::Result<()> {
    let by_ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match by_ext {
        "bin" => bits.write_bin_file(path)?,
        _ => bits.write_bits_file(path)?,
    }
    Ok(())
}

fn parse_device_model(spec: &str) -> anyhow::Result<DeviceModel> {
    if spec == "honest" {
        return Ok(DeviceModel::Honest);
    }
    if spec == "identity" {
        return Ok(DeviceModel::Deterministic(Strategy::identity()));
    }
    if spec == "zeros" {
        return Ok(DeviceModel::Deterministic(Strategy::constant([false; 3])));
    }
    if let Some(p) = spec.strip_prefix("noisy=") {
        return Ok(DeviceModel::Noisy {
            flip_prob: p.parse()?,
        });
    }
    if let Some(path) = spec.strip_prefix("script=") {
        let text = std::fs::read_to_string(path)?;
        return Ok(DeviceModel::Scripted(Script::from_json(&text)?));
    }
    anyhow::bail!(
        "unknown device model {spec:?} (honest | noisy=<p> | identity | zeros | script=<file>)"
    )
}

fn parse_eve_model(spec: &str) -> anyhow::Result<EveModel> {
    if spec == "passive" {
        return Ok(EveModel::Passive);
    }
    if spec == "intercept" {
        return Ok(EveModel::InterceptResend { fraction: 1.0 });
    }
    if let Some(p) = spec.strip_prefix("intercept=") {
        return Ok(EveModel::InterceptResend {
            fraction: p.parse()?,
        });
    }
    if spec == "tamper" {
        return Ok(EveModel::SourceTamper {
            bit0: false,
            bit1: false,
        });
    }
    anyhow::bail!("unknown adversary model {spec:?} (passive | intercept[=<p>] | tamper)")
}

// ---------------------------------------------------------------------------
// params
// ---------------------------------------------------------------------------

fn cmd_params(cli: &Cli, args: &ParamsArgs) -> anyhow::Result<i32> {
    let manifest = RunManifest::new(cli.master_seed, "params", Regime::FullScale, &cli.out_dir);

    let report = if args.optimize {
        let chosen = processing::optimize_m_eta(args.k)?;
        print_line(Regime::FullScale, "optimized_m", chosen.m);
        print_line(Regime::FullScale, "optimized_log2_eta", chosen.log2_eta);
        chosen.report
    } else {
        let m = args.m.unwrap_or(args.k / 2);
        let log2_eta = match (args.eta, args.log2_eta) {
            (Some(eta), _) => eta.log2(),
            (None, Some(l)) => l,
            (None, None) => processing::Strategy::Default.log2_eta_for(args.k),
        };
        processing::security_parameter(args.k, m, log2_eta)?
    };

    print_line(Regime::FullScale, "k", report.k);
    print_line(Regime::FullScale, "m", report.m);
    print_line(Regime::FullScale, "log2_eta", report.log2_eta);
    print_line(Regime::FullScale, "log2_eps_extraction", report.log2_eps_t);
    print_line(Regime::FullScale, "log2_eps_expansion", report.log2_eps_ms);
    print_line(
        Regime::FullScale,
        "log2_completeness",
        report.log2_completeness,
    );
    print_line(Regime::FullScale, "log2_soundness", report.log2_soundness);
    print_line(Regime::FullScale, "log2_delta", report.log2_delta);
    print_line(Regime::FullScale, "gamma", report.gamma);
    print_line(
        Regime::FullScale,
        "seed_len_asymptotic",
        report.seed_len_asymptotic,
    );
    // The ceiling-mode seed length keeps the construction's rounding
    // instead of the smooth formula; report both side by side.
    if let Ok(extractor) = trevisan::compute_params(report.k, report.k, report.m) {
        print_line(
            Regime::FullScale,
            "seed_len_ceiling",
            extractor.seed_len_ceiling,
        );
    }
    print_line(
        Regime::FullScale,
        "log2_device_count",
        report.log2_device_count,
    );

    if let Some(path) = &args.json {
        let doc = serde_json::json!({
            "manifest": manifest,
            "manifest_sha256": manifest.sha256_hex(),
            "report": report,
        });
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    }

    if report.vacuous {
        print_line(Regime::FullScale, "vacuous", 1);
        eprintln!("security is vacuous at these parameters (some error bound is at or above 1)");
        return Ok(EXIT_VACUOUS);
    }
    print_line(Regime::FullScale, "vacuous", 0);
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

fn cmd_extract(cli: &Cli, args: &ExtractArgs) -> anyhow::Result<i32> {
    let manifest = RunManifest::new(
        cli.master_seed,
        "extract",
        Regime::ToyStructural,
        &cli.out_dir,
    );
    let message = read_bit_file(&args.message)?;
    let seed = BitString::from_text(&args.seed)?;
    let design = WeakDesign::toy(args.t, args.m, seed.len())?;
    let params = trevisan::compute_params(message.len() as u64, args.k_claim, args.m as u64)?;
    let out = trevisan::extract(&message, &seed, &params, &design)?;
    write_bit_file(&args.out, &out)?;
    manifest.write_sidecar(&args.out)?;
    print_line(Regime::ToyStructural, "message_bits", message.len());
    print_line(Regime::ToyStructural, "seed_bits", seed.len());
    print_line(Regime::ToyStructural, "output_bits", out.len());
    print_line(Regime::FullScale, "log2_eps_extraction", params.log2_eps);
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// expand
// ---------------------------------------------------------------------------

fn cmd_expand(cli: &Cli, args: &ExpandArgs) -> anyhow::Result<i32> {
    let manifest = RunManifest::new(
        cli.master_seed,
        "expand",
        Regime::ToyStructural,
        &cli.out_dir,
    );
    let seed = read_bit_file(&args.seed)?;
    let config = ExpansionConfig {
        rounds: args.rounds,
        eta: args.eta,
        q: args.q,
    };
    let model = parse_device_model(&args.device)?;
    let mut device = Device::new(model, simrng::derive_rng(cli.master_seed, "expand/device"))?;
    let outcome = expansion::one_shot_expand(&seed, &mut device, &config)?;
    device.retire();

    print_line(Regime::ToyStructural, "rounds", outcome.rounds.len());
    print_line(Regime::ToyStructural, "failures", outcome.failures);
    print_line(Regime::ToyStructural, "abort_threshold", outcome.threshold);
    print_line(
        Regime::ToyStructural,
        "seed_bits_consumed",
        outcome.seed_bits_consumed,
    );
    if let Some(w) = &outcome.degenerate {
        eprintln!("warning: {w}");
    }

    if let Some(path) = &args.log {
        let mut file = std::fs::File::create(path)?;
        manifest.write_jsonl_header(&mut file)?;
        outcome.write_round_log(&mut file)?;
    }
    match outcome.status {
        ExpansionStatus::Succeed => {
            if let Some(path) = &args.out {
                write_bit_file(
                    path,
                    outcome.output.as_ref().expect("success carries output"),
                )?;
                manifest.write_sidecar(path)?;
            }
            print_line(Regime::ToyStructural, "status_abort", 0);
            Ok(EXIT_OK)
        }
        ExpansionStatus::Abort => {
            print_line(Regime::ToyStructural, "status_abort", 1);
            eprintln!(
                "expansion aborted: {} failures over threshold {}",
                outcome.failures, outcome.threshold
            );
            Ok(EXIT_ABORT)
        }
    }
}

// ---------------------------------------------------------------------------
// process
// ---------------------------------------------------------------------------

fn cmd_process(cli: &Cli, args: &ProcessArgs) -> anyhow::Result<i32> {
    let manifest = RunManifest::new(
        cli.master_seed,
        "process",
        Regime::ToyStructural,
        &cli.out_dir,
    )
    .with_config(args.config.as_deref());
    let message = read_bit_file(&args.message)?;
    let mut config: ProcessingConfig = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => ProcessingConfig::default(),
    };
    if args.config.is_none() {
        // Fit the default toy config to the supplied message.
        config.n = message.len();
        config.k_claim = (message.len() as u64) / 2;
        if config.m_w as u64 >= config.k_claim {
            config.m_w = (config.k_claim / 2).max(1) as usize;
        }
    }

    let model = parse_device_model(&args.devices)?;
    let master = cli.master_seed;
    let factory = move |seed_index: usize, role: DeviceRole| {
        Device::new(
            model.clone(),
            simrng::derive_rng(master, &format!("process/seed{seed_index}/{role:?}")),
        )
    };
    let outcome = processing::run_processing(&message, &config, &factory)?;

    print_line(
        Regime::ToyStructural,
        "structural_seeds",
        outcome.total_runs,
    );
    print_line(
        Regime::ToyStructural,
        "devices_consumed",
        outcome.devices_consumed,
    );
    print_line(Regime::ToyStructural, "aborted_runs", outcome.aborted_runs);

    if let Some(dir) = &args.logs {
        std::fs::create_dir_all(dir)?;
        for seed_run in &outcome.per_seed {
            let path = dir.join(format!("seed{:04}.jsonl", seed_run.seed_index));
            let mut file = std::fs::File::create(path)?;
            manifest.write_jsonl_header(&mut file)?;
            for record in &seed_run.rounds {
                serde_json::to_writer(&mut file, record)?;
                use std::io::Write;
                writeln!(file)?;
            }
        }
    }

    if let Some(path) = &args.report {
        let doc = serde_json::json!({
            "manifest": manifest,
            "manifest_sha256": manifest.sha256_hex(),
            "config": config,
            "status": outcome.status,
            "aborted_runs": outcome.aborted_runs,
            "total_runs": outcome.total_runs,
            "devices_consumed": outcome.devices_consumed,
            "per_seed": outcome.per_seed,
        });
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    }

    match outcome.status {
        ProcessingStatus::Succeed => {
            let z = outcome.z.expect("success carries output");
            print_line(Regime::ToyStructural, "z_bits", z.len());
            if let Some(path) = &args.z_out {
                write_bit_file(path, &z)?;
                manifest.write_sidecar(path)?;
            }
            print_line(Regime::ToyStructural, "status_abort", 0);
            Ok(EXIT_OK)
        }
        ProcessingStatus::Abort => {
            print_line(Regime::ToyStructural, "status_abort", 1);
            eprintln!(
                "processing aborted: {}/{} expansion runs aborted (tolerance {})",
                outcome.aborted_runs, outcome.total_runs, config.eta
            );
            Ok(EXIT_ABORT)
        }
    }
}

// ---------------------------------------------------------------------------
// qkd
// ---------------------------------------------------------------------------

fn cmd_qkd(cli: &Cli, args: &QkdArgs) -> anyhow::Result<i32> {
    let manifest = RunManifest::new(cli.master_seed, "qkd", Regime::ToyStructural, &cli.out_dir)
        .with_config(args.config.as_deref());
    let z = read_bit_file(&args.z)?;
    let config: SessionConfig = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => SessionConfig::default(),
    };
    let budget = qkd::z_budget_estimate(&config);
    if (z.len() as f64) < budget {
        eprintln!(
            "seed file provides {} bits but the session needs about {:.0}",
            z.len(),
            budget
        );
        return Ok(EXIT_USAGE);
    }
    let eve = parse_eve_model(&args.eve)?;
    let mut rng = simrng::derive_rng(cli.master_seed, "qkd/session");
    let (key, transcript) = qkd::run_session(&z, &config, &eve, &mut rng)?;

    if let Some(path) = &args.transcript {
        let mut file = std::fs::File::create(path)?;
        manifest.write_jsonl_header(&mut file)?;
        transcript.write_jsonl(&mut file)?;
    }

    let delta = args.log2_delta.map(|l| 2f64.powf(l)).unwrap_or(0.0);
    let composed = qkd::compose_errors(config.inner_errors, delta);
    print_line(Regime::ToyStructural, "rounds", config.rounds);
    if let Some(s) = key.chsh_score {
        print_line(Regime::ToyStructural, "chsh_score", s);
    }
    print_line(Regime::ToyStructural, "sifted_bits", key.sifted_len);
    if let Some(q) = key.qber {
        print_line(Regime::ToyStructural, "qber", q);
    }
    print_line(Regime::FullScale, "composed_completeness", composed.0);
    print_line(Regime::FullScale, "composed_soundness", composed.1);

    if let Some(path) = &args.keys_out {
        let doc = serde_json::json!({
            "manifest": manifest,
            "manifest_sha256": manifest.sha256_hex(),
            "status": key.status,
            "alice_key": key.alice_key,
            "bob_key": key.bob_key,
            "chsh_score": key.chsh_score,
            "qber": key.qber,
            "composed_errors": composed,
        });
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    }

    match key.status {
        SessionStatus::Accept => {
            let alice = key.alice_key.as_ref().expect("accepted session has keys");
            print_line(Regime::ToyStructural, "key_bits", alice.len());
            print_line(Regime::ToyStructural, "status_abort", 0);
            Ok(EXIT_OK)
        }
        SessionStatus::Abort => {
            print_line(Regime::ToyStructural, "status_abort", 1);
            eprintln!(
                "session aborted: {}",
                key.abort_reason.as_deref().unwrap_or("unspecified")
            );
            Ok(EXIT_ABORT)
        }
    }
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

fn cmd_replay(_cli: &Cli, args: &ReplayArgs) -> anyhow::Result<i32> {
    let file = std::fs::File::open(&args.transcript)?;
    let reader = std::io::BufReader::new(file);
    // Skip a manifest header line if present.
    let mut lines = Vec::new();
    use std::io::BufRead;
    for line in reader.lines() {
        let line = line?;
        if line.contains("\"manifest\"") && lines.is_empty() {
            continue;
        }
        lines.push(line);
    }
    let transcript =
        SessionTranscript::read_jsonl(std::io::Cursor::new(lines.join("\n").into_bytes()))?;
    print_line(Regime::ToyStructural, "events", transcript.entries().len());
    match transcript.verify_ordering() {
        Ok(()) => {
            println!("ordering: broadcast-after-ack holds for every round");
            print_line(Regime::ToyStructural, "ordering_violations", 0);
            Ok(EXIT_OK)
        }
        Err(e) => {
            print_line(Regime::ToyStructural, "ordering_violations", 1);
            eprintln!("ordering violated: {e}");
            Ok(EXIT_ABORT)
        }
    }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> anyhow::Result<i32> {
    let manifest = RunManifest::new(cli.master_seed, "sweep", Regime::FullScale, &cli.out_dir);
    let strategy = match args.strategy.as_str() {
        "default" => processing::Strategy::Default,
        "improved" => processing::Strategy::Improved,
        other => anyhow::bail!("unknown strategy {other:?} (default | improved)"),
    };
    if args.k_min >= args.k_max || args.points < 2 {
        anyhow::bail!("need k_min < k_max and at least 2 points");
    }
    let mut csv = String::new();
    csv.push_str(&format!(
        "# regime=full-scale manifest_sha256={}\n",
        manifest.sha256_hex()
    ));
    csv.push_str("k,m,log2_eta,log2_delta\n");
    for i in 0..args.points {
        let k = args.k_min
            + ((args.k_max - args.k_min) as f64 * i as f64 / (args.points - 1) as f64) as u64;
        let report = processing::security_parameter_for(strategy, k)?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            report.k, report.m, report.log2_eta, report.log2_delta
        ));
    }
    std::fs::write(&args.csv, csv)?;
    print_line(Regime::FullScale, "points", args.points);
    Ok(EXIT_OK)
}
