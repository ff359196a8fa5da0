//! flipbench: single entry point wiring the calibration toolkit.
//!
//! Subcommands: `generate` (matrix + entropy stats), `run` (measurement
//! harness), `monitor` (standalone frequency sampler), `simulate`
//! (model-backed synthetic traces), `analyze` (summaries + verdicts),
//! `report` (SVG figures + text report). Exit codes follow the analysis
//! contract: 0 all checks pass, 1 a check failed, 2 unusable input.

mod config;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use flipbench_core::analysis::{
    exit_code, join_freq_durations, standard_verdicts, summarize, without_freq, GroupKey,
    JoinedRow, EXIT_PASS,
};
use flipbench_core::datagen::{EntropyStats, InitSpec, MatrixRole};
use flipbench_core::flipmodel::{
    activity_factor, simulate_experiment, SimConfig, DEFAULT_SIM_ACTIVE_CORES, DEFAULT_SIM_CALLS,
};
use flipbench_core::freqmon::{
    monitor_to_file, FrequencyProvider, OsFilesProvider, ReplayProvider, SimulatedProvider,
    DEFAULT_MONITOR_INTERVAL_MS,
};
use flipbench_core::harness::{
    run_calibration, ExperimentConfig, DEFAULT_BLOCK, DEFAULT_CALLS_PER_CORE,
    DEFAULT_MATRIX_ORDER, DEFAULT_WARMUP_SECONDS,
};
use flipbench_core::kernels::KernelKind;
use flipbench_core::report::{
    plot_filename, render, report_filename, write_text_report, PlotKind, PlotSpec, SeriesKey,
    DEFAULT_CORES_PER_PACKAGE,
};
use flipbench_core::trace::{
    read_durations, read_freqs, Metadata, DURATIONS_FILE, FREQ_FILE, METADATA_FILE,
};

use config::FileConfig;

/// Environment variable naming the default output directory.
const OUTPUT_ENV: &str = "FLIPBENCH_OUTPUT";
const FALLBACK_OUTPUT: &str = "flipbench-out";

#[derive(Parser)]
#[command(
    name = "flipbench",
    version,
    about = "Data-dependent dgemm calibration toolkit"
)]
struct Cli {
    /// Config file with [run], [model], [analyze] sections; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one matrix, print its elements and entropy statistics.
    Generate(GenerateArgs),
    /// Execute the measurement protocol: warm-up, pinned timed calls,
    /// frequency monitoring, trace files.
    Run(RunArgs),
    /// Sample per-core frequencies on a fixed interval, standalone.
    Monitor(MonitorArgs),
    /// Emit synthetic traces from the switching-activity frequency model.
    Simulate(SimulateArgs),
    /// Summarize traces and run the ordering/monotonicity/correlation checks.
    Analyze(AnalyzeArgs),
    /// Render the figure families and the text report from traces.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Init scheme: constant:<float> | sequential | random | masked:<0..53>.
    #[arg(long)]
    scheme: Option<String>,
    /// Matrix order N.
    #[arg(long)]
    order: Option<u32>,
    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Sampled pairs for the pairwise Hamming statistic.
    #[arg(long)]
    pairs: Option<usize>,
    /// Also write the elements, one per line, to this file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Matrix order N.
    #[arg(long)]
    order: Option<u32>,
    /// Timed kernel calls per core.
    #[arg(long)]
    calls: Option<u32>,
    /// Cores to measure, comma separated (e.g. 0,1,2).
    #[arg(long)]
    cores: Option<String>,
    /// Init scheme for all three matrices.
    #[arg(long)]
    scheme: Option<String>,
    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Kernel under measurement: naive | blocked.
    #[arg(long)]
    kernel: Option<String>,
    /// Block size of the blocked kernel.
    #[arg(long)]
    block: Option<u32>,
    /// Warm-up busy-loop length in seconds.
    #[arg(long)]
    warmup_seconds: Option<u64>,
    /// External warm-up command run instead of the native busy loop.
    #[arg(long)]
    warmup_command: Option<String>,
    /// Frequency sampling interval in milliseconds.
    #[arg(long)]
    monitor_interval: Option<u64>,
    /// Output directory for durations.csv, freq.csv, metadata.txt.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Node label written into every record.
    #[arg(long)]
    node_label: Option<String>,
    /// Frequency source: os | sim.
    #[arg(long)]
    freq_provider: Option<String>,
    /// Override the cpufreq sysfs base directory of the os provider.
    #[arg(long)]
    cpufreq_base: Option<PathBuf>,
}

#[derive(Args)]
struct MonitorArgs {
    /// Cores to sample, comma separated.
    #[arg(long)]
    cores: Option<String>,
    /// Sampling interval in milliseconds.
    #[arg(long)]
    monitor_interval: Option<u64>,
    /// How long to sample before stopping.
    #[arg(long)]
    duration_seconds: Option<u64>,
    /// Output directory for freq.csv and metadata.txt.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Frequency source: os | sim | replay.
    #[arg(long)]
    freq_provider: Option<String>,
    /// Trace file replayed by the replay provider.
    #[arg(long)]
    replay_from: Option<PathBuf>,
    /// Override the cpufreq sysfs base directory of the os provider.
    #[arg(long)]
    cpufreq_base: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Comma-separated scheme list, e.g. constant:1,sequential,random.
    #[arg(long)]
    schemes: Option<String>,
    /// Simulated calls per core.
    #[arg(long)]
    calls: Option<u32>,
    /// Matrix order N used for the activity statistics.
    #[arg(long)]
    order: Option<u32>,
    /// Multiplicative duration noise amplitude in [0, 0.2).
    #[arg(long)]
    noise: Option<f64>,
    /// Seed for matrices and noise.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the synthetic traces.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Simultaneously loaded cores pressing on the package budget.
    #[arg(long)]
    active_cores: Option<u32>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Directory holding durations.csv and optionally freq.csv.
    #[arg(long)]
    input: PathBuf,
    /// Where summary.csv and verdicts.txt go (default: the input directory).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Summary grouping, comma separated from node,core,scheme,mask_bits.
    #[arg(long)]
    group_by: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding durations.csv, freq.csv and metadata.txt.
    #[arg(long)]
    input: PathBuf,
    /// Where the SVG files and report go (default: the input directory).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Series labelling: auto | scheme | mask_bits.
    #[arg(long)]
    series: Option<String>,
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(flipbench_core::analysis::EXIT_INPUT_ERROR);
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Generate(args) => cmd_generate(args, &file),
        Command::Run(args) => cmd_run(args, &file),
        Command::Monitor(args) => cmd_monitor(args, &file),
        Command::Simulate(args) => cmd_simulate(args, &file),
        Command::Analyze(args) => cmd_analyze(args, &file),
        Command::Report(args) => cmd_report(args, &file),
    }
}

/// flag > config file > environment > built-in fallback.
fn resolve_output(flag: Option<PathBuf>, file: &FileConfig) -> PathBuf {
    flag.or_else(|| file.get("run", "output").map(PathBuf::from))
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT))
}

fn parse_cores(raw: &str) -> Result<Vec<u32>> {
    raw.split([',', ';'])
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| anyhow!("bad core id {s:?}"))
        })
        .collect()
}

fn parse_schemes(raw: &str, seed: u64) -> Result<Vec<InitSpec>> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| InitSpec::parse(s.trim(), seed).map_err(|e| anyhow!(e)))
        .collect()
}

fn cmd_generate(args: GenerateArgs, file: &FileConfig) -> Result<i32> {
    let order: u32 = args
        .order
        .or(file.get_parsed("run", "order")?)
        .unwrap_or(64);
    let seed: u64 = args.seed.or(file.get_parsed("run", "seed")?).unwrap_or(42);
    let pairs: usize = args
        .pairs
        .or(file.get_parsed("run", "pairs")?)
        .unwrap_or(10_000);
    let scheme_text = args
        .scheme
        .or_else(|| file.get("run", "scheme").map(String::from))
        .unwrap_or_else(|| "random".to_string());

    let spec = InitSpec::parse(&scheme_text, seed)?;
    let matrix = spec.generate(order as usize, MatrixRole::A)?;

    let mut lines = String::new();
    for v in matrix.as_slice() {
        lines.push_str(&v.to_string());
        lines.push('\n');
    }
    print!("{lines}");
    if let Some(out) = &args.out {
        std::fs::write(out, &lines)
            .with_context(|| format!("cannot write matrix to {}", out.display()))?;
    }

    if matrix.as_slice().len() >= 2 {
        let stats = EntropyStats::compute(&matrix, pairs, seed)?;
        eprintln!("scheme={spec}");
        eprintln!("order={order}");
        eprintln!("mean_adjacent_hamming={}", stats.mean_adjacent_hamming);
        eprintln!(
            "mean_sampled_pairwise_hamming={}",
            stats.mean_sampled_pairwise_hamming
        );
        eprintln!("sample_pairs={}", stats.sample_pairs);
        eprintln!("seed={}", stats.seed);
    }
    Ok(EXIT_PASS)
}

fn build_provider(
    name: &str,
    cpufreq_base: Option<&Path>,
    replay_from: Option<&Path>,
    file: &FileConfig,
    active_cores: u32,
    alpha: f64,
) -> Result<Arc<dyn FrequencyProvider>> {
    match name {
        "os" => Ok(match cpufreq_base {
            Some(base) => Arc::new(OsFilesProvider::with_base(base)),
            None => Arc::new(OsFilesProvider::new()),
        }),
        "sim" => Ok(Arc::new(SimulatedProvider::with_alpha(
            file.power_model()?,
            active_cores,
            alpha,
        ))),
        "replay" => {
            let path = replay_from.ok_or_else(|| {
                anyhow!("the replay provider needs --replay-from <trace file>")
            })?;
            Ok(Arc::new(ReplayProvider::from_file(path)?))
        }
        other => bail!("unknown frequency provider {other:?} (expected os, sim or replay)"),
    }
}

fn cmd_run(args: RunArgs, file: &FileConfig) -> Result<i32> {
    let seed: u64 = args.seed.or(file.get_parsed("run", "seed")?).unwrap_or(42);
    let scheme_text = args
        .scheme
        .or_else(|| file.get("run", "scheme").map(String::from))
        .unwrap_or_else(|| "random".to_string());
    let init = InitSpec::parse(&scheme_text, seed)?;
    let cores_raw = args
        .cores
        .or_else(|| file.get("run", "cores").map(String::from))
        .unwrap_or_else(|| "0".to_string());
    let kernel: KernelKind = args
        .kernel
        .or_else(|| file.get("run", "kernel").map(String::from))
        .unwrap_or_else(|| "blocked".to_string())
        .parse()?;
    let order = args
        .order
        .or(file.get_parsed("run", "order")?)
        .unwrap_or(DEFAULT_MATRIX_ORDER);

    let config = ExperimentConfig {
        node_label: args
            .node_label
            .or_else(|| file.get("run", "node_label").map(String::from))
            .unwrap_or_else(|| "localhost".to_string()),
        cores: parse_cores(&cores_raw)?,
        matrix_order: order,
        calls_per_core: args
            .calls
            .or(file.get_parsed("run", "calls")?)
            .unwrap_or(DEFAULT_CALLS_PER_CORE),
        init,
        kernel,
        block: args
            .block
            .or(file.get_parsed("run", "block")?)
            .unwrap_or_else(|| DEFAULT_BLOCK.min(order)),
        warmup_seconds: args
            .warmup_seconds
            .or(file.get_parsed("run", "warmup_seconds")?)
            .unwrap_or(DEFAULT_WARMUP_SECONDS),
        warmup_command: args
            .warmup_command
            .or_else(|| file.get("run", "warmup_command").map(String::from)),
        monitor_interval_ms: args
            .monitor_interval
            .or(file.get_parsed("run", "monitor_interval")?)
            .unwrap_or(DEFAULT_MONITOR_INTERVAL_MS),
        output_dir: resolve_output(args.output, file),
        seed,
    };

    let provider_name = args
        .freq_provider
        .or_else(|| file.get("run", "freq_provider").map(String::from))
        .unwrap_or_else(|| "os".to_string());
    // The simulated provider mirrors the load the run itself creates: the
    // activity of this scheme's matrices on however many cores we measure.
    let alpha = {
        let (a, b, c) = config.init.matrices(config.matrix_order as usize)?;
        activity_factor(&file.power_model()?, &a, &b, &c)
    };
    let cpufreq_base = args
        .cpufreq_base
        .or_else(|| file.get("run", "cpufreq_base").map(PathBuf::from));
    let provider = build_provider(
        &provider_name,
        cpufreq_base.as_deref(),
        None,
        file,
        config.cores.len() as u32,
        alpha,
    )?;

    let artifacts = run_calibration(&config, provider)?;
    println!("durations: {}", artifacts.durations_path.display());
    println!("freq: {}", artifacts.freq_path.display());
    println!("metadata: {}", artifacts.metadata_path.display());
    Ok(EXIT_PASS)
}

fn cmd_monitor(args: MonitorArgs, file: &FileConfig) -> Result<i32> {
    let cores_raw = args
        .cores
        .or_else(|| file.get("run", "cores").map(String::from))
        .unwrap_or_else(|| "0".to_string());
    let cores = parse_cores(&cores_raw)?;
    let interval = args
        .monitor_interval
        .or(file.get_parsed("run", "monitor_interval")?)
        .unwrap_or(DEFAULT_MONITOR_INTERVAL_MS);
    let duration_seconds: u64 = args
        .duration_seconds
        .or(file.get_parsed("run", "duration_seconds")?)
        .unwrap_or(10);
    let provider_name = args
        .freq_provider
        .or_else(|| file.get("run", "freq_provider").map(String::from))
        .unwrap_or_else(|| "os".to_string());
    let replay_from = args
        .replay_from
        .or_else(|| file.get("run", "replay_from").map(PathBuf::from));
    let cpufreq_base = args
        .cpufreq_base
        .or_else(|| file.get("run", "cpufreq_base").map(PathBuf::from));

    let model = file.power_model()?;
    let provider = build_provider(
        &provider_name,
        cpufreq_base.as_deref(),
        replay_from.as_deref(),
        file,
        cores.len() as u32,
        model.alpha_floor,
    )?;

    let out_dir = resolve_output(args.output, file);
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let freq_path = out_dir.join(FREQ_FILE);

    let stop = Arc::new(AtomicBool::new(false));
    let stopper = stop.clone();
    let timer = std::thread::spawn(move || {
        std::thread::sleep(Duration::from_secs(duration_seconds));
        stopper.store(true, Ordering::Release);
    });
    let report = monitor_to_file(
        provider.as_ref(),
        &cores,
        interval,
        Instant::now(),
        &stop,
        &freq_path,
    )?;
    timer.join().ok();

    let mut meta = Metadata::new();
    meta.push("source", "monitor");
    meta.push("freq_provider", provider.name());
    meta.push(
        "cores",
        cores
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(";"),
    );
    meta.push("monitor_interval_ms", interval);
    meta.push("duration_seconds", duration_seconds);
    meta.push("monitor_samples", report.samples);
    meta.push("monitor_missed_ticks", report.missed_ticks);
    meta.push("monitor_read_errors", report.read_errors);
    meta.write_to(&out_dir.join(METADATA_FILE))?;

    println!("freq: {}", freq_path.display());
    println!(
        "samples={} missed_ticks={} read_errors={}",
        report.samples, report.missed_ticks, report.read_errors
    );
    Ok(EXIT_PASS)
}

fn cmd_simulate(args: SimulateArgs, file: &FileConfig) -> Result<i32> {
    let seed: u64 = args.seed.or(file.get_parsed("run", "seed")?).unwrap_or(42);
    let schemes_raw = args
        .schemes
        .or_else(|| file.get("run", "schemes").map(String::from))
        .unwrap_or_else(|| "constant:0.987,sequential,random".to_string());
    let cfg = SimConfig {
        model: file.power_model()?,
        active_cores: args
            .active_cores
            .or(file.get_parsed("run", "active_cores")?)
            .unwrap_or(DEFAULT_SIM_ACTIVE_CORES),
        schemes: parse_schemes(&schemes_raw, seed)?,
        calls: args
            .calls
            .or(file.get_parsed("run", "calls")?)
            .unwrap_or(DEFAULT_SIM_CALLS),
        matrix_order: args
            .order
            .or(file.get_parsed("run", "order")?)
            .unwrap_or(64),
        noise_rel: args
            .noise
            .or(file.get_parsed("run", "noise")?)
            .unwrap_or(0.02),
        seed,
    };
    let out_dir = resolve_output(args.output, file);
    let artifacts = simulate_experiment(&cfg, &out_dir)?;
    println!("durations: {}", artifacts.durations_path.display());
    println!("freq: {}", artifacts.freq_path.display());
    println!("metadata: {}", artifacts.metadata_path.display());
    Ok(EXIT_PASS)
}

/// Load durations plus the frequency join when freq.csv is present.
fn load_joined(input: &Path) -> Result<Vec<JoinedRow>> {
    let durations_path = input.join(DURATIONS_FILE);
    let durations = read_durations(&durations_path)?;
    let freq_path = input.join(FREQ_FILE);
    Ok(if freq_path.exists() {
        let freqs = read_freqs(&freq_path)?;
        join_freq_durations(&durations, &freqs)
    } else {
        without_freq(durations)
    })
}

fn parse_group_by(raw: &str) -> Result<Vec<GroupKey>> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            GroupKey::parse(s.trim())
                .ok_or_else(|| anyhow!("unknown group key {s:?} (node, core, scheme, mask_bits)"))
        })
        .collect()
}

fn cmd_analyze(args: AnalyzeArgs, file: &FileConfig) -> Result<i32> {
    let joined = load_joined(&args.input)?;
    let group_raw = args
        .group_by
        .or_else(|| file.get("analyze", "group_by").map(String::from))
        .unwrap_or_else(|| "node,scheme,mask_bits".to_string());
    let keys = parse_group_by(&group_raw)?;

    let summary = summarize(&joined, &keys)?;
    let verdicts = standard_verdicts(&joined)?;

    let out_dir = args.output.unwrap_or_else(|| args.input.clone());
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    flipbench_core::analysis::write_summary(&summary, &out_dir.join("summary.csv"))?;
    flipbench_core::analysis::write_verdicts(&verdicts, &out_dir.join("verdicts.txt"))?;

    for verdict in &verdicts {
        println!("{verdict}");
    }
    if verdicts.is_empty() {
        println!("no applicable checks for this trace");
    }
    Ok(exit_code(&verdicts))
}

fn cmd_report(args: ReportArgs, file: &FileConfig) -> Result<i32> {
    let input = &args.input;
    let durations_path = input.join(DURATIONS_FILE);
    let freq_path = input.join(FREQ_FILE);
    let metadata_path = input.join(METADATA_FILE);

    let run_id = if metadata_path.exists() {
        Metadata::read_from(&metadata_path)?
            .get("run_id")
            .unwrap_or("run")
            .to_string()
    } else {
        "run".to_string()
    };
    let cores_per_package = if metadata_path.exists() {
        Metadata::read_from(&metadata_path)?
            .get("cores_per_package")
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_CORES_PER_PACKAGE)
    } else {
        DEFAULT_CORES_PER_PACKAGE
    };

    let series_raw = args
        .series
        .or_else(|| file.get("analyze", "series").map(String::from))
        .unwrap_or_else(|| "auto".to_string());
    let durations = read_durations(&durations_path)?;
    let series = match series_raw.as_str() {
        "scheme" => SeriesKey::Scheme,
        "mask_bits" => SeriesKey::MaskBits,
        "auto" => {
            let masks: std::collections::BTreeSet<u8> =
                durations.iter().filter_map(|r| r.mask_bits).collect();
            if masks.len() >= 2 {
                SeriesKey::MaskBits
            } else {
                SeriesKey::Scheme
            }
        }
        other => bail!("unknown series key {other:?} (auto, scheme or mask_bits)"),
    };

    let out_dir = args.output.unwrap_or_else(|| input.clone());
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;

    let have_freq = freq_path.exists();
    let mut written = Vec::new();
    for kind in PlotKind::all() {
        let needs_freq = matches!(kind, PlotKind::FreqTimeline | PlotKind::FreqDensity);
        if needs_freq && !have_freq {
            eprintln!("skipping {}: no freq.csv in input", kind.name());
            continue;
        }
        let spec = PlotSpec {
            kind,
            series,
            durations_path: Some(durations_path.clone()),
            freq_path: have_freq.then(|| freq_path.clone()),
            cores_per_package,
            output_path: out_dir.join(plot_filename(kind, &run_id)),
        };
        render(&spec)?;
        written.push(spec.output_path);
    }

    let joined = load_joined(input)?;
    let summary = summarize(
        &joined,
        &[GroupKey::Node, GroupKey::Scheme, GroupKey::MaskBits],
    )?;
    let verdicts = standard_verdicts(&joined)?;
    let report_path = out_dir.join(report_filename(&run_id));
    write_text_report(&summary, &verdicts, &report_path)?;
    written.push(report_path);

    for path in &written {
        println!("{}", path.display());
    }
    Ok(EXIT_PASS)
}
