//! Measurement harness: warm-up, per-core pinned timed kernel calls,
//! concurrent frequency monitoring, trace emission.
//!
//! One measurement worker runs per selected core, pinned to it. Workers
//! allocate their three operand matrices once, then time `calls_per_core`
//! kernel invocations with a monotonic clock around the call only. C is
//! refilled from the init spec before every call, outside the timed region,
//! so repeated calls keep the operand entropy of the scheme instead of
//! drifting with the product. A single writer thread serializes duration
//! and frequency records from all producers through a bounded queue;
//! producers never block on disk, and queue overflow is counted and flagged
//! in the run metadata rather than stalling a timed loop.

use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, TrySendError};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::datagen::{DatagenError, InitSpec, MatrixRole};
use crate::freqmon::{self, FreqError, FrequencyProvider};
use crate::kernels::{GemmArgs, KernelError, KernelKind};
use crate::trace::{
    DurationRecord, DurationWriter, FreqRecord, FreqWriter, Metadata, RunArtifacts, TraceError,
};

pub const DEFAULT_MATRIX_ORDER: u32 = 2048;
pub const DEFAULT_CALLS_PER_CORE: u32 = 50;
/// Ten minutes, the protocol's warm-up length.
pub const DEFAULT_WARMUP_SECONDS: u64 = 600;
pub const DEFAULT_BLOCK: u32 = 32;

/// Scalars used for every measured call: both terms of the update are
/// exercised so all three matrices' content flows through the FPU.
pub const GEMM_ALPHA: f64 = 1.0;
pub const GEMM_BETA: f64 = 1.0;

/// Bounded record queue between producers and the writer thread.
const QUEUE_CAPACITY: usize = 1 << 15;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    BadConfig(String),
    #[error("core {0} does not exist on this machine")]
    NoSuchCore(u32),
    #[error("pinning to core {core} failed (errno {errno})")]
    PinFailed { core: u32, errno: i32 },
    #[error("thread pinning is not supported on this platform")]
    PinUnsupported,
    #[error("worker on core {0} panicked")]
    WorkerPanicked(u32),
    #[error("writer thread failed: {0}")]
    Writer(#[source] TraceError),
    #[error("warmup command {command:?} failed: {reason}")]
    WarmupCommand { command: String, reason: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Freq(#[from] FreqError),
}

/// Full description of one calibration run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub node_label: String,
    pub cores: Vec<u32>,
    pub matrix_order: u32,
    pub calls_per_core: u32,
    pub init: InitSpec,
    pub kernel: KernelKind,
    pub block: u32,
    pub warmup_seconds: u64,
    /// Shell command to run for the warm-up instead of the native busy
    /// loop, e.g. `stress --cpu 32 --timeout 600`. The command is awaited;
    /// the native loop is skipped.
    pub warmup_command: Option<String>,
    pub monitor_interval_ms: u64,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.node_label.is_empty() || self.node_label.contains(',') {
            return Err(HarnessError::BadConfig(
                "node label must be non-empty and comma-free".into(),
            ));
        }
        if self.cores.is_empty() {
            return Err(HarnessError::BadConfig("no cores selected".into()));
        }
        let mut seen = self.cores.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.cores.len() {
            return Err(HarnessError::BadConfig("duplicate core ids".into()));
        }
        if self.matrix_order < 2 {
            return Err(HarnessError::BadConfig("matrix_order must be >= 2".into()));
        }
        if self.calls_per_core == 0 {
            return Err(HarnessError::BadConfig("calls_per_core must be >= 1".into()));
        }
        if self.block == 0 || self.block > self.matrix_order {
            return Err(HarnessError::BadConfig(format!(
                "block {} out of range 1..={}",
                self.block, self.matrix_order
            )));
        }
        if self.monitor_interval_ms < 10 {
            return Err(HarnessError::BadConfig(
                "monitor interval below 10 ms".into(),
            ));
        }
        Ok(())
    }
}

/// Restrict the calling thread to one core.
#[cfg(target_os = "linux")]
pub fn pin_worker(core: u32) -> Result<(), HarnessError> {
    if core as usize >= libc::CPU_SETSIZE as usize {
        return Err(HarnessError::NoSuchCore(core));
    }
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(core as usize, &mut set);
        if libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) != 0 {
            let errno = *libc::__errno_location();
            if errno == libc::EINVAL {
                // EINVAL here means no selectable CPU in the mask, i.e. the
                // core is not present on this machine.
                return Err(HarnessError::NoSuchCore(core));
            }
            return Err(HarnessError::PinFailed { core, errno });
        }
    }
    Ok(())
}

#[cfg(not(target_os = "linux"))]
pub fn pin_worker(_core: u32) -> Result<(), HarnessError> {
    Err(HarnessError::PinUnsupported)
}

/// Cores the calling thread may currently run on.
#[cfg(target_os = "linux")]
pub fn current_affinity() -> Result<Vec<u32>, HarnessError> {
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        if libc::sched_getaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &mut set) != 0 {
            let errno = *libc::__errno_location();
            return Err(HarnessError::PinFailed { core: 0, errno });
        }
        Ok((0..libc::CPU_SETSIZE as u32)
            .filter(|&c| libc::CPU_ISSET(c as usize, &set))
            .collect())
    }
}

#[cfg(not(target_os = "linux"))]
pub fn current_affinity() -> Result<Vec<u32>, HarnessError> {
    Err(HarnessError::PinUnsupported)
}

/// Outcome of the warm-up phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarmupReport {
    pub elapsed: Duration,
    /// `(core, completed busy-loop chunks)` per configured core.
    pub per_core_loops: Vec<(u32, u64)>,
}

/// Full-occupancy arithmetic busy loop on every configured core for the
/// requested wall time. Implemented natively instead of shelling out to an
/// external stress tool so tests stay hermetic; zero seconds is a no-op.
pub fn warmup(cores: &[u32], seconds: u64) -> WarmupReport {
    if seconds == 0 {
        return WarmupReport {
            elapsed: Duration::ZERO,
            per_core_loops: cores.iter().map(|&c| (c, 0)).collect(),
        };
    }
    let started = Instant::now();
    let deadline = started + Duration::from_secs(seconds);
    let mut per_core_loops = Vec::with_capacity(cores.len());
    std::thread::scope(|s| {
        let handles: Vec<_> = cores
            .iter()
            .map(|&core| {
                s.spawn(move || {
                    // Best effort; warming an unpinnable core still burns cycles.
                    let _ = pin_worker(core);
                    let mut chunks: u64 = 0;
                    let mut acc = 1.000_000_1_f64;
                    while Instant::now() < deadline {
                        for _ in 0..10_000 {
                            acc = acc.mul_add(1.000_000_001, 1.0e-12);
                        }
                        std::hint::black_box(acc);
                        chunks += 1;
                    }
                    (core, chunks)
                })
            })
            .collect();
        for handle in handles {
            if let Ok(entry) = handle.join() {
                per_core_loops.push(entry);
            }
        }
    });
    WarmupReport {
        elapsed: started.elapsed(),
        per_core_loops,
    }
}

fn run_external_warmup(command: &str) -> Result<WarmupReport, HarnessError> {
    let started = Instant::now();
    let status = std::process::Command::new("sh")
        .arg("-c")
        .arg(command)
        .status()
        .map_err(|e| HarnessError::WarmupCommand {
            command: command.to_string(),
            reason: e.to_string(),
        })?;
    if !status.success() {
        return Err(HarnessError::WarmupCommand {
            command: command.to_string(),
            reason: format!("exit status {status}"),
        });
    }
    Ok(WarmupReport {
        elapsed: started.elapsed(),
        per_core_loops: Vec::new(),
    })
}

enum Record {
    Duration(DurationRecord),
    Freq(FreqRecord),
}

struct WriterCounts {
    durations: u64,
    freqs: u64,
}

fn writer_loop(
    rx: mpsc::Receiver<Record>,
    artifacts: &RunArtifacts,
) -> Result<WriterCounts, TraceError> {
    let mut durations = DurationWriter::create(&artifacts.durations_path)?;
    let mut freqs = FreqWriter::create(&artifacts.freq_path)?;
    let mut counts = WriterCounts {
        durations: 0,
        freqs: 0,
    };
    while let Ok(record) = rx.recv() {
        match record {
            Record::Duration(rec) => {
                durations.write(&rec)?;
                counts.durations += 1;
            }
            Record::Freq(rec) => {
                freqs.write(&rec)?;
                counts.freqs += 1;
            }
        }
    }
    durations.finish()?;
    freqs.finish()?;
    Ok(counts)
}

fn measurement_worker(
    config: &ExperimentConfig,
    core: u32,
    epoch: Instant,
    tx: mpsc::SyncSender<Record>,
    overflow: &AtomicU64,
    pin_warnings: &Mutex<Vec<String>>,
) -> Result<(), HarnessError> {
    match pin_worker(core) {
        Ok(()) => {}
        Err(HarnessError::PinUnsupported) => {
            pin_warnings
                .lock()
                .unwrap()
                .push(format!("core {core}: pinning unsupported, running unpinned"));
        }
        Err(e) => return Err(e),
    }

    let order = config.matrix_order as usize;
    let a = config.init.generate(order, MatrixRole::A)?;
    let b = config.init.generate(order, MatrixRole::B)?;
    let mut c = config.init.generate(order, MatrixRole::C)?;
    let scheme = config.init.to_string();
    let kernel_name = config.kernel.name().to_string();
    let block = config.block as usize;

    for call_index in 0..config.calls_per_core {
        // Refresh C outside the timed region; buffers are allocated once.
        config.init.fill_role(MatrixRole::C, c.as_mut_slice())?;
        let start_ns = epoch.elapsed().as_nanos() as u64;
        let timer = Instant::now();
        config.kernel.run(
            GemmArgs {
                alpha: GEMM_ALPHA,
                beta: GEMM_BETA,
                a: &a,
                b: &b,
                c: &mut c,
            },
            block,
        )?;
        let duration_ns = (timer.elapsed().as_nanos() as u64).max(1);
        let record = DurationRecord {
            node: config.node_label.clone(),
            core,
            call_index,
            scheme: scheme.clone(),
            mask_bits: config.init.mask_bits(),
            seed: config.seed,
            matrix_order: config.matrix_order,
            kernel: kernel_name.clone(),
            start_ns,
            duration_ns,
        };
        if tx.try_send(Record::Duration(record)).is_err() {
            overflow.fetch_add(1, Ordering::Relaxed);
        }
    }
    Ok(())
}

/// Execute the full measurement protocol and emit one set of run artifacts.
///
/// On worker failure the run aborts, partial traces stay on disk, metadata
/// flags `status=partial`, and the first worker error is returned.
pub fn run_calibration(
    config: &ExperimentConfig,
    provider: Arc<dyn FrequencyProvider>,
) -> Result<RunArtifacts, HarnessError> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir).map_err(|e| {
        HarnessError::Trace(TraceError::Io {
            path: config.output_dir.clone(),
            source: e,
        })
    })?;
    let artifacts = RunArtifacts::in_dir(&config.output_dir);

    let warmup_report = match &config.warmup_command {
        Some(command) if config.warmup_seconds > 0 => run_external_warmup(command)?,
        _ => warmup(&config.cores, config.warmup_seconds),
    };

    let wall_start_ns = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default()
        .as_nanos() as u64;
    let epoch = Instant::now();

    let (tx, rx) = mpsc::sync_channel::<Record>(QUEUE_CAPACITY);
    let overflow = AtomicU64::new(0);
    let stop_monitor = AtomicBool::new(false);
    let pin_warnings = Mutex::new(Vec::new());

    let mut worker_errors: Vec<HarnessError> = Vec::new();

    let artifacts_for_writer = artifacts.clone();
    let overflow_ref = &overflow;
    let stop_ref = &stop_monitor;
    let warnings_ref = &pin_warnings;

    let (writer_result, monitor_result) = std::thread::scope(|s| {
        let writer = s.spawn(move || writer_loop(rx, &artifacts_for_writer));

        let monitor_tx = tx.clone();
        let provider_ref = provider.clone();
        let cores = config.cores.clone();
        let interval = config.monitor_interval_ms;
        let monitor = s.spawn(move || {
            freqmon::monitor(
                provider_ref.as_ref(),
                &cores,
                interval,
                epoch,
                stop_ref,
                |rec| {
                    if let Err(TrySendError::Full(_)) = monitor_tx.try_send(Record::Freq(rec)) {
                        overflow_ref.fetch_add(1, Ordering::Relaxed);
                    }
                },
            )
        });

        let workers: Vec<_> = config
            .cores
            .iter()
            .map(|&core| {
                let worker_tx = tx.clone();
                s.spawn(move || {
                    measurement_worker(config, core, epoch, worker_tx, overflow_ref, warnings_ref)
                })
            })
            .collect();

        for (handle, &core) in workers.into_iter().zip(&config.cores) {
            match handle.join() {
                Ok(Ok(())) => {}
                Ok(Err(e)) => worker_errors.push(e),
                Err(_) => worker_errors.push(HarnessError::WorkerPanicked(core)),
            }
        }

        stop_monitor.store(true, Ordering::Release);
        let monitor_res = monitor
            .join()
            .unwrap_or(Ok(freqmon::MonitorReport::default()));

        drop(tx);
        let writer_res = writer.join().unwrap_or(Ok(WriterCounts {
            durations: 0,
            freqs: 0,
        }));
        (writer_res, monitor_res)
    });

    let status = if worker_errors.is_empty() && writer_result.is_ok() {
        "complete"
    } else {
        "partial"
    };

    let mut meta = Metadata::new();
    meta.push(
        "run_id",
        format!("{}-{}", config.node_label, wall_start_ns / 1_000_000),
    );
    meta.push("source", "run");
    meta.push("node", &config.node_label);
    meta.push("status", status);
    meta.push("clock", "monotonic-ns-since-run-epoch");
    meta.push("wall_clock_start_unix_ns", wall_start_ns);
    meta.push("generator", crate::datagen::rng::GENERATOR_ID);
    meta.push(
        "cores",
        config
            .cores
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(";"),
    );
    meta.push("matrix_order", config.matrix_order);
    meta.push("calls_per_core", config.calls_per_core);
    meta.push("scheme", config.init);
    meta.push("seed", config.seed);
    meta.push("kernel", config.kernel);
    meta.push("block", config.block);
    meta.push("gemm_alpha", GEMM_ALPHA);
    meta.push("gemm_beta", GEMM_BETA);
    meta.push("c_refresh", "per_call");
    meta.push("warmup_seconds", config.warmup_seconds);
    match &config.warmup_command {
        Some(command) if config.warmup_seconds > 0 => {
            meta.push("warmup_mode", "external");
            meta.push("warmup_command", command);
        }
        _ => meta.push("warmup_mode", "native"),
    }
    meta.push(
        "warmup_elapsed_ms",
        warmup_report.elapsed.as_millis() as u64,
    );
    meta.push(
        "warmup_loops",
        warmup_report
            .per_core_loops
            .iter()
            .map(|(c, n)| format!("{c}:{n}"))
            .collect::<Vec<_>>()
            .join(";"),
    );
    meta.push("monitor_interval_ms", config.monitor_interval_ms);
    meta.push("freq_provider", provider.name());
    meta.push("cores_per_package", 16);
    meta.push("queue_overflows", overflow.load(Ordering::Relaxed));
    match &monitor_result {
        Ok(report) => {
            meta.push("monitor_samples", report.samples);
            meta.push("monitor_missed_ticks", report.missed_ticks);
            meta.push("monitor_read_errors", report.read_errors);
        }
        Err(e) => meta.push("monitor_error", e),
    }
    for warning in pin_warnings.lock().unwrap().iter() {
        meta.push("pin_warning", warning);
    }
    for error in &worker_errors {
        meta.push("worker_error", error);
    }
    meta.write_to(&artifacts.metadata_path)?;

    if let Err(e) = writer_result {
        return Err(HarnessError::Writer(e));
    }
    if let Err(e) = monitor_result {
        // A monitor that failed to start is a config-level problem; per-core
        // read failures were already absorbed as gaps.
        return Err(e.into());
    }
    if let Some(first) = worker_errors.into_iter().next() {
        return Err(first);
    }
    Ok(artifacts)
}
