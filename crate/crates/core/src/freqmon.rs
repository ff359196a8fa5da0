//! Per-core operating-frequency sampling through a pluggable provider.
//!
//! Three providers implement [`FrequencyProvider`]:
//!
//! * [`OsFilesProvider`] reads the Linux cpufreq scaling interface,
//!   `<base>/cpu{N}/cpufreq/scaling_cur_freq` (ASCII decimal, kHz);
//! * [`SimulatedProvider`] answers with the steady-state frequency of a
//!   [`PowerModel`](crate::flipmodel::PowerModel) under a configured
//!   per-core activity;
//! * [`ReplayProvider`] replays a recorded frequency trace in order.
//!
//! The sampler ([`monitor`]) ticks on the monotonic clock, emits one sample
//! per core per tick, tolerates and counts missed deadlines instead of
//! back-filling them, and records provider failures as gaps without
//! aborting.

use std::collections::{HashMap, VecDeque};
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::flipmodel::{steady_state_frequency, PowerModel};
use crate::trace::{read_freqs, FreqRecord, FreqWriter, TraceError};

/// Paper-cadence default: one sample per second.
pub const DEFAULT_MONITOR_INTERVAL_MS: u64 = 1000;

/// Default Linux cpufreq base directory.
pub const OS_CPUFREQ_BASE: &str = "/sys/devices/system/cpu";

#[derive(Debug, Error)]
pub enum FreqError {
    #[error("core {0} is not known to this provider")]
    UnknownCore(u32),
    #[error("cannot read frequency of core {core} at {path}: {source}")]
    Unreadable {
        core: u32,
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("core {core}: malformed frequency value {value:?}")]
    BadValue { core: u32, value: String },
    #[error("replay trace exhausted for core {0}")]
    Exhausted(u32),
    #[error("monitor interval {0} ms below the 10 ms minimum")]
    BadInterval(u64),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Source of instantaneous per-core frequency readings, in kHz.
///
/// Reads must be safe to issue while measurement workers run; all built-in
/// providers are `Send + Sync`.
pub trait FrequencyProvider: Send + Sync {
    fn read_core_frequency(&self, core: u32) -> Result<u64, FreqError>;

    /// Short identifier recorded in run metadata.
    fn name(&self) -> &'static str;
}

/// Linux cpufreq scaling interface reader.
pub struct OsFilesProvider {
    base: PathBuf,
}

impl OsFilesProvider {
    pub fn new() -> Self {
        Self::with_base(Path::new(OS_CPUFREQ_BASE))
    }

    /// Base directory override, used by tests and non-standard sysfs mounts.
    pub fn with_base(base: &Path) -> Self {
        Self {
            base: base.to_path_buf(),
        }
    }

    fn path_for(&self, core: u32) -> PathBuf {
        self.base
            .join(format!("cpu{core}"))
            .join("cpufreq")
            .join("scaling_cur_freq")
    }
}

impl Default for OsFilesProvider {
    fn default() -> Self {
        Self::new()
    }
}

impl FrequencyProvider for OsFilesProvider {
    fn read_core_frequency(&self, core: u32) -> Result<u64, FreqError> {
        let path = self.path_for(core);
        let text = std::fs::read_to_string(&path).map_err(|source| {
            if source.kind() == io::ErrorKind::NotFound {
                FreqError::UnknownCore(core)
            } else {
                FreqError::Unreadable { core, path, source }
            }
        })?;
        let trimmed = text.trim();
        trimmed.parse().map_err(|_| FreqError::BadValue {
            core,
            value: trimmed.to_string(),
        })
    }

    fn name(&self) -> &'static str {
        "os"
    }
}

/// Model-backed provider: each read returns the steady-state frequency for
/// the core's configured activity factor.
pub struct SimulatedProvider {
    model: PowerModel,
    active_cores: u32,
    default_alpha: f64,
    per_core_alpha: Mutex<HashMap<u32, f64>>,
}

impl SimulatedProvider {
    /// Provider answering for an idle machine: every core at floor activity.
    pub fn idle(model: PowerModel, active_cores: u32) -> Self {
        let alpha = model.alpha_floor;
        Self::with_alpha(model, active_cores, alpha)
    }

    pub fn with_alpha(model: PowerModel, active_cores: u32, alpha: f64) -> Self {
        Self {
            model,
            active_cores,
            default_alpha: alpha,
            per_core_alpha: Mutex::new(HashMap::new()),
        }
    }

    /// Override one core's activity; subsequent reads of that core follow.
    pub fn set_alpha(&self, core: u32, alpha: f64) {
        self.per_core_alpha.lock().unwrap().insert(core, alpha);
    }
}

impl FrequencyProvider for SimulatedProvider {
    fn read_core_frequency(&self, core: u32) -> Result<u64, FreqError> {
        let alpha = self
            .per_core_alpha
            .lock()
            .unwrap()
            .get(&core)
            .copied()
            .unwrap_or(self.default_alpha);
        Ok(steady_state_frequency(&self.model, alpha, self.active_cores).frequency_khz)
    }

    fn name(&self) -> &'static str {
        "sim"
    }
}

/// Replays a recorded frequency trace: reads pop that core's recorded
/// values in file order.
pub struct ReplayProvider {
    queues: Mutex<HashMap<u32, VecDeque<u64>>>,
}

impl ReplayProvider {
    pub fn from_file(path: &Path) -> Result<Self, FreqError> {
        Ok(Self::from_records(&read_freqs(path)?))
    }

    pub fn from_records(records: &[FreqRecord]) -> Self {
        let mut queues: HashMap<u32, VecDeque<u64>> = HashMap::new();
        for rec in records {
            queues
                .entry(rec.core)
                .or_default()
                .push_back(rec.frequency_khz);
        }
        Self {
            queues: Mutex::new(queues),
        }
    }
}

impl FrequencyProvider for ReplayProvider {
    fn read_core_frequency(&self, core: u32) -> Result<u64, FreqError> {
        let mut queues = self.queues.lock().unwrap();
        let queue = queues.get_mut(&core).ok_or(FreqError::UnknownCore(core))?;
        queue.pop_front().ok_or(FreqError::Exhausted(core))
    }

    fn name(&self) -> &'static str {
        "replay"
    }
}

/// Outcome counters of one monitoring session.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MonitorReport {
    pub samples: usize,
    pub missed_ticks: usize,
    pub read_errors: usize,
}

/// Sample every core once per tick until `stop` is raised, pushing records
/// into `sink`. Timestamps are nanoseconds since `epoch`, the same clock
/// base the harness stamps durations with. Ticks are scheduled on the
/// monotonic clock; a tick whose deadline has already passed is counted as
/// missed and skipped, never back-filled.
pub fn monitor<F>(
    provider: &dyn FrequencyProvider,
    cores: &[u32],
    interval_ms: u64,
    epoch: Instant,
    stop: &AtomicBool,
    mut sink: F,
) -> Result<MonitorReport, FreqError>
where
    F: FnMut(FreqRecord),
{
    if interval_ms < 10 {
        return Err(FreqError::BadInterval(interval_ms));
    }
    let mut report = MonitorReport::default();
    let t0 = Instant::now();
    let mut tick: u64 = 0;
    loop {
        if stop.load(Ordering::Acquire) {
            return Ok(report);
        }
        let deadline = t0 + Duration::from_millis(interval_ms * tick);
        // Sleep in short slices so a stop request does not wait out a whole
        // interval.
        loop {
            let now = Instant::now();
            if now >= deadline {
                break;
            }
            if stop.load(Ordering::Acquire) {
                return Ok(report);
            }
            std::thread::sleep((deadline - now).min(Duration::from_millis(20)));
        }
        for &core in cores {
            match provider.read_core_frequency(core) {
                Ok(frequency_khz) => {
                    sink(FreqRecord {
                        timestamp_ns: epoch.elapsed().as_nanos() as u64,
                        core,
                        frequency_khz,
                    });
                    report.samples += 1;
                }
                Err(_) => report.read_errors += 1,
            }
        }
        tick += 1;
        while Instant::now() >= t0 + Duration::from_millis(interval_ms * (tick + 1)) {
            tick += 1;
            report.missed_ticks += 1;
        }
    }
}

/// [`monitor`] variant that writes the standard frequency CSV.
pub fn monitor_to_file(
    provider: &dyn FrequencyProvider,
    cores: &[u32],
    interval_ms: u64,
    epoch: Instant,
    stop: &AtomicBool,
    path: &Path,
) -> Result<MonitorReport, FreqError> {
    let mut writer = FreqWriter::create(path)?;
    let mut write_error = None;
    let report = monitor(provider, cores, interval_ms, epoch, stop, |rec| {
        if write_error.is_none() {
            if let Err(e) = writer.write(&rec) {
                write_error = Some(e);
            }
        }
    })?;
    if let Some(e) = write_error {
        return Err(e.into());
    }
    writer.finish()?;
    Ok(report)
}
