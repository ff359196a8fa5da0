//! Core library of the flipbench toolkit.
//!
//! flipbench measures and explains data-dependent performance of
//! matrix-multiply kernels. Matrix content with high bit entropy toggles more
//! register bits per cycle, which raises dynamic power and can push a
//! power-capped CPU to a lower operating frequency. The toolkit provides:
//!
//! * [`datagen`] — matrix generators with controlled bit entropy
//!   (constant, sequential, random, mantissa-masked random) and Hamming
//!   statistics quantifying that entropy,
//! * [`kernels`] — a naive reference dgemm and a cache-blocked measured
//!   kernel behind a common interface,
//! * [`harness`] — the measurement protocol: warm-up, per-core pinned timed
//!   kernel calls, trace emission,
//! * [`freqmon`] — per-core frequency sampling through pluggable providers
//!   (sysfs, simulated, replay),
//! * [`flipmodel`] — the executable switching-activity / power-cap model
//!   that turns operand entropy into predicted frequency and duration,
//! * [`analysis`] — summaries, ordering and monotonicity verdicts, rank
//!   correlation, frequency/duration joins,
//! * [`report`] — deterministic SVG plots and text reports,
//! * [`trace`] — the CSV/metadata file schemas shared by all of the above.

pub mod analysis;
pub mod datagen;
pub mod flipmodel;
pub mod freqmon;
pub mod harness;
pub mod kernels;
pub mod report;
pub mod trace;
