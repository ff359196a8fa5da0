//! Statistical pipeline over duration and frequency traces: grouped
//! five-number summaries, scheme-ordering and mask-monotonicity verdicts,
//! rank correlation, and the window join between durations and frequency
//! samples.
//!
//! Medians drive all verdicts; the box-plot style summaries use type-7
//! quantiles (linear interpolation between order statistics), and Spearman
//! correlation handles ties with average ranks. Identical input files
//! produce byte-identical outputs: grouping is ordered, and no floating
//! point formatting depends on the environment.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::trace::{DurationRecord, FreqRecord, TraceError};

/// Exit code for a run whose verdicts all pass.
pub const EXIT_PASS: i32 = 0;
/// Exit code when at least one verdict fails.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for unusable input.
pub const EXIT_INPUT_ERROR: i32 = 2;

/// Spearman threshold shared by the monotonicity and correlation checks.
pub const RHO_THRESHOLD: f64 = -0.9;

pub const SUMMARY_HEADER: &str =
    "node,group_core,scheme,mask_bits,n,min_ns,q1_ns,median_ns,q3_ns,max_ns,mean_ns,freq_median_khz";

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no rows to analyze")]
    EmptyInput,
    #[error("input lengths differ: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("rank correlation undefined for constant input")]
    ConstantInput,
    #[error("summary is missing scheme {0:?}")]
    MissingScheme(&'static str),
    #[error("summary has {count} rows for scheme {family:?}; group by scheme only")]
    AmbiguousScheme { family: &'static str, count: usize },
    #[error("monotonicity check needs >= 3 distinct mask values, got {0}")]
    TooFewMasks(usize),
    #[error("summary has {count} rows for mask {mask}; group by mask_bits only")]
    AmbiguousMask { mask: u8, count: usize },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Type-7 quantile of an ascending-sorted sample: linear interpolation
/// between the order statistics at `(n - 1) * p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[sorted.len() - 1]
    }
}

fn ranks_with_ties(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Average 1-based rank of the tied run [i, j].
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average-rank tie handling.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            need: 3,
            got: x.len(),
        });
    }
    let rx = ranks_with_ties(x);
    let ry = ranks_with_ties(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(AnalysisError::ConstantInput);
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Grouping dimensions accepted by [`summarize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Node,
    Core,
    Scheme,
    MaskBits,
}

impl GroupKey {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "node" => Some(GroupKey::Node),
            "core" => Some(GroupKey::Core),
            "scheme" => Some(GroupKey::Scheme),
            "mask_bits" => Some(GroupKey::MaskBits),
            _ => None,
        }
    }
}

/// One duration row with the frequency context attached by
/// [`join_freq_durations`].
#[derive(Debug, Clone, PartialEq)]
pub struct JoinedRow {
    pub record: DurationRecord,
    /// Mean of the core's frequency samples inside the call window; the
    /// nearest sample when the window is empty; `None` when the core has no
    /// frequency data at all.
    pub freq_mean_khz: Option<f64>,
    /// Set when the empty-window fallback supplied the value.
    pub nearest_used: bool,
}

/// Wrap plain duration rows for APIs that work on joined rows.
pub fn without_freq(records: Vec<DurationRecord>) -> Vec<JoinedRow> {
    records
        .into_iter()
        .map(|record| JoinedRow {
            record,
            freq_mean_khz: None,
            nearest_used: false,
        })
        .collect()
}

/// Grouped five-number summary of call durations.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub node: Option<String>,
    pub group_core: Option<u32>,
    pub scheme: Option<String>,
    pub mask_bits: Option<u8>,
    pub n: usize,
    pub min_ns: f64,
    pub q1_ns: f64,
    pub median_ns: f64,
    pub q3_ns: f64,
    pub max_ns: f64,
    pub mean_ns: f64,
    pub freq_median_khz: Option<f64>,
}

impl SummaryRow {
    pub fn to_csv_row(&self) -> String {
        let opt_s = |v: &Option<String>| v.clone().unwrap_or_default();
        let opt_n = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
        let opt_m = |v: Option<u8>| v.map(|x| x.to_string()).unwrap_or_default();
        let opt_f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            opt_s(&self.node),
            opt_n(self.group_core),
            opt_s(&self.scheme),
            opt_m(self.mask_bits),
            self.n,
            self.min_ns,
            self.q1_ns,
            self.median_ns,
            self.q3_ns,
            self.max_ns,
            self.mean_ns,
            opt_f(self.freq_median_khz),
        )
    }
}

type Key = (Option<String>, Option<u32>, Option<String>, Option<u8>);

fn key_of(row: &JoinedRow, keys: &[GroupKey]) -> Key {
    let mut key: Key = (None, None, None, None);
    for k in keys {
        match k {
            GroupKey::Node => key.0 = Some(row.record.node.clone()),
            GroupKey::Core => key.1 = Some(row.record.core),
            GroupKey::Scheme => key.2 = Some(row.record.scheme.clone()),
            GroupKey::MaskBits => key.3 = row.record.mask_bits,
        }
    }
    key
}

/// Group rows by the requested keys and compute exact type-7 quartiles of
/// `duration_ns` per group, plus the median of joined frequencies where
/// present. Output order is the lexicographic key order, so identical
/// inputs produce identical summaries.
pub fn summarize(rows: &[JoinedRow], keys: &[GroupKey]) -> Result<Vec<SummaryRow>, AnalysisError> {
    if rows.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut groups: BTreeMap<Key, Vec<&JoinedRow>> = BTreeMap::new();
    for row in rows {
        groups.entry(key_of(row, keys)).or_default().push(row);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((node, group_core, scheme, mask_bits), members) in groups {
        let mut durations: Vec<f64> = members
            .iter()
            .map(|r| r.record.duration_ns as f64)
            .collect();
        durations.sort_by(f64::total_cmp);
        let mut freqs: Vec<f64> = members.iter().filter_map(|r| r.freq_mean_khz).collect();
        freqs.sort_by(f64::total_cmp);
        let n = durations.len();
        out.push(SummaryRow {
            node,
            group_core,
            scheme,
            mask_bits,
            n,
            min_ns: durations[0],
            q1_ns: quantile_sorted(&durations, 0.25),
            median_ns: quantile_sorted(&durations, 0.5),
            q3_ns: quantile_sorted(&durations, 0.75),
            max_ns: durations[n - 1],
            mean_ns: durations.iter().sum::<f64>() / n as f64,
            freq_median_khz: if freqs.is_empty() {
                None
            } else {
                Some(quantile_sorted(&freqs, 0.5))
            },
        });
    }
    Ok(out)
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<(), AnalysisError> {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_row());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| {
        AnalysisError::Trace(TraceError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, AnalysisError> {
    let io_err = |path: &Path, e| {
        AnalysisError::Trace(TraceError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    };
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| io_err(path, e))?,
        None => String::new(),
    };
    if header != SUMMARY_HEADER {
        return Err(AnalysisError::Trace(TraceError::BadHeader {
            path: path.to_path_buf(),
            expected: SUMMARY_HEADER,
            got: header,
        }));
    }
    let parse = |path: &Path, line: usize, field: &'static str, value: &str| {
        value
            .parse::<f64>()
            .map_err(|_| {
                AnalysisError::Trace(TraceError::BadField {
                    path: path.to_path_buf(),
                    line,
                    field,
                    value: value.to_string(),
                })
            })
    };
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(AnalysisError::Trace(TraceError::BadColumnCount {
                path: path.to_path_buf(),
                line: lineno,
                expected: 12,
                got: f.len(),
            }));
        }
        let non_empty = |s: &str| {
            if s.is_empty() {
                None
            } else {
                Some(s.to_string())
            }
        };
        rows.push(SummaryRow {
            node: non_empty(f[0]),
            group_core: if f[1].is_empty() {
                None
            } else {
                Some(parse(path, lineno, "group_core", f[1])? as u32)
            },
            scheme: non_empty(f[2]),
            mask_bits: if f[3].is_empty() {
                None
            } else {
                Some(parse(path, lineno, "mask_bits", f[3])? as u8)
            },
            n: parse(path, lineno, "n", f[4])? as usize,
            min_ns: parse(path, lineno, "min_ns", f[5])?,
            q1_ns: parse(path, lineno, "q1_ns", f[6])?,
            median_ns: parse(path, lineno, "median_ns", f[7])?,
            q3_ns: parse(path, lineno, "q3_ns", f[8])?,
            max_ns: parse(path, lineno, "max_ns", f[9])?,
            mean_ns: parse(path, lineno, "mean_ns", f[10])?,
            freq_median_khz: if f[11].is_empty() {
                None
            } else {
                Some(parse(path, lineno, "freq_median_khz", f[11])?)
            },
        });
    }
    Ok(rows)
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub statistic: f64,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} ({})",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

fn scheme_family(scheme: &str) -> &str {
    scheme.split(':').next().unwrap_or(scheme)
}

fn median_for_family(
    summary: &[SummaryRow],
    family: &'static str,
) -> Result<f64, AnalysisError> {
    let medians: Vec<f64> = summary
        .iter()
        .filter(|row| {
            row.scheme
                .as_deref()
                .map(|s| scheme_family(s) == family)
                .unwrap_or(false)
        })
        .map(|row| row.median_ns)
        .collect();
    match medians.len() {
        0 => Err(AnalysisError::MissingScheme(family)),
        1 => Ok(medians[0]),
        count => Err(AnalysisError::AmbiguousScheme { family, count }),
    }
}

/// Fig.-2-style layering: pass iff
/// `median(constant) < median(sequential) < median(random)` strictly. The
/// statistic is the smaller of the two median gaps.
pub fn ordering_check(summary: &[SummaryRow]) -> Result<Verdict, AnalysisError> {
    let constant = median_for_family(summary, "constant")?;
    let sequential = median_for_family(summary, "sequential")?;
    let random = median_for_family(summary, "random")?;
    let pass = constant < sequential && sequential < random;
    let gap = (sequential - constant).min(random - sequential);
    Ok(Verdict {
        name: "ordering_check".into(),
        pass,
        statistic: gap,
        detail: format!(
            "gap={gap}; medians constant={constant} sequential={sequential} random={random}"
        ),
    })
}

/// Mask-sweep monotonicity: pass iff Spearman(mask width, median duration)
/// is at most [`RHO_THRESHOLD`].
pub fn monotonicity_check(summary: &[SummaryRow]) -> Result<Verdict, AnalysisError> {
    let mut per_mask: BTreeMap<u8, usize> = BTreeMap::new();
    let mut masks = Vec::new();
    let mut medians = Vec::new();
    for row in summary {
        if let Some(mask) = row.mask_bits {
            *per_mask.entry(mask).or_default() += 1;
            masks.push(mask as f64);
            medians.push(row.median_ns);
        }
    }
    if let Some((&mask, &count)) = per_mask.iter().find(|(_, &count)| count > 1) {
        return Err(AnalysisError::AmbiguousMask { mask, count });
    }
    if per_mask.len() < 3 {
        return Err(AnalysisError::TooFewMasks(per_mask.len()));
    }
    match spearman(&masks, &medians) {
        Ok(rho) => Ok(Verdict {
            name: "monotonicity_check".into(),
            pass: rho <= RHO_THRESHOLD,
            statistic: rho,
            detail: format!("rho={rho}; masks={}", per_mask.len()),
        }),
        // Identical medians across every mask: no decrease, so the claim
        // fails even though the correlation itself is undefined.
        Err(AnalysisError::ConstantInput) => Ok(Verdict {
            name: "monotonicity_check".into(),
            pass: false,
            statistic: 0.0,
            detail: format!("medians constant across {} masks; rho undefined", per_mask.len()),
        }),
        Err(e) => Err(e),
    }
}

/// Attach the mean in-window core frequency to every duration row. Rows
/// whose window holds no sample fall back to the sample nearest the window
/// midpoint (flagged); rows of cores with no frequency data keep `None` and
/// are never dropped.
pub fn join_freq_durations(durations: &[DurationRecord], freqs: &[FreqRecord]) -> Vec<JoinedRow> {
    let mut per_core: BTreeMap<u32, Vec<(u64, u64)>> = BTreeMap::new();
    for rec in freqs {
        per_core
            .entry(rec.core)
            .or_default()
            .push((rec.timestamp_ns, rec.frequency_khz));
    }
    for samples in per_core.values_mut() {
        samples.sort_by_key(|&(ts, _)| ts);
    }

    durations
        .iter()
        .map(|record| {
            let samples = match per_core.get(&record.core) {
                Some(s) if !s.is_empty() => s,
                _ => {
                    return JoinedRow {
                        record: record.clone(),
                        freq_mean_khz: None,
                        nearest_used: false,
                    }
                }
            };
            let start = record.start_ns;
            let end = record.start_ns + record.duration_ns;
            let lo = samples.partition_point(|&(ts, _)| ts < start);
            let hi = samples.partition_point(|&(ts, _)| ts <= end);
            if lo < hi {
                let sum: f64 = samples[lo..hi].iter().map(|&(_, khz)| khz as f64).sum();
                JoinedRow {
                    record: record.clone(),
                    freq_mean_khz: Some(sum / (hi - lo) as f64),
                    nearest_used: false,
                }
            } else {
                let mid = start + record.duration_ns / 2;
                let nearest = samples
                    .iter()
                    .min_by_key(|&&(ts, _)| ts.abs_diff(mid))
                    .map(|&(_, khz)| khz as f64);
                JoinedRow {
                    record: record.clone(),
                    freq_mean_khz: nearest,
                    nearest_used: true,
                }
            }
        })
        .collect()
}

/// Spearman correlation between joined per-call mean frequency and
/// duration, over the rows that have frequency data.
pub fn freq_duration_spearman(joined: &[JoinedRow]) -> Result<f64, AnalysisError> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for row in joined {
        if let Some(freq) = row.freq_mean_khz {
            x.push(freq);
            y.push(row.record.duration_ns as f64);
        }
    }
    spearman(&x, &y)
}

/// The checks the `analyze` pipeline runs, selected by what the trace
/// contains: scheme ordering when all three families are present,
/// monotonicity when at least three mask widths are present, and the
/// frequency/duration correlation when frequency data joined.
pub fn standard_verdicts(joined: &[JoinedRow]) -> Result<Vec<Verdict>, AnalysisError> {
    let summary = summarize(joined, &[GroupKey::Scheme, GroupKey::MaskBits])?;
    let mut verdicts = Vec::new();

    let families: Vec<&str> = summary
        .iter()
        .filter_map(|r| r.scheme.as_deref().map(scheme_family))
        .collect();
    let has = |f: &str| families.contains(&f);
    if has("constant") && has("sequential") && has("random") {
        verdicts.push(ordering_check(&summary)?);
    }

    let masks: std::collections::BTreeSet<u8> =
        summary.iter().filter_map(|r| r.mask_bits).collect();
    if masks.len() >= 3 {
        verdicts.push(monotonicity_check(&summary)?);
    }

    if joined.iter().any(|r| r.freq_mean_khz.is_some()) {
        match freq_duration_spearman(joined) {
            Ok(rho) => verdicts.push(Verdict {
                name: "correlation_check".into(),
                pass: rho <= RHO_THRESHOLD,
                statistic: rho,
                detail: format!("rho={rho}; freq vs duration"),
            }),
            // Single-scheme traces have one frequency for every call; the
            // correlation is undefined there and the check does not apply.
            Err(AnalysisError::ConstantInput) | Err(AnalysisError::TooFewPoints { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(verdicts)
}

/// Write verdicts as line-oriented text, one per line.
pub fn write_verdicts(verdicts: &[Verdict], path: &Path) -> Result<(), AnalysisError> {
    let mut file = fs::File::create(path).map_err(|e| {
        AnalysisError::Trace(TraceError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    for v in verdicts {
        writeln!(file, "{v}").map_err(|e| {
            AnalysisError::Trace(TraceError::Io {
                path: path.to_path_buf(),
                source: e,
            })
        })?;
    }
    Ok(())
}

/// Map a verdict set to the process exit code contract.
pub fn exit_code(verdicts: &[Verdict]) -> i32 {
    if verdicts.iter().all(|v| v.pass) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
