//! Trace file schemas shared by the harness, the frequency monitor, the
//! simulator and the analysis pipeline.
//!
//! Three file kinds exist, all plain text, all base-10, no locale:
//!
//! * durations CSV, header
//!   `node,core,call_index,scheme,mask_bits,seed,matrix_order,kernel,start_ns,duration_ns`;
//! * frequency CSV, header `timestamp_ns,core,frequency_khz`;
//! * metadata, line-oriented `key=value`.
//!
//! Every field round-trips losslessly: integers stay integers, scheme text
//! is the canonical `InitSpec` form, and `mask_bits` is empty for schemes
//! without a mask.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const DURATIONS_FILE: &str = "durations.csv";
pub const FREQ_FILE: &str = "freq.csv";
pub const METADATA_FILE: &str = "metadata.txt";

pub const DURATIONS_HEADER: &str =
    "node,core,call_index,scheme,mask_bits,seed,matrix_order,kernel,start_ns,duration_ns";
pub const FREQ_HEADER: &str = "timestamp_ns,core,frequency_khz";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: expected header {expected:?}, got {got:?}")]
    BadHeader {
        path: PathBuf,
        expected: &'static str,
        got: String,
    },
    #[error("{path}:{line}: expected {expected} fields, got {got}")]
    BadColumnCount {
        path: PathBuf,
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("{path}:{line}: bad {field} value {value:?}")]
    BadField {
        path: PathBuf,
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("field {field} contains a comma: {value:?}")]
    CommaInField { field: &'static str, value: String },
    #[error("duration must be positive (core {core}, call {call_index})")]
    NonPositiveDuration { core: u32, call_index: u32 },
}

impl TraceError {
    fn io(path: &Path, source: io::Error) -> Self {
        TraceError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// One timed kernel call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DurationRecord {
    pub node: String,
    pub core: u32,
    pub call_index: u32,
    /// Canonical `InitSpec` text, e.g. `constant:0.987` or `masked:26`.
    pub scheme: String,
    /// Mask width for masked schemes, empty column otherwise.
    pub mask_bits: Option<u8>,
    pub seed: u64,
    pub matrix_order: u32,
    pub kernel: String,
    pub start_ns: u64,
    pub duration_ns: u64,
}

impl DurationRecord {
    pub fn to_csv_row(&self) -> String {
        let mask = self.mask_bits.map(|m| m.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.node,
            self.core,
            self.call_index,
            self.scheme,
            mask,
            self.seed,
            self.matrix_order,
            self.kernel,
            self.start_ns,
            self.duration_ns
        )
    }

    fn validate(&self) -> Result<(), TraceError> {
        for (field, value) in [
            ("node", &self.node),
            ("scheme", &self.scheme),
            ("kernel", &self.kernel),
        ] {
            if value.contains(',') {
                return Err(TraceError::CommaInField {
                    field,
                    value: value.clone(),
                });
            }
        }
        if self.duration_ns == 0 {
            return Err(TraceError::NonPositiveDuration {
                core: self.core,
                call_index: self.call_index,
            });
        }
        Ok(())
    }
}

/// One per-core frequency reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreqRecord {
    pub timestamp_ns: u64,
    pub core: u32,
    pub frequency_khz: u64,
}

impl FreqRecord {
    pub fn to_csv_row(&self) -> String {
        format!("{},{},{}", self.timestamp_ns, self.core, self.frequency_khz)
    }
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    field: &'static str,
    value: &str,
) -> Result<T, TraceError> {
    value.parse().map_err(|_| TraceError::BadField {
        path: path.to_path_buf(),
        line,
        field,
        value: value.to_string(),
    })
}

/// Sequential writer for one durations file; writes the header on creation.
pub struct DurationWriter {
    path: PathBuf,
    out: BufWriter<fs::File>,
}

impl DurationWriter {
    pub fn create(path: &Path) -> Result<Self, TraceError> {
        let file = fs::File::create(path).map_err(|e| TraceError::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{DURATIONS_HEADER}").map_err(|e| TraceError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out,
        })
    }

    pub fn write(&mut self, rec: &DurationRecord) -> Result<(), TraceError> {
        rec.validate()?;
        writeln!(self.out, "{}", rec.to_csv_row()).map_err(|e| TraceError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), TraceError> {
        self.out.flush().map_err(|e| TraceError::io(&self.path, e))
    }
}

/// Sequential writer for one frequency file; writes the header on creation.
pub struct FreqWriter {
    path: PathBuf,
    out: BufWriter<fs::File>,
}

impl FreqWriter {
    pub fn create(path: &Path) -> Result<Self, TraceError> {
        let file = fs::File::create(path).map_err(|e| TraceError::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{FREQ_HEADER}").map_err(|e| TraceError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out,
        })
    }

    pub fn write(&mut self, rec: &FreqRecord) -> Result<(), TraceError> {
        writeln!(self.out, "{}", rec.to_csv_row()).map_err(|e| TraceError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), TraceError> {
        self.out.flush().map_err(|e| TraceError::io(&self.path, e))
    }
}

fn read_header(
    lines: &mut std::iter::Enumerate<io::Lines<BufReader<fs::File>>>,
    path: &Path,
    expected: &'static str,
) -> Result<(), TraceError> {
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| TraceError::io(path, e))?,
        None => String::new(),
    };
    if header != expected {
        return Err(TraceError::BadHeader {
            path: path.to_path_buf(),
            expected,
            got: header,
        });
    }
    Ok(())
}

pub fn read_durations(path: &Path) -> Result<Vec<DurationRecord>, TraceError> {
    let file = fs::File::open(path).map_err(|e| TraceError::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    read_header(&mut lines, path, DURATIONS_HEADER)?;
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| TraceError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(TraceError::BadColumnCount {
                path: path.to_path_buf(),
                line: lineno,
                expected: 10,
                got: fields.len(),
            });
        }
        let mask_bits = if fields[4].is_empty() {
            None
        } else {
            Some(parse_field(path, lineno, "mask_bits", fields[4])?)
        };
        records.push(DurationRecord {
            node: fields[0].to_string(),
            core: parse_field(path, lineno, "core", fields[1])?,
            call_index: parse_field(path, lineno, "call_index", fields[2])?,
            scheme: fields[3].to_string(),
            mask_bits,
            seed: parse_field(path, lineno, "seed", fields[5])?,
            matrix_order: parse_field(path, lineno, "matrix_order", fields[6])?,
            kernel: fields[7].to_string(),
            start_ns: parse_field(path, lineno, "start_ns", fields[8])?,
            duration_ns: parse_field(path, lineno, "duration_ns", fields[9])?,
        });
    }
    Ok(records)
}

pub fn read_freqs(path: &Path) -> Result<Vec<FreqRecord>, TraceError> {
    let file = fs::File::open(path).map_err(|e| TraceError::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    read_header(&mut lines, path, FREQ_HEADER)?;
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| TraceError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(TraceError::BadColumnCount {
                path: path.to_path_buf(),
                line: lineno,
                expected: 3,
                got: fields.len(),
            });
        }
        records.push(FreqRecord {
            timestamp_ns: parse_field(path, lineno, "timestamp_ns", fields[0])?,
            core: parse_field(path, lineno, "core", fields[1])?,
            frequency_khz: parse_field(path, lineno, "frequency_khz", fields[2])?,
        });
    }
    Ok(records)
}

/// Ordered `key=value` run metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn write_to(&self, path: &Path) -> Result<(), TraceError> {
        let mut text = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(text, "{k}={v}");
        }
        fs::write(path, text).map_err(|e| TraceError::io(path, e))
    }

    pub fn read_from(path: &Path) -> Result<Self, TraceError> {
        let text = fs::read_to_string(path).map_err(|e| TraceError::io(path, e))?;
        let mut meta = Metadata::new();
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => meta.push(k, v),
                None => {
                    return Err(TraceError::BadField {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        field: "metadata",
                        value: line.to_string(),
                    })
                }
            }
        }
        Ok(meta)
    }
}

/// Output files of one experiment or simulation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunArtifacts {
    pub durations_path: PathBuf,
    pub freq_path: PathBuf,
    pub metadata_path: PathBuf,
}

impl RunArtifacts {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            durations_path: dir.join(DURATIONS_FILE),
            freq_path: dir.join(FREQ_FILE),
            metadata_path: dir.join(METADATA_FILE),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_duration() -> DurationRecord {
        DurationRecord {
            node: "dahu-1".to_string(),
            core: 3,
            call_index: 17,
            scheme: "masked:26".to_string(),
            mask_bits: Some(26),
            seed: 123456789,
            matrix_order: 2048,
            kernel: "blocked".to_string(),
            start_ns: 987654321,
            duration_ns: 223805000,
        }
    }

    #[test]
    fn duration_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(DURATIONS_FILE);
        let mut recs = vec![sample_duration()];
        recs.push(DurationRecord {
            scheme: "constant:0.987".to_string(),
            mask_bits: None,
            ..sample_duration()
        });
        let mut w = DurationWriter::create(&path).unwrap();
        for r in &recs {
            w.write(r).unwrap();
        }
        w.finish().unwrap();
        let back = read_durations(&path).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn freq_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(FREQ_FILE);
        let recs = vec![
            FreqRecord {
                timestamp_ns: 0,
                core: 0,
                frequency_khz: 3_700_000,
            },
            FreqRecord {
                timestamp_ns: 1_000_000_000,
                core: 1,
                frequency_khz: 2_400_000,
            },
        ];
        let mut w = FreqWriter::create(&path).unwrap();
        for r in &recs {
            w.write(r).unwrap();
        }
        w.finish().unwrap();
        assert_eq!(read_freqs(&path).unwrap(), recs);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            format!("{DURATIONS_HEADER}\nnode,zzz,0,random,,1,64,naive,0,100\n"),
        )
        .unwrap();
        let err = read_durations(&path).unwrap_err();
        match err {
            TraceError::BadField { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "core");
            }
            other => panic!("unexpected error {other:?}"),
        }

        std::fs::write(&path, "wrong,header\n").unwrap();
        assert!(matches!(
            read_durations(&path).unwrap_err(),
            TraceError::BadHeader { .. }
        ));
    }

    #[test]
    fn rejects_zero_duration_and_commas() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(DURATIONS_FILE);
        let mut w = DurationWriter::create(&path).unwrap();
        let mut rec = sample_duration();
        rec.duration_ns = 0;
        assert!(matches!(
            w.write(&rec).unwrap_err(),
            TraceError::NonPositiveDuration { .. }
        ));
        let mut rec = sample_duration();
        rec.node = "a,b".to_string();
        assert!(matches!(
            w.write(&rec).unwrap_err(),
            TraceError::CommaInField { .. }
        ));
    }

    #[test]
    fn metadata_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(METADATA_FILE);
        let mut meta = Metadata::new();
        meta.push("run_id", "sim_42_abc");
        meta.push("matrix_order", 2048);
        meta.push("scheme", "constant:1");
        meta.write_to(&path).unwrap();
        let back = Metadata::read_from(&path).unwrap();
        assert_eq!(back, meta);
        assert_eq!(back.get("matrix_order"), Some("2048"));
        assert_eq!(back.get("missing"), None);
    }
}
