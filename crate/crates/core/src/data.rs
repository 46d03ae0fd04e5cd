//! Typed ingestion, validation, and windowing of RSRP traces and
//! pedestrian-count labels.
//!
//! One file per day per stream; timestamps are seconds from day start.
//! RSRP CSVs carry `t_seconds,rsrp_dbm` rows, count CSVs carry
//! `t_start_seconds,count` rows, both with a mandatory single header line,
//! UTF-8, LF line endings and `.` as the decimal separator.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Samples spaced further apart than this factor times the nominal interval
/// open a [`GapInterval`]. Tolerates timing jitter while catching dropouts.
pub const DEFAULT_GAP_FACTOR: f64 = 3.0;

/// Spacing tolerance for the count-window grid, in seconds.
pub const SPACING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: parse error: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}:{line}: non-increasing timestamp {t} (previous {prev})")]
    Order {
        path: String,
        line: usize,
        t: f64,
        prev: f64,
    },
    #[error("{path}: file contains no data rows")]
    Empty { path: String },
    #[error("{path}:{line}: negative count {count}")]
    NegativeCount {
        path: String,
        line: usize,
        count: i64,
    },
    #[error("{path}:{line}: window spacing {got} differs from shift {shift}")]
    Spacing {
        path: String,
        line: usize,
        got: f64,
        shift: f64,
    },
    #[error("degenerate window: t1 ({t1}) must exceed t0 ({t0})")]
    DegenerateWindow { t0: f64, t1: f64 },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid count series: {0}")]
    InvalidSeries(String),
    #[error("invalid area spec: {0}")]
    InvalidArea(String),
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

// ---------------------------------------------------------------------------
// Counting areas
// ---------------------------------------------------------------------------

/// The three counting areas defined along the monitored street.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaId {
    Small,
    Medium,
    Large,
}

impl AreaId {
    pub const ALL: [AreaId; 3] = [AreaId::Small, AreaId::Medium, AreaId::Large];

    pub fn as_str(&self) -> &'static str {
        match self {
            AreaId::Small => "small",
            AreaId::Medium => "medium",
            AreaId::Large => "large",
        }
    }
}

impl fmt::Display for AreaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AreaId {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, DataError> {
        match s {
            "small" => Ok(AreaId::Small),
            "medium" => Ok(AreaId::Medium),
            "large" => Ok(AreaId::Large),
            other => Err(DataError::InvalidArea(format!(
                "unknown area id '{other}' (expected small, medium or large)"
            ))),
        }
    }
}

/// Physical description of one counting area.
///
/// `effective_lookback_s` is how far back variance features stay informative
/// for this area; it is spent as `effective_lookback_s / 2` two-second
/// look-back intervals during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaSpec {
    pub area_id: AreaId,
    pub area_m2: f64,
    pub effective_lookback_s: f64,
}

impl AreaSpec {
    pub fn new(area_id: AreaId, area_m2: f64, effective_lookback_s: f64) -> Result<Self, DataError> {
        if !(area_m2 > 0.0) {
            return Err(DataError::InvalidArea(format!(
                "area_m2 must be positive, got {area_m2}"
            )));
        }
        if ![4.0, 6.0, 8.0].contains(&effective_lookback_s) {
            return Err(DataError::InvalidArea(format!(
                "effective_lookback_s must be 4, 6 or 8 seconds, got {effective_lookback_s}"
            )));
        }
        Ok(Self {
            area_id,
            area_m2,
            effective_lookback_s,
        })
    }

    /// The 13.1 / 27.0 / 66.9 m² street areas with 4 / 6 / 8 s look-backs.
    pub fn defaults() -> Vec<AreaSpec> {
        vec![
            AreaSpec {
                area_id: AreaId::Small,
                area_m2: 13.1,
                effective_lookback_s: 4.0,
            },
            AreaSpec {
                area_id: AreaId::Medium,
                area_m2: 27.0,
                effective_lookback_s: 6.0,
            },
            AreaSpec {
                area_id: AreaId::Large,
                area_m2: 66.9,
                effective_lookback_s: 8.0,
            },
        ]
    }
}

// ---------------------------------------------------------------------------
// RSRP traces
// ---------------------------------------------------------------------------

/// One sample of received power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsrpSample {
    /// Seconds since day start.
    pub t: f64,
    /// Received power in dBm.
    pub rsrp: f64,
}

/// Timestamped received-power series for one measurement day.
///
/// Immutable after construction; sample times are strictly increasing and
/// all power values finite.
#[derive(Debug, Clone, PartialEq)]
pub struct RsrpTrace {
    day_id: String,
    samples: Vec<RsrpSample>,
    nominal_interval: f64,
}

/// Nominal RSRP sampling interval in seconds (100 Hz).
pub const DEFAULT_SAMPLE_INTERVAL: f64 = 0.01;

impl RsrpTrace {
    pub fn new(
        day_id: impl Into<String>,
        samples: Vec<RsrpSample>,
        nominal_interval: f64,
    ) -> Result<Self, DataError> {
        if !(nominal_interval > 0.0) {
            return Err(DataError::InvalidTrace(format!(
                "nominal_interval must be positive, got {nominal_interval}"
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.t.is_finite() || !s.rsrp.is_finite() {
                return Err(DataError::InvalidTrace(format!(
                    "non-finite sample at index {i}: t={}, rsrp={}",
                    s.t, s.rsrp
                )));
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(DataError::InvalidTrace(format!(
                    "timestamps not strictly increasing at index {i}: {} after {}",
                    s.t,
                    samples[i - 1].t
                )));
            }
        }
        Ok(Self {
            day_id: day_id.into(),
            samples,
            nominal_interval,
        })
    }

    pub fn day_id(&self) -> &str {
        &self.day_id
    }

    pub fn samples(&self) -> &[RsrpSample] {
        &self.samples
    }

    pub fn nominal_interval(&self) -> f64 {
        self.nominal_interval
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// End of the sampled span: last sample time plus one nominal interval.
    pub fn span_end(&self) -> f64 {
        match self.samples.last() {
            Some(s) => s.t + self.nominal_interval,
            None => 0.0,
        }
    }

    /// Index of the first sample with `t >= t0`.
    pub fn lower_bound(&self, t0: f64) -> usize {
        self.samples.partition_point(|s| s.t < t0)
    }

    /// Samples with `t` in the half-open interval `[t0, t1)`.
    pub fn range(&self, t0: f64, t1: f64) -> &[RsrpSample] {
        let lo = self.lower_bound(t0);
        let hi = self.samples.partition_point(|s| s.t < t1);
        &self.samples[lo..hi]
    }
}

/// Open time interval with no samples, attributed to packet loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapInterval {
    pub start: f64,
    pub end: f64,
}

impl GapInterval {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }
}

/// Finds every consecutive sample pair spaced further apart than
/// `gap_factor` times the nominal interval. The returned intervals span the
/// open time between the two samples and are disjoint and sorted.
pub fn detect_gaps(trace: &RsrpTrace, gap_factor: f64) -> Vec<GapInterval> {
    let threshold = gap_factor * trace.nominal_interval();
    trace
        .samples()
        .windows(2)
        .filter(|w| w[1].t - w[0].t > threshold)
        .map(|w| GapInterval {
            start: w[0].t,
            end: w[1].t,
        })
        .collect()
}

/// Fraction of the expected sample count actually present in `[t0, t1)`,
/// clamped to `[0, 1]`.
pub fn window_coverage(trace: &RsrpTrace, t0: f64, t1: f64) -> Result<f64, DataError> {
    if !(t1 > t0) {
        return Err(DataError::DegenerateWindow { t0, t1 });
    }
    let present = trace.range(t0, t1).len() as f64;
    let expected = (t1 - t0) / trace.nominal_interval();
    Ok((present / expected).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Count series
// ---------------------------------------------------------------------------

/// One ground-truth label: pedestrian count on the window starting at `t_start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountWindow {
    pub t_start: f64,
    pub count: u32,
}

/// Per-area ground-truth pedestrian counts on 2 s windows shifted by 1 s.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSeries {
    day_id: String,
    area_id: AreaId,
    windows: Vec<CountWindow>,
    window_len: f64,
    shift: f64,
}

/// Pedestrian-count aggregation window, in seconds.
pub const DEFAULT_WINDOW_LEN: f64 = 2.0;
/// Shift between consecutive count windows, in seconds.
pub const DEFAULT_SHIFT: f64 = 1.0;

impl CountSeries {
    pub fn new(
        day_id: impl Into<String>,
        area_id: AreaId,
        windows: Vec<CountWindow>,
        window_len: f64,
        shift: f64,
    ) -> Result<Self, DataError> {
        if !(window_len > 0.0) || !(shift > 0.0) {
            return Err(DataError::InvalidSeries(format!(
                "window_len ({window_len}) and shift ({shift}) must be positive"
            )));
        }
        for (i, w) in windows.iter().enumerate() {
            if !w.t_start.is_finite() {
                return Err(DataError::InvalidSeries(format!(
                    "non-finite t_start at index {i}"
                )));
            }
            if i > 0 {
                let dt = w.t_start - windows[i - 1].t_start;
                if (dt - shift).abs() > SPACING_TOLERANCE {
                    return Err(DataError::InvalidSeries(format!(
                        "window spacing {dt} at index {i} differs from shift {shift}"
                    )));
                }
            }
        }
        Ok(Self {
            day_id: day_id.into(),
            area_id,
            windows,
            window_len,
            shift,
        })
    }

    pub fn day_id(&self) -> &str {
        &self.day_id
    }

    pub fn area_id(&self) -> AreaId {
        self.area_id
    }

    pub fn windows(&self) -> &[CountWindow] {
        &self.windows
    }

    pub fn window_len(&self) -> f64 {
        self.window_len
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

// ---------------------------------------------------------------------------
// CSV loading / saving
// ---------------------------------------------------------------------------

/// Derives a day id from a file name by stripping a known stream suffix,
/// e.g. `day03_rsrp.csv` → `day03`, `day03_counts_small.csv` → `day03`.
fn day_id_from_path(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    for suffix in ["_rsrp", "_counts_small", "_counts_medium", "_counts_large"] {
        if let Some(prefix) = stem.strip_suffix(suffix) {
            return prefix.to_string();
        }
    }
    stem
}

fn parse_f64(field: &str, path: &Path, line: usize, what: &str) -> Result<f64, DataError> {
    field.trim().parse::<f64>().map_err(|_| DataError::Parse {
        path: path.display().to_string(),
        line,
        msg: format!("invalid {what} '{field}'"),
    })
}

/// Loads an RSRP trace from a `t_seconds,rsrp_dbm` CSV.
///
/// The day id is derived from the file name (`day03_rsrp.csv` → `day03`).
/// Line numbers in errors count from 1 and include the header line.
pub fn load_rsrp_csv(path: &Path) -> Result<RsrpTrace, DataError> {
    let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = content.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| DataError::Empty {
        path: path.display().to_string(),
    })?;
    if header.trim() != "t_seconds,rsrp_dbm" {
        return Err(DataError::Parse {
            path: path.display().to_string(),
            line: 1,
            msg: format!("expected header 't_seconds,rsrp_dbm', got '{header}'"),
        });
    }

    let mut samples = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1; // 1-based, header is line 1
        if raw.trim().is_empty() {
            continue;
        }
        let mut fields = raw.split(',');
        let (Some(tf), Some(rf), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(DataError::Parse {
                path: path.display().to_string(),
                line,
                msg: format!("expected 2 fields, got '{raw}'"),
            });
        };
        let t = parse_f64(tf, path, line, "t_seconds")?;
        let rsrp = parse_f64(rf, path, line, "rsrp_dbm")?;
        if !t.is_finite() || !rsrp.is_finite() {
            return Err(DataError::Parse {
                path: path.display().to_string(),
                line,
                msg: format!("non-finite value in '{raw}'"),
            });
        }
        if let Some(prev) = samples.last() {
            let prev: &RsrpSample = prev;
            if t <= prev.t {
                return Err(DataError::Order {
                    path: path.display().to_string(),
                    line,
                    t,
                    prev: prev.t,
                });
            }
        }
        samples.push(RsrpSample { t, rsrp });
    }
    if samples.is_empty() {
        return Err(DataError::Empty {
            path: path.display().to_string(),
        });
    }
    RsrpTrace::new(day_id_from_path(path), samples, DEFAULT_SAMPLE_INTERVAL)
}

/// Writes a trace as a `t_seconds,rsrp_dbm` CSV. Values are formatted with
/// the shortest representation that parses back to the identical bits, so a
/// save-then-load round trip is exact.
pub fn save_rsrp_csv(trace: &RsrpTrace, path: &Path) -> Result<(), DataError> {
    let mut out = Vec::with_capacity(trace.len() * 24 + 32);
    out.extend_from_slice(b"t_seconds,rsrp_dbm\n");
    for s in trace.samples() {
        writeln!(out, "{},{}", s.t, s.rsrp).expect("write to Vec cannot fail");
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Loads a count series from a `t_start_seconds,count` CSV.
///
/// Counts must be non-negative integers and the window grid must be spaced
/// by exactly the default 1 s shift (within [`SPACING_TOLERANCE`]).
pub fn load_counts_csv(path: &Path, area_id: AreaId) -> Result<CountSeries, DataError> {
    let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = content.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| DataError::Empty {
        path: path.display().to_string(),
    })?;
    if header.trim() != "t_start_seconds,count" {
        return Err(DataError::Parse {
            path: path.display().to_string(),
            line: 1,
            msg: format!("expected header 't_start_seconds,count', got '{header}'"),
        });
    }

    let mut windows: Vec<CountWindow> = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut fields = raw.split(',');
        let (Some(tf), Some(cf), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(DataError::Parse {
                path: path.display().to_string(),
                line,
                msg: format!("expected 2 fields, got '{raw}'"),
            });
        };
        let t_start = parse_f64(tf, path, line, "t_start_seconds")?;
        let count: i64 = cf.trim().parse().map_err(|_| DataError::Parse {
            path: path.display().to_string(),
            line,
            msg: format!("invalid count '{cf}' (must be an integer)"),
        })?;
        if count < 0 {
            return Err(DataError::NegativeCount {
                path: path.display().to_string(),
                line,
                count,
            });
        }
        if let Some(prev) = windows.last() {
            let dt = t_start - prev.t_start;
            if (dt - DEFAULT_SHIFT).abs() > SPACING_TOLERANCE {
                return Err(DataError::Spacing {
                    path: path.display().to_string(),
                    line,
                    got: dt,
                    shift: DEFAULT_SHIFT,
                });
            }
        }
        windows.push(CountWindow {
            t_start,
            count: count as u32,
        });
    }
    if windows.is_empty() {
        return Err(DataError::Empty {
            path: path.display().to_string(),
        });
    }
    CountSeries::new(
        day_id_from_path(path),
        area_id,
        windows,
        DEFAULT_WINDOW_LEN,
        DEFAULT_SHIFT,
    )
}

/// Writes a count series as a `t_start_seconds,count` CSV (exact round trip).
pub fn save_counts_csv(series: &CountSeries, path: &Path) -> Result<(), DataError> {
    let mut out = Vec::with_capacity(series.len() * 12 + 32);
    out.extend_from_slice(b"t_start_seconds,count\n");
    for w in series.windows() {
        writeln!(out, "{},{}", w.t_start, w.count).expect("write to Vec cannot fail");
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}
