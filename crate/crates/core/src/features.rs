//! Windowed RSRP variance features.
//!
//! The core quantity is the variance of RSRP over sub-windows of length
//! `dt`, averaged over a 2 s aggregation window; we write the resulting
//! feature `var_dt{dt}_lb{k}` where `k` indexes 2 s look-back intervals
//! behind the label window. Sub-windows are consecutive and non-overlapping,
//! and variance is the population (1/n) variance of the dBm values — the
//! paper's dB-domain convention, never linearized to mW.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{window_coverage, AreaId, AreaSpec, CountSeries, DataError, RsrpTrace};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("variance of empty input")]
    EmptyInput,
    #[error("invalid dt {dt}: must be in (0, {agg_len}]")]
    InvalidDt { dt: f64, agg_len: f64 },
    #[error("invalid feature spec: {0}")]
    InvalidSpec(String),
    #[error("no trace for day '{0}'")]
    MissingDay(String),
    #[error("feature table is empty: {0}")]
    EmptyTable(String),
    #[error("unknown feature column '{0}'")]
    UnknownColumn(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// Feature specification
// ---------------------------------------------------------------------------

/// Which 2 s window a look-back index `k = 0` refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LookbackAnchor {
    /// `k = 0` is the window coincident with the label window `[t, t+2)`.
    Coincident,
    /// `k = 0` is the window strictly before the label, `[t-2, t)`.
    StrictlyBefore,
}

/// The variance window sizes named in the sweep: 0.05 through 1.0 seconds.
pub const DEFAULT_DT_GRID: [f64; 9] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0];

/// Minimum fraction of expected samples a 2 s window needs before its
/// features count as present.
pub const DEFAULT_MIN_COVERAGE: f64 = 0.8;

/// Describes which variance features to extract and how to align them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// Variance window sizes, strictly increasing, each in `(0, agg_len]`.
    pub dt_grid: Vec<f64>,
    /// Aggregation window length in seconds.
    pub agg_len: f64,
    /// Shift between consecutive label windows in seconds.
    pub shift: f64,
    /// Number of 2 s look-back intervals (1..=7).
    pub lookback_k: usize,
    /// Coverage threshold below which a window's features are missing.
    pub min_coverage: f64,
    /// Alignment of look-back interval 0 relative to the label window.
    pub anchor: LookbackAnchor,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            dt_grid: DEFAULT_DT_GRID.to_vec(),
            agg_len: 2.0,
            shift: 1.0,
            lookback_k: 1,
            min_coverage: DEFAULT_MIN_COVERAGE,
            anchor: LookbackAnchor::Coincident,
        }
    }
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.dt_grid.is_empty() {
            return Err(FeatureError::InvalidSpec("dt_grid is empty".into()));
        }
        for w in self.dt_grid.windows(2) {
            if w[1] <= w[0] {
                return Err(FeatureError::InvalidSpec(format!(
                    "dt_grid not strictly increasing at {} after {}",
                    w[1], w[0]
                )));
            }
        }
        for &dt in &self.dt_grid {
            if !(dt > 0.0 && dt <= self.agg_len) {
                return Err(FeatureError::InvalidDt {
                    dt,
                    agg_len: self.agg_len,
                });
            }
        }
        if self.lookback_k < 1 {
            return Err(FeatureError::InvalidSpec("lookback_k must be >= 1".into()));
        }
        if !(self.shift > 0.0) || !(self.agg_len > 0.0) {
            return Err(FeatureError::InvalidSpec(
                "shift and agg_len must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.min_coverage) {
            return Err(FeatureError::InvalidSpec(format!(
                "min_coverage {} outside [0, 1]",
                self.min_coverage
            )));
        }
        Ok(())
    }

    /// Single-`dt`, single-interval spec — the correlation-analysis shape.
    pub fn single(dt: f64) -> Self {
        Self {
            dt_grid: vec![dt],
            lookback_k: 1,
            ..Self::default()
        }
    }

    /// Column names ordered by (dt, k).
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dt_grid.len() * self.lookback_k);
        for &dt in &self.dt_grid {
            for k in 0..self.lookback_k {
                names.push(feature_name(dt, k));
            }
        }
        names
    }

    /// Start of look-back window `k` for a label window starting at `t`.
    pub fn lookback_start(&self, t: f64, k: usize) -> f64 {
        let offset = match self.anchor {
            LookbackAnchor::Coincident => k as f64,
            LookbackAnchor::StrictlyBefore => (k + 1) as f64,
        };
        t - offset * self.agg_len
    }
}

/// `var_dt{dt}_lb{k}` with `dt` printed in its shortest exact form but
/// always with a decimal point (`0.05`, `0.1`, `1.0`).
pub fn feature_name(dt: f64, k: usize) -> String {
    let mut s = String::with_capacity(16);
    s.push_str("var_dt");
    write!(s, "{dt}").unwrap();
    if !s.contains('.') {
        s.push_str(".0");
    }
    write!(s, "_lb{k}").unwrap();
    s
}

// ---------------------------------------------------------------------------
// Variance operations
// ---------------------------------------------------------------------------

/// Population variance (divide by n) of the values.
pub fn window_variance(values: &[f64]) -> Result<f64, FeatureError> {
    if values.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    Ok(ss / n)
}

/// Number of samples in each `dt` sub-window of `[t0, t0 + agg_len)`.
/// A trailing partial sub-window is dropped.
pub fn subwindow_sample_counts(
    trace: &RsrpTrace,
    dt: f64,
    t0: f64,
    agg_len: f64,
) -> Result<Vec<usize>, FeatureError> {
    if !(dt > 0.0 && dt <= agg_len) {
        return Err(FeatureError::InvalidDt { dt, agg_len });
    }
    let n_sub = (agg_len / dt + 1e-9).floor() as usize;
    let mut counts = Vec::with_capacity(n_sub);
    for i in 0..n_sub {
        let lo = t0 + i as f64 * dt;
        let hi = t0 + (i + 1) as f64 * dt;
        counts.push(trace.range(lo, hi).len());
    }
    Ok(counts)
}

/// RSRP-Var(dt, agg_len) at window start `t0`.
///
/// Partitions `[t0, t0 + agg_len)` into consecutive non-overlapping
/// sub-windows of length `dt` (dropping a trailing partial sub-window),
/// takes the population variance of each, and returns the mean of the
/// sub-window variances. Returns `None` when overall coverage falls below
/// `min_coverage` or any sub-window holds fewer than 2 samples.
pub fn rsrp_var(
    trace: &RsrpTrace,
    dt: f64,
    t0: f64,
    agg_len: f64,
    min_coverage: f64,
) -> Result<Option<f64>, FeatureError> {
    if !(dt > 0.0 && dt <= agg_len) {
        return Err(FeatureError::InvalidDt { dt, agg_len });
    }
    let coverage = window_coverage(trace, t0, t0 + agg_len)?;
    if coverage < min_coverage {
        return Ok(None);
    }
    let n_sub = (agg_len / dt + 1e-9).floor() as usize;
    let mut acc = 0.0;
    for i in 0..n_sub {
        let lo = t0 + i as f64 * dt;
        let hi = t0 + (i + 1) as f64 * dt;
        let samples = trace.range(lo, hi);
        if samples.len() < 2 {
            return Ok(None);
        }
        let n = samples.len() as f64;
        let mean = samples.iter().map(|s| s.rsrp).sum::<f64>() / n;
        let ss = samples
            .iter()
            .map(|s| (s.rsrp - mean) * (s.rsrp - mean))
            .sum::<f64>();
        acc += ss / n;
    }
    Ok(Some(acc / n_sub as f64))
}

/// RSRP-Var(dt, 2s) on the 1 s-shifted window grid covering the trace:
/// `t0 = 0, shift, 2·shift, …` while `t0 + agg_len` stays within the span.
pub fn feature_series(
    trace: &RsrpTrace,
    dt: f64,
    spec: &FeatureSpec,
) -> Result<Vec<(f64, Option<f64>)>, FeatureError> {
    spec.validate()?;
    let end = trace.span_end();
    let mut out = Vec::new();
    let mut i = 0usize;
    loop {
        let t0 = i as f64 * spec.shift;
        if t0 + spec.agg_len > end + 1e-9 {
            break;
        }
        out.push((t0, rsrp_var(trace, dt, t0, spec.agg_len, spec.min_coverage)?));
        i += 1;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Feature table
// ---------------------------------------------------------------------------

/// One aligned training/evaluation sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub day_id: String,
    pub area_id: AreaId,
    /// Start of the label window, seconds since day start.
    pub t_label: f64,
    /// One value per feature name; `None` marks a missing feature.
    pub features: Vec<Option<f64>>,
    /// Ground-truth pedestrian count for the label window.
    pub label: u32,
}

impl FeatureRow {
    pub fn is_complete(&self) -> bool {
        self.features.iter().all(|f| f.is_some())
    }
}

/// Aligned rows of variance features and count labels, sorted by
/// `(day_id, t_label)`. Rows with any missing feature are kept (so time
/// series show holes) but flagged and excluded from training by default.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    feature_names: Vec<String>,
    rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(feature_names: Vec<String>, mut rows: Vec<FeatureRow>) -> Result<Self, FeatureError> {
        for row in &rows {
            if row.features.len() != feature_names.len() {
                return Err(FeatureError::InvalidSpec(format!(
                    "row at t={} has {} features, expected {}",
                    row.t_label,
                    row.features.len(),
                    feature_names.len()
                )));
            }
        }
        rows.sort_by(|a, b| {
            (a.day_id.as_str(), a.t_label)
                .partial_cmp(&(b.day_id.as_str(), b.t_label))
                .expect("t_label is finite")
        });
        Ok(Self {
            feature_names,
            rows,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn complete_rows(&self) -> impl Iterator<Item = &FeatureRow> {
        self.rows.iter().filter(|r| r.is_complete())
    }

    pub fn n_complete(&self) -> usize {
        self.rows.iter().filter(|r| r.is_complete()).count()
    }

    pub fn n_incomplete(&self) -> usize {
        self.rows.len() - self.n_complete()
    }

    /// Distinct day ids in row order.
    pub fn day_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for row in &self.rows {
            if ids.last().map(String::as_str) != Some(row.day_id.as_str()) {
                ids.push(row.day_id.clone());
            }
        }
        ids.dedup();
        ids
    }

    /// A new table holding only the named columns. Row completeness is
    /// re-evaluated against the selected columns, so a row missing an
    /// unselected feature becomes complete again.
    pub fn select_features(&self, names: &[&str]) -> Result<FeatureTable, FeatureError> {
        let indices: Vec<usize> = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| FeatureError::UnknownColumn((*n).to_string()))
            })
            .collect::<Result<_, _>>()?;
        let rows = self
            .rows
            .iter()
            .map(|r| FeatureRow {
                day_id: r.day_id.clone(),
                area_id: r.area_id,
                t_label: r.t_label,
                features: indices.iter().map(|&i| r.features[i]).collect(),
                label: r.label,
            })
            .collect();
        FeatureTable::new(names.iter().map(|s| s.to_string()).collect(), rows)
    }

    /// Rows whose day is in `days` (used to assemble train/test splits).
    pub fn filter_days(&self, days: &[&str]) -> FeatureTable {
        let rows = self
            .rows
            .iter()
            .filter(|r| days.contains(&r.day_id.as_str()))
            .cloned()
            .collect();
        FeatureTable {
            feature_names: self.feature_names.clone(),
            rows,
        }
    }

    /// Serializes as CSV: `day_id,area_id,t_label,label,<features…>`,
    /// missing features encoded as empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("day_id,area_id,t_label,label");
        for name in &self.feature_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for row in &self.rows {
            write!(
                out,
                "{},{},{},{}",
                row.day_id, row.area_id, row.t_label, row.label
            )
            .unwrap();
            for f in &row.features {
                out.push(',');
                if let Some(v) = f {
                    write!(out, "{v}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), FeatureError> {
        fs::write(path, self.to_csv()).map_err(|e| FeatureError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}

/// Builds the aligned feature table for one area.
///
/// For each label window starting at `t`, the feature `var_dt{dt}_lb{k}`
/// is RSRP-Var(dt, 2s) over the k-th look-back window behind (and, under
/// the coincident anchor, including) the label window.
pub fn build_table(
    traces: &BTreeMap<String, RsrpTrace>,
    counts: &[CountSeries],
    spec: &FeatureSpec,
    area: &AreaSpec,
) -> Result<FeatureTable, FeatureError> {
    spec.validate()?;
    let names = spec.feature_names();
    let mut rows = Vec::new();
    for series in counts {
        if series.area_id() != area.area_id {
            continue;
        }
        let trace = traces
            .get(series.day_id())
            .ok_or_else(|| FeatureError::MissingDay(series.day_id().to_string()))?;
        for w in series.windows() {
            let mut features = Vec::with_capacity(names.len());
            for &dt in &spec.dt_grid {
                for k in 0..spec.lookback_k {
                    let t0 = spec.lookback_start(w.t_start, k);
                    let value = if t0 < -1e-9 {
                        None // look-back reaches before the day started
                    } else {
                        rsrp_var(trace, dt, t0, spec.agg_len, spec.min_coverage)?
                    };
                    features.push(value);
                }
            }
            rows.push(FeatureRow {
                day_id: series.day_id().to_string(),
                area_id: series.area_id(),
                t_label: w.t_start,
                features,
                label: w.count,
            });
        }
    }
    if rows.is_empty() {
        return Err(FeatureError::EmptyTable(format!(
            "no label windows for area {}",
            area.area_id
        )));
    }
    if rows.iter().all(|r| !r.is_complete()) {
        return Err(FeatureError::EmptyTable(format!(
            "all {} rows for area {} have missing features",
            rows.len(),
            area.area_id
        )));
    }
    FeatureTable::new(names, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CountWindow, RsrpSample};
    use std::f64::consts::PI;

    fn trace_from_fn(day: &str, n: usize, f: impl Fn(f64) -> f64) -> RsrpTrace {
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 * 0.01;
                RsrpSample { t, rsrp: f(t) }
            })
            .collect();
        RsrpTrace::new(day, samples, 0.01).unwrap()
    }

    /// Independent variance oracle: Welford's online algorithm, scaled to
    /// the population convention.
    fn welford_population_variance(values: &[f64]) -> f64 {
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (i, &v) in values.iter().enumerate() {
            let n = (i + 1) as f64;
            let delta = v - mean;
            mean += delta / n;
            m2 += delta * (v - mean);
        }
        m2 / values.len() as f64
    }

    #[test]
    fn variance_of_constant_is_zero() {
        assert_eq!(window_variance(&[-80.0, -80.0, -80.0]).unwrap(), 0.0);
    }

    #[test]
    fn variance_two_values() {
        // mean -81, deviations ±1
        assert_eq!(window_variance(&[-80.0, -82.0]).unwrap(), 1.0);
    }

    #[test]
    fn variance_matches_welford_oracle() {
        let mut state = 12345u64;
        let values: Vec<f64> = (0..1000)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                -90.0 + 20.0 * ((state >> 11) as f64 / (1u64 << 53) as f64)
            })
            .collect();
        let got = window_variance(&values).unwrap();
        let want = welford_population_variance(&values);
        assert!(
            (got - want).abs() <= 1e-10 * want.abs().max(1.0),
            "got {got}, oracle {want}"
        );
    }

    #[test]
    fn variance_rejects_empty() {
        assert!(matches!(window_variance(&[]), Err(FeatureError::EmptyInput)));
    }

    #[test]
    fn rsrp_var_constant_trace_is_zero() {
        let trace = trace_from_fn("d", 400, |_| -90.0);
        for dt in [0.05, 0.1, 0.2, 0.5, 1.0, 2.0] {
            let v = rsrp_var(&trace, dt, 0.0, 2.0, 0.8).unwrap().unwrap();
            assert_eq!(v, 0.0, "dt={dt}");
        }
    }

    #[test]
    fn rsrp_var_sinusoid_closed_form() {
        // 10 Hz sinusoid, amplitude A, sampled at 100 Hz: each 0.1 s
        // sub-window holds one full cycle, variance A²/2.
        let a = 3.0;
        let trace = trace_from_fn("d", 400, |t| -90.0 + a * (2.0 * PI * 10.0 * t).sin());
        let v = rsrp_var(&trace, 0.1, 0.0, 2.0, 0.8).unwrap().unwrap();
        let expected = a * a / 2.0;
        assert!(
            (v - expected).abs() <= 0.01 * expected,
            "got {v}, expected {expected}"
        );
    }

    #[test]
    fn rsrp_var_invalid_dt() {
        let trace = trace_from_fn("d", 400, |_| -90.0);
        assert!(matches!(
            rsrp_var(&trace, 0.0, 0.0, 2.0, 0.8),
            Err(FeatureError::InvalidDt { .. })
        ));
        assert!(matches!(
            rsrp_var(&trace, 2.5, 0.0, 2.0, 0.8),
            Err(FeatureError::InvalidDt { .. })
        ));
    }

    #[test]
    fn rsrp_var_low_coverage_is_missing() {
        // 2 s window with only the first 0.8 s of samples → coverage 0.4.
        let trace = trace_from_fn("d", 80, |_| -90.0);
        let v = rsrp_var(&trace, 0.1, 0.0, 2.0, 0.8).unwrap();
        assert_eq!(v, None);
    }

    #[test]
    fn subwindow_counts_match_sampling_rate() {
        let trace = trace_from_fn("d", 400, |_| -90.0);
        let c01 = subwindow_sample_counts(&trace, 0.1, 0.0, 2.0).unwrap();
        assert_eq!(c01.len(), 20);
        assert!(c01.iter().all(|&c| c == 10), "0.1 s sub-windows: {c01:?}");
        let c02 = subwindow_sample_counts(&trace, 0.2, 0.0, 2.0).unwrap();
        assert_eq!(c02.len(), 10);
        assert!(c02.iter().all(|&c| c == 20), "0.2 s sub-windows: {c02:?}");
    }

    #[test]
    fn feature_series_window_count() {
        // 10 s regular trace, shift 1 s, agg 2 s → 9 entries (t0 = 0..8).
        let trace = trace_from_fn("d", 1000, |_| -90.0);
        let spec = FeatureSpec::single(0.1);
        let series = feature_series(&trace, 0.1, &spec).unwrap();
        assert_eq!(series.len(), 9);
        assert_eq!(series[0].0, 0.0);
        assert_eq!(series[8].0, 8.0);
        assert!(series.iter().all(|(_, v)| *v == Some(0.0)));
    }

    #[test]
    fn feature_series_gap_marks_missing() {
        // 10 s trace with samples deleted in [4, 6).
        let samples: Vec<RsrpSample> = (0..1000)
            .filter(|&i| !(400..600).contains(&i))
            .map(|i| RsrpSample {
                t: i as f64 * 0.01,
                rsrp: -90.0,
            })
            .collect();
        let trace = RsrpTrace::new("d", samples, 0.01).unwrap();
        let spec = FeatureSpec::single(0.1);
        let series = feature_series(&trace, 0.1, &spec).unwrap();
        for (t0, v) in &series {
            let missing = v.is_none();
            // Windows [3,5), [4,6), [5,7) lose ≥ 1 s of 2 s → coverage ≤ 0.5.
            let expect_missing = (3.0..=5.0).contains(t0);
            assert_eq!(missing, expect_missing, "t0={t0}, v={v:?}");
        }
    }

    #[test]
    fn rsrp_var_offset_invariant() {
        let trace = trace_from_fn("d", 400, |t| -90.0 + (t * 7.0).sin());
        let shifted = trace_from_fn("d", 400, |t| -40.0 + (t * 7.0).sin());
        let a = rsrp_var(&trace, 0.2, 0.0, 2.0, 0.8).unwrap().unwrap();
        let b = rsrp_var(&shifted, 0.2, 0.0, 2.0, 0.8).unwrap().unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn rsrp_var_scales_quadratically() {
        let trace = trace_from_fn("d", 400, |t| -90.0 + (t * 7.0).sin());
        let scaled = trace_from_fn("d", 400, |t| -90.0 + 3.0 * (t * 7.0).sin());
        let a = rsrp_var(&trace, 0.2, 0.0, 2.0, 0.8).unwrap().unwrap();
        let b = rsrp_var(&scaled, 0.2, 0.0, 2.0, 0.8).unwrap().unwrap();
        assert!((b - 9.0 * a).abs() <= 1e-9 * b.abs().max(1.0));
    }

    #[test]
    fn feature_names_ordering_and_format() {
        let spec = FeatureSpec {
            dt_grid: vec![0.05, 0.2, 1.0],
            lookback_k: 2,
            ..FeatureSpec::default()
        };
        assert_eq!(
            spec.feature_names(),
            vec![
                "var_dt0.05_lb0",
                "var_dt0.05_lb1",
                "var_dt0.2_lb0",
                "var_dt0.2_lb1",
                "var_dt1.0_lb0",
                "var_dt1.0_lb1",
            ]
        );
    }

    fn small_dataset(label_fn: impl Fn(usize) -> u32) -> (BTreeMap<String, RsrpTrace>, Vec<CountSeries>) {
        let trace = trace_from_fn("day01", 3000, |t| -90.0 + (t * 13.0).sin());
        let mut traces = BTreeMap::new();
        traces.insert("day01".to_string(), trace);
        let windows = (0..28)
            .map(|i| CountWindow {
                t_start: i as f64,
                count: label_fn(i),
            })
            .collect();
        let counts = vec![CountSeries::new("day01", AreaId::Small, windows, 2.0, 1.0).unwrap()];
        (traces, counts)
    }

    #[test]
    fn build_table_reduces_to_feature_series_for_k1() {
        let (traces, counts) = small_dataset(|i| (i % 4) as u32);
        let spec = FeatureSpec::single(0.1);
        let area = AreaSpec::new(AreaId::Small, 13.1, 4.0).unwrap();
        let table = build_table(&traces, &counts, &spec, &area).unwrap();
        assert_eq!(table.feature_names(), &["var_dt0.1_lb0".to_string()]);
        assert_eq!(table.rows().len(), 28);

        let series = feature_series(traces.get("day01").unwrap(), 0.1, &spec).unwrap();
        for row in table.rows() {
            let (_, v) = series
                .iter()
                .find(|(t0, _)| (*t0 - row.t_label).abs() < 1e-9)
                .expect("matching window");
            assert_eq!(row.features[0], *v);
        }
    }

    #[test]
    fn build_table_k7_column_count_and_missing_history() {
        let (traces, counts) = small_dataset(|i| (i % 4) as u32);
        let spec = FeatureSpec {
            dt_grid: vec![0.1, 0.2],
            lookback_k: 7,
            ..FeatureSpec::default()
        };
        let area = AreaSpec::new(AreaId::Small, 13.1, 4.0).unwrap();
        let table = build_table(&traces, &counts, &spec, &area).unwrap();
        assert_eq!(table.n_features(), 14);
        // Rows labelled before t = 12 lack full look-back history.
        for row in table.rows() {
            let expect_complete = row.t_label >= 12.0;
            assert_eq!(row.is_complete(), expect_complete, "t={}", row.t_label);
        }
    }

    #[test]
    fn build_table_missing_day_errors() {
        let (_, counts) = small_dataset(|_| 0);
        let traces = BTreeMap::new();
        let spec = FeatureSpec::single(0.1);
        let area = AreaSpec::new(AreaId::Small, 13.1, 4.0).unwrap();
        assert!(matches!(
            build_table(&traces, &counts, &spec, &area),
            Err(FeatureError::MissingDay(_))
        ));
    }

    #[test]
    fn build_table_deterministic() {
        let (traces, counts) = small_dataset(|i| (i % 5) as u32);
        let spec = FeatureSpec {
            dt_grid: vec![0.1, 0.5],
            lookback_k: 3,
            ..FeatureSpec::default()
        };
        let area = AreaSpec::new(AreaId::Small, 13.1, 4.0).unwrap();
        let a = build_table(&traces, &counts, &spec, &area).unwrap();
        let b = build_table(&traces, &counts, &spec, &area).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn select_features_reevaluates_completeness() {
        let names = vec!["a".to_string(), "b".to_string()];
        let rows = vec![FeatureRow {
            day_id: "d".into(),
            area_id: AreaId::Small,
            t_label: 0.0,
            features: vec![Some(1.0), None],
            label: 2,
        }];
        let table = FeatureTable::new(names, rows).unwrap();
        assert_eq!(table.n_complete(), 0);
        let only_a = table.select_features(&["a"]).unwrap();
        assert_eq!(only_a.n_complete(), 1);
    }

    #[test]
    fn strictly_before_anchor_shifts_windows() {
        let spec = FeatureSpec {
            anchor: LookbackAnchor::StrictlyBefore,
            ..FeatureSpec::default()
        };
        assert_eq!(spec.lookback_start(10.0, 0), 8.0);
        let coincident = FeatureSpec::default();
        assert_eq!(coincident.lookback_start(10.0, 0), 10.0);
        assert_eq!(coincident.lookback_start(10.0, 2), 6.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn variance_offset_invariance(
                values in proptest::collection::vec(-120.0f64..-40.0, 2..200),
                offset in -50.0f64..50.0,
            ) {
                let base = window_variance(&values).unwrap();
                let shifted: Vec<f64> = values.iter().map(|v| v + offset).collect();
                let moved = window_variance(&shifted).unwrap();
                prop_assert!((base - moved).abs() <= 1e-9 * base.max(1.0));
            }

            #[test]
            fn variance_nonnegative(values in proptest::collection::vec(-120.0f64..-40.0, 1..100)) {
                prop_assert!(window_variance(&values).unwrap() >= 0.0);
            }

            #[test]
            fn subwindow_count_formula(dt_idx in 0usize..4) {
                // For dt dividing 2.0 exactly, sub-window count = 2.0 / dt.
                let dt = [0.1, 0.2, 0.5, 1.0][dt_idx];
                let samples = (0..400).map(|i| crate::data::RsrpSample {
                    t: i as f64 * 0.01,
                    rsrp: -90.0,
                }).collect();
                let trace = crate::data::RsrpTrace::new("d", samples, 0.01).unwrap();
                let counts = subwindow_sample_counts(&trace, dt, 0.0, 2.0).unwrap();
                prop_assert_eq!(counts.len(), (2.0 / dt).round() as usize);
            }
        }
    }
}
