//! Rank correlation, error metrics, and distributional summaries.
//!
//! Two Spearman variants are provided. [`spearman_eq1`] is the textbook
//! rank-difference formula ρ = 1 − 6·Σd²/(N(N²−1)), which is exact only
//! without ties; [`spearman`] is the Pearson correlation of average ranks,
//! which handles the pervasive ties of small integer counts and reduces to
//! the former on tie-free data. The tie-corrected form is the default
//! throughout the pipeline.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} samples, got {got}")]
    TooFew { got: usize, need: usize },
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("negative error value {value} at index {index}")]
    NegativeError { index: usize, value: f64 },
}

/// How a correlation was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationMethod {
    /// Rank-difference shortcut, exact only without ties.
    Eq1,
    /// Pearson correlation of average ranks (tie-corrected).
    TieCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult {
    pub rho: f64,
    pub n_samples: usize,
    pub method: CorrelationMethod,
}

fn check_paired(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(StatsError::TooFew {
            got: x.len(),
            need: 2,
        });
    }
    for (i, v) in x.iter().chain(y.iter()).enumerate() {
        if !v.is_finite() {
            return Err(StatsError::NonFinite(i % x.len()));
        }
    }
    Ok(())
}

/// Ranks 1..n with tied values receiving the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(StatsError::NonFinite(i));
        }
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));

    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the mean of ranks i+1..=j+1
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    Ok(ranks)
}

/// Spearman's ρ by the rank-difference formula:
/// ρ = 1 − 6·Σdᵢ² / (N(N²−1)), dᵢ = rank(xᵢ) − rank(yᵢ).
pub fn spearman_eq1(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    check_paired(x, y)?;
    let rx = average_ranks(x)?;
    let ry = average_ranks(y)?;
    let n = x.len() as f64;
    let sum_d2: f64 = rx
        .iter()
        .zip(ry.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let rho = 1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0));
    Ok(CorrelationResult {
        rho: rho.clamp(-1.0, 1.0),
        n_samples: x.len(),
        method: CorrelationMethod::Eq1,
    })
}

/// Tie-corrected Spearman's ρ: Pearson correlation of the average-rank
/// vectors. Equals [`spearman_eq1`] when neither input has ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    check_paired(x, y)?;
    let rx = average_ranks(x)?;
    let ry = average_ranks(y)?;
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(ry.iter()) {
        let da = a - mx;
        let db = b - my;
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::UndefinedCorrelation(
            "zero rank variance (constant input)".into(),
        ));
    }
    let rho = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(CorrelationResult {
        rho: rho.clamp(-1.0, 1.0),
        n_samples: x.len(),
        method: CorrelationMethod::TieCorrected,
    })
}

/// Root mean squared error between predictions and ground truth.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64, StatsError> {
    if pred.len() != truth.len() {
        return Err(StatsError::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(StatsError::Empty);
    }
    let mse = pred
        .iter()
        .zip(truth.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64;
    Ok(mse.sqrt())
}

/// Empirical CDF of absolute errors: one right-continuous step point per
/// distinct error value, final cumulative fraction exactly 1.
pub fn ecdf(errors: &[f64]) -> Result<Vec<(f64, f64)>, StatsError> {
    if errors.is_empty() {
        return Err(StatsError::Empty);
    }
    for (i, &e) in errors.iter().enumerate() {
        if !e.is_finite() {
            return Err(StatsError::NonFinite(i));
        }
        if e < 0.0 {
            return Err(StatsError::NegativeError { index: i, value: e });
        }
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = sorted.len() as f64;
    let mut points = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == v {
            j += 1;
        }
        points.push((v, (j + 1) as f64 / n));
        i = j + 1;
    }
    if let Some(last) = points.last_mut() {
        last.1 = 1.0; // guard against rounding in the final division
    }
    Ok(points)
}

/// Five-number summary plus outliers for one ground-truth count group.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotStats {
    /// The integer pedestrian count defining the group.
    pub group_key: u32,
    /// Lower whisker end: smallest non-outlier value.
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Upper whisker end: largest non-outlier value.
    pub max: f64,
    /// Values beyond 1.5·IQR whiskers, ascending.
    pub outliers: Vec<f64>,
}

/// Quartile by linear interpolation between order statistics ("type 7").
/// `sorted` must be ascending and non-empty.
fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Groups absolute errors |pred − truth| by the integer ground-truth count
/// and summarises each group as a boxplot: type-7 quartiles, whiskers at
/// the most extreme data points within 1.5·IQR of the quartiles, and
/// everything beyond them listed as outliers. Groups are returned in
/// ascending count order.
pub fn abs_error_by_count(pred: &[f64], truth: &[u32]) -> Result<Vec<BoxplotStats>, StatsError> {
    if pred.len() != truth.len() {
        return Err(StatsError::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut groups: std::collections::BTreeMap<u32, Vec<f64>> = std::collections::BTreeMap::new();
    for (p, &t) in pred.iter().zip(truth.iter()) {
        groups.entry(t).or_default().push((p - t as f64).abs());
    }
    let mut out = Vec::with_capacity(groups.len());
    for (key, mut errors) in groups {
        errors.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let q1 = quantile_type7(&errors, 0.25);
        let median = quantile_type7(&errors, 0.5);
        let q3 = quantile_type7(&errors, 0.75);
        let iqr = q3 - q1;
        let lo_fence = q1 - 1.5 * iqr;
        let hi_fence = q3 + 1.5 * iqr;
        let inliers: Vec<f64> = errors
            .iter()
            .copied()
            .filter(|&e| e >= lo_fence && e <= hi_fence)
            .collect();
        let outliers: Vec<f64> = errors
            .iter()
            .copied()
            .filter(|&e| e < lo_fence || e > hi_fence)
            .collect();
        // Quartiles always lie within the fences, so inliers is non-empty.
        out.push(BoxplotStats {
            group_key: key,
            min: inliers[0],
            q1,
            median,
            q3,
            max: *inliers.last().unwrap(),
            outliers,
        });
    }
    Ok(out)
}
