//! Equally spaced time series, differencing and its exact inverse, anomaly
//! rebasing and summary statistics.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered, equally spaced observations, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    step: f64,
    origin_label: String,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, step: f64, origin_label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidStep(step));
        }
        Ok(Self {
            values,
            step,
            origin_label: origin_label.into(),
        })
    }

    /// Unit-step series with no origin label; handy for synthetic data.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 1.0, "")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time between consecutive observations.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn origin_label(&self) -> &str {
        &self.origin_label
    }

    /// Last (most recent) observation.
    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same metadata, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.step, self.origin_label.clone())
    }
}

/// Result of differencing a series `d` times.
///
/// `initials` holds the `d` leading observations of the original series.
/// `residues[k]` holds the rounding error committed when forming the
/// `(k+1)`-th difference, so that [`integrate`] restores the original
/// values bit for bit. A differenced series built from scratch (for instance
/// forecasts on the differenced scale) carries no residues and integrates
/// with plain cumulative sums.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferencedSeries {
    pub values: Vec<f64>,
    pub d: usize,
    pub initials: Vec<f64>,
    residues: Vec<Vec<f64>>,
    step: f64,
    origin_label: String,
}

impl DifferencedSeries {
    /// Differenced values with explicit initial observations and no residues.
    pub fn from_parts(values: Vec<f64>, d: usize, initials: Vec<f64>) -> Self {
        Self {
            values,
            d,
            initials,
            residues: Vec::new(),
            step: 1.0,
            origin_label: String::new(),
        }
    }
}

/// Error-free transformation: `a + b = sum + err` exactly.
#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let sum = a + b;
    let bb = sum - a;
    let err = (a - (sum - bb)) + (b - bb);
    (sum, err)
}

fn difference_once(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    values
        .windows(2)
        .map(|w| two_sum(w[1], -w[0]))
        .unzip()
}

/// Applies `d` first differences.
pub fn difference(series: &TimeSeries, d: usize) -> Result<DifferencedSeries> {
    let len = series.len();
    if d >= len {
        return Err(Error::OrderTooLarge { d, len });
    }
    let mut current = series.values().to_vec();
    let mut residues = Vec::with_capacity(d);
    for _ in 0..d {
        let (next, err) = difference_once(&current);
        current = next;
        residues.push(err);
    }
    Ok(DifferencedSeries {
        values: current,
        d,
        initials: series.values()[..d].to_vec(),
        residues,
        step: series.step(),
        origin_label: series.origin_label().to_string(),
    })
}

/// Plain `d`-th difference of a slice, without bookkeeping.
pub fn difference_values(values: &[f64], d: usize) -> Vec<f64> {
    let mut current = values.to_vec();
    for _ in 0..d {
        current = current.windows(2).map(|w| w[1] - w[0]).collect();
    }
    current
}

/// Inverts [`difference`].
pub fn integrate(diffed: &DifferencedSeries) -> Result<TimeSeries> {
    let d = diffed.d;
    if diffed.initials.len() != d {
        return Err(Error::CannotInvert {
            expected: d,
            found: diffed.initials.len(),
        });
    }
    let values = integrate_values(&diffed.values, &diffed.initials, &diffed.residues);
    TimeSeries::new(values, diffed.step, diffed.origin_label.clone())
}

/// Leading value of each differencing level, derived from the initial
/// observations with the same arithmetic used by [`difference`].
fn level_heads(initials: &[f64]) -> Vec<f64> {
    let mut heads = Vec::with_capacity(initials.len());
    let mut level = initials.to_vec();
    while !level.is_empty() {
        heads.push(level[0]);
        level = difference_once(&level).0;
    }
    heads
}

/// Undoes `initials.len()` differences of `values`. Missing residues count
/// as zero.
pub(crate) fn integrate_values(values: &[f64], initials: &[f64], residues: &[Vec<f64>]) -> Vec<f64> {
    let heads = level_heads(initials);
    let mut current = values.to_vec();
    for k in (0..initials.len()).rev() {
        let comp = residues.get(k);
        let mut out = Vec::with_capacity(current.len() + 1);
        let mut prev = heads[k];
        out.push(prev);
        for (i, &v) in current.iter().enumerate() {
            let (s, r) = two_sum(prev, v);
            let e = comp.and_then(|c| c.get(i)).copied().unwrap_or(0.0);
            prev = s + (r + e);
            out.push(prev);
        }
        current = out;
    }
    current
}

/// Subtracts the mean over `window` from every observation.
pub fn rebase_anomaly(series: &TimeSeries, window: Range<usize>) -> Result<TimeSeries> {
    let len = series.len();
    if window.start >= window.end || window.end > len {
        return Err(Error::InvalidWindow {
            start: window.start,
            end: window.end,
            len,
        });
    }
    let reference = mean(&series.values()[window]);
    series.with_values(series.values().iter().map(|v| v - reference).collect())
}

/// Descriptive statistics of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Population variance (divisor `n`).
    pub variance: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summary(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    let m = mean(values);
    let variance = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    let sorted = sorted_copy(values);
    Ok(Summary {
        mean: m,
        variance,
        median: percentile_sorted(&sorted, 50.0),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

/// Percentile `q` in `[0, 100]`, linear interpolation between closest ranks
/// (inclusive definition: rank `q/100 * (n-1)`).
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("percentile {q} outside [0, 100]")));
    }
    Ok(percentile_sorted(&sorted_copy(values), q))
}

pub fn median(values: &[f64]) -> Result<f64> {
    percentile(values, 50.0)
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
}

fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let rank = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = rank - lo as f64;
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
