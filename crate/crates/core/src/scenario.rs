//! End-to-end percentile experiment: rebase the three ensemble percentiles on
//! the pre-industrial bin, fit the same ARIMA model to each, take the median
//! of the six AR/MA estimates and compare it and the one-bin forecasts with
//! the 1.5 °C threshold.
//!
//! The coefficient median is reported as computed, labelled
//! `coefficient-median`; it is a median of model coefficients, not a
//! temperature forecast. The forecasts are reported separately.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{fit, ArimaFit, ArimaSpec, FitOptions};
use crate::forecast::{forecast, ForecastResult};
use crate::ingest::{reference_index, to_series, EnsembleTable, Percentile};
use crate::par::{self, Execution};
use crate::series::{median, rebase_anomaly};

pub const IPCC_THRESHOLD: f64 = 1.5;
pub const COEFFICIENT_MEDIAN_LABEL: &str = "coefficient-median";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioOptions {
    pub spec: ArimaSpec,
    pub confidence: f64,
    pub horizon: usize,
    pub fit: FitOptions,
    pub execution: Execution,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            spec: ArimaSpec {
                p: 1,
                d: 0,
                q: 1,
                include_constant: true,
            },
            confidence: 0.95,
            horizon: 1,
            fit: FitOptions::default(),
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Below,
    At,
    Above,
}

impl Comparison {
    /// Equality counts as "at", never "below".
    pub fn of(value: f64, threshold: f64) -> Self {
        if value < threshold {
            Comparison::Below
        } else if value == threshold {
            Comparison::At
        } else {
            Comparison::Above
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparison::Below => "below threshold",
            Comparison::At => "at threshold",
            Comparison::Above => "above threshold",
        })
    }
}

/// One line per quantity: `<label> = <value> °C: <comparison> (1.5 °C)`.
pub fn compare_ipcc(estimates_median: Option<f64>, forecasts: &[(String, f64)]) -> String {
    let mut lines = Vec::new();
    match estimates_median {
        Some(m) => lines.push(format!(
            "{COEFFICIENT_MEDIAN_LABEL} = {m:.3} °C: {} ({IPCC_THRESHOLD} °C)",
            Comparison::of(m, IPCC_THRESHOLD)
        )),
        None => lines.push(format!("{COEFFICIENT_MEDIAN_LABEL} unavailable: no converged fits")),
    }
    for (label, value) in forecasts {
        lines.push(format!(
            "{label} = {value:.3} °C: {} ({IPCC_THRESHOLD} °C)",
            Comparison::of(*value, IPCC_THRESHOLD)
        ));
    }
    lines.join("\n")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesOutcome {
    pub series: Percentile,
    /// Value subtracted by the reference-bin rebasing.
    pub reference_value: f64,
    pub fit: Option<ArimaFit>,
    pub forecast: Option<ForecastResult>,
    pub error: Option<String>,
}

impl SeriesOutcome {
    pub fn converged(&self) -> bool {
        self.fit.as_ref().is_some_and(|f| f.converged)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SixEstimate {
    pub series: Percentile,
    pub term: &'static str,
    pub estimate: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub spec: ArimaSpec,
    pub confidence: f64,
    pub reference_age_bp: f64,
    pub reference_index: usize,
    /// Outcomes in the order p5, median, p95.
    pub fits: Vec<SeriesOutcome>,
    /// AR and MA lag-1 estimates ordered median, p5, p95.
    pub six_estimates: Vec<SixEstimate>,
    pub estimates_median_label: &'static str,
    pub estimates_median: Option<f64>,
    /// Set when some fits did not converge and were left out of the median.
    pub median_partial: bool,
    pub ipcc_threshold: f64,
    pub verdict: String,
}

impl ScenarioReport {
    pub fn outcome(&self, series: Percentile) -> &SeriesOutcome {
        self.fits.iter().find(|o| o.series == series).expect("all three series present")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// series, term, estimate, converged.
    pub fn six_estimates_csv(&self) -> String {
        let mut out = String::from("series,term,estimate,converged\n");
        for e in &self.six_estimates {
            out.push_str(&format!("{},{},{},{}\n", e.series, e.term, e.estimate, e.converged));
        }
        out
    }
}

/// Extraction order of the six estimates.
pub const SIX_ORDER: [Percentile; 3] = [Percentile::Median, Percentile::P5, Percentile::P95];

pub fn run_scenario(table: &EnsembleTable, options: &ScenarioOptions) -> Result<ScenarioReport> {
    let spec = options.spec;
    spec.validate()?;
    if spec.p == 0 || spec.q == 0 {
        return Err(Error::InvalidSpec(format!(
            "{spec}: the six-estimate summary needs at least one AR and one MA term"
        )));
    }
    let ref_idx = reference_index(table);
    let reference_age_bp = table.chronological()[ref_idx].age_bp;

    let fits = par::map(&Percentile::ALL, options.execution, |&column| {
        let raw = to_series(table, column);
        let reference_value = raw.values()[ref_idx];
        let outcome = |fit: Option<ArimaFit>, forecast: Option<ForecastResult>, error: Option<String>| SeriesOutcome {
            series: column,
            reference_value,
            fit,
            forecast,
            error,
        };
        let rebased = match rebase_anomaly(&raw, ref_idx..ref_idx + 1) {
            Ok(s) => s,
            Err(e) => return outcome(None, None, Some(e.to_string())),
        };
        match fit(&rebased, spec, options.fit) {
            Ok(f) => match forecast(&f, options.horizon, options.confidence) {
                Ok(fc) => outcome(Some(f), Some(fc), None),
                Err(e) => outcome(Some(f), None, Some(e.to_string())),
            },
            Err(e) => outcome(None, None, Some(e.to_string())),
        }
    });

    let mut six_estimates = Vec::with_capacity(6);
    for series in SIX_ORDER {
        let o = fits.iter().find(|o| o.series == series).expect("present");
        if let Some(f) = &o.fit {
            let converged = f.converged;
            six_estimates.push(SixEstimate {
                series,
                term: "AR Lag 1",
                estimate: f.parameters.ar[0],
                converged,
            });
            six_estimates.push(SixEstimate {
                series,
                term: "MA Lag 1",
                estimate: f.reported_ma()[0],
                converged,
            });
        }
    }
    let usable: Vec<f64> = six_estimates.iter().filter(|e| e.converged).map(|e| e.estimate).collect();
    let estimates_median = if usable.is_empty() { None } else { Some(median(&usable)?) };
    let median_partial = usable.len() != 6;

    let forecast_points: Vec<(String, f64)> = fits
        .iter()
        .filter_map(|o| {
            let fc = o.forecast.as_ref()?;
            let last = fc.steps.last()?;
            Some((format!("{} forecast +{} yr", o.series, last.offset), last.point))
        })
        .collect();

    Ok(ScenarioReport {
        spec,
        confidence: options.confidence,
        reference_age_bp,
        reference_index: ref_idx,
        fits,
        six_estimates,
        estimates_median_label: COEFFICIENT_MEDIAN_LABEL,
        estimates_median,
        median_partial,
        ipcc_threshold: IPCC_THRESHOLD,
        verdict: compare_ipcc(estimates_median, &forecast_points),
    })
}
