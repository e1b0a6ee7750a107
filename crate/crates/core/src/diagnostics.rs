//! Residual diagnostics and model selection over a (p, d, q) grid.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{fit, ArimaFit, ArimaSpec, FitOptions, MAX_ORDER};
use crate::identification::{acf, correlogram, ljung_box_adjusted, CorrelogramReport, LjungBoxRow};
use crate::par::{self, Execution};
use crate::series::{mean, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InformationCriteria {
    pub aic: f64,
    pub bic: f64,
}

impl InformationCriteria {
    /// `k` counts every estimated parameter including the innovation variance.
    pub fn from_log_likelihood(log_likelihood: f64, n: usize, k: usize) -> Self {
        let k = k as f64;
        Self {
            aic: -2.0 * log_likelihood + 2.0 * k,
            bic: -2.0 * log_likelihood + k * (n as f64).ln(),
        }
    }
}

/// AIC/BIC from the CSS variance: `lnL = -n/2 (ln(2 pi sigma2) + 1)` and
/// `k = #coefficients + 1`.
pub fn information_criteria(fit: &ArimaFit) -> InformationCriteria {
    let ll = crate::estimation::gaussian_log_likelihood(fit.n_effective, fit.sigma2);
    InformationCriteria::from_log_likelihood(ll, fit.n_effective, fit.spec.n_params() + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticOptions {
    /// Minimum Ljung-Box p-value for whiteness.
    pub threshold: f64,
    pub lags: Vec<usize>,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        Self {
            threshold: 0.05,
            lags: vec![6, 12, 18],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub residual_correlogram: CorrelogramReport,
    /// Ljung-Box rows at the checked lags, df reduced by p + q.
    pub ljung_box: Vec<LjungBoxRow>,
    pub lb_p_at: BTreeMap<usize, f64>,
    pub residual_mean: f64,
    /// `2 sigma / sqrt(n)`.
    pub mean_bound: f64,
    pub threshold: f64,
    pub white_noise_pass: bool,
    pub aic: f64,
    pub bic: f64,
}

pub fn diagnose(fit: &ArimaFit) -> Result<DiagnosticReport> {
    diagnose_with(fit, &DiagnosticOptions::default())
}

/// Residual whiteness check: passes when every checked Ljung-Box p-value is
/// at least `threshold` and the residual mean lies within `2 sigma/sqrt(n)`.
pub fn diagnose_with(fit: &ArimaFit, options: &DiagnosticOptions) -> Result<DiagnosticReport> {
    let residuals = fit.effective_residuals();
    let max_lag = options.lags.iter().copied().max().unwrap_or(1);
    let n = residuals.len();
    if n < max_lag + 2 {
        return Err(Error::InsufficientData {
            needed: max_lag + 2,
            available: n,
        });
    }
    let residual_correlogram = correlogram(residuals, max_lag)?;
    let rho = acf(residuals, max_lag)?;
    let fitted = fit.spec.p + fit.spec.q;
    let ljung_box = options
        .lags
        .iter()
        .map(|&lag| ljung_box_adjusted(&rho, n, lag, fitted))
        .collect::<Result<Vec<_>>>()?;
    let lb_p_at: BTreeMap<usize, f64> = ljung_box.iter().map(|r| (r.lag, r.p_value)).collect();
    let residual_mean = mean(residuals);
    let mean_bound = 2.0 * fit.sigma2.sqrt() / (n as f64).sqrt();
    let white_noise_pass =
        ljung_box.iter().all(|r| r.p_value >= options.threshold) && residual_mean.abs() <= mean_bound;
    let ic = information_criteria(fit);
    Ok(DiagnosticReport {
        residual_correlogram,
        ljung_box,
        lb_p_at,
        residual_mean,
        mean_bound,
        threshold: options.threshold,
        white_noise_pass,
        aic: ic.aic,
        bic: ic.bic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridBounds {
    pub p_max: usize,
    pub d_max: usize,
    pub q_max: usize,
}

impl Default for GridBounds {
    fn default() -> Self {
        Self {
            p_max: 2,
            d_max: 1,
            q_max: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub spec: ArimaSpec,
    pub fit: Option<ArimaFit>,
    pub diagnostics: Option<DiagnosticReport>,
    pub error: Option<String>,
}

impl GridRow {
    pub fn converged(&self) -> bool {
        self.fit.as_ref().is_some_and(|f| f.converged)
    }

    pub fn white_noise_pass(&self) -> bool {
        self.diagnostics.as_ref().is_some_and(|d| d.white_noise_pass)
    }

    pub fn bic(&self) -> f64 {
        self.fit.as_ref().map_or(f64::INFINITY, |f| f.bic)
    }

    fn class(&self) -> u8 {
        match &self.fit {
            Some(f) if f.converged => 0,
            Some(_) => 1,
            None => 2,
        }
    }
}

/// Ranking order: converged fits, then non-converged, then failures; within
/// a class white-noise passers first, then ascending BIC, then the spec.
pub fn rank_order(a: &GridRow, b: &GridRow) -> Ordering {
    a.class()
        .cmp(&b.class())
        .then_with(|| b.white_noise_pass().cmp(&a.white_noise_pass()))
        .then_with(|| a.bic().total_cmp(&b.bic()))
        .then_with(|| a.spec.cmp(&b.spec))
}

/// Every admissible spec within `bounds`, in lexicographic order.
pub fn grid_specs(bounds: GridBounds, constant_options: &[bool]) -> Result<Vec<ArimaSpec>> {
    if bounds.p_max > MAX_ORDER || bounds.d_max > MAX_ORDER || bounds.q_max > MAX_ORDER {
        return Err(Error::InvalidSpec(format!("grid bounds exceed the limit {MAX_ORDER}")));
    }
    let mut specs = Vec::new();
    for p in 0..=bounds.p_max {
        for d in 0..=bounds.d_max {
            for q in 0..=bounds.q_max {
                for &c in constant_options {
                    let spec = ArimaSpec {
                        p,
                        d,
                        q,
                        include_constant: c,
                    };
                    if spec.validate().is_ok() {
                        specs.push(spec);
                    }
                }
            }
        }
    }
    specs.sort();
    specs.dedup();
    Ok(specs)
}

/// Fits every spec in the grid and ranks the results.
pub fn grid_search(
    series: &TimeSeries,
    bounds: GridBounds,
    constant_options: &[bool],
    options: FitOptions,
    execution: Execution,
) -> Result<Vec<GridRow>> {
    let specs = grid_specs(bounds, constant_options)?;
    let mut rows = par::map(&specs, execution, |&spec| match fit(series, spec, options) {
        Ok(f) => {
            let (diagnostics, error) = match diagnose(&f) {
                Ok(d) => (Some(d), None),
                Err(e) => (None, Some(format!("diagnostics: {e}"))),
            };
            GridRow {
                spec,
                fit: Some(f),
                diagnostics,
                error,
            }
        }
        Err(e) => GridRow {
            spec,
            fit: None,
            diagnostics: None,
            error: Some(e.to_string()),
        },
    });
    rows.sort_by(rank_order);
    Ok(rows)
}

/// One line per grid row.
pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut out = String::from("rank,p,d,q,constant,converged,white_noise_pass,aic,bic,sigma2,estimates,error\n");
    for (i, row) in rows.iter().enumerate() {
        let (aic, bic, sigma2, estimates) = match &row.fit {
            Some(f) => (
                f.aic.to_string(),
                f.bic.to_string(),
                f.sigma2.to_string(),
                f.table
                    .iter()
                    .map(|r| format!("{}={}", r.name, r.estimate))
                    .collect::<Vec<_>>()
                    .join(";"),
            ),
            None => Default::default(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            i + 1,
            row.spec.p,
            row.spec.d,
            row.spec.q,
            row.spec.include_constant,
            row.converged(),
            row.white_noise_pass(),
            aic,
            bic,
            sigma2,
            estimates,
            row.error.as_deref().unwrap_or("").replace(',', ";")
        ));
    }
    out
}
