//! Model identification: sample ACF/PACF, white-noise standard errors,
//! Ljung-Box portmanteau statistics and a correlogram-based stationarity
//! assessment.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{difference_values, mean};
use crate::special::chi_square_sf;

/// Sample autocorrelations `rho_1..=rho_max_lag` with the biased (1/n)
/// covariance normalization.
pub fn acf(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if n < max_lag + 2 {
        return Err(Error::InsufficientData {
            needed: max_lag + 2,
            available: n,
        });
    }
    let m = mean(values);
    let centered: Vec<f64> = values.iter().map(|v| v - m).collect();
    let denom: f64 = centered.iter().map(|c| c * c).sum();
    if denom <= f64::MIN_POSITIVE * n as f64 {
        return Err(Error::DegenerateSeries);
    }
    Ok((1..=max_lag)
        .map(|k| {
            let num: f64 = centered[k..].iter().zip(&centered).map(|(a, b)| a * b).sum();
            num / denom
        })
        .collect())
}

/// Standard error of `rho_k` under independence: `sqrt((n - k) / (n (n + 2)))`.
pub fn white_noise_se(n: usize, lag: usize) -> Result<f64> {
    if lag == 0 || lag >= n {
        return Err(Error::InvalidLag { lag, n });
    }
    let n = n as f64;
    Ok(((n - lag as f64) / (n * (n + 2.0))).sqrt())
}

/// Partial autocorrelations from a sequence of autocorrelations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pacf {
    pub values: Vec<f64>,
    /// Set when rounding pushed a coefficient outside `[-1, 1]`.
    pub clamped: bool,
}

/// Durbin-Levinson recursion over `rho_1..rho_K`.
pub fn pacf_from_acf(rho: &[f64]) -> Pacf {
    let mut values = Vec::with_capacity(rho.len());
    let mut phi: Vec<f64> = Vec::with_capacity(rho.len());
    let mut clamped = false;
    let mut variance = 1.0;
    for k in 0..rho.len() {
        if variance <= 0.0 {
            clamped = true;
            values.push(0.0);
            continue;
        }
        let num = rho[k] - (0..k).map(|j| phi[j] * rho[k - 1 - j]).sum::<f64>();
        let mut kk = num / variance;
        if kk.abs() > 1.0 {
            kk = kk.signum();
            clamped = true;
        }
        let mut next: Vec<f64> = (0..k).map(|j| phi[j] - kk * phi[k - 1 - j]).collect();
        next.push(kk);
        phi = next;
        variance *= 1.0 - kk * kk;
        values.push(kk);
    }
    Pacf { values, clamped }
}

pub fn pacf(values: &[f64], max_lag: usize) -> Result<Pacf> {
    Ok(pacf_from_acf(&acf(values, max_lag)?))
}

/// One Ljung-Box row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LjungBoxRow {
    pub lag: usize,
    pub q_stat: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Cumulative Ljung-Box statistics `Q_1..=Q_K` with `df = k`.
pub fn ljung_box(rho: &[f64], n: usize, max_lag: usize) -> Result<Vec<LjungBoxRow>> {
    if max_lag >= n || max_lag > rho.len() {
        return Err(Error::InvalidLag { lag: max_lag, n });
    }
    let nf = n as f64;
    let mut q = 0.0;
    Ok((1..=max_lag)
        .map(|k| {
            q += rho[k - 1] * rho[k - 1] / (nf - k as f64);
            let q_stat = nf * (nf + 2.0) * q;
            LjungBoxRow {
                lag: k,
                q_stat,
                df: k,
                p_value: chi_square_sf(q_stat, k as f64),
            }
        })
        .collect())
}

/// Ljung-Box statistic at a single lag with degrees of freedom reduced by the
/// number of fitted ARMA coefficients (never below 1).
pub fn ljung_box_adjusted(rho: &[f64], n: usize, lag: usize, fitted: usize) -> Result<LjungBoxRow> {
    let row = ljung_box(rho, n, lag)?[lag - 1];
    let df = lag.saturating_sub(fitted).max(1);
    Ok(LjungBoxRow {
        df,
        p_value: chi_square_sf(row.q_stat, df as f64),
        ..row
    })
}

/// One correlogram line: the columns of a standard ACF/Ljung-Box report plus
/// the partial autocorrelation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelogramRow {
    pub lag: usize,
    pub acf: f64,
    pub pacf: f64,
    pub se_white_noise: f64,
    pub q_stat: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelogramReport {
    pub n: usize,
    pub rows: Vec<CorrelogramRow>,
    pub pacf_clamped: bool,
}

/// Default correlogram depth: `min(20, n / 4)`, at least 1.
pub fn default_max_lag(n: usize) -> usize {
    (n / 4).clamp(1, 20)
}

pub fn correlogram(values: &[f64], max_lag: usize) -> Result<CorrelogramReport> {
    if max_lag == 0 {
        return Err(Error::InvalidLag { lag: 0, n: values.len() });
    }
    let n = values.len();
    let rho = acf(values, max_lag)?;
    let partial = pacf_from_acf(&rho);
    let lb = ljung_box(&rho, n, max_lag)?;
    let rows = (0..max_lag)
        .map(|i| {
            Ok(CorrelogramRow {
                lag: i + 1,
                acf: rho[i],
                pacf: partial.values[i],
                se_white_noise: white_noise_se(n, i + 1)?,
                q_stat: lb[i].q_stat,
                df: lb[i].df,
                p_value: lb[i].p_value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelogramReport {
        n,
        rows,
        pacf_clamped: partial.clamped,
    })
}

impl CorrelogramReport {
    pub fn max_lag(&self) -> usize {
        self.rows.len()
    }

    /// ACF/Ljung-Box table: Lag, Autocorrelation, Standard Error,
    /// Box-Ljung Value, df, Sig.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("Lag,Autocorrelation,Standard Error,Box-Ljung Value,df,Sig.\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.lag, r.acf, r.se_white_noise, r.q_stat, r.df, r.p_value
            ));
        }
        out
    }

    /// Plot data for ACF/PACF bar charts with the white-noise band.
    pub fn plot_csv(&self, band: f64) -> String {
        let mut out = String::from("lag,acf,pacf,lower,upper\n");
        for r in &self.rows {
            let half = band * r.se_white_noise;
            out.push_str(&format!("{},{},{},{},{}\n", r.lag, r.acf, r.pacf, -half, half));
        }
        out
    }
}

/// Lag at which the ACF decay rule gives up: `max(10, K / 2)`.
fn decay_horizon(max_lag: usize) -> usize {
    10.max(max_lag / 2)
}

/// Correlogram decay rule. A series is called non-stationary when
/// `rho_5 > 0.5`, or when no lag up to `max(10, K/2)` has `|rho_k|` inside
/// `band * SE_k`. This is a codified heuristic, not a formal unit-root test.
pub fn passes_decay_test(report: &CorrelogramReport, band: f64) -> bool {
    if report.rows.get(4).is_some_and(|r| r.acf > 0.5) {
        return false;
    }
    let horizon = decay_horizon(report.max_lag());
    report
        .rows
        .iter()
        .take(horizon)
        .any(|r| r.acf.abs() < band * r.se_white_noise)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityAssessment {
    pub stationary: bool,
    /// Smallest d <= 2 whose differenced series passes the decay rule (2 if
    /// none does; see `resolved`).
    pub suggested_d: usize,
    pub resolved: bool,
    /// Lag maximizing `|rho_k| / SE_k` among lags outside the band.
    pub dominant_lag: Option<usize>,
    pub band: f64,
    pub rule: &'static str,
}

pub const DECAY_RULE: &str =
    "heuristic: non-stationary if acf(5) > 0.5 or acf never inside band*SE up to lag max(10, K/2)";

pub fn dominant_lag(report: &CorrelogramReport, band: f64) -> Option<usize> {
    report
        .rows
        .iter()
        .filter(|r| r.acf.abs() >= band * r.se_white_noise)
        .map(|r| (r.lag, r.acf.abs() / r.se_white_noise))
        .fold(None, |best: Option<(usize, f64)>, (lag, score)| match best {
            Some((_, s)) if s >= score => best,
            _ => Some((lag, score)),
        })
        .map(|(lag, _)| lag)
}

/// Runs the decay rule on the series and on its first and second
/// differences.
pub fn assess_stationarity(values: &[f64], max_lag: usize, band: f64) -> Result<StationarityAssessment> {
    let report = correlogram(values, max_lag)?;
    let stationary = passes_decay_test(&report, band);
    let mut suggested = None;
    for d in 0..=2usize {
        if d == 0 {
            if stationary {
                suggested = Some(0);
                break;
            }
            continue;
        }
        let diffed = difference_values(values, d);
        let lag = max_lag.min(diffed.len().saturating_sub(2));
        if lag == 0 {
            break;
        }
        match correlogram(&diffed, lag) {
            Ok(r) if passes_decay_test(&r, band) => {
                suggested = Some(d);
                break;
            }
            Ok(_) => {}
            // Differencing a polynomial trend can leave a constant.
            Err(Error::DegenerateSeries) => {
                suggested = Some(d);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(StationarityAssessment {
        stationary,
        suggested_d: suggested.unwrap_or(2),
        resolved: suggested.is_some(),
        dominant_lag: dominant_lag(&report, band),
        band,
        rule: DECAY_RULE,
    })
}
