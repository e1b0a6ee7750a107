//! Point forecasts with confidence limits, and in-sample fitted values.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::ArimaFit;
use crate::polynomial::{integrate_ar, psi_expansion};
use crate::special::two_sided_z;

/// MA(infinity) weights of the fitted ARMA part (differencing excluded).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiWeights {
    pub weights: Vec<f64>,
    /// The ARMA part is not stationary/invertible; the weights need not decay.
    pub divergent: bool,
}

pub fn psi_weights(fit: &ArimaFit, count: usize) -> PsiWeights {
    PsiWeights {
        weights: psi_expansion(&fit.parameters.ar, &fit.parameters.ma, count),
        divergent: !(fit.stationary && fit.invertible),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForecastStep {
    pub step: usize,
    /// `step` times the series spacing.
    pub offset: f64,
    pub point: f64,
    pub variance: f64,
    pub lcl: f64,
    pub ucl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastResult {
    pub horizon: usize,
    pub confidence: f64,
    pub z: f64,
    pub steps: Vec<ForecastStep>,
    /// Weights of the full model including differencing; they drive the
    /// interval widths.
    pub psi_weights: Vec<f64>,
    pub intervals_reliable: bool,
}

impl ForecastResult {
    pub fn points(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.point).collect()
    }

    /// Plot data, one row per step: point, lcl, ucl.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point,lcl,ucl\n");
        for s in &self.steps {
            out.push_str(&format!("{},{},{}\n", s.point, s.lcl, s.ucl));
        }
        out
    }
}

fn check_confidence(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence {confidence} must lie in (0, 1)")));
    }
    Ok(two_sided_z(confidence))
}

/// Forecasts on the differenced scale, future innovations set to zero.
fn differenced_forecasts(fit: &ArimaFit, horizon: usize) -> Vec<f64> {
    let w = fit.differenced();
    let n = w.len();
    let mu = fit.parameters.mean.unwrap_or(0.0);
    let ar = &fit.parameters.ar;
    let ma = &fit.parameters.ma;
    let mut extended = w;
    for h in 1..=horizon {
        let t = n - 1 + h;
        let mut value = mu;
        for (i, a) in ar.iter().enumerate() {
            value += a * (extended[t - 1 - i] - mu);
        }
        for (j, b) in ma.iter().enumerate() {
            // Only past innovations survive; t - 1 - j < n means observed.
            if let Some(idx) = (t - 1).checked_sub(j) {
                if idx < n {
                    value += b * fit.residuals[idx];
                }
            }
        }
        extended.push(value);
    }
    extended.split_off(n)
}

pub fn forecast(fit: &ArimaFit, horizon: usize, confidence: f64) -> Result<ForecastResult> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let z = check_confidence(confidence)?;
    let diffed = differenced_forecasts(fit, horizon);

    // Undo differencing with (1 - B)^d y_t = w_t, starting from the last
    // observed values.
    let d = fit.spec.d;
    let coeffs = integrate_ar(&[], d);
    let obs = fit.observations();
    let mut history: Vec<f64> = obs[obs.len() - d..].to_vec();
    let mut points = Vec::with_capacity(horizon);
    for &w in &diffed {
        let len = history.len();
        let y = w + coeffs.iter().enumerate().map(|(j, c)| c * history[len - 1 - j]).sum::<f64>();
        history.push(y);
        points.push(y);
    }

    let psi = psi_expansion(&integrate_ar(&fit.parameters.ar, d), &fit.parameters.ma, horizon);
    let mut cumulative = 0.0;
    let steps = points
        .iter()
        .enumerate()
        .map(|(i, &point)| {
            cumulative += psi[i] * psi[i];
            let variance = fit.sigma2 * cumulative;
            let half = z * variance.sqrt();
            ForecastStep {
                step: i + 1,
                offset: (i + 1) as f64 * fit.step(),
                point,
                variance,
                lcl: point - half,
                ucl: point + half,
            }
        })
        .collect();
    Ok(ForecastResult {
        horizon,
        confidence,
        z,
        steps,
        psi_weights: psi,
        intervals_reliable: fit.stationary && fit.invertible,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FittedPoint {
    /// Index into the original series.
    pub t: usize,
    pub observed: f64,
    pub fitted: f64,
    pub residual: f64,
    pub lcl: f64,
    pub ucl: f64,
}

/// One-step-ahead in-sample predictions `observed - residual`, skipping the
/// `d + p` observations consumed by differencing and conditioning.
pub fn fitted_values(fit: &ArimaFit, confidence: f64) -> Result<Vec<FittedPoint>> {
    let z = check_confidence(confidence)?;
    let half = z * fit.sigma2.sqrt();
    let d = fit.spec.d;
    let obs = fit.observations();
    Ok((fit.spec.p..fit.residuals.len())
        .map(|i| {
            let t = i + d;
            let residual = fit.residuals[i];
            let fitted = obs[t] - residual;
            FittedPoint {
                t,
                observed: obs[t],
                fitted,
                residual,
                lcl: fitted - half,
                ucl: fitted + half,
            }
        })
        .collect())
}

/// Fit-chart data: t, observed, fitted, lcl, ucl.
pub fn fitted_csv(points: &[FittedPoint]) -> String {
    let mut out = String::from("t,observed,fitted,lcl,ucl\n");
    for p in points {
        out.push_str(&format!("{},{},{},{},{}\n", p.t, p.observed, p.fitted, p.lcl, p.ucl));
    }
    out
}
