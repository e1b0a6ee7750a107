//! ARIMA(p, d, q) estimation by conditional sum of squares.
//!
//! After `d` differences the model for `w_t` is
//!
//! ```text
//! (w_t - mu) = sum_i ar_i (w_{t-i} - mu) + u_t + sum_j ma_j u_{t-j}
//! ```
//!
//! Residuals are computed recursively from `t = p` onward with pre-sample
//! innovations set to zero; the first `p` residuals are conditioned away and
//! reported as zero. Internally MA coefficients always carry the plus sign
//! shown above; [`MaSign`] only affects reporting.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identification::pacf_from_acf;
use crate::linalg::{least_squares, spd_inverse};
use crate::optimize::{bfgs, hessian_from_gradient, nelder_mead, numeric_hessian, BfgsOptions, NelderMeadOptions};
use crate::polynomial::{clamp_invertible, clamp_stationary, is_invertible, is_stationary};
use crate::series::{difference_values, mean, TimeSeries};
use crate::special::student_t_two_sided;

/// Largest p, d or q the engine accepts.
pub const MAX_ORDER: usize = 5;

/// Reflection-coefficient bound applied to starting values.
pub const START_CLAMP: f64 = 0.995;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArimaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub include_constant: bool,
}

impl ArimaSpec {
    pub fn new(p: usize, d: usize, q: usize, include_constant: bool) -> Result<Self> {
        let spec = Self { p, d, q, include_constant };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p > MAX_ORDER || self.d > MAX_ORDER || self.q > MAX_ORDER {
            return Err(Error::InvalidSpec(format!("orders of {self} exceed the limit {MAX_ORDER}")));
        }
        if self.n_params() == 0 {
            return Err(Error::InvalidSpec(format!("{self} has no parameters to estimate")));
        }
        Ok(())
    }

    /// Number of estimated mean-equation parameters.
    pub fn n_params(&self) -> usize {
        self.p + self.q + usize::from(self.include_constant)
    }
}

impl fmt::Display for ArimaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ARIMA({},{},{})", self.p, self.d, self.q)?;
        if self.include_constant {
            write!(f, "+constant")?;
        }
        Ok(())
    }
}

/// How MA coefficients are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaSign {
    /// `1 - theta_1 B - ...`: reported values are the negated internal ones.
    /// This is the layout of common statistics packages (SPSS).
    #[default]
    Spss,
    /// `1 + theta_1 B + ...`: reported values equal the internal ones.
    BoxJenkins,
}

impl MaSign {
    pub fn apply(self, internal: f64) -> f64 {
        match self {
            MaSign::Spss => -internal,
            MaSign::BoxJenkins => internal,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            MaSign::Spss => MaSign::BoxJenkins,
            MaSign::BoxJenkins => MaSign::Spss,
        }
    }
}

impl FromStr for MaSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spss" => Ok(MaSign::Spss),
            "boxjenkins" | "box-jenkins" => Ok(MaSign::BoxJenkins),
            other => Err(Error::InvalidArgument(format!("unknown MA sign convention `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Reject AR/MA values outside the stationary/invertible region during
    /// optimization.
    pub enforce_admissible: bool,
    pub ma_sign: MaSign,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            enforce_admissible: true,
            ma_sign: MaSign::default(),
            max_iter: 500,
        }
    }
}

/// Mean-form parameters with MA in the internal (plus) convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub mean: Option<f64>,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
}

impl ModelParameters {
    /// Packed as `[mean?, ar.., ma..]`, the layout taken by [`css`].
    pub fn to_vec(&self) -> Vec<f64> {
        self.mean.iter().chain(&self.ar).chain(&self.ma).copied().collect()
    }

    pub fn from_slice(spec: &ArimaSpec, x: &[f64]) -> Self {
        let offset = usize::from(spec.include_constant);
        Self {
            mean: spec.include_constant.then(|| x[0]),
            ar: x[offset..offset + spec.p].to_vec(),
            ma: x[offset + spec.p..offset + spec.p + spec.q].to_vec(),
        }
    }

    /// Intercept `mean * (1 - sum ar)`.
    pub fn intercept(&self) -> Option<f64> {
        self.mean.map(|m| m * (1.0 - self.ar.iter().sum::<f64>()))
    }
}

/// One coefficient row: estimate, standard error, t statistic, two-sided
/// p-value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterEstimate {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub t_stat: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArimaFit {
    pub spec: ArimaSpec,
    pub ma_sign: MaSign,
    pub parameters: ModelParameters,
    /// Constant in intercept form, `mean * (1 - sum ar)`.
    pub intercept: Option<f64>,
    /// Coefficient table in the reporting convention: Constant (mean form),
    /// AR Lag 1..p, MA Lag 1..q.
    pub table: Vec<ParameterEstimate>,
    /// One residual per differenced observation; the first `p` are zero.
    pub residuals: Vec<f64>,
    pub n_effective: usize,
    pub css: f64,
    pub sigma2: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub df_resid: usize,
    pub converged: bool,
    pub iterations: usize,
    pub se_available: bool,
    pub stationary: bool,
    pub invertible: bool,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub(crate) observations: Vec<f64>,
    #[serde(skip)]
    pub(crate) step: f64,
}

/// CSS residuals for the differenced series `w`.
pub fn css_residuals(w: &[f64], params: &ModelParameters) -> Vec<f64> {
    let p = params.ar.len();
    let mu = params.mean.unwrap_or(0.0);
    let mut u = vec![0.0; w.len()];
    for t in p..w.len() {
        let mut e = w[t] - mu;
        for (i, a) in params.ar.iter().enumerate() {
            e -= a * (w[t - 1 - i] - mu);
        }
        for (j, b) in params.ma.iter().enumerate() {
            if t > j {
                e -= b * u[t - 1 - j];
            }
        }
        u[t] = e;
    }
    u
}

/// Conditional sum of squares and its analytic gradient in the parameter
/// layout `[mean?, ar.., ma..]`.
pub fn css_with_gradient(w: &[f64], spec: &ArimaSpec, x: &[f64]) -> (f64, Vec<f64>) {
    let params = ModelParameters::from_slice(spec, x);
    let n = w.len();
    let p = spec.p;
    let k = x.len();
    let offset = usize::from(spec.include_constant);
    let mu = params.mean.unwrap_or(0.0);
    let ar_sum: f64 = params.ar.iter().sum();
    let mut u = vec![0.0; n];
    let mut du = vec![vec![0.0; n]; k];
    let mut sum = 0.0;
    let mut grad = vec![0.0; k];
    for t in p..n {
        let mut e = w[t] - mu;
        for (i, a) in params.ar.iter().enumerate() {
            e -= a * (w[t - 1 - i] - mu);
        }
        for (j, b) in params.ma.iter().enumerate() {
            if t > j {
                e -= b * u[t - 1 - j];
            }
        }
        u[t] = e;
        for m in 0..k {
            let mut d = if spec.include_constant && m == 0 {
                -(1.0 - ar_sum)
            } else if m >= offset && m < offset + p {
                -(w[t - 1 - (m - offset)] - mu)
            } else {
                let j = m - offset - p;
                if t > j {
                    -u[t - 1 - j]
                } else {
                    0.0
                }
            };
            for (j, b) in params.ma.iter().enumerate() {
                if t > j {
                    d -= b * du[m][t - 1 - j];
                }
            }
            du[m][t] = d;
            grad[m] += 2.0 * e * d;
        }
        sum += e * e;
    }
    (sum, grad)
}

pub fn css(w: &[f64], spec: &ArimaSpec, x: &[f64]) -> f64 {
    css_residuals(w, &ModelParameters::from_slice(spec, x))
        .iter()
        .map(|u| u * u)
        .sum()
}

/// Starting values and whether any fallback or clamp was needed.
#[derive(Debug, Clone, PartialEq)]
pub struct StartingValues {
    pub params: ModelParameters,
    pub fallback: bool,
    pub clamped: bool,
}

/// Yule-Walker AR coefficients from sample autocorrelations.
fn yule_walker(centered: &[f64], order: usize) -> Option<Vec<f64>> {
    if order == 0 {
        return Some(Vec::new());
    }
    let rho = crate::identification::acf(centered, order).ok()?;
    // The last Durbin-Levinson row is the Yule-Walker solution; rebuild it
    // from the partial autocorrelations.
    let partial = pacf_from_acf(&rho);
    if partial.clamped {
        return None;
    }
    Some(crate::polynomial::from_reflection(&partial.values))
}

/// Warm start: Yule-Walker for AR, Hannan-Rissanen regression when MA terms
/// are present, sample mean for the constant.
pub fn initial_params(w: &[f64], spec: &ArimaSpec) -> StartingValues {
    let m = mean(w);
    let centered: Vec<f64> = w.iter().map(|v| v - m).collect();
    let mut fallback = false;

    let (ar, ma) = if spec.q == 0 {
        match yule_walker(&centered, spec.p) {
            Some(ar) => (ar, Vec::new()),
            None => {
                fallback = true;
                (vec![0.1; spec.p], Vec::new())
            }
        }
    } else {
        match hannan_rissanen(&centered, spec.p, spec.q) {
            Some(pair) => pair,
            None => {
                fallback = true;
                (vec![0.1; spec.p], vec![0.1; spec.q])
            }
        }
    };
    let (ar, ar_clamped) = clamp_stationary(&ar, START_CLAMP);
    let (ma, ma_clamped) = clamp_invertible(&ma, START_CLAMP);
    StartingValues {
        params: ModelParameters {
            mean: spec.include_constant.then_some(m),
            ar,
            ma,
        },
        fallback,
        clamped: ar_clamped || ma_clamped,
    }
}

fn hannan_rissanen(centered: &[f64], p: usize, q: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = centered.len();
    let long = (p + q + 2).max((n as f64).ln().ceil() as usize).min(n / 3);
    if long < p.max(q) || long == 0 {
        return None;
    }
    let phi = yule_walker(centered, long)?;
    let mut innov = vec![0.0; n];
    for t in long..n {
        innov[t] = centered[t] - (0..long).map(|i| phi[i] * centered[t - 1 - i]).sum::<f64>();
    }
    let start = long + q;
    if n <= start + p + q + 2 {
        return None;
    }
    let rows: Vec<Vec<f64>> = (start..n)
        .map(|t| {
            (1..=p)
                .map(|i| centered[t - i])
                .chain((1..=q).map(|j| innov[t - j]))
                .collect()
        })
        .collect();
    let y: Vec<f64> = (start..n).map(|t| centered[t]).collect();
    let beta = least_squares(&rows, &y)?;
    if beta.iter().any(|b| !b.is_finite()) {
        return None;
    }
    Some((beta[..p].to_vec(), beta[p..].to_vec()))
}

/// Two-sided p-value of a t statistic.
pub fn t_significance(t: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::InvalidArgument("t test needs df >= 1".into()));
    }
    Ok(student_t_two_sided(t, df as f64))
}

/// Gaussian log-likelihood implied by a CSS variance estimate.
pub fn gaussian_log_likelihood(n: usize, sigma2: f64) -> f64 {
    -(n as f64) / 2.0 * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0)
}

/// Fits `spec` to `series` by conditional sum of squares.
pub fn fit(series: &TimeSeries, spec: ArimaSpec, options: FitOptions) -> Result<ArimaFit> {
    spec.validate()?;
    let n_obs = series.len();
    if spec.d >= n_obs {
        return Err(Error::OrderTooLarge { d: spec.d, len: n_obs });
    }
    let w = difference_values(series.values(), spec.d);
    let k = spec.n_params();
    let needed = spec.p + k + 2;
    if w.len() < needed {
        return Err(Error::InsufficientData {
            needed: needed + spec.d,
            available: n_obs,
        });
    }
    let m = mean(&w);
    let spread = (w.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / w.len() as f64).sqrt();
    if !(spread > 0.0) {
        return Err(Error::DegenerateSeries);
    }

    let mut warnings = Vec::new();
    if w.len() < 10 * (spec.p + spec.q + 1) {
        warnings.push(format!(
            "only {} observations after differencing; at least {} recommended",
            w.len(),
            10 * (spec.p + spec.q + 1)
        ));
    }

    let start = initial_params(&w, &spec);
    if start.fallback {
        warnings.push("starting values fell back to 0.1 per coefficient".into());
    }

    let admissible = |x: &[f64]| -> bool {
        if !options.enforce_admissible {
            return true;
        }
        let pm = ModelParameters::from_slice(&spec, x);
        is_stationary(&pm.ar) && is_invertible(&pm.ma)
    };
    let objective = |x: &[f64]| -> f64 {
        if !admissible(x) {
            return f64::INFINITY;
        }
        let s = css(&w, &spec, x);
        if s.is_finite() {
            s
        } else {
            f64::INFINITY
        }
    };
    let objective_grad = |x: &[f64]| -> (f64, Vec<f64>) {
        if !admissible(x) {
            return (f64::INFINITY, vec![0.0; x.len()]);
        }
        let (s, g) = css_with_gradient(&w, &spec, x);
        if s.is_finite() {
            (s, g)
        } else {
            (f64::INFINITY, g)
        }
    };

    let x0 = start.params.to_vec();
    let steps: Vec<f64> = (0..k)
        .map(|i| if spec.include_constant && i == 0 { 0.1 * spread } else { 0.1 })
        .collect();
    let coarse = nelder_mead(
        objective,
        &x0,
        &steps,
        NelderMeadOptions {
            max_iter: options.max_iter,
            f_tol: 1e-10,
        },
    );
    let refined = bfgs(
        objective_grad,
        &coarse.x,
        BfgsOptions {
            max_iter: options.max_iter,
            ..BfgsOptions::default()
        },
    );
    let (x, converged) = if refined.value <= coarse.value {
        (refined.x, refined.converged)
    } else {
        (coarse.x, false)
    };
    if !converged {
        warnings.push("optimizer did not converge".into());
    }

    let params = ModelParameters::from_slice(&spec, &x);
    let mut fit = assemble(series, spec, params, None, options.ma_sign, warnings)?;
    fit.converged = converged;
    fit.iterations = coarse.iterations + refined.iterations;
    attach_standard_errors(&mut fit, &w, &x);
    Ok(fit)
}

impl ArimaFit {
    /// Builds a fit from known parameters without optimizing. `sigma2`
    /// defaults to the CSS variance estimate of the implied residuals.
    pub fn from_parameters(
        series: &TimeSeries,
        spec: ArimaSpec,
        params: ModelParameters,
        sigma2: Option<f64>,
        ma_sign: MaSign,
    ) -> Result<Self> {
        spec.validate()?;
        if params.ar.len() != spec.p || params.ma.len() != spec.q || params.mean.is_some() != spec.include_constant {
            return Err(Error::InvalidSpec(format!("parameters do not match {spec}")));
        }
        if spec.d >= series.len() || series.len() - spec.d <= spec.p {
            return Err(Error::InsufficientData {
                needed: spec.d + spec.p + 1,
                available: series.len(),
            });
        }
        let mut fit = assemble(series, spec, params, sigma2, ma_sign, Vec::new())?;
        fit.converged = true;
        Ok(fit)
    }

    /// Original (undifferenced) observations the model was fitted to.
    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Differenced series the ARMA part was fitted to.
    pub fn differenced(&self) -> Vec<f64> {
        difference_values(&self.observations, self.spec.d)
    }

    /// MA coefficients in the reporting convention.
    pub fn reported_ma(&self) -> Vec<f64> {
        self.parameters.ma.iter().map(|&b| self.ma_sign.apply(b)).collect()
    }

    /// Residuals after dropping the `p` conditioned leading entries.
    pub fn effective_residuals(&self) -> &[f64] {
        &self.residuals[self.spec.p..]
    }

    /// Same fit reported in the other MA convention.
    pub fn with_ma_sign(&self, ma_sign: MaSign) -> Self {
        if ma_sign == self.ma_sign {
            return self.clone();
        }
        let mut out = self.clone();
        out.ma_sign = ma_sign;
        let offset = usize::from(self.spec.include_constant) + self.spec.p;
        for row in out.table.iter_mut().skip(offset) {
            row.estimate = -row.estimate;
            row.t_stat = row.t_stat.map(|t| -t);
        }
        out
    }

    /// Coefficient table as CSV: Parameter, Estimate, SE, t, Sig.
    pub fn table_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("Parameter,Estimate,SE,t,Sig.\n");
        for row in &self.table {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.name,
                row.estimate,
                opt(row.se),
                opt(row.t_stat),
                opt(row.p_value)
            ));
        }
        out
    }

    /// `t,residual` CSV, `t` indexing the differenced series.
    pub fn residuals_csv(&self) -> String {
        let mut out = String::from("t,residual\n");
        for (t, r) in self.residuals.iter().enumerate() {
            out.push_str(&format!("{t},{r}\n"));
        }
        out
    }
}

fn assemble(
    series: &TimeSeries,
    spec: ArimaSpec,
    params: ModelParameters,
    sigma2: Option<f64>,
    ma_sign: MaSign,
    warnings: Vec<String>,
) -> Result<ArimaFit> {
    let w = difference_values(series.values(), spec.d);
    let residuals = css_residuals(&w, &params);
    let n_effective = w.len() - spec.p;
    let css: f64 = residuals.iter().map(|u| u * u).sum();
    let sigma2 = sigma2.unwrap_or(css / n_effective as f64);
    let k = spec.n_params() + 1;
    let log_likelihood = gaussian_log_likelihood(n_effective, sigma2);
    let ic = crate::diagnostics::InformationCriteria::from_log_likelihood(log_likelihood, n_effective, k);

    let mut table = Vec::with_capacity(spec.n_params());
    if let Some(mu) = params.mean {
        table.push(blank_row("Constant", mu));
    }
    for (i, a) in params.ar.iter().enumerate() {
        table.push(blank_row(&format!("AR Lag {}", i + 1), *a));
    }
    for (j, b) in params.ma.iter().enumerate() {
        table.push(blank_row(&format!("MA Lag {}", j + 1), ma_sign.apply(*b)));
    }

    Ok(ArimaFit {
        spec,
        ma_sign,
        intercept: params.intercept(),
        stationary: is_stationary(&params.ar),
        invertible: is_invertible(&params.ma),
        parameters: params,
        table,
        residuals,
        n_effective,
        css,
        sigma2,
        log_likelihood,
        aic: ic.aic,
        bic: ic.bic,
        df_resid: n_effective.saturating_sub(spec.n_params()),
        converged: false,
        iterations: 0,
        se_available: false,
        warnings,
        observations: series.values().to_vec(),
        step: series.step(),
    })
}

fn blank_row(name: &str, estimate: f64) -> ParameterEstimate {
    ParameterEstimate {
        name: name.to_string(),
        estimate,
        se: None,
        t_stat: None,
        p_value: None,
    }
}

/// Relative finite-difference step for the CSS Hessian.
pub const HESSIAN_STEP: f64 = 1e-4;

/// Covariance of the estimates, `2 sigma2 H^{-1}` with `H` the Hessian of the
/// sum of squares.
pub fn css_covariance(w: &[f64], spec: &ArimaSpec, x: &[f64], sigma2: f64) -> Option<Vec<Vec<f64>>> {
    let f = |p: &[f64]| css(w, spec, p);
    let h = numeric_hessian(&f, x, HESSIAN_STEP);
    covariance_from_hessian(&h, sigma2)
}

/// Same covariance, with the Hessian taken as finite differences of the
/// analytic gradient.
pub fn css_covariance_from_gradient(w: &[f64], spec: &ArimaSpec, x: &[f64], sigma2: f64) -> Option<Vec<Vec<f64>>> {
    let g = |p: &[f64]| css_with_gradient(w, spec, p).1;
    let h = hessian_from_gradient(&g, x, 1e-6);
    covariance_from_hessian(&h, sigma2)
}

fn covariance_from_hessian(h: &[Vec<f64>], sigma2: f64) -> Option<Vec<Vec<f64>>> {
    let inv = spd_inverse(&h.to_vec())?;
    Some(
        inv.iter()
            .map(|row| row.iter().map(|v| 2.0 * sigma2 * v).collect())
            .collect(),
    )
}

fn attach_standard_errors(fit: &mut ArimaFit, w: &[f64], x: &[f64]) {
    let Some(cov) = css_covariance(w, &fit.spec, x, fit.sigma2) else {
        fit.warnings.push("CSS Hessian is not positive definite; standard errors unavailable".into());
        return;
    };
    let df = fit.df_resid;
    for (i, row) in fit.table.iter_mut().enumerate() {
        let se = cov[i][i].sqrt();
        if !se.is_finite() || se <= 0.0 {
            continue;
        }
        let t = row.estimate / se;
        row.se = Some(se);
        row.t_stat = Some(t);
        row.p_value = (df > 0).then(|| student_t_two_sided(t, df as f64));
    }
    fit.se_available = fit.table.iter().all(|r| r.se.is_some());
}
