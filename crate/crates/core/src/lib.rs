//! Box-Jenkins ARIMA engine.
//!
//! The pipeline follows the classic four stages:
//!
//! 1. [`identification`]: correlograms, Ljung-Box tests, stationarity checks.
//! 2. [`estimation`]: conditional-sum-of-squares fitting with standard errors.
//! 3. [`diagnostics`]: residual whiteness and (p, d, q) grid search.
//! 4. [`forecast`]: point forecasts and confidence limits.
//!
//! [`ingest`] reads ensemble percentile tables, [`scenario`] runs the
//! percentile experiment end to end, and [`simulate`] generates seeded ARMA
//! data for testing.

pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod forecast;
pub mod identification;
pub mod ingest;
pub mod linalg;
pub mod optimize;
pub mod par;
pub mod polynomial;
pub mod scenario;
pub mod series;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
pub use estimation::{fit, ArimaFit, ArimaSpec, FitOptions, MaSign, ModelParameters};
pub use par::Execution;
pub use series::TimeSeries;
