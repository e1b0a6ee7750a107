//! Run configuration: command-line flags override a flat `key = value`
//! config file, which overrides built-in defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use boxjenkins::diagnostics::GridBounds;
use boxjenkins::ingest::{ColumnMap, Percentile};
use boxjenkins::{ArimaSpec, MaSign};
use clap::Args;

use crate::error::{CliError, CliResult};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Percentile CSV with age, 5th, median and 95th columns
    #[arg(long, global = true, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Header names, e.g. `age=age_bp,p5=p5,median=median,p95=p95`
    #[arg(long, global = true, value_name = "MAP")]
    pub columns: Option<String>,

    /// Column to analyse: p5, median or p95
    #[arg(long, global = true, value_name = "NAME")]
    pub series: Option<String>,

    /// Model order as p,d,q
    #[arg(long, global = true, value_name = "P,D,Q")]
    pub order: Option<String>,

    /// Fit without a constant term
    #[arg(long, global = true)]
    pub no_constant: bool,

    /// Differencing order; overrides the d in --order
    #[arg(long, global = true, value_name = "D")]
    pub d: Option<usize>,

    /// Number of correlogram lags
    #[arg(long, global = true, value_name = "K")]
    pub max_lag: Option<usize>,

    /// Confidence level for intervals, in (0, 1)
    #[arg(long, global = true, value_name = "LEVEL")]
    pub confidence: Option<f64>,

    /// Search every order up to pmax,dmax,qmax and rank the fits
    #[arg(long, global = true, value_name = "PMAX,DMAX,QMAX")]
    pub grid: Option<String>,

    /// Sign convention for reported MA terms: spss or boxjenkins
    #[arg(long, global = true, value_name = "CONVENTION")]
    pub ma_sign: Option<String>,

    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Seed for simulate
    #[arg(long, global = true, value_name = "SEED")]
    pub seed: Option<u64>,

    /// Flat key = value file; flags take precedence over its entries
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Number of bins to forecast
    #[arg(long, global = true, value_name = "H")]
    pub horizon: Option<usize>,

    /// Keep the raw values instead of rebasing on the reference bin
    #[arg(long, global = true)]
    pub no_rebase: bool,

    /// Let the optimizer leave the stationary/invertible region
    #[arg(long, global = true)]
    pub no_enforce: bool,

    /// Iteration limit for each optimizer stage
    #[arg(long, global = true, value_name = "N")]
    pub max_iter: Option<usize>,

    /// AR coefficients for simulate, comma separated
    #[arg(long, global = true, value_name = "LIST", allow_hyphen_values = true)]
    pub ar: Option<String>,

    /// MA coefficients for simulate (plus convention), comma separated
    #[arg(long, global = true, value_name = "LIST", allow_hyphen_values = true)]
    pub ma: Option<String>,

    /// Process mean for simulate
    #[arg(long, global = true, value_name = "VALUE", allow_hyphen_values = true)]
    pub mean: Option<f64>,

    /// Innovation standard deviation for simulate
    #[arg(long, global = true, value_name = "VALUE")]
    pub sigma: Option<f64>,

    /// Length of the simulated series
    #[arg(long, global = true, value_name = "N")]
    pub n: Option<usize>,

    /// Discarded warm-up draws for simulate
    #[arg(long, global = true, value_name = "N")]
    pub burn_in: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub columns: ColumnMap,
    pub series: Percentile,
    pub spec: ArimaSpec,
    pub max_lag: Option<usize>,
    pub confidence: f64,
    pub grid: Option<GridBounds>,
    pub ma_sign: MaSign,
    pub out: PathBuf,
    pub seed: u64,
    pub horizon: usize,
    pub rebase: bool,
    pub enforce: bool,
    pub max_iter: usize,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub mean: f64,
    pub sigma: f64,
    pub n: usize,
    pub burn_in: Option<usize>,
}

const KEYS: &[&str] = &[
    "input",
    "columns",
    "series",
    "order",
    "constant",
    "d",
    "max_lag",
    "confidence",
    "grid",
    "ma_sign",
    "out",
    "seed",
    "horizon",
    "rebase",
    "enforce",
    "max_iter",
    "ar",
    "ma",
    "mean",
    "sigma",
    "n",
    "burn_in",
];

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_config_text(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Input(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn read_config(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_text(&text)
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> CliResult<T> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::Input(format!("invalid value `{raw}` for {key}")))
}

fn parse_bool(key: &str, raw: &str) -> CliResult<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::Input(format!("invalid boolean `{raw}` for {key}"))),
    }
}

fn parse_triple(key: &str, raw: &str) -> CliResult<(usize, usize, usize)> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Input(format!("{key} expects three comma-separated integers, got `{raw}`")));
    }
    Ok((
        parse_value(key, parts[0])?,
        parse_value(key, parts[1])?,
        parse_value(key, parts[2])?,
    ))
}

fn parse_list(key: &str, raw: &str) -> CliResult<Vec<f64>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> CliResult<Self> {
        let file = match &flags.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        let from_file = |key: &str| file.get(key).map(String::as_str);

        let input = flags.input.clone().or_else(|| from_file("input").map(PathBuf::from));

        let columns = match flags.columns.as_deref().or(from_file("columns")) {
            Some(raw) => raw.parse()?,
            None => ColumnMap::default(),
        };
        let series = match flags.series.as_deref().or(from_file("series")) {
            Some(raw) => raw.parse()?,
            None => Percentile::Median,
        };

        let (p, mut d, q) = match flags.order.as_deref().or(from_file("order")) {
            Some(raw) => parse_triple("order", raw)?,
            None => (1, 0, 1),
        };
        if let Some(v) = flags.d {
            d = v;
        } else if let Some(raw) = from_file("d") {
            d = parse_value("d", raw)?;
        }
        let include_constant = if flags.no_constant {
            false
        } else {
            match from_file("constant") {
                Some(raw) => parse_bool("constant", raw)?,
                None => true,
            }
        };
        let spec = ArimaSpec::new(p, d, q, include_constant)?;

        let max_lag = match flags.max_lag {
            Some(v) => Some(v),
            None => from_file("max_lag").map(|raw| parse_value("max_lag", raw)).transpose()?,
        };
        if max_lag == Some(0) {
            return Err(CliError::Input("max_lag must be at least 1".into()));
        }

        let confidence = match flags.confidence {
            Some(v) => v,
            None => from_file("confidence")
                .map(|raw| parse_value("confidence", raw))
                .transpose()?
                .unwrap_or(0.95),
        };
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(CliError::Input(format!("confidence must lie in (0, 1), got {confidence}")));
        }

        let grid = flags
            .grid
            .as_deref()
            .or(from_file("grid"))
            .map(|raw| parse_triple("grid", raw))
            .transpose()?
            .map(|(p_max, d_max, q_max)| GridBounds { p_max, d_max, q_max });

        let ma_sign = match flags.ma_sign.as_deref().or(from_file("ma_sign")) {
            Some(raw) => raw.parse()?,
            None => MaSign::default(),
        };

        let out = flags
            .out
            .clone()
            .or_else(|| from_file("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        if out.as_os_str().is_empty() {
            return Err(CliError::Input("output directory must not be empty".into()));
        }

        let seed = match flags.seed {
            Some(v) => v,
            None => from_file("seed").map(|raw| parse_value("seed", raw)).transpose()?.unwrap_or(42),
        };
        let horizon = match flags.horizon {
            Some(v) => v,
            None => from_file("horizon")
                .map(|raw| parse_value("horizon", raw))
                .transpose()?
                .unwrap_or(1),
        };
        let rebase = if flags.no_rebase {
            false
        } else {
            from_file("rebase").map(|raw| parse_bool("rebase", raw)).transpose()?.unwrap_or(true)
        };
        let enforce = if flags.no_enforce {
            false
        } else {
            from_file("enforce").map(|raw| parse_bool("enforce", raw)).transpose()?.unwrap_or(true)
        };

        let max_iter = match flags.max_iter {
            Some(v) => v,
            None => from_file("max_iter")
                .map(|raw| parse_value("max_iter", raw))
                .transpose()?
                .unwrap_or(500),
        };
        if max_iter == 0 {
            return Err(CliError::Input("max_iter must be at least 1".into()));
        }

        let ar = match flags.ar.as_deref().or(from_file("ar")) {
            Some(raw) => parse_list("ar", raw)?,
            None => Vec::new(),
        };
        let ma = match flags.ma.as_deref().or(from_file("ma")) {
            Some(raw) => parse_list("ma", raw)?,
            None => Vec::new(),
        };
        let mean = match flags.mean {
            Some(v) => v,
            None => from_file("mean").map(|raw| parse_value("mean", raw)).transpose()?.unwrap_or(0.0),
        };
        let sigma = match flags.sigma {
            Some(v) => v,
            None => from_file("sigma").map(|raw| parse_value("sigma", raw)).transpose()?.unwrap_or(1.0),
        };
        let n = match flags.n {
            Some(v) => v,
            None => from_file("n").map(|raw| parse_value("n", raw)).transpose()?.unwrap_or(121),
        };
        let burn_in = match flags.burn_in {
            Some(v) => Some(v),
            None => from_file("burn_in").map(|raw| parse_value("burn_in", raw)).transpose()?,
        };

        Ok(Self {
            input,
            columns,
            series,
            spec,
            max_lag,
            confidence,
            grid,
            ma_sign,
            out,
            seed,
            horizon,
            rebase,
            enforce,
            max_iter,
            ar,
            ma,
            mean,
            sigma,
            n,
            burn_in,
        })
    }
}
