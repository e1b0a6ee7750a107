use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use boxjenkins::diagnostics::{diagnose, grid_csv, grid_search};
use boxjenkins::forecast::{fitted_csv, fitted_values, forecast};
use boxjenkins::identification::{assess_stationarity, correlogram, default_max_lag};
use boxjenkins::ingest::{parse_percentiles_csv, reference_index, to_series, EnsembleTable, Percentile};
use boxjenkins::scenario::{run_scenario, ScenarioOptions};
use boxjenkins::series::{difference_values, rebase_anomaly};
use boxjenkins::simulate::{simulate_arma, SimSpec};
use boxjenkins::{fit, ArimaFit, Execution, FitOptions, TimeSeries};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

const BAND: f64 = 1.96;

fn write_file(cfg: &RunConfig, name: &str, contents: &str) -> CliResult<()> {
    let path = cfg.out.join(name);
    fs::create_dir_all(&cfg.out)
        .and_then(|_| fs::write(&path, contents))
        .map_err(|source| CliError::Write { path, source })?;
    println!("wrote {}", cfg.out.join(name).display());
    Ok(())
}

fn to_json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn load_table(cfg: &RunConfig) -> CliResult<EnsembleTable> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::Input("no input file given (use --input)".into()))?;
    let file = File::open(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_percentiles_csv(BufReader::new(file), &cfg.columns)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Selected column, rebased on the reference bin unless disabled, plus the
/// reference bin's age.
fn load_series(cfg: &RunConfig, table: &EnsembleTable) -> CliResult<(TimeSeries, Option<f64>)> {
    let raw = to_series(table, cfg.series);
    if !cfg.rebase {
        return Ok((raw, None));
    }
    let idx = reference_index(table);
    let age = table.chronological()[idx].age_bp;
    Ok((rebase_anomaly(&raw, idx..idx + 1)?, Some(age)))
}

fn fit_options(cfg: &RunConfig) -> FitOptions {
    FitOptions {
        enforce_admissible: cfg.enforce,
        ma_sign: cfg.ma_sign,
        max_iter: cfg.max_iter,
    }
}

fn input_meta(cfg: &RunConfig, reference_age_bp: Option<f64>) -> serde_json::Value {
    json!({
        "input": cfg.input.as_deref().map(Path::display).map(|d| d.to_string()),
        "series": cfg.series,
        "rebased": cfg.rebase,
        "reference_age_bp": reference_age_bp,
    })
}

pub fn identify(cfg: &RunConfig) -> CliResult<()> {
    let table = load_table(cfg)?;
    let (series, reference) = load_series(cfg, &table)?;
    let d = cfg.spec.d;
    let values = difference_values(series.values(), d);
    if values.len() < 3 {
        return Err(CliError::Input(format!(
            "differencing {} values {d} times leaves too few to analyse",
            series.len()
        )));
    }
    let max_lag = cfg.max_lag.unwrap_or_else(|| default_max_lag(values.len()));
    let report = correlogram(&values, max_lag)?;
    let stationarity = assess_stationarity(&values, max_lag, BAND)?;

    write_file(cfg, "fig9_correlogram.csv", &report.to_csv())?;
    let doc = json!({
        "meta": input_meta(cfg, reference),
        "d": d,
        "correlogram": report,
        "stationarity": stationarity,
    });
    write_file(cfg, "fig9_correlogram.json", &to_json(&doc))?;
    write_file(cfg, "fig8_10_acf_pacf.csv", &report.plot_csv(BAND))?;

    println!(
        "n={} lags={} acf(1)={:.3} stationary={} suggested_d={}",
        report.n,
        report.max_lag(),
        report.rows[0].acf,
        stationarity.stationary,
        stationarity.suggested_d
    );
    Ok(())
}

fn fit_selected(cfg: &RunConfig) -> CliResult<(TimeSeries, Option<f64>, ArimaFit)> {
    let table = load_table(cfg)?;
    let (series, reference) = load_series(cfg, &table)?;
    let f = fit(&series, cfg.spec, fit_options(cfg))?;
    Ok((series, reference, f))
}

fn print_fit(f: &ArimaFit) {
    println!("{} converged={} sigma2={:.6} aic={:.3} bic={:.3}", f.spec, f.converged, f.sigma2, f.aic, f.bic);
    for row in &f.table {
        let se = row.se.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        let p = row.p_value.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        println!("  {:<10} {:>9.3}  se {se}  sig {p}", row.name, row.estimate);
    }
}

fn require_converged(f: &ArimaFit) -> CliResult<()> {
    if f.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!("{} after {} iterations", f.spec, f.iterations)))
    }
}

pub fn fit_cmd(cfg: &RunConfig) -> CliResult<()> {
    let (series, reference, f) = fit_selected(cfg)?;
    let diag = diagnose(&f)?;

    write_file(cfg, "fig3_params.csv", &f.table_csv())?;
    write_file(
        cfg,
        "fit.json",
        &to_json(&json!({ "meta": input_meta(cfg, reference), "fit": f })),
    )?;
    write_file(cfg, "residuals.csv", &f.residuals_csv())?;
    write_file(cfg, "fig4_residual_correlogram.csv", &diag.residual_correlogram.to_csv())?;
    write_file(cfg, "diagnostics.json", &to_json(&diag))?;
    write_file(cfg, "fig5_fit_chart.csv", &fitted_csv(&fitted_values(&f, cfg.confidence)?))?;

    if let Some(bounds) = cfg.grid {
        let rows = grid_search(&series, bounds, &[false, true], fit_options(cfg), Execution::default())?;
        write_file(cfg, "grid.csv", &grid_csv(&rows))?;
        write_file(cfg, "grid.json", &to_json(&rows))?;
        if let Some(best) = rows.first() {
            println!("grid best: {}", best.spec);
        }
    }

    print_fit(&f);
    println!("white noise residuals: {}", diag.white_noise_pass);
    require_converged(&f)
}

pub fn diagnose_cmd(cfg: &RunConfig) -> CliResult<()> {
    let (_, _, f) = fit_selected(cfg)?;
    let diag = diagnose(&f)?;
    write_file(cfg, "fig4_residual_correlogram.csv", &diag.residual_correlogram.to_csv())?;
    write_file(cfg, "diagnostics.json", &to_json(&diag))?;
    for (lag, p) in &diag.lb_p_at {
        println!("Ljung-Box lag {lag}: p={p:.4}");
    }
    println!(
        "residual mean {:.5} (bound {:.5}); white noise: {}",
        diag.residual_mean, diag.mean_bound, diag.white_noise_pass
    );
    require_converged(&f)
}

pub fn forecast_cmd(cfg: &RunConfig) -> CliResult<()> {
    let (_, reference, f) = fit_selected(cfg)?;
    let fc = forecast(&f, cfg.horizon, cfg.confidence)?;
    write_file(cfg, "forecast.csv", &fc.to_csv())?;
    write_file(
        cfg,
        "forecast.json",
        &to_json(&json!({ "meta": input_meta(cfg, reference), "spec": f.spec, "forecast": fc })),
    )?;
    for s in &fc.steps {
        println!("+{}: {:.4} [{:.4}, {:.4}]", s.offset, s.point, s.lcl, s.ucl);
    }
    require_converged(&f)
}

pub fn scenario_cmd(cfg: &RunConfig) -> CliResult<()> {
    let table = load_table(cfg)?;
    let options = ScenarioOptions {
        spec: cfg.spec,
        confidence: cfg.confidence,
        horizon: cfg.horizon,
        fit: fit_options(cfg),
        execution: Execution::default(),
    };
    let report = run_scenario(&table, &options)?;

    let mut json = report.to_json();
    json.push('\n');
    write_file(cfg, "scenario.json", &json)?;
    write_file(cfg, "six_estimates.csv", &report.six_estimates_csv())?;

    let mut fig6 = String::from("series,Parameter,Estimate,SE,t,Sig.\n");
    for series in [Percentile::P5, Percentile::P95] {
        if let Some(f) = &report.outcome(series).fit {
            for line in f.table_csv().lines().skip(1) {
                fig6.push_str(&format!("{series},{line}\n"));
            }
        }
    }
    write_file(cfg, "fig6_params.csv", &fig6)?;
    for outcome in &report.fits {
        if let Some(fc) = &outcome.forecast {
            write_file(cfg, &format!("forecast_{}.csv", outcome.series), &fc.to_csv())?;
        }
    }

    for e in &report.six_estimates {
        println!("{:<7} {:<9} {:>8.3}", e.series.to_string(), e.term, e.estimate);
    }
    println!("{}", report.verdict);

    let failed: Vec<String> = report
        .fits
        .iter()
        .filter(|o| !o.converged())
        .map(|o| match &o.error {
            Some(e) => format!("{}: {e}", o.series),
            None => o.series.to_string(),
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::NotConverged(failed.join("; ")))
    }
}

pub fn simulate_cmd(cfg: &RunConfig) -> CliResult<()> {
    let mut spec = SimSpec::new(cfg.ar.clone(), cfg.ma.clone(), cfg.mean, cfg.sigma, cfg.n, cfg.seed);
    if let Some(b) = cfg.burn_in {
        spec = spec.with_burn_in(b);
    }
    let series = simulate_arma(&spec)?;
    let mut csv = String::from("t,value\n");
    for (t, v) in series.values().iter().enumerate() {
        csv.push_str(&format!("{t},{v}\n"));
    }
    write_file(cfg, "simulated.csv", &csv)?;
    println!("simulated {} values with seed {}", series.len(), cfg.seed);
    Ok(())
}
