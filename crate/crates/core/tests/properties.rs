use std::cmp::Ordering;

use boxjenkins::diagnostics::{diagnose, grid_csv, grid_search, information_criteria, rank_order, GridBounds};
use boxjenkins::identification::{acf, ljung_box};
use boxjenkins::ingest::{EnsembleRow, EnsembleTable};
use boxjenkins::scenario::{run_scenario, ScenarioOptions};
use boxjenkins::series::median;
use boxjenkins::simulate::{simulate_arma, SimSpec};
use boxjenkins::{Execution, FitOptions, TimeSeries};
use proptest::prelude::*;

proptest! {
    #[test]
    fn ljung_box_is_monotone_in_lag(values in prop::collection::vec(-100.0f64..100.0, 30..200)) {
        prop_assume!(values.iter().any(|v| (v - values[0]).abs() > 1e-6));
        let n = values.len();
        let k = (n / 4).min(20);
        let rho = acf(&values, k).unwrap();
        let rows = ljung_box(&rho, n, k).unwrap();
        for pair in rows.windows(2) {
            prop_assert!(pair[1].q_stat >= pair[0].q_stat);
        }
    }

    #[test]
    fn six_estimate_median_ignores_order(
        six in prop::array::uniform6(-1.0f64..1.0),
        rotation in 0usize..6,
        reverse in any::<bool>(),
    ) {
        let mut permuted = six;
        permuted.rotate_left(rotation);
        if reverse {
            permuted.reverse();
        }
        prop_assert_eq!(median(&six).unwrap(), median(&permuted).unwrap());
    }
}

fn sample_series() -> TimeSeries {
    simulate_arma(&SimSpec::new(vec![0.7], vec![0.3], 0.5, 1.0, 150, 99)).unwrap()
}

#[test]
fn grid_ranking_is_a_total_order() {
    let rows = grid_search(&sample_series(), GridBounds::default(), &[false, true], FitOptions::default(), Execution::Sequential).unwrap();
    for a in &rows {
        assert_eq!(rank_order(a, a), Ordering::Equal);
        for b in &rows {
            let ab = rank_order(a, b);
            assert_eq!(ab, rank_order(b, a).reverse());
            if a.spec != b.spec {
                assert_ne!(ab, Ordering::Equal, "{} vs {}", a.spec, b.spec);
            }
        }
    }
    for pair in rows.windows(2) {
        assert_ne!(rank_order(&pair[0], &pair[1]), Ordering::Greater);
    }
    let again = grid_search(&sample_series(), GridBounds::default(), &[false, true], FitOptions::default(), Execution::Sequential).unwrap();
    assert_eq!(grid_csv(&rows), grid_csv(&again));
}

#[test]
fn diagnosed_aic_matches_information_criteria() {
    let rows = grid_search(&sample_series(), GridBounds::default(), &[false, true], FitOptions::default(), Execution::default()).unwrap();
    for row in rows {
        if let Some(f) = &row.fit {
            let d = diagnose(f).unwrap();
            assert_eq!(d.aic, information_criteria(f).aic, "{}", row.spec);
            assert_eq!(d.bic, information_criteria(f).bic, "{}", row.spec);
        }
    }
}

fn synthetic_table() -> EnsembleTable {
    let mid = simulate_arma(&SimSpec::new(vec![0.92], vec![0.3], 0.0, 0.1, 121, 5)).unwrap();
    let spread = simulate_arma(&SimSpec::new(vec![0.8], vec![], 0.0, 0.05, 121, 6)).unwrap();
    let rows = (0..121)
        .map(|i| {
            let m = mid.values()[i];
            let w = 0.4 + spread.values()[i].abs();
            EnsembleRow {
                age_bp: (12_000 - 100 * i) as f64,
                p5: m - w,
                median: m,
                p95: m + 0.8 * w,
            }
        })
        .collect();
    EnsembleTable::new(rows).unwrap()
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let table = synthetic_table();
    let series = sample_series();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let report = run_scenario(&table, &ScenarioOptions::default()).unwrap();
            let grid = grid_search(&series, GridBounds::default(), &[false, true], FitOptions::default(), Execution::Parallel).unwrap();
            (report.to_json(), grid_csv(&grid))
        })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(3));
    let sequential = ScenarioOptions {
        execution: Execution::Sequential,
        ..ScenarioOptions::default()
    };
    assert_eq!(one.0, run_scenario(&table, &sequential).unwrap().to_json());
}
