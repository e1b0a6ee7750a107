//! Reading the ensemble percentile table (age, 5th, median, 95th) from CSV.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Header names for the four columns. Matching ignores case and surrounding
/// whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColumnMap {
    pub age: String,
    pub p5: String,
    pub median: String,
    pub p95: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            age: "age_bp".into(),
            p5: "p5".into(),
            median: "median".into(),
            p95: "p95".into(),
        }
    }
}

impl FromStr for ColumnMap {
    type Err = Error;

    /// Parses `age=NAME,p5=NAME,median=NAME,p95=NAME`; omitted keys keep
    /// their defaults.
    fn from_str(s: &str) -> Result<Self> {
        let mut map = ColumnMap::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("column mapping `{part}` is not key=value")))?;
            let value = value.trim().to_string();
            match key.trim().to_ascii_lowercase().as_str() {
                "age" => map.age = value,
                "p5" => map.p5 = value,
                "median" => map.median = value,
                "p95" => map.p95 = value,
                other => return Err(Error::InvalidArgument(format!("unknown column key `{other}`"))),
            }
        }
        Ok(map)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleRow {
    pub age_bp: f64,
    pub p5: f64,
    pub median: f64,
    pub p95: f64,
}

/// Rows in file order. Ages are strictly monotonic with constant spacing and
/// `p5 <= median <= p95` holds on every row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleTable {
    rows: Vec<EnsembleRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Percentile {
    P5,
    Median,
    P95,
}

impl Percentile {
    pub const ALL: [Percentile; 3] = [Percentile::P5, Percentile::Median, Percentile::P95];

    pub fn pick(self, row: &EnsembleRow) -> f64 {
        match self {
            Percentile::P5 => row.p5,
            Percentile::Median => row.median,
            Percentile::P95 => row.p95,
        }
    }
}

impl fmt::Display for Percentile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Percentile::P5 => "p5",
            Percentile::Median => "median",
            Percentile::P95 => "p95",
        })
    }
}

impl FromStr for Percentile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p5" | "5" | "5th" => Ok(Percentile::P5),
            "median" | "p50" | "50" => Ok(Percentile::Median),
            "p95" | "95" | "95th" => Ok(Percentile::P95),
            other => Err(Error::InvalidArgument(format!("unknown series `{other}`"))),
        }
    }
}

const SPACING_RTOL: f64 = 1e-6;

impl EnsembleTable {
    pub fn new(rows: Vec<EnsembleRow>) -> Result<Self> {
        validate(&rows, |i| i as u64 + 1)?;
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[EnsembleRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Bin spacing in years.
    pub fn step(&self) -> f64 {
        if self.rows.len() < 2 {
            1.0
        } else {
            (self.rows[1].age_bp - self.rows[0].age_bp).abs()
        }
    }

    /// Rows ordered oldest first.
    pub fn chronological(&self) -> Vec<EnsembleRow> {
        let mut rows = self.rows.clone();
        if rows.len() > 1 && rows[0].age_bp < rows[1].age_bp {
            rows.reverse();
        }
        rows
    }

    /// Writes the table back out with the given header names.
    pub fn to_csv(&self, columns: &ColumnMap) -> String {
        let mut out = format!("{},{},{},{}\n", columns.age, columns.p5, columns.median, columns.p95);
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.age_bp, r.p5, r.median, r.p95));
        }
        out
    }
}

fn validate(rows: &[EnsembleRow], line_of: impl Fn(usize) -> u64) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptySeries);
    }
    for (i, r) in rows.iter().enumerate() {
        if !(r.p5 <= r.median && r.median <= r.p95) {
            return Err(Error::Validation {
                line: line_of(i),
                message: format!("percentiles out of order: p5 {} median {} p95 {}", r.p5, r.median, r.p95),
            });
        }
    }
    if rows.len() >= 2 {
        let spacing = rows[1].age_bp - rows[0].age_bp;
        if spacing == 0.0 {
            return Err(Error::Validation {
                line: line_of(1),
                message: "ages must be strictly monotonic".into(),
            });
        }
        for i in 1..rows.len() {
            let gap = rows[i].age_bp - rows[i - 1].age_bp;
            if gap.signum() != spacing.signum() || ((gap - spacing) / spacing).abs() > SPACING_RTOL {
                return Err(Error::Validation {
                    line: line_of(i),
                    message: format!("age spacing {gap} differs from {spacing}"),
                });
            }
        }
    }
    Ok(())
}

/// Parses the percentile CSV. Blank lines and lines starting with `#` are
/// skipped; error line numbers refer to the physical file.
pub fn parse_percentiles_csv<R: Read>(source: R, columns: &ColumnMap) -> Result<EnsembleTable> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let locate = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim().trim_start_matches('\u{feff}').eq_ignore_ascii_case(name.trim()))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let idx = [
        locate(&columns.age)?,
        locate(&columns.p5)?,
        locate(&columns.median)?,
        locate(&columns.p95)?,
    ];
    let names = [&columns.age, &columns.p5, &columns.median, &columns.p95];

    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut vals = [0.0; 4];
        for k in 0..4 {
            let raw = record.get(idx[k]).unwrap_or("");
            vals[k] = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    column: names[k].clone(),
                    value: raw.to_string(),
                })?;
        }
        rows.push(EnsembleRow {
            age_bp: vals[0],
            p5: vals[1],
            median: vals[2],
            p95: vals[3],
        });
        lines.push(line);
    }
    validate(&rows, |i| lines[i])?;
    Ok(EnsembleTable { rows })
}

/// Chronologically ascending series (oldest first) for one column.
pub fn to_series(table: &EnsembleTable, column: Percentile) -> TimeSeries {
    let rows = table.chronological();
    let values = rows.iter().map(|r| column.pick(r)).collect();
    let origin = format!("{} BP", rows[0].age_bp);
    TimeSeries::new(values, table.step(), origin).expect("validated table yields a valid series")
}

/// 1800-1900 CE expressed in years before 2019.
pub const REFERENCE_AGES_BP: (f64, f64) = (119.0, 219.0);

/// Index, in chronological order, of the bin used as the pre-industrial
/// reference: the bin whose age is nearest the middle of
/// [`REFERENCE_AGES_BP`]. Ties go to the older bin.
pub fn reference_index(table: &EnsembleTable) -> usize {
    let target = 0.5 * (REFERENCE_AGES_BP.0 + REFERENCE_AGES_BP.1);
    table
        .chronological()
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |(best, dist), (i, r)| {
            let d = (r.age_bp - target).abs();
            if d < dist {
                (i, d)
            } else {
                (best, dist)
            }
        })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIXTURE: &str = "age_bp,p5,median,p95\n200,-0.5,-0.1,0.3\n100,-0.4,0.0,0.4\n0,-0.2,0.2,0.6\n";

    #[test]
    fn parses_small_fixture() {
        let t = parse_percentiles_csv(FIXTURE.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(
            t.rows()[1],
            EnsembleRow { age_bp: 100.0, p5: -0.4, median: 0.0, p95: 0.4 }
        );
        assert_eq!(t.step(), 100.0);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let csv = "age_bp,p5,p95\n0,1,2\n";
        assert_eq!(
            parse_percentiles_csv(csv.as_bytes(), &ColumnMap::default()),
            Err(Error::MissingColumn("median".into()))
        );
    }

    #[test]
    fn non_numeric_reports_line() {
        let csv = "age_bp,p5,median,p95\n100,0,0.1,0.2\n0,0,abc,0.2\n";
        let err = parse_percentiles_csv(csv.as_bytes(), &ColumnMap::default()).unwrap_err();
        assert_eq!(
            err,
            Error::Parse { line: 3, column: "median".into(), value: "abc".into() }
        );
    }

    #[test]
    fn percentile_order_violation_reports_line() {
        let csv = "age_bp,p5,median,p95\n# comment\n\n100,0,0.1,0.2\n0,0.5,0.1,0.2\n";
        match parse_percentiles_csv(csv.as_bytes(), &ColumnMap::default()) {
            Err(Error::Validation { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn irregular_spacing_rejected() {
        let csv = "age_bp,p5,median,p95\n300,0,0,0\n200,0,0,0\n50,0,0,0\n";
        assert!(matches!(
            parse_percentiles_csv(csv.as_bytes(), &ColumnMap::default()),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn column_override() {
        let csv = "Age,lo,mid,hi,extra\n100,1,2,3,x\n0,1,2,3,y\n";
        let map: ColumnMap = "age=Age,p5=lo,median=MID,p95=hi".parse().unwrap();
        let t = parse_percentiles_csv(csv.as_bytes(), &map).unwrap();
        assert_eq!(t.rows()[0].median, 2.0);
        assert!("bogus=1".parse::<ColumnMap>().is_err());
    }

    #[test]
    fn series_is_oldest_first() {
        let t = parse_percentiles_csv(FIXTURE.as_bytes(), &ColumnMap::default()).unwrap();
        let s = to_series(&t, Percentile::Median);
        assert_eq!(s.values(), &[-0.1, 0.0, 0.2]);
        assert_eq!(s.step(), 100.0);
        assert_eq!(to_series(&t, Percentile::P5).values(), &[-0.5, -0.4, -0.2]);
        let asc = "age_bp,p5,median,p95\n0,0,3,9\n100,0,2,9\n200,0,1,9\n";
        let t = parse_percentiles_csv(asc.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(to_series(&t, Percentile::Median).values(), &[1.0, 2.0, 3.0]);
        assert_eq!(to_series(&t, Percentile::Median).origin_label(), "200 BP");
    }

    #[test]
    fn reference_bin_is_two_hundred_bp() {
        let t = parse_percentiles_csv(FIXTURE.as_bytes(), &ColumnMap::default()).unwrap();
        // Chronological order is 200, 100, 0.
        assert_eq!(reference_index(&t), 0);
    }

    fn table_strategy() -> impl Strategy<Value = EnsembleTable> {
        (2usize..40, prop::bool::ANY).prop_flat_map(|(n, descending)| {
            prop::collection::vec((-5f64..5.0, 0f64..2.0, 0f64..2.0), n).prop_map(move |cells| {
                let rows = cells
                    .iter()
                    .enumerate()
                    .map(|(i, &(m, lo, hi))| EnsembleRow {
                        age_bp: if descending { ((n - 1 - i) * 100) as f64 } else { (i * 100) as f64 },
                        p5: m - lo,
                        median: m,
                        p95: m + hi,
                    })
                    .collect();
                EnsembleTable::new(rows).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip(table in table_strategy()) {
            let map = ColumnMap::default();
            let back = parse_percentiles_csv(table.to_csv(&map).as_bytes(), &map).unwrap();
            prop_assert_eq!(back, table);
        }

        #[test]
        fn to_series_preserves_values(table in table_strategy()) {
            for col in Percentile::ALL {
                let mut a: Vec<f64> = to_series(&table, col).into_values();
                let mut b: Vec<f64> = table.rows().iter().map(|r| col.pick(r)).collect();
                a.sort_by(f64::total_cmp);
                b.sort_by(f64::total_cmp);
                prop_assert_eq!(a, b);
            }
        }
    }
}
