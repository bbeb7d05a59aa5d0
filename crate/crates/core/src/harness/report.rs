//! Dataset-level statistics and the CSV / JSON / table renderings.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::CaseMetrics;
use crate::stats::{mean, quantile_sorted, sort_values, std_dev};
use crate::volume::{PerRegion, Region};

pub const CSV_HEADER: [&str; 7] = ["case_id", "dsc_et", "dsc_tc", "dsc_wt", "hd95_et", "hd95_tc", "hd95_wt"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
    pub median: f64,
    pub quantile_25: f64,
    pub quantile_75: f64,
}

impl SummaryStats {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut sorted = values.to_vec();
        sort_values(&mut sorted);
        Ok(Self {
            mean: mean(values).unwrap(),
            std_dev: std_dev(values).unwrap(),
            median: quantile_sorted(&sorted, 0.5).unwrap(),
            quantile_25: quantile_sorted(&sorted, 0.25).unwrap(),
            quantile_75: quantile_sorted(&sorted, 0.75).unwrap(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_cases: usize,
    pub dsc: PerRegion<SummaryStats>,
    pub hd95: PerRegion<SummaryStats>,
}

pub fn aggregate(cases: &[CaseMetrics]) -> Result<AggregateReport> {
    if cases.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dsc = PerRegion::from_fn(|r| cases.iter().map(|c| *c.dsc.get(r)).collect::<Vec<_>>())
        .try_map(|_, v| SummaryStats::of(v))?;
    let hd95 = PerRegion::from_fn(|r| cases.iter().map(|c| *c.hd95.get(r)).collect::<Vec<_>>())
        .try_map(|_, v| SummaryStats::of(v))?;
    Ok(AggregateReport {
        n_cases: cases.len(),
        dsc,
        hd95,
    })
}

const STAT_ROWS: [(&str, fn(&SummaryStats) -> f64); 5] = [
    ("Mean", |s| s.mean),
    ("StdDev", |s| s.std_dev),
    ("Median", |s| s.median),
    ("25quantile", |s| s.quantile_25),
    ("75quantile", |s| s.quantile_75),
];

/// Tab-separated statistics table: DSC and HD95 column groups with ET, TC, WT
/// columns each, one row per statistic.
pub fn render_statistics_table(report: &AggregateReport) -> String {
    let mut out = String::from("\tDSC\t\t\tHD95\t\t\n\tET\tTC\tWT\tET\tTC\tWT\n");
    for (name, stat) in STAT_ROWS {
        out.push_str(name);
        for group in [&report.dsc, &report.hd95] {
            for r in Region::ALL {
                let _ = write!(out, "\t{:.2}", stat(group.get(r)));
            }
        }
        out.push('\n');
    }
    out
}

/// One CSV/JSON row; field names are the fixed CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub case_id: String,
    pub dsc_et: f64,
    pub dsc_tc: f64,
    pub dsc_wt: f64,
    pub hd95_et: f64,
    pub hd95_tc: f64,
    pub hd95_wt: f64,
}

impl From<&CaseMetrics> for CaseRow {
    fn from(c: &CaseMetrics) -> Self {
        Self {
            case_id: c.case_id.clone(),
            dsc_et: c.dsc.et,
            dsc_tc: c.dsc.tc,
            dsc_wt: c.dsc.wt,
            hd95_et: c.hd95.et,
            hd95_tc: c.hd95.tc,
            hd95_wt: c.hd95.wt,
        }
    }
}

impl From<CaseRow> for CaseMetrics {
    fn from(r: CaseRow) -> Self {
        Self {
            case_id: r.case_id,
            dsc: PerRegion {
                et: r.dsc_et,
                tc: r.dsc_tc,
                wt: r.dsc_wt,
            },
            hd95: PerRegion {
                et: r.hd95_et,
                tc: r.hd95_tc,
                wt: r.hd95_wt,
            },
        }
    }
}

/// Writes per-case metrics as UTF-8 CSV with LF line endings, values with
/// four decimals.
pub fn write_cases_csv<W: Write>(cases: &[CaseMetrics], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in cases {
        let mut record = vec![c.case_id.clone()];
        for group in [&c.dsc, &c.hd95] {
            for r in Region::ALL {
                record.push(format!("{:.4}", group.get(r)));
            }
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

pub fn read_cases_csv<R: Read>(input: R) -> Result<Vec<CaseMetrics>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::MalformedReport(format!(
            "expected columns {}, found {}",
            CSV_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rdr.deserialize::<CaseRow>()
        .map(|row| Ok(CaseMetrics::from(row?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub cases: Vec<CaseRow>,
    pub aggregate: AggregateReport,
}

impl DatasetReport {
    pub fn new(cases: &[CaseMetrics]) -> Result<Self> {
        Ok(Self {
            cases: cases.iter().map(CaseRow::from).collect(),
            aggregate: aggregate(cases)?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(id: &str, dsc_et: f64) -> CaseMetrics {
        CaseMetrics {
            case_id: id.into(),
            dsc: PerRegion { et: dsc_et, tc: 50.0, wt: 75.0 },
            hd95: PerRegion { et: 1.0, tc: 2.0, wt: 3.0 },
        }
    }

    #[test]
    fn single_case_statistics_are_degenerate() {
        let r = aggregate(&[case("a", 91.5)]).unwrap();
        let s = r.dsc.et;
        assert_eq!((s.mean, s.median, s.std_dev, s.quantile_25, s.quantile_75), (91.5, 91.5, 0.0, 91.5, 91.5));
        assert_eq!(r.n_cases, 1);
    }

    #[test]
    fn four_case_quantiles() {
        let cases: Vec<_> = [80.0, 90.0, 90.0, 100.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| case(&i.to_string(), v))
            .collect();
        let s = aggregate(&cases).unwrap().dsc.et;
        assert_eq!((s.mean, s.median, s.quantile_25, s.quantile_75), (90.0, 90.0, 87.5, 92.5));
    }

    #[test]
    fn empty_aggregate_errors() {
        assert!(matches!(aggregate(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn csv_round_trip_and_header_check() {
        let cases = vec![case("BraTS2021_00001", 88.25)];
        let mut buf = Vec::new();
        write_cases_csv(&cases, &mut buf).unwrap();
        assert_eq!(read_cases_csv(buf.as_slice()).unwrap(), cases);
        let bad = b"case,dsc\nx,1\n";
        assert!(matches!(read_cases_csv(&bad[..]), Err(Error::MalformedReport(_))));
    }
}
