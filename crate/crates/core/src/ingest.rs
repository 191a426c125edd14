//! CSV loading and date alignment.
//!
//! Every file needs a header row. Dates are ISO `YYYY-MM-DD` (also accepted:
//! `YYYY/MM/DD` and `YYYYMMDD`). Empty cells in a series file are errors;
//! there is no imputation.

use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};
use crate::implied::{OptionChain, OptionQuote};
use crate::schedule::SchedulePoint;
use crate::types::{DatedSeries, ReturnKind, ReturnSeries};

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    ["%Y-%m-%d", "%Y/%m/%d", "%Y%m%d"]
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(s, f).ok())
}

/// `YYYY.M` label of a date, e.g. `2005.1`.
pub fn period_label(date: NaiveDate) -> String {
    format!("{}.{}", date.year(), date.month())
}

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if let csv::ErrorKind::Io(_) = e.kind() {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            _ => unreachable!(),
        }
    } else {
        Error::Csv {
            path: path.to_path_buf(),
            source: e,
        }
    }
}

fn column(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: format!("no `{name}` column in header"),
    })
}

fn parse_err(path: &Path, line: u64, msg: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    }
}

/// Reads one value column against a date column. Rows may come in any order;
/// the result is sorted by date and duplicate dates are rejected.
pub fn load_series_csv(path: &Path, date_column: &str, value_column: &str) -> Result<DatedSeries> {
    let mut rdr = open(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let di = column(path, &headers, date_column)?;
    let vi = column(path, &headers, value_column)?;

    let mut rows: Vec<(NaiveDate, f64, u64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let date_s = rec.get(di).unwrap_or("");
        let date = parse_date(date_s)
            .ok_or_else(|| parse_err(path, line, format!("bad date `{date_s}`")))?;
        let value_s = rec.get(vi).unwrap_or("");
        let value: f64 = value_s
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(path, line, format!("bad {value_column} value `{value_s}`")))?;
        rows.push((date, value, line));
    }
    if rows.is_empty() {
        return Err(Error::insufficient(format!("{} has no data rows", path.display())));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(parse_err(
            path,
            w[0].2.max(w[1].2),
            format!("duplicate date {}", w[0].0),
        ));
    }
    let (dates, values) = rows.into_iter().map(|(d, v, _)| (d, v)).unzip();
    let series = DatedSeries::new(dates, values)?;
    log::info!(
        "{}: {} rows, {} to {}",
        path.display(),
        series.len(),
        series.dates()[0],
        series.dates()[series.len() - 1]
    );
    Ok(series)
}

/// `date,return` file.
pub fn load_returns_csv(path: &Path, kind: ReturnKind) -> Result<ReturnSeries> {
    let s = load_series_csv(path, "date", "return")?;
    ReturnSeries::new(s.dates().to_vec(), s.values().to_vec(), kind)
}

/// `date,close` file.
pub fn load_close_csv(path: &Path) -> Result<DatedSeries> {
    load_series_csv(path, "date", "close")
}

/// `strike,call_mid,put_mid` file; either quote may be blank. Rows are sorted
/// by strike.
pub fn load_chain_csv(path: &Path, spot: f64, rate: f64, maturity: f64) -> Result<OptionChain> {
    let mut rdr = open(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let ki = column(path, &headers, "strike")?;
    let ci = column(path, &headers, "call_mid")?;
    let pi = column(path, &headers, "put_mid")?;

    let mut quotes: Vec<(OptionQuote, u64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize, name: &str| -> Result<Option<f64>> {
            match rec.get(i).unwrap_or("") {
                "" => Ok(None),
                s => s
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| parse_err(path, line, format!("bad {name} `{s}`"))),
            }
        };
        let strike = num(ki, "strike")?
            .ok_or_else(|| parse_err(path, line, "missing strike".into()))?;
        let q = OptionQuote::new(strike, num(ci, "call_mid")?, num(pi, "put_mid")?)
            .map_err(|e| parse_err(path, line, e.to_string()))?;
        quotes.push((q, line));
    }
    quotes.sort_by(|a, b| a.0.strike.total_cmp(&b.0.strike));
    if let Some(w) = quotes.windows(2).find(|w| w[0].0.strike == w[1].0.strike) {
        return Err(parse_err(
            path,
            w[0].1.max(w[1].1),
            format!("duplicate strike {}", w[0].0.strike),
        ));
    }
    OptionChain::new(spot, rate, maturity, quotes.into_iter().map(|q| q.0).collect())
}

/// Date of the first forward return at each schedule point.
pub fn anchor_dates(returns: &ReturnSeries, schedule: &[SchedulePoint]) -> Result<Vec<NaiveDate>> {
    schedule
        .iter()
        .map(|p| {
            returns.dates().get(p.anchor_offset()).copied().ok_or_else(|| {
                Error::insufficient(format!("anchor of point {} lies past the return series", p.index))
            })
        })
        .collect()
}

/// VIX close on each anchor date, divided by 100.
pub fn align_vix(returns: &ReturnSeries, vix: &DatedSeries, schedule: &[SchedulePoint]) -> Result<Vec<f64>> {
    let dates = anchor_dates(returns, schedule)?;
    let mut missing = Vec::new();
    let out: Vec<f64> = dates
        .iter()
        .map(|d| match vix.get(*d) {
            Some(v) => v / 100.0,
            None => {
                missing.push(d.to_string());
                f64::NAN
            }
        })
        .collect();
    if !missing.is_empty() {
        const SHOWN: usize = 10;
        let more = missing.len().saturating_sub(SHOWN);
        let mut msg = format!(
            "VIX has no close on {} anchor date(s): {}",
            missing.len(),
            missing[..missing.len().min(SHOWN)].join(", ")
        );
        if more > 0 {
            msg.push_str(&format!(" and {more} more"));
        }
        return Err(Error::MissingDates(msg));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn sorts_rows() {
        let f = file("date,close\n2005-01-04,13.98\n2005-01-03,14.08\n");
        let s = load_close_csv(f.path()).unwrap();
        assert_eq!(s.dates()[0], NaiveDate::from_ymd_opt(2005, 1, 3).unwrap());
        assert_eq!(s.values(), &[14.08, 13.98]);
    }

    #[test]
    fn reports_bad_line() {
        let f = file("date,close\n2005-01-03,14.08\n2005-01-04,abc\n");
        match load_close_csv(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let f = file("date,close\n2005-01-03,14.08\n2005-01-04,\n");
        assert!(matches!(load_close_csv(f.path()), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn rejects_duplicates_and_missing_columns() {
        let f = file("date,close\n2005-01-03,1\n2005-01-03,2\n");
        assert!(matches!(load_close_csv(f.path()), Err(Error::Parse { .. })));
        let f = file("day,close\n2005-01-03,1\n");
        assert!(matches!(load_close_csv(f.path()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            load_close_csv(Path::new("/nonexistent/vix.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn chain_with_blank_side() {
        let f = file("strike,call_mid,put_mid\n110,1.5,\n90,,0.8\n100,4.0,3.9\n");
        let c = load_chain_csv(f.path(), 100.0, 0.0, 0.1).unwrap();
        let k: Vec<f64> = c.quotes().iter().map(|q| q.strike).collect();
        assert_eq!(k, vec![90.0, 100.0, 110.0]);
        assert_eq!(c.quotes()[0].call_mid, None);
    }

    #[test]
    fn labels() {
        assert_eq!(period_label(NaiveDate::from_ymd_opt(2005, 1, 3).unwrap()), "2005.1");
        assert_eq!(period_label(NaiveDate::from_ymd_opt(2019, 10, 31).unwrap()), "2019.10");
        assert_eq!(parse_date("20050103"), NaiveDate::from_ymd_opt(2005, 1, 3));
    }
}
