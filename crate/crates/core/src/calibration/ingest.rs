use std::io::Read;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::Serialize;

use crate::error::{Error, Result};

/// Longest run of consecutive missing days the repair rule accepts.
pub const MAX_GAP_DAYS: usize = 7;
const WINDOW_HALF: usize = 3;

/// One value per calendar day, after repair of missing days.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailySeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    /// Days whose value was missing in the source and has been filled.
    pub missing_mask: Vec<bool>,
    pub repaired: usize,
}

impl DailySeries {
    /// Consecutive days from `start` with no missing values.
    pub fn from_values(start: NaiveDate, values: Vec<f64>) -> Self {
        let dates = (0..values.len()).map(|i| start + Duration::days(i as i64)).collect();
        let n = values.len();
        Self { dates, values, missing_mask: vec![false; n], repaired: 0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

enum Layout {
    MaxMin { tmax: usize, tmin: usize },
    Average { tavg: usize },
}

/// Reads `date,tmax,tmin` or `date,tavg` rows (ISO dates, empty fields for
/// missing values), inserts absent calendar days as missing and fills every
/// missing day with the mean of the available values in its centred seven-day
/// window. Days are filled in date order, so earlier repairs feed later ones.
pub fn ingest_csv<R: Read>(source: R) -> Result<DailySeries> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers: Vec<String> =
        reader.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let date_col = column("date").ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing `date` column".into(),
    })?;
    let layout = match (column("tmax"), column("tmin"), column("tavg")) {
        (Some(tmax), Some(tmin), _) => Layout::MaxMin { tmax, tmin },
        (_, _, Some(tavg)) => Layout::Average { tavg },
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "expected `tmax,tmin` or `tavg` columns".into(),
            })
        }
    };

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut raw: Vec<Option<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let date = NaiveDate::parse_from_str(field(date_col), "%Y-%m-%d").map_err(|e| {
            Error::Parse { line, message: format!("bad date {:?}: {e}", field(date_col)) }
        })?;
        let number = |i: usize| -> Result<Option<f64>> {
            let text = field(i);
            if text.is_empty() {
                return Ok(None);
            }
            text.parse::<f64>()
                .map(Some)
                .map_err(|_| Error::Parse { line, message: format!("bad number {text:?}") })
        };
        let value = match layout {
            Layout::MaxMin { tmax, tmin } => match (number(tmax)?, number(tmin)?) {
                (Some(hi), Some(lo)) => Some(0.5 * (hi + lo)),
                _ => None,
            },
            Layout::Average { tavg } => number(tavg)?,
        };
        if let Some(&last) = dates.last() {
            if date <= last {
                return Err(Error::Parse {
                    line,
                    message: format!("date {date} does not follow {last}"),
                });
            }
            let mut next = last + Duration::days(1);
            while next < date {
                dates.push(next);
                raw.push(None);
                next += Duration::days(1);
            }
        }
        dates.push(date);
        raw.push(value);
    }
    if raw.is_empty() {
        return Err(Error::Parse { line: 1, message: "no data rows".into() });
    }
    repair(dates, raw)
}

pub fn ingest_csv_path(path: impl AsRef<Path>) -> Result<DailySeries> {
    ingest_csv(std::fs::File::open(path)?)
}

fn repair(dates: Vec<NaiveDate>, raw: Vec<Option<f64>>) -> Result<DailySeries> {
    let n = raw.len();
    let mut run = 0;
    for (i, v) in raw.iter().enumerate() {
        run = if v.is_none() { run + 1 } else { 0 };
        if run > MAX_GAP_DAYS {
            let start = i + 1 - run;
            let days = raw[start..].iter().take_while(|v| v.is_none()).count();
            return Err(Error::Gap { start: dates[start].to_string(), days });
        }
    }

    let missing_mask: Vec<bool> = raw.iter().map(Option::is_none).collect();
    let mut filled = raw.clone();
    for i in 0..n {
        if filled[i].is_some() {
            continue;
        }
        let lo = i.saturating_sub(WINDOW_HALF);
        let hi = (i + WINDOW_HALF).min(n - 1);
        let known: Vec<f64> = (lo..=hi).filter_map(|j| filled[j]).collect();
        if known.is_empty() {
            return Err(Error::Gap { start: dates[i].to_string(), days: 1 });
        }
        filled[i] = Some(known.iter().sum::<f64>() / known.len() as f64);
    }
    let repaired = missing_mask.iter().filter(|m| **m).count();
    Ok(DailySeries {
        dates,
        values: filled.into_iter().map(|v| v.expect("filled")).collect(),
        missing_mask,
        repaired,
    })
}
