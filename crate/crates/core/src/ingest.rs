//! Daily quotes to log-ROI observation series with missing markers.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::Rng;
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::dist::AsymmetricNormal;
use crate::error::{Error, Result};
use crate::hmm::{HmmModel, ObservationSeries};

/// Date-ordered adjusted closing prices.
#[derive(Debug, Clone, PartialEq)]
pub struct QuoteSeries {
    entries: Vec<(NaiveDate, f64)>,
}

impl QuoteSeries {
    /// Sorts by date; rejects duplicate dates and non-positive prices.
    pub fn new(mut entries: Vec<(NaiveDate, f64)>) -> Result<Self> {
        if let Some((d, v)) = entries.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Validation(format!(
                "price on {d} must be positive, got {v}"
            )));
        }
        entries.sort_by_key(|e| e.0);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation(format!("duplicate date {}", w[0].0)));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(NaiveDate, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "adj_close"]).map_err(csv_io)?;
        for (d, v) in &self.entries {
            w.write_record([d.to_string(), v.to_string()])
                .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Reads `date,adj_close` CSV with ISO-8601 dates.
pub fn read_quotes_csv<R: Read>(input: R) -> Result<QuoteSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.len() != 2 || &header[0] != "date" || &header[1] != "adj_close" {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `date,adj_close`, got `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut entries = Vec::new();
    let mut lines: HashMap<NaiveDate, u64> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let parse_err = |message: String| Error::Parse { line, message };
        if rec.len() != 2 {
            return Err(parse_err(format!("expected 2 fields, got {}", rec.len())));
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| parse_err(format!("bad date `{}`: {e}", &rec[0])))?;
        let price: f64 = rec[1]
            .parse()
            .map_err(|_| parse_err(format!("bad price `{}`", &rec[1])))?;
        if !(price.is_finite() && price > 0.0) {
            return Err(Error::Validation(format!(
                "line {line}: price must be positive, got {price}"
            )));
        }
        if let Some(first) = lines.insert(date, line) {
            return Err(Error::Validation(format!(
                "line {line}: duplicate date {date} (first on line {first})"
            )));
        }
        entries.push((date, price));
    }
    QuoteSeries::new(entries)
}

pub fn load_quotes_csv(path: impl AsRef<Path>) -> Result<QuoteSeries> {
    read_quotes_csv(std::fs::File::open(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Calendar {
    /// One slot per calendar day.
    #[default]
    Daily,
}

/// An observation series anchored at a start date, one slot per day.
#[derive(Debug, Clone, PartialEq)]
pub struct DatedObservations {
    pub start: NaiveDate,
    pub series: ObservationSeries,
}

impl DatedObservations {
    pub fn date(&self, t: usize) -> NaiveDate {
        self.start + Days::new(t as u64)
    }

    /// CSV `date,log_roi`; missing slots have an empty value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "log_roi"]).map_err(csv_io)?;
        for (t, v) in self.series.values().iter().enumerate() {
            let value = v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([self.date(t).to_string(), value])
                .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Slot `d` holds `ln(v_{d+1} / v_d)` when both days are quoted, else missing.
/// The series covers every day from the first quote up to the day before the last.
pub fn log_roi_series(q: &QuoteSeries, calendar: Calendar) -> Result<DatedObservations> {
    let Calendar::Daily = calendar;
    let e = q.entries();
    if e.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: e.len(),
        });
    }
    let start = e[0].0;
    let len = (e[e.len() - 1].0 - start).num_days() as usize;
    let mut values = vec![None; len];
    for w in e.windows(2) {
        if (w[1].0 - w[0].0).num_days() == 1 {
            let t = (w[0].0 - start).num_days() as usize;
            values[t] = Some((w[1].1 / w[0].1).ln());
        }
    }
    let series = ObservationSeries::new(values)
        .map_err(|_| Error::Validation("no pair of consecutive quoted days".into()))?;
    Ok(DatedObservations { start, series })
}

/// The five-regime model behind the bundled synthetic quotes: daily
/// log-returns with skewed emissions and sticky transitions.
pub fn synthetic_model() -> HmmModel {
    let em =
        |mu: f64, sigma: f64, p: f64| AsymmetricNormal::new(mu, sigma, p).expect("valid constants");
    let emissions = vec![
        em(-0.012, 0.030, 0.70),
        em(-0.002, 0.014, 0.60),
        em(0.0005, 0.006, 0.45),
        em(0.002, 0.009, 0.35),
        em(0.008, 0.020, 0.30),
    ];
    let trans = vec![
        vec![0.900, 0.060, 0.010, 0.010, 0.020],
        vec![0.020, 0.950, 0.020, 0.005, 0.005],
        vec![0.002, 0.010, 0.975, 0.010, 0.003],
        vec![0.002, 0.005, 0.015, 0.970, 0.008],
        vec![0.030, 0.010, 0.010, 0.050, 0.900],
    ];
    HmmModel::new(vec![0.2; 5], trans, emissions).expect("valid constants")
}

/// Weekday-only quotes from `start` through `end` driven by `model`, one
/// emission per trading day, starting at price 1000.
pub fn synthetic_quotes<R: Rng + ?Sized>(
    start: NaiveDate,
    end: NaiveDate,
    model: &HmmModel,
    rng: &mut R,
) -> Result<QuoteSeries> {
    if end <= start {
        return Err(Error::Validation("end date must follow start date".into()));
    }
    let days: Vec<NaiveDate> = start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect();
    let (_, returns) = model.simulate(days.len().saturating_sub(1), rng);
    let mut price = 1000.0;
    let mut entries = Vec::with_capacity(days.len());
    for (i, d) in days.into_iter().enumerate() {
        if i > 0 {
            price *= returns[i - 1].exp();
        }
        entries.push((d, price));
    }
    QuoteSeries::new(entries)
}
