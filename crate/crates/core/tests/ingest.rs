use asymdist::ingest::{load_quotes_csv, log_roi_series, read_quotes_csv, Calendar, QuoteSeries};
use asymdist::Error;
use chrono::{Days, NaiveDate};
use proptest::prelude::*;
use std::io::Write;

fn day(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

#[test]
fn loads_from_disk() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "date,adj_close\n2021-03-01,10\n2021-03-02,10.5").unwrap();
    let q = load_quotes_csv(f.path()).unwrap();
    assert_eq!(q.len(), 2);
    assert!(matches!(
        load_quotes_csv("/nonexistent/quotes.csv"),
        Err(Error::Io(_))
    ));
}

#[test]
fn malformed_rows_report_their_line() {
    let text = "date,adj_close\n2021-03-01,10\n2021-03-02,abc\n";
    match read_quotes_csv(text.as_bytes()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    let text = "date,adj_close\n2021-03-01,10\n2021-03-02,-1\n";
    assert!(matches!(
        read_quotes_csv(text.as_bytes()),
        Err(Error::Validation(_))
    ));
}

#[test]
fn constant_prices_give_zero_returns() {
    let start = day("2022-06-01");
    let q = QuoteSeries::new((0..10).map(|i| (start + Days::new(i), 42.0)).collect()).unwrap();
    let obs = log_roi_series(&q, Calendar::Daily).unwrap();
    assert!(obs.series.observed().all(|v| v == 0.0));
    assert_eq!(obs.series.observed_count(), 9);
}

#[test]
fn friday_to_monday_leaves_three_gaps() {
    let q = QuoteSeries::new(vec![
        (day("2024-03-08"), 100.0),
        (day("2024-03-11"), 101.0),
        (day("2024-03-12"), 99.0),
    ])
    .unwrap();
    let obs = log_roi_series(&q, Calendar::Daily).unwrap();
    let v = obs.series.values();
    assert_eq!(v.len(), 4);
    assert_eq!(&v[..3], &[None, None, None]);
    assert!((v[3].unwrap() - (99.0f64 / 101.0).ln()).abs() < 1e-15);
    assert_eq!(obs.date(0), day("2024-03-08"));
}

#[test]
fn single_quote_is_insufficient() {
    let q = QuoteSeries::new(vec![(day("2024-03-08"), 100.0)]).unwrap();
    assert!(matches!(
        log_roi_series(&q, Calendar::Daily),
        Err(Error::InsufficientData { .. })
    ));
}

proptest! {
    #[test]
    fn length_and_price_ratio_round_trip(
        steps in prop::collection::vec((1u64..4, 0.5..2.0f64), 1..60),
    ) {
        let start = day("2000-01-03");
        let mut d = start;
        let mut price = 100.0;
        let mut entries = vec![(d, price)];
        for (i, &(gap, ratio)) in steps.iter().enumerate() {
            // the first pair is always consecutive so the series is non-empty
            d = d + Days::new(if i == 0 { 1 } else { gap });
            price *= ratio;
            entries.push((d, price));
        }
        let q = QuoteSeries::new(entries.clone()).unwrap();
        let obs = log_roi_series(&q, Calendar::Daily).unwrap();
        prop_assert_eq!(obs.series.len() as i64, (d - start).num_days());
        prop_assert!(obs.series.observed_count() <= entries.len() - 1);
        // along each run of consecutive days the summed returns recover the price ratio
        let mut run_start = 0;
        for i in 1..=entries.len() {
            let breaks = i == entries.len() || (entries[i].0 - entries[i - 1].0).num_days() != 1;
            if breaks {
                if i - 1 > run_start {
                    let t0 = (entries[run_start].0 - start).num_days() as usize;
                    let t1 = (entries[i - 1].0 - start).num_days() as usize;
                    let sum: f64 = obs.series.values()[t0..t1].iter().map(|v| v.unwrap()).sum();
                    let ratio = entries[i - 1].1 / entries[run_start].1;
                    prop_assert!((sum.exp() - ratio).abs() <= 1e-12 * ratio);
                }
                run_start = i;
            }
        }
    }
}
