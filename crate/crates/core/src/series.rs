//! Per-step capital records and their CSV form.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// `(sum x p, sum x^2 p)` of a capital distribution, summed with
/// compensation so mirrored distributions give mirrored moments.
pub fn moments(dist: &[(i64, f64)]) -> (f64, f64) {
    (
        compensated_sum(dist.iter().map(|&(x, p)| x as f64 * p)),
        compensated_sum(dist.iter().map(|&(x, p)| (x * x) as f64 * p)),
    )
}

/// Formats a value with 13 significant digits in scientific notation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.12e}")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapitalRow {
    pub n: usize,
    pub expected_capital: f64,
    pub second_moment: f64,
    /// Standard error of `expected_capital` for Monte Carlo estimates.
    pub stderr: Option<f64>,
}

/// Expected capital and second moment per step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CapitalSeries {
    rows: Vec<CapitalRow>,
}

impl CapitalSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        CapitalSeries {
            rows: Vec::with_capacity(n),
        }
    }

    /// Appends a row; `n` must exceed the previous row's step.
    pub fn push(&mut self, n: usize, expected_capital: f64, second_moment: f64) {
        self.push_row(CapitalRow {
            n,
            expected_capital,
            second_moment,
            stderr: None,
        });
    }

    pub fn push_row(&mut self, row: CapitalRow) {
        if let Some(last) = self.rows.last() {
            assert!(row.n > last.n, "steps must be strictly increasing");
        }
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[CapitalRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&CapitalRow> {
        self.rows.last()
    }

    pub fn capitals(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.expected_capital).collect()
    }

    pub fn second_moments(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.second_moment).collect()
    }

    /// Capital at step `n`, if recorded.
    pub fn capital_at(&self, n: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.n == n)
            .map(|r| r.expected_capital)
    }

    fn has_stderr(&self) -> bool {
        self.rows.iter().any(|r| r.stderr.is_some())
    }

    /// CSV with header `n,expected_capital,second_moment` and a trailing
    /// `stderr` column when any row carries one.
    pub fn to_csv(&self) -> String {
        let with_err = self.has_stderr();
        let mut out = String::from("n,expected_capital,second_moment");
        if with_err {
            out.push_str(",stderr");
        }
        out.push('\n');
        for r in &self.rows {
            write!(
                out,
                "{},{},{}",
                r.n,
                fmt_num(r.expected_capital),
                fmt_num(r.second_moment)
            )
            .unwrap();
            if with_err {
                write!(out, ",{}", fmt_num(r.stderr.unwrap_or(0.0))).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty CSV".into()))?;
        let with_err = match header {
            "n,expected_capital,second_moment" => false,
            "n,expected_capital,second_moment,stderr" => true,
            other => return Err(Error::Config(format!("unexpected CSV header `{other}`"))),
        };
        let mut series = CapitalSeries::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 + usize::from(with_err) {
                return Err(Error::Config(format!("malformed CSV row `{line}`")));
            }
            series.push_row(CapitalRow {
                n: parse(cols[0])?,
                expected_capital: parse(cols[1])?,
                second_moment: parse(cols[2])?,
                stderr: if with_err {
                    Some(parse(cols[3])?)
                } else {
                    None
                },
            });
        }
        Ok(series)
    }
}

fn parse<T: FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{s}`")))
}

/// Position distribution at one step, for `n,x,probability` dumps.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionSnapshot {
    pub n: usize,
    pub probs: Vec<(i64, f64)>,
}

pub fn distribution_csv(snapshots: &[DistributionSnapshot]) -> String {
    let mut out = String::from("n,x,probability\n");
    for s in snapshots {
        for &(x, p) in &s.probs {
            writeln!(out, "{},{},{}", s.n, x, fmt_num(p)).unwrap();
        }
    }
    out
}

/// Per-trajectory record: a capital estimate and its square-weighted
/// counterpart at every step `0..=steps`.
///
/// For trajectories whose position register stays coherent these are the
/// conditional means `<x>` and `<x^2>`; for fully measured games they are the
/// sampled capital and its square.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryPath {
    pub capital: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl TrajectoryPath {
    pub fn from_integer_capitals(caps: &[i64]) -> Self {
        TrajectoryPath {
            capital: caps.iter().map(|&c| c as f64).collect(),
            second_moment: caps.iter().map(|&c| (c * c) as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.capital.len()
    }

    pub fn is_empty(&self) -> bool {
        self.capital.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_moments() {
        let dist = [(-3, 0.25), (0, 0.5), (3, 0.25)];
        assert_eq!(moments(&dist), (0.0, 4.5));
        // Naive summation loses the small terms entirely.
        let vals = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(vals.iter().copied()), 2.0);
    }
    use proptest::prelude::*;

    #[test]
    fn header_and_rows() {
        let mut s = CapitalSeries::new();
        s.push(0, 0.0, 0.0);
        s.push(1, 0.0896, 1.0);
        let csv = s.to_csv();
        assert!(csv.starts_with("n,expected_capital,second_moment\n"));
        assert!(csv.contains("1,8.960000000000e-2,1.000000000000e0\n"));
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
    }

    #[test]
    fn stderr_column_appears_when_present() {
        let mut s = CapitalSeries::new();
        s.push_row(CapitalRow {
            n: 0,
            expected_capital: 0.0,
            second_moment: 0.0,
            stderr: Some(0.0),
        });
        assert!(s
            .to_csv()
            .starts_with("n,expected_capital,second_moment,stderr\n"));
        assert_eq!(CapitalSeries::from_csv(&s.to_csv()).unwrap(), s);
    }

    #[test]
    #[should_panic]
    fn non_increasing_steps_panic() {
        let mut s = CapitalSeries::new();
        s.push(2, 0.0, 0.0);
        s.push(2, 0.0, 0.0);
    }

    #[test]
    fn bad_header_rejected() {
        assert!(CapitalSeries::from_csv("a,b,c\n1,2,3\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_keeps_twelve_digits(vals in prop::collection::vec((-1e6f64..1e6, 0f64..1e12), 0..20)) {
            let mut s = CapitalSeries::new();
            for (i, (c, m)) in vals.iter().enumerate() {
                s.push(i, *c, *m);
            }
            let back = CapitalSeries::from_csv(&s.to_csv()).unwrap();
            prop_assert_eq!(back.len(), s.len());
            for (a, b) in back.rows().iter().zip(s.rows()) {
                prop_assert!((a.expected_capital - b.expected_capital).abs() <= 1e-12 * b.expected_capital.abs().max(1e-300));
                prop_assert!((a.second_moment - b.second_moment).abs() <= 1e-12 * b.second_moment.abs().max(1e-300));
            }
        }
    }
}
