//! Quarterly calendar, series and aligned series panels.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::report::fmt_sig;

/// A calendar quarter. Ordering is chronological.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quarter {
    year: i32,
    q: u8,
}

impl Quarter {
    pub fn new(year: i32, q: u8) -> Result<Self> {
        if !(1..=4).contains(&q) {
            return Err(Error::Parameter(format!("quarter {q} outside 1..=4")));
        }
        Ok(Self { year, q })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn quarter(self) -> u8 {
        self.q
    }

    /// Quarters elapsed since year 0 q1.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 4 + (self.q as i64 - 1)
    }

    pub fn from_ordinal(ord: i64) -> Self {
        let year = ord.div_euclid(4) as i32;
        let q = ord.rem_euclid(4) as u8 + 1;
        Self { year, q }
    }

    pub fn add(self, k: i64) -> Self {
        Self::from_ordinal(self.ordinal() + k)
    }

    pub fn succ(self) -> Self {
        self.add(1)
    }

    pub fn pred(self) -> Self {
        self.add(-1)
    }

    /// Signed number of quarters from `self` to `other`.
    pub fn until(self, other: Quarter) -> i64 {
        other.ordinal() - self.ordinal()
    }

    /// Inclusive count of quarters in `[self, end]`; zero when `end < self`.
    pub fn span_len(self, end: Quarter) -> usize {
        (self.until(end) + 1).max(0) as usize
    }
}

/// Shift `q` by `k` quarters with year carry.
pub fn quarter_add(q: Quarter, k: i64) -> Quarter {
    q.add(k)
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}q{}", self.year, self.q)
    }
}

impl FromStr for Quarter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse {
            line: 0,
            msg: format!("bad quarter `{s}`, expected YYYYQn"),
        };
        let pos = s.find(['Q', 'q']).ok_or_else(bad)?;
        let year: i32 = s[..pos].parse().map_err(|_| bad())?;
        let q: u8 = s[pos + 1..].parse().map_err(|_| bad())?;
        Quarter::new(year, q).map_err(|_| bad())
    }
}

impl Serialize for Quarter {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Quarter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A contiguous quarterly series. Missing values (`None`) may only appear
/// as leading or trailing gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    start: Quarter,
    values: Vec<Option<f64>>,
}

impl Series {
    pub fn new(start: Quarter, values: Vec<Option<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries("series needs at least one value".into()));
        }
        let s = Self { start, values };
        s.check_gaps()?;
        Ok(s)
    }

    /// Series with every value observed.
    pub fn from_values(start: Quarter, values: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(start, values.into_iter().map(Some).collect())
    }

    // Used by transforms, whose outputs only ever grow head gaps.
    pub(crate) fn from_parts(start: Quarter, values: Vec<Option<f64>>) -> Self {
        debug_assert!(!values.is_empty());
        Self { start, values }
    }

    fn check_gaps(&self) -> Result<()> {
        let first = self.values.iter().position(Option::is_some);
        let last = self.values.iter().rposition(Option::is_some);
        if let (Some(a), Some(b)) = (first, last) {
            if let Some(i) = (a..=b).find(|&i| self.values[i].is_none()) {
                return Err(Error::Domain(format!(
                    "interior missing value at {}",
                    self.start.add(i as i64)
                )));
            }
        }
        Ok(())
    }

    pub fn start(&self) -> Quarter {
        self.start
    }

    pub fn end(&self) -> Quarter {
        self.start.add(self.values.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, q: Quarter) -> Option<f64> {
        let i = self.start.until(q);
        if i < 0 {
            return None;
        }
        self.values.get(i as usize).copied().flatten()
    }

    /// First quarter holding an observed value.
    pub fn first_observed(&self) -> Option<Quarter> {
        self.values
            .iter()
            .position(Option::is_some)
            .map(|i| self.start.add(i as i64))
    }

    pub fn last_observed(&self) -> Option<Quarter> {
        self.values
            .iter()
            .rposition(Option::is_some)
            .map(|i| self.start.add(i as i64))
    }

    /// Shift by `k` quarters: the value at `t` becomes the value at `t - k`.
    pub fn lag(&self, k: usize) -> Result<Series> {
        if k >= self.len() {
            return Err(Error::EmptySeries(format!(
                "lag {k} of a series of length {}",
                self.len()
            )));
        }
        let mut out = vec![None; k];
        out.extend_from_slice(&self.values[..self.len() - k]);
        Ok(Series::from_parts(self.start, out))
    }

    /// Map observed values pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Series {
        Series::from_parts(self.start, self.values.iter().map(|v| v.map(&f)).collect())
    }

    /// Re-express on the calendar `[start, start + len)`, padding with missing values.
    pub fn realign(&self, start: Quarter, len: usize) -> Series {
        let values = (0..len).map(|i| self.get(start.add(i as i64))).collect();
        Series::from_parts(start, values)
    }
}

/// Lag free function mirroring [`Series::lag`].
pub fn lag(s: &Series, k: usize) -> Result<Series> {
    s.lag(k)
}

/// Named series sharing one quarterly calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFrame {
    start: Quarter,
    len: usize,
    columns: IndexMap<String, Series>,
}

impl SeriesFrame {
    pub fn new(start: Quarter, len: usize) -> Self {
        Self {
            start,
            len,
            columns: IndexMap::new(),
        }
    }

    /// Build a frame spanning the union of the inputs' calendars.
    pub fn from_series<I, S>(series: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Series)>,
        S: Into<String>,
    {
        let items: Vec<(String, Series)> = series.into_iter().map(|(n, s)| (n.into(), s)).collect();
        let start = items
            .iter()
            .map(|(_, s)| s.start())
            .min()
            .ok_or_else(|| Error::EmptySeries("frame needs at least one series".into()))?;
        let end = items.iter().map(|(_, s)| s.end()).max().unwrap();
        let mut frame = Self::new(start, start.span_len(end));
        for (name, s) in items {
            frame.insert(name, s)?;
        }
        Ok(frame)
    }

    pub fn start(&self) -> Quarter {
        self.start
    }

    pub fn end(&self) -> Quarter {
        self.start.add(self.len as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn quarter(&self, row: usize) -> Quarter {
        self.start.add(row as i64)
    }

    /// Row index of `q`, if inside the span.
    pub fn row_of(&self, q: Quarter) -> Option<usize> {
        let i = self.start.until(q);
        (i >= 0 && (i as usize) < self.len).then_some(i as usize)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn num_series(&self) -> usize {
        self.columns.len()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Result<&Series> {
        self.columns
            .get(name)
            .ok_or_else(|| Error::UnknownSeries(name.to_string()))
    }

    pub fn value(&self, name: &str, q: Quarter) -> Result<Option<f64>> {
        Ok(self.get(name)?.get(q))
    }

    /// Insert or replace a series, aligning it to the frame calendar. Values
    /// outside the frame span are an alignment error.
    pub fn insert(&mut self, name: impl Into<String>, s: Series) -> Result<()> {
        let name = name.into();
        let outside = s.values.iter().enumerate().any(|(i, v)| {
            let at = s.start.add(i as i64);
            v.is_some() && (at < self.start || at > self.end())
        });
        if outside {
            return Err(Error::Alignment(format!(
                "series `{name}` ({}..{}) extends beyond frame span {}..{}",
                s.start(),
                s.end(),
                self.start,
                self.end()
            )));
        }
        self.columns.insert(name, s.realign(self.start, self.len));
        Ok(())
    }

    /// Calendar slice `[start, end]`.
    pub fn window(&self, start: Quarter, end: Quarter) -> Result<SeriesFrame> {
        if start > end {
            return Err(Error::Range(format!("window start {start} after end {end}")));
        }
        if start < self.start || end > self.end() {
            return Err(Error::Range(format!(
                "window {start}..{end} outside frame span {}..{}",
                self.start,
                self.end()
            )));
        }
        let len = start.span_len(end);
        let columns = self
            .columns
            .iter()
            .map(|(n, s)| (n.clone(), s.realign(start, len)))
            .collect();
        Ok(SeriesFrame { start, len, columns })
    }

    /// First quarter at which every named series is observed.
    pub fn balanced_start(&self, names: &[&str]) -> Result<Option<Quarter>> {
        let mut start = self.start;
        for n in names {
            match self.get(n)?.first_observed() {
                Some(q) => start = start.max(q),
                None => return Ok(None),
            }
        }
        Ok(Some(start))
    }

    /// Read the `date,<series...>` CSV layout. Dates are `YYYYQn`, empty
    /// cells are missing, and missing values may only lead or trail a column.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.is_empty() || !headers[0].eq_ignore_ascii_case("date") {
            return Err(Error::Parse {
                line: 1,
                msg: "first column must be `date`".into(),
            });
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n) {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("duplicate series name `{n}`"),
                });
            }
        }
        let mut start: Option<Quarter> = None;
        let mut cols: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
            let q: Quarter = rec[0].parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad date `{}`", &rec[0]),
            })?;
            match start {
                None => start = Some(q),
                Some(s) if s.add(i as i64) != q => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("date {q} breaks quarterly spacing (expected {})", s.add(i as i64)),
                    })
                }
                _ => {}
            }
            if rec.len() != names.len() + 1 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {} fields, found {}", names.len() + 1, rec.len()),
                });
            }
            for (j, cell) in rec.iter().skip(1).enumerate() {
                let v = if cell.is_empty() {
                    None
                } else {
                    let x: f64 = cell.parse().map_err(|_| Error::Parse {
                        line,
                        msg: format!("non-numeric value `{cell}` in column `{}`", names[j]),
                    })?;
                    Some(x)
                };
                cols[j].push(v);
            }
        }
        let start = start.ok_or_else(|| Error::Parse {
            line: 2,
            msg: "no data rows".into(),
        })?;
        let len = cols.first().map_or(0, Vec::len);
        let mut frame = SeriesFrame::new(start, len);
        for (name, values) in names.into_iter().zip(cols) {
            let s = Series::new(start, values).map_err(|e| Error::Parse {
                line: 0,
                msg: format!("column `{name}`: {e}"),
            })?;
            frame.columns.insert(name, s);
        }
        Ok(frame)
    }

    pub fn read_csv_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Write in the same layout accepted by [`SeriesFrame::read_csv`],
    /// numbers with 6 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W, names: Option<&[&str]>) -> Result<()> {
        let names: Vec<&str> = match names {
            Some(n) => n.to_vec(),
            None => self.names().collect(),
        };
        let cols = names.iter().map(|n| self.get(n)).collect::<Result<Vec<_>>>()?;
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date"];
        header.extend(names.iter().copied());
        w.write_record(&header)?;
        for row in 0..self.len {
            let mut rec = vec![self.quarter(row).to_string().to_uppercase()];
            rec.extend(cols.iter().map(|s| s.values[row].map(fmt_sig).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
