//! Continuous-time signals reconstructed by linear interpolation.

pub(crate) mod signal;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use signal::{Grid, ScoreSignal, Sign};

/// Affine range `[lower, upper]` of one signal component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Range {
    pub lower: f64,
    pub upper: f64,
}

impl From<[f64; 2]> for Range {
    fn from([lower, upper]: [f64; 2]) -> Self {
        Range { lower, upper }
    }
}

impl From<Range> for [f64; 2] {
    fn from(r: Range) -> Self {
        [r.lower, r.upper]
    }
}

impl Range {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::Config(format!(
                "bounds [{lower}, {upper}] must be finite with lower < upper"
            )));
        }
        Ok(Range { lower, upper })
    }

    /// `x -> 2 (x - lower) / (upper - lower) - 1`
    pub fn normalize(&self, x: f64) -> f64 {
        2.0 * (x - self.lower) / (self.upper - self.lower) - 1.0
    }

    pub fn denormalize(&self, y: f64) -> f64 {
        self.lower + (y + 1.0) * (self.upper - self.lower) / 2.0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Per-component normalization bounds, keyed by component name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bounds(BTreeMap<String, Range>);

impl Bounds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, range: Range) {
        self.0.insert(name.into(), range);
    }

    pub fn get(&self, name: &str) -> Option<&Range> {
        self.0.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Range)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Entries of `other` replace entries of `self`.
    pub fn merged(&self, other: &Bounds) -> Bounds {
        let mut out = self.clone();
        for (k, v) in &other.0 {
            out.0.insert(k.clone(), *v);
        }
        out
    }

    /// Parses one `name=lo:hi` entry.
    pub fn parse_entry(entry: &str) -> Result<(String, Range)> {
        let bad = || Error::Config(format!("bounds entry `{entry}` is not of the form name=lo:hi"));
        let (name, range) = entry.split_once('=').ok_or_else(bad)?;
        let (lo, hi) = range.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let name = name.trim();
        if name.is_empty() {
            return Err(bad());
        }
        Ok((name.to_string(), Range::new(lo, hi)?))
    }
}

impl FromStr for Bounds {
    type Err = Error;

    /// Comma- or whitespace-separated `name=lo:hi` entries.
    fn from_str(s: &str) -> Result<Self> {
        let mut bounds = Bounds::new();
        for entry in s.split(|c: char| c == ',' || c.is_whitespace()) {
            if entry.is_empty() {
                continue;
            }
            let (name, range) = Bounds::parse_entry(entry)?;
            bounds.insert(name, range);
        }
        Ok(bounds)
    }
}

/// A vector signal sampled at strictly increasing timestamps and linearly
/// interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    names: Vec<String>,
    times: Vec<f64>,
    columns: Vec<Vec<f64>>,
    normalized: bool,
}

impl Trace {
    /// Builds a trace from row-major samples (`rows[k]` is the vector at `times[k]`).
    pub fn new(names: Vec<String>, times: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != times.len() {
            return Err(Error::InvalidTrace(format!(
                "{} timestamps but {} sample rows",
                times.len(),
                rows.len()
            )));
        }
        let mut columns = vec![Vec::with_capacity(times.len()); names.len()];
        for (k, row) in rows.iter().enumerate() {
            if row.len() != names.len() {
                return Err(Error::InvalidTrace(format!(
                    "row {k} has {} values, expected {}",
                    row.len(),
                    names.len()
                )));
            }
            for (col, v) in columns.iter_mut().zip(row) {
                col.push(*v);
            }
        }
        Self::from_columns(names, times, columns)
    }

    pub fn from_columns(names: Vec<String>, times: Vec<f64>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidTrace("at least two timestamps are required".into()));
        }
        if names.len() != columns.len() {
            return Err(Error::InvalidTrace(format!(
                "{} names but {} columns",
                names.len(),
                columns.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::InvalidTrace(format!("duplicate component `{name}`")));
            }
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidTrace("non-finite timestamp".into()));
        }
        if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTrace(format!(
                "timestamps not strictly increasing at index {}",
                k + 1
            )));
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != times.len() {
                return Err(Error::InvalidTrace(format!(
                    "component `{name}` has {} samples, expected {}",
                    col.len(),
                    times.len()
                )));
            }
            if let Some(k) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidTrace(format!(
                    "non-finite value of `{name}` at t={}",
                    times[k]
                )));
            }
        }
        Ok(Trace {
            names,
            times,
            columns,
            normalized: false,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn column(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Fails unless `[from, to]` lies inside the sampled span.
    pub fn check_covers(&self, from: f64, to: f64) -> Result<()> {
        for t in [from, to] {
            if !(self.start() <= t && t <= self.end()) {
                return Err(Error::OutOfDomain {
                    time: t,
                    start: self.start(),
                    end: self.end(),
                });
            }
        }
        Ok(())
    }

    /// Index `k` of the segment `[times[k], times[k+1]]` containing `t`.
    pub(crate) fn segment(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&x| x <= t);
        k.saturating_sub(1).min(self.times.len() - 2)
    }

    /// Interpolated value of component `index` at `t` (clamped to the span).
    pub(crate) fn value(&self, index: usize, t: f64) -> f64 {
        let col = &self.columns[index];
        let k = self.segment(t);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        if t <= t0 {
            return col[k];
        }
        if t >= t1 {
            return col[k + 1];
        }
        let (v0, v1) = (col[k], col[k + 1]);
        v0 + (v1 - v0) * ((t - t0) / (t1 - t0))
    }

    /// Linearly interpolated sample vector at `t`.
    pub fn sample(&self, t: f64) -> Result<Vec<f64>> {
        self.check_covers(t, t)?;
        Ok((0..self.names.len()).map(|i| self.value(i, t)).collect())
    }

    /// Median spacing between consecutive timestamps.
    pub fn median_spacing(&self) -> f64 {
        let mut d: Vec<f64> = self.times.windows(2).map(|w| w[1] - w[0]).collect();
        d.sort_by(f64::total_cmp);
        let n = d.len();
        if n % 2 == 1 {
            d[n / 2]
        } else {
            0.5 * (d[n / 2 - 1] + d[n / 2])
        }
    }

    /// Maps each bounded component affinely onto `[-1, 1]`. Components without
    /// an entry in `bounds` must already lie in `[-1, 1]`.
    pub fn normalize(&self, bounds: &Bounds) -> Result<Trace> {
        let mut columns = Vec::with_capacity(self.columns.len());
        for (name, col) in self.names.iter().zip(&self.columns) {
            match bounds.get(name) {
                Some(range) => {
                    let mut out = Vec::with_capacity(col.len());
                    for (&t, &v) in self.times.iter().zip(col) {
                        if !range.contains(v) {
                            return Err(Error::OutOfBounds {
                                component: name.clone(),
                                time: t,
                                value: v,
                                lower: range.lower,
                                upper: range.upper,
                            });
                        }
                        out.push(range.normalize(v).clamp(-1.0, 1.0));
                    }
                    columns.push(out);
                }
                None => {
                    if let Some(k) = col.iter().position(|v| !(-1.0..=1.0).contains(v)) {
                        return Err(Error::NotNormalized(format!(
                            "component `{name}` has no bounds and value {} at t={}",
                            col[k], self.times[k]
                        )));
                    }
                    columns.push(col.clone());
                }
            }
        }
        Ok(Trace {
            names: self.names.clone(),
            times: self.times.clone(),
            columns,
            normalized: true,
        })
    }

    /// Like [`Trace::normalize`] but values beyond the bounds saturate at `±1`
    /// instead of failing. Used on simulated trajectories, which may leave
    /// the declared operating range while an optimizer explores.
    pub fn normalize_saturating(&self, bounds: &Bounds) -> Trace {
        let columns = self
            .names
            .iter()
            .zip(&self.columns)
            .map(|(name, col)| match bounds.get(name) {
                Some(range) => col
                    .iter()
                    .map(|&v| range.normalize(v).clamp(-1.0, 1.0))
                    .collect(),
                None => col.iter().map(|v| v.clamp(-1.0, 1.0)).collect(),
            })
            .collect();
        Trace {
            names: self.names.clone(),
            times: self.times.clone(),
            columns,
            normalized: true,
        }
    }

    /// Inverse of [`Trace::normalize`] for the bounded components.
    pub fn denormalize(&self, bounds: &Bounds) -> Trace {
        let columns = self
            .names
            .iter()
            .zip(&self.columns)
            .map(|(name, col)| match bounds.get(name) {
                Some(range) => col.iter().map(|&v| range.denormalize(v)).collect(),
                None => col.clone(),
            })
            .collect();
        Trace {
            names: self.names.clone(),
            times: self.times.clone(),
            columns,
            normalized: false,
        }
    }

    /// Declares an already-scaled trace as normalized after checking the range.
    pub fn assume_normalized(&self) -> Result<Trace> {
        self.normalize(&Bounds::new())
    }

    /// Restriction to the listed components, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Trace> {
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            columns.push(self.columns[self.index_of(name)?].clone());
        }
        Ok(Trace {
            names: names.iter().map(|s| s.to_string()).collect(),
            times: self.times.clone(),
            columns,
            normalized: self.normalized,
        })
    }

    /// Reads `time,name1,...,nameN` CSV.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Trace> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("time") {
            return Err(Error::InvalidTrace("first CSV column must be `time`".into()));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        if names.is_empty() {
            return Err(Error::InvalidTrace("CSV has no signal columns".into()));
        }
        let mut times = Vec::new();
        let mut rows = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidTrace(format!("row {}: `{s}` is not a number", line + 2))
                })
            };
            let mut fields = record.iter();
            times.push(parse(fields.next().unwrap_or(""))?);
            rows.push(fields.map(parse).collect::<Result<Vec<f64>>>()?);
        }
        Trace::new(names, times, rows)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Trace> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Trace::from_csv_reader(file)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["time".to_string()];
        header.extend(self.names.iter().cloned());
        wtr.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.columns.iter().map(|c| c[k].to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Trace[{}; {} samples on [{}, {}]]",
            self.names.join(","),
            self.len(),
            self.start(),
            self.end()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(times: Vec<f64>, values: Vec<f64>) -> Trace {
        Trace::from_columns(vec!["s".into()], times, vec![values]).unwrap()
    }

    #[test]
    fn sample_interpolates_linearly() {
        let tr = single(vec![0.0, 1.0], vec![0.0, 2.0]);
        assert_eq!(tr.sample(0.5).unwrap(), vec![1.0]);
        assert_eq!(tr.sample(0.0).unwrap(), vec![0.0]);
        let tr = single(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]);
        assert_eq!(tr.sample(1.5).unwrap(), vec![1.0]);
        assert_eq!(tr.sample(1.0).unwrap(), vec![2.0]);
        assert_eq!(tr.sample(2.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn sample_outside_span_fails() {
        let tr = single(vec![0.0, 1.0], vec![0.0, 2.0]);
        assert!(matches!(tr.sample(1.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(tr.sample(-0.1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn rejects_malformed_traces() {
        assert!(Trace::from_columns(vec!["s".into()], vec![0.0], vec![vec![1.0]]).is_err());
        assert!(
            Trace::from_columns(vec!["s".into()], vec![0.0, 0.0], vec![vec![1.0, 1.0]]).is_err()
        );
        assert!(Trace::from_columns(
            vec!["s".into()],
            vec![0.0, 1.0],
            vec![vec![1.0, f64::NAN]]
        )
        .is_err());
        assert!(Trace::from_columns(
            vec!["s".into(), "s".into()],
            vec![0.0, 1.0],
            vec![vec![1.0, 1.0], vec![0.0, 0.0]]
        )
        .is_err());
    }

    #[test]
    fn normalization_maps_bounds_affinely() {
        let tr = Trace::from_columns(
            vec!["speed".into()],
            vec![0.0, 1.0, 2.0],
            vec![vec![100.0, 0.0, 160.0]],
        )
        .unwrap();
        let bounds: Bounds = "speed=0:160".parse().unwrap();
        let n = tr.normalize(&bounds).unwrap();
        assert!(n.is_normalized());
        assert_eq!(n.column(0), &[0.25, -1.0, 1.0]);
    }

    #[test]
    fn normalization_reports_offending_sample() {
        let tr = single(vec![0.0, 1.0], vec![0.5, 3.0]);
        let bounds: Bounds = "s=0:2".parse().unwrap();
        match tr.normalize(&bounds) {
            Err(Error::OutOfBounds {
                component, time, ..
            }) => {
                assert_eq!(component, "s");
                assert_eq!(time, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        let sat = tr.normalize_saturating(&bounds);
        assert_eq!(sat.column(0), &[-0.5, 1.0]);
    }

    #[test]
    fn unbounded_component_must_already_be_normalized() {
        let tr = single(vec![0.0, 1.0], vec![0.5, 1.5]);
        assert!(matches!(tr.assume_normalized(), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn bounds_parse_entries() {
        let b: Bounds = "rpm=0:6000, speed=0:160".parse().unwrap();
        assert_eq!(b.get("rpm"), Some(&Range { lower: 0.0, upper: 6000.0 }));
        assert!("rpm=6000:0".parse::<Bounds>().is_err());
        assert!("rpm:0:1".parse::<Bounds>().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let tr = Trace::new(
            vec!["a".into(), "b".into()],
            vec![0.0, 0.5, 1.25],
            vec![vec![1.0, -2.0], vec![0.125, 3.5], vec![-1e-3, 0.0]],
        )
        .unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let back = Trace::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back, tr);
    }

    #[test]
    fn csv_is_parsed_strictly() {
        let bad_header = "t,a\n0,1\n1,2\n";
        assert!(Trace::from_csv_reader(bad_header.as_bytes()).is_err());
        let bad_value = "time,a\n0,1\n1,x\n";
        assert!(Trace::from_csv_reader(bad_value.as_bytes()).is_err());
        let ragged = "time,a\n0,1\n1\n";
        assert!(Trace::from_csv_reader(ragged.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn normalize_then_denormalize_recovers_values(
            lo in -1e3f64..1e3,
            width in 1e-2f64..1e3,
            fractions in proptest::collection::vec(0.0f64..=1.0, 2..20),
        ) {
            let hi = lo + width;
            let values: Vec<f64> = fractions.iter().map(|f| lo + f * width).collect();
            let times: Vec<f64> = (0..values.len()).map(|k| k as f64).collect();
            let tr = single(times, values.clone());
            let mut bounds = Bounds::new();
            bounds.insert("s", Range::new(lo, hi).unwrap());
            let back = tr.normalize(&bounds).unwrap().denormalize(&bounds);
            for (a, b) in back.column(0).iter().zip(&values) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs().max(width)));
            }
        }

        #[test]
        fn sample_is_exact_at_grid_points_and_bounded_between(
            values in proptest::collection::vec(-5.0f64..5.0, 2..12),
            theta in 0.0f64..1.0,
        ) {
            let times: Vec<f64> = (0..values.len()).map(|k| k as f64 * 0.5).collect();
            let tr = single(times.clone(), values.clone());
            for (t, v) in times.iter().zip(&values) {
                prop_assert_eq!(tr.sample(*t).unwrap()[0], *v);
            }
            for k in 0..values.len() - 1 {
                let t = times[k] + theta * 0.5;
                let s = tr.sample(t).unwrap()[0];
                let (lo, hi) = (values[k].min(values[k + 1]), values[k].max(values[k + 1]));
                prop_assert!(lo - 1e-12 <= s && s <= hi + 1e-12);
            }
        }
    }
}
