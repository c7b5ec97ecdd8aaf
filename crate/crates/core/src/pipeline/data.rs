//! Station and ensemble time series, with their CSV formats.
//!
//! Station files have the header `timestamp,temperature`; ensemble files
//! `launch,lead_hours,member_id,temperature`. Timestamps are ISO-8601 UTC
//! (`2005-01-01T00:00:00Z`). Member id 0 is the control run.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::spline::CubicSpline;
use crate::error::{input, OddsError, Result};

/// Hours since the Unix epoch, the time axis used for all splines.
pub fn epoch_hours(t: DateTime<Utc>) -> f64 {
    t.timestamp() as f64 / 3600.0 + f64::from(t.timestamp_subsec_nanos()) / 3.6e12
}

/// Hour of day in `[0, 24)` at `epoch_hours` time `t`.
pub fn hour_of_day(t: f64) -> f64 {
    t.rem_euclid(24.0)
}

fn format_time(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn parse_time(s: &str, line: u64) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| OddsError::Ingest(format!("line {line}: bad timestamp '{s}': {e}")))
}

fn parse_f64(s: &str, what: &str, line: u64) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| OddsError::Ingest(format!("line {line}: bad {what} '{s}'")))?;
    if !v.is_finite() {
        return Err(OddsError::Ingest(format!("line {line}: non-finite {what}")));
    }
    Ok(v)
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers()?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(OddsError::Ingest(format!(
            "expected header {}, got {}",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

/// Station temperature observations (°C) with strictly increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationSeries {
    samples: Vec<(DateTime<Utc>, f64)>,
}

impl StationSeries {
    pub fn new(samples: Vec<(DateTime<Utc>, f64)>) -> Result<Self> {
        if let Some(w) = samples.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(OddsError::Ingest(format!(
                "station timestamps must increase strictly: {} then {}",
                format_time(w[0].0),
                format_time(w[1].0)
            )));
        }
        if let Some((t, _)) = samples.iter().find(|(_, v)| !v.is_finite()) {
            return Err(OddsError::Ingest(format!(
                "non-finite temperature at {}",
                format_time(*t)
            )));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(DateTime<Utc>, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Spline over [`epoch_hours`].
    pub fn spline(&self) -> Result<CubicSpline> {
        let (t, y) = self.samples.iter().map(|(t, y)| (epoch_hours(*t), *y)).unzip();
        CubicSpline::new(t, y)
    }

    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        check_header(&mut rdr, &["timestamp", "temperature"])?;
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 2 {
                return Err(OddsError::Ingest(format!(
                    "line {line}: expected 2 fields, got {}",
                    rec.len()
                )));
            }
            samples.push((parse_time(&rec[0], line)?, parse_f64(&rec[1], "temperature", line)?));
        }
        Self::new(samples)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["timestamp", "temperature"])?;
        for (t, y) in &self.samples {
            w.write_record([format_time(*t), y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One ensemble launch: a control run and perturbed members on a shared
/// lead-time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleForecast {
    pub launch: DateTime<Utc>,
    /// Lead times in hours, strictly increasing.
    pub lead_hours: Vec<f64>,
    pub control: Vec<f64>,
    pub members: Vec<Vec<f64>>,
}

impl EnsembleForecast {
    pub fn new(launch: DateTime<Utc>, lead_hours: Vec<f64>, control: Vec<f64>, members: Vec<Vec<f64>>) -> Result<Self> {
        if members.len() < 2 {
            return Err(input(format!(
                "ensemble needs at least 2 members, got {}",
                members.len()
            )));
        }
        if lead_hours.windows(2).any(|w| !(w[1] > w[0])) || lead_hours.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
            return Err(input("lead times must be non-negative and strictly increasing"));
        }
        for series in std::iter::once(&control).chain(&members) {
            if series.len() != lead_hours.len() {
                return Err(OddsError::Ingest(format!(
                    "launch {}: member has {} values for {} lead times",
                    format_time(launch),
                    series.len(),
                    lead_hours.len()
                )));
            }
            if series.iter().any(|v| !v.is_finite()) {
                return Err(input("ensemble temperatures must be finite"));
            }
        }
        Ok(Self {
            launch,
            lead_hours,
            control,
            members,
        })
    }

    /// Read a file holding one or more launches, ordered by launch time.
    pub fn read_csv(reader: impl Read) -> Result<Vec<Self>> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        check_header(&mut rdr, &["launch", "lead_hours", "member_id", "temperature"])?;
        type Member = Vec<(f64, f64)>;
        let mut launches: BTreeMap<DateTime<Utc>, BTreeMap<u32, Member>> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 4 {
                return Err(OddsError::Ingest(format!(
                    "line {line}: expected 4 fields, got {}",
                    rec.len()
                )));
            }
            let launch = parse_time(&rec[0], line)?;
            let lead = parse_f64(&rec[1], "lead_hours", line)?;
            let id: u32 = rec[2]
                .trim()
                .parse()
                .map_err(|_| OddsError::Ingest(format!("line {line}: bad member_id '{}'", &rec[2])))?;
            let temp = parse_f64(&rec[3], "temperature", line)?;
            launches
                .entry(launch)
                .or_default()
                .entry(id)
                .or_default()
                .push((lead, temp));
        }
        launches
            .into_iter()
            .map(|(launch, mut members)| {
                for series in members.values_mut() {
                    series.sort_by(|a, b| a.0.total_cmp(&b.0));
                }
                let control = members.remove(&0).ok_or_else(|| {
                    OddsError::Ingest(format!("launch {}: no control run (member_id 0)", format_time(launch)))
                })?;
                let leads: Vec<f64> = control.iter().map(|p| p.0).collect();
                for (id, series) in &members {
                    if series.len() != leads.len() || series.iter().zip(&leads).any(|(p, l)| p.0 != *l) {
                        return Err(OddsError::Ingest(format!(
                            "launch {}: member {id} lead times do not match the control",
                            format_time(launch)
                        )));
                    }
                }
                let values = |s: &Member| s.iter().map(|p| p.1).collect::<Vec<_>>();
                Self::new(
                    launch,
                    leads.clone(),
                    values(&control),
                    members.values().map(values).collect(),
                )
            })
            .collect()
    }

    pub fn write_csv<'a>(forecasts: impl IntoIterator<Item = &'a Self>, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["launch", "lead_hours", "member_id", "temperature"])?;
        for f in forecasts {
            let launch = format_time(f.launch);
            for (id, series) in std::iter::once(&f.control).chain(&f.members).enumerate() {
                for (lead, v) in f.lead_hours.iter().zip(series) {
                    w.write_record([launch.clone(), lead.to_string(), id.to_string(), v.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}
