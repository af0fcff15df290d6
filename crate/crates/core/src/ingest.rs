//! Hourly meter readings to normalized 24-value daily profiles.
//!
//! The pipeline is: parse → segment (season × day type) → drop days with any
//! missing hour → min–max normalise over the household's pooled segment
//! values → average each hour across days.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};
use log::warn;
use thiserror::Error;

use crate::formats::{check_header, csv_reader, csv_writer, format_value, hour_columns, parse_finite};
use crate::HOURS;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("negative energy {value}, line {line}")]
    NegativeEnergy { line: u64, value: f64 },
    #[error(
        "duplicate reading for household {household_id} on {date} hour {hour:02} (line {line}, first seen line {first_line})"
    )]
    Duplicate {
        household_id: String,
        date: NaiveDate,
        hour: u8,
        line: u64,
        first_line: u64,
    },
    #[error("household {household_id} has no complete days in segment {segment}")]
    NoCompleteDays {
        household_id: String,
        segment: Segment,
    },
    #[error("day {date} of household {household_id} is incomplete")]
    IncompleteDay {
        household_id: String,
        date: NaiveDate,
    },
    #[error("days from more than one household passed to a per-household operation")]
    MixedHouseholds,
    #[error("invalid season months: {0}")]
    InvalidSeasons(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One household's energy use for one clock hour.
#[derive(Debug, Clone, PartialEq)]
pub struct MeterReading {
    pub household_id: String,
    pub date: NaiveDate,
    pub hour: u8,
    /// kWh, never negative.
    pub energy: f64,
}

impl MeterReading {
    pub fn timestamp(&self) -> NaiveDateTime {
        self.date
            .and_hms_opt(u32::from(self.hour), 0, 0)
            .expect("hour is validated on construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Season {
    Winter,
    Summer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DayType {
    Weekday,
    Weekend,
}

impl DayType {
    /// Monday–Friday are weekdays, Saturday and Sunday the weekend.
    pub fn of(date: NaiveDate) -> DayType {
        match date.weekday() {
            Weekday::Sat | Weekday::Sun => DayType::Weekend,
            _ => DayType::Weekday,
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Season::Winter => "winter",
            Season::Summer => "summer",
        })
    }
}

impl fmt::Display for DayType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DayType::Weekday => "weekday",
            DayType::Weekend => "weekend",
        })
    }
}

impl FromStr for Season {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "winter" => Ok(Season::Winter),
            "summer" => Ok(Season::Summer),
            _ => Err(format!("unknown season {s:?} (expected winter or summer)")),
        }
    }
}

impl FromStr for DayType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "weekday" => Ok(DayType::Weekday),
            "weekend" => Ok(DayType::Weekend),
            _ => Err(format!("unknown day type {s:?} (expected weekday or weekend)")),
        }
    }
}

/// A (season, day type) pair, e.g. winter weekends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Segment {
    pub season: Season,
    pub day_type: DayType,
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}s", self.season, self.day_type)
    }
}

/// Month sets (1 = January) for each season. The two sets are disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeasonMonths {
    winter: BTreeSet<u32>,
    summer: BTreeSet<u32>,
}

impl SeasonMonths {
    pub fn new(
        winter: impl IntoIterator<Item = u32>,
        summer: impl IntoIterator<Item = u32>,
    ) -> Result<Self, IngestError> {
        let winter: BTreeSet<u32> = winter.into_iter().collect();
        let summer: BTreeSet<u32> = summer.into_iter().collect();
        if let Some(bad) = winter.iter().chain(&summer).find(|m| !(1..=12).contains(*m)) {
            return Err(IngestError::InvalidSeasons(format!("month {bad} out of range 1..=12")));
        }
        if let Some(shared) = winter.intersection(&summer).next() {
            return Err(IngestError::InvalidSeasons(format!(
                "month {shared} belongs to both winter and summer"
            )));
        }
        Ok(Self { winter, summer })
    }

    pub fn months(&self, season: Season) -> &BTreeSet<u32> {
        match season {
            Season::Winter => &self.winter,
            Season::Summer => &self.summer,
        }
    }
}

impl Default for SeasonMonths {
    /// Winter = Dec, Jan, Feb; Summer = Jun, Jul, Aug.
    fn default() -> Self {
        Self {
            winter: [12, 1, 2].into_iter().collect(),
            summer: [6, 7, 8].into_iter().collect(),
        }
    }
}

/// Which dates belong to a segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentSpec {
    pub segment: Segment,
    pub months: SeasonMonths,
}

impl SegmentSpec {
    pub fn new(season: Season, day_type: DayType) -> Self {
        Self {
            segment: Segment { season, day_type },
            months: SeasonMonths::default(),
        }
    }

    pub fn with_months(mut self, months: SeasonMonths) -> Self {
        self.months = months;
        self
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.months.months(self.segment.season).contains(&date.month())
            && DayType::of(date) == self.segment.day_type
    }
}

/// One household's readings for one calendar date. Missing hours are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct DayRecord {
    pub household_id: String,
    pub date: NaiveDate,
    pub values: [Option<f64>; HOURS],
}

impl DayRecord {
    pub fn empty(household_id: impl Into<String>, date: NaiveDate) -> Self {
        Self {
            household_id: household_id.into(),
            date,
            values: [None; HOURS],
        }
    }

    pub fn complete(household_id: impl Into<String>, date: NaiveDate, values: [f64; HOURS]) -> Self {
        Self {
            household_id: household_id.into(),
            date,
            values: values.map(Some),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    fn complete_values(&self) -> Result<[f64; HOURS], IngestError> {
        let mut out = [0.0; HOURS];
        for (dst, v) in out.iter_mut().zip(&self.values) {
            *dst = v.ok_or_else(|| IngestError::IncompleteDay {
                household_id: self.household_id.clone(),
                date: self.date,
            })?;
        }
        Ok(out)
    }
}

/// A household's mean normalized profile over one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyProfile {
    pub household_id: String,
    pub segment: Segment,
    /// Each value lies in [0, 1].
    pub values: [f64; HOURS],
    /// Number of complete days averaged, at least 1.
    pub day_count: usize,
}

const READINGS_HEADER: [&str; 3] = ["household_id", "timestamp", "kwh"];

fn parse_timestamp(cell: &str) -> Result<(NaiveDate, u8), String> {
    let ts = NaiveDateTime::parse_from_str(cell, "%Y-%m-%dT%H:%M")
        .map_err(|e| format!("cannot parse timestamp {cell:?}: {e}"))?;
    if ts.minute() != 0 {
        return Err(format!("timestamp {cell:?} is not on the hour"));
    }
    Ok((ts.date(), ts.hour() as u8))
}

/// Parses the `household_id,timestamp,kwh` readings CSV.
///
/// Rows come back in input order. Any malformed row, negative energy or
/// repeated (household, date, hour) key aborts the parse with the offending
/// line number.
pub fn parse_readings<R: Read>(reader: R) -> Result<Vec<MeterReading>, IngestError> {
    let mut rdr = csv_reader(reader);
    let expected: Vec<String> = READINGS_HEADER.iter().map(|s| s.to_string()).collect();
    let header = rdr.headers()?.clone();
    check_header(&header, &expected).map_err(|message| IngestError::Malformed { line: 1, message })?;

    let mut seen: HashMap<(String, NaiveDate, u8), u64> = HashMap::new();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let malformed = |message: String| IngestError::Malformed { line, message };
        if record.len() != READINGS_HEADER.len() {
            return Err(malformed(format!(
                "expected {} columns, found {}",
                READINGS_HEADER.len(),
                record.len()
            )));
        }
        let household_id = record[0].to_string();
        if household_id.is_empty() {
            return Err(malformed("empty household_id".into()));
        }
        let (date, hour) = parse_timestamp(&record[1]).map_err(malformed)?;
        let energy = parse_finite(&record[2], "kwh").map_err(|m| IngestError::Malformed { line, message: m })?;
        if energy < 0.0 {
            return Err(IngestError::NegativeEnergy { line, value: energy });
        }
        match seen.entry((household_id.clone(), date, hour)) {
            std::collections::hash_map::Entry::Occupied(first) => {
                return Err(IngestError::Duplicate {
                    household_id,
                    date,
                    hour,
                    line,
                    first_line: *first.get(),
                });
            }
            std::collections::hash_map::Entry::Vacant(slot) => {
                slot.insert(line);
            }
        }
        out.push(MeterReading {
            household_id,
            date,
            hour,
            energy,
        });
    }
    Ok(out)
}

/// Groups readings that fall in the segment into per-household day records,
/// sorted by date. Hours without a reading stay `None`.
pub fn segment_days(readings: &[MeterReading], spec: &SegmentSpec) -> BTreeMap<String, Vec<DayRecord>> {
    let mut grouped: BTreeMap<String, BTreeMap<NaiveDate, DayRecord>> = BTreeMap::new();
    for r in readings.iter().filter(|r| spec.contains(r.date)) {
        let day = grouped
            .entry(r.household_id.clone())
            .or_default()
            .entry(r.date)
            .or_insert_with(|| DayRecord::empty(r.household_id.clone(), r.date));
        day.values[usize::from(r.hour)] = Some(r.energy);
    }
    grouped
        .into_iter()
        .map(|(id, days)| (id, days.into_values().collect()))
        .collect()
}

/// Keeps only days with all 24 hours present, in their original order.
pub fn filter_complete_days(days: Vec<DayRecord>) -> Vec<DayRecord> {
    days.into_iter().filter(DayRecord::is_complete).collect()
}

/// Min–max scales one household's segment pool into [0, 1].
///
/// The minimum and maximum are taken over every hourly value of every day
/// in `days`. A flat pool (max = min) maps to all zeros.
pub fn normalise(days: &[DayRecord]) -> Result<Vec<DayRecord>, IngestError> {
    let Some(first) = days.first() else {
        return Ok(Vec::new());
    };
    if days.iter().any(|d| d.household_id != first.household_id) {
        return Err(IngestError::MixedHouseholds);
    }
    let pooled: Vec<[f64; HOURS]> = days.iter().map(DayRecord::complete_values).collect::<Result<_, _>>()?;
    let (min, max) = pooled
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = max - min;
    if range == 0.0 {
        warn!(
            "household {} has flat usage ({min} kWh every hour); profile set to zeros",
            first.household_id
        );
    }
    Ok(days
        .iter()
        .zip(pooled)
        .map(|(day, values)| {
            let scaled = values.map(|v| if range == 0.0 { 0.0 } else { (v - min) / range });
            DayRecord::complete(day.household_id.clone(), day.date, scaled)
        })
        .collect())
}

/// Hour-by-hour mean over normalized complete days.
///
/// Days are summed in date order, so the result does not depend on the order
/// of `days`.
pub fn average_profile(
    days: &[DayRecord],
    household_id: &str,
    segment: Segment,
) -> Result<DailyProfile, IngestError> {
    if days.is_empty() {
        return Err(IngestError::NoCompleteDays {
            household_id: household_id.to_string(),
            segment,
        });
    }
    let mut ordered: Vec<&DayRecord> = days.iter().collect();
    ordered.sort_by_key(|d| d.date);
    let mut sums = [0.0; HOURS];
    for day in ordered {
        if day.household_id != household_id {
            return Err(IngestError::MixedHouseholds);
        }
        for (s, v) in sums.iter_mut().zip(day.complete_values()?) {
            *s += v;
        }
    }
    let count = days.len();
    Ok(DailyProfile {
        household_id: household_id.to_string(),
        segment,
        values: sums.map(|s| s / count as f64),
        day_count: count,
    })
}

/// Filter, normalise and average one household's segment days.
pub fn profile_from_days(
    household_id: &str,
    segment: Segment,
    days: Vec<DayRecord>,
) -> Result<DailyProfile, IngestError> {
    let complete = filter_complete_days(days);
    let normalised = normalise(&complete)?;
    average_profile(&normalised, household_id, segment)
}

/// A household left out of clustering and why.
#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub household_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileSet {
    /// Sorted by household id.
    pub profiles: Vec<DailyProfile>,
    /// Sorted by household id.
    pub excluded: Vec<Exclusion>,
}

/// Runs the whole pipeline for one segment over every household seen in
/// `readings`. Households without a single complete day in the segment are
/// reported in `excluded` rather than failing the run.
pub fn build_profiles(readings: &[MeterReading], spec: &SegmentSpec) -> Result<ProfileSet, IngestError> {
    let households: BTreeSet<&str> = readings.iter().map(|r| r.household_id.as_str()).collect();
    let mut by_household = segment_days(readings, spec);
    let mut set = ProfileSet::default();
    for id in households {
        let days = by_household.remove(id).unwrap_or_default();
        match profile_from_days(id, spec.segment, days) {
            Ok(profile) => set.profiles.push(profile),
            Err(e @ IngestError::NoCompleteDays { .. }) => set.excluded.push(Exclusion {
                household_id: id.to_string(),
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(set)
}

fn profiles_header() -> Vec<String> {
    let mut cols: Vec<String> = ["household_id", "season", "day_type", "day_count"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(hour_columns("h"));
    cols
}

/// Writes `household_id,season,day_type,day_count,h00,...,h23`.
pub fn write_profiles<W: Write>(writer: W, profiles: &[DailyProfile]) -> Result<(), IngestError> {
    let mut w = csv_writer(writer);
    w.write_record(profiles_header())?;
    for p in profiles {
        let mut row = vec![
            p.household_id.clone(),
            p.segment.season.to_string(),
            p.segment.day_type.to_string(),
            p.day_count.to_string(),
        ];
        row.extend(p.values.iter().map(|&v| format_value(v)));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a profiles CSV written by [`write_profiles`].
pub fn read_profiles<R: Read>(reader: R) -> Result<Vec<DailyProfile>, IngestError> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers()?.clone();
    let expected = profiles_header();
    check_header(&header, &expected).map_err(|message| IngestError::Malformed { line: 1, message })?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let malformed = |message: String| IngestError::Malformed { line, message };
        if record.len() != expected.len() {
            return Err(malformed(format!(
                "expected {} columns, found {}",
                expected.len(),
                record.len()
            )));
        }
        let season: Season = record[1].parse().map_err(malformed)?;
        let day_type: DayType = record[2].parse().map_err(malformed)?;
        let day_count: usize = record[3]
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| malformed(format!("invalid day_count {:?}", &record[3])))?;
        let mut values = [0.0; HOURS];
        for (h, v) in values.iter_mut().enumerate() {
            *v = parse_finite(&record[4 + h], &expected[4 + h]).map_err(malformed)?;
            if !(0.0..=1.0).contains(v) {
                return Err(malformed(format!("{} value {} outside [0, 1]", expected[4 + h], v)));
            }
        }
        out.push(DailyProfile {
            household_id: record[0].to_string(),
            segment: Segment { season, day_type },
            values,
            day_count,
        });
    }
    Ok(out)
}
