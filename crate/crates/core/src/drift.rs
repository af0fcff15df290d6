//! Membership trajectories against a frozen model and progress toward a
//! designated target cluster.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::fcm::{check_row, membership_of, ClusterModel, FcmError, ROW_SUM_TOLERANCE};
use crate::formats::{csv_writer, format_value, index_columns};
use crate::ingest::{profile_from_days, segment_days, Exclusion, IngestError, MeterReading, SegmentSpec};

#[derive(Debug, Error)]
pub enum DriftError {
    #[error("no periods to track")]
    EmptyTrajectory,
    #[error("target cluster {target} out of range for {clusters} clusters")]
    TargetOutOfRange { target: usize, clusters: usize },
    #[error("period {later:?} does not come after {earlier:?}")]
    UnorderedPeriods { earlier: String, later: String },
    #[error("trajectory mixes households {0:?} and {1:?}")]
    MixedHouseholds(String, String),
    #[error("membership row for period {period:?} is invalid: {message}")]
    InvalidRow { period: String, message: String },
    #[error(transparent)]
    Fcm(#[from] FcmError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A household's profile built from one period's readings only.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodProfile {
    pub household_id: String,
    /// Ordered by plain string comparison, e.g. `2024-01`.
    pub period_label: String,
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub period_label: String,
    pub membership: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub household_id: String,
    pub target_cluster: usize,
    pub trajectory: Vec<TrajectoryPoint>,
    /// `u_t[target] − u_{t−1}[target]`, one per step.
    pub deltas: Vec<f64>,
    /// Last target membership minus the first.
    pub net_progress: f64,
    /// L1 distance between consecutive membership rows, one per step.
    pub l1_shifts: Vec<f64>,
}

/// Memberships of each period's profile against `model`, in period order.
/// The model is only read.
pub fn membership_trajectory(
    periods: &[PeriodProfile],
    model: &ClusterModel,
) -> Result<Vec<TrajectoryPoint>, DriftError> {
    let first = periods.first().ok_or(DriftError::EmptyTrajectory)?;
    for pair in periods.windows(2) {
        if pair[1].household_id != first.household_id {
            return Err(DriftError::MixedHouseholds(first.household_id.clone(), pair[1].household_id.clone()));
        }
        if pair[1].period_label <= pair[0].period_label {
            return Err(DriftError::UnorderedPeriods {
                earlier: pair[0].period_label.clone(),
                later: pair[1].period_label.clone(),
            });
        }
    }
    periods
        .iter()
        .map(|p| {
            Ok(TrajectoryPoint {
                period_label: p.period_label.clone(),
                membership: membership_of(&p.profile, model)?,
            })
        })
        .collect()
}

pub fn green_progress(
    household_id: &str,
    trajectory: &[TrajectoryPoint],
    target_cluster: usize,
) -> Result<DriftReport, DriftError> {
    let first = trajectory.first().ok_or(DriftError::EmptyTrajectory)?;
    let clusters = first.membership.len();
    if target_cluster >= clusters {
        return Err(DriftError::TargetOutOfRange {
            target: target_cluster,
            clusters,
        });
    }
    for point in trajectory {
        if point.membership.len() != clusters {
            return Err(DriftError::InvalidRow {
                period: point.period_label.clone(),
                message: format!("{} entries, expected {clusters}", point.membership.len()),
            });
        }
        check_row(&point.membership, ROW_SUM_TOLERANCE).map_err(|message| DriftError::InvalidRow {
            period: point.period_label.clone(),
            message,
        })?;
    }
    let deltas = trajectory
        .windows(2)
        .map(|w| w[1].membership[target_cluster] - w[0].membership[target_cluster])
        .collect();
    let l1_shifts = trajectory
        .windows(2)
        .map(|w| w[1].membership.iter().zip(&w[0].membership).map(|(a, b)| (a - b).abs()).sum())
        .collect();
    let last = trajectory.last().expect("non-empty");
    Ok(DriftReport {
        household_id: household_id.to_string(),
        target_cluster,
        trajectory: trajectory.to_vec(),
        deltas,
        net_progress: last.membership[target_cluster] - first.membership[target_cluster],
        l1_shifts,
    })
}

/// `YYYY-MM` label of the calendar month containing `date`.
pub fn month_label(date: NaiveDate) -> String {
    format!("{:04}-{:02}", date.year(), date.month())
}

/// Per-household, per-month profiles through the usual ingest pipeline
/// restricted to each month's days.
///
/// Output is grouped by household id and ordered by month. Household-months
/// without a complete day are reported as exclusions.
pub fn monthly_profiles(
    readings: &[MeterReading],
    spec: &SegmentSpec,
) -> Result<(Vec<PeriodProfile>, Vec<Exclusion>), DriftError> {
    let mut profiles = Vec::new();
    let mut excluded = Vec::new();
    for (household_id, days) in segment_days(readings, spec) {
        let mut by_month: BTreeMap<String, Vec<_>> = BTreeMap::new();
        for day in days {
            by_month.entry(month_label(day.date)).or_default().push(day);
        }
        for (label, days) in by_month {
            match profile_from_days(&household_id, spec.segment, days) {
                Ok(p) => profiles.push(PeriodProfile {
                    household_id: household_id.clone(),
                    period_label: label,
                    profile: p.values.to_vec(),
                }),
                Err(e @ IngestError::NoCompleteDays { .. }) => excluded.push(Exclusion {
                    household_id: household_id.clone(),
                    reason: format!("{label}: {e}"),
                }),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok((profiles, excluded))
}

/// Writes `household_id,period,u0..u{c-1},target_delta,l1_shift`. The first
/// period of each household has empty delta cells.
pub fn write_drift_report<W: Write>(writer: W, clusters: usize, reports: &[DriftReport]) -> Result<(), DriftError> {
    let mut w = csv_writer(writer);
    let mut header = vec!["household_id".to_string(), "period".to_string()];
    header.extend(index_columns("u", clusters));
    header.push("target_delta".into());
    header.push("l1_shift".into());
    w.write_record(&header)?;
    for r in reports {
        for (t, point) in r.trajectory.iter().enumerate() {
            let mut row = vec![r.household_id.clone(), point.period_label.clone()];
            row.extend(point.membership.iter().map(|&v| format_value(v)));
            if t == 0 {
                row.extend([String::new(), String::new()]);
            } else {
                row.push(format_value(r.deltas[t - 1]));
                row.push(format_value(r.l1_shifts[t - 1]));
            }
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes `household_id,net_progress`.
pub fn write_drift_summary<W: Write>(writer: W, reports: &[DriftReport]) -> Result<(), DriftError> {
    let mut w = csv_writer(writer);
    w.write_record(["household_id", "net_progress"])?;
    for r in reports {
        w.write_record([r.household_id.as_str(), &format_value(r.net_progress)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
