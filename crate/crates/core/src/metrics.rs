//! Performance measures derived from session logs.
//!
//! Bearings follow the compass convention: 0° is straight ahead (or north
//! for absolute bearings) and angles grow clockwise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sessionlog::{quantize, SessionLog, TrialPayload};
use crate::taskgen::{LandmarkMap, Week};

/// Positions closer than this are treated as coincident.
const COINCIDENT_M: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricsError {
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("unknown landmark `{0}`")]
    UnknownLandmark(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("session has no perspective trials")]
    NoPerspectiveTrials,
    #[error("{kind} trial {index} ends before it starts")]
    InvalidInterval { kind: &'static str, index: u32 },
    #[error("cannot standardize {group}: {reason}")]
    Standardization { group: String, reason: String },
}

/// Smallest angle between two directions, in [0, 180].
pub fn angular_deviation(estimate_deg: f64, truth_deg: f64) -> Result<f64, MetricsError> {
    if !estimate_deg.is_finite() {
        return Err(MetricsError::NonFinite("estimate_deg"));
    }
    if !truth_deg.is_finite() {
        return Err(MetricsError::NonFinite("truth_deg"));
    }
    // |a - b| is computed identically for both argument orders, which keeps
    // the result exactly symmetric.
    let d = (estimate_deg - truth_deg).abs() % 360.0;
    Ok(d.min(360.0 - d))
}

/// Absolute compass bearing from `from` to `to`, in [0, 360).
pub fn compass_bearing(from: (f64, f64), to: (f64, f64)) -> f64 {
    let b = (to.0 - from.0).atan2(to.1 - from.1).to_degrees();
    normalize_deg(b)
}

fn normalize_deg(deg: f64) -> f64 {
    let b = deg.rem_euclid(360.0);
    if b >= 360.0 || b == 0.0 {
        0.0
    } else {
        b
    }
}

/// Bearing of `target` for an observer at `stand` looking at `face`.
pub fn egocentric_bearing(
    stand: (f64, f64),
    face: (f64, f64),
    target: (f64, f64),
) -> Result<f64, MetricsError> {
    for (name, p) in [("stand", stand), ("face", face), ("target", target)] {
        if !p.0.is_finite() || !p.1.is_finite() {
            return Err(MetricsError::NonFinite(name));
        }
    }
    let dist = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
    if dist(stand, face) < COINCIDENT_M {
        return Err(MetricsError::DegenerateGeometry(
            "facing point coincides with standing point".into(),
        ));
    }
    if dist(stand, target) < COINCIDENT_M {
        return Err(MetricsError::DegenerateGeometry(
            "target coincides with standing point".into(),
        ));
    }
    Ok(normalize_deg(
        compass_bearing(stand, target) - compass_bearing(stand, face),
    ))
}

/// Correct answer of a perspective-taking trial, in [0, 360).
pub fn perspective_truth(
    map: &LandmarkMap,
    stand_at: &str,
    face: &str,
    point_to: &str,
) -> Result<f64, MetricsError> {
    let pos = |id: &str| {
        map.get(id)
            .map(|l| l.position())
            .ok_or_else(|| MetricsError::UnknownLandmark(id.to_string()))
    };
    let (s, f, t) = (pos(stand_at)?, pos(face)?, pos(point_to)?);
    if stand_at == face || stand_at == point_to || face == point_to {
        return Err(MetricsError::DegenerateGeometry(format!(
            "trial landmarks must be distinct: {stand_at}, {face}, {point_to}"
        )));
    }
    egocentric_bearing(s, f, t)
}

/// Angular error of every perspective trial, in trial order.
pub fn perspective_trial_errors(log: &SessionLog) -> Result<Vec<f64>, MetricsError> {
    log.perspective_trials
        .iter()
        .filter_map(|trial| match &trial.payload {
            TrialPayload::Perspective {
                stand_at,
                face,
                point_to,
                response_deg,
                ..
            } => Some((stand_at, face, point_to, *response_deg)),
            _ => None,
        })
        .map(|(s, f, t, response)| {
            let truth = perspective_truth(&log.map, s, f, t)?;
            angular_deviation(response, truth)
        })
        .collect()
}

/// Mean angular error over the perspective trials of one session.
pub fn perspective_error(log: &SessionLog) -> Result<f64, MetricsError> {
    let errors = perspective_trial_errors(log)?;
    if errors.is_empty() {
        return Err(MetricsError::NoPerspectiveTrials);
    }
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub rotation_time_s: f64,
    pub movement_time_s: f64,
    pub total_training_time_s: f64,
}

/// Summed trial durations of the rotation and movement phases.
pub fn phase_times(log: &SessionLog) -> Result<PhaseTimes, MetricsError> {
    let sum = |trials: &[crate::sessionlog::TrialEvent]| -> Result<f64, MetricsError> {
        let mut total = 0.0;
        for trial in trials {
            if !(trial.end_t_s >= trial.start_t_s) {
                return Err(MetricsError::InvalidInterval {
                    kind: trial.kind().as_str(),
                    index: trial.index,
                });
            }
            total += trial.end_t_s - trial.start_t_s;
        }
        // Interval ends sit on the log grid, so the sum does too.
        Ok(quantize(total))
    };
    let rotation_time_s = sum(&log.rotation_trials)?;
    let movement_time_s = sum(&log.movement_trials)?;
    Ok(PhaseTimes {
        rotation_time_s,
        movement_time_s,
        total_training_time_s: quantize(rotation_time_s + movement_time_s),
    })
}

/// Per participant-week measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub participant_id: String,
    pub week: Week,
    pub rotation_time_s: f64,
    pub movement_time_s: f64,
    pub total_training_time_s: f64,
    pub perspective_error_deg: f64,
    /// Filled in by [`composite_space_error`].
    pub space_error_z: Option<f64>,
}

pub fn metric_record(log: &SessionLog) -> Result<MetricRecord, MetricsError> {
    let times = phase_times(log)?;
    Ok(MetricRecord {
        participant_id: log.participant_id.clone(),
        week: log.week,
        rotation_time_s: times.rotation_time_s,
        movement_time_s: times.movement_time_s,
        total_training_time_s: times.total_training_time_s,
        perspective_error_deg: perspective_error(log)?,
        space_error_z: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// Standardize within each week.
    #[default]
    PerWeek,
    /// Standardize over all records at once.
    Pooled,
}

/// Which training measure enters the composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingComponent {
    #[default]
    TotalTime,
    /// Average of the z-scored rotation and movement times.
    PhaseTimes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Standardization {
    pub grouping: Grouping,
    pub training: TrainingComponent,
}

/// z-scores with the n-1 standard deviation. `None` when fewer than two
/// values or no spread.
pub fn zscores(values: &[f64]) -> Option<Vec<f64>> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if !sd.is_finite() || sd <= 1e-12 * mean.abs().max(1.0) {
        return None;
    }
    Some(values.iter().map(|v| (v - mean) / sd).collect())
}

fn group_label(grouping: Grouping, week: Week) -> String {
    match grouping {
        Grouping::PerWeek => format!("week {}", week.number()),
        Grouping::Pooled => "pooled cohort".to_string(),
    }
}

/// Fill `space_error_z` for every record: mean of the z-scored training
/// measure and the z-scored perspective error. Higher is worse.
pub fn composite_space_error(
    records: &[MetricRecord],
    standardization: Standardization,
) -> Result<Vec<MetricRecord>, MetricsError> {
    let mut out = records.to_vec();
    let groups: Vec<(Week, Vec<usize>)> = match standardization.grouping {
        Grouping::Pooled => vec![(Week::One, (0..records.len()).collect())],
        Grouping::PerWeek => Week::ALL
            .iter()
            .map(|&w| {
                let idx = records
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.week == w)
                    .map(|(i, _)| i)
                    .collect::<Vec<_>>();
                (w, idx)
            })
            .filter(|(_, idx)| !idx.is_empty())
            .collect(),
    };
    if groups.is_empty() {
        return Err(MetricsError::Standardization {
            group: "cohort".into(),
            reason: "no records".into(),
        });
    }
    for (week, idx) in groups {
        let label = group_label(standardization.grouping, week);
        let column = |name: &str, f: fn(&MetricRecord) -> f64| {
            let values: Vec<f64> = idx.iter().map(|&i| f(&records[i])).collect();
            zscores(&values).ok_or_else(|| MetricsError::Standardization {
                group: label.clone(),
                reason: if values.len() < 2 {
                    format!("{} record(s), need at least 2", values.len())
                } else {
                    format!("{name} has zero variance")
                },
            })
        };
        let training = match standardization.training {
            TrainingComponent::TotalTime => {
                column("total_training_time_s", |r| r.total_training_time_s)?
            }
            TrainingComponent::PhaseTimes => {
                let rot = column("rotation_time_s", |r| r.rotation_time_s)?;
                let mov = column("movement_time_s", |r| r.movement_time_s)?;
                rot.iter().zip(&mov).map(|(a, b)| (a + b) / 2.0).collect()
            }
        };
        let perspective = column("perspective_error_deg", |r| r.perspective_error_deg)?;
        for (k, &i) in idx.iter().enumerate() {
            out[i].space_error_z = Some((training[k] + perspective[k]) / 2.0);
        }
    }
    Ok(out)
}

/// Metric records for a batch of logs, standardized over the batch.
pub fn batch_metrics(
    logs: &[SessionLog],
    standardization: Standardization,
) -> Result<Vec<MetricRecord>, MetricsError> {
    let records = logs
        .iter()
        .map(metric_record)
        .collect::<Result<Vec<_>, _>>()?;
    composite_space_error(&records, standardization)
}
