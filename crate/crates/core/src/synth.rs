//! Turn a [`TaskPlan`] plus behavioural outcomes into a complete session log.
//!
//! The caller decides how long each trial took and how far each pointing
//! response missed; this module lays the trials out on a session clock,
//! emits samples at the configured rate and computes the responses from the
//! map geometry. Every time and angle is placed on the canonical six-decimal
//! grid so the resulting log survives a write/read cycle unchanged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{perspective_truth, MetricsError};
use crate::sessionlog::{
    quantize, Questionnaires, Sample, SessionLog, Timestamp, TrialEvent, TrialPayload,
    SCHEMA_VERSION,
};
use crate::taskgen::{RotationStep, TaskPlan};

pub const DEFAULT_SAMPLING_HZ: f64 = 4.0;

/// Pause between consecutive trials, seconds.
pub const INTER_TRIAL_GAP_S: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("{field}: expected {expected} values, got {got}")]
    Length {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{field}: values must be finite and non-negative")]
    Value { field: &'static str },
    #[error(transparent)]
    Geometry(#[from] MetricsError),
}

/// What one participant did in one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionBehaviour {
    pub participant_id: String,
    pub started_at: Timestamp,
    pub device: String,
    pub sampling_hz: f64,
    /// One per rotation step of the plan.
    pub rotation_durations_s: Vec<f64>,
    /// One per movement segment.
    pub forward_durations_s: Vec<f64>,
    /// One per step of every segment's rotation repeat, in order.
    pub repeat_durations_s: Vec<f64>,
    /// Signed pointing deviation per perspective trial, degrees.
    pub perspective_deviations_deg: Vec<f64>,
    pub perspective_rts_s: Vec<f64>,
    pub questionnaires: Option<Questionnaires>,
}

/// Wrap to [0, 360) on the six-decimal grid.
pub fn wrap_degrees(deg: f64) -> f64 {
    let q = quantize(deg.rem_euclid(360.0));
    if q >= 360.0 {
        0.0
    } else {
        q
    }
}

fn check(field: &'static str, values: &[f64], expected: usize) -> Result<(), SynthError> {
    if values.len() != expected {
        return Err(SynthError::Length {
            field,
            expected,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(SynthError::Value { field });
    }
    Ok(())
}

struct Clock {
    now: f64,
    period: f64,
}

impl Clock {
    /// Reserve `[start, end]` for a trial and return it on the grid.
    fn span(&mut self, duration: f64) -> (f64, f64) {
        let start = quantize(self.now);
        let end = quantize(self.now + duration);
        self.now = end + INTER_TRIAL_GAP_S;
        (start, end)
    }

    fn times(&self, start: f64, end: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0u32;
        loop {
            let t = quantize(start + f64::from(k) * self.period);
            if t > end {
                break;
            }
            out.push(t);
            k += 1;
        }
        if out.is_empty() {
            out.push(start);
        }
        out
    }
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

fn rotation_trial(
    clock: &mut Clock,
    index: u32,
    step: RotationStep,
    duration: f64,
    heading: &mut f64,
    position: Option<(f64, f64)>,
) -> TrialEvent {
    let (start, end) = clock.span(duration);
    let from = *heading;
    let delta = step.signed_deg();
    let samples = clock
        .times(start, end)
        .into_iter()
        .map(|t| {
            let u = if end > start { (t - start) / (end - start) } else { 1.0 };
            Sample {
                t_s: t,
                heading_deg: wrap_degrees(from + delta * smoothstep(u)),
                x_m: position.map(|p| quantize(p.0)),
                y_m: position.map(|p| quantize(p.1)),
                touch: false,
            }
        })
        .collect();
    *heading = wrap_degrees(from + delta);
    TrialEvent {
        index,
        payload: TrialPayload::Rotation {
            target_angle_deg: delta,
        },
        start_t_s: start,
        end_t_s: end,
        samples,
    }
}

/// Build the log for `plan` as performed according to `behaviour`.
pub fn synthesize_session(
    plan: &TaskPlan,
    behaviour: &SessionBehaviour,
) -> Result<SessionLog, SynthError> {
    let repeats: usize = plan
        .movement_segments
        .iter()
        .map(|s| s.rotation_repeat.len())
        .sum();
    check(
        "rotation_durations_s",
        &behaviour.rotation_durations_s,
        plan.rotation_steps.len(),
    )?;
    check(
        "forward_durations_s",
        &behaviour.forward_durations_s,
        plan.movement_segments.len(),
    )?;
    check("repeat_durations_s", &behaviour.repeat_durations_s, repeats)?;
    check(
        "perspective_rts_s",
        &behaviour.perspective_rts_s,
        plan.perspective_trials.len(),
    )?;
    if behaviour.perspective_deviations_deg.len() != plan.perspective_trials.len() {
        return Err(SynthError::Length {
            field: "perspective_deviations_deg",
            expected: plan.perspective_trials.len(),
            got: behaviour.perspective_deviations_deg.len(),
        });
    }
    if behaviour
        .perspective_deviations_deg
        .iter()
        .any(|d| !d.is_finite())
    {
        return Err(SynthError::Value {
            field: "perspective_deviations_deg",
        });
    }
    if !behaviour.sampling_hz.is_finite() || behaviour.sampling_hz <= 0.0 {
        return Err(SynthError::Value {
            field: "sampling_hz",
        });
    }

    let mut clock = Clock {
        now: 0.0,
        period: 1.0 / behaviour.sampling_hz,
    };
    let mut heading = 0.0;

    let rotation_trials: Vec<TrialEvent> = plan
        .rotation_steps
        .iter()
        .zip(&behaviour.rotation_durations_s)
        .enumerate()
        .map(|(i, (&step, &d))| rotation_trial(&mut clock, i as u32, step, d, &mut heading, None))
        .collect();

    let mut movement_trials = Vec::new();
    let mut position = (0.0f64, 0.0f64);
    let mut repeat_durations = behaviour.repeat_durations_s.iter();
    for (segment, &duration) in plan
        .movement_segments
        .iter()
        .zip(&behaviour.forward_durations_s)
    {
        let (start, end) = clock.span(duration);
        let from = position;
        let rad = heading.to_radians();
        let (dx, dy) = (
            segment.forward_distance_m * rad.sin(),
            segment.forward_distance_m * rad.cos(),
        );
        let samples = clock
            .times(start, end)
            .into_iter()
            .map(|t| {
                let u = if end > start { (t - start) / (end - start) } else { 1.0 };
                Sample {
                    t_s: t,
                    heading_deg: heading,
                    x_m: Some(quantize(from.0 + dx * u)),
                    y_m: Some(quantize(from.1 + dy * u)),
                    touch: u < 1.0,
                }
            })
            .collect();
        position = (from.0 + dx, from.1 + dy);
        movement_trials.push(TrialEvent {
            index: movement_trials.len() as u32,
            payload: TrialPayload::Forward {
                target_distance_m: segment.forward_distance_m,
            },
            start_t_s: start,
            end_t_s: end,
            samples,
        });
        for &step in &segment.rotation_repeat {
            let d = *repeat_durations.next().expect("length checked above");
            let index = movement_trials.len() as u32;
            movement_trials.push(rotation_trial(
                &mut clock,
                index,
                step,
                d,
                &mut heading,
                Some(position),
            ));
        }
    }

    let mut perspective_trials = Vec::with_capacity(plan.perspective_trials.len());
    for (i, spec) in plan.perspective_trials.iter().enumerate() {
        let truth = perspective_truth(&plan.map, &spec.stand_at, &spec.face, &spec.point_to)?;
        let deviation = behaviour.perspective_deviations_deg[i];
        let response = wrap_degrees(truth + deviation);
        let rt = behaviour.perspective_rts_s[i];
        let (start, end) = clock.span(rt);
        let samples = clock
            .times(start, end)
            .into_iter()
            .map(|t| {
                let u = if end > start { (t - start) / (end - start) } else { 1.0 };
                Sample {
                    t_s: t,
                    heading_deg: wrap_degrees(response * smoothstep(u)),
                    x_m: None,
                    y_m: None,
                    touch: u >= 1.0,
                }
            })
            .collect();
        perspective_trials.push(TrialEvent {
            index: i as u32,
            payload: TrialPayload::Perspective {
                stand_at: spec.stand_at.clone(),
                face: spec.face.clone(),
                point_to: spec.point_to.clone(),
                response_deg: response,
                rt_s: quantize(end - start),
            },
            start_t_s: start,
            end_t_s: end,
            samples,
        });
    }

    Ok(SessionLog {
        schema_version: SCHEMA_VERSION.to_string(),
        participant_id: behaviour.participant_id.clone(),
        week: plan.week,
        started_at: behaviour.started_at,
        device: behaviour.device.clone(),
        sampling_hz: behaviour.sampling_hz,
        plan_seed: plan.seed,
        map: plan.map.clone(),
        rotation_trials,
        movement_trials,
        perspective_trials,
        questionnaires: behaviour.questionnaires.clone(),
        extra: Default::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{week_one_behaviour, week_one_plan};
    use crate::sessionlog::{read_session, validate, write_session};

    #[test]
    fn synthesized_log_is_valid_and_round_trips() {
        let log = synthesize_session(&week_one_plan(), &week_one_behaviour()).unwrap();
        let report = validate(&log);
        assert!(report.errors.is_empty(), "{:?}", report.errors);
        assert!(report.warnings.is_empty(), "{:?}", report.warnings);
        let bytes = write_session(&log).unwrap();
        assert_eq!(read_session(&bytes).unwrap(), log);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let mut b = week_one_behaviour();
        b.rotation_durations_s.pop();
        assert!(matches!(
            synthesize_session(&week_one_plan(), &b),
            Err(SynthError::Length { field: "rotation_durations_s", .. })
        ));
    }

    #[test]
    fn wrap_degrees_stays_in_range() {
        assert_eq!(wrap_degrees(360.0), 0.0);
        assert_eq!(wrap_degrees(-0.000_000_1), 0.0);
        assert_eq!(wrap_degrees(-90.0), 270.0);
        assert_eq!(wrap_degrees(725.5), 5.5);
    }
}
