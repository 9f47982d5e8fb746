//! Small hand-built sessions shared by unit tests, integration tests and
//! benchmarks.

use crate::sessionlog::{Questionnaires, SessionLog, Timestamp};
use crate::synth::{synthesize_session, SessionBehaviour, DEFAULT_SAMPLING_HZ};
use crate::taskgen::{generate_plan, PlanConfig, TaskPlan, Week};

pub const FIXTURE_SEED: u64 = 20_240_611;

pub fn week_one_plan() -> TaskPlan {
    generate_plan(Week::One, FIXTURE_SEED, &PlanConfig::default()).expect("default plan")
}

pub fn fixture_questionnaires() -> Questionnaires {
    Questionnaires {
        sus: vec![4, 2, 4, 2, 4, 2, 4, 2, 4, 2],
        nasa_tlx: vec![10, 20, 30, 40, 50, 60],
        ueq: vec![
            5, 6, 3, 2, 4, 5, 6, 3, 2, 4, 5, 6, 7, 1, 4, 5, 3, 2, 6, 5, 4, 4, 3, 6, 2, 7,
        ],
    }
}

pub fn week_one_behaviour() -> SessionBehaviour {
    SessionBehaviour {
        participant_id: "P001".into(),
        started_at: Timestamp::parse("2024-06-11T09:30:00Z").expect("valid timestamp"),
        device: "iPad (9th generation)".into(),
        sampling_hz: DEFAULT_SAMPLING_HZ,
        rotation_durations_s: vec![6.0, 7.25, 5.5, 8.0],
        forward_durations_s: vec![9.0, 10.5, 8.25],
        repeat_durations_s: vec![4.0, 4.5, 5.0, 3.75, 4.25, 5.5],
        perspective_deviations_deg: vec![12.5, -30.0, 0.0, 95.0, -170.0, 45.25],
        perspective_rts_s: vec![6.5, 8.0, 5.25, 9.0, 7.5, 6.0],
        questionnaires: Some(fixture_questionnaires()),
    }
}

/// A valid week-1 log with questionnaires.
pub fn week_one_log() -> SessionLog {
    synthesize_session(&week_one_plan(), &week_one_behaviour()).expect("fixture synthesizes")
}
