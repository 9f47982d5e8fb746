//! Synthetic cohorts and the end-to-end analysis plan.
//!
//! [`simulate_cohort`] draws participants from a latent ability-plus-noise
//! model calibrated to the reference descriptives, plays their sessions
//! through [`crate::synth`] and scores the resulting logs with the regular
//! metric and questionnaire code. [`analyze_study`] runs the research
//! questions Q1–Q6 on such a dataset (or any dataset of the same shape) and
//! [`recovery_experiment`] repeats both steps to measure how often planted
//! effects come back out.

mod analysis;
mod config;
mod generate;
mod recovery;
mod report;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{MetricRecord, MetricsError};
use crate::questionnaires::{QuestionnaireError, QuestionnaireScores};
use crate::sessionlog::SessionLog;
use crate::stats::StatsError;
use crate::synth::SynthError;
use crate::taskgen::{TaskError, Week};

pub use analysis::{
    analysis_table, analyze_questions, analyze_study, AnalysisRow, ArtReport, BenchmarkFamily,
    HolmFamily, PosthocFamily, Q1Report, Q2Report, Q3Report, Q4Report, Q5Report,
    Q6Report, RegressionModel, RegressionPanel, ReportEntry, StudyReport, ANALYSIS_VERSION,
};
pub use config::{
    AgeCell, CohortConfig, Demographics, GameplayTargets, GroupTargets, MeanSd, MocaModel,
    QuestionnaireModel, QuestionnaireShift, QuestionnaireTargets, SupervisedModel,
    SupervisedStudy, WeekEffects, Weekly,
};
pub use generate::{calibrate, simulate_cohort, simulate_with, Calibration};
pub use recovery::{
    recovery_experiment, EffectRecovery, FamilyRate, RecoveryReport, RepFailure, AGE_ORDERING,
    ART_ORDERING, ICC_EFFECT, WEEK3_SLOPE_EFFECT, WEEK_ORDERING,
};
pub use report::{report_csv, report_text, REPORT_COLUMNS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeGroup {
    #[serde(rename = "20-40")]
    Young,
    #[serde(rename = "41-60")]
    Middle,
    #[serde(rename = "61-90")]
    Old,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; 3] = [AgeGroup::Young, AgeGroup::Middle, AgeGroup::Old];

    pub fn label(self) -> &'static str {
        match self {
            AgeGroup::Young => "20-40",
            AgeGroup::Middle => "41-60",
            AgeGroup::Old => "61-90",
        }
    }

    /// Inclusive age bounds in years.
    pub fn bounds(self) -> (u32, u32) {
        match self {
            AgeGroup::Young => (20, 40),
            AgeGroup::Middle => (41, 60),
            AgeGroup::Old => (61, 90),
        }
    }

    pub fn of_age(age: u32) -> Option<AgeGroup> {
        AgeGroup::ALL.into_iter().find(|g| {
            let (lo, hi) = g.bounds();
            (lo..=hi).contains(&age)
        })
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Female, Gender::Male];

    pub fn label(self) -> &'static str {
        match self {
            Gender::Female => "Female",
            Gender::Male => "Male",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Education {
    #[serde(rename = "High School")]
    HighSchool,
    University,
}

impl Education {
    pub fn label(self) -> &'static str {
        match self {
            Education::HighSchool => "High School",
            Education::University => "University",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Unsupervised,
    Supervised,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::Unsupervised => "Unsupervised",
            Condition::Supervised => "Supervised",
        }
    }
}

/// MoCA totals below this flag mild impairment.
pub const MOCA_IMPAIRMENT_CUTOFF: u8 = 26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    /// `mini-SPACE` for the unsupervised cohort, otherwise the proxy study.
    pub study: String,
    pub condition: Condition,
    pub age: u32,
    pub age_group: AgeGroup,
    pub gender: Gender,
    pub education: Education,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moca_total: Option<u8>,
    /// Full logs. Left out of serialized datasets, which carry the derived
    /// records only; the logs travel as a separate archive.
    #[serde(skip)]
    pub sessions: Vec<SessionLog>,
    pub metrics: Vec<MetricRecord>,
    /// One entry per metric record, in the same week order.
    pub questionnaires: Vec<Option<QuestionnaireScores>>,
}

impl Participant {
    pub fn weeks(&self) -> Vec<Week> {
        self.metrics.iter().map(|m| m.week).collect()
    }

    pub fn metric(&self, week: Week) -> Option<&MetricRecord> {
        self.metrics.iter().find(|m| m.week == week)
    }

    pub fn questionnaire(&self, week: Week) -> Option<&QuestionnaireScores> {
        let i = self.metrics.iter().position(|m| m.week == week)?;
        self.questionnaires.get(i)?.as_ref()
    }

    pub fn moca_impaired(&self) -> Option<bool> {
        self.moca_total.map(|m| m < MOCA_IMPAIRMENT_CUTOFF)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyDataset {
    pub seed: u64,
    pub calibration: Calibration,
    pub participants: Vec<Participant>,
}

impl StudyDataset {
    pub fn unsupervised(&self) -> impl Iterator<Item = &Participant> {
        self.participants.iter().filter(|p| p.condition == Condition::Unsupervised)
    }

    pub fn supervised(&self) -> impl Iterator<Item = &Participant> {
        self.participants.iter().filter(|p| p.condition == Condition::Supervised)
    }

    /// Every session log, unsupervised cohort first.
    pub fn logs(&self) -> impl Iterator<Item = &SessionLog> {
        self.participants.iter().flat_map(|p| &p.sessions)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let ds: StudyDataset =
            serde_json::from_str(text).map_err(|e| SimError::Dataset(e.to_string()))?;
        ds.validate()?;
        Ok(ds)
    }

    /// Checks the dataset invariants: ages match their group, MoCA totals
    /// lie in 0–30, unsupervised participants cover weeks 1–3 and supervised
    /// ones week 1, and records belong to their participant.
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |id: &str, msg: String| Err(SimError::Dataset(format!("participant {id}: {msg}")));
        let mut seen = std::collections::HashSet::new();
        for p in &self.participants {
            if !seen.insert(p.id.as_str()) {
                return bad(&p.id, "duplicate id".into());
            }
            if AgeGroup::of_age(p.age) != Some(p.age_group) {
                return bad(&p.id, format!("age {} is outside group {}", p.age, p.age_group.label()));
            }
            if p.moca_total.is_some_and(|m| m > 30) {
                return bad(&p.id, "MoCA total above 30".into());
            }
            let expected: &[Week] = match p.condition {
                Condition::Unsupervised => &Week::ALL,
                Condition::Supervised => &[Week::One],
            };
            if p.weeks() != expected {
                return bad(&p.id, format!("weeks {:?}, expected {:?}", p.weeks(), expected));
            }
            if p.questionnaires.len() != p.metrics.len() {
                return bad(&p.id, "questionnaire and metric counts differ".into());
            }
            if p.metrics.iter().any(|m| m.participant_id != p.id) {
                return bad(&p.id, "metric record of another participant".into());
            }
            if !p.sessions.is_empty() && p.sessions.len() != p.metrics.len() {
                return bad(&p.id, "session and metric counts differ".into());
            }
        }
        Ok(())
    }
}

/// Research question of the analysis plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Question {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
}

impl Question {
    pub const ALL: [Question; 6] = [
        Question::Q1,
        Question::Q2,
        Question::Q3,
        Question::Q4,
        Question::Q5,
        Question::Q6,
    ];
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for Question {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Question::ALL
            .into_iter()
            .find(|q| q.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown research question `{s}` (expected Q1 to Q6)"))
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid cohort config: {0}")]
    Config(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Questionnaire(#[from] QuestionnaireError),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalysisError {
    /// The dataset lacks what a research question needs.
    #[error("{question}: {reason}")]
    Plan { question: Question, reason: String },
    #[error("{question} ({step}): {source}")]
    Stats {
        question: Question,
        step: String,
        source: StatsError,
    },
}

impl AnalysisError {
    pub fn question(&self) -> Question {
        match self {
            AnalysisError::Plan { question, .. } | AnalysisError::Stats { question, .. } => *question,
        }
    }
}
