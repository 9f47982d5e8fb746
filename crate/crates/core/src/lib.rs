//! Core of the mini-SPACE assessment pipeline: task generation, session-log
//! handling, performance metrics, questionnaire scoring, the statistical
//! battery, cohort simulation and CSV export.

pub mod export;
#[doc(hidden)]
pub mod fixtures;
pub mod metrics;
pub mod questionnaires;
pub mod rng;
pub mod sessionlog;
pub mod stats;
pub mod studysim;
pub mod synth;
pub mod taskgen;

pub use metrics::{MetricRecord, MetricsError, Standardization};
pub use questionnaires::{QuestionnaireError, QuestionnaireScores, UeqKey};
pub use sessionlog::{ArchiveEntry, SessionError, SessionLog};
pub use stats::{EffectKind, EffectSize, Method, StatResult, StatsError};
pub use taskgen::{LandmarkMap, TaskPlan, Week};
