//! CSV export of ingested session batches.
//!
//! Two modes mirror the parser's download options. `quick_summary` has one
//! row per participant-week with the seven summary measures; `detailed` is
//! long format with one row per trial, every column prefixed by its
//! category, and session-level measures repeated on each trial row.
//!
//! `space_error_z` is standardized over the exported batch, so its values
//! depend on which sessions were uploaded together.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{
    composite_space_error, perspective_truth, phase_times, MetricRecord, MetricsError,
    PhaseTimes, Standardization,
};
use crate::questionnaires::{score_block, QuestionnaireError, QuestionnaireScores};
use crate::sessionlog::{quantize, SessionLog, TrialEvent, TrialPayload};

/// Version of the column layout.
pub const EXPORT_SCHEMA_VERSION: &str = "1.0";

/// The quick-summary column set, in order.
pub const QUICK_SUMMARY_COLUMNS: [&str; 7] = [
    "participant_id",
    "week",
    "rotation_time_s",
    "movement_time_s",
    "total_training_time_s",
    "perspective_error_deg",
    "space_error_z",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportMode {
    Detailed,
    QuickSummary,
}

impl ExportMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ExportMode::Detailed => "detailed",
            ExportMode::QuickSummary => "quick_summary",
        }
    }
}

impl fmt::Display for ExportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExportMode {
    type Err = ExportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "detailed" => Ok(ExportMode::Detailed),
            "quick_summary" => Ok(ExportMode::QuickSummary),
            other => Err(ExportError::UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "Player information")]
    PlayerInformation,
    #[serde(rename = "Training")]
    Training,
    #[serde(rename = "Perspective taking")]
    PerspectiveTaking,
    #[serde(rename = "Questionnaires")]
    Questionnaires,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::PlayerInformation,
        Category::Training,
        Category::PerspectiveTaking,
        Category::Questionnaires,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::PlayerInformation => "Player information",
            Category::Training => "Training",
            Category::PerspectiveTaking => "Perspective taking",
            Category::Questionnaires => "Questionnaires",
        }
    }

    /// Column prefix in detailed mode.
    pub fn prefix(self) -> &'static str {
        match self {
            Category::PlayerInformation => "player_",
            Category::Training => "training_",
            Category::PerspectiveTaking => "perspective_",
            Category::Questionnaires => "questionnaire_",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub column_name: String,
    pub unit: String,
    pub description: String,
    /// Operation that produces the value.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableGroup {
    pub category: Category,
    pub variables: Vec<Variable>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableCatalog {
    pub schema_version: String,
    pub mode: ExportMode,
    pub groups: Vec<VariableGroup>,
}

impl VariableCatalog {
    /// Column names in catalog order.
    pub fn columns(&self) -> Vec<&str> {
        self.groups
            .iter()
            .flat_map(|g| g.variables.iter().map(|v| v.column_name.as_str()))
            .collect()
    }

    pub fn contains(&self, column: &str) -> bool {
        self.columns().contains(&column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRequest {
    pub mode: ExportMode,
    pub selected_columns: Vec<String>,
}

impl ExportRequest {
    /// Every column of `catalog`.
    pub fn all(catalog: &VariableCatalog) -> Self {
        ExportRequest {
            mode: catalog.mode,
            selected_columns: catalog.columns().into_iter().map(String::from).collect(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("the batch contains no sessions")]
    EmptyBatch,
    #[error("no columns selected")]
    NoColumns,
    #[error("unknown export mode `{0}` (expected detailed or quick_summary)")]
    UnknownMode(String),
    #[error("unknown column(s): {}", .0.join(", "))]
    UnknownColumns(Vec<String>),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Questionnaire(#[from] QuestionnaireError),
    #[error("csv write failed: {0}")]
    Csv(String),
}

/// Shortest decimal that round-trips, after snapping to the six-decimal
/// grid used by session logs. Non-finite values become empty cells.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return String::new();
    }
    let q = quantize(v);
    // Avoid "-0".
    if q == 0.0 {
        "0".into()
    } else {
        q.to_string()
    }
}

fn var(column: &str, unit: &str, description: &str, source: &str) -> Variable {
    Variable {
        column_name: column.into(),
        unit: unit.into(),
        description: description.into(),
        source: source.into(),
    }
}

/// Prefix `name` unless it already starts with the prefix.
fn prefixed(category: Category, name: &str) -> String {
    let p = category.prefix();
    if name.starts_with(p) {
        name.to_string()
    } else {
        format!("{p}{name}")
    }
}

fn has_perspective(sessions: &[SessionLog]) -> bool {
    sessions.iter().any(|s| !s.perspective_trials.is_empty())
}

fn has_questionnaires(sessions: &[SessionLog]) -> bool {
    sessions.iter().any(|s| s.questionnaires.is_some())
}

fn has_training(sessions: &[SessionLog]) -> bool {
    sessions
        .iter()
        .any(|s| !s.rotation_trials.is_empty() || !s.movement_trials.is_empty())
}

fn quick_catalog(sessions: &[SessionLog]) -> Vec<VariableGroup> {
    let mut groups = vec![VariableGroup {
        category: Category::PlayerInformation,
        variables: vec![
            var("participant_id", "", "Participant identifier", "read_session"),
            var("week", "", "Session week (1-3)", "read_session"),
        ],
    }];
    if has_training(sessions) {
        groups.push(VariableGroup {
            category: Category::Training,
            variables: vec![
                var("rotation_time_s", "s", "Summed rotation trial durations", "phase_times"),
                var("movement_time_s", "s", "Summed forward and repeat trial durations", "phase_times"),
                var("total_training_time_s", "s", "Rotation plus movement time", "phase_times"),
            ],
        });
    }
    if has_perspective(sessions) {
        let mut variables = vec![var(
            "perspective_error_deg",
            "deg",
            "Mean angular error over perspective trials",
            "perspective_error",
        )];
        if has_training(sessions) {
            variables.push(var(
                "space_error_z",
                "z",
                "Mean of z-scored total training time and perspective error, standardized over this batch",
                "composite_space_error",
            ));
        }
        groups.push(VariableGroup {
            category: Category::PerspectiveTaking,
            variables,
        });
    }
    groups
}

fn detailed_catalog(sessions: &[SessionLog]) -> Vec<VariableGroup> {
    let c = Category::PlayerInformation;
    let mut groups = vec![VariableGroup {
        category: c,
        variables: vec![
            var(&prefixed(c, "participant_id"), "", "Participant identifier", "read_session"),
            var(&prefixed(c, "week"), "", "Session week (1-3)", "read_session"),
            var(&prefixed(c, "started_at"), "UTC", "Session start", "read_session"),
            var(&prefixed(c, "device"), "", "Device description", "read_session"),
            var(&prefixed(c, "sampling_hz"), "Hz", "Sample rate", "read_session"),
            var(&prefixed(c, "plan_seed"), "", "Seed of the task plan", "read_session"),
            var(&prefixed(c, "trial_kind"), "", "rotation, forward or perspective", "read_session"),
            var(&prefixed(c, "trial_index"), "", "Trial position within its phase", "read_session"),
            var(&prefixed(c, "trial_start_t_s"), "s", "Trial start on the session clock", "read_session"),
            var(&prefixed(c, "trial_end_t_s"), "s", "Trial end on the session clock", "read_session"),
            var(&prefixed(c, "trial_duration_s"), "s", "Trial end minus start", "read_session"),
            var(&prefixed(c, "trial_samples"), "", "Number of samples in the trial", "read_session"),
        ],
    }];
    if has_training(sessions) {
        let c = Category::Training;
        groups.push(VariableGroup {
            category: c,
            variables: vec![
                var(&prefixed(c, "target_angle_deg"), "deg", "Signed rotation target", "read_session"),
                var(&prefixed(c, "target_distance_m"), "m", "Forward distance target", "read_session"),
                var(&prefixed(c, "rotation_time_s"), "s", "Summed rotation trial durations of the session", "phase_times"),
                var(&prefixed(c, "movement_time_s"), "s", "Summed movement trial durations of the session", "phase_times"),
                var(&prefixed(c, "total_training_time_s"), "s", "Rotation plus movement time of the session", "phase_times"),
            ],
        });
    }
    if has_perspective(sessions) {
        let c = Category::PerspectiveTaking;
        let mut variables = vec![
            var(&prefixed(c, "stand_at"), "", "Landmark the player imagines standing at", "read_session"),
            var(&prefixed(c, "face"), "", "Landmark the player imagines facing", "read_session"),
            var(&prefixed(c, "point_to"), "", "Target landmark", "read_session"),
            var(&prefixed(c, "response_deg"), "deg", "Pointing response", "read_session"),
            var(&prefixed(c, "truth_deg"), "deg", "Correct egocentric bearing", "perspective_truth"),
            var(&prefixed(c, "trial_error_deg"), "deg", "Angular error of the trial", "angular_deviation"),
            var(&prefixed(c, "rt_s"), "s", "Response time", "read_session"),
            var(&prefixed(c, "perspective_error_deg"), "deg", "Mean angular error of the session", "perspective_error"),
        ];
        if has_training(sessions) {
            variables.push(var(
                &prefixed(c, "space_error_z"),
                "z",
                "Composite SPACE error of the session, standardized over this batch",
                "composite_space_error",
            ));
        }
        groups.push(VariableGroup {
            category: c,
            variables,
        });
    }
    if has_questionnaires(sessions) {
        let c = Category::Questionnaires;
        groups.push(VariableGroup {
            category: c,
            variables: vec![
                var(&prefixed(c, "sus"), "0-100", "System Usability Scale score", "score_sus"),
                var(&prefixed(c, "nasa_tlx"), "0-100", "Raw NASA-TLX workload", "score_nasa_tlx"),
                var(&prefixed(c, "ueq_attractiveness"), "-3..3", "UEQ attractiveness", "score_ueq"),
                var(&prefixed(c, "ueq_pragmatic"), "-3..3", "UEQ pragmatic quality", "score_ueq"),
                var(&prefixed(c, "ueq_hedonic"), "-3..3", "UEQ hedonic quality", "score_ueq"),
            ],
        });
    }
    groups
}

pub fn build_catalog(sessions: &[SessionLog], mode: ExportMode) -> Result<VariableCatalog, ExportError> {
    if sessions.is_empty() {
        return Err(ExportError::EmptyBatch);
    }
    let groups = match mode {
        ExportMode::QuickSummary => quick_catalog(sessions),
        ExportMode::Detailed => detailed_catalog(sessions),
    };
    Ok(VariableCatalog {
        schema_version: EXPORT_SCHEMA_VERSION.into(),
        mode,
        groups,
    })
}

/// Per-session values shared by every row of that session.
struct SessionValues {
    times: Option<PhaseTimes>,
    perspective_error: Option<f64>,
    space_error_z: Option<f64>,
    scores: Option<QuestionnaireScores>,
}

fn session_values(sessions: &[SessionLog], need_scores: bool) -> Result<Vec<SessionValues>, ExportError> {
    let mut out = Vec::with_capacity(sessions.len());
    for s in sessions {
        let times = if s.rotation_trials.is_empty() && s.movement_trials.is_empty() {
            None
        } else {
            Some(phase_times(s)?)
        };
        let perspective_error = if s.perspective_trials.is_empty() {
            None
        } else {
            Some(crate::metrics::perspective_error(s)?)
        };
        let scores = match (&s.questionnaires, need_scores) {
            (Some(q), true) => Some(score_block(q)?),
            _ => None,
        };
        out.push(SessionValues {
            times,
            perspective_error,
            space_error_z: None,
            scores,
        });
    }
    // Composite over the sessions that have both components.
    let complete: Vec<usize> = (0..out.len())
        .filter(|&i| out[i].times.is_some() && out[i].perspective_error.is_some())
        .collect();
    if complete.len() >= 2 {
        let records: Vec<MetricRecord> = complete
            .iter()
            .map(|&i| {
                let t = out[i].times.expect("filtered");
                MetricRecord {
                    participant_id: sessions[i].participant_id.clone(),
                    week: sessions[i].week,
                    rotation_time_s: t.rotation_time_s,
                    movement_time_s: t.movement_time_s,
                    total_training_time_s: t.total_training_time_s,
                    perspective_error_deg: out[i].perspective_error.expect("filtered"),
                    space_error_z: None,
                }
            })
            .collect();
        let s = Standardization {
            grouping: crate::metrics::Grouping::Pooled,
            ..Standardization::default()
        };
        // Zero spread leaves the column empty rather than failing the export.
        if let Ok(scored) = composite_space_error(&records, s) {
            for (k, &i) in complete.iter().enumerate() {
                out[i].space_error_z = scored[k].space_error_z;
            }
        }
    }
    Ok(out)
}

fn num(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

fn check_request(catalog: &VariableCatalog, request: &ExportRequest) -> Result<Vec<String>, ExportError> {
    if request.selected_columns.is_empty() {
        return Err(ExportError::NoColumns);
    }
    let known = catalog.columns();
    let unknown: Vec<String> = request
        .selected_columns
        .iter()
        .filter(|c| !known.contains(&c.as_str()))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(ExportError::UnknownColumns(unknown));
    }
    // Catalog order, duplicates collapsed.
    Ok(known
        .into_iter()
        .filter(|k| request.selected_columns.iter().any(|c| c == k))
        .map(String::from)
        .collect())
}

fn quick_cell(column: &str, log: &SessionLog, v: &SessionValues) -> String {
    match column {
        "participant_id" => log.participant_id.clone(),
        "week" => log.week.to_string(),
        "rotation_time_s" => num(v.times.map(|t| t.rotation_time_s)),
        "movement_time_s" => num(v.times.map(|t| t.movement_time_s)),
        "total_training_time_s" => num(v.times.map(|t| t.total_training_time_s)),
        "perspective_error_deg" => num(v.perspective_error),
        "space_error_z" => num(v.space_error_z),
        _ => String::new(),
    }
}

fn detailed_cell(
    column: &str,
    log: &SessionLog,
    v: &SessionValues,
    trial: &TrialEvent,
    trial_error: Option<(f64, f64)>,
) -> String {
    let name = column
        .strip_prefix("player_")
        .or_else(|| column.strip_prefix("training_"))
        .or_else(|| column.strip_prefix("questionnaire_"))
        .unwrap_or(column);
    let scores = v.scores;
    match (column, &trial.payload) {
        ("perspective_stand_at", TrialPayload::Perspective { stand_at, .. }) => return stand_at.clone(),
        ("perspective_face", TrialPayload::Perspective { face, .. }) => return face.clone(),
        ("perspective_point_to", TrialPayload::Perspective { point_to, .. }) => return point_to.clone(),
        ("perspective_response_deg", TrialPayload::Perspective { response_deg, .. }) => {
            return format_number(*response_deg)
        }
        ("perspective_rt_s", TrialPayload::Perspective { rt_s, .. }) => return format_number(*rt_s),
        ("perspective_truth_deg", _) => return num(trial_error.map(|t| t.0)),
        ("perspective_trial_error_deg", _) => return num(trial_error.map(|t| t.1)),
        ("perspective_error_deg", _) => return num(v.perspective_error),
        ("perspective_space_error_z", _) => return num(v.space_error_z),
        ("training_target_angle_deg", TrialPayload::Rotation { target_angle_deg }) => {
            return format_number(*target_angle_deg)
        }
        ("training_target_distance_m", TrialPayload::Forward { target_distance_m }) => {
            return format_number(*target_distance_m)
        }
        _ => {}
    }
    match name {
        "participant_id" => log.participant_id.clone(),
        "week" => log.week.to_string(),
        "started_at" => log.started_at.to_string(),
        "device" => log.device.clone(),
        "sampling_hz" => format_number(log.sampling_hz),
        "plan_seed" => log.plan_seed.to_string(),
        "trial_kind" => trial.kind().as_str().to_string(),
        "trial_index" => trial.index.to_string(),
        "trial_start_t_s" => format_number(trial.start_t_s),
        "trial_end_t_s" => format_number(trial.end_t_s),
        "trial_duration_s" => format_number(trial.duration_s()),
        "trial_samples" => trial.samples.len().to_string(),
        "rotation_time_s" => num(v.times.map(|t| t.rotation_time_s)),
        "movement_time_s" => num(v.times.map(|t| t.movement_time_s)),
        "total_training_time_s" => num(v.times.map(|t| t.total_training_time_s)),
        "sus" => num(scores.map(|s| s.sus)),
        "nasa_tlx" => num(scores.map(|s| s.nasa_tlx)),
        "ueq_attractiveness" => num(scores.map(|s| s.ueq_attractiveness)),
        "ueq_pragmatic" => num(scores.map(|s| s.ueq_pragmatic)),
        "ueq_hedonic" => num(scores.map(|s| s.ueq_hedonic)),
        _ => String::new(),
    }
}

/// Write the selected columns of `sessions` as RFC 4180 CSV.
pub fn export_csv(sessions: &[SessionLog], request: &ExportRequest) -> Result<Vec<u8>, ExportError> {
    let catalog = build_catalog(sessions, request.mode)?;
    let columns = check_request(&catalog, request)?;
    let need_scores = columns.iter().any(|c| c.starts_with("questionnaire_"));
    let values = session_values(sessions, need_scores)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::with_capacity(64 * sessions.len() * columns.len()));
    let csv_err = |e: csv::Error| ExportError::Csv(e.to_string());
    w.write_record(&columns).map_err(csv_err)?;
    match request.mode {
        ExportMode::QuickSummary => {
            for (log, v) in sessions.iter().zip(&values) {
                w.write_record(columns.iter().map(|c| quick_cell(c, log, v)))
                    .map_err(csv_err)?;
            }
        }
        ExportMode::Detailed => {
            for (log, v) in sessions.iter().zip(&values) {
                for trial in log.trials() {
                    let trial_error = match &trial.payload {
                        TrialPayload::Perspective {
                            stand_at,
                            face,
                            point_to,
                            response_deg,
                            ..
                        } => {
                            let truth = perspective_truth(&log.map, stand_at, face, point_to)?;
                            Some((truth, crate::metrics::angular_deviation(*response_deg, truth)?))
                        }
                        _ => None,
                    };
                    w.write_record(columns.iter().map(|c| detailed_cell(c, log, v, trial, trial_error)))
                        .map_err(csv_err)?;
                }
            }
        }
    }
    w.into_inner().map_err(|e| ExportError::Csv(e.to_string()))
}
