//! Session-log format, schema version 1.0.
//!
//! A session log is one participant-week of gameplay: the map that was shown,
//! every rotation, movement and perspective trial with its 4 Hz samples, and
//! an optional questionnaire block. Logs are UTF-8 JSON objects whose
//! top-level keys appear in this fixed order:
//!
//! `schema_version, participant_id, week, started_at, device, sampling_hz,
//! plan_seed, map, rotation_trials, movement_trials, perspective_trials,
//! questionnaires`
//!
//! Canonical output ([`write_session`]) rounds every float to six decimal
//! places, omits absent optional fields, and ends with a single newline.
//! Unknown keys are accepted on read, kept in [`SessionLog::extra`], and not
//! written back.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Cursor, Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::taskgen::{LandmarkMap, Week};

pub const SCHEMA_VERSION: &str = "1.0";
pub const LOG_EXTENSION: &str = "json";

/// Sample spacing may deviate this much from the nominal period before a
/// warning is raised.
pub const SAMPLE_SPACING_TOLERANCE: f64 = 0.5;

const FLOAT_SCALE: f64 = 1e6;

/// Round to the six-decimal grid used by the canonical writer.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() || x.abs() >= 1e15 {
        return x;
    }
    let q = (x * FLOAT_SCALE).round() / FLOAT_SCALE;
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

/// UTC instant serialized as ISO-8601 with a `Z` suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub DateTime<Utc>);

impl Timestamp {
    pub fn parse(text: &str) -> Result<Self, String> {
        if !text.ends_with('Z') {
            return Err(format!("`{text}` is not a UTC timestamp ending in Z"));
        }
        DateTime::parse_from_rfc3339(text)
            .map(|dt| Timestamp(dt.with_timezone(&Utc)))
            .map_err(|e| format!("`{text}` is not ISO-8601: {e}"))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.to_rfc3339_opts(SecondsFormat::AutoSi, true))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Timestamp::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t_s: f64,
    pub heading_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_m: Option<f64>,
    pub touch: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialKind {
    Rotation,
    Forward,
    Perspective,
}

impl TrialKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialKind::Rotation => "rotation",
            TrialKind::Forward => "forward",
            TrialKind::Perspective => "perspective",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialPayload {
    Rotation {
        target_angle_deg: f64,
    },
    Forward {
        target_distance_m: f64,
    },
    Perspective {
        stand_at: String,
        face: String,
        point_to: String,
        response_deg: f64,
        rt_s: f64,
    },
}

impl TrialPayload {
    pub fn kind(&self) -> TrialKind {
        match self {
            TrialPayload::Rotation { .. } => TrialKind::Rotation,
            TrialPayload::Forward { .. } => TrialKind::Forward,
            TrialPayload::Perspective { .. } => TrialKind::Perspective,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEvent {
    pub index: u32,
    #[serde(flatten)]
    pub payload: TrialPayload,
    pub start_t_s: f64,
    pub end_t_s: f64,
    #[serde(default)]
    pub samples: Vec<Sample>,
}

impl TrialEvent {
    pub fn kind(&self) -> TrialKind {
        self.payload.kind()
    }

    pub fn duration_s(&self) -> f64 {
        self.end_t_s - self.start_t_s
    }
}

/// Raw questionnaire responses: SUS items 1–5, NASA-TLX items 0–100, UEQ
/// items 1–7.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Questionnaires {
    pub sus: Vec<i32>,
    pub nasa_tlx: Vec<i32>,
    pub ueq: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub schema_version: String,
    pub participant_id: String,
    pub week: Week,
    pub started_at: Timestamp,
    pub device: String,
    pub sampling_hz: f64,
    pub plan_seed: u64,
    pub map: LandmarkMap,
    pub rotation_trials: Vec<TrialEvent>,
    pub movement_trials: Vec<TrialEvent>,
    pub perspective_trials: Vec<TrialEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub questionnaires: Option<Questionnaires>,
    #[serde(flatten, skip_serializing)]
    pub extra: BTreeMap<String, Value>,
}

impl SessionLog {
    /// Archive entry name, `<participant>_w<week>.json`.
    pub fn entry_name(&self) -> String {
        format!("{}_w{}.{LOG_EXTENSION}", self.participant_id, self.week)
    }

    pub fn trials(&self) -> impl Iterator<Item = &TrialEvent> {
        self.rotation_trials
            .iter()
            .chain(&self.movement_trials)
            .chain(&self.perspective_trials)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.rule, self.path, self.message)
    }
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(Violation::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("parse error at byte {offset} (line {line}, column {column}): {message}")]
    Parse {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema_version `{0}` (supported: {SCHEMA_VERSION})")]
    UnsupportedVersion(String),
    #[error("{} validation error(s): {}", .0.len(), join(.0))]
    Validation(Vec<Violation>),
    #[error("unreadable archive entry: {0}")]
    Unreadable(String),
}

impl SessionError {
    pub fn kind(&self) -> &'static str {
        match self {
            SessionError::Parse { .. } => "parse",
            SessionError::UnsupportedVersion(_) => "version",
            SessionError::Validation(_) => "validation",
            SessionError::Unreadable(_) => "unreadable",
        }
    }
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    fn error(&mut self, rule: &str, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Violation {
            rule: rule.to_string(),
            path: path.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, rule: &str, path: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Violation {
            rule: rule.to_string(),
            path: path.into(),
            message: message.into(),
        });
    }

    fn finite(&mut self, path: impl Into<String>, value: f64) -> bool {
        if value.is_finite() {
            true
        } else {
            self.error("finite", path, format!("value {value} is not finite"));
            false
        }
    }
}

/// Check every invariant of a log, collecting all failures.
pub fn validate(log: &SessionLog) -> ValidationReport {
    let mut r = ValidationReport::default();
    if log.schema_version != SCHEMA_VERSION {
        r.error(
            "schema_version",
            "schema_version",
            format!("`{}` is not supported", log.schema_version),
        );
    }
    if log.participant_id.trim().is_empty() {
        r.error("participant_id", "participant_id", "must not be empty");
    }
    if r.finite("sampling_hz", log.sampling_hz) && log.sampling_hz <= 0.0 {
        r.error("sampling_hz", "sampling_hz", "must be positive");
    }

    for problem in log.map.structural_problems() {
        r.error("map_structure", "map", problem);
    }
    for (i, l) in log.map.landmarks.iter().enumerate() {
        r.finite(format!("map.landmarks[{i}].x_m"), l.x_m);
        r.finite(format!("map.landmarks[{i}].y_m"), l.y_m);
    }
    let expected_landmarks = log.week.landmark_count();
    if log.map.landmarks.len() != expected_landmarks {
        r.error(
            "landmark_count",
            "map.landmarks",
            format!(
                "week {} requires {expected_landmarks} landmarks, found {}",
                log.week,
                log.map.landmarks.len()
            ),
        );
    }

    let expected_trials = log.week.perspective_trial_count();
    if log.perspective_trials.len() != expected_trials {
        r.error(
            "perspective_trial_count",
            "perspective_trials",
            format!(
                "week {} requires {expected_trials} perspective trials, found {}",
                log.week,
                log.perspective_trials.len()
            ),
        );
    }

    let nominal = if log.sampling_hz.is_finite() && log.sampling_hz > 0.0 {
        Some(1.0 / log.sampling_hz)
    } else {
        None
    };
    let lists: [(&str, &[TrialEvent], &[TrialKind]); 3] = [
        ("rotation_trials", &log.rotation_trials, &[TrialKind::Rotation]),
        (
            "movement_trials",
            &log.movement_trials,
            &[TrialKind::Forward, TrialKind::Rotation],
        ),
        (
            "perspective_trials",
            &log.perspective_trials,
            &[TrialKind::Perspective],
        ),
    ];
    for (name, trials, allowed) in lists {
        let mut last_index: Option<u32> = None;
        for (i, trial) in trials.iter().enumerate() {
            let path = format!("{name}[{i}]");
            validate_trial(&mut r, log, &path, trial, allowed, nominal);
            if let Some(prev) = last_index {
                if trial.index <= prev {
                    r.error(
                        "trial_index_order",
                        format!("{path}.index"),
                        format!("index {} does not increase after {prev}", trial.index),
                    );
                }
            }
            last_index = Some(trial.index);
        }
    }

    if let Some(q) = &log.questionnaires {
        check_items(&mut r, "questionnaire_sus", "questionnaires.sus", &q.sus, 10, 1, 5);
        check_items(
            &mut r,
            "questionnaire_nasa_tlx",
            "questionnaires.nasa_tlx",
            &q.nasa_tlx,
            6,
            0,
            100,
        );
        check_items(&mut r, "questionnaire_ueq", "questionnaires.ueq", &q.ueq, 26, 1, 7);
    }
    r
}

fn validate_trial(
    r: &mut ValidationReport,
    log: &SessionLog,
    path: &str,
    trial: &TrialEvent,
    allowed: &[TrialKind],
    nominal_period: Option<f64>,
) {
    if !allowed.contains(&trial.kind()) {
        r.error(
            "trial_kind",
            format!("{path}.kind"),
            format!("`{}` trials are not allowed here", trial.kind().as_str()),
        );
    }
    let start_ok = r.finite(format!("{path}.start_t_s"), trial.start_t_s);
    let end_ok = r.finite(format!("{path}.end_t_s"), trial.end_t_s);
    if start_ok && trial.start_t_s < 0.0 {
        r.error("trial_interval", format!("{path}.start_t_s"), "must be non-negative");
    }
    if start_ok && end_ok && trial.end_t_s < trial.start_t_s {
        r.error(
            "trial_interval",
            path.to_string(),
            format!(
                "end_t_s {} precedes start_t_s {}",
                trial.end_t_s, trial.start_t_s
            ),
        );
    }
    match &trial.payload {
        TrialPayload::Rotation { target_angle_deg } => {
            r.finite(format!("{path}.target_angle_deg"), *target_angle_deg);
        }
        TrialPayload::Forward { target_distance_m } => {
            if r.finite(format!("{path}.target_distance_m"), *target_distance_m)
                && *target_distance_m < 0.0
            {
                r.error(
                    "target_distance",
                    format!("{path}.target_distance_m"),
                    "must be non-negative",
                );
            }
        }
        TrialPayload::Perspective {
            stand_at,
            face,
            point_to,
            response_deg,
            rt_s,
        } => {
            for (field, id) in [("stand_at", stand_at), ("face", face), ("point_to", point_to)] {
                if log.map.get(id).is_none() {
                    r.error(
                        "trial_reference",
                        format!("{path}.{field}"),
                        format!("landmark `{id}` is not on the map"),
                    );
                }
            }
            if stand_at == face || stand_at == point_to || face == point_to {
                r.error(
                    "trial_distinct_landmarks",
                    path.to_string(),
                    "stand_at, face and point_to must be distinct",
                );
            }
            if r.finite(format!("{path}.response_deg"), *response_deg)
                && !(0.0..360.0).contains(response_deg)
            {
                r.error(
                    "response_range",
                    format!("{path}.response_deg"),
                    format!("{response_deg} is outside [0, 360)"),
                );
            }
            if r.finite(format!("{path}.rt_s"), *rt_s) && *rt_s < 0.0 {
                r.error("response_time", format!("{path}.rt_s"), "must be non-negative");
            }
        }
    }

    let mut prev_t: Option<f64> = None;
    for (j, s) in trial.samples.iter().enumerate() {
        let spath = format!("{path}.samples[{j}]");
        let t_ok = r.finite(format!("{spath}.t_s"), s.t_s);
        if r.finite(format!("{spath}.heading_deg"), s.heading_deg)
            && !(0.0..360.0).contains(&s.heading_deg)
        {
            r.error(
                "heading_range",
                format!("{spath}.heading_deg"),
                format!("{} is outside [0, 360)", s.heading_deg),
            );
        }
        if let Some(x) = s.x_m {
            r.finite(format!("{spath}.x_m"), x);
        }
        if let Some(y) = s.y_m {
            r.finite(format!("{spath}.y_m"), y);
        }
        if !t_ok {
            prev_t = None;
            continue;
        }
        if s.t_s < 0.0 {
            r.error("sample_time", format!("{spath}.t_s"), "must be non-negative");
        }
        if let Some(prev) = prev_t {
            let gap = s.t_s - prev;
            if gap < 0.0 {
                r.error(
                    "sample_order",
                    format!("{spath}.t_s"),
                    format!("time {} decreases from {prev}", s.t_s),
                );
            } else if let Some(period) = nominal_period {
                let lo = period * (1.0 - SAMPLE_SPACING_TOLERANCE);
                let hi = period * (1.0 + SAMPLE_SPACING_TOLERANCE);
                if gap < lo - 1e-9 || gap > hi + 1e-9 {
                    r.warn(
                        "sample_spacing",
                        format!("{spath}.t_s"),
                        format!("gap {gap:.3} s outside [{lo:.3}, {hi:.3}] s"),
                    );
                }
            }
        }
        prev_t = Some(s.t_s);
    }
}

fn check_items(
    r: &mut ValidationReport,
    rule: &str,
    path: &str,
    items: &[i32],
    count: usize,
    lo: i32,
    hi: i32,
) {
    if items.len() != count {
        r.error(
            rule,
            path,
            format!("expected {count} items, found {}", items.len()),
        );
    }
    for (i, v) in items.iter().enumerate() {
        if !(lo..=hi).contains(v) {
            r.error(
                rule,
                format!("{path}[{i}]"),
                format!("{v} is outside {lo}–{hi}"),
            );
        }
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(text.len());
        }
        offset += l.len();
    }
    text.len()
}

/// Parse and fully validate a log.
pub fn read_session(bytes: &[u8]) -> Result<SessionLog, SessionError> {
    read_session_with_warnings(bytes).map(|(log, _)| log)
}

/// Like [`read_session`], also returning non-fatal findings such as dropped
/// frames.
pub fn read_session_with_warnings(
    bytes: &[u8],
) -> Result<(SessionLog, Vec<Violation>), SessionError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let offset = e.valid_up_to();
        let prefix = &bytes[..offset];
        let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
        let column = offset - prefix.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
        SessionError::Parse {
            offset,
            line,
            column,
            message: "input is not valid UTF-8".to_string(),
        }
    })?;

    let log: SessionLog = match serde_json::from_str(text) {
        Ok(log) => log,
        Err(e) if e.is_data() => {
            // Well-formed JSON of the wrong shape. A foreign schema version
            // explains any shape mismatch, so report that first.
            let value: Value = serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
            if let Some(version) = value.get("schema_version").and_then(Value::as_str) {
                if version != SCHEMA_VERSION {
                    return Err(SessionError::UnsupportedVersion(version.to_string()));
                }
            }
            return Err(SessionError::Validation(vec![Violation {
                rule: "schema".to_string(),
                path: format!("line {} column {}", e.line(), e.column()),
                message: e.to_string(),
            }]));
        }
        Err(e) => return Err(parse_error(text, &e)),
    };
    if log.schema_version != SCHEMA_VERSION {
        return Err(SessionError::UnsupportedVersion(log.schema_version));
    }
    let report = validate(&log);
    if !report.errors.is_empty() {
        return Err(SessionError::Validation(report.errors));
    }
    Ok((log, report.warnings))
}

fn parse_error(text: &str, e: &serde_json::Error) -> SessionError {
    SessionError::Parse {
        offset: byte_offset(text, e.line(), e.column()),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn quantize_value(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(q) = n.as_f64().map(quantize).and_then(serde_json::Number::from_f64) {
                    *n = q;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(quantize_value),
        Value::Object(map) => map.values_mut().for_each(quantize_value),
        _ => {}
    }
}

/// Canonical serialization. Fails if the log violates any invariant.
pub fn write_session(log: &SessionLog) -> Result<Vec<u8>, SessionError> {
    let report = validate(log);
    if !report.errors.is_empty() {
        return Err(SessionError::Validation(report.errors));
    }
    let mut value = serde_json::to_value(log).map_err(|e| {
        SessionError::Validation(vec![Violation {
            rule: "serialize".to_string(),
            path: String::new(),
            message: e.to_string(),
        }])
    })?;
    quantize_value(&mut value);
    let mut out = serde_json::to_vec(&value).expect("JSON values always serialize");
    out.push(b'\n');
    Ok(out)
}

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("not a zip archive: {0}")]
    NotZip(String),
    #[error("archive write failed: {0}")]
    Write(String),
}

/// One archive member and what came of parsing it.
#[derive(Debug, Clone)]
pub struct ArchiveEntry {
    pub source_name: String,
    pub outcome: Result<SessionLog, SessionError>,
}

impl ArchiveEntry {
    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }
}

fn has_log_extension(name: &str) -> bool {
    name.rsplit_once('.')
        .is_some_and(|(_, ext)| ext.eq_ignore_ascii_case(LOG_EXTENSION))
}

/// True when `bytes` starts with a zip local-file or end-of-directory header.
pub fn looks_like_zip(bytes: &[u8]) -> bool {
    bytes.starts_with(b"PK\x03\x04") || bytes.starts_with(b"PK\x05\x06")
}

/// Parse every `.json` member of a zip archive. Member failures are recorded
/// per entry; results follow archive order.
pub fn ingest_archive(bytes: &[u8]) -> Result<Vec<ArchiveEntry>, ArchiveError> {
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes))
        .map_err(|e| ArchiveError::NotZip(e.to_string()))?;
    let mut raw: Vec<(String, Result<Vec<u8>, String>)> = Vec::new();
    for i in 0..archive.len() {
        let mut file = match archive.by_index(i) {
            Ok(f) => f,
            Err(e) => {
                raw.push((format!("#{i}"), Err(e.to_string())));
                continue;
            }
        };
        if file.is_dir() || !has_log_extension(file.name()) {
            continue;
        }
        let name = file.name().to_string();
        let mut buf = Vec::with_capacity(file.size() as usize);
        let content = file.read_to_end(&mut buf).map(|_| buf).map_err(|e| e.to_string());
        raw.push((name, content));
    }
    Ok(raw
        .into_par_iter()
        .map(|(source_name, content)| ArchiveEntry {
            outcome: content
                .map_err(SessionError::Unreadable)
                .and_then(|bytes| read_session(&bytes)),
            source_name,
        })
        .collect())
}

/// Ingest either a single log or a zip archive of logs.
pub fn ingest_bytes(name: &str, bytes: &[u8]) -> Result<Vec<ArchiveEntry>, ArchiveError> {
    if looks_like_zip(bytes) {
        ingest_archive(bytes)
    } else {
        Ok(vec![ArchiveEntry {
            source_name: name.to_string(),
            outcome: read_session(bytes),
        }])
    }
}

/// Build a deflate-compressed zip from `(name, content)` pairs.
pub fn write_archive<I, N, C>(entries: I) -> Result<Vec<u8>, ArchiveError>
where
    I: IntoIterator<Item = (N, C)>,
    N: AsRef<str>,
    C: AsRef<[u8]>,
{
    let mut writer = zip::ZipWriter::new(Cursor::new(Vec::new()));
    let options = zip::write::SimpleFileOptions::default()
        .compression_method(zip::CompressionMethod::Deflated)
        .last_modified_time(zip::DateTime::default());
    for (name, content) in entries {
        writer
            .start_file(name.as_ref(), options)
            .map_err(|e| ArchiveError::Write(e.to_string()))?;
        writer
            .write_all(content.as_ref())
            .map_err(|e| ArchiveError::Write(e.to_string()))?;
    }
    let cursor = writer
        .finish()
        .map_err(|e| ArchiveError::Write(e.to_string()))?;
    Ok(cursor.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::week_one_log;

    #[test]
    fn write_then_read_is_identity() {
        let log = week_one_log();
        let bytes = write_session(&log).unwrap();
        assert_eq!(*bytes.last().unwrap(), b'\n');
        assert_eq!(read_session(&bytes).unwrap(), log);
    }

    #[test]
    fn top_level_key_order_is_fixed() {
        let bytes = write_session(&week_one_log()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let keys = [
            "\"schema_version\"",
            "\"participant_id\"",
            "\"week\"",
            "\"started_at\"",
            "\"device\"",
            "\"sampling_hz\"",
            "\"plan_seed\"",
            "\"map\"",
            "\"rotation_trials\"",
            "\"movement_trials\"",
            "\"perspective_trials\"",
            "\"questionnaires\"",
        ];
        let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn floats_are_rounded_to_six_decimals() {
        let mut log = week_one_log();
        log.rotation_trials[0].end_t_s = 5.123_456_789;
        let text = String::from_utf8(write_session(&log).unwrap()).unwrap();
        assert!(text.contains("\"end_t_s\":5.123457"));
    }

    #[test]
    fn equal_logs_give_identical_bytes() {
        let a = week_one_log();
        let mut b = week_one_log();
        b.extra.insert("client_build".into(), Value::from("7"));
        assert_eq!(write_session(&a).unwrap(), write_session(&b).unwrap());
    }

    #[test]
    fn truncated_document_is_a_parse_error() {
        let bytes = write_session(&week_one_log()).unwrap();
        let cut = &bytes[..bytes.len() / 2];
        match read_session(cut) {
            Err(SessionError::Parse { offset, .. }) => assert!(offset <= cut.len()),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_reports_byte_offset() {
        let text = b"{\n  \"schema_version\": \"1.0\",\n  oops\n}";
        match read_session(text) {
            Err(SessionError::Parse { offset, line, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(&text[offset..offset + 4], b"oops");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_utf8_is_a_parse_error() {
        match read_session(b"{\"a\": \"\xff\"}") {
            Err(SessionError::Parse { offset, .. }) => assert_eq!(offset, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn five_trials_in_week_one_names_the_rule() {
        let mut log = week_one_log();
        log.perspective_trials.pop();
        let mut value = serde_json::to_value(&log).unwrap();
        quantize_value(&mut value);
        let bytes = serde_json::to_vec(&value).unwrap();
        match read_session(&bytes) {
            Err(SessionError::Validation(v)) => {
                assert!(v.iter().any(|x| x.rule == "perspective_trial_count"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
        assert!(matches!(write_session(&log), Err(SessionError::Validation(_))));
    }

    #[test]
    fn every_failed_rule_is_listed() {
        let mut log = week_one_log();
        log.perspective_trials.pop();
        log.rotation_trials[0].end_t_s = -1.0;
        if let TrialPayload::Perspective { response_deg, .. } = &mut log.perspective_trials[0].payload {
            *response_deg = 400.0;
        }
        let report = validate(&log);
        let rules: Vec<&str> = report.errors.iter().map(|v| v.rule.as_str()).collect();
        assert!(rules.contains(&"perspective_trial_count"));
        assert!(rules.contains(&"trial_interval"));
        assert!(rules.contains(&"response_range"));
    }

    #[test]
    fn nan_heading_is_rejected_on_write() {
        let mut log = week_one_log();
        log.rotation_trials[0].samples[0].heading_deg = f64::NAN;
        match write_session(&log) {
            Err(SessionError::Validation(v)) => assert!(v.iter().any(|x| x.rule == "finite")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_version_is_reported_as_such() {
        let bytes = write_session(&week_one_log()).unwrap();
        let text = String::from_utf8(bytes).unwrap().replace("\"1.0\"", "\"2.0\"");
        assert_eq!(
            read_session(text.as_bytes()),
            Err(SessionError::UnsupportedVersion("2.0".into()))
        );
        let reshaped = r#"{"schema_version":"0.9","participant":"p"}"#;
        assert_eq!(
            read_session(reshaped.as_bytes()),
            Err(SessionError::UnsupportedVersion("0.9".into()))
        );
    }

    #[test]
    fn unknown_fields_are_kept_but_not_written() {
        let bytes = write_session(&week_one_log()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let with_extra = text.replacen('{', "{\"firmware\":\"2.1\",", 1);
        let log = read_session(with_extra.as_bytes()).unwrap();
        assert_eq!(log.extra.get("firmware"), Some(&Value::from("2.1")));
        assert_eq!(String::from_utf8(write_session(&log).unwrap()).unwrap(), text);
    }

    #[test]
    fn wrong_types_are_schema_violations() {
        let bytes = write_session(&week_one_log()).unwrap();
        let text = String::from_utf8(bytes).unwrap().replace("\"week\":1", "\"week\":\"one\"");
        assert!(matches!(
            read_session(text.as_bytes()),
            Err(SessionError::Validation(v)) if v[0].rule == "schema"
        ));
    }

    #[test]
    fn dropped_frames_warn_without_failing() {
        let mut log = week_one_log();
        let samples = &mut log.rotation_trials[0].samples;
        samples.remove(2);
        let bytes = write_session(&log).unwrap();
        let (_, warnings) = read_session_with_warnings(&bytes).unwrap();
        assert!(warnings.iter().any(|w| w.rule == "sample_spacing"));
    }

    #[test]
    fn timestamps_require_utc_z_form() {
        assert!(Timestamp::parse("2024-03-01T10:00:00Z").is_ok());
        assert!(Timestamp::parse("2024-03-01T10:00:00+01:00").is_err());
        assert!(Timestamp::parse("yesterday").is_err());
        let ts = Timestamp::parse("2024-03-01T10:00:00.250Z").unwrap();
        assert_eq!(ts.to_string(), "2024-03-01T10:00:00.250Z");
    }

    #[test]
    fn archive_collects_per_entry_errors() {
        let log = week_one_log();
        let good = write_session(&log).unwrap();
        let mut entries: Vec<(String, Vec<u8>)> = (0..3)
            .map(|i| (format!("p{i}_w1.json"), good.clone()))
            .collect();
        entries.insert(2, ("broken_w1.json".into(), b"{\"schema_version\":".to_vec()));
        entries.push(("notes.txt".into(), b"ignored".to_vec()));
        let zip = write_archive(entries).unwrap();
        let out = ingest_archive(&zip).unwrap();
        assert_eq!(out.len(), 4);
        assert_eq!(out.iter().filter(|e| e.is_ok()).count(), 3);
        assert_eq!(out[2].source_name, "broken_w1.json");
        assert!(matches!(out[2].outcome, Err(SessionError::Parse { .. })));
        assert_eq!(out[3].source_name, "p2_w1.json");
    }

    #[test]
    fn empty_archive_and_non_zip() {
        let empty = write_archive(Vec::<(String, Vec<u8>)>::new()).unwrap();
        assert!(ingest_archive(&empty).unwrap().is_empty());
        assert!(matches!(
            ingest_archive(b"definitely not a zip"),
            Err(ArchiveError::NotZip(_))
        ));
    }

    #[test]
    fn ingest_bytes_accepts_single_logs() {
        let good = write_session(&week_one_log()).unwrap();
        let out = ingest_bytes("one.json", &good).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].is_ok());
    }

    #[test]
    fn quantize_is_idempotent() {
        for x in [0.1, 1.0 / 3.0, 123.456_789_5, -0.000_000_4, 359.999_999_9] {
            let q = quantize(x);
            assert_eq!(quantize(q), q);
            let reparsed: f64 = q.to_string().parse().unwrap();
            assert_eq!(reparsed, q);
        }
    }
}
