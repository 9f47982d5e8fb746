use std::collections::HashSet;
use std::sync::OnceLock;

use proptest::prelude::*;
use space_core::export::{build_catalog, export_csv, ExportError, ExportMode, ExportRequest, QUICK_SUMMARY_COLUMNS};
use space_core::metrics::metric_record;
use space_core::sessionlog::{ingest_bytes, write_archive, write_session, SessionLog};
use space_core::studysim::{simulate_cohort, CohortConfig};

fn batch() -> &'static [SessionLog] {
    static LOGS: OnceLock<Vec<SessionLog>> = OnceLock::new();
    LOGS.get_or_init(|| {
        let mut c = CohortConfig::default();
        c.n_per_cell = 2;
        c.female_extra = 0;
        c.reliability_target = None;
        c.moca.planted_week3_slope = 0.0;
        c.supervised = None;
        simulate_cohort(&c).unwrap().logs().cloned().collect()
    })
}

fn table(csv: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new().from_reader(csv);
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn full(mode: ExportMode) -> (Vec<String>, Vec<Vec<String>>) {
    let catalog = build_catalog(batch(), mode).unwrap();
    table(&export_csv(batch(), &ExportRequest::all(&catalog)).unwrap())
}

#[test]
fn quick_summary_has_one_row_per_participant_week() {
    let (header, rows) = full(ExportMode::QuickSummary);
    assert_eq!(header, QUICK_SUMMARY_COLUMNS);
    // 3 age groups x 2 genders x 2 participants, 3 weeks each.
    assert_eq!(rows.len(), 36);
    let keys: HashSet<(String, String)> = rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    assert_eq!(keys.len(), rows.len());
}

#[test]
fn quick_summary_values_are_the_metric_records() {
    let (header, rows) = full(ExportMode::QuickSummary);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for (log, row) in batch().iter().zip(&rows) {
        let m = metric_record(log).unwrap();
        assert_eq!(row[col("participant_id")], m.participant_id);
        assert_eq!(row[col("rotation_time_s")].parse::<f64>().unwrap(), m.rotation_time_s);
        let e: f64 = row[col("perspective_error_deg")].parse().unwrap();
        assert!((e - m.perspective_error_deg).abs() <= 5e-7);
    }
    let z: Vec<f64> = rows.iter().map(|r| r[col("space_error_z")].parse().unwrap()).collect();
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    assert!(mean.abs() < 1e-5, "batch-relative z should centre on zero, got {mean}");
}

#[test]
fn detailed_has_one_row_per_trial() {
    let (header, rows) = full(ExportMode::Detailed);
    let trials: usize = batch().iter().map(|l| l.trials().count()).sum();
    assert_eq!(rows.len(), trials);
    let unique: HashSet<&String> = header.iter().collect();
    assert_eq!(unique.len(), header.len());
    let prefixes = ["player_", "training_", "perspective_", "questionnaire_"];
    assert!(header.iter().all(|h| prefixes.iter().any(|p| h.starts_with(p))), "{header:?}");
}

#[test]
fn catalog_covers_every_metric_and_questionnaire_field_once() {
    let columns: Vec<String> = build_catalog(batch(), ExportMode::Detailed)
        .unwrap()
        .columns()
        .into_iter()
        .map(String::from)
        .collect();
    for field in [
        "training_rotation_time_s",
        "training_movement_time_s",
        "training_total_training_time_s",
        "perspective_error_deg",
        "perspective_space_error_z",
        "questionnaire_sus",
        "questionnaire_nasa_tlx",
        "questionnaire_ueq_attractiveness",
        "questionnaire_ueq_pragmatic",
        "questionnaire_ueq_hedonic",
    ] {
        assert_eq!(columns.iter().filter(|c| *c == field).count(), 1, "{field}");
    }
}

#[test]
fn batch_without_questionnaires_has_no_questionnaire_group() {
    let logs: Vec<SessionLog> = batch()
        .iter()
        .cloned()
        .map(|mut l| {
            l.questionnaires = None;
            l
        })
        .collect();
    let catalog = build_catalog(&logs, ExportMode::Detailed).unwrap();
    assert!(catalog.groups.iter().all(|g| g.category.label() != "Questionnaires"));
    assert!(!catalog.contains("questionnaire_sus"));
}

#[test]
fn archive_round_trip_exports_the_same_bytes() {
    let entries: Vec<(String, Vec<u8>)> = batch()
        .iter()
        .map(|l| (l.entry_name(), write_session(l).unwrap()))
        .collect();
    let zip = write_archive(entries).unwrap();
    let parsed: Vec<SessionLog> = ingest_bytes("batch.zip", &zip)
        .unwrap()
        .into_iter()
        .map(|e| e.outcome.unwrap())
        .collect();
    for mode in [ExportMode::QuickSummary, ExportMode::Detailed] {
        let request = ExportRequest::all(&build_catalog(batch(), mode).unwrap());
        assert_eq!(export_csv(batch(), &request).unwrap(), export_csv(&parsed, &request).unwrap());
    }
}

#[test]
fn columns_from_the_other_mode_are_rejected() {
    let detailed = build_catalog(batch(), ExportMode::Detailed).unwrap();
    let request = ExportRequest {
        mode: ExportMode::QuickSummary,
        selected_columns: vec!["participant_id".into(), detailed.columns()[0].to_string()],
    };
    match export_csv(batch(), &request) {
        Err(ExportError::UnknownColumns(c)) => assert_eq!(c, vec!["player_participant_id".to_string()]),
        other => panic!("expected unknown columns, got {other:?}"),
    }
}

#[test]
fn output_is_crlf_terminated_utf8() {
    let request = ExportRequest::all(&build_catalog(batch(), ExportMode::QuickSummary).unwrap());
    let csv = String::from_utf8(export_csv(batch(), &request).unwrap()).unwrap();
    assert!(csv.ends_with("\r\n"));
    assert_eq!(csv.matches("\r\n").count(), csv.matches('\n').count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Export is a projection: any selection equals the full export with
    /// the other columns dropped, in catalog order.
    #[test]
    fn export_is_a_projection(
        detailed in any::<bool>(),
        picks in proptest::collection::vec(any::<bool>(), 40),
        reverse in any::<bool>(),
    ) {
        let mode = if detailed { ExportMode::Detailed } else { ExportMode::QuickSummary };
        let catalog = build_catalog(batch(), mode).unwrap();
        let all = catalog.columns();
        let mut chosen: Vec<String> = all
            .iter()
            .zip(picks.iter().cycle())
            .filter(|(_, &p)| p)
            .map(|(c, _)| c.to_string())
            .collect();
        prop_assume!(!chosen.is_empty());
        if reverse {
            chosen.reverse();
        }
        let (full_header, full_rows) = full(mode);
        let request = ExportRequest { mode, selected_columns: chosen.clone() };
        let (header, rows) = table(&export_csv(batch(), &request).unwrap());
        let keep: Vec<usize> = full_header
            .iter()
            .enumerate()
            .filter(|(_, h)| chosen.contains(h))
            .map(|(i, _)| i)
            .collect();
        let expected_header: Vec<String> = keep.iter().map(|&i| full_header[i].clone()).collect();
        prop_assert_eq!(header, expected_header);
        prop_assert_eq!(rows.len(), full_rows.len());
        for (row, full_row) in rows.iter().zip(&full_rows) {
            let expected: Vec<String> = keep.iter().map(|&i| full_row[i].clone()).collect();
            prop_assert_eq!(row, &expected);
        }
    }
}
