use std::collections::BTreeMap;

use proptest::prelude::*;
use space_core::questionnaires::SUS_BENCHMARK;
use space_core::sessionlog::write_session;
use space_core::stats::{icc_two_way, spearman_rho, wilcoxon_signed_rank};
use space_core::studysim::*;
use space_core::Week;

fn default_dataset() -> StudyDataset {
    simulate_cohort(&CohortConfig::default()).unwrap()
}

fn repo_file(name: &str) -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/").to_string() + name;
    std::fs::read_to_string(path).unwrap()
}

/// Small, quick config: no calibration, no supervised sample.
fn quick(seed: u64, n_per_cell: usize) -> CohortConfig {
    let mut c = CohortConfig::default();
    c.seed = seed;
    c.n_per_cell = n_per_cell;
    c.reliability_target = None;
    c.moca.planted_week3_slope = 0.0;
    c.supervised = None;
    c
}

#[test]
fn old_group_week_one_perspective_error_is_near_the_reference_mean() {
    let ds = default_dataset();
    let errors: Vec<f64> = ds
        .unsupervised()
        .filter(|p| p.age_group == AgeGroup::Old)
        .map(|p| p.metric(Week::One).unwrap().perspective_error_deg)
        .collect();
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let se = 29.78 / n.sqrt();
    assert!((mean - 60.27).abs() <= 2.0 * se, "mean {mean:.2}, 2 SE = {:.2}", 2.0 * se);
}

#[test]
fn default_cohort_has_table_one_cell_sizes() {
    let ds = default_dataset();
    assert_eq!(ds.unsupervised().count(), 93);
    for g in AgeGroup::ALL {
        let f = ds.unsupervised().filter(|p| p.age_group == g && p.gender == Gender::Female).count();
        let m = ds.unsupervised().filter(|p| p.age_group == g && p.gender == Gender::Male).count();
        assert_eq!((f, m), (16, 15), "{g:?}");
    }
}

#[test]
fn same_seed_gives_byte_identical_datasets() {
    let config = quick(11, 4);
    let a = simulate_cohort(&config).unwrap();
    let b = simulate_cohort(&config).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let logs = |d: &StudyDataset| d.logs().map(|l| write_session(l).unwrap()).collect::<Vec<_>>();
    assert_eq!(logs(&a), logs(&b));
}

#[test]
fn different_seeds_give_different_datasets() {
    let a = simulate_cohort(&quick(1, 3)).unwrap();
    let b = simulate_cohort(&quick(2, 3)).unwrap();
    assert_ne!(a.to_json(), b.to_json());
}

#[test]
fn zero_noise_makes_same_cell_participants_identical() {
    let mut config = CohortConfig::default();
    config.noise_scale = 0.0;
    config.n_per_cell = 4;
    let ds = simulate_cohort(&config).unwrap();
    let mut cells: BTreeMap<String, Vec<&Participant>> = BTreeMap::new();
    for p in &ds.participants {
        let key = format!("{}|{:?}|{:?}", p.study, p.age_group, p.gender);
        cells.entry(key).or_default().push(p);
    }
    assert!(cells.values().any(|v| v.len() > 1));
    for (key, members) in cells {
        let first = members[0];
        for p in &members[1..] {
            assert_eq!(p.age, first.age, "{key}");
            assert_eq!(p.education, first.education, "{key}");
            assert_eq!(p.moca_total, first.moca_total, "{key}");
            assert_eq!(p.questionnaires, first.questionnaires, "{key}");
            for (a, b) in p.metrics.iter().zip(&first.metrics) {
                assert_eq!(a.rotation_time_s, b.rotation_time_s, "{key}");
                assert_eq!(a.movement_time_s, b.movement_time_s, "{key}");
                // Responses are snapped to the log grid while the true
                // bearings are not, so each trial may move by half a step.
                let d = (a.perspective_error_deg - b.perspective_error_deg).abs();
                assert!(d <= 5e-7, "{key}: {d}");
            }
        }
    }
}

#[test]
fn datasets_satisfy_their_invariants() {
    let ds = default_dataset();
    ds.validate().unwrap();
    for p in &ds.participants {
        assert_eq!(AgeGroup::of_age(p.age), Some(p.age_group), "{}", p.id);
        assert!(p.moca_total.is_none_or(|m| m <= 30), "{}", p.id);
        let weeks = match p.condition {
            Condition::Unsupervised => {
                assert!(p.moca_total.is_some(), "{}", p.id);
                3
            }
            Condition::Supervised => 1,
        };
        assert_eq!(p.weeks().len(), weeks, "{}", p.id);
        assert_eq!(p.sessions.len(), weeks, "{}", p.id);
    }
    let back = StudyDataset::from_json(&ds.to_json()).unwrap();
    assert_eq!(back.to_json(), ds.to_json());
}

#[test]
fn reliability_in_the_reference_confidence_band() {
    let report = analyze_study(&default_dataset()).unwrap();
    let icc = report.q1.unwrap().icc.icc_single;
    assert!((0.59..=0.75).contains(&icc), "ICC(2,1) = {icc}");
}

#[test]
fn planted_age_gradient_is_recovered_by_the_mixed_art() {
    let ds = default_dataset();
    let report = analyze_questions(&ds, &[Question::Q4]).unwrap();
    let age = report.q4.unwrap().art.effect("Age Group").cloned().unwrap();
    assert!(age.p_value < 0.05, "{age:?}");
    let rows = analysis_table(&ds).unwrap();
    let mut sums = [(0.0, 0.0); 3];
    for r in rows.iter().filter(|r| r.condition == Condition::Unsupervised) {
        let s = &mut sums[r.age_group.index()];
        s.0 += r.space_error_z_pooled.unwrap();
        s.1 += 1.0;
    }
    let [y, m, o] = sums.map(|(s, n)| s / n);
    assert!(y < m && m < o, "{y} {m} {o}");
}

#[test]
fn null_cohorts_keep_family_wise_error_at_most_ten_percent() {
    let r = recovery_experiment(&CohortConfig::null(), 200).unwrap();
    assert!(r.failures.is_empty(), "{:?}", r.failures);
    for f in &r.families {
        assert_eq!(f.n, 200);
        assert!(f.rate <= 0.10, "{} rejects in {:.3} of runs", f.name, f.rate);
    }
    for e in &r.effects {
        assert!(e.detection_rate <= 0.10, "{} detected in {:.3} of runs", e.name, e.detection_rate);
    }
}

#[test]
fn doubling_the_cells_does_not_lower_detection() {
    let mut small = CohortConfig::default();
    small.supervised = None;
    let mut big = small.clone();
    big.n_per_cell *= 2;
    let a = recovery_experiment(&small, 40).unwrap();
    let b = recovery_experiment(&big, 40).unwrap();
    for e in &a.effects {
        let d = b.effect(&e.name).unwrap().detection_rate;
        assert!(d >= e.detection_rate, "{}: {} -> {}", e.name, e.detection_rate, d);
    }
}

#[test]
fn shipped_configs_match_the_built_in_ones() {
    assert_eq!(CohortConfig::from_toml(&repo_file("default.toml")).unwrap(), CohortConfig::default());
    assert_eq!(CohortConfig::from_toml(&repo_file("null.toml")).unwrap(), CohortConfig::null());
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = quick(1, 1);
    assert!(matches!(simulate_cohort(&c), Err(SimError::Config(_))));
    c.n_per_cell = 3;
    c.targets.old.rotation_time_s[1][1] = 0.0;
    assert!(matches!(simulate_cohort(&c), Err(SimError::Config(_))));
    assert!(CohortConfig::from_toml("seed = 1\nbogus = 2\n").is_err());
}

#[test]
fn supervision_questions_need_a_supervised_sample() {
    let ds = simulate_cohort(&quick(3, 3)).unwrap();
    let err = analyze_questions(&ds, &[Question::Q5]).unwrap_err();
    assert_eq!(err.question(), Question::Q5);
    let err = analyze_study(&ds).unwrap_err();
    assert_eq!(err.question(), Question::Q5);
    assert!(analyze_questions(&ds, &[Question::Q1, Question::Q4]).is_ok());
}

#[test]
fn reports_are_deterministic() {
    let ds = default_dataset();
    let a = analyze_study(&ds).unwrap();
    let b = analyze_study(&StudyDataset::from_json(&ds.to_json()).unwrap()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(report_csv(&a), report_csv(&b));
    assert_eq!(report_text(&a), report_text(&b));
}

#[test]
fn report_statistics_are_reproducible_from_the_analysis_table() {
    let ds = default_dataset();
    let report = analyze_study(&ds).unwrap();
    let rows = analysis_table(&ds).unwrap();
    let mut by_participant: BTreeMap<&str, [f64; 3]> = BTreeMap::new();
    let mut order = Vec::new();
    for r in rows.iter().filter(|r| r.condition == Condition::Unsupervised) {
        let e = by_participant.entry(&r.participant_id).or_insert_with(|| {
            order.push(r.participant_id.as_str());
            [f64::NAN; 3]
        });
        e[r.week.index()] = r.space_error_z_week.unwrap();
    }
    let z: Vec<[f64; 3]> = order.iter().map(|id| by_participant[id]).collect();
    let q1 = report.q1.as_ref().unwrap();
    for entry in &q1.spearman {
        let (a, b) = match entry.label.as_str() {
            "Week 1 vs Week 2" => (0, 1),
            "Week 2 vs Week 3" => (1, 2),
            "Week 1 vs Week 3" => (0, 2),
            other => panic!("unexpected pair {other}"),
        };
        let x: Vec<f64> = z.iter().map(|r| r[a]).collect();
        let y: Vec<f64> = z.iter().map(|r| r[b]).collect();
        assert_eq!(spearman_rho(&x, &y).unwrap(), entry.result);
    }
    let matrix: Vec<Vec<f64>> = z.iter().map(|r| r.to_vec()).collect();
    assert_eq!(icc_two_way(&matrix).unwrap(), q1.icc);

    let q3 = report.q3.as_ref().unwrap();
    let sus = q3.benchmarks.iter().find(|f| f.measure == "SUS").unwrap();
    for (i, week) in Week::ALL.iter().enumerate() {
        let scores: Vec<f64> = rows
            .iter()
            .filter(|r| r.condition == Condition::Unsupervised && r.week == *week)
            .map(|r| r.sus.unwrap())
            .collect();
        assert_eq!(wilcoxon_signed_rank(&scores, SUS_BENCHMARK).unwrap(), sus.tests[i].result);
    }
}

#[test]
fn every_posthoc_family_is_holm_adjusted() {
    let report = analyze_study(&default_dataset()).unwrap();
    let families = report.families();
    assert!(families.len() > 20);
    for f in families {
        assert!(!f.p_holm.is_empty(), "{} {}", f.question, f.name);
        assert!(f.p_holm.iter().all(|p| (0.0..=1.0).contains(p)), "{} {}", f.question, f.name);
    }
}

#[test]
fn report_csv_has_a_fixed_header_and_one_row_per_statistic() {
    let report = analyze_study(&default_dataset()).unwrap();
    let csv = report_csv(&report);
    let mut reader = csv::ReaderBuilder::new().from_reader(csv.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, REPORT_COLUMNS);
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    for q in ["Q1", "Q2", "Q3", "Q4", "Q5", "Q6"] {
        assert!(records.iter().any(|r| &r[0] == q), "no rows for {q}");
    }
    assert!(records.iter().all(|r| r.len() == REPORT_COLUMNS.len()));
}

#[test]
fn recovery_reports_planted_values_and_bias() {
    let mut config = CohortConfig::default();
    config.supervised = None;
    let r = recovery_experiment(&config, 8).unwrap();
    let icc = r.effect(ICC_EFFECT).unwrap();
    assert_eq!(icc.planted, Some(0.67));
    assert_eq!(icc.estimates.len(), 8);
    assert!((icc.bias.unwrap() - (icc.mean_estimate - 0.67)).abs() < 1e-15);
    assert!(r.ordering(AGE_ORDERING).is_some());
    assert!(matches!(recovery_experiment(&config, 0), Err(SimError::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulated_metrics_are_in_range(seed in any::<u64>(), n in 2usize..4) {
        let ds = simulate_cohort(&quick(seed, n)).unwrap();
        for p in &ds.participants {
            prop_assert_eq!(p.metrics.len(), 3);
            for m in &p.metrics {
                prop_assert!(m.rotation_time_s > 0.0 && m.movement_time_s > 0.0);
                prop_assert!((0.0..=180.0).contains(&m.perspective_error_deg));
            }
            for q in p.questionnaires.iter().flatten() {
                prop_assert!((0.0..=100.0).contains(&q.sus));
                prop_assert!((0.0..=100.0).contains(&q.nasa_tlx));
            }
        }
    }
}
