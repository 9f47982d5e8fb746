//! The Q1–Q6 analysis plan.
//!
//! Everything runs off [`AnalysisRow`]s, one per participant-week, so every
//! reported statistic can be recomputed from [`analysis_table`] alone.
//!
//! SPACE error is standardized three ways, matching how each question slices
//! the data: within each week of the unsupervised cohort (Q1 reliability and
//! Q2 regressions), pooled over all unsupervised weeks (Q1 week ART and Q4,
//! where week differences are the point), and over the week-1 sample of both
//! conditions together (Q5).

use serde::{Deserialize, Serialize};

use super::{AgeGroup, AnalysisError, Condition, Question, StudyDataset};
use crate::metrics::{composite_space_error, Grouping, MetricRecord, Standardization};
use crate::questionnaires::{SUS_BENCHMARK, TLX_BENCHMARK, UEQ_BENCHMARK};
use crate::stats::art::{art_posthoc, art_simple_contrasts, Contrast};
use crate::stats::{
    art_anova, holm_adjust, icc_two_way, nested_model_compare, ols_fit, spearman_rho,
    wilcoxon_signed_rank, ArtData, ArtTable, Design, Factor, IccResult, OlsFit,
    StatResult, StatsError,
};
use crate::taskgen::Week;

pub const ANALYSIS_VERSION: &str = "1.0";

/// One participant-week with every variable the plan uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub participant_id: String,
    pub study: String,
    pub condition: Condition,
    pub age: u32,
    pub age_group: AgeGroup,
    pub gender: super::Gender,
    pub education: super::Education,
    pub moca_total: Option<u8>,
    pub week: Week,
    pub rotation_time_s: f64,
    pub movement_time_s: f64,
    pub total_training_time_s: f64,
    pub perspective_error_deg: f64,
    /// Unsupervised rows only, standardized within week.
    pub space_error_z_week: Option<f64>,
    /// Unsupervised rows only, standardized over all weeks.
    pub space_error_z_pooled: Option<f64>,
    /// Week-1 rows only, standardized over both conditions.
    pub space_error_z_combined: Option<f64>,
    pub sus: Option<f64>,
    pub nasa_tlx: Option<f64>,
    pub ueq_attractiveness: Option<f64>,
    pub ueq_pragmatic: Option<f64>,
    pub ueq_hedonic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub label: String,
    pub result: StatResult,
    /// Holm-adjusted p within the entry's family, where it has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_holm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosthocFamily {
    pub factor: String,
    pub contrasts: Vec<Contrast>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtReport {
    pub label: String,
    pub table: ArtTable,
    /// Pairwise contrasts for every main effect, Holm-adjusted per factor.
    pub posthoc: Vec<PosthocFamily>,
}

impl ArtReport {
    pub fn effect(&self, name: &str) -> Option<&StatResult> {
        self.table.get(name)
    }

    pub fn posthoc(&self, factor: &str) -> Option<&PosthocFamily> {
        self.posthoc.iter().find(|f| f.factor == factor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q1Report {
    pub spearman: Vec<ReportEntry>,
    pub icc: IccResult,
    pub week_art: ArtReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub label: String,
    pub fit: OlsFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionPanel {
    pub label: String,
    pub baseline: OlsFit,
    pub models: Vec<RegressionModel>,
    /// Baseline against each model; one Holm family.
    pub comparisons: Vec<ReportEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q2Report {
    pub panel_a: RegressionPanel,
    pub panel_b: RegressionPanel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkFamily {
    pub measure: String,
    pub benchmark: f64,
    /// One test per week, Holm-adjusted over the weeks.
    pub tests: Vec<ReportEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q3Report {
    pub benchmarks: Vec<BenchmarkFamily>,
    pub week_arts: Vec<ArtReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q4Report {
    pub art: ArtReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q5Report {
    pub art: ArtReport,
    /// Supervision within each age group, one Holm family.
    pub simple_contrasts: PosthocFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q6Report {
    pub arts: Vec<ArtReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub analysis_version: String,
    pub seed: u64,
    pub n_unsupervised: usize,
    pub n_supervised: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q1: Option<Q1Report>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q2: Option<Q2Report>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q3: Option<Q3Report>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q4: Option<Q4Report>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q5: Option<Q5Report>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q6: Option<Q6Report>,
}

/// Adjusted p-values of one Holm family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolmFamily {
    pub question: Question,
    pub name: String,
    pub p_holm: Vec<f64>,
}

impl HolmFamily {
    /// True when any member is significant after adjustment.
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_holm.iter().any(|&p| p < alpha)
    }
}

impl StudyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Every Holm-adjusted family in the report.
    pub fn families(&self) -> Vec<HolmFamily> {
        let mut out = Vec::new();
        let mut push = |question, name: String, p: Vec<f64>| {
            out.push(HolmFamily {
                question,
                name,
                p_holm: p,
            })
        };
        let entries = |e: &[ReportEntry]| e.iter().filter_map(|x| x.p_holm).collect::<Vec<_>>();
        let contrasts = |c: &[Contrast]| c.iter().map(|x| x.p_holm).collect::<Vec<_>>();
        let arts = |q, art: &ArtReport, push: &mut dyn FnMut(Question, String, Vec<f64>)| {
            for f in &art.posthoc {
                push(q, format!("{} post hoc {}", art.label, f.factor), contrasts(&f.contrasts));
            }
        };
        if let Some(q1) = &self.q1 {
            arts(Question::Q1, &q1.week_art, &mut push);
        }
        if let Some(q2) = &self.q2 {
            for panel in [&q2.panel_a, &q2.panel_b] {
                push(Question::Q2, format!("{} comparisons", panel.label), entries(&panel.comparisons));
            }
        }
        if let Some(q3) = &self.q3 {
            for b in &q3.benchmarks {
                push(Question::Q3, format!("{} benchmark", b.measure), entries(&b.tests));
            }
            for a in &q3.week_arts {
                arts(Question::Q3, a, &mut push);
            }
        }
        if let Some(q4) = &self.q4 {
            arts(Question::Q4, &q4.art, &mut push);
        }
        if let Some(q5) = &self.q5 {
            arts(Question::Q5, &q5.art, &mut push);
            push(
                Question::Q5,
                format!("{} simple contrasts {}", q5.art.label, q5.simple_contrasts.factor),
                contrasts(&q5.simple_contrasts.contrasts),
            );
        }
        if let Some(q6) = &self.q6 {
            for a in &q6.arts {
                arts(Question::Q6, a, &mut push);
            }
        }
        out
    }
}

fn plan_err(question: Question, reason: impl Into<String>) -> AnalysisError {
    AnalysisError::Plan {
        question,
        reason: reason.into(),
    }
}

fn stats_err(question: Question, step: &str) -> impl FnOnce(StatsError) -> AnalysisError + '_ {
    move |source| AnalysisError::Stats {
        question,
        step: step.to_string(),
        source,
    }
}

fn standardize(
    question: Question,
    records: &[MetricRecord],
    grouping: Grouping,
) -> Result<Vec<f64>, AnalysisError> {
    let s = Standardization {
        grouping,
        ..Standardization::default()
    };
    let scored = composite_space_error(records, s).map_err(|e| plan_err(question, e.to_string()))?;
    Ok(scored.iter().map(|r| r.space_error_z.unwrap_or(f64::NAN)).collect())
}

/// Flatten a dataset into participant-week rows, computing the three
/// SPACE error standardizations.
pub fn analysis_table(dataset: &StudyDataset) -> Result<Vec<AnalysisRow>, AnalysisError> {
    let mut rows = Vec::new();
    for p in &dataset.participants {
        for (i, m) in p.metrics.iter().enumerate() {
            let q = p.questionnaires.get(i).copied().flatten();
            rows.push(AnalysisRow {
                participant_id: p.id.clone(),
                study: p.study.clone(),
                condition: p.condition,
                age: p.age,
                age_group: p.age_group,
                gender: p.gender,
                education: p.education,
                moca_total: p.moca_total,
                week: m.week,
                rotation_time_s: m.rotation_time_s,
                movement_time_s: m.movement_time_s,
                total_training_time_s: m.total_training_time_s,
                perspective_error_deg: m.perspective_error_deg,
                space_error_z_week: None,
                space_error_z_pooled: None,
                space_error_z_combined: None,
                sus: q.map(|s| s.sus),
                nasa_tlx: q.map(|s| s.nasa_tlx),
                ueq_attractiveness: q.map(|s| s.ueq_attractiveness),
                ueq_pragmatic: q.map(|s| s.ueq_pragmatic),
                ueq_hedonic: q.map(|s| s.ueq_hedonic),
            });
        }
    }
    let record = |r: &AnalysisRow| MetricRecord {
        participant_id: r.participant_id.clone(),
        week: r.week,
        rotation_time_s: r.rotation_time_s,
        movement_time_s: r.movement_time_s,
        total_training_time_s: r.total_training_time_s,
        perspective_error_deg: r.perspective_error_deg,
        space_error_z: None,
    };
    let unsup: Vec<usize> = (0..rows.len())
        .filter(|&i| rows[i].condition == Condition::Unsupervised)
        .collect();
    if !unsup.is_empty() {
        let records: Vec<MetricRecord> = unsup.iter().map(|&i| record(&rows[i])).collect();
        let week = standardize(Question::Q1, &records, Grouping::PerWeek)?;
        let pooled = standardize(Question::Q4, &records, Grouping::Pooled)?;
        for (k, &i) in unsup.iter().enumerate() {
            rows[i].space_error_z_week = Some(week[k]);
            rows[i].space_error_z_pooled = Some(pooled[k]);
        }
    }
    let week_one: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].week == Week::One).collect();
    let both = [Condition::Unsupervised, Condition::Supervised]
        .iter()
        .all(|c| week_one.iter().any(|&i| rows[i].condition == *c));
    if both {
        let records: Vec<MetricRecord> = week_one.iter().map(|&i| record(&rows[i])).collect();
        let z = standardize(Question::Q5, &records, Grouping::PerWeek)?;
        for (k, &i) in week_one.iter().enumerate() {
            rows[i].space_error_z_combined = Some(z[k]);
        }
    }
    Ok(rows)
}

/// Run the whole plan. Q5 and Q6 need a supervised sample.
pub fn analyze_study(dataset: &StudyDataset) -> Result<StudyReport, AnalysisError> {
    analyze_questions(dataset, &Question::ALL)
}

pub fn analyze_questions(
    dataset: &StudyDataset,
    questions: &[Question],
) -> Result<StudyReport, AnalysisError> {
    let rows = analysis_table(dataset)?;
    let wants = |q| questions.contains(&q);
    Ok(StudyReport {
        analysis_version: ANALYSIS_VERSION.into(),
        seed: dataset.seed,
        n_unsupervised: dataset.unsupervised().count(),
        n_supervised: dataset.supervised().count(),
        q1: wants(Question::Q1).then(|| q1(&rows)).transpose()?,
        q2: wants(Question::Q2).then(|| q2(&rows)).transpose()?,
        q3: wants(Question::Q3).then(|| q3(&rows)).transpose()?,
        q4: wants(Question::Q4).then(|| q4(&rows)).transpose()?,
        q5: wants(Question::Q5).then(|| q5(&rows)).transpose()?,
        q6: wants(Question::Q6).then(|| q6(&rows)).transpose()?,
    })
}

fn week_label(w: Week) -> String {
    format!("Week {w}")
}

/// Unsupervised rows grouped by participant with all three weeks present.
fn unsupervised_panels(question: Question, rows: &[AnalysisRow]) -> Result<Vec<[&AnalysisRow; 3]>, AnalysisError> {
    let mut out: Vec<[&AnalysisRow; 3]> = Vec::new();
    let mut i = 0;
    let unsup: Vec<&AnalysisRow> = rows.iter().filter(|r| r.condition == Condition::Unsupervised).collect();
    while i < unsup.len() {
        let id = &unsup[i].participant_id;
        let same: Vec<&AnalysisRow> = unsup[i..].iter().take_while(|r| &r.participant_id == id).copied().collect();
        i += same.len();
        let weeks: Vec<Week> = same.iter().map(|r| r.week).collect();
        if weeks != Week::ALL {
            return Err(plan_err(question, format!("participant {id} lacks weeks 1-3 (has {weeks:?})")));
        }
        out.push([same[0], same[1], same[2]]);
    }
    if out.len() < 3 {
        return Err(plan_err(question, format!("needs at least 3 unsupervised participants, found {}", out.len())));
    }
    Ok(out)
}

fn art_report(question: Question, label: &str, data: ArtData) -> Result<ArtReport, AnalysisError> {
    let table = art_anova(&data).map_err(stats_err(question, label))?;
    let mut posthoc = Vec::new();
    for f in &data.factors {
        let contrasts = art_posthoc(&data, &f.name).map_err(stats_err(question, label))?;
        posthoc.push(PosthocFamily {
            factor: f.name.clone(),
            contrasts,
        });
    }
    Ok(ArtReport {
        label: label.to_string(),
        table,
        posthoc,
    })
}

fn one_way_week_art(
    question: Question,
    label: &str,
    panels: &[[&AnalysisRow; 3]],
    value: impl Fn(&AnalysisRow) -> Option<f64>,
) -> Result<ArtReport, AnalysisError> {
    let mut response = Vec::new();
    let mut subjects = Vec::new();
    let mut weeks = Vec::new();
    for panel in panels {
        for r in panel {
            response.push(value(r).ok_or_else(|| plan_err(question, format!("{label}: missing value for {}", r.participant_id)))?);
            subjects.push(r.participant_id.clone());
            weeks.push(week_label(r.week));
        }
    }
    art_report(
        question,
        label,
        ArtData {
            response,
            subjects: Some(subjects),
            factors: vec![Factor::within("Week", weeks)],
        },
    )
}

fn q1(rows: &[AnalysisRow]) -> Result<Q1Report, AnalysisError> {
    let q = Question::Q1;
    let panels = unsupervised_panels(q, rows)?;
    let z: Vec<[f64; 3]> = panels
        .iter()
        .map(|p| p.map(|r| r.space_error_z_week.unwrap_or(f64::NAN)))
        .collect();
    let mut spearman = Vec::new();
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        let x: Vec<f64> = z.iter().map(|r| r[a]).collect();
        let y: Vec<f64> = z.iter().map(|r| r[b]).collect();
        let label = format!("{} vs {}", week_label(Week::ALL[a]), week_label(Week::ALL[b]));
        let result = spearman_rho(&x, &y).map_err(stats_err(q, &label))?;
        spearman.push(ReportEntry {
            label,
            result,
            p_holm: None,
        });
    }
    let matrix: Vec<Vec<f64>> = z.iter().map(|r| r.to_vec()).collect();
    let icc = icc_two_way(&matrix).map_err(stats_err(q, "ICC"))?;
    let week_art = one_way_week_art(q, "SPACE error by week", &panels, |r| r.space_error_z_pooled)?;
    Ok(Q1Report {
        spearman,
        icc,
        week_art,
    })
}

fn baseline_design(rows: &[&AnalysisRow]) -> Design {
    let gender: Vec<&str> = rows.iter().map(|r| r.gender.label()).collect();
    let education: Vec<&str> = rows.iter().map(|r| r.education.label()).collect();
    Design::intercept(rows.len())
        .with("Age", rows.iter().map(|r| f64::from(r.age)).collect())
        .with_treatment("Gender", &gender, super::Gender::Female.label())
        .with_treatment("Education", &education, super::Education::HighSchool.label())
}

fn regression_panel(
    q: Question,
    label: &str,
    panels: &[[&AnalysisRow; 3]],
    y: &[f64],
    predictors: &[(&str, fn(&AnalysisRow) -> f64)],
) -> Result<RegressionPanel, AnalysisError> {
    let base_rows: Vec<&AnalysisRow> = panels.iter().map(|p| p[0]).collect();
    let baseline_design = baseline_design(&base_rows);
    let baseline = ols_fit(&baseline_design, y).map_err(stats_err(q, "baseline model"))?;
    let mut models = Vec::new();
    let mut comparisons = Vec::new();
    for w in Week::ALL {
        let model_label = format!("Model {w}");
        let mut design = baseline_design.clone();
        for (name, f) in predictors {
            let column = panels.iter().map(|p| f(p[w.index()])).collect();
            design = design.with(name.replace("{w}", &w.to_string()), column);
        }
        let fit = ols_fit(&design, y).map_err(stats_err(q, &model_label))?;
        let cmp = nested_model_compare(&baseline, &fit).map_err(stats_err(q, &model_label))?;
        comparisons.push(ReportEntry {
            label: format!("Baseline vs {model_label}"),
            result: cmp,
            p_holm: None,
        });
        models.push(RegressionModel {
            label: model_label,
            fit,
        });
    }
    holm_entries(q, label, &mut comparisons)?;
    Ok(RegressionPanel {
        label: label.to_string(),
        baseline,
        models,
        comparisons,
    })
}

fn holm_entries(q: Question, label: &str, entries: &mut [ReportEntry]) -> Result<(), AnalysisError> {
    let p: Vec<f64> = entries.iter().map(|e| e.result.p_value).collect();
    let adj = holm_adjust(&p).map_err(stats_err(q, label))?;
    for (e, a) in entries.iter_mut().zip(adj) {
        e.p_holm = Some(a);
    }
    Ok(())
}

fn q2(rows: &[AnalysisRow]) -> Result<Q2Report, AnalysisError> {
    let q = Question::Q2;
    let panels = unsupervised_panels(q, rows)?;
    let y = panels
        .iter()
        .map(|p| {
            p[0].moca_total
                .map(f64::from)
                .ok_or_else(|| plan_err(q, format!("participant {} has no MoCA total", p[0].participant_id)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let panel_a = regression_panel(
        q,
        "A: SPACE error",
        &panels,
        &y,
        &[("SPACE error Week {w}", |r| r.space_error_z_week.unwrap_or(f64::NAN))],
    )?;
    let panel_b = regression_panel(
        q,
        "B: task-specific predictors",
        &panels,
        &y,
        &[
            ("Movement Time", |r| r.movement_time_s),
            ("Rotation Time", |r| r.rotation_time_s),
            ("Perspective Taking Error", |r| r.perspective_error_deg),
        ],
    )?;
    Ok(Q2Report { panel_a, panel_b })
}

type Getter = fn(&AnalysisRow) -> Option<f64>;

const USABILITY: [(&str, f64, Getter); 5] = [
    ("SUS", SUS_BENCHMARK, |r| r.sus),
    ("NASA-TLX", TLX_BENCHMARK, |r| r.nasa_tlx),
    ("UEQ Attractiveness", UEQ_BENCHMARK, |r| r.ueq_attractiveness),
    ("UEQ Pragmatic", UEQ_BENCHMARK, |r| r.ueq_pragmatic),
    ("UEQ Hedonic", UEQ_BENCHMARK, |r| r.ueq_hedonic),
];

fn q3(rows: &[AnalysisRow]) -> Result<Q3Report, AnalysisError> {
    let q = Question::Q3;
    let panels = unsupervised_panels(q, rows)?;
    let mut benchmarks = Vec::new();
    let mut week_arts = Vec::new();
    for (measure, benchmark, get) in USABILITY {
        let mut tests = Vec::new();
        for w in Week::ALL {
            let x = panels
                .iter()
                .map(|p| get(p[w.index()]).ok_or_else(|| plan_err(q, format!("{measure} missing for {} in week {w}", p[0].participant_id))))
                .collect::<Result<Vec<_>, _>>()?;
            let label = format!("{measure} {} vs {benchmark}", week_label(w));
            let result = wilcoxon_signed_rank(&x, benchmark).map_err(stats_err(q, &label))?;
            tests.push(ReportEntry {
                label,
                result,
                p_holm: None,
            });
        }
        holm_entries(q, measure, &mut tests)?;
        benchmarks.push(BenchmarkFamily {
            measure: measure.into(),
            benchmark,
            tests,
        });
        week_arts.push(one_way_week_art(q, &format!("{measure} by week"), &panels, get)?);
    }
    Ok(Q3Report {
        benchmarks,
        week_arts,
    })
}

fn q4(rows: &[AnalysisRow]) -> Result<Q4Report, AnalysisError> {
    let q = Question::Q4;
    let panels = unsupervised_panels(q, rows)?;
    let flat: Vec<&AnalysisRow> = panels.iter().flatten().copied().collect();
    let data = ArtData {
        response: flat.iter().map(|r| r.space_error_z_pooled.unwrap_or(f64::NAN)).collect(),
        subjects: Some(flat.iter().map(|r| r.participant_id.clone()).collect()),
        factors: vec![
            Factor::between("Gender", flat.iter().map(|r| r.gender.label().to_string()).collect()),
            Factor::between("Age Group", flat.iter().map(|r| r.age_group.label().to_string()).collect()),
            Factor::within("Week", flat.iter().map(|r| week_label(r.week)).collect()),
        ],
    };
    Ok(Q4Report {
        art: art_report(q, "SPACE error: Gender x Age Group x Week", data)?,
    })
}

fn supervision_design(rows: &[&AnalysisRow], response: Vec<f64>) -> ArtData {
    ArtData {
        response,
        subjects: None,
        factors: vec![
            Factor::between("Gender", rows.iter().map(|r| r.gender.label().to_string()).collect()),
            Factor::between("Supervision", rows.iter().map(|r| r.condition.label().to_string()).collect()),
            Factor::between("Age Group", rows.iter().map(|r| r.age_group.label().to_string()).collect()),
        ],
    }
}

fn require_both_conditions(q: Question, rows: &[&AnalysisRow]) -> Result<(), AnalysisError> {
    for c in [Condition::Unsupervised, Condition::Supervised] {
        if !rows.iter().any(|r| r.condition == c) {
            return Err(plan_err(q, format!("the Supervision factor needs {} participants", c.label().to_lowercase())));
        }
    }
    Ok(())
}

fn q5(rows: &[AnalysisRow]) -> Result<Q5Report, AnalysisError> {
    let q = Question::Q5;
    let week_one: Vec<&AnalysisRow> = rows.iter().filter(|r| r.week == Week::One).collect();
    require_both_conditions(q, &week_one)?;
    let response = week_one
        .iter()
        .map(|r| r.space_error_z_combined.unwrap_or(f64::NAN))
        .collect();
    let data = supervision_design(&week_one, response);
    let label = "SPACE error: Gender x Supervision x Age Group";
    let art = art_report(q, label, data.clone())?;
    let contrasts =
        art_simple_contrasts(&data, "Supervision", "Age Group").map_err(stats_err(q, "simple contrasts"))?;
    Ok(Q5Report {
        art,
        simple_contrasts: PosthocFamily {
            factor: "Supervision".into(),
            contrasts,
        },
    })
}

fn q6(rows: &[AnalysisRow]) -> Result<Q6Report, AnalysisError> {
    let q = Question::Q6;
    let week_one: Vec<&AnalysisRow> = rows
        .iter()
        .filter(|r| r.week == Week::One && r.sus.is_some())
        .collect();
    require_both_conditions(q, &week_one)?;
    let mut arts = Vec::new();
    for (measure, _, get) in USABILITY {
        let response = week_one.iter().map(|r| get(r).unwrap_or(f64::NAN)).collect();
        let data = supervision_design(&week_one, response);
        arts.push(art_report(q, &format!("{measure}: Gender x Supervision x Age Group"), data)?);
    }
    Ok(Q6Report { arts })
}
