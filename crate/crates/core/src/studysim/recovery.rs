//! Repeated simulate→analyze runs for effect recovery and error rates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analysis::{analysis_table, analyze_questions, StudyReport};
use super::generate::{calibrate, simulate_with, Calibration};
use super::{AgeGroup, CohortConfig, Condition, Question, SimError};
use crate::rng::derive_seed;
use crate::taskgen::Week;

const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRecovery {
    pub name: String,
    /// Value the generator was calibrated to, for quantitative effects.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<f64>,
    /// Repetitions that produced an estimate.
    pub n_ok: usize,
    pub detection_rate: f64,
    pub mean_estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    pub estimates: Vec<f64>,
}

/// Share of repetitions in which a Holm family rejected anything, or an
/// ordering held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRate {
    pub name: String,
    pub n: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepFailure {
    pub rep: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub seed: u64,
    pub n_reps: usize,
    pub calibration: Calibration,
    pub effects: Vec<EffectRecovery>,
    /// Family-wise rejection rates of every Holm family.
    pub families: Vec<FamilyRate>,
    /// How often the planted group orderings appear in the sample means.
    pub orderings: Vec<FamilyRate>,
    pub failures: Vec<RepFailure>,
}

impl RecoveryReport {
    pub fn effect(&self, name: &str) -> Option<&EffectRecovery> {
        self.effects.iter().find(|e| e.name == name)
    }

    pub fn family(&self, name: &str) -> Option<&FamilyRate> {
        self.families.iter().find(|e| e.name == name)
    }

    pub fn ordering(&self, name: &str) -> Option<&FamilyRate> {
        self.orderings.iter().find(|e| e.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("recovery report serializes")
    }
}

pub const ICC_EFFECT: &str = "ICC(2,1)";
pub const WEEK3_SLOPE_EFFECT: &str = "SPACE error Week 3 on MoCA";
pub const AGE_ORDERING: &str = "age gradient: 20-40 < 41-60 < 61-90";
pub const WEEK_ORDERING: &str = "week pattern: Week 2 < Week 1 < Week 3";
pub const ART_ORDERING: &str = "Q4 ART flags Age Group and Week";

/// What one repetition measured.
struct Outcome {
    effects: Vec<(String, f64, bool)>,
    families: Vec<(String, bool)>,
    orderings: Vec<(String, bool)>,
}

fn art_effect(report: &StudyReport, q: Question, name: &str, out: &mut Vec<(String, f64, bool)>) {
    let art = match q {
        Question::Q4 => report.q4.as_ref().map(|r| &r.art),
        Question::Q5 => report.q5.as_ref().map(|r| &r.art),
        _ => None,
    };
    if let Some(r) = art.and_then(|a| a.effect(name)) {
        out.push((format!("{q} {name}"), r.effect().unwrap_or(r.statistic), r.p_value < ALPHA));
    }
}

fn measure(report: &StudyReport, means: &Means) -> Outcome {
    let mut effects = Vec::new();
    if let Some(q1) = &report.q1 {
        effects.push((ICC_EFFECT.to_string(), q1.icc.icc_single, q1.icc.f_test.p_value < ALPHA));
    }
    if let Some(q2) = &report.q2 {
        let p = &q2.panel_a;
        if let (Some(m), Some(c)) = (p.models.get(2), p.comparisons.get(2)) {
            if let Some((b, _, _)) = m.fit.coefficient("SPACE error Week 3") {
                effects.push((WEEK3_SLOPE_EFFECT.to_string(), b, c.p_holm.unwrap_or(1.0) < ALPHA));
            }
        }
    }
    for name in ["Age Group", "Week", "Gender"] {
        art_effect(report, Question::Q4, name, &mut effects);
    }
    for name in ["Supervision", "Age Group", "Supervision:Age Group"] {
        art_effect(report, Question::Q5, name, &mut effects);
    }
    let families = report
        .families()
        .into_iter()
        .map(|f| (format!("{} {}", f.question, f.name), f.rejects(ALPHA)))
        .collect();
    let mut orderings = Vec::new();
    let [y, m, o] = means.age;
    orderings.push((AGE_ORDERING.to_string(), y < m && m < o));
    let [w1, w2, w3] = means.week;
    orderings.push((WEEK_ORDERING.to_string(), w2 < w1 && w1 < w3));
    if let Some(q4) = &report.q4 {
        let sig = |n: &str| q4.art.effect(n).is_some_and(|r| r.p_value < ALPHA);
        orderings.push((ART_ORDERING.to_string(), sig("Age Group") && sig("Week")));
    }
    Outcome {
        effects,
        families,
        orderings,
    }
}

/// Sample means of the pooled SPACE error by age group and by week.
struct Means {
    age: [f64; 3],
    week: [f64; 3],
}

fn means(dataset: &super::StudyDataset) -> Result<Means, String> {
    let rows = analysis_table(dataset).map_err(|e| e.to_string())?;
    let mut age = [(0.0, 0usize); 3];
    let mut week = [(0.0, 0usize); 3];
    for r in rows.iter().filter(|r| r.condition == Condition::Unsupervised) {
        let z = r.space_error_z_pooled.unwrap_or(f64::NAN);
        let a = &mut age[r.age_group.index()];
        a.0 += z;
        a.1 += 1;
        let w = &mut week[r.week.index()];
        w.0 += z;
        w.1 += 1;
    }
    let avg = |v: [(f64, usize); 3]| v.map(|(s, n)| s / n as f64);
    debug_assert_eq!(AgeGroup::ALL.len(), Week::ALL.len());
    Ok(Means {
        age: avg(age),
        week: avg(week),
    })
}

fn run_rep(config: &CohortConfig, calibration: &Calibration, rep: usize, questions: &[Question]) -> Result<Outcome, String> {
    let cfg = CohortConfig {
        seed: derive_seed(config.seed, rep as u64),
        ..config.clone()
    };
    let ds = simulate_with(&cfg, calibration).map_err(|e| e.to_string())?;
    let report = analyze_questions(&ds, questions).map_err(|e| e.to_string())?;
    Ok(measure(&report, &means(&ds)?))
}

fn rate(name: String, hits: &[bool]) -> FamilyRate {
    FamilyRate {
        name,
        n: hits.len(),
        rate: hits.iter().filter(|&&h| h).count() as f64 / hits.len().max(1) as f64,
    }
}

/// Collect `(name, value)` pairs across repetitions, keeping first-seen
/// name order.
fn group<T: Clone>(items: impl Iterator<Item = (String, T)>) -> Vec<(String, Vec<T>)> {
    let mut out: Vec<(String, Vec<T>)> = Vec::new();
    for (name, v) in items {
        match out.iter_mut().find(|(n, _)| *n == name) {
            Some((_, vs)) => vs.push(v),
            None => out.push((name, vec![v])),
        }
    }
    out
}

/// Simulate and analyze `n_reps` cohorts with seeds derived from
/// `(config.seed, rep)`. Q5 and Q6 are included when the config has a
/// supervised sample. Failed repetitions are listed rather than aborting.
pub fn recovery_experiment(config: &CohortConfig, n_reps: usize) -> Result<RecoveryReport, SimError> {
    if n_reps == 0 {
        return Err(SimError::Config("n_reps must be at least 1".into()));
    }
    let calibration = calibrate(config)?;
    let questions: Vec<Question> = if config.supervised.is_some() {
        Question::ALL.to_vec()
    } else {
        vec![Question::Q1, Question::Q2, Question::Q3, Question::Q4]
    };
    let outcomes: Vec<Result<Outcome, String>> = (0..n_reps)
        .into_par_iter()
        .map(|rep| run_rep(config, &calibration, rep, &questions))
        .collect();
    let mut failures = Vec::new();
    let mut ok = Vec::new();
    for (rep, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => ok.push(o),
            Err(error) => failures.push(RepFailure { rep, error }),
        }
    }
    let planted = |name: &str| match name {
        ICC_EFFECT => config.reliability_target,
        WEEK3_SLOPE_EFFECT => Some(config.moca.planted_week3_slope),
        _ => None,
    };
    let effects = group(ok.iter().flat_map(|o| o.effects.iter().map(|(n, e, d)| (n.clone(), (*e, *d)))))
        .into_iter()
        .map(|(name, v)| {
            let estimates: Vec<f64> = v.iter().map(|x| x.0).collect();
            let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
            let planted = planted(&name);
            EffectRecovery {
                planted,
                n_ok: v.len(),
                detection_rate: v.iter().filter(|x| x.1).count() as f64 / v.len() as f64,
                mean_estimate: mean,
                bias: planted.map(|p| mean - p),
                estimates,
                name,
            }
        })
        .collect();
    let families = group(ok.iter().flat_map(|o| o.families.iter().cloned()))
        .into_iter()
        .map(|(n, hits)| rate(n, &hits))
        .collect();
    let orderings = group(ok.iter().flat_map(|o| o.orderings.iter().cloned()))
        .into_iter()
        .map(|(n, hits)| rate(n, &hits))
        .collect();
    Ok(RecoveryReport {
        seed: config.seed,
        n_reps,
        calibration,
        effects,
        families,
        orderings,
        failures,
    })
}
