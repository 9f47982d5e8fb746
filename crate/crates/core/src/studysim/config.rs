//! Cohort configuration. Defaults reproduce the reference calibration
//! targets (demographics, per-group weekly descriptives, regression scale).

use serde::{Deserialize, Serialize};

use super::{AgeGroup, Gender, SimError};
use crate::questionnaires::{SUS_BENCHMARK, TLX_BENCHMARK, UEQ_BENCHMARK};

/// `[mean, sd]` of a per-participant outcome.
pub type MeanSd = [f64; 2];

/// One `[mean, sd]` per week.
pub type Weekly = [MeanSd; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortConfig {
    pub seed: u64,
    /// Participants per age group × gender cell.
    pub n_per_cell: usize,
    /// Added to every female cell (15 men and 16 women per age group by
    /// default).
    pub female_extra: usize,
    /// Between-person share of the per-week SPACE error composite. When set,
    /// `stability` is calibrated to reach it; otherwise `stability` is used
    /// as given. A config file without the key has no target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reliability_target: Option<f64>,
    /// Share of each outcome's latent variance that is stable within a
    /// person across weeks.
    pub stability: f64,
    /// Multiplies every random deviation; 0 makes same-cell participants
    /// identical.
    pub noise_scale: f64,
    /// Latent shift (SD units) between women and men, split symmetrically so
    /// group means stay on target. Positive means more error for women.
    pub gender_shift: f64,
    pub sampling_hz: f64,
    pub targets: GameplayTargets,
    pub week_effects: WeekEffects,
    pub demographics: Demographics,
    pub moca: MocaModel,
    pub questionnaires: QuestionnaireModel,
    /// Supervised proxy cohorts; analyses needing them are skipped when
    /// absent. A config file without the table has none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supervised: Option<SupervisedModel>,
}

/// Per-week gameplay descriptives for one age group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupTargets {
    pub rotation_time_s: Weekly,
    pub movement_time_s: Weekly,
    pub perspective_error_deg: Weekly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameplayTargets {
    pub young: GroupTargets,
    pub middle: GroupTargets,
    pub old: GroupTargets,
}

impl GameplayTargets {
    pub fn group(&self, g: AgeGroup) -> &GroupTargets {
        match g {
            AgeGroup::Young => &self.young,
            AgeGroup::Middle => &self.middle,
            AgeGroup::Old => &self.old,
        }
    }
}

/// Extra multipliers on the week-2 and week-3 target means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeekEffects {
    pub learning: f64,
    pub difficulty: f64,
}

impl Default for WeekEffects {
    fn default() -> Self {
        WeekEffects {
            learning: 1.0,
            difficulty: 1.0,
        }
    }
}

/// Age distribution of one age group × gender cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgeCell {
    pub mean: f64,
    pub sd: f64,
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Demographics {
    /// `[female, male]` per age group.
    pub young: [AgeCell; 2],
    pub middle: [AgeCell; 2],
    pub old: [AgeCell; 2],
    pub university_share: f64,
}

impl Demographics {
    pub fn cell(&self, g: AgeGroup, gender: Gender) -> &AgeCell {
        let pair = match g {
            AgeGroup::Young => &self.young,
            AgeGroup::Middle => &self.middle,
            AgeGroup::Old => &self.old,
        };
        &pair[gender as usize]
    }
}

/// MoCA = intercept + age_slope·age + male_shift·male + university_shift·
/// university + latent slope·ability + noise, rounded and clamped to 0–30.
/// The latent slope is calibrated so the week-3 regression coefficient of
/// the per-week SPACE error equals `planted_week3_slope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MocaModel {
    pub intercept: f64,
    pub age_slope: f64,
    pub male_shift: f64,
    pub university_shift: f64,
    pub planted_week3_slope: f64,
    pub noise_sd: f64,
}

/// Per-week `[mean, sd]` of each questionnaire score for one age group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionnaireTargets {
    pub sus: Weekly,
    pub nasa_tlx: Weekly,
    pub ueq_attractiveness: Weekly,
    pub ueq_pragmatic: Weekly,
    pub ueq_hedonic: Weekly,
}

/// Additive shifts on the score scale.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuestionnaireShift {
    pub sus: f64,
    pub nasa_tlx: f64,
    pub ueq_attractiveness: f64,
    pub ueq_pragmatic: f64,
    pub ueq_hedonic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionnaireModel {
    /// Share of score variance stable within a person.
    pub stability: f64,
    pub young: QuestionnaireTargets,
    pub middle: QuestionnaireTargets,
    pub old: QuestionnaireTargets,
    /// Applied symmetrically: women get +shift/2, men −shift/2.
    pub female_shift: QuestionnaireShift,
    pub supervised_shift: QuestionnaireShift,
}

impl QuestionnaireModel {
    pub fn group(&self, g: AgeGroup) -> &QuestionnaireTargets {
        match g {
            AgeGroup::Young => &self.young,
            AgeGroup::Middle => &self.middle,
            AgeGroup::Old => &self.old,
        }
    }
}

/// A previously collected supervised study, described by its demographics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupervisedStudy {
    pub name: String,
    pub female: usize,
    pub male: usize,
    pub min_age: u32,
    pub max_age: u32,
    pub mean_age: f64,
    pub sd_age: f64,
    /// Whether usability questionnaires were collected.
    pub questionnaires: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupervisedModel {
    /// Latent shift of supervised participants per age group (young,
    /// middle, old); negative means less error than unsupervised play.
    pub shift: [f64; 3],
    pub studies: Vec<SupervisedStudy>,
}

fn group(rot: Weekly, mov: Weekly, persp: Weekly) -> GroupTargets {
    GroupTargets {
        rotation_time_s: rot,
        movement_time_s: mov,
        perspective_error_deg: persp,
    }
}

fn age(mean: f64, sd: f64, min: u32, max: u32) -> AgeCell {
    AgeCell { mean, sd, min, max }
}

impl Default for GameplayTargets {
    fn default() -> Self {
        GameplayTargets {
            young: group(
                [[28.32, 4.75], [24.01, 2.19], [94.70, 33.22]],
                [[39.25, 5.74], [36.52, 3.93], [81.67, 16.52]],
                [[28.11, 25.27], [22.66, 20.58], [19.39, 17.58]],
            ),
            middle: group(
                [[32.58, 9.77], [30.51, 9.53], [106.97, 30.31]],
                [[50.76, 13.90], [44.82, 8.91], [101.68, 22.14]],
                [[36.62, 25.26], [34.03, 28.50], [32.11, 27.44]],
            ),
            old: group(
                [[59.39, 62.97], [36.15, 11.42], [111.31, 27.15]],
                [[52.96, 9.85], [50.40, 8.99], [114.17, 29.41]],
                [[60.27, 29.78], [43.93, 27.12], [39.08, 25.20]],
            ),
        }
    }
}

impl Default for Demographics {
    fn default() -> Self {
        Demographics {
            young: [age(27.19, 5.38, 21, 37), age(29.73, 6.92, 22, 40)],
            middle: [age(51.25, 5.61, 42, 60), age(50.40, 5.91, 42, 59)],
            old: [age(67.00, 5.13, 61, 79), age(66.86, 5.39, 61, 79)],
            university_share: 0.69,
        }
    }
}

impl Default for MocaModel {
    fn default() -> Self {
        MocaModel {
            intercept: 27.38,
            age_slope: -0.02,
            male_shift: -0.64,
            university_shift: 0.66,
            planted_week3_slope: -1.24,
            noise_sd: 2.0,
        }
    }
}

impl Default for QuestionnaireModel {
    fn default() -> Self {
        QuestionnaireModel {
            stability: 0.5,
            young: QuestionnaireTargets {
                sus: [[75.58, 13.34], [79.27, 11.44], [77.66, 11.83]],
                nasa_tlx: [[20.67, 15.09], [15.59, 13.10], [20.54, 16.20]],
                ueq_attractiveness: [[-0.09, 0.66], [-0.05, 0.52], [-0.08, 0.37]],
                ueq_pragmatic: [[-0.11, 0.63], [-0.04, 0.53], [-0.07, 0.38]],
                ueq_hedonic: [[-0.05, 0.62], [-0.07, 0.49], [-0.09, 0.42]],
            },
            middle: QuestionnaireTargets {
                sus: [[69.91, 15.97], [75.52, 16.53], [75.43, 14.32]],
                nasa_tlx: [[23.28, 18.30], [20.22, 17.80], [19.94, 17.66]],
                ueq_attractiveness: [[-0.16, 0.49], [-0.02, 0.47], [-0.13, 0.44]],
                ueq_pragmatic: [[-0.18, 0.50], [-0.05, 0.47], [-0.12, 0.45]],
                ueq_hedonic: [[-0.11, 0.46], [-0.07, 0.45], [-0.15, 0.42]],
            },
            old: QuestionnaireTargets {
                sus: [[62.12, 17.20], [66.59, 14.13], [68.52, 15.64]],
                nasa_tlx: [[34.45, 14.19], [28.59, 16.03], [29.70, 15.71]],
                ueq_attractiveness: [[0.13, 0.55], [0.13, 0.50], [0.01, 0.46]],
                ueq_pragmatic: [[0.13, 0.55], [0.14, 0.51], [0.01, 0.45]],
                ueq_hedonic: [[0.12, 0.54], [0.10, 0.47], [0.03, 0.47]],
            },
            female_shift: QuestionnaireShift {
                sus: -6.0,
                nasa_tlx: 6.0,
                ..Default::default()
            },
            supervised_shift: QuestionnaireShift {
                sus: -12.0,
                nasa_tlx: 25.0,
                ueq_pragmatic: -0.3,
                ..Default::default()
            },
        }
    }
}

impl Default for SupervisedModel {
    fn default() -> Self {
        let study = |name: &str, female, male, min_age, max_age, mean_age, sd_age, q| SupervisedStudy {
            name: name.into(),
            female,
            male,
            min_age,
            max_age,
            mean_age,
            sd_age,
            questionnaires: q,
        };
        SupervisedModel {
            shift: [0.0, 0.0, -0.35],
            studies: vec![
                study("uSPACE", 65, 57, 21, 76, 45.84, 15.76, true),
                study("bioSPACE", 174, 124, 53, 89, 74.23, 6.46, false),
                study("targetSPACE", 308, 258, 60, 92, 71.49, 7.12, false),
                study("trainSPACE", 0, 40, 55, 79, 66.65, 5.98, false),
            ],
        }
    }
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            seed: 7,
            n_per_cell: 15,
            female_extra: 1,
            reliability_target: Some(0.67),
            stability: 0.5,
            noise_scale: 1.0,
            gender_shift: 0.15,
            sampling_hz: crate::synth::DEFAULT_SAMPLING_HZ,
            targets: GameplayTargets::default(),
            week_effects: WeekEffects::default(),
            demographics: Demographics::default(),
            moca: MocaModel::default(),
            questionnaires: QuestionnaireModel::default(),
            supervised: Some(SupervisedModel::default()),
        }
    }
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::Config(msg.into())
}

fn check_weekly(name: &str, w: &Weekly, positive_mean: bool) -> Result<(), SimError> {
    for (i, [mean, sd]) in w.iter().enumerate() {
        if !mean.is_finite() || (positive_mean && *mean <= 0.0) {
            return Err(invalid(format!("{name} week {} mean must be {}", i + 1, if positive_mean { "positive" } else { "finite" })));
        }
        if !(sd.is_finite() && *sd > 0.0) {
            return Err(invalid(format!("{name} week {} sd must be positive", i + 1)));
        }
    }
    Ok(())
}

impl CohortConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let config: CohortConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Participants per age group × gender cell, female first.
    pub fn cell_size(&self, gender: Gender) -> usize {
        match gender {
            Gender::Female => self.n_per_cell + self.female_extra,
            Gender::Male => self.n_per_cell,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_per_cell < 2 {
            return Err(invalid("n_per_cell must be at least 2"));
        }
        if let Some(t) = self.reliability_target {
            if !(t > 0.0 && t < 1.0) {
                return Err(invalid("reliability_target must lie in (0, 1)"));
            }
        }
        if !(0.0..=1.0).contains(&self.stability) {
            return Err(invalid("stability must lie in [0, 1]"));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(invalid("noise_scale must be non-negative"));
        }
        if !self.gender_shift.is_finite() {
            return Err(invalid("gender_shift must be finite"));
        }
        if !(self.sampling_hz.is_finite() && self.sampling_hz > 0.0) {
            return Err(invalid("sampling_hz must be positive"));
        }
        for (label, g) in [("young", &self.targets.young), ("middle", &self.targets.middle), ("old", &self.targets.old)] {
            check_weekly(&format!("targets.{label}.rotation_time_s"), &g.rotation_time_s, true)?;
            check_weekly(&format!("targets.{label}.movement_time_s"), &g.movement_time_s, true)?;
            check_weekly(&format!("targets.{label}.perspective_error_deg"), &g.perspective_error_deg, true)?;
            if g.perspective_error_deg.iter().any(|[m, _]| *m >= 180.0) {
                return Err(invalid(format!("targets.{label}.perspective_error_deg means must be below 180")));
            }
        }
        let w = &self.week_effects;
        if !(w.learning > 0.0 && w.difficulty > 0.0 && w.learning.is_finite() && w.difficulty.is_finite()) {
            return Err(invalid("week_effects multipliers must be positive"));
        }
        for g in AgeGroup::ALL {
            for gender in Gender::ALL {
                let c = self.demographics.cell(g, gender);
                let (lo, hi) = g.bounds();
                if c.min > c.max || c.min < lo || c.max > hi || !(c.sd > 0.0) {
                    return Err(invalid(format!(
                        "demographics {} {}: ages must satisfy {lo} <= min <= max <= {hi} with sd > 0",
                        g.label(),
                        gender.label()
                    )));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.demographics.university_share) {
            return Err(invalid("university_share must lie in [0, 1]"));
        }
        let m = &self.moca;
        if [m.intercept, m.age_slope, m.male_shift, m.university_shift, m.planted_week3_slope].iter().any(|v| !v.is_finite()) {
            return Err(invalid("moca coefficients must be finite"));
        }
        if !(m.noise_sd > 0.0 && m.noise_sd.is_finite()) {
            return Err(invalid("moca.noise_sd must be positive"));
        }
        let q = &self.questionnaires;
        if !(0.0..=1.0).contains(&q.stability) {
            return Err(invalid("questionnaires.stability must lie in [0, 1]"));
        }
        for (label, t) in [("young", &q.young), ("middle", &q.middle), ("old", &q.old)] {
            check_weekly(&format!("questionnaires.{label}.sus"), &t.sus, false)?;
            check_weekly(&format!("questionnaires.{label}.nasa_tlx"), &t.nasa_tlx, false)?;
            check_weekly(&format!("questionnaires.{label}.ueq_attractiveness"), &t.ueq_attractiveness, false)?;
            check_weekly(&format!("questionnaires.{label}.ueq_pragmatic"), &t.ueq_pragmatic, false)?;
            check_weekly(&format!("questionnaires.{label}.ueq_hedonic"), &t.ueq_hedonic, false)?;
        }
        if let Some(s) = &self.supervised {
            if s.shift.iter().any(|v| !v.is_finite()) {
                return Err(invalid("supervised.shift must be finite"));
            }
            for study in &s.studies {
                if study.female + study.male == 0 {
                    return Err(invalid(format!("supervised study {} has no participants", study.name)));
                }
                if study.min_age > study.max_age || !(study.sd_age > 0.0) {
                    return Err(invalid(format!("supervised study {} has an invalid age range", study.name)));
                }
                if study.max_age < AgeGroup::Young.bounds().0 || study.min_age > AgeGroup::Old.bounds().1 {
                    return Err(invalid(format!("supervised study {} lies outside the analysed ages", study.name)));
                }
            }
        }
        Ok(())
    }

    /// Every planted effect switched off: identical targets across age
    /// groups and weeks, no stable between-person variance, no gender or
    /// supervision shifts, a MoCA that does not depend on ability, and
    /// questionnaire means sitting on their benchmarks.
    pub fn null() -> Self {
        let mut c = CohortConfig::default();
        let flat = c.targets.middle.clone();
        let flatten = |w: &Weekly| [w[0]; 3];
        let flat = GroupTargets {
            rotation_time_s: flatten(&flat.rotation_time_s),
            movement_time_s: flatten(&flat.movement_time_s),
            perspective_error_deg: flatten(&flat.perspective_error_deg),
        };
        c.targets = GameplayTargets {
            young: flat.clone(),
            middle: flat.clone(),
            old: flat,
        };
        c.reliability_target = None;
        c.stability = 0.0;
        c.gender_shift = 0.0;
        c.moca.age_slope = 0.0;
        c.moca.male_shift = 0.0;
        c.moca.university_shift = 0.0;
        c.moca.planted_week3_slope = 0.0;
        let q = c.questionnaires.middle.clone();
        let at = |w: &Weekly, mean: f64| [[mean, w[0][1]]; 3];
        let flat_q = QuestionnaireTargets {
            sus: at(&q.sus, SUS_BENCHMARK),
            nasa_tlx: at(&q.nasa_tlx, TLX_BENCHMARK),
            ueq_attractiveness: at(&q.ueq_attractiveness, UEQ_BENCHMARK),
            ueq_pragmatic: at(&q.ueq_pragmatic, UEQ_BENCHMARK),
            ueq_hedonic: at(&q.ueq_hedonic, UEQ_BENCHMARK),
        };
        c.questionnaires.young = flat_q.clone();
        c.questionnaires.middle = flat_q.clone();
        c.questionnaires.old = flat_q;
        c.questionnaires.female_shift = QuestionnaireShift::default();
        c.questionnaires.supervised_shift = QuestionnaireShift::default();
        if let Some(s) = &mut c.supervised {
            s.shift = [0.0; 3];
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_keeps_absent_options_absent() {
        for config in [CohortConfig::default(), CohortConfig::null()] {
            assert_eq!(CohortConfig::from_toml(&config.to_toml()).unwrap(), config);
            let mut bare = config.clone();
            bare.supervised = None;
            bare.reliability_target = None;
            assert_eq!(CohortConfig::from_toml(&bare.to_toml()).unwrap(), bare);
        }
    }
}
