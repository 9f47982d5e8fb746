//! Latent-ability generator and its calibration.
//!
//! For outcome `m` of participant `i` in week `w` the latent score is
//!
//! ```text
//! z = shift_i + noise_scale · (√s · a_i + √(1 − s) · e_imw)
//! ```
//!
//! with `a_i` one stable ability shared by all outcomes and weeks, and the
//! observed value is log-normal with the target mean and SD of the
//! participant's age group and week. Higher `z` is worse performance.

use chrono::{Duration, TimeZone, Utc};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AgeCell, CohortConfig, MeanSd, QuestionnaireShift, Weekly};
use super::{
    AgeGroup, Condition, Education, Gender, Participant, SimError, StudyDataset,
};
use crate::metrics::{composite_space_error, metric_record, MetricRecord, Standardization};
use crate::questionnaires::{score_block, UeqKey, UeqScale, SUS_ITEMS, TLX_ITEMS};
use crate::rng::{derive_seed, derived_rng, SpaceRng};
use crate::sessionlog::{Questionnaires, Timestamp};
use crate::stats::{icc_two_way, ols_fit, Design};
use crate::synth::{synthesize_session, SessionBehaviour};
use crate::taskgen::{generate_plan, PlanConfig, TaskPlan, Week};

/// Calibration draws come from a fixed stream so every seed of a config
/// shares the same calibrated parameters.
const CALIBRATION_SEED: u64 = 0x5EED_CA11_B4A7_E000;
const CALIBRATION_PARTICIPANTS: usize = 20_000;
const BISECTION_STEPS: usize = 48;

const STREAM_COHORT: u64 = 1;
const STREAM_DEMOGRAPHICS: u64 = 0;
const STREAM_LATENT: u64 = 1;
const STREAM_PLAN: u64 = 10;
const STREAM_TRIALS: u64 = 20;
const STREAM_ITEMS: u64 = 30;

/// Mean perspective error is capped here so that trial errors can spread
/// around it without exceeding 180°.
const PERSPECTIVE_CAP_DEG: f64 = 170.0;
const TRIAL_ERROR_MAX_DEG: f64 = 179.0;
const TRIAL_ERROR_SPREAD: f64 = 0.6;
const RESPONSE_TIME_S: f64 = 5.0;
const RESPONSE_TIME_SPREAD: f64 = 0.35;
const TLX_ITEM_SD: f64 = 10.0;
const UEQ_ITEM_SD: f64 = 0.8;

const DEVICE_UNSUPERVISED: &str = "iPad (unsupervised, home)";
const DEVICE_SUPERVISED: &str = "iPad (supervised, lab)";
pub(crate) const UNSUPERVISED_STUDY: &str = "mini-SPACE";

/// Parameters fitted once per config on a large population sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Stability share `s` actually used.
    pub stability: f64,
    /// Coefficient of the stable ability in the MoCA model.
    pub moca_latent_slope: f64,
    /// ICC(2,1) of the per-week composite in the calibration population.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population_icc: Option<f64>,
    /// Week-3 regression coefficient in the calibration population.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population_week3_beta: Option<f64>,
}

fn normal(rng: &mut SpaceRng) -> f64 {
    rng.sample(StandardNormal)
}

/// `(mu, sigma)` of the log-normal with the given mean and SD.
pub(crate) fn lognormal_params([mean, sd]: MeanSd) -> (f64, f64) {
    let s2 = (1.0 + (sd / mean).powi(2)).ln();
    (mean.ln() - s2 / 2.0, s2.sqrt())
}

fn lognormal(target: MeanSd, z: f64) -> f64 {
    let (mu, sigma) = lognormal_params(target);
    (mu + sigma * z).exp()
}

fn week_target(w: &Weekly, week: Week, config: &CohortConfig) -> MeanSd {
    let k = match week {
        Week::One => 1.0,
        Week::Two => config.week_effects.learning,
        Week::Three => config.week_effects.difficulty,
    };
    let [m, s] = w[week.index()];
    [m * k, s * k]
}

fn gender_sign(g: Gender) -> f64 {
    match g {
        Gender::Female => 0.5,
        Gender::Male => -0.5,
    }
}

/// Standard-normal draws behind one participant's outcomes.
#[derive(Debug, Clone)]
struct Latent {
    ability: f64,
    /// `[week][rotation, movement, perspective]`.
    occasion: [[f64; 3]; 3],
    moca: f64,
    q_person: [f64; 5],
    q_occasion: [[f64; 5]; 3],
}

impl Latent {
    fn draw(rng: &mut SpaceRng) -> Self {
        let ability = normal(rng);
        let mut occasion = [[0.0; 3]; 3];
        for row in &mut occasion {
            for v in row.iter_mut() {
                *v = normal(rng);
            }
        }
        let moca = normal(rng);
        let mut q_person = [0.0; 5];
        for v in &mut q_person {
            *v = normal(rng);
        }
        let mut q_occasion = [[0.0; 5]; 3];
        for row in &mut q_occasion {
            for v in row.iter_mut() {
                *v = normal(rng);
            }
        }
        Latent {
            ability,
            occasion,
            moca,
            q_person,
            q_occasion,
        }
    }
}

/// Who a participant is, before any outcome is drawn.
#[derive(Debug, Clone)]
struct Profile {
    group: AgeGroup,
    gender: Gender,
    age: u32,
    education: Education,
    /// Latent shift from supervision.
    supervision: f64,
}

/// Rotation, movement and perspective outcomes for one week.
fn gameplay(config: &CohortConfig, stability: f64, p: &Profile, l: &Latent, week: Week) -> [f64; 3] {
    let t = config.targets.group(p.group);
    let shift = config.gender_shift * gender_sign(p.gender) + p.supervision;
    let e = &l.occasion[week.index()];
    let z = |k: usize| {
        shift + config.noise_scale * (stability.sqrt() * l.ability + (1.0 - stability).sqrt() * e[k])
    };
    [
        lognormal(week_target(&t.rotation_time_s, week, config), z(0)),
        lognormal(week_target(&t.movement_time_s, week, config), z(1)),
        lognormal(week_target(&t.perspective_error_deg, week, config), z(2)).min(PERSPECTIVE_CAP_DEG),
    ]
}

fn moca_total(config: &CohortConfig, latent_slope: f64, p: &Profile, l: &Latent) -> u8 {
    let m = &config.moca;
    let raw = m.intercept
        + m.age_slope * f64::from(p.age)
        + if p.gender == Gender::Male { m.male_shift } else { 0.0 }
        + if p.education == Education::University { m.university_shift } else { 0.0 }
        + config.noise_scale * (latent_slope * l.ability + m.noise_sd * l.moca);
    raw.round().clamp(0.0, 30.0) as u8
}

fn draw_age(cell: &AgeCell, noise_scale: f64, rng: &mut SpaceRng) -> u32 {
    let (lo, hi) = (f64::from(cell.min), f64::from(cell.max));
    if noise_scale == 0.0 {
        return cell.mean.round().clamp(lo, hi) as u32;
    }
    for _ in 0..1000 {
        let a = (cell.mean + cell.sd * noise_scale * normal(rng)).round();
        if (lo..=hi).contains(&a) {
            return a as u32;
        }
    }
    cell.mean.round().clamp(lo, hi) as u32
}

fn draw_education(share: f64, noise_scale: f64, rng: &mut SpaceRng) -> Education {
    let university = if noise_scale == 0.0 {
        share >= 0.5
    } else {
        rng.random::<f64>() < share
    };
    if university {
        Education::University
    } else {
        Education::HighSchool
    }
}

/// Age group × gender of every unsupervised participant, female cells first.
fn composition(config: &CohortConfig) -> Vec<(AgeGroup, Gender)> {
    let mut out = Vec::new();
    for g in AgeGroup::ALL {
        for gender in Gender::ALL {
            out.extend(std::iter::repeat_n((g, gender), config.cell_size(gender)));
        }
    }
    out
}

fn unsupervised_profile(config: &CohortConfig, g: AgeGroup, gender: Gender, rng: &mut SpaceRng) -> Profile {
    let cell = config.demographics.cell(g, gender);
    Profile {
        group: g,
        gender,
        age: draw_age(cell, config.noise_scale, rng),
        education: draw_education(config.demographics.university_share, config.noise_scale, rng),
        supervision: 0.0,
    }
}

/// Per-week composite (mean of z-scored total time and perspective error) for
/// rows of `[week][rotation, movement, perspective]`.
fn per_week_composite(values: &[[[f64; 3]; 3]]) -> Result<Vec<[f64; 3]>, SimError> {
    let mut out = vec![[0.0; 3]; values.len()];
    for w in 0..3 {
        let records: Vec<MetricRecord> = values
            .iter()
            .map(|v| {
                let [r, m, p] = v[w];
                MetricRecord {
                    participant_id: String::new(),
                    week: Week::ALL[w],
                    rotation_time_s: r,
                    movement_time_s: m,
                    total_training_time_s: r + m,
                    perspective_error_deg: p,
                    space_error_z: None,
                }
            })
            .collect();
        let z = composite_space_error(&records, Standardization::default())?;
        for (row, rec) in out.iter_mut().zip(z) {
            row[w] = rec.space_error_z.unwrap_or(0.0);
        }
    }
    Ok(out)
}

fn bisect(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> Result<f64, SimError>) -> Result<f64, SimError> {
    let (flo, fhi) = (f(lo)? - target, f(hi)? - target);
    if flo * fhi > 0.0 {
        return Err(SimError::Calibration(format!(
            "target {target} outside the reachable range [{}, {}]",
            flo + target,
            fhi + target
        )));
    }
    let increasing = fhi > flo;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)? - target;
        if (fm < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn week3_beta(config: &CohortConfig, slope: f64, profiles: &[Profile], latents: &[Latent], z3: &[f64]) -> Result<f64, SimError> {
    let y: Vec<f64> = profiles
        .iter()
        .zip(latents)
        .map(|(p, l)| f64::from(moca_total(config, slope, p, l)))
        .collect();
    let design = baseline_design(profiles).with("z3", z3.to_vec());
    let fit = ols_fit(&design, &y).map_err(|e| SimError::Calibration(e.to_string()))?;
    Ok(fit.coefficient("z3").map(|c| c.0).unwrap_or(0.0))
}

fn baseline_design(profiles: &[Profile]) -> Design {
    let gender: Vec<&str> = profiles.iter().map(|p| p.gender.label()).collect();
    let education: Vec<&str> = profiles.iter().map(|p| p.education.label()).collect();
    Design::intercept(profiles.len())
        .with("Age", profiles.iter().map(|p| f64::from(p.age)).collect())
        .with_treatment("Gender", &gender, Gender::Female.label())
        .with_treatment("Education", &education, Education::HighSchool.label())
}

/// Fit the stability share to `reliability_target` and the MoCA latent slope
/// to `planted_week3_slope` on a large population sample of the config's
/// cohort composition.
pub fn calibrate(config: &CohortConfig) -> Result<Calibration, SimError> {
    config.validate()?;
    if config.noise_scale == 0.0 {
        return Ok(Calibration {
            stability: config.stability,
            moca_latent_slope: 0.0,
            population_icc: None,
            population_week3_beta: None,
        });
    }
    let cells = composition(config);
    let reps = CALIBRATION_PARTICIPANTS.div_ceil(cells.len());
    let mut rng = derived_rng(CALIBRATION_SEED, 0);
    let mut profiles = Vec::with_capacity(reps * cells.len());
    let mut latents = Vec::with_capacity(reps * cells.len());
    for _ in 0..reps {
        for &(g, gender) in &cells {
            profiles.push(unsupervised_profile(config, g, gender, &mut rng));
            latents.push(Latent::draw(&mut rng));
        }
    }
    let composite = |s: f64| -> Result<Vec<[f64; 3]>, SimError> {
        let values: Vec<[[f64; 3]; 3]> = profiles
            .iter()
            .zip(&latents)
            .map(|(p, l)| Week::ALL.map(|w| gameplay(config, s, p, l, w)))
            .collect();
        per_week_composite(&values)
    };
    let icc_at = |s: f64| -> Result<f64, SimError> {
        let rows: Vec<Vec<f64>> = composite(s)?.iter().map(|r| r.to_vec()).collect();
        icc_two_way(&rows)
            .map(|r| r.icc_single)
            .map_err(|e| SimError::Calibration(e.to_string()))
    };
    let stability = match config.reliability_target {
        Some(target) => bisect(0.0, 0.999, target, icc_at)?,
        None => config.stability,
    };
    let population_icc = icc_at(stability)?;
    let z3: Vec<f64> = composite(stability)?.iter().map(|r| r[2]).collect();
    let beta = |slope: f64| week3_beta(config, slope, &profiles, &latents, &z3);
    let planted = config.moca.planted_week3_slope;
    let slope = if planted == 0.0 {
        0.0
    } else {
        bisect(-25.0, 25.0, planted, beta)?
    };
    Ok(Calibration {
        stability,
        moca_latent_slope: slope,
        population_icc: Some(population_icc),
        population_week3_beta: Some(beta(slope)?),
    })
}

/// Calibrate, then simulate.
pub fn simulate_cohort(config: &CohortConfig) -> Result<StudyDataset, SimError> {
    let calibration = calibrate(config)?;
    simulate_with(config, &calibration)
}

/// Everything needed to simulate one participant.
struct Spec {
    id: String,
    study: String,
    condition: Condition,
    profile: Profile,
    weeks: Vec<Week>,
    questionnaires: bool,
    moca: bool,
}

fn supervised_age(study: &super::SupervisedStudy, noise_scale: f64, rng: &mut SpaceRng) -> u32 {
    let (young_lo, _) = AgeGroup::Young.bounds();
    let (_, old_hi) = AgeGroup::Old.bounds();
    let cell = AgeCell {
        mean: study.mean_age,
        sd: study.sd_age,
        min: study.min_age.max(young_lo),
        max: study.max_age.min(old_hi),
    };
    draw_age(&cell, noise_scale, rng)
}

fn specs(config: &CohortConfig) -> Vec<Spec> {
    let base = derive_seed(config.seed, STREAM_COHORT);
    let mut out = Vec::new();
    for (i, (g, gender)) in composition(config).into_iter().enumerate() {
        let mut rng = derived_rng(derive_seed(base, out.len() as u64), STREAM_DEMOGRAPHICS);
        out.push(Spec {
            id: format!("P{:03}", i + 1),
            study: UNSUPERVISED_STUDY.into(),
            condition: Condition::Unsupervised,
            profile: unsupervised_profile(config, g, gender, &mut rng),
            weeks: Week::ALL.to_vec(),
            questionnaires: true,
            moca: true,
        });
    }
    if let Some(sup) = &config.supervised {
        for study in &sup.studies {
            let genders = std::iter::repeat_n(Gender::Female, study.female)
                .chain(std::iter::repeat_n(Gender::Male, study.male));
            for (k, gender) in genders.enumerate() {
                let mut rng = derived_rng(derive_seed(base, out.len() as u64), STREAM_DEMOGRAPHICS);
                let age = supervised_age(study, config.noise_scale, &mut rng);
                let group = AgeGroup::of_age(age).expect("supervised ages are clamped to the analysed range");
                out.push(Spec {
                    id: format!("{}-{:04}", study.name, k + 1),
                    study: study.name.clone(),
                    condition: Condition::Supervised,
                    profile: Profile {
                        group,
                        gender,
                        age,
                        education: draw_education(config.demographics.university_share, config.noise_scale, &mut rng),
                        supervision: sup.shift[group.index()],
                    },
                    weeks: vec![Week::One],
                    questionnaires: study.questionnaires,
                    moca: false,
                });
            }
        }
    }
    out
}

/// Split `total` proportionally to `weights` in whole microseconds, so the
/// parts land on the log grid and add up to exactly the rounded total.
fn split(total: f64, weights: &[f64]) -> Vec<f64> {
    let sum: f64 = weights.iter().sum();
    let total_us = (total * 1e6).round() as i64;
    let exact: Vec<f64> = weights.iter().map(|w| total_us as f64 * w / sum).collect();
    let mut parts: Vec<i64> = exact.iter().map(|x| x.floor() as i64).collect();
    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let short = total_us - parts.iter().sum::<i64>();
    for &i in order.iter().cycle().take(short.max(0) as usize) {
        parts[i] += 1;
    }
    parts.into_iter().map(|us| us as f64 / 1e6).collect()
}

fn step_weight(magnitude_deg: u16) -> f64 {
    1.0 + f64::from(magnitude_deg) / 90.0
}

/// Signed pointing deviations with mean magnitude exactly `mean_error`.
fn perspective_deviations(mean_error: f64, n: usize, noise_scale: f64, rng: &mut SpaceRng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| (TRIAL_ERROR_SPREAD * noise_scale * normal(rng)).exp())
        .collect();
    let m = raw.iter().sum::<f64>() / n as f64;
    let mut mags: Vec<f64> = raw.iter().map(|r| mean_error * r / m).collect();
    let max = mags.iter().cloned().fold(0.0, f64::max);
    if max > TRIAL_ERROR_MAX_DEG {
        let lambda = (TRIAL_ERROR_MAX_DEG - mean_error) / (max - mean_error);
        for v in &mut mags {
            *v = mean_error + lambda * (*v - mean_error);
        }
    }
    mags.into_iter()
        .map(|v| if rng.random::<bool>() { v } else { -v })
        .collect()
}

fn behaviour(
    config: &CohortConfig,
    spec: &Spec,
    plan: &TaskPlan,
    outcome: [f64; 3],
    started_at: Timestamp,
    rng: &mut SpaceRng,
) -> SessionBehaviour {
    let [rotation, movement, perspective] = outcome;
    let rot_w: Vec<f64> = plan.rotation_steps.iter().map(|s| step_weight(s.magnitude_deg)).collect();
    let fwd_w: Vec<f64> = plan
        .movement_segments
        .iter()
        .map(|s| 1.5 * s.forward_distance_m / 5.0)
        .collect();
    let rep_w: Vec<f64> = plan
        .movement_segments
        .iter()
        .flat_map(|s| s.rotation_repeat.iter().map(|r| step_weight(r.magnitude_deg)))
        .collect();
    let mut mov = split(movement, &[fwd_w.as_slice(), rep_w.as_slice()].concat());
    let repeats = mov.split_off(fwd_w.len());
    let n = plan.perspective_trials.len();
    let deviations = perspective_deviations(perspective, n, config.noise_scale, rng);
    let rts = (0..n)
        .map(|_| RESPONSE_TIME_S * (RESPONSE_TIME_SPREAD * config.noise_scale * normal(rng)).exp())
        .collect();
    SessionBehaviour {
        participant_id: spec.id.clone(),
        started_at,
        device: match spec.condition {
            Condition::Unsupervised => DEVICE_UNSUPERVISED,
            Condition::Supervised => DEVICE_SUPERVISED,
        }
        .into(),
        sampling_hz: config.sampling_hz,
        rotation_durations_s: split(rotation, &rot_w),
        forward_durations_s: mov,
        repeat_durations_s: repeats,
        perspective_deviations_deg: deviations,
        perspective_rts_s: rts,
        questionnaires: None,
    }
}

/// Target questionnaire scores in the order SUS, TLX, attractiveness,
/// pragmatic, hedonic.
fn questionnaire_targets(config: &CohortConfig, spec: &Spec, l: &Latent, week: Week) -> [f64; 5] {
    let q = &config.questionnaires;
    let t = q.group(spec.profile.group);
    let weekly = [&t.sus, &t.nasa_tlx, &t.ueq_attractiveness, &t.ueq_pragmatic, &t.ueq_hedonic];
    let shift = |s: &QuestionnaireShift| [s.sus, s.nasa_tlx, s.ueq_attractiveness, s.ueq_pragmatic, s.ueq_hedonic];
    let female = shift(&q.female_shift);
    let supervised = shift(&q.supervised_shift);
    let g = gender_sign(spec.profile.gender);
    let sup = f64::from(u8::from(spec.condition == Condition::Supervised));
    std::array::from_fn(|k| {
        let [m, sd] = weekly[k][week.index()];
        let e = q.stability.sqrt() * l.q_person[k] + (1.0 - q.stability).sqrt() * l.q_occasion[week.index()][k];
        m + female[k] * g + supervised[k] * sup + sd * config.noise_scale * e
    })
}

fn questionnaire_items(config: &CohortConfig, target: [f64; 5], rng: &mut SpaceRng) -> Questionnaires {
    let [sus, tlx, att, prag, hed] = target;
    // SUS: share the contribution units as evenly as possible.
    let units = (sus / 2.5).round().clamp(0.0, 40.0) as usize;
    let sus_items = (0..SUS_ITEMS)
        .map(|i| {
            let c = (units / SUS_ITEMS + usize::from(i < units % SUS_ITEMS)) as i32;
            if i % 2 == 0 {
                c + 1
            } else {
                5 - c
            }
        })
        .collect();
    let tlx_items = (0..TLX_ITEMS)
        .map(|_| (tlx + TLX_ITEM_SD * config.noise_scale * normal(rng)).round().clamp(0.0, 100.0) as i32)
        .collect();
    let ueq = UeqKey::standard()
        .items
        .iter()
        .map(|item| {
            let latent = match item.scale {
                UeqScale::Attractiveness => att,
                s if s.is_pragmatic() => prag,
                _ => hed,
            };
            let v = (latent + UEQ_ITEM_SD * config.noise_scale * normal(rng)).round().clamp(-3.0, 3.0) as i32;
            v * i32::from(item.polarity) + 4
        })
        .collect();
    Questionnaires {
        sus: sus_items,
        nasa_tlx: tlx_items,
        ueq,
    }
}

fn session_start(index: usize, week: Week) -> Timestamp {
    let base = Utc.with_ymd_and_hms(2024, 3, 4, 9, 0, 0).single().expect("valid base date");
    Timestamp(base + Duration::minutes(37 * index as i64) + Duration::days(7 * week.index() as i64))
}

fn simulate_participant(
    config: &CohortConfig,
    calibration: &Calibration,
    index: usize,
    spec: &Spec,
) -> Result<Participant, SimError> {
    let seed = derive_seed(derive_seed(config.seed, STREAM_COHORT), index as u64);
    let latent = Latent::draw(&mut derived_rng(seed, STREAM_LATENT));
    let mut sessions = Vec::new();
    let mut metrics = Vec::new();
    let mut questionnaires = Vec::new();
    for &week in &spec.weeks {
        let w = week.index() as u64;
        let plan = generate_plan(week, derive_seed(seed, STREAM_PLAN + w), &PlanConfig::default())?;
        let outcome = gameplay(config, calibration.stability, &spec.profile, &latent, week);
        let mut rng = derived_rng(seed, STREAM_TRIALS + w);
        let mut b = behaviour(config, spec, &plan, outcome, session_start(index, week), &mut rng);
        if spec.questionnaires {
            let mut rng = derived_rng(seed, STREAM_ITEMS + w);
            b.questionnaires = Some(questionnaire_items(
                config,
                questionnaire_targets(config, spec, &latent, week),
                &mut rng,
            ));
        }
        let log = synthesize_session(&plan, &b)?;
        metrics.push(metric_record(&log)?);
        questionnaires.push(log.questionnaires.as_ref().map(score_block).transpose()?);
        sessions.push(log);
    }
    Ok(Participant {
        id: spec.id.clone(),
        study: spec.study.clone(),
        condition: spec.condition,
        age: spec.profile.age,
        age_group: spec.profile.group,
        gender: spec.profile.gender,
        education: spec.profile.education,
        moca_total: spec
            .moca
            .then(|| moca_total(config, calibration.moca_latent_slope, &spec.profile, &latent)),
        sessions,
        metrics,
        questionnaires,
    })
}

/// Simulate with previously fitted calibration parameters. The unsupervised
/// cohort's records carry per-week SPACE error z-scores standardized within
/// that cohort; supervised records carry none.
pub fn simulate_with(config: &CohortConfig, calibration: &Calibration) -> Result<StudyDataset, SimError> {
    config.validate()?;
    let specs = specs(config);
    let mut participants = specs
        .par_iter()
        .enumerate()
        .map(|(i, s)| simulate_participant(config, calibration, i, s))
        .collect::<Result<Vec<_>, _>>()?;
    let unsup: Vec<usize> = (0..participants.len())
        .filter(|&i| participants[i].condition == Condition::Unsupervised)
        .collect();
    let records: Vec<MetricRecord> = unsup.iter().flat_map(|&i| participants[i].metrics.clone()).collect();
    let scored = composite_space_error(&records, Standardization::default())?;
    let mut it = scored.into_iter();
    for &i in &unsup {
        for m in &mut participants[i].metrics {
            *m = it.next().expect("one scored record per input record");
        }
    }
    let dataset = StudyDataset {
        seed: config.seed,
        calibration: calibration.clone(),
        participants,
    };
    dataset.validate()?;
    Ok(dataset)
}
