//! Weekly task plans: rotation sequences, movement segments, landmark maps and
//! perspective-taking trials.
//!
//! Everything here is a pure function of its arguments. Randomness comes from
//! [`crate::rng`] so a plan is bit-reproducible from `(week, config, seed)`.

use std::collections::HashSet;
use std::fmt;
use std::sync::OnceLock;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::egocentric_bearing;
use crate::rng::{derive_seed, rng_from_seed};

/// Minimum angular distance, in degrees, between a trial target's egocentric
/// bearing and both dead-ahead (0°) and dead-behind (180°).
pub const ANTI_AMBIGUITY_FLOOR_DEG: f64 = 10.0;

/// Rotation magnitudes available in weeks 1 and 2.
pub const BASIC_MAGNITUDES: [u16; 2] = [45, 90];

/// Rotation magnitudes available in week 3 (the full circle in 45° steps).
pub const EXTENDED_MAGNITUDES: [u16; 7] = [45, 90, 135, 180, 225, 270, 315];

const ROTATION_STREAM: u64 = 1;
const TRIAL_STREAM: u64 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("week must be 1, 2 or 3 (got {0})")]
    InvalidWeek(i64),
    #[error("n_pairs must be at least 1")]
    ZeroPairs,
    #[error("week {week} requires a map with {expected} landmarks, found {found}")]
    MapMismatch {
        week: Week,
        expected: usize,
        found: usize,
    },
    #[error("invalid landmark map: {}", .0.join("; "))]
    InvalidMap(Vec<String>),
    #[error("map offers {available} unambiguous landmark triples, {required} needed")]
    InsufficientTriples { available: usize, required: usize },
    #[error("invalid plan configuration: {0}")]
    InvalidConfig(String),
}

/// Session week. Weeks 1 and 2 share the basic configuration; week 3 is the
/// extended session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Week {
    One,
    Two,
    Three,
}

impl Week {
    pub const ALL: [Week; 3] = [Week::One, Week::Two, Week::Three];

    pub fn new(week: i64) -> Result<Self, TaskError> {
        match week {
            1 => Ok(Week::One),
            2 => Ok(Week::Two),
            3 => Ok(Week::Three),
            other => Err(TaskError::InvalidWeek(other)),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Week::One => 1,
            Week::Two => 2,
            Week::Three => 3,
        }
    }

    /// Zero-based position, handy for indexing per-week tables.
    pub fn index(self) -> usize {
        self.number() as usize - 1
    }

    pub fn is_extended(self) -> bool {
        self == Week::Three
    }

    pub fn landmark_count(self) -> usize {
        if self.is_extended() {
            7
        } else {
            4
        }
    }

    pub fn perspective_trial_count(self) -> usize {
        if self.is_extended() {
            16
        } else {
            6
        }
    }

    pub fn magnitudes(self) -> &'static [u16] {
        if self.is_extended() {
            &EXTENDED_MAGNITUDES
        } else {
            &BASIC_MAGNITUDES
        }
    }
}

impl TryFrom<u8> for Week {
    type Error = TaskError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Week::new(i64::from(value))
    }
}

impl From<Week> for u8 {
    fn from(week: Week) -> u8 {
        week.number()
    }
}

impl fmt::Display for Week {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub id: String,
    pub name: String,
    pub x_m: f64,
    pub y_m: f64,
}

impl Landmark {
    pub fn position(&self) -> (f64, f64) {
        (self.x_m, self.y_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkMap {
    pub map_id: String,
    pub landmarks: Vec<Landmark>,
}

impl LandmarkMap {
    pub fn get(&self, id: &str) -> Option<&Landmark> {
        self.landmarks.iter().find(|l| l.id == id)
    }

    /// Structural problems: duplicate ids, coincident or non-finite positions.
    /// Landmark count and triple eligibility are checked separately because
    /// they depend on the week.
    pub fn structural_problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.map_id.trim().is_empty() {
            problems.push("map_id is empty".to_string());
        }
        let mut seen = HashSet::new();
        for l in &self.landmarks {
            if l.id.trim().is_empty() {
                problems.push("landmark with empty id".to_string());
            }
            if !seen.insert(l.id.as_str()) {
                problems.push(format!("duplicate landmark id `{}`", l.id));
            }
            if !l.x_m.is_finite() || !l.y_m.is_finite() {
                problems.push(format!("landmark `{}` has a non-finite position", l.id));
            }
        }
        for (i, a) in self.landmarks.iter().enumerate() {
            for b in &self.landmarks[i + 1..] {
                if a.x_m == b.x_m && a.y_m == b.y_m {
                    problems.push(format!("landmarks `{}` and `{}` share a position", a.id, b.id));
                }
            }
        }
        problems
    }

    /// All ordered `(stand_at, face, point_to)` index triples whose target
    /// bearing clears [`ANTI_AMBIGUITY_FLOOR_DEG`].
    pub fn eligible_triples(&self) -> Vec<[usize; 3]> {
        let n = self.landmarks.len();
        let mut out = Vec::new();
        for s in 0..n {
            for f in 0..n {
                for t in 0..n {
                    if s == f || s == t || f == t {
                        continue;
                    }
                    let bearing = egocentric_bearing(
                        self.landmarks[s].position(),
                        self.landmarks[f].position(),
                        self.landmarks[t].position(),
                    );
                    if let Ok(b) = bearing {
                        if is_unambiguous(b) {
                            out.push([s, f, t]);
                        }
                    }
                }
            }
        }
        out
    }
}

/// True when `bearing_deg` is at least the floor away from 0° and 180°.
pub fn is_unambiguous(bearing_deg: f64) -> bool {
    let b = bearing_deg.rem_euclid(360.0);
    let from_ahead = b.min(360.0 - b);
    let from_behind = (b - 180.0).abs();
    from_ahead >= ANTI_AMBIGUITY_FLOOR_DEG && from_behind >= ANTI_AMBIGUITY_FLOOR_DEG
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RotationStep {
    pub magnitude_deg: u16,
    /// +1 clockwise, -1 counter-clockwise.
    pub sign: i8,
}

impl RotationStep {
    pub fn signed_deg(self) -> f64 {
        f64::from(self.magnitude_deg) * f64::from(self.sign)
    }

    pub fn negated(self) -> Self {
        RotationStep {
            magnitude_deg: self.magnitude_deg,
            sign: -self.sign,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovementSegment {
    pub forward_distance_m: f64,
    /// Rotation pair repeated after reaching the guide.
    pub rotation_repeat: Vec<RotationStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PerspectiveTrialSpec {
    pub stand_at: String,
    pub face: String,
    pub point_to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPlan {
    pub week: Week,
    pub seed: u64,
    pub rotation_steps: Vec<RotationStep>,
    pub movement_segments: Vec<MovementSegment>,
    pub map: LandmarkMap,
    pub perspective_trials: Vec<PerspectiveTrialSpec>,
}

/// Knobs the game leaves unstated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    /// Opposing rotation pairs in weeks 1–2. Ignored in week 3.
    pub n_pairs: usize,
    /// One forward move per entry, each followed by a rotation repeat.
    pub forward_distances_m: Vec<f64>,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            n_pairs: 2,
            forward_distances_m: vec![5.0; 3],
        }
    }
}

/// Rotation sequence for one session. Every step is immediately followed by
/// its negation, so the guide returns to the starting orientation after each
/// pair.
pub fn gen_rotation_sequence(
    week: Week,
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<RotationStep>, TaskError> {
    if n_pairs == 0 {
        return Err(TaskError::ZeroPairs);
    }
    let mut rng = rng_from_seed(seed);
    let magnitudes: Vec<u16> = if week.is_extended() {
        let mut all = EXTENDED_MAGNITUDES.to_vec();
        all.shuffle(&mut rng);
        all
    } else {
        (0..n_pairs)
            .map(|_| BASIC_MAGNITUDES[rng.random_range(0..BASIC_MAGNITUDES.len())])
            .collect()
    };
    let mut steps = Vec::with_capacity(magnitudes.len() * 2);
    for magnitude_deg in magnitudes {
        let sign = if rng.random::<bool>() { 1 } else { -1 };
        let step = RotationStep { magnitude_deg, sign };
        steps.push(step);
        steps.push(step.negated());
    }
    Ok(steps)
}

/// Perspective trials sampled without replacement from the map's unambiguous
/// triples.
pub fn gen_perspective_trials(
    week: Week,
    map: &LandmarkMap,
    seed: u64,
) -> Result<Vec<PerspectiveTrialSpec>, TaskError> {
    let expected = week.landmark_count();
    if map.landmarks.len() != expected {
        return Err(TaskError::MapMismatch {
            week,
            expected,
            found: map.landmarks.len(),
        });
    }
    let problems = map.structural_problems();
    if !problems.is_empty() {
        return Err(TaskError::InvalidMap(problems));
    }
    let triples = map.eligible_triples();
    let required = week.perspective_trial_count();
    if triples.len() < required {
        return Err(TaskError::InsufficientTriples {
            available: triples.len(),
            required,
        });
    }
    let mut rng = rng_from_seed(seed);
    let picks = index::sample(&mut rng, triples.len(), required);
    Ok(picks
        .into_iter()
        .map(|i| {
            let [s, f, t] = triples[i];
            PerspectiveTrialSpec {
                stand_at: map.landmarks[s].id.clone(),
                face: map.landmarks[f].id.clone(),
                point_to: map.landmarks[t].id.clone(),
            }
        })
        .collect())
}

#[derive(Deserialize)]
struct MapFile {
    maps: Vec<MapEntry>,
}

#[derive(Deserialize)]
struct MapEntry {
    weeks: Vec<Week>,
    map: LandmarkMap,
}

const DEFAULT_MAPS: &str = include_str!("../data/default_maps.json");

fn default_maps() -> &'static [(Vec<Week>, LandmarkMap)] {
    static MAPS: OnceLock<Vec<(Vec<Week>, LandmarkMap)>> = OnceLock::new();
    MAPS.get_or_init(|| {
        let file: MapFile =
            serde_json::from_str(DEFAULT_MAPS).expect("bundled default_maps.json is valid");
        file.maps.into_iter().map(|e| (e.weeks, e.map)).collect()
    })
}

/// The bundled map for `week`.
pub fn default_map(week: Week) -> LandmarkMap {
    default_maps()
        .iter()
        .find(|(weeks, _)| weeks.contains(&week))
        .map(|(_, map)| map.clone())
        .expect("bundled maps cover every week")
}

/// Full plan for one session with the default map.
pub fn generate_plan(week: Week, seed: u64, config: &PlanConfig) -> Result<TaskPlan, TaskError> {
    generate_plan_with_map(week, seed, config, default_map(week))
}

pub fn generate_plan_with_map(
    week: Week,
    seed: u64,
    config: &PlanConfig,
    map: LandmarkMap,
) -> Result<TaskPlan, TaskError> {
    if let Some(d) = config
        .forward_distances_m
        .iter()
        .find(|d| !d.is_finite() || **d <= 0.0)
    {
        return Err(TaskError::InvalidConfig(format!(
            "forward distance {d} must be positive"
        )));
    }
    let rotation_steps =
        gen_rotation_sequence(week, config.n_pairs, derive_seed(seed, ROTATION_STREAM))?;
    let perspective_trials = gen_perspective_trials(week, &map, derive_seed(seed, TRIAL_STREAM))?;
    let pairs: Vec<&[RotationStep]> = rotation_steps.chunks(2).collect();
    let movement_segments = config
        .forward_distances_m
        .iter()
        .enumerate()
        .map(|(i, &forward_distance_m)| MovementSegment {
            forward_distance_m,
            rotation_repeat: pairs[i % pairs.len()].to_vec(),
        })
        .collect();
    Ok(TaskPlan {
        week,
        seed,
        rotation_steps,
        movement_segments,
        map,
        perspective_trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn week_one_pairs_cancel() {
        let steps = gen_rotation_sequence(Week::One, 2, 11).unwrap();
        assert_eq!(steps.len(), 4);
        for pair in steps.chunks(2) {
            assert!(BASIC_MAGNITUDES.contains(&pair[0].magnitude_deg));
            assert_eq!(pair[0].signed_deg() + pair[1].signed_deg(), 0.0);
        }
    }

    #[test]
    fn week_three_covers_every_magnitude_once() {
        for n_pairs in [1, 5, 40] {
            let steps = gen_rotation_sequence(Week::Three, n_pairs, 3).unwrap();
            assert_eq!(steps.len(), 14);
            let mut mags: Vec<u16> = steps.iter().step_by(2).map(|s| s.magnitude_deg).collect();
            mags.sort_unstable();
            assert_eq!(mags, EXTENDED_MAGNITUDES);
        }
    }

    #[test]
    fn rotation_sequence_errors() {
        assert_eq!(gen_rotation_sequence(Week::One, 0, 1), Err(TaskError::ZeroPairs));
        assert_eq!(Week::new(4), Err(TaskError::InvalidWeek(4)));
        assert_eq!(Week::new(0), Err(TaskError::InvalidWeek(0)));
    }

    #[test]
    fn default_maps_match_weeks() {
        let w1 = default_map(Week::One);
        assert_eq!(w1.landmarks.len(), 4);
        for id in ["rocket", "tree", "cave"] {
            assert!(w1.get(id).is_some(), "missing {id}");
        }
        assert_eq!(default_map(Week::Two), w1);
        let w3 = default_map(Week::Three);
        assert_eq!(w3.landmarks.len(), 7);
        for id in ["rocket", "tree", "cave", "antenna", "crystal", "crater", "dome"] {
            assert!(w3.get(id).is_some(), "missing {id}");
        }
    }

    #[test]
    fn default_maps_are_fully_unambiguous() {
        for week in Week::ALL {
            let map = default_map(week);
            assert!(map.structural_problems().is_empty());
            let n = map.landmarks.len();
            assert_eq!(map.eligible_triples().len(), n * (n - 1) * (n - 2));
        }
    }

    #[test]
    fn trial_counts_per_week() {
        let t1 = gen_perspective_trials(Week::One, &default_map(Week::One), 5).unwrap();
        assert_eq!(t1.len(), 6);
        assert_eq!(t1.iter().collect::<HashSet<_>>().len(), 6);
        let t3 = gen_perspective_trials(Week::Three, &default_map(Week::Three), 5).unwrap();
        assert_eq!(t3.len(), 16);
        assert_eq!(t3.iter().collect::<HashSet<_>>().len(), 16);
    }

    #[test]
    fn three_landmark_map_is_rejected() {
        let mut map = default_map(Week::One);
        map.landmarks.pop();
        assert!(matches!(
            gen_perspective_trials(Week::One, &map, 1),
            Err(TaskError::MapMismatch { expected: 4, found: 3, .. })
        ));
    }

    #[test]
    fn collinear_map_lacks_triples() {
        let map = LandmarkMap {
            map_id: "line".into(),
            landmarks: (0..4)
                .map(|i| Landmark {
                    id: format!("l{i}"),
                    name: format!("L{i}"),
                    x_m: f64::from(i) * 10.0,
                    y_m: 0.0,
                })
                .collect(),
        };
        assert!(matches!(
            gen_perspective_trials(Week::One, &map, 1),
            Err(TaskError::InsufficientTriples { available: 0, required: 6 })
        ));
    }

    #[test]
    fn plan_is_deterministic_and_interleaves_repeats() {
        let cfg = PlanConfig::default();
        let a = generate_plan(Week::Two, 99, &cfg).unwrap();
        let b = generate_plan(Week::Two, 99, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.movement_segments.len(), 3);
        assert_eq!(a.movement_segments[0].rotation_repeat, a.rotation_steps[0..2]);
        assert_eq!(a.movement_segments[1].rotation_repeat, a.rotation_steps[2..4]);
        assert_eq!(a.movement_segments[2].rotation_repeat, a.rotation_steps[0..2]);
        assert_ne!(a, generate_plan(Week::Two, 100, &cfg).unwrap());
    }

    #[test]
    fn week_serializes_as_number() {
        assert_eq!(serde_json::to_string(&Week::Three).unwrap(), "3");
        assert!(serde_json::from_str::<Week>("4").is_err());
    }

    proptest! {
        #[test]
        fn rotation_invariants(seed in any::<u64>(), week in 1i64..=3, n_pairs in 1usize..6) {
            let week = Week::new(week).unwrap();
            let steps = gen_rotation_sequence(week, n_pairs, seed).unwrap();
            let mut cumulative = 0.0;
            for (i, s) in steps.iter().enumerate() {
                prop_assert!(week.magnitudes().contains(&s.magnitude_deg));
                prop_assert!(s.sign == 1 || s.sign == -1);
                cumulative += s.signed_deg();
                if i % 2 == 1 {
                    prop_assert_eq!(cumulative, 0.0);
                }
            }
        }

        #[test]
        fn trial_invariants(seed in any::<u64>(), week in 1i64..=3) {
            let week = Week::new(week).unwrap();
            let map = default_map(week);
            let trials = gen_perspective_trials(week, &map, seed).unwrap();
            prop_assert_eq!(trials.len(), week.perspective_trial_count());
            let unique: HashSet<_> = trials.iter().collect();
            prop_assert_eq!(unique.len(), trials.len());
            for t in &trials {
                prop_assert!(t.stand_at != t.face && t.face != t.point_to && t.stand_at != t.point_to);
                let b = egocentric_bearing(
                    map.get(&t.stand_at).unwrap().position(),
                    map.get(&t.face).unwrap().position(),
                    map.get(&t.point_to).unwrap().position(),
                ).unwrap();
                prop_assert!(is_unambiguous(b));
            }
        }
    }
}
