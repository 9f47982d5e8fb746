//! Scoring for the post-game questionnaires: SUS, raw NASA-TLX and UEQ.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sessionlog::Questionnaires;

pub const SUS_ITEMS: usize = 10;
pub const TLX_ITEMS: usize = 6;
pub const UEQ_ITEMS: usize = 26;

pub const SUS_BENCHMARK: f64 = 68.0;
pub const TLX_BENCHMARK: f64 = 50.0;
pub const UEQ_BENCHMARK: f64 = 0.0;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuestionnaireError {
    #[error("{instrument}: expected {expected} items, got {got}")]
    ItemCount {
        instrument: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{instrument}: item {item} = {value} outside {min}..={max}")]
    OutOfRange {
        instrument: &'static str,
        item: usize,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("UEQ key: {0}")]
    InvalidKey(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UeqScale {
    Attractiveness,
    Perspicuity,
    Efficiency,
    Dependability,
    Stimulation,
    Novelty,
}

impl UeqScale {
    pub const ALL: [UeqScale; 6] = [
        UeqScale::Attractiveness,
        UeqScale::Perspicuity,
        UeqScale::Efficiency,
        UeqScale::Dependability,
        UeqScale::Stimulation,
        UeqScale::Novelty,
    ];

    pub fn is_pragmatic(self) -> bool {
        matches!(
            self,
            UeqScale::Perspicuity | UeqScale::Efficiency | UeqScale::Dependability
        )
    }

    pub fn is_hedonic(self) -> bool {
        matches!(self, UeqScale::Stimulation | UeqScale::Novelty)
    }
}

/// One row of the UEQ key. A raw answer of 1 marks the `left` term and 7 the
/// `right` term; `polarity` is +1 when `right` is the positive pole.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UeqItem {
    pub item: usize,
    pub left: String,
    pub right: String,
    pub scale: UeqScale,
    pub polarity: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UeqKey {
    pub items: Vec<UeqItem>,
}

static DEFAULT_KEY: OnceLock<UeqKey> = OnceLock::new();

impl UeqKey {
    /// The shipped 26-item key.
    pub fn standard() -> &'static UeqKey {
        DEFAULT_KEY.get_or_init(|| {
            let key: UeqKey = serde_json::from_str(include_str!("../data/ueq_key.json"))
                .expect("bundled UEQ key parses");
            key.check().expect("bundled UEQ key is valid");
            key
        })
    }

    pub fn from_json(text: &str) -> Result<UeqKey, QuestionnaireError> {
        let key: UeqKey =
            serde_json::from_str(text).map_err(|e| QuestionnaireError::InvalidKey(e.to_string()))?;
        key.check()?;
        Ok(key)
    }

    pub fn check(&self) -> Result<(), QuestionnaireError> {
        if self.items.len() != UEQ_ITEMS {
            return Err(QuestionnaireError::InvalidKey(format!(
                "{} entries, expected {UEQ_ITEMS}",
                self.items.len()
            )));
        }
        let mut seen = [false; UEQ_ITEMS];
        for entry in &self.items {
            if entry.item == 0 || entry.item > UEQ_ITEMS || seen[entry.item - 1] {
                return Err(QuestionnaireError::InvalidKey(format!(
                    "item number {} missing, repeated or out of range",
                    entry.item
                )));
            }
            seen[entry.item - 1] = true;
            if entry.polarity != 1 && entry.polarity != -1 {
                return Err(QuestionnaireError::InvalidKey(format!(
                    "item {} polarity {} is not ±1",
                    entry.item, entry.polarity
                )));
            }
        }
        for scale in UeqScale::ALL {
            if !self.items.iter().any(|e| e.scale == scale) {
                return Err(QuestionnaireError::InvalidKey(format!(
                    "no items for scale {scale:?}"
                )));
            }
        }
        Ok(())
    }

    /// Same key with every polarity reversed.
    pub fn flipped(&self) -> UeqKey {
        UeqKey {
            items: self
                .items
                .iter()
                .map(|e| UeqItem {
                    polarity: -e.polarity,
                    ..e.clone()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeqScores {
    pub attractiveness: f64,
    pub pragmatic: f64,
    pub hedonic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireScores {
    pub sus: f64,
    pub nasa_tlx: f64,
    pub ueq_attractiveness: f64,
    pub ueq_pragmatic: f64,
    pub ueq_hedonic: f64,
}

fn check_items(
    instrument: &'static str,
    items: &[f64],
    expected: usize,
    min: f64,
    max: f64,
) -> Result<(), QuestionnaireError> {
    if items.len() != expected {
        return Err(QuestionnaireError::ItemCount {
            instrument,
            expected,
            got: items.len(),
        });
    }
    for (i, &value) in items.iter().enumerate() {
        if !(min..=max).contains(&value) {
            return Err(QuestionnaireError::OutOfRange {
                instrument,
                item: i + 1,
                value,
                min,
                max,
            });
        }
    }
    Ok(())
}

fn as_f64(items: &[i32]) -> Vec<f64> {
    items.iter().map(|&v| f64::from(v)).collect()
}

/// System Usability Scale, 0–100. Items are numbered from 1, so items 1, 3,
/// 5, 7, 9 are the positively worded ones.
pub fn score_sus(items: &[i32]) -> Result<f64, QuestionnaireError> {
    check_items("SUS", &as_f64(items), SUS_ITEMS, 1.0, 5.0)?;
    let sum: i32 = items
        .iter()
        .enumerate()
        .map(|(i, &v)| if i % 2 == 0 { v - 1 } else { 5 - v })
        .sum();
    Ok(f64::from(sum) * 2.5)
}

/// Raw (unweighted) NASA-TLX, 0–100.
pub fn score_nasa_tlx(items: &[f64]) -> Result<f64, QuestionnaireError> {
    check_items("NASA-TLX", items, TLX_ITEMS, 0.0, 100.0)?;
    Ok(items.iter().sum::<f64>() / TLX_ITEMS as f64)
}

/// UEQ attractiveness, pragmatic and hedonic quality, each in [-3, 3].
/// Pragmatic and hedonic are means over all their items rather than means
/// of scale means.
pub fn score_ueq(items: &[i32], key: &UeqKey) -> Result<UeqScores, QuestionnaireError> {
    check_items("UEQ", &as_f64(items), UEQ_ITEMS, 1.0, 7.0)?;
    key.check()?;
    let mut att = (0i32, 0usize);
    let mut prag = (0i32, 0usize);
    let mut hed = (0i32, 0usize);
    for entry in &key.items {
        let v = (items[entry.item - 1] - 4) * i32::from(entry.polarity);
        let bucket = if entry.scale == UeqScale::Attractiveness {
            &mut att
        } else if entry.scale.is_pragmatic() {
            &mut prag
        } else {
            &mut hed
        };
        bucket.0 += v;
        bucket.1 += 1;
    }
    let mean = |(s, n): (i32, usize)| f64::from(s) / n as f64;
    Ok(UeqScores {
        attractiveness: mean(att),
        pragmatic: mean(prag),
        hedonic: mean(hed),
    })
}

/// Mean of each of the six base scales, in [`UeqScale::ALL`] order.
pub fn ueq_scale_means(items: &[i32], key: &UeqKey) -> Result<[f64; 6], QuestionnaireError> {
    check_items("UEQ", &as_f64(items), UEQ_ITEMS, 1.0, 7.0)?;
    key.check()?;
    let mut out = [0.0; 6];
    for (slot, scale) in out.iter_mut().zip(UeqScale::ALL) {
        let values: Vec<i32> = key
            .items
            .iter()
            .filter(|e| e.scale == scale)
            .map(|e| (items[e.item - 1] - 4) * i32::from(e.polarity))
            .collect();
        *slot = f64::from(values.iter().sum::<i32>()) / values.len() as f64;
    }
    Ok(out)
}

/// Score a session's questionnaire block with the shipped UEQ key.
pub fn score_block(block: &Questionnaires) -> Result<QuestionnaireScores, QuestionnaireError> {
    let ueq = score_ueq(&block.ueq, UeqKey::standard())?;
    Ok(QuestionnaireScores {
        sus: score_sus(&block.sus)?,
        nasa_tlx: score_nasa_tlx(&as_f64(&block.nasa_tlx))?,
        ueq_attractiveness: ueq.attractiveness,
        ueq_pragmatic: ueq.pragmatic,
        ueq_hedonic: ueq.hedonic,
    })
}
