//! Statistical battery: rank correlations, signed-rank tests, nonparametric
//! effect sizes, intraclass correlation, least squares and aligned rank
//! transform ANOVA.
//!
//! Every test reports through [`StatResult`]. Ties are handled with
//! mid-ranks throughout.

pub mod art;
pub mod correlation;
pub mod dist;
pub mod effects;
pub mod icc;
pub mod ols;
pub mod rank;
pub mod wilcoxon;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use art::{art_anova, ArtData, ArtEffect, ArtTable, Factor, FactorKind};
pub use correlation::{pearson, spearman_rho};
pub use effects::{cliffs_delta, holm_adjust, kendalls_w, kruskal_epsilon_sq};
pub use icc::{icc_two_way, IccResult};
pub use ols::{nested_model_compare, ols_fit, Design, OlsFit};
pub use wilcoxon::{rank_biserial, wilcoxon_signed_rank};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("{0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("singular design: dependent column(s) {0:?}")]
    SingularDesign(Vec<String>),
    #[error("unbalanced design: {0}")]
    Unbalanced(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> StatsError {
    StatsError::Domain(msg.into())
}

pub(crate) fn require_finite(name: &str, values: &[f64]) -> Result<(), StatsError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(domain(format!("{name} contains non-finite values")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Spearman,
    Pearson,
    WilcoxonSignedRank,
    RankBiserial,
    CliffsDelta,
    KruskalWallis,
    KendallsW,
    OlsOverall,
    NestedF,
    ArtAnova,
    ArtContrast,
    IccF,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EffectKind {
    #[serde(rename = "rho")]
    Rho,
    #[serde(rename = "r")]
    R,
    #[serde(rename = "r_rb")]
    RankBiserial,
    #[serde(rename = "cliffs_delta")]
    CliffsDelta,
    #[serde(rename = "epsilon_sq")]
    EpsilonSq,
    #[serde(rename = "kendalls_w")]
    KendallsW,
    R2,
    #[serde(rename = "delta_R2")]
    DeltaR2,
}

impl EffectKind {
    /// Admissible range of the effect-size value.
    pub fn range(self) -> (f64, f64) {
        match self {
            EffectKind::Rho
            | EffectKind::R
            | EffectKind::RankBiserial
            | EffectKind::CliffsDelta => (-1.0, 1.0),
            EffectKind::EpsilonSq | EffectKind::KendallsW | EffectKind::R2 => (0.0, 1.0),
            EffectKind::DeltaR2 => (0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub kind: EffectKind,
    pub value: f64,
}

/// Uniform envelope for every test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub method: Method,
    pub statistic: f64,
    /// Standard-normal statistic where the test has one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub df1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub df2: Option<f64>,
    pub p_value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub effect_size: Option<EffectSize>,
    pub n: usize,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub notes: String,
}

impl StatResult {
    pub(crate) fn new(method: Method, statistic: f64, p_value: f64, n: usize) -> Self {
        StatResult {
            method,
            statistic,
            z: None,
            df1: None,
            df2: None,
            p_value: p_value.clamp(0.0, 1.0),
            effect_size: None,
            n,
            notes: String::new(),
        }
    }

    pub(crate) fn with_df(mut self, df1: f64, df2: Option<f64>) -> Self {
        self.df1 = Some(df1);
        self.df2 = df2;
        self
    }

    pub(crate) fn with_effect(mut self, kind: EffectKind, value: f64) -> Self {
        let (lo, hi) = kind.range();
        self.effect_size = Some(EffectSize {
            kind,
            value: value.clamp(lo, hi),
        });
        self
    }

    pub(crate) fn with_z(mut self, z: f64) -> Self {
        self.z = Some(z);
        self
    }

    pub(crate) fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    pub fn effect(&self) -> Option<f64> {
        self.effect_size.map(|e| e.value)
    }

    /// True when the envelope's p-value and effect size are in range.
    pub fn is_well_formed(&self) -> bool {
        let p_ok = (0.0..=1.0).contains(&self.p_value);
        let e_ok = self.effect_size.is_none_or(|e| {
            let (lo, hi) = e.kind.range();
            (lo..=hi).contains(&e.value)
        });
        p_ok && e_ok
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
