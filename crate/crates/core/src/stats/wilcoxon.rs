//! Wilcoxon signed-rank test and the matched-pairs rank-biserial
//! correlation.
//!
//! Zero differences are dropped before ranking. With at most
//! [`EXACT_MAX_N`] non-zero differences the two-sided p-value comes from the
//! exact permutation distribution of W⁺ under random signs, built by dynamic
//! programming over doubled mid-ranks (so ties stay integral). Larger samples
//! use the normal approximation with continuity and tie corrections.

use super::dist::normal_two_sided;
use super::rank::{mid_ranks, tie_term};
use super::{domain, require_finite, EffectKind, Method, StatResult, StatsError};

pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct SignedRanks {
    pub w_plus: f64,
    pub w_minus: f64,
    pub n: usize,
    /// Mid-ranks of |d| doubled, so every entry is an integer.
    pub doubled_ranks: Vec<u32>,
    pub tie_term: f64,
}

pub fn signed_ranks(differences: &[f64]) -> SignedRanks {
    let nonzero: Vec<f64> = differences.iter().copied().filter(|d| *d != 0.0).collect();
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = mid_ranks(&abs);
    let (mut w_plus, mut w_minus) = (0.0, 0.0);
    for (d, r) in nonzero.iter().zip(&ranks) {
        if *d > 0.0 {
            w_plus += r;
        } else {
            w_minus += r;
        }
    }
    SignedRanks {
        w_plus,
        w_minus,
        n: nonzero.len(),
        doubled_ranks: ranks.iter().map(|r| (2.0 * r).round() as u32).collect(),
        tie_term: tie_term(&abs),
    }
}

/// Exact two-sided p-value for an observed W⁺ (given doubled).
pub fn exact_p(doubled_ranks: &[u32], w_plus_doubled: u32) -> f64 {
    let total: u32 = doubled_ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    let w = w_plus_doubled as usize;
    let lower: u64 = counts[..=w.min(total as usize)].iter().sum();
    let upper: u64 = counts[w.min(total as usize + 1)..].iter().sum();
    let patterns = 2f64.powi(doubled_ranks.len() as i32);
    (2.0 * lower.min(upper) as f64 / patterns).min(1.0)
}

/// Normal-approximation z for W⁺ with continuity and tie corrections.
pub fn normal_z(sr: &SignedRanks) -> f64 {
    let n = sr.n as f64;
    let mean = n * (n + 1.0) / 4.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - sr.tie_term / 48.0;
    let diff = sr.w_plus - mean;
    let cc = if diff.abs() >= 0.5 { 0.5 * diff.signum() } else { diff };
    (diff - cc) / var.sqrt()
}

fn signed_rank_p(sr: &SignedRanks) -> (f64, f64, bool) {
    let z = normal_z(sr);
    if sr.n <= EXACT_MAX_N {
        let w2 = (2.0 * sr.w_plus).round() as u32;
        (exact_p(&sr.doubled_ranks, w2), z, true)
    } else {
        (normal_two_sided(z), z, false)
    }
}

/// One-sample signed-rank test of `x` against `benchmark`. The statistic is
/// W⁺; z is positive when values tend to lie above the benchmark and the
/// effect size is r = z / √n.
pub fn wilcoxon_signed_rank(x: &[f64], benchmark: f64) -> Result<StatResult, StatsError> {
    require_finite("x", x)?;
    if !benchmark.is_finite() {
        return Err(domain("benchmark must be finite"));
    }
    let d: Vec<f64> = x.iter().map(|v| v - benchmark).collect();
    let sr = signed_ranks(&d);
    if sr.n == 0 {
        return Err(StatsError::Degenerate("all differences are zero".into()));
    }
    let (p, z, exact) = signed_rank_p(&sr);
    Ok(StatResult::new(Method::WilcoxonSignedRank, sr.w_plus, p, sr.n)
        .with_z(z)
        .with_effect(EffectKind::R, z / (sr.n as f64).sqrt())
        .with_notes(format!(
            "W- = {}; {} p",
            sr.w_minus,
            if exact { "exact" } else { "normal-approximation" }
        )))
}

/// Matched-pairs rank-biserial correlation (W⁺ − W⁻)/(W⁺ + W⁻) on a − b,
/// with the paired signed-rank p-value.
pub fn rank_biserial(a: &[f64], b: &[f64]) -> Result<StatResult, StatsError> {
    if a.len() != b.len() {
        return Err(domain(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    require_finite("a", a)?;
    require_finite("b", b)?;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let sr = signed_ranks(&d);
    if sr.n == 0 {
        return Err(StatsError::Degenerate("all differences are zero".into()));
    }
    let r = (sr.w_plus - sr.w_minus) / (sr.w_plus + sr.w_minus);
    let (p, z, _) = signed_rank_p(&sr);
    Ok(StatResult::new(Method::RankBiserial, sr.w_plus, p, sr.n)
        .with_z(z)
        .with_effect(EffectKind::RankBiserial, r))
}
