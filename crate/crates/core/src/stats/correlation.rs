//! Pearson and Spearman correlation.

use super::dist::t_two_sided;
use super::rank::mid_ranks;
use super::{domain, require_finite, EffectKind, Method, StatResult, StatsError};

fn pearson_raw(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn check_pairs(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(domain(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(domain(format!("need at least 3 pairs, got {}", x.len())));
    }
    require_finite("x", x)?;
    require_finite("y", y)
}

fn correlation_result(method: Method, kind: EffectKind, r: f64, n: usize) -> StatResult {
    let df = (n - 2) as f64;
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        t_two_sided(t, df)
    };
    StatResult::new(method, r, p, n)
        .with_df(df, None)
        .with_effect(kind, r)
}

/// Product-moment correlation with a t-test p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<StatResult, StatsError> {
    check_pairs(x, y)?;
    let r = pearson_raw(x, y).ok_or_else(|| StatsError::Degenerate("zero variance".into()))?;
    Ok(correlation_result(Method::Pearson, EffectKind::R, r, x.len()))
}

/// Spearman's ρ: Pearson correlation of mid-ranks, p from the t
/// approximation with n-2 degrees of freedom.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<StatResult, StatsError> {
    check_pairs(x, y)?;
    let rx = mid_ranks(x);
    let ry = mid_ranks(y);
    let rho = pearson_raw(&rx, &ry)
        .ok_or_else(|| StatsError::Degenerate("zero rank variance".into()))?;
    Ok(correlation_result(
        Method::Spearman,
        EffectKind::Rho,
        rho,
        x.len(),
    ))
}
