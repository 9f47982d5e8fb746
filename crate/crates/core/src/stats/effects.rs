//! Nonparametric effect sizes with their companion tests, and Holm's
//! step-down adjustment.

use super::dist::{chi2_sf, normal_two_sided};
use super::rank::{mid_ranks, tie_term};
use super::{domain, require_finite, EffectKind, Method, StatResult, StatsError};

/// Cliff's δ = P(a > b) − P(a < b). The p-value is the Mann–Whitney normal
/// approximation with tie and continuity corrections.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<StatResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(domain("both groups must be non-empty"));
    }
    require_finite("a", a)?;
    require_finite("b", b)?;
    let mut dominance: i64 = 0;
    for x in a {
        for y in b {
            if x > y {
                dominance += 1;
            } else if x < y {
                dominance -= 1;
            }
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let delta = dominance as f64 / (na * nb);

    let u = (delta + 1.0) * na * nb / 2.0;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = na + nb;
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term(&pooled) / (n * (n - 1.0)));
    let diff = u - na * nb / 2.0;
    let (z, p) = if var > 0.0 && n > 1.0 {
        let cc = if diff.abs() >= 0.5 { 0.5 * diff.signum() } else { diff };
        let z = (diff - cc) / var.sqrt();
        (z, normal_two_sided(z))
    } else {
        (0.0, 1.0)
    };
    Ok(StatResult::new(Method::CliffsDelta, delta, p, a.len() + b.len())
        .with_z(z)
        .with_effect(EffectKind::CliffsDelta, delta)
        .with_notes(format!("U = {u}")))
}

/// Kruskal–Wallis H with tie correction and ε² = H / (n − 1).
pub fn kruskal_epsilon_sq(groups: &[Vec<f64>]) -> Result<StatResult, StatsError> {
    if groups.len() < 3 {
        return Err(domain(format!("need at least 3 groups, got {}", groups.len())));
    }
    if let Some(g) = groups.iter().position(|g| g.len() < 2) {
        return Err(domain(format!("group {} has fewer than 2 values", g + 1)));
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    require_finite("groups", &pooled)?;
    let n = pooled.len() as f64;
    if pooled.len() < 6 {
        return Err(domain("need at least 6 values in total"));
    }
    let k = groups.len();
    let ranks = mid_ranks(&pooled);
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let correction = 1.0 - tie_term(&pooled) / (n * n * n - n);
    let df = (k - 1) as f64;
    if correction <= 0.0 {
        return Ok(StatResult::new(Method::KruskalWallis, 0.0, 1.0, pooled.len())
            .with_df(df, None)
            .with_effect(EffectKind::EpsilonSq, 0.0)
            .with_notes("all values tied"));
    }
    let h = ((12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction).max(0.0);
    let eps = h * (n + 1.0) / (n * n - 1.0);
    Ok(StatResult::new(Method::KruskalWallis, h, chi2_sf(h, df), pooled.len())
        .with_df(df, None)
        .with_effect(EffectKind::EpsilonSq, eps))
}

/// Kendall's coefficient of concordance for `m` raters (rows) ranking `n`
/// items (columns), tie-corrected, with the χ² approximation.
pub fn kendalls_w(matrix: &[Vec<f64>]) -> Result<StatResult, StatsError> {
    let m = matrix.len();
    if m < 2 {
        return Err(domain("need at least 2 raters"));
    }
    let n = matrix[0].len();
    if n < 2 {
        return Err(domain("need at least 2 items"));
    }
    if matrix.iter().any(|row| row.len() != n) {
        return Err(domain("rows have different lengths"));
    }
    for row in matrix {
        require_finite("matrix", row)?;
    }
    let mut col_sums = vec![0.0; n];
    let mut ties = 0.0;
    for row in matrix {
        for (s, r) in col_sums.iter_mut().zip(mid_ranks(row)) {
            *s += r;
        }
        ties += tie_term(row);
    }
    let (mf, nf) = (m as f64, n as f64);
    let mean = col_sums.iter().sum::<f64>() / nf;
    let s: f64 = col_sums.iter().map(|r| (r - mean).powi(2)).sum();
    let denom = mf * mf * (nf * nf * nf - nf) - mf * ties;
    if denom <= 0.0 {
        return Err(StatsError::Degenerate("every rater ties every item".into()));
    }
    let w = (12.0 * s / denom).clamp(0.0, 1.0);
    let chi2 = mf * (nf - 1.0) * w;
    let df = nf - 1.0;
    Ok(StatResult::new(Method::KendallsW, w, chi2_sf(chi2, df), m)
        .with_df(df, None)
        .with_effect(EffectKind::KendallsW, w)
        .with_notes(format!("chi2 = {chi2}")))
}

/// Holm step-down adjustment; output is in input order.
pub fn holm_adjust(p: &[f64]) -> Result<Vec<f64>, StatsError> {
    if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(domain(format!("p-value {bad} outside [0, 1]")));
    }
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (i, &idx) in order.iter().enumerate() {
        running = running.max((m - i) as f64 * p[idx]).min(1.0);
        adjusted[idx] = running;
    }
    Ok(adjusted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cliffs_examples() {
        assert_eq!(cliffs_delta(&[10.0, 11.0], &[1.0, 2.0, 3.0]).unwrap().statistic, 1.0);
        assert_eq!(cliffs_delta(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap().statistic, 0.0);
        assert_eq!(cliffs_delta(&[1.0, 2.0], &[1.0, 3.0]).unwrap().statistic, -0.25);
        assert!(cliffs_delta(&[], &[1.0]).is_err());
    }

    #[test]
    fn kruskal_hand_fixture() {
        // Ranks: g1 = (1, 2, 3), g2 = (4, 5, 6), g3 = (7, 8, 9).
        let groups = vec![
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ];
        let r = kruskal_epsilon_sq(&groups).unwrap();
        let h = 12.0 / 90.0 * (36.0 + 225.0 + 576.0) / 3.0 - 30.0;
        assert_abs_diff_eq!(r.statistic, h, epsilon = 1e-12);
        assert_abs_diff_eq!(r.effect().unwrap(), h / 8.0, epsilon = 1e-12);
    }

    #[test]
    fn kruskal_all_tied() {
        let r = kruskal_epsilon_sq(&[vec![2.0, 2.0], vec![2.0, 2.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.effect(), Some(0.0));
        assert!(kruskal_epsilon_sq(&[vec![1.0], vec![2.0, 3.0], vec![4.0, 5.0]]).is_err());
    }

    #[test]
    fn kendall_examples() {
        let same = vec![vec![1.0, 2.0, 3.0]; 4];
        assert_abs_diff_eq!(kendalls_w(&same).unwrap().statistic, 1.0, epsilon = 1e-12);
        let latin = vec![
            vec![1.0, 2.0, 3.0],
            vec![2.0, 3.0, 1.0],
            vec![3.0, 1.0, 2.0],
        ];
        assert_abs_diff_eq!(kendalls_w(&latin).unwrap().statistic, 0.0, epsilon = 1e-12);
        assert!(matches!(
            kendalls_w(&[vec![1.0, 1.0], vec![2.0, 2.0]]),
            Err(StatsError::Degenerate(_))
        ));
    }

    #[test]
    fn holm_examples() {
        let adj = holm_adjust(&[0.01, 0.02, 0.04]).unwrap();
        for (a, e) in adj.iter().zip([0.03, 0.04, 0.04]) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-15);
        }
        assert_eq!(holm_adjust(&[0.2]).unwrap(), vec![0.2]);
        assert_eq!(holm_adjust(&[0.5, 0.9]).unwrap(), vec![1.0, 1.0]);
        assert!(holm_adjust(&[1.5]).is_err());
        assert!(holm_adjust(&[f64::NAN]).is_err());
    }
}
