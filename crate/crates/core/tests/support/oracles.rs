//! Independent reference computations for the statistical battery.
//!
//! Every check returns a one-line summary on success and a description of
//! the first mismatch on failure. Shared by the core integration tests and
//! the acceptance target.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use space_core::stats::{self, dist};

pub type Check = Result<String, String>;

const TIGHT: f64 = 1e-12;

fn fixture_rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + tag)
}

/// Mid-ranks by counting: rank = #smaller + (#equal + 1) / 2.
fn count_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let less = x.iter().filter(|w| *w < v).count() as f64;
            let equal = x.iter().filter(|w| *w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn close(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol || (got.is_nan() && want.is_nan()) {
        Ok(())
    } else {
        Err(format!("{what}: got {got:e}, want {want:e} (tol {tol:e})"))
    }
}

/// Exact signed-rank p-values against enumeration of all 2^n sign patterns.
pub fn wilcoxon_enumeration() -> Check {
    let mut rng = fixture_rng(1);
    let mut checked = 0;
    for fixture in 0..100 {
        let n = 1 + fixture % 12;
        // Small integer magnitudes so ties in |d| are common.
        let d: Vec<f64> = (0..n)
            .map(|_| {
                let m = rng.random_range(1..=6) as f64;
                if rng.random_bool(0.5) { m } else { -m }
            })
            .collect();
        let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
        let doubled: Vec<u64> = count_ranks(&abs).iter().map(|r| (2.0 * r) as u64).collect();
        let observed: u64 = d
            .iter()
            .zip(&doubled)
            .filter(|(v, _)| **v > 0.0)
            .map(|(_, r)| r)
            .sum();
        let (mut lower, mut upper) = (0u64, 0u64);
        for pattern in 0u32..(1 << n) {
            let w: u64 = (0..n)
                .filter(|i| pattern & (1 << i) != 0)
                .map(|i| doubled[i])
                .sum();
            if w <= observed {
                lower += 1;
            }
            if w >= observed {
                upper += 1;
            }
        }
        let want = (2.0 * lower.min(upper) as f64 / (1u64 << n) as f64).min(1.0);
        let benchmark = 50.0;
        let x: Vec<f64> = d.iter().map(|v| v + benchmark).collect();
        let got = stats::wilcoxon_signed_rank(&x, benchmark).map_err(|e| e.to_string())?;
        if got.p_value != want {
            return Err(format!("fixture {fixture} (n = {n}, d = {d:?}): p {} vs enumeration {want}", got.p_value));
        }
        if got.statistic * 2.0 != observed as f64 {
            return Err(format!("fixture {fixture}: W+ {} vs {}", got.statistic, observed as f64 / 2.0));
        }
        checked += 1;
    }
    Ok(format!("{checked} fixtures, n = 1..12, exact match"))
}

fn small_sample(rng: &mut ChaCha8Rng, n: usize, ties: bool) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if ties {
                rng.random_range(0..5) as f64
            } else {
                rng.random::<f64>() * 10.0
            }
        })
        .collect()
}

/// Cliff's δ against the rank-sum identity δ = 2U/(n_a n_b) − 1.
pub fn cliffs_delta_brute() -> Check {
    let mut rng = fixture_rng(2);
    for fixture in 0..200 {
        let na = rng.random_range(1..=10);
        let nb = rng.random_range(1..=10);
        let ties = fixture % 2 == 0;
        let a = small_sample(&mut rng, na, ties);
        let b = small_sample(&mut rng, nb, ties);
        let pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
        let ra: f64 = count_ranks(&pooled)[..na].iter().sum();
        let u = ra - (na * (na + 1)) as f64 / 2.0;
        let want = 2.0 * u / (na * nb) as f64 - 1.0;
        let got = stats::cliffs_delta(&a, &b).map_err(|e| e.to_string())?;
        close(&format!("cliffs fixture {fixture}"), got.statistic, want, TIGHT)?;
    }
    Ok("200 fixtures within 1e-12".into())
}

fn pearson_plain(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Spearman ρ against Σd² without ties and Pearson-on-mid-ranks with ties.
pub fn spearman_brute() -> Check {
    let mut rng = fixture_rng(3);
    for fixture in 0..200 {
        let n = rng.random_range(3..=10);
        let ties = fixture % 2 == 1;
        let x = small_sample(&mut rng, n, ties);
        let y = small_sample(&mut rng, n, ties);
        let (rx, ry) = (count_ranks(&x), count_ranks(&y));
        if rx.iter().all(|r| *r == rx[0]) || ry.iter().all(|r| *r == ry[0]) {
            continue;
        }
        let want = if ties {
            pearson_plain(&rx, &ry)
        } else {
            let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
            let nf = n as f64;
            1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0))
        };
        let got = stats::spearman_rho(&x, &y).map_err(|e| e.to_string())?;
        close(&format!("spearman fixture {fixture}"), got.statistic, want, TIGHT)?;
    }
    Ok("200 fixtures within 1e-12".into())
}

/// Kendall's W against the Friedman χ² relation (untied) and the explicit
/// tie-corrected formula written out per rater (tied).
pub fn kendalls_w_brute() -> Check {
    let mut rng = fixture_rng(4);
    for fixture in 0..200 {
        let m = rng.random_range(2..=6);
        let n = rng.random_range(2..=10);
        let ties = fixture % 2 == 1;
        let matrix: Vec<Vec<f64>> = (0..m).map(|_| small_sample(&mut rng, n, ties)).collect();
        let ranks: Vec<Vec<f64>> = matrix.iter().map(|r| count_ranks(r)).collect();
        let (mf, nf) = (m as f64, n as f64);
        let col: Vec<f64> = (0..n).map(|j| ranks.iter().map(|r| r[j]).sum()).collect();
        let want = if ties {
            let mean = mf * (nf + 1.0) / 2.0;
            let s: f64 = col.iter().map(|c| (c - mean).powi(2)).sum();
            let mut t = 0.0;
            for row in &matrix {
                let mut seen: Vec<f64> = Vec::new();
                for v in row {
                    if !seen.contains(v) {
                        seen.push(*v);
                        let g = row.iter().filter(|w| *w == v).count() as f64;
                        t += g * g * g - g;
                    }
                }
            }
            let denom = mf * mf * (nf * nf * nf - nf) - mf * t;
            if denom <= 0.0 {
                continue;
            }
            12.0 * s / denom
        } else {
            let friedman = 12.0 / (mf * nf * (nf + 1.0)) * col.iter().map(|c| c * c).sum::<f64>()
                - 3.0 * mf * (nf + 1.0);
            friedman / (mf * (nf - 1.0))
        };
        let got = stats::kendalls_w(&matrix).map_err(|e| e.to_string())?;
        close(&format!("kendall fixture {fixture}"), got.statistic, want.clamp(0.0, 1.0), TIGHT)?;
    }
    Ok("200 fixtures within 1e-12".into())
}

/// ε² against H written as a ratio of rank variances, which absorbs the
/// tie correction.
pub fn epsilon_sq_brute() -> Check {
    let mut rng = fixture_rng(5);
    for fixture in 0..200 {
        let k = rng.random_range(3..=4);
        let ties = fixture % 2 == 1;
        let groups: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let n = rng.random_range(2..=3);
                small_sample(&mut rng, n, ties)
            })
            .collect();
        let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
        let ranks = count_ranks(&pooled);
        let n = pooled.len() as f64;
        let grand = ranks.iter().sum::<f64>() / n;
        let total: f64 = ranks.iter().map(|r| (r - grand).powi(2)).sum();
        if total == 0.0 {
            continue;
        }
        let mut between = 0.0;
        let mut offset = 0;
        for g in &groups {
            let m = ranks[offset..offset + g.len()].iter().sum::<f64>() / g.len() as f64;
            between += g.len() as f64 * (m - grand).powi(2);
            offset += g.len();
        }
        let h = (n - 1.0) * between / total;
        let got = stats::kruskal_epsilon_sq(&groups).map_err(|e| e.to_string())?;
        close(&format!("H fixture {fixture}"), got.statistic, h, 1e-11)?;
        close(&format!("epsilon fixture {fixture}"), got.effect().unwrap(), h / (n - 1.0), TIGHT)?;
    }
    Ok("200 fixtures within 1e-12".into())
}

/// Holm against its definition: adjusted p_(i) = max over j ≤ i of
/// min(1, (m − j + 1) p_(j)).
pub fn holm_brute() -> Check {
    let mut rng = fixture_rng(6);
    for fixture in 0..200 {
        let m = rng.random_range(1..=10);
        let p: Vec<f64> = (0..m).map(|_| rng.random::<f64>().powi(3)).collect();
        let got = stats::holm_adjust(&p).map_err(|e| e.to_string())?;
        for i in 0..m {
            let want = (0..m)
                .filter(|&j| p[j] <= p[i])
                .map(|j| {
                    let rank_j = p.iter().filter(|q| **q < p[j]).count();
                    ((m - rank_j) as f64 * p[j]).min(1.0)
                })
                .fold(0.0, f64::max);
            close(&format!("holm fixture {fixture}[{i}]"), got[i], want, TIGHT)?;
        }
    }
    Ok("200 fixtures within 1e-12".into())
}

fn reference() -> Value {
    serde_json::from_str(include_str!("../data/dist_reference.json")).expect("reference grid")
}

fn rows<'a>(v: &'a Value, key: &str) -> impl Iterator<Item = Vec<f64>> + 'a {
    v[key]
        .as_array()
        .expect("grid rows")
        .iter()
        .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
}

/// F, t and χ² tails and the underlying incomplete functions against a
/// 50-digit mpmath grid.
pub fn distribution_tails() -> Check {
    let grid = reference();
    let tol = 1e-10;
    let mut count = 0;
    for r in rows(&grid, "f_sf") {
        close(&format!("F sf {r:?}"), dist::f_sf(r[0], r[1], r[2]), r[3], tol)?;
        count += 1;
    }
    for r in rows(&grid, "t_two_sided") {
        close(&format!("t {r:?}"), dist::t_two_sided(r[0], r[1]), r[2], tol)?;
        count += 1;
    }
    for r in rows(&grid, "chi2_sf") {
        close(&format!("chi2 {r:?}"), dist::chi2_sf(r[0], r[1]), r[2], tol)?;
        count += 1;
    }
    for r in rows(&grid, "beta_inc") {
        close(&format!("I_x {r:?}"), dist::beta_inc(r[0], r[1], r[2]), r[3], tol)?;
        count += 1;
    }
    for r in rows(&grid, "gamma_p") {
        close(&format!("P(a, x) {r:?}"), dist::gamma_p(r[0], r[1]), r[2], tol)?;
        count += 1;
    }
    Ok(format!("{count} grid points within 1e-10"))
}

/// ICC mean squares from the total-SS decomposition, and ICC(2,k) as the
/// Spearman–Brown step-up of ICC(2,1), on random matrices.
pub fn icc_identities() -> Check {
    let mut rng = fixture_rng(7);
    let mut checked = 0;
    for fixture in 0..300 {
        let n = rng.random_range(3..=40);
        let k = rng.random_range(2..=5);
        let spread = rng.random::<f64>() * 3.0;
        let m: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let person = rng.random::<f64>() * spread;
                (0..k).map(|j| person + j as f64 * 0.1 + rng.random::<f64>()).collect()
            })
            .collect();
        let Ok(got) = stats::icc_two_way(&m) else { continue };
        let (nf, kf) = (n as f64, k as f64);
        let all: Vec<f64> = m.iter().flatten().copied().collect();
        let grand = all.iter().sum::<f64>() / (nf * kf);
        let ss_total: f64 = all.iter().map(|v| (v - grand).powi(2)).sum();
        let ss_rows: f64 = m.iter().map(|r| kf * (r.iter().sum::<f64>() / kf - grand).powi(2)).sum();
        let ss_cols: f64 = (0..k)
            .map(|j| nf * (m.iter().map(|r| r[j]).sum::<f64>() / nf - grand).powi(2))
            .sum();
        let msr = ss_rows / (nf - 1.0);
        let msc = ss_cols / (kf - 1.0);
        let mse = (ss_total - ss_rows - ss_cols) / ((nf - 1.0) * (kf - 1.0));
        let single = (msr - mse) / (msr + (kf - 1.0) * mse + kf * (msc - mse) / nf);
        close(&format!("ICC(2,1) fixture {fixture}"), got.icc_single, single, 1e-9)?;
        close(&format!("MSE fixture {fixture}"), got.ms_residual, mse, 1e-9)?;
        close(
            &format!("Spearman-Brown fixture {fixture}"),
            got.icc_average,
            stats::icc::spearman_brown(got.icc_single, kf),
            1e-9,
        )?;
        checked += 1;
    }
    Ok(format!("{checked} random matrices within 1e-9"))
}

pub fn all() -> Vec<(&'static str, Check)> {
    vec![
        ("wilcoxon exact p vs enumeration", wilcoxon_enumeration()),
        ("cliff's delta vs rank-sum identity", cliffs_delta_brute()),
        ("spearman rho vs hand formula", spearman_brute()),
        ("kendall's W vs Friedman relation", kendalls_w_brute()),
        ("epsilon squared vs rank variance ratio", epsilon_sq_brute()),
        ("holm vs definition", holm_brute()),
        ("F/t/chi2 tails vs mpmath grid", distribution_tails()),
        ("ICC sums of squares and Spearman-Brown", icc_identities()),
    ]
}
