//! Two-way random-effects intraclass correlation, absolute agreement.

use serde::{Deserialize, Serialize};

use super::dist::{f_quantile, f_sf};
use super::{domain, Method, StatResult, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IccResult {
    /// ICC(2,1).
    pub icc_single: f64,
    /// ICC(2,k).
    pub icc_average: f64,
    pub k: usize,
    pub n: usize,
    pub ms_subjects: f64,
    pub ms_sessions: f64,
    pub ms_residual: f64,
    pub var_subject: f64,
    pub var_session: f64,
    pub var_residual: f64,
    /// Set when the raw estimate was negative and truncated to zero.
    pub var_subject_truncated: bool,
    pub var_session_truncated: bool,
    /// var_subject over all three components.
    pub between_person_share: f64,
    /// var_subject over subject plus residual, ignoring the session term.
    pub between_person_share_excl_session: f64,
    /// 95% F-based intervals; absent when the estimate sits on a boundary.
    pub ci_single: Option<(f64, f64)>,
    pub ci_average: Option<(f64, f64)>,
    /// F = MS_subjects / MS_residual test of zero subject variance.
    pub f_test: StatResult,
}

/// Spearman–Brown step-up of a single-measure reliability to `k` measures.
pub fn spearman_brown(single: f64, k: f64) -> f64 {
    k * single / (1.0 + (k - 1.0) * single)
}

pub fn icc_two_way(matrix: &[Vec<f64>]) -> Result<IccResult, StatsError> {
    let n = matrix.len();
    if n < 2 {
        return Err(domain(format!("need at least 2 subjects, got {n}")));
    }
    let k = matrix[0].len();
    if k < 2 {
        return Err(domain(format!("need at least 2 sessions, got {k}")));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != k {
            return Err(domain(format!(
                "incomplete matrix: subject {} has {} of {k} sessions",
                i + 1,
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(domain(format!(
                "incomplete matrix: missing value at subject {}, session {}",
                i + 1,
                j + 1
            )));
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let grand = matrix.iter().flatten().sum::<f64>() / (nf * kf);
    let row_means: Vec<f64> = matrix.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let col_means: Vec<f64> = (0..k)
        .map(|j| matrix.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    let ss_rows = kf * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_cols = nf * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut ss_err = 0.0;
    for (i, row) in matrix.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            ss_err += (v - row_means[i] - col_means[j] + grand).powi(2);
        }
    }
    let df_rows = nf - 1.0;
    let df_cols = kf - 1.0;
    let df_err = df_rows * df_cols;
    let msr = ss_rows / df_rows;
    let msc = ss_cols / df_cols;
    let mse = ss_err / df_err;

    let denom_single = msr + (kf - 1.0) * mse + kf / nf * (msc - mse);
    let denom_average = msr + (msc - mse) / nf;
    if denom_single <= 0.0 || denom_average <= 0.0 {
        return Err(StatsError::Degenerate(
            "ICC denominator is not positive".into(),
        ));
    }
    let icc_single = (msr - mse) / denom_single;
    let icc_average = (msr - mse) / denom_average;

    let raw_subject = (msr - mse) / kf;
    let raw_session = (msc - mse) / nf;
    let var_subject = raw_subject.max(0.0);
    let var_session = raw_session.max(0.0);
    let var_residual = mse;
    let total = var_subject + var_session + var_residual;
    let share = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };

    let ci_single = confidence_interval(icc_single, n, k, msr, msc, mse);
    let ci_average = ci_single.map(|(lo, hi)| (spearman_brown(lo, kf), spearman_brown(hi, kf)));

    let f = if mse > 0.0 { msr / mse } else { f64::INFINITY };
    let f_test = StatResult::new(Method::IccF, f, f_sf(f, df_rows, df_err), n)
        .with_df(df_rows, Some(df_err));

    Ok(IccResult {
        icc_single,
        icc_average,
        k,
        n,
        ms_subjects: msr,
        ms_sessions: msc,
        ms_residual: mse,
        var_subject,
        var_session,
        var_residual,
        var_subject_truncated: raw_subject < 0.0,
        var_session_truncated: raw_session < 0.0,
        between_person_share: share(var_subject, total),
        between_person_share_excl_session: share(var_subject, var_subject + var_residual),
        ci_single,
        ci_average,
        f_test,
    })
}

/// 95% interval for ICC(2,1) with Satterthwaite degrees of freedom.
fn confidence_interval(
    icc: f64,
    n: usize,
    k: usize,
    msr: f64,
    msc: f64,
    mse: f64,
) -> Option<(f64, f64)> {
    if !(icc > -1.0 && icc < 1.0) || mse <= 0.0 {
        return None;
    }
    let (nf, kf) = (n as f64, k as f64);
    let a = kf * icc / (nf * (1.0 - icc));
    let b = 1.0 + kf * icc * (nf - 1.0) / (nf * (1.0 - icc));
    let v = (a * msc + b * mse).powi(2)
        / ((a * msc).powi(2) / (kf - 1.0) + (b * mse).powi(2) / ((nf - 1.0) * (kf - 1.0)));
    if !v.is_finite() || v <= 0.0 {
        return None;
    }
    let f_upper = f_quantile(0.975, nf - 1.0, v);
    let f_lower = f_quantile(0.975, v, nf - 1.0);
    let c = kf * msc + (kf * nf - kf - nf) * mse;
    let lo = nf * (msr - f_upper * mse) / (f_upper * c + nf * msr);
    let hi = nf * (f_lower * msr - mse) / (c + nf * f_lower * msr);
    Some((lo, hi))
}
