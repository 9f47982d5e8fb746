//! Ordinary least squares through a Householder QR factorization, and the
//! nested-model F test used for hierarchical regression.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dist::{f_sf, t_two_sided};
use super::{domain, require_finite, EffectKind, Method, StatResult, StatsError};

pub const INTERCEPT: &str = "(Intercept)";

/// Columns whose scaled QR diagonal falls below this are treated as
/// linearly dependent on the columns before them.
const RANK_TOL: f64 = 1e-10;

/// Named design matrix, stored column by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Design {
    /// Design with only an intercept column.
    pub fn intercept(n: usize) -> Self {
        Design {
            names: vec![INTERCEPT.to_string()],
            columns: vec![vec![1.0; n]],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn with(mut self, name: impl Into<String>, column: Vec<f64>) -> Self {
        self.names.push(name.into());
        self.columns.push(column);
        self
    }

    /// Treatment (dummy) coding of a categorical variable: one 0/1 column per
    /// non-reference level, named `prefix[level – reference]`.
    pub fn with_treatment(mut self, prefix: &str, values: &[&str], reference: &str) -> Self {
        let mut levels: Vec<&str> = Vec::new();
        for v in values {
            if *v != reference && !levels.contains(v) {
                levels.push(v);
            }
        }
        levels.sort_unstable();
        for level in levels {
            self.names.push(format!("{prefix} [{level} – {reference}]"));
            self.columns
                .push(values.iter().map(|v| f64::from(u8::from(*v == level))).collect());
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
    pub f_p_value: f64,
    pub df_model: f64,
    pub df_resid: f64,
    pub n: usize,
    pub rss: f64,
    pub tss: f64,
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub response: Vec<f64>,
}

impl OlsFit {
    pub fn coefficient(&self, name: &str) -> Option<(f64, f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.coefficients[i], self.std_errors[i], self.p_values[i]))
    }

    /// Overall model F test as a [`StatResult`].
    pub fn overall(&self) -> StatResult {
        StatResult::new(Method::OlsOverall, self.f_statistic, self.f_p_value, self.n)
            .with_df(self.df_model, Some(self.df_resid))
            .with_effect(EffectKind::R2, self.r_squared)
    }
}

pub(crate) struct QrSolution {
    pub beta: Vec<f64>,
    pub rss: f64,
    pub residuals: Vec<f64>,
    /// Diagonal of (XᵀX)⁻¹.
    pub inv_diag: Vec<f64>,
}

/// Least squares of `y` on `columns`. Errors name the dependent columns.
pub(crate) fn qr_solve(
    names: &[String],
    columns: &[Vec<f64>],
    y: &[f64],
) -> Result<QrSolution, StatsError> {
    let n = y.len();
    let p = columns.len();
    let norms: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let x = DMatrix::from_fn(n, p, |i, j| {
        if norms[j] > 0.0 {
            columns[j][i] / norms[j]
        } else {
            0.0
        }
    });
    let qr = x.qr();
    let r = qr.r();
    let dependent: Vec<String> = (0..p)
        .filter(|&j| norms[j] == 0.0 || r[(j, j)].abs() < RANK_TOL)
        .map(|j| names[j].clone())
        .collect();
    if !dependent.is_empty() {
        return Err(StatsError::SingularDesign(dependent));
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let scaled = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| StatsError::SingularDesign(names.to_vec()))?;
    let beta: Vec<f64> = (0..p).map(|j| scaled[j] / norms[j]).collect();
    let mut residuals = y.to_vec();
    for (j, col) in columns.iter().enumerate() {
        for (res, v) in residuals.iter_mut().zip(col) {
            *res -= beta[j] * v;
        }
    }
    let rss = residuals.iter().map(|e| e * e).sum();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| StatsError::SingularDesign(names.to_vec()))?;
    let inv_diag = (0..p)
        .map(|j| r_inv.row(j).iter().map(|v| v * v).sum::<f64>() / (norms[j] * norms[j]))
        .collect();
    Ok(QrSolution {
        beta,
        rss,
        residuals,
        inv_diag,
    })
}

pub fn ols_fit(design: &Design, y: &[f64]) -> Result<OlsFit, StatsError> {
    let n = y.len();
    let p = design.columns.len();
    if design.names.len() != p {
        return Err(domain("design names and columns differ in length"));
    }
    if let Some(j) = design.columns.iter().position(|c| c.len() != n) {
        return Err(domain(format!(
            "column `{}` has {} rows, response has {n}",
            design.names[j],
            design.columns[j].len()
        )));
    }
    if n <= p {
        return Err(domain(format!("need more observations ({n}) than columns ({p})")));
    }
    require_finite("response", y)?;
    for (name, col) in design.names.iter().zip(&design.columns) {
        require_finite(name, col)?;
    }
    if !design.columns.iter().any(|c| c.iter().all(|v| *v == 1.0)) {
        return Err(domain("design has no intercept column"));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if tss == 0.0 {
        return Err(StatsError::Degenerate("response is constant".into()));
    }
    let sol = qr_solve(&design.names, &design.columns, y)?;
    let df_resid = (n - p) as f64;
    let df_model = (p - 1) as f64;
    let s2 = sol.rss / df_resid;
    let std_errors: Vec<f64> = sol.inv_diag.iter().map(|d| (s2 * d).sqrt()).collect();
    let t_values: Vec<f64> = sol
        .beta
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| {
            if *se > 0.0 {
                b / se
            } else if *b == 0.0 {
                0.0
            } else {
                b.signum() * f64::INFINITY
            }
        })
        .collect();
    let p_values = t_values.iter().map(|t| t_two_sided(*t, df_resid)).collect();
    let r_squared = (1.0 - sol.rss / tss).clamp(0.0, 1.0);
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df_resid;
    let (f_statistic, f_p_value) = if p == 1 {
        (0.0, 1.0)
    } else if sol.rss == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = ((tss - sol.rss) / df_model) / (sol.rss / df_resid);
        (f, f_sf(f, df_model, df_resid))
    };
    Ok(OlsFit {
        names: design.names.clone(),
        coefficients: sol.beta,
        std_errors,
        t_values,
        p_values,
        r_squared,
        adj_r_squared,
        f_statistic,
        f_p_value,
        df_model,
        df_resid,
        n,
        rss: sol.rss,
        tss,
        residuals: sol.residuals,
        response: y.to_vec(),
    })
}

/// F test of the predictors in `full` that are absent from `reduced`.
pub fn nested_model_compare(reduced: &OlsFit, full: &OlsFit) -> Result<StatResult, StatsError> {
    if reduced.n != full.n {
        return Err(domain(format!(
            "models fitted on different samples ({} vs {})",
            reduced.n, full.n
        )));
    }
    if reduced.response != full.response {
        return Err(domain("models fitted to different responses"));
    }
    if let Some(extra) = reduced.names.iter().find(|n| !full.names.contains(n)) {
        return Err(domain(format!(
            "models are not nested: `{extra}` missing from the full model"
        )));
    }
    let q = full.names.len() - reduced.names.len();
    let df2 = full.df_resid;
    let delta = (full.r_squared - reduced.r_squared).max(0.0);
    if q == 0 {
        return Ok(StatResult::new(Method::NestedF, 0.0, 1.0, full.n)
            .with_df(0.0, Some(df2))
            .with_effect(EffectKind::DeltaR2, 0.0));
    }
    let (f, p) = if full.r_squared >= 1.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = (delta / q as f64) / ((1.0 - full.r_squared) / df2);
        (f, f_sf(f, q as f64, df2))
    };
    Ok(StatResult::new(Method::NestedF, f, p, full.n)
        .with_df(q as f64, Some(df2))
        .with_effect(EffectKind::DeltaR2, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line_has_unit_r_squared() {
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let fit = ols_fit(&Design::intercept(5).with("x", x), &y).unwrap();
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-10));
        assert_abs_diff_eq!(fit.coefficients[1], -2.0, epsilon = 1e-10);
    }

    #[test]
    fn orthogonal_response_has_zero_slope() {
        let x = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
        let y = vec![4.0, 1.0, 0.0, 1.0, 4.0];
        let fit = ols_fit(&Design::intercept(5).with("x", x), &y).unwrap();
        assert_abs_diff_eq!(fit.coefficients[1], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn hand_solved_bivariate_fixture() {
        // x = 1..5, y = (2, 4, 5, 4, 5): Sxx = 10, Sxy = 6, slope 0.6,
        // intercept 4 − 0.6·3 = 2.2, RSS = 2.4, SE(slope) = √(0.8/10).
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let y = vec![2.0, 4.0, 5.0, 4.0, 5.0];
        let fit = ols_fit(&Design::intercept(5).with("x", x), &y).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 2.2, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[1], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.rss, 2.4, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.std_errors[1], 0.08f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn dependent_columns_are_named() {
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let twice: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let design = Design::intercept(5).with("x", x).with("2x", twice);
        match ols_fit(&design, &[1.0, 3.0, 2.0, 5.0, 4.0]) {
            Err(StatsError::SingularDesign(cols)) => assert_eq!(cols, vec!["2x".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nested_comparisons() {
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let z = vec![0.3, -1.0, 0.8, 0.1, -0.4, 0.9];
        let y = vec![1.1, 1.9, 3.4, 3.9, 5.2, 5.8];
        let base = ols_fit(&Design::intercept(6).with("x", x.clone()), &y).unwrap();
        let same = nested_model_compare(&base, &base).unwrap();
        assert_eq!((same.statistic, same.p_value, same.effect()), (0.0, 1.0, Some(0.0)));
        let full = ols_fit(&Design::intercept(6).with("x", x).with("z", z), &y).unwrap();
        let cmp = nested_model_compare(&base, &full).unwrap();
        assert!(cmp.effect().unwrap() >= 0.0);
        assert_eq!(cmp.df1, Some(1.0));
        assert_eq!(cmp.df2, Some(3.0));
        assert!(nested_model_compare(&full, &base).is_err());
    }

    #[test]
    fn treatment_coding_names_contrasts() {
        let d = Design::intercept(4).with_treatment("Gender", &["F", "M", "M", "F"], "F");
        assert_eq!(d.names[1], "Gender [M – F]");
        assert_eq!(d.columns[1], vec![0.0, 1.0, 1.0, 0.0]);
    }
}
