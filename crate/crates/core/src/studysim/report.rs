//! Flat CSV and plain-text renderings of a [`StudyReport`].

use std::fmt::Write as _;

use super::analysis::{ArtReport, PosthocFamily, RegressionPanel, ReportEntry, StudyReport};
use crate::stats::art::Contrast;
use crate::stats::{OlsFit, StatResult};

pub const REPORT_COLUMNS: [&str; 16] = [
    "question",
    "analysis",
    "term",
    "method",
    "estimate",
    "std_error",
    "statistic",
    "z",
    "df1",
    "df2",
    "p_value",
    "p_holm",
    "effect_kind",
    "effect_size",
    "n",
    "notes",
];

/// Full-precision shortest round-trip form; report values are not snapped
/// to the log grid so that reruns can be compared exactly.
fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Default)]
struct Row {
    question: String,
    analysis: String,
    term: String,
    method: String,
    estimate: Option<f64>,
    std_error: Option<f64>,
    statistic: Option<f64>,
    z: Option<f64>,
    df1: Option<f64>,
    df2: Option<f64>,
    p_value: Option<f64>,
    p_holm: Option<f64>,
    effect_kind: String,
    effect_size: Option<f64>,
    n: Option<usize>,
    notes: String,
}

impl Row {
    fn cells(&self) -> Vec<String> {
        vec![
            self.question.clone(),
            self.analysis.clone(),
            self.term.clone(),
            self.method.clone(),
            num(self.estimate),
            num(self.std_error),
            num(self.statistic),
            num(self.z),
            num(self.df1),
            num(self.df2),
            num(self.p_value),
            num(self.p_holm),
            self.effect_kind.clone(),
            num(self.effect_size),
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            self.notes.clone(),
        ]
    }
}

fn method_name(r: &StatResult) -> String {
    serde_json::to_value(r.method)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

fn effect_kind_name(r: &StatResult) -> String {
    r.effect_size
        .and_then(|e| serde_json::to_value(e.kind).ok())
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

fn result_row(q: &str, analysis: &str, term: &str, r: &StatResult, p_holm: Option<f64>) -> Row {
    Row {
        question: q.into(),
        analysis: analysis.into(),
        term: term.into(),
        method: method_name(r),
        statistic: Some(r.statistic),
        z: r.z,
        df1: r.df1,
        df2: r.df2,
        p_value: Some(r.p_value),
        p_holm,
        effect_kind: effect_kind_name(r),
        effect_size: r.effect(),
        n: Some(r.n),
        notes: r.notes.clone(),
        ..Row::default()
    }
}

fn entry_rows(q: &str, analysis: &str, entries: &[ReportEntry], out: &mut Vec<Row>) {
    for e in entries {
        out.push(result_row(q, analysis, &e.label, &e.result, e.p_holm));
    }
}

fn contrast_term(c: &Contrast) -> String {
    match &c.within_level {
        Some(l) => format!("{} vs {} | {l}", c.level_a, c.level_b),
        None => format!("{} vs {}", c.level_a, c.level_b),
    }
}

fn contrast_rows(q: &str, analysis: &str, family: &PosthocFamily, out: &mut Vec<Row>) {
    for c in &family.contrasts {
        out.push(Row {
            question: q.into(),
            analysis: format!("{analysis} / {}", family.factor),
            term: contrast_term(c),
            method: "art_contrast".into(),
            estimate: Some(c.mean_rank_a - c.mean_rank_b),
            statistic: Some(c.t),
            df1: Some(c.df),
            p_value: Some(c.p_value),
            p_holm: Some(c.p_holm),
            effect_kind: c
                .effect_size
                .and_then(|e| serde_json::to_value(e.kind).ok())
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            effect_size: c.effect_size.map(|e| e.value),
            ..Row::default()
        });
    }
}

fn art_rows(q: &str, art: &ArtReport, out: &mut Vec<Row>) {
    for e in &art.table.effects {
        out.push(result_row(q, &art.label, &e.name, &e.result, None));
    }
    for f in &art.posthoc {
        contrast_rows(q, &art.label, f, out);
    }
}

fn fit_rows(q: &str, analysis: &str, fit: &OlsFit, out: &mut Vec<Row>) {
    for i in 0..fit.names.len() {
        out.push(Row {
            question: q.into(),
            analysis: analysis.into(),
            term: fit.names[i].clone(),
            method: "ols_coefficient".into(),
            estimate: Some(fit.coefficients[i]),
            std_error: Some(fit.std_errors[i]),
            statistic: Some(fit.t_values[i]),
            df1: Some(fit.df_resid),
            p_value: Some(fit.p_values[i]),
            n: Some(fit.n),
            ..Row::default()
        });
    }
    out.push(result_row(q, analysis, "model", &fit.overall(), None));
}

fn panel_rows(q: &str, panel: &RegressionPanel, out: &mut Vec<Row>) {
    fit_rows(q, &format!("{} / Baseline", panel.label), &panel.baseline, out);
    for m in &panel.models {
        fit_rows(q, &format!("{} / {}", panel.label, m.label), &m.fit, out);
    }
    entry_rows(q, &format!("{} / comparisons", panel.label), &panel.comparisons, out);
}

fn rows(report: &StudyReport) -> Vec<Row> {
    let mut out = Vec::new();
    if let Some(q1) = &report.q1 {
        entry_rows("Q1", "Spearman test-retest", &q1.spearman, &mut out);
        let icc = &q1.icc;
        let mut r = result_row("Q1", "ICC", "ICC(2,1)", &icc.f_test, None);
        r.estimate = Some(icc.icc_single);
        r.notes = icc
            .ci_single
            .map(|(lo, hi)| format!("95% CI [{lo}, {hi}]"))
            .unwrap_or_default();
        out.push(r);
        out.push(Row {
            question: "Q1".into(),
            analysis: "ICC".into(),
            term: "ICC(2,k)".into(),
            method: "icc_f".into(),
            estimate: Some(icc.icc_average),
            n: Some(icc.n),
            notes: icc
                .ci_average
                .map(|(lo, hi)| format!("95% CI [{lo}, {hi}]"))
                .unwrap_or_default(),
            ..Row::default()
        });
        out.push(Row {
            question: "Q1".into(),
            analysis: "ICC".into(),
            term: "between-person share".into(),
            method: "icc_f".into(),
            estimate: Some(icc.between_person_share),
            notes: format!("excluding session variance: {}", icc.between_person_share_excl_session),
            ..Row::default()
        });
        art_rows("Q1", &q1.week_art, &mut out);
    }
    if let Some(q2) = &report.q2 {
        panel_rows("Q2", &q2.panel_a, &mut out);
        panel_rows("Q2", &q2.panel_b, &mut out);
    }
    if let Some(q3) = &report.q3 {
        for b in &q3.benchmarks {
            entry_rows("Q3", &format!("{} vs benchmark {}", b.measure, b.benchmark), &b.tests, &mut out);
        }
        for a in &q3.week_arts {
            art_rows("Q3.1", a, &mut out);
        }
    }
    if let Some(q4) = &report.q4 {
        art_rows("Q4", &q4.art, &mut out);
    }
    if let Some(q5) = &report.q5 {
        art_rows("Q5", &q5.art, &mut out);
        contrast_rows("Q5", &format!("{} simple contrasts", q5.art.label), &q5.simple_contrasts, &mut out);
    }
    if let Some(q6) = &report.q6 {
        for a in &q6.arts {
            art_rows("Q6", a, &mut out);
        }
    }
    out
}

/// One CSV row per statistic, with [`REPORT_COLUMNS`] as header.
pub fn report_csv(report: &StudyReport) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(REPORT_COLUMNS).expect("in-memory write");
    for r in rows(report) {
        w.write_record(r.cells()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 cells")
}

fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// APA-style p without the leading zero.
fn p_text(p: f64) -> String {
    if p < 0.001 {
        "<.001".into()
    } else {
        let s = format!("{p:.3}");
        s.strip_prefix('0').map(String::from).unwrap_or(s)
    }
}

fn cell(fit: &OlsFit, name: &str) -> String {
    match fit.coefficient(name) {
        Some((b, se, p)) => format!("{b:.2}{} ({se:.2})", stars(p)),
        None => "-".into(),
    }
}

fn panel_text(panel: &RegressionPanel, out: &mut String) {
    let mut names: Vec<&str> = panel.baseline.names.iter().map(String::as_str).collect();
    for m in &panel.models {
        for n in &m.fit.names {
            if !names.contains(&n.as_str()) {
                names.push(n);
            }
        }
    }
    let width = names.iter().map(|n| n.chars().count()).max().unwrap_or(10) + 2;
    let _ = writeln!(out, "{}", panel.label);
    let _ = write!(out, "{:width$}{:>18}", "", "Baseline");
    for m in &panel.models {
        let _ = write!(out, "{:>18}", m.label);
    }
    out.push('\n');
    for name in &names {
        let _ = write!(out, "{name:width$}{:>18}", cell(&panel.baseline, name));
        for m in &panel.models {
            let _ = write!(out, "{:>18}", cell(&m.fit, name));
        }
        out.push('\n');
    }
    let _ = write!(out, "{:width$}{:>18}", "R2", format!("{:.2}", panel.baseline.r_squared));
    for m in &panel.models {
        let _ = write!(out, "{:>18}", format!("{:.2}", m.fit.r_squared));
    }
    out.push('\n');
    let _ = writeln!(out, "Model comparisons");
    let _ = writeln!(out, "{:24}{:>8}{:>9}{:>12}{:>8}{:>8}", "Comparison", "dR2", "F", "(df1, df2)", "p", "p_holm");
    for c in &panel.comparisons {
        let r = &c.result;
        let _ = writeln!(
            out,
            "{:24}{:>8.2}{:>9.2}{:>12}{:>8}{:>8}",
            c.label,
            r.effect().unwrap_or(0.0),
            r.statistic,
            format!("({}, {})", r.df1.unwrap_or(0.0), r.df2.unwrap_or(0.0)),
            p_text(r.p_value),
            c.p_holm.map(p_text).unwrap_or_default(),
        );
    }
    out.push('\n');
}

fn art_text(art: &ArtReport, out: &mut String) {
    let _ = writeln!(out, "{}", art.label);
    for e in &art.table.effects {
        let r = &e.result;
        let es = r
            .effect_size
            .map(|e| format!(", {} = {:.2}", effect_symbol(e.kind), e.value))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "  {}: F({}, {}) = {:.2}, p = {}{es}",
            e.name,
            r.df1.unwrap_or(0.0),
            r.df2.unwrap_or(0.0),
            r.statistic,
            p_text(r.p_value)
        );
    }
}

fn posthoc_text(art: &ArtReport, out: &mut String) {
    for family in &art.posthoc {
        for c in &family.contrasts {
            let es = c
                .effect_size
                .map(|e| format!(", {} = {:.2}", effect_symbol(e.kind), e.value))
                .unwrap_or_default();
            let _ = writeln!(out, "    {}: t({}) = {:.2}, p_holm = {}{es}", contrast_term(c), c.df, c.t, p_text(c.p_holm));
        }
    }
}

fn effect_symbol(kind: crate::stats::EffectKind) -> &'static str {
    use crate::stats::EffectKind::*;
    match kind {
        Rho => "rho",
        R => "r",
        RankBiserial => "r_rb",
        CliffsDelta => "delta",
        EpsilonSq => "eps2",
        KendallsW => "W",
        R2 => "R2",
        DeltaR2 => "dR2",
    }
}

/// Text summary: Q1 reliability, Q2 as a side-by-side
/// regression table, the Q3 benchmark tests, then the ART tables.
pub fn report_text(report: &StudyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Study report (analysis {}, seed {}, {} unsupervised, {} supervised)\n",
        report.analysis_version, report.seed, report.n_unsupervised, report.n_supervised
    );
    if let Some(q1) = &report.q1 {
        let _ = writeln!(out, "Q1: test-retest reliability");
        for s in &q1.spearman {
            let _ = writeln!(out, "  {}: rho = {:.2}, p = {}", s.label, s.result.statistic, p_text(s.result.p_value));
        }
        let icc = &q1.icc;
        let ci = icc
            .ci_single
            .map(|(lo, hi)| format!(", 95% CI [{lo:.2}, {hi:.2}]"))
            .unwrap_or_default();
        let _ = writeln!(out, "  ICC(2,1) = {:.2}{ci}; ICC(2,k) = {:.2}", icc.icc_single, icc.icc_average);
        art_text(&q1.week_art, &mut out);
        posthoc_text(&q1.week_art, &mut out);
        out.push('\n');
    }
    if let Some(q2) = &report.q2 {
        let _ = writeln!(out, "Q2: linear regression models predicting MoCA scores");
        panel_text(&q2.panel_a, &mut out);
        panel_text(&q2.panel_b, &mut out);
        let _ = writeln!(out, "Entries are coefficients with standard errors in parentheses. * p < .05, ** p < .01, *** p < .001.\n");
    }
    if let Some(q3) = &report.q3 {
        let _ = writeln!(out, "Q3: usability against benchmarks");
        for family in &q3.benchmarks {
            for t in &family.tests {
                let r = &t.result;
                let z = r.z.map(|z| format!(", z = {z:.2}")).unwrap_or_default();
                let es = r
                    .effect_size
                    .map(|e| format!(", {} = {:.2}", effect_symbol(e.kind), e.value))
                    .unwrap_or_default();
                let p = t.p_holm.unwrap_or(r.p_value);
                let _ = writeln!(out, "  {}: V = {}{z}, p_holm = {}{es}", t.label, r.statistic, p_text(p));
            }
        }
        for art in &q3.week_arts {
            art_text(art, &mut out);
            posthoc_text(art, &mut out);
        }
        out.push('\n');
    }
    if let Some(q4) = &report.q4 {
        let _ = writeln!(out, "Q4:");
        art_text(&q4.art, &mut out);
        out.push('\n');
    }
    if let Some(q5) = &report.q5 {
        let _ = writeln!(out, "Q5:");
        art_text(&q5.art, &mut out);
        for c in &q5.simple_contrasts.contrasts {
            let _ = writeln!(out, "  {}: t({}) = {:.2}, p_holm = {}", contrast_term(c), c.df, c.t, p_text(c.p_holm));
        }
        out.push('\n');
    }
    if let Some(q6) = &report.q6 {
        let _ = writeln!(out, "Q6:");
        for a in &q6.arts {
            art_text(a, &mut out);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_values_render_without_leading_zero() {
        assert_eq!(p_text(0.177), ".177");
        assert_eq!(p_text(0.0004), "<.001");
        assert_eq!(p_text(1.0), "1.000");
    }

    #[test]
    fn stars_follow_the_usual_thresholds() {
        assert_eq!(stars(0.0009), "***");
        assert_eq!(stars(0.004), "**");
        assert_eq!(stars(0.034), "*");
        assert_eq!(stars(0.05), "");
    }
}
