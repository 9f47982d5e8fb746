//! Aligned Rank Transform ANOVA for full-factorial designs with between-
//! and within-subject factors.
//!
//! For each effect the response is aligned (cell residual plus that effect's
//! inclusion–exclusion estimate from marginal means), mid-ranked, and an
//! ANOVA on the ranks reports only that effect.
//!
//! Between-only designs use a Type III test from effect-coded least squares,
//! so unequal cell sizes are handled. When within-subject factors are present
//! each subject contributes one vector of ranks over the within cells. An
//! effect's within part is projected onto orthonormal Helmert contrasts
//! (averaging over within factors not in the effect), and the projected
//! scores are tested against the between-subject design with the subject
//! residual as error. With one within factor this is the classic split-plot
//! analysis: between effects are tested on N−G degrees of freedom and within
//! effects on (N−G)(l−1).
//!
//! Factor levels are kept in order of first appearance.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::dist::{f_sf, t_two_sided};
use super::effects::{cliffs_delta, holm_adjust, kendalls_w, kruskal_epsilon_sq};
use super::ols::qr_solve;
use super::rank::mid_ranks;
use super::wilcoxon::rank_biserial;
use super::{domain, mean, EffectSize, Method, StatResult, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Between,
    Within,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub kind: FactorKind,
    /// Level of every observation.
    pub levels: Vec<String>,
}

impl Factor {
    pub fn between(name: impl Into<String>, levels: Vec<String>) -> Self {
        Factor {
            name: name.into(),
            kind: FactorKind::Between,
            levels,
        }
    }

    pub fn within(name: impl Into<String>, levels: Vec<String>) -> Self {
        Factor {
            name: name.into(),
            kind: FactorKind::Within,
            levels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtData {
    pub response: Vec<f64>,
    /// Required when any factor is within-subject.
    pub subjects: Option<Vec<String>>,
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtEffect {
    /// Factor names joined with `:`.
    pub name: String,
    pub factors: Vec<String>,
    pub result: StatResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtTable {
    pub effects: Vec<ArtEffect>,
}

impl ArtTable {
    pub fn get(&self, name: &str) -> Option<&StatResult> {
        self.effects.iter().find(|e| e.name == name).map(|e| &e.result)
    }
}

/// Pairwise comparison of two levels on aligned ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contrast {
    pub factor: String,
    /// Level of the conditioning factor for simple-effect contrasts.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub within_level: Option<String>,
    pub level_a: String,
    pub level_b: String,
    pub mean_rank_a: f64,
    pub mean_rank_b: f64,
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub p_holm: f64,
    pub effect_size: Option<EffectSize>,
}

struct Prepared<'a> {
    data: &'a ArtData,
    n: usize,
    levels: Vec<Vec<String>>,
    codes: Vec<Vec<usize>>,
    between: Vec<usize>,
    within: Vec<usize>,
    layout: Option<Layout>,
}

struct Layout {
    /// Observation index of every subject's within cells.
    subject_obs: Vec<Vec<usize>>,
    /// Representative observation per subject (for between-factor codes).
    subject_rep: Vec<usize>,
    within_cells: usize,
}

fn encode(values: &[String]) -> (Vec<String>, Vec<usize>) {
    let mut levels: Vec<String> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut codes = Vec::with_capacity(values.len());
    for v in values {
        let code = *index.entry(v.as_str()).or_insert_with(|| {
            levels.push(v.clone());
            levels.len() - 1
        });
        codes.push(code);
    }
    (levels, codes)
}

impl<'a> Prepared<'a> {
    fn new(data: &'a ArtData) -> Result<Self, StatsError> {
        let n = data.response.len();
        if data.factors.is_empty() {
            return Err(domain("no factors"));
        }
        if data.factors.len() > 8 {
            return Err(domain("at most 8 factors are supported"));
        }
        super::require_finite("response", &data.response)?;
        let mut levels = Vec::new();
        let mut codes = Vec::new();
        for f in &data.factors {
            if f.levels.len() != n {
                return Err(domain(format!(
                    "factor `{}` has {} values for {n} observations",
                    f.name,
                    f.levels.len()
                )));
            }
            let (l, c) = encode(&f.levels);
            if l.len() < 2 {
                return Err(domain(format!("factor `{}` needs at least 2 levels", f.name)));
            }
            levels.push(l);
            codes.push(c);
        }
        let between: Vec<usize> = (0..data.factors.len())
            .filter(|&i| data.factors[i].kind == FactorKind::Between)
            .collect();
        let within: Vec<usize> = (0..data.factors.len())
            .filter(|&i| data.factors[i].kind == FactorKind::Within)
            .collect();
        let mut prepared = Prepared {
            data,
            n,
            levels,
            codes,
            between,
            within,
            layout: None,
        };

        // Every full-factorial cell must be observed.
        let all: Vec<usize> = (0..data.factors.len()).collect();
        let cells = prepared.cell_count(&all);
        let mut seen = vec![false; cells];
        for i in 0..n {
            seen[prepared.cell(&all, i)] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(StatsError::Unbalanced(format!(
                "no observations in cell {}",
                prepared.describe_cell(&all, missing)
            )));
        }

        if !prepared.within.is_empty() {
            prepared.layout = Some(prepared.build_layout()?);
        }
        let first = data.response[0];
        if data.response.iter().all(|v| *v == first) {
            return Err(StatsError::Degenerate("response is constant".into()));
        }
        Ok(prepared)
    }

    fn build_layout(&self) -> Result<Layout, StatsError> {
        let subjects = self
            .data
            .subjects
            .as_ref()
            .ok_or_else(|| domain("within-subject factors require subject ids"))?;
        if subjects.len() != self.n {
            return Err(domain("subject ids and response differ in length"));
        }
        let (ids, subject_codes) = encode(subjects);
        let w_cells = self.cell_count(&self.within);
        let mut subject_obs = vec![vec![usize::MAX; w_cells]; ids.len()];
        let mut subject_rep = vec![usize::MAX; ids.len()];
        for i in 0..self.n {
            let s = subject_codes[i];
            let c = self.cell(&self.within, i);
            if subject_obs[s][c] != usize::MAX {
                return Err(StatsError::Unbalanced(format!(
                    "subject `{}` observed twice in within cell {}",
                    ids[s],
                    self.describe_cell(&self.within, c)
                )));
            }
            subject_obs[s][c] = i;
            if subject_rep[s] == usize::MAX {
                subject_rep[s] = i;
            } else {
                let r = subject_rep[s];
                for &f in &self.between {
                    if self.codes[f][i] != self.codes[f][r] {
                        return Err(domain(format!(
                            "subject `{}` changes level of between factor `{}`",
                            ids[s], self.data.factors[f].name
                        )));
                    }
                }
            }
        }
        for (s, obs) in subject_obs.iter().enumerate() {
            if let Some(c) = obs.iter().position(|&o| o == usize::MAX) {
                return Err(StatsError::Unbalanced(format!(
                    "subject `{}` missing within cell {}",
                    ids[s],
                    self.describe_cell(&self.within, c)
                )));
            }
        }
        let groups = self.cell_count(&self.between);
        if ids.len() <= groups {
            return Err(StatsError::Unbalanced(format!(
                "{} subjects leave no error degrees of freedom across {groups} between cells",
                ids.len()
            )));
        }
        Ok(Layout {
            subject_obs,
            subject_rep,
            within_cells: w_cells,
        })
    }

    fn cell_count(&self, factors: &[usize]) -> usize {
        factors.iter().map(|&f| self.levels[f].len()).product()
    }

    /// Mixed-radix cell index; the first factor varies slowest.
    fn cell(&self, factors: &[usize], obs: usize) -> usize {
        factors
            .iter()
            .fold(0, |acc, &f| acc * self.levels[f].len() + self.codes[f][obs])
    }

    fn describe_cell(&self, factors: &[usize], mut cell: usize) -> String {
        let mut parts = Vec::new();
        for &f in factors.iter().rev() {
            let l = self.levels[f].len();
            parts.push(format!(
                "{}={}",
                self.data.factors[f].name,
                self.levels[f][cell % l]
            ));
            cell /= l;
        }
        parts.reverse();
        format!("({})", parts.join(", "))
    }

    fn effects(&self) -> Vec<Vec<usize>> {
        let k = self.data.factors.len();
        let mut out: Vec<Vec<usize>> = (1u32..(1 << k))
            .map(|mask| (0..k).filter(|i| mask & (1 << i) != 0).collect())
            .collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        out
    }

    fn group_means(&self, values: &[f64], factors: &[usize]) -> (Vec<f64>, Vec<usize>) {
        let cells = self.cell_count(factors);
        let mut sums = vec![0.0; cells];
        let mut counts = vec![0usize; cells];
        for (i, v) in values.iter().enumerate() {
            let c = self.cell(factors, i);
            sums[c] += v;
            counts[c] += 1;
        }
        let means = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect();
        (means, counts)
    }

    fn align(&self, effect: &[usize]) -> Vec<f64> {
        let y = &self.data.response;
        let all: Vec<usize> = (0..self.data.factors.len()).collect();
        let (cell_means, _) = self.group_means(y, &all);
        let mut aligned: Vec<f64> = (0..self.n).map(|i| y[i] - cell_means[self.cell(&all, i)]).collect();
        let m = effect.len();
        for mask in 0u32..(1 << m) {
            let subset: Vec<usize> = (0..m)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| effect[i])
                .collect();
            let sign = if (m - subset.len()) % 2 == 0 { 1.0 } else { -1.0 };
            let (means, _) = self.group_means(y, &subset);
            for (i, a) in aligned.iter_mut().enumerate() {
                *a += sign * means[self.cell(&subset, i)];
            }
        }
        aligned
    }

    /// Effect-coded columns of the interaction of `factors` over units whose
    /// level codes are given by `code(factor, unit)`.
    fn effect_columns(
        &self,
        factors: &[usize],
        units: usize,
        code: &dyn Fn(usize, usize) -> usize,
    ) -> Vec<Vec<f64>> {
        let mut cols = vec![vec![1.0; units]];
        for &f in factors {
            let l = self.levels[f].len();
            let mut next = Vec::new();
            for base in &cols {
                for j in 0..l - 1 {
                    next.push(
                        (0..units)
                            .map(|u| {
                                let c = code(f, u);
                                let e = if c == j {
                                    1.0
                                } else if c == l - 1 {
                                    -1.0
                                } else {
                                    0.0
                                };
                                base[u] * e
                            })
                            .collect(),
                    );
                }
            }
            cols = next;
        }
        cols
    }

    /// Full effect-coded factorial design over `factors`, one block of
    /// columns per subset (the empty subset is the intercept).
    fn factorial_blocks(
        &self,
        factors: &[usize],
        units: usize,
        code: &dyn Fn(usize, usize) -> usize,
    ) -> Vec<(Vec<usize>, Vec<Vec<f64>>)> {
        let m = factors.len();
        (0u32..(1 << m))
            .map(|mask| {
                let subset: Vec<usize> = (0..m)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| factors[i])
                    .collect();
                let cols = self.effect_columns(&subset, units, code);
                (subset, cols)
            })
            .collect()
    }
}

/// Type III sum of squares of `term` and the full-model residual SS.
fn type3(
    blocks: &[(Vec<usize>, Vec<Vec<f64>>)],
    term: &[usize],
    y: &[f64],
) -> Result<(f64, f64), StatsError> {
    let mut names = Vec::new();
    let mut full = Vec::new();
    let mut reduced = Vec::new();
    let mut reduced_names = Vec::new();
    for (subset, cols) in blocks {
        for (j, c) in cols.iter().enumerate() {
            let name = format!("{subset:?}#{j}");
            if subset.as_slice() != term {
                reduced.push(c.clone());
                reduced_names.push(name.clone());
            }
            full.push(c.clone());
            names.push(name);
        }
    }
    let rss_full = qr_solve(&names, &full, y)?.rss;
    let rss_reduced = if reduced.is_empty() {
        y.iter().map(|v| v * v).sum()
    } else {
        qr_solve(&reduced_names, &reduced, y)?.rss
    };
    Ok(((rss_reduced - rss_full).max(0.0), rss_full))
}

fn helmert(l: usize) -> Vec<Vec<f64>> {
    // l × (l−1), orthonormal columns orthogonal to the ones vector.
    let mut m = vec![vec![0.0; l - 1]; l];
    for j in 1..l {
        let norm = ((j * (j + 1)) as f64).sqrt();
        for (i, row) in m.iter_mut().enumerate().take(j + 1) {
            row[j - 1] = if i < j { 1.0 / norm } else { -(j as f64) / norm };
        }
    }
    m
}

fn kron(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (ar, ac) = (a.len(), a[0].len());
    let (br, bc) = (b.len(), b[0].len());
    let mut out = vec![vec![0.0; ac * bc]; ar * br];
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[i * br + k][j * bc + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

struct EffectTest {
    ss: f64,
    ss_err: f64,
    df: f64,
    df_err: f64,
}

impl EffectTest {
    fn f(&self) -> f64 {
        if self.ss_err > 0.0 {
            (self.ss / self.df) / (self.ss_err / self.df_err)
        } else if self.ss > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
    fn mse(&self) -> f64 {
        self.ss_err / self.df_err
    }
}

fn test_effect(p: &Prepared, effect: &[usize], ranks: &[f64]) -> Result<EffectTest, StatsError> {
    let df_of = |fs: &[usize]| -> usize { fs.iter().map(|&f| p.levels[f].len() - 1).product() };
    match &p.layout {
        None => {
            let code = |f: usize, u: usize| p.codes[f][u];
            let all: Vec<usize> = (0..p.data.factors.len()).collect();
            let blocks = p.factorial_blocks(&all, p.n, &code);
            let (ss, ss_err) = type3(&blocks, effect, ranks)?;
            let cells = p.cell_count(&all);
            Ok(EffectTest {
                ss,
                ss_err,
                df: df_of(effect) as f64,
                df_err: (p.n - cells) as f64,
            })
        }
        Some(layout) => {
            let eff_b: Vec<usize> = effect.iter().copied().filter(|f| p.between.contains(f)).collect();
            let eff_w: Vec<usize> = effect.iter().copied().filter(|f| p.within.contains(f)).collect();
            let mut contrast: Vec<Vec<f64>> = vec![vec![1.0]];
            for &f in &p.within {
                let l = p.levels[f].len();
                let block = if eff_w.contains(&f) {
                    helmert(l)
                } else {
                    vec![vec![1.0 / (l as f64).sqrt()]; l]
                };
                contrast = kron(&contrast, &block);
            }
            let d = contrast[0].len();
            let n_subj = layout.subject_obs.len();
            let code = |f: usize, s: usize| p.codes[f][layout.subject_rep[s]];
            let blocks = p.factorial_blocks(&p.between, n_subj, &code);
            let (mut ss, mut ss_err) = (0.0, 0.0);
            for j in 0..d {
                let scores: Vec<f64> = layout
                    .subject_obs
                    .iter()
                    .map(|obs| {
                        (0..layout.within_cells)
                            .map(|c| contrast[c][j] * ranks[obs[c]])
                            .sum()
                    })
                    .collect();
                let (a, e) = type3(&blocks, &eff_b, &scores)?;
                ss += a;
                ss_err += e;
            }
            let groups = p.cell_count(&p.between);
            Ok(EffectTest {
                ss,
                ss_err,
                df: (df_of(&eff_b) * d) as f64,
                df_err: ((n_subj - groups) * d) as f64,
            })
        }
    }
}

/// Raw response averaged per subject (or per observation when there are no
/// within factors), with the unit's level of factor `f`.
fn unit_values(p: &Prepared, f: usize) -> Vec<(usize, f64)> {
    match &p.layout {
        None => (0..p.n).map(|i| (p.codes[f][i], p.data.response[i])).collect(),
        Some(layout) => layout
            .subject_obs
            .iter()
            .zip(&layout.subject_rep)
            .map(|(obs, &rep)| {
                let v = obs.iter().map(|&o| p.data.response[o]).sum::<f64>() / obs.len() as f64;
                (p.codes[f][rep], v)
            })
            .collect(),
    }
}

/// Subject × level matrix of raw means for within factor `f`.
fn within_matrix(p: &Prepared, f: usize, values: &[f64]) -> Vec<Vec<f64>> {
    let layout = p.layout.as_ref().expect("within factor implies layout");
    let l = p.levels[f].len();
    layout
        .subject_obs
        .iter()
        .map(|obs| {
            let mut sums = vec![0.0; l];
            let mut counts = vec![0usize; l];
            for &o in obs {
                sums[p.codes[f][o]] += values[o];
                counts[p.codes[f][o]] += 1;
            }
            sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect()
        })
        .collect()
}

fn main_effect_size(p: &Prepared, f: usize) -> Option<EffectSize> {
    let result = if p.data.factors[f].kind == FactorKind::Within {
        kendalls_w(&within_matrix(p, f, &p.data.response))
    } else {
        let l = p.levels[f].len();
        let mut groups = vec![Vec::new(); l];
        for (c, v) in unit_values(p, f) {
            groups[c].push(v);
        }
        if l == 2 {
            cliffs_delta(&groups[0], &groups[1])
        } else {
            kruskal_epsilon_sq(&groups)
        }
    };
    result.ok().and_then(|r| r.effect_size)
}

/// Aligned responses for the effect made of the named factors.
pub fn align(data: &ArtData, effect: &[&str]) -> Result<Vec<f64>, StatsError> {
    let p = Prepared::new(data)?;
    let idx = factor_indices(&p, effect)?;
    Ok(p.align(&idx))
}

fn factor_indices(p: &Prepared, names: &[&str]) -> Result<Vec<usize>, StatsError> {
    let mut idx = names
        .iter()
        .map(|name| {
            p.data
                .factors
                .iter()
                .position(|f| f.name == *name)
                .ok_or_else(|| domain(format!("unknown factor `{name}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

pub fn art_anova(data: &ArtData) -> Result<ArtTable, StatsError> {
    let p = Prepared::new(data)?;
    let mut effects = Vec::new();
    for effect in p.effects() {
        let ranks = mid_ranks(&p.align(&effect));
        let t = test_effect(&p, &effect, &ranks)?;
        let f = t.f();
        let mut result = StatResult::new(Method::ArtAnova, f, f_sf(f, t.df, t.df_err), p.n)
            .with_df(t.df, Some(t.df_err));
        if effect.len() == 1 {
            if let Some(es) = main_effect_size(&p, effect[0]) {
                result = result.with_effect(es.kind, es.value);
            }
        }
        let names: Vec<String> = effect.iter().map(|&f| data.factors[f].name.clone()).collect();
        effects.push(ArtEffect {
            name: names.join(":"),
            factors: names,
            result,
        });
    }
    Ok(ArtTable { effects })
}

fn finish(mut contrasts: Vec<Contrast>) -> Result<Vec<Contrast>, StatsError> {
    let p: Vec<f64> = contrasts.iter().map(|c| c.p_value).collect();
    for (c, adj) in contrasts.iter_mut().zip(holm_adjust(&p)?) {
        c.p_holm = adj;
    }
    Ok(contrasts)
}

/// Pairwise contrasts between the levels of one factor on the ranks aligned
/// for its main effect, Holm-adjusted as one family. Effect sizes are
/// Cliff's δ for between factors and r_rb for within factors, computed on
/// the raw response.
pub fn art_posthoc(data: &ArtData, factor: &str) -> Result<Vec<Contrast>, StatsError> {
    let p = Prepared::new(data)?;
    let f = factor_indices(&p, &[factor])?[0];
    let ranks = mid_ranks(&p.align(&[f]));
    let t = test_effect(&p, &[f], &ranks)?;
    let l = p.levels[f].len();
    let mut out = Vec::new();

    if p.data.factors[f].kind == FactorKind::Within {
        let layout = p.layout.as_ref().expect("within factor implies layout");
        let rank_m = within_matrix(&p, f, &ranks);
        let raw_m = within_matrix(&p, f, &p.data.response);
        let n_subj = rank_m.len() as f64;
        let other_cells = (layout.within_cells / l) as f64;
        let se = (2.0 * t.mse() / (other_cells * n_subj)).sqrt();
        for a in 0..l {
            for b in a + 1..l {
                let ma = rank_m.iter().map(|r| r[a]).sum::<f64>() / n_subj;
                let mb = rank_m.iter().map(|r| r[b]).sum::<f64>() / n_subj;
                let tv = (ma - mb) / se;
                let col = |k: usize| raw_m.iter().map(|r| r[k]).collect::<Vec<f64>>();
                let es = rank_biserial(&col(a), &col(b)).ok().and_then(|r| r.effect_size);
                out.push(Contrast {
                    factor: factor.to_string(),
                    within_level: None,
                    level_a: p.levels[f][a].clone(),
                    level_b: p.levels[f][b].clone(),
                    mean_rank_a: ma,
                    mean_rank_b: mb,
                    t: tv,
                    df: t.df_err,
                    p_value: t_two_sided(tv, t.df_err),
                    p_holm: 0.0,
                    effect_size: es,
                });
            }
        }
        return finish(out);
    }

    // Between factor: units are observations or subject means.
    let (unit_ranks, unit_raw, mse, df) = match &p.layout {
        None => {
            let all: Vec<usize> = (0..p.data.factors.len()).collect();
            let (cell_means, _) = p.group_means(&ranks, &all);
            let ss: f64 = (0..p.n)
                .map(|i| (ranks[i] - cell_means[p.cell(&all, i)]).powi(2))
                .sum();
            let df = (p.n - p.cell_count(&all)) as f64;
            let units: Vec<(usize, f64)> = (0..p.n).map(|i| (p.codes[f][i], ranks[i])).collect();
            (units, unit_values(&p, f), ss / df, df)
        }
        Some(layout) => {
            let means: Vec<f64> = layout
                .subject_obs
                .iter()
                .map(|obs| obs.iter().map(|&o| ranks[o]).sum::<f64>() / obs.len() as f64)
                .collect();
            let groups = p.cell_count(&p.between);
            let mut sums = vec![0.0; groups];
            let mut counts = vec![0usize; groups];
            for (s, &rep) in layout.subject_rep.iter().enumerate() {
                let g = p.cell(&p.between, rep);
                sums[g] += means[s];
                counts[g] += 1;
            }
            let ss: f64 = layout
                .subject_rep
                .iter()
                .enumerate()
                .map(|(s, &rep)| {
                    let g = p.cell(&p.between, rep);
                    (means[s] - sums[g] / counts[g] as f64).powi(2)
                })
                .sum();
            let df = (means.len() - groups) as f64;
            let units: Vec<(usize, f64)> = layout
                .subject_rep
                .iter()
                .zip(&means)
                .map(|(&rep, &m)| (p.codes[f][rep], m))
                .collect();
            (units, unit_values(&p, f), ss / df, df)
        }
    };
    for a in 0..l {
        for b in a + 1..l {
            let pick = |units: &[(usize, f64)], k: usize| -> Vec<f64> {
                units.iter().filter(|u| u.0 == k).map(|u| u.1).collect()
            };
            let (ra, rb) = (pick(&unit_ranks, a), pick(&unit_ranks, b));
            let (ma, mb) = (mean(&ra), mean(&rb));
            let se = (mse * (1.0 / ra.len() as f64 + 1.0 / rb.len() as f64)).sqrt();
            let tv = (ma - mb) / se;
            let es = cliffs_delta(&pick(&unit_raw, a), &pick(&unit_raw, b))
                .ok()
                .and_then(|r| r.effect_size);
            out.push(Contrast {
                factor: factor.to_string(),
                within_level: None,
                level_a: p.levels[f][a].clone(),
                level_b: p.levels[f][b].clone(),
                mean_rank_a: ma,
                mean_rank_b: mb,
                t: tv,
                df,
                p_value: t_two_sided(tv, df),
                p_holm: 0.0,
                effect_size: es,
            });
        }
    }
    finish(out)
}

/// Simple-effect contrasts of `factor` within each level of `by`, on ranks
/// aligned for their two-way interaction. Between-subject designs only; the
/// whole set is one Holm family.
pub fn art_simple_contrasts(
    data: &ArtData,
    factor: &str,
    by: &str,
) -> Result<Vec<Contrast>, StatsError> {
    let p = Prepared::new(data)?;
    if p.layout.is_some() {
        return Err(domain("simple-effect contrasts need a between-subject design"));
    }
    let f = factor_indices(&p, &[factor])?[0];
    let g = factor_indices(&p, &[by])?[0];
    if f == g {
        return Err(domain("factor and conditioning factor must differ"));
    }
    let ranks = mid_ranks(&p.align(&factor_indices(&p, &[factor, by])?));
    let all: Vec<usize> = (0..p.data.factors.len()).collect();
    let (cell_means, _) = p.group_means(&ranks, &all);
    let ss: f64 = (0..p.n)
        .map(|i| (ranks[i] - cell_means[p.cell(&all, i)]).powi(2))
        .sum();
    let df = (p.n - p.cell_count(&all)) as f64;
    let mse = ss / df;
    let mut out = Vec::new();
    for level_g in 0..p.levels[g].len() {
        let l = p.levels[f].len();
        for a in 0..l {
            for b in a + 1..l {
                let select = |k: usize, values: &[f64]| -> Vec<f64> {
                    (0..p.n)
                        .filter(|&i| p.codes[g][i] == level_g && p.codes[f][i] == k)
                        .map(|i| values[i])
                        .collect()
                };
                let (ra, rb) = (select(a, &ranks), select(b, &ranks));
                let (ma, mb) = (mean(&ra), mean(&rb));
                let se = (mse * (1.0 / ra.len() as f64 + 1.0 / rb.len() as f64)).sqrt();
                let tv = (ma - mb) / se;
                let es = cliffs_delta(&select(a, &data.response), &select(b, &data.response))
                    .ok()
                    .and_then(|r| r.effect_size);
                out.push(Contrast {
                    factor: factor.to_string(),
                    within_level: Some(p.levels[g][level_g].clone()),
                    level_a: p.levels[f][a].clone(),
                    level_b: p.levels[f][b].clone(),
                    mean_rank_a: ma,
                    mean_rank_b: mb,
                    t: tv,
                    df,
                    p_value: t_two_sided(tv, df),
                    p_holm: 0.0,
                    effect_size: es,
                });
            }
        }
    }
    finish(out)
}

/// Method tag and kind for callers that only need the contrast as a result.
impl Contrast {
    pub fn as_result(&self, n: usize) -> StatResult {
        let mut r = StatResult::new(Method::ArtContrast, self.t, self.p_holm, n).with_df(self.df, None);
        if let Some(es) = self.effect_size {
            r = r.with_effect(es.kind, es.value);
        }
        r
    }
}
