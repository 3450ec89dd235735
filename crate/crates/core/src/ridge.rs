//! The shallow-statistics baseline: graph statistics of the candidate and
//! the dependency tree, fed to closed-form ridge regression.

use core::fmt;

use crate::dep::DepTree;
use crate::metrics::strip_sense;
use crate::penman::AmrGraph;
use crate::prelude::*;
use crate::stats::pearson;

pub const FEATURES: usize = 19;

const STATS: [&str; 6] = ["density", "avg_degree", "nodes", "edges", "arg0_subj", "arg1_obj"];

/// Column names: `diff_*`, `dep_*`, `amr_*`, then `jaccard`.
pub fn feature_names() -> Vec<String> {
    let mut v: Vec<String> = ["diff", "dep", "amr"]
        .iter()
        .flat_map(|p| STATS.iter().map(move |s| format!("{p}_{s}")))
        .collect();
    v.push("jaccard".into());
    v
}

/// Dependency relations counted as subjects and objects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeprelSets {
    pub subject: Vec<String>,
    pub object: Vec<String>,
}

impl Default for DeprelSets {
    fn default() -> Self {
        DeprelSets {
            subject: ["nsubj", "nsubj:pass", "csubj"].map(str::to_owned).to_vec(),
            object: ["obj", "iobj", "ccomp"].map(str::to_owned).to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURES],
}

fn graph_stats(nodes: usize, edges: usize, first: usize, second: usize) -> [f64; 6] {
    let (v, e) = (nodes as f64, edges as f64);
    let density = if nodes > 1 { e / (v * (v - 1.0)) } else { 0.0 };
    let degree = if nodes > 0 { 2.0 * e / v } else { 0.0 };
    [density, degree, v, e, first as f64, second as f64]
}

/// Statistics of both structures, their difference and the overlap of
/// dependency lemmas with sense-stripped concepts.
pub fn featurize(candidate: &AmrGraph, dep: &DepTree, sets: &DeprelSets) -> FeatureVector {
    let count_role = |role: &str| candidate.edges().iter().filter(|e| e.role.eq_ignore_ascii_case(role)).count();
    let amr = graph_stats(candidate.node_count(), candidate.edges().len(), count_role(":ARG0"), count_role(":ARG1"));
    let count_rel = |set: &[String]| {
        dep.tokens.iter().filter(|t| set.iter().any(|s| t.deprel.eq_ignore_ascii_case(s))).count()
    };
    let dep_edges = dep.tokens.iter().filter(|t| t.head.is_some()).count();
    let d = graph_stats(dep.tokens.len(), dep_edges, count_rel(&sets.subject), count_rel(&sets.object));
    let lemmas: BTreeSet<String> = dep.tokens.iter().map(|t| t.lemma.to_lowercase()).collect();
    let concepts: BTreeSet<String> = candidate
        .variables()
        .filter_map(|v| candidate.concept(v))
        .map(|c| strip_sense(&c.to_lowercase()).to_owned())
        .collect();
    let union = lemmas.union(&concepts).count();
    let jaccard = if union == 0 { 0.0 } else { lemmas.intersection(&concepts).count() as f64 / union as f64 };
    let mut values = [0.0; FEATURES];
    for i in 0..6 {
        values[i] = amr[i] - d[i];
        values[6 + i] = d[i];
        values[12 + i] = amr[i];
    }
    values[18] = jaccard;
    FeatureVector { values }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RidgeError {
    Empty,
    DimensionMismatch { expected: usize, found: usize },
    SingularSystem,
    NoCandidates,
}

impl fmt::Display for RidgeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RidgeError::Empty => f.write_str("no training rows"),
            RidgeError::DimensionMismatch { expected, found } => write!(f, "expected {expected} columns, found {found}"),
            RidgeError::SingularSystem => f.write_str("normal equations are singular"),
            RidgeError::NoCandidates => f.write_str("no regularization strengths to try"),
        }
    }
}

impl core::error::Error for RidgeError {}

fn width(rows: &[Vec<f64>]) -> Result<usize, RidgeError> {
    let w = rows.first().ok_or(RidgeError::Empty)?.len();
    match rows.iter().find(|r| r.len() != w) {
        Some(r) => Err(RidgeError::DimensionMismatch { expected: w, found: r.len() }),
        None => Ok(w),
    }
}

fn column_means(rows: &[Vec<f64>], w: usize) -> Vec<f64> {
    let mut m = vec![0.0; w];
    for r in rows {
        for (a, b) in m.iter_mut().zip(r) {
            *a += b;
        }
    }
    m.iter_mut().for_each(|v| *v /= rows.len() as f64);
    m
}

/// Per-column mean and standard deviation from training rows. Constant
/// columns keep a scale of 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, RidgeError> {
        let w = width(rows)?;
        let mean = column_means(rows, w);
        let mut var = vec![0.0; w];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .iter()
            .map(|v| libm::sqrt(v / rows.len() as f64))
            .map(|s| if s > 1e-12 { s } else { 1.0 })
            .collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((x, m), s)| (x - m) / s).collect()
    }
}

/// Linear map with an unpenalized intercept.
#[derive(Clone, Debug, PartialEq)]
pub struct RidgeModel {
    /// `features × targets`.
    pub weights: Vec<Vec<f64>>,
    pub intercept: Vec<f64>,
}

/// Cholesky factorization of a symmetric positive definite matrix, in place
/// in the lower triangle.
fn cholesky(a: &mut [Vec<f64>]) -> Result<(), RidgeError> {
    let n = a.len();
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(RidgeError::SingularSystem);
        }
        let d = libm::sqrt(d);
        a[j][j] = d;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    Ok(())
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    x
}

/// Solves `(XcᵀXc + λI) w = XcᵀYc` on centered data; the intercept restores
/// the means, so it is not shrunk.
pub fn ridge_fit(x: &[Vec<f64>], y: &[Vec<f64>], lambda: f64) -> Result<RidgeModel, RidgeError> {
    let p = width(x)?;
    let k = width(y)?;
    if x.len() != y.len() {
        return Err(RidgeError::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let (mx, my) = (column_means(x, p), column_means(y, k));
    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![vec![0.0; k]; p];
    for (xr, yr) in x.iter().zip(y) {
        let xc: Vec<f64> = xr.iter().zip(&mx).map(|(a, m)| a - m).collect();
        let yc: Vec<f64> = yr.iter().zip(&my).map(|(a, m)| a - m).collect();
        for i in 0..p {
            for j in 0..=i {
                gram[i][j] += xc[i] * xc[j];
            }
            for t in 0..k {
                rhs[i][t] += xc[i] * yc[t];
            }
        }
    }
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] += lambda;
    }
    cholesky(&mut gram)?;
    let mut weights = vec![vec![0.0; k]; p];
    for t in 0..k {
        let b: Vec<f64> = rhs.iter().map(|r| r[t]).collect();
        for (i, w) in cholesky_solve(&gram, &b).into_iter().enumerate() {
            weights[i][t] = w;
        }
    }
    let intercept = (0..k).map(|t| my[t] - (0..p).map(|i| mx[i] * weights[i][t]).sum::<f64>()).collect();
    Ok(RidgeModel { weights, intercept })
}

impl RidgeModel {
    pub fn predict(&self, row: &[f64]) -> Vec<f64> {
        let mut out = self.intercept.clone();
        for (x, w) in row.iter().zip(&self.weights) {
            for (o, wt) in out.iter_mut().zip(w) {
                *o += x * wt;
            }
        }
        out
    }
}

pub const DEFAULT_LAMBDAS: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

/// Standardization, a ridge fit and clipping to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RidgeBaseline {
    pub standardizer: Standardizer,
    pub model: RidgeModel,
    pub lambda: f64,
}

impl RidgeBaseline {
    pub fn fit(x: &[Vec<f64>], y: &[Vec<f64>], lambda: f64) -> Result<Self, RidgeError> {
        let standardizer = Standardizer::fit(x)?;
        let xs: Vec<Vec<f64>> = x.iter().map(|r| standardizer.apply(r)).collect();
        Ok(RidgeBaseline { model: ridge_fit(&xs, y, lambda)?, standardizer, lambda })
    }

    /// Fits once per `lambdas` entry and keeps the one with the best mean
    /// dev Pearson ρ, the earliest on ties. Returns the chosen fit and the
    /// score of every candidate.
    pub fn fit_with_sweep(
        x: &[Vec<f64>],
        y: &[Vec<f64>],
        dev_x: &[Vec<f64>],
        dev_y: &[Vec<f64>],
        lambdas: &[f64],
    ) -> Result<(Self, Vec<(f64, f64)>), RidgeError> {
        let mut best: Option<(RidgeBaseline, f64)> = None;
        let mut scores = Vec::with_capacity(lambdas.len());
        for &lambda in lambdas {
            let fit = RidgeBaseline::fit(x, y, lambda)?;
            let pred: Vec<Vec<f64>> = dev_x.iter().map(|r| fit.predict(r)).collect();
            let k = dev_y.first().map_or(0, Vec::len);
            let rhos: Vec<f64> = (0..k)
                .filter_map(|t| {
                    let p: Vec<f64> = pred.iter().map(|r| r[t]).collect();
                    let g: Vec<f64> = dev_y.iter().map(|r| r[t]).collect();
                    pearson(&p, &g).ok()
                })
                .collect();
            let score = if rhos.is_empty() { 0.0 } else { rhos.iter().sum::<f64>() / rhos.len() as f64 };
            scores.push((lambda, score));
            if best.as_ref().is_none_or(|b| score > b.1) {
                best = Some((fit, score));
            }
        }
        best.map(|b| (b.0, scores)).ok_or(RidgeError::NoCandidates)
    }

    pub fn predict(&self, row: &[f64]) -> Vec<f64> {
        self.model.predict(&self.standardizer.apply(row)).into_iter().map(|v| v.clamp(0.0, 1.0)).collect()
    }
}
