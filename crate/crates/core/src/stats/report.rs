use super::classify::{bin_five_way, macro_f1, per_class_f1, quadratic_weighted_kappa, CLASSES};
use super::regression::{pearson, rmse};
use super::{same_len, StatsError};
use crate::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionScore {
    pub name: String,
    /// `None` when either side has zero variance.
    pub pearson: Option<f64>,
    pub rmse: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub per_class_f1: Vec<Option<f64>>,
    pub macro_f1: f64,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Significance {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub samples: usize,
    pub dimensions: Vec<DimensionScore>,
    pub classification: Option<Classification>,
    pub significance: Vec<Significance>,
}

impl EvalReport {
    /// Mean Pearson ρ over dimensions where it is defined.
    pub fn mean_pearson(&self) -> Option<f64> {
        let v: Vec<f64> = self.dimensions.iter().filter_map(|d| d.pearson).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn dimension(&self, name: &str) -> Option<&DimensionScore> {
        self.dimensions.iter().find(|d| d.name == name)
    }
}

/// Scores row-major predictions against gold rows. `classify_on` names the
/// column (a Smatch F1) that drives the five-way classification.
pub fn evaluate(
    pred: &[Vec<f64>],
    gold: &[Vec<f64>],
    names: &[String],
    classify_on: Option<usize>,
) -> Result<EvalReport, StatsError> {
    same_len(pred.len(), gold.len())?;
    for (p, g) in pred.iter().zip(gold) {
        same_len(p.len(), names.len())?;
        same_len(g.len(), names.len())?;
    }
    let column = |rows: &[Vec<f64>], j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let mut dimensions = Vec::with_capacity(names.len());
    for (j, name) in names.iter().enumerate() {
        let (p, g) = (column(pred, j), column(gold, j));
        let rho = match pearson(&p, &g) {
            Ok(r) => Some(r),
            Err(StatsError::DegenerateVariance) | Err(StatsError::TooFewSamples { .. }) => None,
            Err(e) => return Err(e),
        };
        dimensions.push(DimensionScore { name: name.clone(), pearson: rho, rmse: rmse(&p, &g)? });
    }
    let classification = match classify_on {
        Some(j) if !pred.is_empty() => {
            let bin = |v: f64| bin_five_way(v.clamp(0.0, 1.0)).map(|c| c.index());
            let pc = column(pred, j).into_iter().map(bin).collect::<Result<Vec<_>, _>>()?;
            let gc = column(gold, j).into_iter().map(bin).collect::<Result<Vec<_>, _>>()?;
            Some(Classification {
                per_class_f1: per_class_f1(&pc, &gc, CLASSES)?,
                macro_f1: macro_f1(&pc, &gc, CLASSES)?,
                kappa: quadratic_weighted_kappa(&pc, &gc, CLASSES)?,
            })
        }
        _ => None,
    };
    Ok(EvalReport { samples: pred.len(), dimensions, classification, significance: Vec::new() })
}
