use core::fmt;

use super::{same_len, StatsError};
use crate::prelude::*;

/// Ordinal quality bands of a Smatch F1 score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QualityClass {
    VeryBad,
    Bad,
    Ok,
    Good,
    Excellent,
}

pub const CLASSES: usize = 5;

impl QualityClass {
    pub const ALL: [QualityClass; CLASSES] =
        [QualityClass::VeryBad, QualityClass::Bad, QualityClass::Ok, QualityClass::Good, QualityClass::Excellent];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            QualityClass::VeryBad => "very bad",
            QualityClass::Bad => "bad",
            QualityClass::Ok => "ok",
            QualityClass::Good => "good",
            QualityClass::Excellent => "excellent",
        }
    }
}

impl fmt::Display for QualityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Left-closed bands `[0, .25) [.25, .5) [.5, .75) [.75, .95) [.95, 1]`.
pub fn bin_five_way(f1: f64) -> Result<QualityClass, StatsError> {
    if !(0.0..=1.0).contains(&f1) {
        return Err(StatsError::OutOfRange(f1));
    }
    Ok(match f1 {
        v if v < 0.25 => QualityClass::VeryBad,
        v if v < 0.5 => QualityClass::Bad,
        v if v < 0.75 => QualityClass::Ok,
        v if v < 0.95 => QualityClass::Good,
        _ => QualityClass::Excellent,
    })
}

/// `k × k` counts, rows indexed by gold, columns by prediction.
pub fn confusion(pred: &[usize], gold: &[usize], k: usize) -> Result<Vec<Vec<usize>>, StatsError> {
    same_len(pred.len(), gold.len())?;
    let mut m = vec![vec![0usize; k]; k];
    for (&p, &g) in pred.iter().zip(gold) {
        if p >= k || g >= k {
            return Err(StatsError::OutOfRange(p.max(g) as f64));
        }
        m[g][p] += 1;
    }
    Ok(m)
}

/// Quadratic weighted kappa with weights `(i−j)²/(k−1)²`. When chance
/// disagreement is zero both sides hold one identical class and the result
/// is 1.
pub fn quadratic_weighted_kappa(pred: &[usize], gold: &[usize], k: usize) -> Result<f64, StatsError> {
    if pred.is_empty() {
        return Err(StatsError::TooFewSamples { needed: 1, found: 0 });
    }
    let o = confusion(pred, gold, k)?;
    let n = pred.len() as f64;
    let rows: Vec<f64> = o.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let cols: Vec<f64> = (0..k).map(|j| o.iter().map(|r| r[j]).sum::<usize>() as f64).collect();
    let denom = ((k - 1) * (k - 1)).max(1) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let w = ((i as f64 - j as f64) * (i as f64 - j as f64)) / denom;
            num += w * o[i][j] as f64 / n;
            den += w * rows[i] * cols[j] / (n * n);
        }
    }
    if den == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - num / den)
}

/// F1 per class; `None` for classes absent from both sides.
pub fn per_class_f1(pred: &[usize], gold: &[usize], k: usize) -> Result<Vec<Option<f64>>, StatsError> {
    let m = confusion(pred, gold, k)?;
    Ok((0..k)
        .map(|c| {
            let tp = m[c][c];
            let gold_c: usize = m[c].iter().sum();
            let pred_c: usize = m.iter().map(|r| r[c]).sum();
            (gold_c + pred_c > 0).then(|| 2.0 * tp as f64 / (gold_c + pred_c) as f64)
        })
        .collect())
}

/// Mean F1 over classes that occur in the prediction or the gold labels.
pub fn macro_f1(pred: &[usize], gold: &[usize], k: usize) -> Result<f64, StatsError> {
    if pred.is_empty() {
        return Err(StatsError::TooFewSamples { needed: 1, found: 0 });
    }
    let f: Vec<f64> = per_class_f1(pred, gold, k)?.into_iter().flatten().collect();
    Ok(f.iter().sum::<f64>() / f.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bands() {
        assert_eq!(bin_five_way(0.96).unwrap(), QualityClass::Excellent);
        assert_eq!(bin_five_way(0.95).unwrap(), QualityClass::Excellent);
        assert_eq!(bin_five_way(0.25).unwrap(), QualityClass::Bad);
        assert_eq!(bin_five_way(0.0).unwrap(), QualityClass::VeryBad);
        assert_eq!(bin_five_way(0.7499).unwrap(), QualityClass::Ok);
        assert_eq!(bin_five_way(1.0).unwrap(), QualityClass::Excellent);
        assert!(bin_five_way(1.01).is_err());
        assert!(bin_five_way(f64::NAN).is_err());
    }

    #[test]
    fn kappa_examples() {
        let gold = [0, 1, 2, 3, 4, 2, 2];
        assert_eq!(quadratic_weighted_kappa(&gold, &gold, 5).unwrap(), 1.0);
        let majority = [2; 7];
        assert_eq!(quadratic_weighted_kappa(&majority, &gold, 5).unwrap(), 0.0);
        assert_eq!(quadratic_weighted_kappa(&[3, 3], &[3, 3], 5).unwrap(), 1.0);
    }

    #[test]
    fn macro_f1_examples() {
        let gold = [0, 1, 2, 3, 4, 0, 1, 2, 3, 4];
        assert_eq!(macro_f1(&gold, &gold, 5).unwrap(), 1.0);
        let majority = [2; 10];
        // class 2: p = 1/5, r = 1, F1 = 1/3; the other four score 0
        assert!((macro_f1(&majority, &gold, 5).unwrap() - 1.0 / 15.0).abs() < 1e-12);
        assert_eq!(macro_f1(&[1, 1], &[0, 0], 5).unwrap(), 0.0);
        // absent classes are skipped
        assert_eq!(macro_f1(&[0, 1], &[0, 1], 5).unwrap(), 1.0);
    }
}
