use super::{same_len, StatsError};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample Pearson correlation.
pub fn pearson(pred: &[f64], gold: &[f64]) -> Result<f64, StatsError> {
    same_len(pred.len(), gold.len())?;
    if pred.len() < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, found: pred.len() });
    }
    let (mp, mg) = (mean(pred), mean(gold));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&p, &g) in pred.iter().zip(gold) {
        let (dp, dg) = (p - mp, g - mg);
        sxy += dp * dg;
        sxx += dp * dp;
        syy += dg * dg;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

pub fn rmse(pred: &[f64], gold: &[f64]) -> Result<f64, StatsError> {
    same_len(pred.len(), gold.len())?;
    if pred.is_empty() {
        return Err(StatsError::TooFewSamples { needed: 1, found: 0 });
    }
    let s: f64 = pred.iter().zip(gold).map(|(p, g)| (p - g) * (p - g)).sum();
    Ok(libm::sqrt(s / pred.len() as f64))
}
