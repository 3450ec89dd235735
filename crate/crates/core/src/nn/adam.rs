use super::{NnError, Parameter, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Bias-corrected Adam over every parameter, then zeroes the gradients.
/// Nothing is updated when any gradient holds a non-finite value.
pub fn adam_step<T: Scalar>(params: &mut [Parameter<T>], cfg: &AdamConfig) -> Result<(), NnError> {
    if let Some(p) = params.iter().find(|p| !p.grad.all_finite()) {
        return Err(NnError::NonFiniteGradient { parameter: p.name.clone() });
    }
    let (b1, b2) = (T::from_f64(cfg.beta1), T::from_f64(cfg.beta2));
    let (one_b1, one_b2) = (T::from_f64(1.0 - cfg.beta1), T::from_f64(1.0 - cfg.beta2));
    let eps = T::from_f64(cfg.eps);
    for p in params.iter_mut() {
        p.step += 1;
        let t = p.step as f64;
        let c1 = T::from_f64(1.0 / (1.0 - libm::pow(cfg.beta1, t)));
        let c2 = T::from_f64(1.0 / (1.0 - libm::pow(cfg.beta2, t)));
        let lr = T::from_f64(cfg.lr);
        let (value, grad, m, v) = (p.value.data_mut(), p.grad.data_mut(), p.m.data_mut(), p.v.data_mut());
        for i in 0..value.len() {
            let g = grad[i];
            m[i] = b1 * m[i] + one_b1 * g;
            v[i] = b2 * v[i] + one_b2 * g * g;
            let mh = m[i] * c1;
            let vh = v[i] * c2;
            value[i] -= lr * mh / (vh.sqrt() + eps);
            grad[i] = T::ZERO;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = [Parameter::new("w", Tensor::<f64>::from_fn(&[3], |i| i as f64))];
        let before = p[0].value.clone();
        adam_step(&mut p, &AdamConfig::default()).unwrap();
        assert_eq!(p[0].value, before);
        assert_eq!(p[0].step, 1);
    }

    #[test]
    fn constant_gradient_step_tends_to_lr() {
        let cfg = AdamConfig::default();
        let mut p = [Parameter::new("w", Tensor::<f64>::zeros(&[1]))];
        let mut last = 0.0;
        for _ in 0..5000 {
            p[0].grad.data_mut()[0] = 0.3;
            let before = p[0].value.data()[0];
            adam_step(&mut p, &cfg).unwrap();
            last = before - p[0].value.data()[0];
        }
        assert!((last - cfg.lr).abs() < 1e-9);
        // the very first step is exactly lr·g/(|g|+eps) under bias correction
        let mut q = [Parameter::new("w", Tensor::<f64>::zeros(&[1]))];
        q[0].grad.data_mut()[0] = 0.3;
        adam_step(&mut q, &cfg).unwrap();
        assert!((-q[0].value.data()[0] - cfg.lr * 0.3 / (0.3 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut p = [
            Parameter::new("a", Tensor::<f32>::zeros(&[2])),
            Parameter::new("b", Tensor::<f32>::zeros(&[2])),
        ];
        p[0].grad.data_mut()[0] = 1.0;
        p[1].grad.data_mut()[1] = f32::NAN;
        let err = adam_step(&mut p, &AdamConfig::default()).unwrap_err();
        assert_eq!(err, NnError::NonFiniteGradient { parameter: "b".into() });
        assert_eq!(p[0].value.data(), [0.0, 0.0]);
        assert_eq!(p[0].step, 0);
    }

    #[test]
    fn runs_are_bit_identical() {
        let run = || {
            let mut p = [Parameter::new("w", Tensor::<f32>::from_fn(&[4], |i| i as f32 * 0.1))];
            for s in 0..50 {
                for (i, g) in p[0].grad.data_mut().iter_mut().enumerate() {
                    *g = ((s * 3 + i) % 7) as f32 - 3.0;
                }
                adam_step(&mut p, &AdamConfig::default()).unwrap();
            }
            p[0].value.clone()
        };
        assert_eq!(run(), run());
    }
}
