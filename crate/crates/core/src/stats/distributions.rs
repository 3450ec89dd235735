use super::regression::mean;
use super::{same_len, StatsError};

/// Standard normal CDF through the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Two-tailed standard-normal tail probability of `|z|`.
fn normal_two_tailed(z: f64) -> f64 {
    libm::erfc(z.abs() / core::f64::consts::SQRT_2)
}

/// Continued fraction for the incomplete beta function, evaluated with the
/// modified Lentz method.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` for `a, b > 0`, `x ∈ [0, 1]`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-tailed Student-t probability `P(|T| ≥ |t|)` with `df` degrees of
/// freedom.
fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
}

/// Student-t CDF.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_tailed(t, df);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Difference of two independent correlations through Fisher's transform.
/// Returns `(z, two-tailed p)`.
pub fn fisher_z_test(r1: f64, n1: usize, r2: f64, n2: usize) -> Result<(f64, f64), StatsError> {
    if !(r1.abs() < 1.0 && r2.abs() < 1.0) {
        return Err(StatsError::DegenerateInput("correlation magnitude must be below 1"));
    }
    if n1 <= 3 || n2 <= 3 {
        return Err(StatsError::DegenerateInput("each sample needs more than 3 items"));
    }
    let se = libm::sqrt(1.0 / (n1 - 3) as f64 + 1.0 / (n2 - 3) as f64);
    let z = (libm::atanh(r1) - libm::atanh(r2)) / se;
    Ok((z, normal_two_tailed(z)))
}

/// Paired t-test over `a[i] − b[i]`. Returns `(t, two-tailed p)`. A constant
/// non-zero difference gives an infinite statistic with p = 0.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64), StatsError> {
    same_len(a.len(), b.len())?;
    let n = a.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, found: n });
    }
    let d: alloc::vec::Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let md = mean(&d);
    let var = d.iter().map(|v| (v - md) * (v - md)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        if md == 0.0 {
            return Err(StatsError::DegenerateVariance);
        }
        return Ok((md.signum() * f64::INFINITY, 0.0));
    }
    let t = md / libm::sqrt(var / n as f64);
    Ok((t, student_t_two_tailed(t, (n - 1) as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson quadrature, the independent oracle for the CDFs.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    fn t_pdf(x: f64, df: f64) -> f64 {
        let c = libm::exp(libm::lgamma((df + 1.0) / 2.0) - libm::lgamma(df / 2.0))
            / libm::sqrt(df * core::f64::consts::PI);
        c * libm::pow(1.0 + x * x / df, -(df + 1.0) / 2.0)
    }

    #[test]
    fn student_t_against_quadrature() {
        for df in [1.0, 2.0, 3.0, 5.0, 9.0, 30.0] {
            for t in [-4.0, -2.5, -0.7, 0.0, 0.3, 1.0, 2.2, 6.0] {
                let half = simpson(&|x| t_pdf(x, df), 0.0, f64::abs(t), 1e-14);
                let want = if t >= 0.0 { 0.5 + half } else { 0.5 - half };
                let got = student_t_cdf(t, df);
                assert!((got - want).abs() < 1e-10, "df={df} t={t}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn normal_against_quadrature() {
        let pdf = |x: f64| libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * core::f64::consts::PI);
        for z in [-3.0f64, -1.2, 0.0, 0.4, 1.96, 5.0] {
            let want = 0.5 + z.signum() * simpson(&pdf, 0.0, f64::abs(z), 1e-14);
            assert!((normal_cdf(z) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a
        for x in [0.1, 0.5, 0.9] {
            assert!((regularized_incomplete_beta(1.0, 1.0, x) - x).abs() < 1e-14);
            assert!((regularized_incomplete_beta(3.0, 1.0, x) - x * x * x).abs() < 1e-14);
        }
    }

    #[test]
    fn fisher_examples() {
        let (z, p) = fisher_z_test(0.5, 100, 0.5, 80).unwrap();
        assert_eq!(z, 0.0);
        assert_eq!(p, 1.0);
        let (z1, p1) = fisher_z_test(0.7, 1000, 0.43, 1000).unwrap();
        let (z2, p2) = fisher_z_test(0.43, 1000, 0.7, 1000).unwrap();
        assert_eq!(z1, -z2);
        assert_eq!(p1, p2);
        // hand case: atanh(.7)-atanh(.43) = 0.40675..., se = sqrt(2/997)
        let want = (libm::atanh(0.7) - libm::atanh(0.43)) / libm::sqrt(2.0 / 997.0);
        assert!((z1 - want).abs() < 1e-12);
        assert!(fisher_z_test(1.0, 10, 0.2, 10).is_err());
        assert!(fisher_z_test(0.1, 3, 0.2, 10).is_err());
    }

    #[test]
    fn paired_t_examples() {
        let a = [0.5, 0.6, 0.7];
        assert_eq!(paired_t_test(&a, &a), Err(StatsError::DegenerateVariance));
        let b = a.map(|v| v - 0.1);
        let (t, p) = paired_t_test(&a, &b).unwrap();
        assert!(t.is_infinite() && t > 0.0 && p == 0.0);
        // d = (1, 2, 3, 4): mean 2.5, sd sqrt(5/3), t = 2.5 / sqrt(5/12)
        let (t, p) = paired_t_test(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4]).unwrap();
        assert!((t - 2.5 / libm::sqrt(5.0 / 12.0)).abs() < 1e-12);
        assert!((p - 2.0 * (1.0 - student_t_cdf(t, 3.0))).abs() < 1e-12);
    }
}
