//! Expected Improvement and the standard normal helpers it needs.
//!
//! EI is evaluated in an internal maximize convention; minimize tasks
//! negate their values before scoring, which leaves the candidate
//! ranking identical.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// Maps a task value into the internal maximize convention.
    pub fn signed<T: Scalar>(self, value: T) -> T {
        match self {
            Direction::Maximize => value,
            Direction::Minimize => -value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionParams<T> {
    /// Exploration margin, >= 0.
    pub epsilon: T,
    /// Incumbent value in the maximize convention.
    pub best_value: T,
}

/// Standard normal density.
pub fn normal_pdf<T: Scalar>(x: T) -> T {
    let inv_sqrt_2pi = T::from_f64(0.398_942_280_401_432_7);
    (-x * x * T::half()).exp() * inv_sqrt_2pi
}

/// Standard normal CDF via erf in double precision (abs err < 1e-12).
pub fn normal_cdf<T: Scalar>(x: T) -> T {
    let v = 0.5 * libm::erfc(-x.as_f64() / std::f64::consts::SQRT_2);
    T::from_f64(v)
}

/// Closed-form Expected Improvement over the incumbent under a Gaussian
/// predictive distribution `N(mu, sigma^2)`:
///
/// ```text
/// EI = (mu - best - eps) Phi(Z) + sigma phi(Z),  Z = (mu - best - eps) / sigma
/// ```
///
/// with the `sigma = 0` limit `max(mu - best - eps, 0)`. Always >= 0.
pub fn expected_improvement<T: Scalar>(mu: T, sigma: T, params: &AcquisitionParams<T>) -> T {
    debug_assert!(sigma >= T::zero());
    let gain = mu - params.best_value - params.epsilon;
    if sigma <= T::zero() {
        return gain.max(T::zero());
    }
    let z = gain / sigma;
    let ei = gain * normal_cdf(z) + sigma * normal_pdf(z);
    ei.max(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, stream_rng};
    use approx::assert_relative_eq;

    #[test]
    fn standard_values() {
        assert_relative_eq!(normal_cdf(0.0f64), 0.5, epsilon = 1e-14);
        assert_relative_eq!(normal_pdf(0.0f64), 0.3989422804014327, epsilon = 1e-14);
    }

    #[test]
    fn cdf_symmetry() {
        let mut rng = stream_rng(3, 1);
        for _ in 0..50 {
            let x: f64 = standard_normal::<f64>(&mut rng) * 2.0;
            assert_relative_eq!(normal_cdf(-x), 1.0 - normal_cdf(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn cdf_matches_trapezoid_quadrature() {
        // Integrate the density on [-8, x] with a fine trapezoid rule.
        for &x in &[-2.0f64, -0.31, 0.0, 0.77, 1.9, 3.2] {
            let n = 400_000usize;
            let a = -8.0;
            let h = (x - a) / n as f64;
            let mut acc = 0.5 * (normal_pdf(a) + normal_pdf(x));
            for i in 1..n {
                acc += normal_pdf(a + h * i as f64);
            }
            let quad = acc * h;
            assert!((normal_cdf(x) - quad).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn ei_at_the_margin_is_pdf_at_zero() {
        // mu = best + eps, sigma = 1: the Phi term vanishes and EI = phi(0).
        let params = AcquisitionParams { epsilon: 0.25, best_value: 1.0 };
        let ei = expected_improvement(1.25f64, 1.0, &params);
        assert_relative_eq!(ei, 0.3989422804014327, epsilon = 1e-12);
    }

    #[test]
    fn zero_sigma_limit() {
        let params = AcquisitionParams { epsilon: 0.1, best_value: 2.0 };
        assert_eq!(expected_improvement(1.5f64, 0.0, &params), 0.0);
        assert_relative_eq!(expected_improvement(2.7f64, 0.0, &params), 0.6, epsilon = 1e-14);
    }

    #[test]
    fn ei_matches_monte_carlo() {
        // E[max(s - best - eps, 0)], s ~ N(mu, sigma^2).
        let mut rng = stream_rng(11, 0);
        for case in 0..10 {
            let mu = standard_normal::<f64>(&mut rng) * 2.0;
            let sigma = standard_normal::<f64>(&mut rng).abs() + 0.05;
            let best = standard_normal::<f64>(&mut rng);
            let eps = standard_normal::<f64>(&mut rng).abs() * 0.2;
            let params = AcquisitionParams { epsilon: eps, best_value: best };
            let closed = expected_improvement(mu, sigma, &params);
            let n = 200_000usize;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let s: f64 = mu + sigma * standard_normal::<f64>(&mut rng);
                let v = (s - best - eps).max(0.0);
                sum += v;
                sum_sq += v * v;
            }
            let mc = sum / n as f64;
            let se = ((sum_sq / n as f64 - mc * mc) / n as f64).sqrt();
            assert!(
                (closed - mc).abs() <= 4.0 * se.max(1e-12),
                "case {case}: closed {closed} mc {mc} se {se}"
            );
        }
    }

    #[test]
    fn ei_increases_with_sigma_below_incumbent() {
        let params = AcquisitionParams { epsilon: 0.0, best_value: 1.0 };
        let mu = 0.4f64;
        let mut prev = expected_improvement(mu, 1e-3, &params);
        for i in 1..40 {
            let sigma = 1e-3 + 0.05 * i as f64;
            let ei = expected_improvement(mu, sigma, &params);
            assert!(ei > prev, "EI not increasing at sigma {sigma}");
            prev = ei;
        }
    }

    #[test]
    fn minimize_is_maximize_of_negated_values() {
        let d = Direction::Minimize;
        let (mu, sigma, best, eps) = (0.8f64, 0.3, 1.1, 0.02);
        let a = expected_improvement(
            d.signed(mu),
            sigma,
            &AcquisitionParams { epsilon: eps, best_value: d.signed(best) },
        );
        let b = expected_improvement(
            -mu,
            sigma,
            &AcquisitionParams { epsilon: eps, best_value: -best },
        );
        assert_eq!(a, b);
    }
}
