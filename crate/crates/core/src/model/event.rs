//! Parametric time-to-event laws.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// A parametric model for the age at the landmark event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EventTimeModel {
    /// Weibull with shape `theta1` and scale `theta2`.
    Weibull { shape: f64, scale: f64 },
    /// Weibull conditioned to lie in `[lower, upper]`.
    TruncatedWeibull {
        shape: f64,
        scale: f64,
        lower: f64,
        upper: f64,
    },
    /// `gamma`-mixture of a lognormal (in `log_mean`/`log_var`) and a Weibull.
    Mixture {
        gamma: f64,
        log_mean: f64,
        log_var: f64,
        shape: f64,
        scale: f64,
    },
}

fn weibull_cdf(t: f64, shape: f64, scale: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -(-(t / scale).powf(shape)).exp_m1()
    }
}

fn weibull_density(t: f64, shape: f64, scale: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        let z = t / scale;
        (shape / scale) * z.powf(shape - 1.0) * (-z.powf(shape)).exp()
    }
}

fn weibull_quantile(p: f64, shape: f64, scale: f64) -> f64 {
    scale * (-(1.0 - p).ln()).powf(1.0 / shape)
}

fn lognormal_cdf(t: f64, mu: f64, sigma: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        let n = Normal::new(0.0, 1.0).unwrap();
        n.cdf((t.ln() - mu) / sigma)
    }
}

fn lognormal_density(t: f64, mu: f64, sigma: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        let z = (t.ln() - mu) / sigma;
        (-0.5 * z * z).exp() / (t * sigma * (2.0 * std::f64::consts::PI).sqrt())
    }
}

impl EventTimeModel {
    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        if shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite() {
            Ok(EventTimeModel::Weibull { shape, scale })
        } else {
            Err(Error::Domain(format!(
                "Weibull parameters must be positive and finite, got ({shape}, {scale})"
            )))
        }
    }

    pub fn truncated_weibull(shape: f64, scale: f64, lower: f64, upper: f64) -> Result<Self> {
        if !(shape > 0.0 && scale > 0.0) {
            return Err(Error::Domain("Weibull parameters must be positive".into()));
        }
        if !(lower >= 0.0 && upper > lower) {
            return Err(Error::Domain(format!(
                "truncation bounds must satisfy 0 <= lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(EventTimeModel::TruncatedWeibull { shape, scale, lower, upper })
    }

    pub fn mixture(gamma: f64, log_mean: f64, log_var: f64, shape: f64, scale: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Domain(format!("mixture weight must lie in [0,1], got {gamma}")));
        }
        if !(log_var > 0.0 && shape > 0.0 && scale > 0.0) {
            return Err(Error::Domain("mixture component parameters out of range".into()));
        }
        Ok(EventTimeModel::Mixture { gamma, log_mean, log_var, shape, scale })
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            EventTimeModel::Weibull { shape, scale } => weibull_cdf(t, shape, scale),
            EventTimeModel::TruncatedWeibull { shape, scale, lower, upper } => {
                if t <= lower {
                    0.0
                } else if t >= upper {
                    1.0
                } else {
                    let flo = weibull_cdf(lower, shape, scale);
                    let fhi = weibull_cdf(upper, shape, scale);
                    ((weibull_cdf(t, shape, scale) - flo) / (fhi - flo)).clamp(0.0, 1.0)
                }
            }
            EventTimeModel::Mixture { gamma, log_mean, log_var, shape, scale } => {
                gamma * lognormal_cdf(t, log_mean, log_var.sqrt())
                    + (1.0 - gamma) * weibull_cdf(t, shape, scale)
            }
        }
    }

    /// Survival function `1 - F(t)`.
    pub fn survival(&self, t: f64) -> f64 {
        match *self {
            // Direct form avoids cancellation deep in the upper tail.
            EventTimeModel::Weibull { shape, scale } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-(t / scale).powf(shape)).exp()
                }
            }
            _ => 1.0 - self.cdf(t),
        }
    }

    /// Probability density.
    pub fn density(&self, t: f64) -> f64 {
        match *self {
            EventTimeModel::Weibull { shape, scale } => weibull_density(t, shape, scale),
            EventTimeModel::TruncatedWeibull { shape, scale, lower, upper } => {
                if t < lower || t > upper {
                    0.0
                } else {
                    let z = weibull_cdf(upper, shape, scale) - weibull_cdf(lower, shape, scale);
                    weibull_density(t, shape, scale) / z
                }
            }
            EventTimeModel::Mixture { gamma, log_mean, log_var, shape, scale } => {
                gamma * lognormal_density(t, log_mean, log_var.sqrt())
                    + (1.0 - gamma) * weibull_density(t, shape, scale)
            }
        }
    }

    /// Quantile function; `p` must lie in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&p));
        match *self {
            EventTimeModel::Weibull { shape, scale } => weibull_quantile(p, shape, scale),
            EventTimeModel::TruncatedWeibull { shape, scale, lower, upper } => {
                let flo = weibull_cdf(lower, shape, scale);
                let fhi = weibull_cdf(upper, shape, scale);
                weibull_quantile(flo + p * (fhi - flo), shape, scale).clamp(lower, upper)
            }
            EventTimeModel::Mixture { gamma, log_mean, log_var, shape, scale } => {
                // Monotone CDF: bracket with the component quantiles, bisect.
                let sigma = log_var.sqrt();
                let n = Normal::new(0.0, 1.0).unwrap();
                let q_ln = (log_mean + sigma * n.inverse_cdf(p.clamp(1e-14, 1.0 - 1e-14))).exp();
                let q_wb = weibull_quantile(p, shape, scale);
                let (mut lo, mut hi) = (q_ln.min(q_wb), q_ln.max(q_wb));
                if self.cdf(lo) > p {
                    lo = 0.0;
                }
                if self.cdf(hi) < p {
                    hi = hi.max(1.0) * 64.0;
                }
                let _ = gamma;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-13 * hi.max(1.0) {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// The interval outside which the density is identically zero.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            EventTimeModel::TruncatedWeibull { lower, upper, .. } => (lower, upper),
            _ => (0.0, f64::INFINITY),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_split;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weibull_survival_at_scale_point() {
        let m = EventTimeModel::weibull(10.0, 12.0).unwrap();
        assert_abs_diff_eq!(m.survival(12.0), (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn weibull_median_closed_form() {
        let m = EventTimeModel::weibull(10.0, 12.0).unwrap();
        let median = 12.0 * std::f64::consts::LN_2.powf(0.1);
        assert_abs_diff_eq!(m.quantile(0.5), median, epsilon = 1e-12);
        assert_abs_diff_eq!(median, 11.568, epsilon = 5e-4);
    }

    #[test]
    fn truncated_weibull_bounds() {
        let m = EventTimeModel::truncated_weibull(10.0, 12.0, 8.0, 16.0).unwrap();
        assert_eq!(m.cdf(8.0), 0.0);
        assert_eq!(m.cdf(16.0), 1.0);
        assert_eq!(m.density(7.9), 0.0);
        assert_eq!(m.density(16.1), 0.0);
        // Median of the truncated law reported in the simulation design.
        assert_abs_diff_eq!(m.quantile(0.5), 11.6, epsilon = 0.05);
    }

    #[test]
    fn mixture_quantile_inverts_cdf() {
        let m = EventTimeModel::mixture(0.5, 2.45, 0.07, 10.0, 12.0).unwrap();
        for p in [0.01, 0.25, 0.5, 0.9, 0.99] {
            let q = m.quantile(p);
            assert_abs_diff_eq!(m.cdf(q), p, epsilon = 1e-10);
        }
        // Lognormal median e^{2.45} keeps the mixture median near 11.6.
        assert_abs_diff_eq!(m.quantile(0.5), 11.6, epsilon = 0.05);
    }

    #[test]
    fn densities_integrate_to_one() {
        let models = [
            EventTimeModel::weibull(10.0, 12.0).unwrap(),
            EventTimeModel::truncated_weibull(10.0, 12.0, 8.0, 16.0).unwrap(),
            EventTimeModel::mixture(0.2, 2.45, 0.07, 10.0, 12.0).unwrap(),
        ];
        for m in &models {
            let (lo, hi) = m.support();
            let hi = hi.min(80.0);
            // Split at a few interior quantiles to keep each piece tame.
            let cuts: Vec<f64> = [0.05, 0.25, 0.5, 0.75, 0.95]
                .iter()
                .map(|&p| m.quantile(p))
                .collect();
            let total = integrate_split(|t| m.density(t), lo, hi, &cuts);
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn cdf_monotone_nondecreasing() {
        let m = EventTimeModel::mixture(0.5, 2.45, 0.07, 10.0, 12.0).unwrap();
        let mut prev = 0.0;
        for i in 0..400 {
            let t = i as f64 * 0.1;
            let c = m.cdf(t);
            assert!(c >= prev - 1e-15);
            prev = c;
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(EventTimeModel::weibull(-1.0, 12.0).is_err());
        assert!(EventTimeModel::truncated_weibull(10.0, 12.0, 16.0, 8.0).is_err());
        assert!(EventTimeModel::mixture(1.5, 2.45, 0.07, 10.0, 12.0).is_err());
    }
}
