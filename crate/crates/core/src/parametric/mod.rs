//! Parametric maximum likelihood under the three observation models.
//!
//! All three likelihoods place a Weibull law on the event age. They differ
//! in how much of the recall information they use:
//!
//! * current status: only `(S, delta)`;
//! * binary recall: exact recalls kept, every partial recall collapsed
//!   into "no recall", with a two-parameter logistic non-recall curve;
//! * partial recall: the full five-branch observation density with the
//!   six-parameter multinomial-logistic recall model.

pub mod optim;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg::{invert_conditioned, quadratic_form, Matrix};
use crate::model::{
    outcome_density, EventTimeModel, LogisticRecall, RecallModel, RecallStatus, SubjectRecord,
};
use crate::quad::{integrate, pairwise_sum};
use optim::{maximize, numerical_hessian, BfgsOptions, HESSIAN_STEP};

/// Which likelihood to maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodKind {
    CurrentStatus,
    BinaryRecall,
    PartialRecall,
}

impl LikelihoodKind {
    /// Number of recall parameters for this likelihood.
    pub fn eta_len(self) -> usize {
        match self {
            LikelihoodKind::CurrentStatus => 0,
            LikelihoodKind::BinaryRecall => 2,
            LikelihoodKind::PartialRecall => 6,
        }
    }

    /// Total number of free parameters (theta plus eta).
    pub fn n_params(self) -> usize {
        2 + self.eta_len()
    }

    pub fn name(self) -> &'static str {
        match self {
            LikelihoodKind::CurrentStatus => "current",
            LikelihoodKind::BinaryRecall => "binary",
            LikelihoodKind::PartialRecall => "partial",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "current" | "current_status" => Ok(LikelihoodKind::CurrentStatus),
            "binary" | "binary_recall" => Ok(LikelihoodKind::BinaryRecall),
            "partial" | "partial_recall" => Ok(LikelihoodKind::PartialRecall),
            other => Err(Error::UnsupportedKind(other.to_string())),
        }
    }
}

/// A point estimate with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Quantities derived from the fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    /// Median of the fitted Weibull, `theta2 * (ln 2)^(1/theta1)`.
    pub median: Estimate,
    /// Exact-recall probability five years after the event; absent for the
    /// current-status likelihood.
    pub pi0_at_5: Option<Estimate>,
}

/// Result of a maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricFit {
    pub kind: LikelihoodKind,
    pub theta: [f64; 2],
    /// Recall parameters: empty, `[alpha, beta]`, or the six-vector.
    pub eta: Vec<f64>,
    pub loglik: f64,
    /// Covariance of the natural-scale parameters `[theta1, theta2, eta..]`;
    /// empty when the observed information could not be inverted.
    pub covariance: Matrix,
    pub converged: bool,
    pub iterations: usize,
    pub derived: DerivedQuantities,
}

fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn subject_contribution(
    rec: &SubjectRecord,
    kind: LikelihoodKind,
    event: &EventTimeModel,
    recall: Option<&RecallModel>,
    binary_eta: Option<(f64, f64)>,
) -> f64 {
    let s = rec.interview_age;
    match kind {
        LikelihoodKind::CurrentStatus => {
            if rec.event_occurred {
                event.cdf(s)
            } else {
                event.survival(s)
            }
        }
        LikelihoodKind::PartialRecall => outcome_density(rec, event, recall.unwrap()),
        LikelihoodKind::BinaryRecall => {
            let (alpha, beta) = binary_eta.unwrap();
            if !rec.event_occurred {
                event.survival(s)
            } else if rec.recall == RecallStatus::Exact {
                let v = rec.observed;
                if v < s {
                    event.density(v) * (1.0 - expit(alpha + beta * (s - v)))
                } else {
                    0.0
                }
            } else {
                // Month, year and complete non-recall all enter as non-recall.
                let (sup_lo, sup_hi) = event.support();
                integrate(
                    |u| event.density(u) * expit(alpha + beta * (s - u)),
                    sup_lo.max(0.0),
                    s.min(sup_hi),
                )
            }
        }
    }
}

/// Log-likelihood of the dataset for the given likelihood kind and
/// parameters. Returns `-inf` when any subject receives a nonpositive or
/// non-finite contribution.
pub fn loglik(data: &[SubjectRecord], kind: LikelihoodKind, theta: [f64; 2], eta: &[f64]) -> f64 {
    if !(theta[0] > 0.0 && theta[1] > 0.0 && theta.iter().all(|t| t.is_finite())) {
        return f64::NEG_INFINITY;
    }
    if eta.len() != kind.eta_len() || eta.iter().any(|e| !e.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let event = EventTimeModel::Weibull { shape: theta[0], scale: theta[1] };
    let recall = match kind {
        LikelihoodKind::PartialRecall => Some(RecallModel::Logistic(LogisticRecall {
            eta: [eta[0], eta[1], eta[2], eta[3], eta[4], eta[5]],
        })),
        _ => None,
    };
    let binary_eta = match kind {
        LikelihoodKind::BinaryRecall => Some((eta[0], eta[1])),
        _ => None,
    };

    let term = |rec: &SubjectRecord| -> f64 {
        let c = subject_contribution(rec, kind, &event, recall.as_ref(), binary_eta);
        if c > 0.0 && c.is_finite() {
            c.ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let contributions: Vec<f64> = if data.len() >= 512 {
        data.par_iter().map(term).collect()
    } else {
        data.iter().map(term).collect()
    };
    if contributions.iter().any(|c| !c.is_finite()) {
        return f64::NEG_INFINITY;
    }
    pairwise_sum(&contributions)
}

/// Plausibility box for the Weibull shape. Current-status data can be
/// separated (every low age censored, every high age an event), in which
/// case the shape MLE diverges; the log-shape coordinate therefore runs
/// through a smooth clamp that saturates at these bounds, so ridge fits
/// settle at the cap with a vanishing gradient instead of wandering off.
/// Interior fits (shape well inside the box) are unaffected to machine
/// precision.
const LN_SHAPE_LO: f64 = -3.0; // shape 0.05
const LN_SHAPE_HI: f64 = 3.688879454113936; // shape 40
const CLAMP_SHARPNESS: f64 = 20.0;

fn softplus_k(t: f64) -> f64 {
    let k = CLAMP_SHARPNESS;
    if t > 0.0 {
        t + (-k * t).exp().ln_1p() / k
    } else {
        (k * t).exp().ln_1p() / k
    }
}

fn softclamp(x: f64) -> f64 {
    LN_SHAPE_LO + softplus_k(x - LN_SHAPE_LO) - softplus_k(x - LN_SHAPE_HI)
}

fn softclamp_deriv(x: f64) -> f64 {
    fn expit_k(t: f64) -> f64 {
        let k = CLAMP_SHARPNESS;
        if t >= 0.0 {
            1.0 / (1.0 + (-k * t).exp())
        } else {
            let e = (k * t).exp();
            e / (1.0 + e)
        }
    }
    expit_k(x - LN_SHAPE_LO) - expit_k(x - LN_SHAPE_HI)
}

/// Inverse of `softclamp` by Newton iteration, with the unconstrained
/// coordinate clipped to a range where the clamp is numerically invertible.
fn softclamp_inv(y: f64) -> f64 {
    let y = y.clamp(softclamp(-9.0), softclamp(9.0));
    let mut x = y;
    for _ in 0..60 {
        let f = softclamp(x) - y;
        let d = softclamp_deriv(x).max(1e-12);
        let step = f / d;
        x -= step;
        if step.abs() < 1e-13 {
            break;
        }
    }
    x.clamp(-9.0, 9.0)
}

fn pack(theta: [f64; 2], eta: &[f64]) -> Vec<f64> {
    let mut psi = vec![softclamp_inv(theta[0].ln()), theta[1].ln()];
    psi.extend_from_slice(eta);
    psi
}

fn unpack(psi: &[f64]) -> ([f64; 2], Vec<f64>) {
    ([softclamp(psi[0]).exp(), psi[1].exp()], psi[2..].to_vec())
}

fn objective<'a>(
    data: &'a [SubjectRecord],
    kind: LikelihoodKind,
) -> impl Fn(&[f64]) -> f64 + 'a {
    move |psi: &[f64]| {
        let (theta, eta) = unpack(psi);
        loglik(data, kind, theta, &eta)
    }
}

/// Crude Weibull initializer: match the 50th and 90th percentiles of the
/// exactly recalled event ages, falling back to (10, 12) when they carry
/// too little information.
fn default_init(data: &[SubjectRecord], kind: LikelihoodKind) -> Vec<f64> {
    let mut exact: Vec<f64> = data
        .iter()
        .filter(|r| r.event_occurred && r.recall == RecallStatus::Exact && r.observed > 0.0)
        .map(|r| r.observed)
        .collect();
    let mut theta = [10.0, 12.0];
    if exact.len() >= 10 {
        exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| exact[((exact.len() as f64 - 1.0) * p).round() as usize];
        let (q50, q90) = (q(0.5), q(0.9));
        if q90 > q50 * 1.001 {
            let shape = ((10.0f64.ln() / 2.0f64.ln()).ln() / (q90 / q50).ln()).clamp(0.5, 35.0);
            let scale = q50 / 2.0f64.ln().powf(1.0 / shape);
            theta = [shape, scale];
        }
    }
    let mut init = theta.to_vec();
    init.extend(std::iter::repeat(0.0).take(kind.eta_len()));
    init
}

fn validate_for_fit(data: &[SubjectRecord], kind: LikelihoodKind) -> Result<()> {
    if data.is_empty() {
        return Err(Error::DegenerateData("empty dataset".into()));
    }
    if kind == LikelihoodKind::CurrentStatus {
        let events = data.iter().filter(|r| r.event_occurred).count();
        if events == 0 || events == data.len() {
            return Err(Error::DegenerateData(
                "current-status fitting needs at least one event and one censored subject".into(),
            ));
        }
    }
    Ok(())
}

/// Maximize the chosen likelihood. `init` is a natural-scale parameter
/// vector `[theta1, theta2, eta..]`; when absent a quantile-match start is
/// used. On non-convergence three jittered restarts are tried and the best
/// iterate is returned with `converged = false`.
pub fn fit_mle(
    data: &[SubjectRecord],
    kind: LikelihoodKind,
    init: Option<&[f64]>,
) -> Result<ParametricFit> {
    validate_for_fit(data, kind)?;
    let init_nat = match init {
        Some(v) => {
            if v.len() != kind.n_params() {
                return Err(Error::Domain(format!(
                    "initial vector must have {} entries, got {}",
                    kind.n_params(),
                    v.len()
                )));
            }
            v.to_vec()
        }
        None => default_init(data, kind),
    };
    if !(init_nat[0] > 0.0 && init_nat[1] > 0.0) {
        return Err(Error::Domain("initial theta must be positive".into()));
    }

    let obj = objective(data, kind);
    let opts = BfgsOptions::default();
    let psi0 = pack([init_nat[0], init_nat[1]], &init_nat[2..]);
    let mut best = maximize(&obj, &psi0, &opts);
    let mut total_iters = best.iterations;
    if !best.converged {
        for k in 1..=3usize {
            let jitter: Vec<f64> = psi0
                .iter()
                .enumerate()
                .map(|(j, &p)| p + 0.2 * k as f64 * if j % 2 == 0 { 1.0 } else { -1.0 })
                .collect();
            let attempt = maximize(&obj, &jitter, &opts);
            total_iters += attempt.iterations;
            let better = (attempt.converged && !best.converged)
                || (attempt.converged == best.converged && attempt.value > best.value);
            if better {
                best = attempt;
            }
            if best.converged {
                break;
            }
        }
    }

    let (theta, eta) = unpack(&best.x);
    let mut fit = ParametricFit {
        kind,
        theta,
        eta,
        loglik: best.value,
        covariance: Vec::new(),
        converged: best.converged,
        iterations: total_iters,
        derived: DerivedQuantities {
            median: Estimate { value: weibull_median(theta), se: f64::NAN },
            pi0_at_5: None,
        },
    };
    match covariance_and_derived(data, &fit) {
        Ok((cov, derived)) => {
            fit.covariance = cov;
            fit.derived = derived;
        }
        Err(_) => {
            fit.derived = derived_without_se(&fit);
        }
    }
    Ok(fit)
}

fn weibull_median(theta: [f64; 2]) -> f64 {
    theta[1] * std::f64::consts::LN_2.powf(1.0 / theta[0])
}

fn pi0_at_5(fit: &ParametricFit) -> Option<f64> {
    match fit.kind {
        LikelihoodKind::CurrentStatus => None,
        LikelihoodKind::BinaryRecall => {
            Some(1.0 - expit(fit.eta[0] + 5.0 * fit.eta[1]))
        }
        LikelihoodKind::PartialRecall => {
            let l = LogisticRecall {
                eta: [fit.eta[0], fit.eta[1], fit.eta[2], fit.eta[3], fit.eta[4], fit.eta[5]],
            };
            Some(l.probs(5.0)[0])
        }
    }
}

fn derived_without_se(fit: &ParametricFit) -> DerivedQuantities {
    DerivedQuantities {
        median: Estimate { value: weibull_median(fit.theta), se: f64::NAN },
        pi0_at_5: pi0_at_5(fit).map(|v| Estimate { value: v, se: f64::NAN }),
    }
}

/// Gradient of the median with respect to the natural parameters.
fn median_gradient(fit: &ParametricFit) -> Vec<f64> {
    let [t1, t2] = fit.theta;
    let m = weibull_median(fit.theta);
    let mut g = vec![0.0; fit.kind.n_params()];
    g[0] = -m * std::f64::consts::LN_2.ln() / (t1 * t1);
    g[1] = m / t2;
    g
}

/// Gradient of the exact-recall probability at five years elapsed.
fn pi0_gradient(fit: &ParametricFit) -> Option<Vec<f64>> {
    let mut g = vec![0.0; fit.kind.n_params()];
    match fit.kind {
        LikelihoodKind::CurrentStatus => None,
        LikelihoodKind::BinaryRecall => {
            let p = expit(fit.eta[0] + 5.0 * fit.eta[1]);
            g[2] = -p * (1.0 - p);
            g[3] = -5.0 * p * (1.0 - p);
            Some(g)
        }
        LikelihoodKind::PartialRecall => {
            let l = LogisticRecall {
                eta: [fit.eta[0], fit.eta[1], fit.eta[2], fit.eta[3], fit.eta[4], fit.eta[5]],
            };
            let p = l.probs(5.0);
            let (p0, p_mo, p_yr, p_nr) = (p[0], p[1], p[2], p[3]);
            // Slot order mirrors eta: no-recall, month, year intercepts
            // then the matching slopes.
            g[2] = -p0 * p_nr;
            g[3] = -p0 * p_mo;
            g[4] = -p0 * p_yr;
            g[5] = -5.0 * p0 * p_nr;
            g[6] = -5.0 * p0 * p_mo;
            g[7] = -5.0 * p0 * p_yr;
            Some(g)
        }
    }
}

fn covariance_and_derived(
    data: &[SubjectRecord],
    fit: &ParametricFit,
) -> Result<(Matrix, DerivedQuantities)> {
    let obj = objective(data, fit.kind);
    let psi = pack(fit.theta, &fit.eta);
    let hess = numerical_hessian(&obj, &psi, HESSIAN_STEP);
    // Observed information is the negated Hessian of the log-likelihood.
    let info: Matrix = hess.iter().map(|row| row.iter().map(|v| -v).collect()).collect();
    let cov_psi = invert_conditioned(&info, 1e12)?;
    // Map through the reparametrization: clamped log for the shape, plain
    // log for the scale, identity for the recall parameters.
    let n = psi.len();
    let jac: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => fit.theta[0] * softclamp_deriv(psi[0]),
            1 => fit.theta[1],
            _ => 1.0,
        })
        .collect();
    let cov: Matrix = (0..n)
        .map(|i| (0..n).map(|j| jac[i] * cov_psi[i][j] * jac[j]).collect())
        .collect();

    let med_se = quadratic_form(&cov, &median_gradient(fit)).max(0.0).sqrt();
    let pi0 = pi0_at_5(fit).map(|value| {
        let se = pi0_gradient(fit)
            .map(|g| quadratic_form(&cov, &g).max(0.0).sqrt())
            .unwrap_or(f64::NAN);
        Estimate { value, se }
    });
    let derived = DerivedQuantities {
        median: Estimate { value: weibull_median(fit.theta), se: med_se },
        pi0_at_5: pi0,
    };
    Ok((cov, derived))
}

/// Observed-information covariance and delta-method standard errors for a
/// converged fit.
pub fn standard_errors(
    fit: &ParametricFit,
    data: &[SubjectRecord],
) -> Result<(Matrix, DerivedQuantities)> {
    if !fit.converged {
        return Err(Error::FitNotConverged);
    }
    covariance_and_derived(data, fit)
}

/// One point of a survival curve with its pointwise 95% confidence
/// half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub age: f64,
    pub estimate: f64,
    pub ci_halfwidth: f64,
}

/// Fitted survival function on a grid of ages, with pointwise 95% normal
/// confidence intervals from the delta method.
pub fn survival_curve(fit: &ParametricFit, ages: &[f64]) -> Result<Vec<SurvivalPoint>> {
    if !fit.converged {
        return Err(Error::FitNotConverged);
    }
    let [t1, t2] = fit.theta;
    let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.975);
    let n = fit.kind.n_params();
    Ok(ages
        .iter()
        .map(|&age| {
            if age <= 0.0 {
                return SurvivalPoint { age, estimate: 1.0, ci_halfwidth: 0.0 };
            }
            let a = (age / t2).powf(t1);
            let sbar = (-a).exp();
            let mut g = vec![0.0; n];
            g[0] = -sbar * a * (age / t2).ln();
            g[1] = sbar * a * t1 / t2;
            let var = if fit.covariance.len() == n {
                quadratic_form(&fit.covariance, &g).max(0.0)
            } else {
                f64::NAN
            };
            SurvivalPoint { age, estimate: sbar, ci_halfwidth: z * var.sqrt() }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{generate, Scenario};
    use approx::assert_abs_diff_eq;

    fn censored_subject(s: f64) -> SubjectRecord {
        SubjectRecord {
            id: 0,
            interview_age: s,
            event_occurred: false,
            recall: RecallStatus::Exact,
            observed: 0.0,
            birth_month: 1,
            birth_offset: 0.0,
            true_age: None,
        }
    }

    #[test]
    fn censored_subject_contribution_closed_form() {
        let rec = vec![censored_subject(12.0)];
        for kind in [
            LikelihoodKind::CurrentStatus,
            LikelihoodKind::BinaryRecall,
            LikelihoodKind::PartialRecall,
        ] {
            let eta = vec![0.0; kind.eta_len()];
            let ll = loglik(&rec, kind, [10.0, 12.0], &eta);
            assert_abs_diff_eq!(ll, -1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn partial_nests_binary_on_exact_or_none_data() {
        let mut sc = Scenario::preset("case_i", 400, 17).unwrap();
        // Only exact recall or no recall occurs.
        sc.recall = RecallModel::Logistic(
            LogisticRecall::new([0.4, -40.0, -40.0, 0.1, 0.0, 0.0]).unwrap(),
        );
        let data = generate(&sc).unwrap();
        assert!(data
            .iter()
            .all(|r| !r.event_occurred
                || matches!(r.recall, RecallStatus::Exact | RecallStatus::NoRecall)));
        let (alpha, beta) = (0.4, 0.1);
        let ll_partial = loglik(
            &data,
            LikelihoodKind::PartialRecall,
            [10.0, 12.0],
            &[alpha, -40.0, -40.0, beta, 0.0, 0.0],
        );
        let ll_binary = loglik(&data, LikelihoodKind::BinaryRecall, [10.0, 12.0], &[alpha, beta]);
        assert_abs_diff_eq!(ll_partial, ll_binary, epsilon = 1e-8);
    }

    #[test]
    fn truth_beats_distant_parameters_on_case_i() {
        let sc = Scenario::preset("case_i", 1000, 23).unwrap();
        let data = generate(&sc).unwrap();
        let eta_true = [-0.05, -0.05, -0.05, 0.01, 0.01, 0.01];
        let at_truth = loglik(&data, LikelihoodKind::PartialRecall, [10.0, 12.0], &eta_true);
        let far = loglik(&data, LikelihoodKind::PartialRecall, [5.0, 15.0], &eta_true);
        assert!(at_truth > far);
    }

    #[test]
    fn loglik_invariant_under_permutation() {
        let sc = Scenario::preset("case_ii", 300, 31).unwrap();
        let mut data = generate(&sc).unwrap();
        let eta = [-1.0, -0.5, -0.3, 0.05, 0.1, 0.02];
        let a = loglik(&data, LikelihoodKind::PartialRecall, [9.0, 11.5], &eta);
        data.reverse();
        data.swap(10, 200);
        let b = loglik(&data, LikelihoodKind::PartialRecall, [9.0, 11.5], &eta);
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }

    #[test]
    fn fit_recovers_case_i_scale_at_n1000() {
        let sc = Scenario::preset("case_i", 1000, 5).unwrap();
        let data = generate(&sc).unwrap();
        let fit = fit_mle(&data, LikelihoodKind::PartialRecall, None).unwrap();
        assert!(fit.converged, "gradient max-norm too large");
        assert_abs_diff_eq!(fit.theta[1], 12.0, epsilon = 0.2);
        // Covariance sanity: PSD diagonal.
        assert!(fit.covariance.iter().enumerate().all(|(i, row)| row[i] >= 0.0));
    }

    #[test]
    fn degenerate_current_status_data_rejected() {
        let data = vec![censored_subject(12.0), censored_subject(9.0)];
        assert!(matches!(
            fit_mle(&data, LikelihoodKind::CurrentStatus, None),
            Err(Error::DegenerateData(_))
        ));
        assert!(matches!(
            fit_mle(&[], LikelihoodKind::PartialRecall, None),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn median_closed_form_and_se_positive() {
        assert_abs_diff_eq!(weibull_median([10.0, 12.0]), 11.568, epsilon = 5e-4);
    }

    #[test]
    fn survival_curve_shape() {
        let sc = Scenario::preset("case_i", 600, 13).unwrap();
        let data = generate(&sc).unwrap();
        let fit = fit_mle(&data, LikelihoodKind::PartialRecall, None).unwrap();
        assert!(fit.converged);
        let median = fit.derived.median.value;
        let pts = survival_curve(&fit, &[0.5, median, 40.0]).unwrap();
        assert_abs_diff_eq!(pts[0].estimate, 1.0, epsilon = 1e-6);
        assert!(pts[0].ci_halfwidth < 1e-4);
        assert_abs_diff_eq!(pts[1].estimate, 0.5, epsilon = 1e-10);
        assert!(pts[2].estimate < 1e-8);
    }

    #[test]
    fn two_stencil_gradient_agreement() {
        let sc = Scenario::preset("case_ii", 200, 41).unwrap();
        let data = generate(&sc).unwrap();
        let obj = objective(&data, LikelihoodKind::PartialRecall);
        let psi = pack([9.5, 12.3], &[-1.5, -0.8, -0.5, 0.04, 0.2, 0.03]);
        let g1 = optim::numerical_gradient(&obj, &psi, 1e-5);
        let g2 = optim::numerical_gradient(&obj, &psi, 1e-6);
        for (a, b) in g1.iter().zip(&g2) {
            let denom = a.abs().max(b.abs()).max(1e-8);
            assert!((a - b).abs() / denom < 1e-3, "stencils disagree: {a} vs {b}");
        }
    }
}
