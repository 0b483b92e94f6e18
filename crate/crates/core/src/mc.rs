//! Monte Carlo experiment runner.
//!
//! Replicates a scenario, fits the requested estimators on every
//! replication, and summarizes bias, spread and MSE per quantity. Each
//! replication draws its dataset from a seed derived from (config seed,
//! replication index), so parallel and serial runs produce identical
//! output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonparametric::{edf, fit_amle, fit_binary_amle, AmleOptions};
use crate::parametric::{fit_mle, LikelihoodKind};
use crate::simulate::{generate, Scenario};

/// Estimators the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Current,
    Binary,
    Partial,
    AmlePartial,
    AmleBinary,
    Edf,
}

impl EstimatorKind {
    pub fn is_parametric(self) -> bool {
        matches!(self, EstimatorKind::Current | EstimatorKind::Binary | EstimatorKind::Partial)
    }

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Current => "current",
            EstimatorKind::Binary => "binary",
            EstimatorKind::Partial => "partial",
            EstimatorKind::AmlePartial => "amle_partial",
            EstimatorKind::AmleBinary => "amle_binary",
            EstimatorKind::Edf => "edf",
        }
    }
}

/// Scenario reference: a named preset or an inline definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSpec {
    Preset(String),
    Inline(Box<Scenario>),
}

/// Monte Carlo configuration (mirrors the JSON accepted by the CLI).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub scenario: ScenarioSpec,
    pub n: usize,
    pub reps: usize,
    pub estimators: Vec<EstimatorKind>,
    pub seed: u64,
    /// Ages at which nonparametric estimators are evaluated.
    #[serde(default)]
    pub age_grid: Option<Vec<f64>>,
    /// Elapsed-time knots for the AMLE recall model.
    #[serde(default)]
    pub knots: Option<Vec<f64>>,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl McConfig {
    pub fn resolve_scenario(&self) -> Result<Scenario> {
        if self.reps < 1 {
            return Err(Error::Domain("reps must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Domain("estimator set must be nonempty".into()));
        }
        let mut sc = match &self.scenario {
            ScenarioSpec::Preset(name) => Scenario::preset(name, self.n, self.seed)?,
            ScenarioSpec::Inline(sc) => (**sc).clone(),
        };
        sc.n = self.n;
        Ok(sc)
    }

    pub fn case_label(&self) -> String {
        match &self.scenario {
            ScenarioSpec::Preset(name) => name.clone(),
            ScenarioSpec::Inline(_) => "custom".into(),
        }
    }

    pub fn resolved_knots(&self) -> Vec<f64> {
        self.knots.clone().unwrap_or_else(|| vec![0.0, 3.0, 6.0, 9.0])
    }
}

/// One summary row: a quantity of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub case_label: String,
    pub estimator: String,
    pub quantity: String,
    pub bias: f64,
    pub stdev: f64,
    pub mse: f64,
    pub reps_used: usize,
    pub failures: usize,
}

/// One raw replication value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRaw {
    pub rep: usize,
    pub estimator: String,
    pub quantity: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub rows: Vec<McRow>,
    pub raw: Vec<McRaw>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Seed of one replication derived from the configuration seed.
pub fn rep_seed(seed: u64, rep: usize) -> u64 {
    splitmix64(seed ^ splitmix64(rep as u64))
}

/// (bias, stdev, mse) with the population-variance convention: `stdev` is
/// the sample standard deviation while `mse = bias^2 + variance` uses the
/// population variance, so the identity holds exactly.
fn summarize(values: &[f64], truth: f64) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let bias = mean - truth;
    if n == 1 {
        return (bias, 0.0, bias * bias);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let stdev = (ss / (n - 1) as f64).sqrt();
    let pop_var = ss / n as f64;
    (bias, stdev, bias * bias + pop_var)
}

/// True values of the parametric quantities implied by a scenario. For
/// misspecified (mixture) scenarios the Weibull component parameters are
/// the reference, matching how estimation error is reported.
fn parametric_truth(sc: &Scenario) -> [f64; 4] {
    use crate::model::EventTimeModel::*;
    let (shape, scale) = match sc.event {
        Weibull { shape, scale } => (shape, scale),
        TruncatedWeibull { shape, scale, .. } => (shape, scale),
        Mixture { shape, scale, .. } => (shape, scale),
    };
    let median = sc.event.quantile(0.5);
    let pi0 = sc.recall.probs(5.0)[0];
    [shape, scale, median, pi0]
}

const PARAM_QUANTITIES: [&str; 4] = ["theta1", "theta2", "median", "pi0_at_5"];

/// Run the parametric comparison: per replication, fit every requested
/// parametric estimator and record theta, the median and the exact-recall
/// probability at five years.
pub fn run_mc_parametric(cfg: &McConfig) -> Result<McSummary> {
    let scenario = cfg.resolve_scenario()?;
    let estimators: Vec<EstimatorKind> =
        cfg.estimators.iter().copied().filter(|e| e.is_parametric()).collect();
    if estimators.is_empty() {
        return Err(Error::Domain("no parametric estimators requested".into()));
    }
    let truth = parametric_truth(&scenario);

    type RepOut = Vec<(EstimatorKind, Option<[f64; 4]>)>;
    let per_rep: Vec<RepOut> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let sc = Scenario { seed: rep_seed(cfg.seed, rep), ..scenario.clone() };
            let data = generate(&sc).expect("validated scenario");
            estimators
                .iter()
                .map(|&est| {
                    let kind = match est {
                        EstimatorKind::Current => LikelihoodKind::CurrentStatus,
                        EstimatorKind::Binary => LikelihoodKind::BinaryRecall,
                        EstimatorKind::Partial => LikelihoodKind::PartialRecall,
                        _ => unreachable!(),
                    };
                    let out = match fit_mle(&data, kind, None) {
                        Ok(fit) if fit.converged => Some([
                            fit.theta[0],
                            fit.theta[1],
                            fit.derived.median.value,
                            fit.derived.pi0_at_5.map(|e| e.value).unwrap_or(f64::NAN),
                        ]),
                        _ => None,
                    };
                    (est, out)
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    let mut raw = Vec::new();
    for &est in &estimators {
        let mut values: [Vec<f64>; 4] = Default::default();
        let mut failures = 0usize;
        for (rep, outs) in per_rep.iter().enumerate() {
            let out = outs.iter().find(|(e, _)| *e == est).and_then(|(_, o)| *o);
            match out {
                Some(vals) => {
                    for (q, &v) in vals.iter().enumerate() {
                        values[q].push(v);
                        raw.push(McRaw {
                            rep,
                            estimator: est.name().into(),
                            quantity: PARAM_QUANTITIES[q].into(),
                            value: v,
                        });
                    }
                }
                None => failures += 1,
            }
        }
        let reps_used = cfg.reps - failures;
        for (q, name) in PARAM_QUANTITIES.iter().enumerate() {
            let (bias, stdev, mse) =
                if est == EstimatorKind::Current && *name == "pi0_at_5" {
                    (f64::NAN, f64::NAN, f64::NAN)
                } else {
                    summarize(&values[q], truth[q])
                };
            rows.push(McRow {
                case_label: cfg.case_label(),
                estimator: est.name().into(),
                quantity: (*name).into(),
                bias,
                stdev,
                mse,
                reps_used,
                failures,
            });
        }
    }
    Ok(McSummary { rows, raw })
}

/// Run the nonparametric comparison over an age grid: the partial and
/// binary AMLEs plus the complete-data EDF benchmark evaluated from the
/// true simulated ages.
pub fn run_mc_nonparametric(cfg: &McConfig, age_grid: &[f64]) -> Result<McSummary> {
    let scenario = cfg.resolve_scenario()?;
    let estimators: Vec<EstimatorKind> =
        cfg.estimators.iter().copied().filter(|e| !e.is_parametric()).collect();
    if estimators.is_empty() {
        return Err(Error::Domain("no nonparametric estimators requested".into()));
    }
    if age_grid.is_empty() {
        return Err(Error::Domain("age grid must be nonempty".into()));
    }
    let knots = cfg.resolved_knots();

    type RepOut = Vec<(EstimatorKind, Option<Vec<f64>>)>;
    let per_rep: Vec<RepOut> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let sc = Scenario { seed: rep_seed(cfg.seed, rep), ..scenario.clone() };
            let data = generate(&sc).expect("validated scenario");
            estimators
                .iter()
                .map(|&est| {
                    let curve: Option<Vec<f64>> = match est {
                        EstimatorKind::AmlePartial => {
                            fit_amle(&data, &knots, &AmleOptions::default())
                                .ok()
                                .filter(|f| f.converged)
                                .map(|f| age_grid.iter().map(|&a| f.cdf(a)).collect())
                        }
                        EstimatorKind::AmleBinary => fit_binary_amle(&data, &knots)
                            .ok()
                            .filter(|f| f.converged)
                            .map(|f| age_grid.iter().map(|&a| f.cdf(a)).collect()),
                        EstimatorKind::Edf => {
                            let ages: Vec<f64> =
                                data.iter().filter_map(|r| r.true_age).collect();
                            edf(&ages)
                                .ok()
                                .map(|f| age_grid.iter().map(|&a| f.eval(a)).collect())
                        }
                        _ => unreachable!(),
                    };
                    (est, curve)
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    let mut raw = Vec::new();
    for &est in &estimators {
        let mut per_age: Vec<Vec<f64>> = vec![Vec::new(); age_grid.len()];
        let mut failures = 0usize;
        for (rep, outs) in per_rep.iter().enumerate() {
            let out = outs.iter().find(|(e, _)| *e == est).and_then(|(_, o)| o.clone());
            match out {
                Some(curve) => {
                    for (k, &v) in curve.iter().enumerate() {
                        per_age[k].push(v);
                        raw.push(McRaw {
                            rep,
                            estimator: est.name().into(),
                            quantity: format!("F({})", age_grid[k]),
                            value: v,
                        });
                    }
                }
                None => failures += 1,
            }
        }
        let reps_used = cfg.reps - failures;
        for (k, &age) in age_grid.iter().enumerate() {
            let truth = scenario.event.cdf(age);
            let (bias, stdev, mse) = summarize(&per_age[k], truth);
            rows.push(McRow {
                case_label: cfg.case_label(),
                estimator: est.name().into(),
                quantity: format!("F({age})"),
                bias,
                stdev,
                mse,
                reps_used,
                failures,
            });
        }
    }
    Ok(McSummary { rows, raw })
}

/// Sensitivity run: identical machinery to the parametric comparison; the
/// configuration is expected to carry a lognormal–Weibull mixture
/// scenario so the Weibull fits are misspecified.
pub fn run_sensitivity(cfg: &McConfig) -> Result<McSummary> {
    run_mc_parametric(cfg)
}
