//! Synthetic dataset generation.
//!
//! Scenarios draw, independently per subject, a true event age `T`, an
//! interview age `S`, a birth month `m` and a birth offset `d`; the recall
//! status of subjects whose event has occurred is then a multinomial draw
//! with probabilities evaluated at the elapsed time `S - T`. Every subject
//! consumes its own counter-derived random stream, so generation is
//! reproducible regardless of evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    observed_v, EventTimeModel, LogisticRecall, PiecewiseRecall, RecallModel, RecallStatus,
    SubjectRecord, MONTH,
};

/// Discrete uniform distribution on `min..=max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteUniform {
    pub min: u32,
    pub max: u32,
}

/// Continuous uniform distribution on `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousUniform {
    pub min: f64,
    pub max: f64,
}

fn default_interview() -> DiscreteUniform {
    DiscreteUniform { min: 8, max: 21 }
}

fn default_birth_month() -> DiscreteUniform {
    DiscreteUniform { min: 1, max: 12 }
}

fn default_birth_offset() -> ContinuousUniform {
    ContinuousUniform { min: 0.0, max: MONTH }
}

/// A complete simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub n: usize,
    pub event: EventTimeModel,
    pub recall: RecallModel,
    #[serde(default = "default_interview")]
    pub interview: DiscreteUniform,
    #[serde(default = "default_birth_month")]
    pub birth_month: DiscreteUniform,
    #[serde(default = "default_birth_offset")]
    pub birth_offset: ContinuousUniform,
    #[serde(default)]
    pub seed: u64,
}

const PIECEWISE_KNOTS: [f64; 4] = [0.0, 3.0, 6.0, 9.0];

fn logistic(eta: [f64; 6]) -> RecallModel {
    RecallModel::Logistic(LogisticRecall::new(eta).unwrap())
}

fn piecewise(rows: [[f64; 4]; 4]) -> RecallModel {
    RecallModel::Piecewise(
        PiecewiseRecall::new(
            PIECEWISE_KNOTS.to_vec(),
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap(),
    )
}

impl Scenario {
    /// Named scenario presets used throughout the experiment harness.
    ///
    /// `case_i` .. `case_iv` pair a Weibull(10, 12) event law with four
    /// multinomial-logistic recall settings; `case_a` .. `case_c` pair a
    /// Weibull(10, 12) truncated to [8, 16] with piecewise-constant recall
    /// on knots (0, 3, 6, 9); `mixture_g02` / `mixture_g05` replace the
    /// event law by a lognormal–Weibull mixture with weight 0.2 / 0.5.
    pub fn preset(name: &str, n: usize, seed: u64) -> Result<Scenario> {
        let weibull = EventTimeModel::weibull(10.0, 12.0)?;
        let truncated = EventTimeModel::truncated_weibull(10.0, 12.0, 8.0, 16.0)?;
        let case_i_eta = [-0.05, -0.05, -0.05, 0.01, 0.01, 0.01];
        let (event, recall) = match name {
            "case_i" => (weibull, logistic(case_i_eta)),
            "case_ii" => (weibull, logistic([-2.0, -1.0, -0.4, 0.05, 0.3, 0.02])),
            "case_iii" => (weibull, logistic([-2.0, -0.7, -1.0, 0.5, 0.06, 0.2])),
            "case_iv" => (weibull, logistic([-2.0, -2.0, -2.0, 0.3, 0.08, 0.08])),
            "case_a" => (
                truncated,
                piecewise([
                    [0.15, 0.10, 0.08, 0.05],
                    [0.28, 0.20, 0.15, 0.10],
                    [0.22, 0.25, 0.17, 0.10],
                    [0.35, 0.45, 0.60, 0.75],
                ]),
            ),
            "case_b" => (
                truncated,
                piecewise([
                    [0.69, 0.55, 0.49, 0.31],
                    [0.08, 0.05, 0.03, 0.02],
                    [0.08, 0.05, 0.03, 0.02],
                    [0.15, 0.35, 0.45, 0.65],
                ]),
            ),
            "case_c" => (truncated, piecewise([[0.25; 4]; 4])),
            "mixture_g02" => (
                EventTimeModel::mixture(0.2, 2.45, 0.07, 10.0, 12.0)?,
                logistic(case_i_eta),
            ),
            "mixture_g05" => (
                EventTimeModel::mixture(0.5, 2.45, 0.07, 10.0, 12.0)?,
                logistic(case_i_eta),
            ),
            other => {
                return Err(Error::Domain(format!("unknown scenario preset `{other}`")));
            }
        };
        Ok(Scenario {
            n,
            event,
            recall,
            interview: default_interview(),
            birth_month: default_birth_month(),
            birth_offset: default_birth_offset(),
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Domain("scenario sample size must be at least 1".into()));
        }
        if self.interview.min > self.interview.max || self.interview.min == 0 {
            return Err(Error::Domain("interview age range must be nonempty and positive".into()));
        }
        if !(1..=12).contains(&self.birth_month.min)
            || !(1..=12).contains(&self.birth_month.max)
            || self.birth_month.min > self.birth_month.max
        {
            return Err(Error::Domain("birth month range must lie within 1..=12".into()));
        }
        if !(self.birth_offset.min >= 0.0
            && self.birth_offset.max <= MONTH + 1e-12
            && self.birth_offset.min <= self.birth_offset.max)
        {
            return Err(Error::Domain("birth offset range must lie within [0, 1/12]".into()));
        }
        Ok(())
    }
}

fn draw_discrete(u: f64, range: DiscreteUniform) -> u32 {
    let span = (range.max - range.min + 1) as f64;
    let k = (u * span).floor() as u32;
    (range.min + k).min(range.max)
}

fn draw_subject(sc: &Scenario, index: u64) -> SubjectRecord {
    let mut rng = ChaCha12Rng::seed_from_u64(sc.seed);
    rng.set_stream(index + 1);

    let t = sc.event.quantile(rng.random::<f64>().clamp(1e-15, 1.0 - 1e-15));
    let s = draw_discrete(rng.random::<f64>(), sc.interview) as f64;
    let m = draw_discrete(rng.random::<f64>(), sc.birth_month) as u8;
    let d = sc.birth_offset.min
        + rng.random::<f64>() * (sc.birth_offset.max - sc.birth_offset.min);

    let occurred = t <= s;
    let recall = if occurred {
        let probs = sc.recall.probs(s - t);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = RecallStatus::NoRecall;
        for (k, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = RecallStatus::from_code(k as u8).unwrap();
                break;
            }
        }
        chosen
    } else {
        RecallStatus::Exact
    };
    let v = observed_v(t, d, m, recall, occurred).expect("draws lie in the valid domain");

    SubjectRecord {
        id: index + 1,
        interview_age: s,
        event_occurred: occurred,
        recall,
        observed: v,
        birth_month: m,
        birth_offset: d,
        true_age: Some(t),
    }
}

/// Generate a dataset under the scenario. Deterministic given the seed,
/// and identical whether generated serially or in parallel.
pub fn generate(sc: &Scenario) -> Result<Vec<SubjectRecord>> {
    sc.validate()?;
    let records: Vec<SubjectRecord> = (0..sc.n as u64)
        .into_par_iter()
        .map(|i| draw_subject(sc, i))
        .collect();
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn deterministic_given_seed() {
        let sc = Scenario::preset("case_ii", 500, 42).unwrap();
        let a = generate(&sc).unwrap();
        let b = generate(&sc).unwrap();
        assert_eq!(a, b);
        let sc2 = Scenario { seed: 43, ..sc };
        let c = generate(&sc2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn exact_recall_prob_near_half_in_case_iv() {
        // The case_iv recall setting puts the exact-recall probability at
        // 0.5 five years after the event.
        let sc = Scenario::preset("case_iv", 10_000, 7).unwrap();
        let data = generate(&sc).unwrap();
        let near: Vec<_> = data
            .iter()
            .filter(|r| {
                r.event_occurred && (r.interview_age - r.true_age.unwrap() - 5.0).abs() < 0.75
            })
            .collect();
        assert!(near.len() > 300);
        let exact = near.iter().filter(|r| r.recall == RecallStatus::Exact).count();
        let frac = exact as f64 / near.len() as f64;
        assert_abs_diff_eq!(frac, 0.5, epsilon = 0.05);
    }

    #[test]
    fn case_a_censoring_fraction() {
        let sc = Scenario::preset("case_a", 10_000, 11).unwrap();
        let data = generate(&sc).unwrap();
        let censored = data.iter().filter(|r| !r.event_occurred).count();
        assert_abs_diff_eq!(censored as f64 / data.len() as f64, 0.29, epsilon = 0.02);
    }

    #[test]
    fn degenerate_recall_gives_exact_everywhere() {
        let mut sc = Scenario::preset("case_a", 2000, 3).unwrap();
        sc.recall = piecewise([
            [1.0, 1.0, 1.0, 1.0],
            [0.0; 4],
            [0.0; 4],
            [0.0; 4],
        ]);
        let data = generate(&sc).unwrap();
        for r in data.iter().filter(|r| r.event_occurred) {
            assert_eq!(r.recall, RecallStatus::Exact);
            assert_eq!(r.observed, r.true_age.unwrap());
        }
    }

    #[test]
    fn truncated_samples_stay_in_bounds_with_expected_median() {
        let sc = Scenario::preset("case_b", 10_000, 5).unwrap();
        let mut ages: Vec<f64> = generate(&sc)
            .unwrap()
            .iter()
            .map(|r| r.true_age.unwrap())
            .collect();
        assert!(ages.iter().all(|&t| (8.0..=16.0).contains(&t)));
        ages.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = 0.5 * (ages[4999] + ages[5000]);
        assert_abs_diff_eq!(median, 11.6, epsilon = 0.05);
    }

    #[test]
    fn empirical_cdf_matches_scenario_cdf() {
        let sc = Scenario::preset("case_i", 10_000, 9).unwrap();
        let mut ages: Vec<f64> = generate(&sc)
            .unwrap()
            .iter()
            .map(|r| r.true_age.unwrap())
            .collect();
        ages.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = ages.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, &t) in ages.iter().enumerate() {
            let f = sc.event.cdf(t);
            ks = ks.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
        }
        assert!(ks < 0.02, "Kolmogorov distance {ks} too large");
    }

    #[test]
    fn records_validate_and_invariants_hold() {
        let sc = Scenario::preset("case_iii", 3000, 21).unwrap();
        for r in generate(&sc).unwrap() {
            r.validate().unwrap();
            if r.event_occurred {
                let t = r.true_age.unwrap();
                if let Some(iv) = r.recall_interval() {
                    assert!(iv.lo <= t + 1e-9 && t <= iv.hi + 1e-9);
                }
            }
        }
    }

    #[test]
    fn unknown_preset_is_an_error() {
        assert!(Scenario::preset("case_z", 10, 0).is_err());
    }
}
