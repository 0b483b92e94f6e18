//! The five-branch observation density.
//!
//! For a subject interviewed at age `s` the observable `(v, epsilon,
//! delta)` has, conditional on `(s, m, d)`, the density
//!
//! ```text
//! delta = 0:            Fbar(s)
//! exact recall:         f(v) pi_exact(s - v)            for v < s
//! month recall:   int over [v-d, min(s, v+1/12-d)]  of  f(u) pi_month(s-u) du
//! year recall:    int over [v-d-(m-1)/12, min(s, v+1-d-(m-1)/12)]  of  f(u) pi_year(s-u) du
//! no recall:      int over [0, s]                   of  f(u) pi_none(s-u) du
//! ```
//!
//! Empty or clipped-away integration ranges contribute zero rather than an
//! error, since the `min(s, .)` caps legitimately vanish for events close
//! to the interview.

use crate::model::event::EventTimeModel;
use crate::model::recall::{RecallModel, RecallStatus};
use crate::model::record::{SubjectRecord, MONTH};
use crate::quad::integrate_split;

/// Integral of `f(u) * pi_cat(s - u)` over `[lo, hi]`, clipped to the
/// support of `f` and split wherever the elapsed time `s - u` crosses a
/// breakpoint of the recall model.
pub fn event_side_integral(
    event: &EventTimeModel,
    recall: &RecallModel,
    cat: RecallStatus,
    s: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    let (sup_lo, sup_hi) = event.support();
    let a = lo.max(sup_lo).max(0.0);
    let b = hi.min(sup_hi);
    if !(b > a) {
        return 0.0;
    }
    let cuts: Vec<f64> = recall.breakpoints().iter().map(|x| s - x).collect();
    integrate_split(|u| event.density(u) * recall.prob(cat, s - u), a, b, &cuts)
}

/// Conditional observation density of one record under the given models.
pub fn outcome_density(rec: &SubjectRecord, event: &EventTimeModel, recall: &RecallModel) -> f64 {
    let s = rec.interview_age;
    if !rec.event_occurred {
        return event.survival(s);
    }
    match rec.recall {
        RecallStatus::Exact => {
            let v = rec.observed;
            if v < s {
                event.density(v) * recall.prob(RecallStatus::Exact, s - v)
            } else {
                0.0
            }
        }
        RecallStatus::Month => {
            let lo = rec.observed - rec.birth_offset;
            let hi = s.min(rec.observed + MONTH - rec.birth_offset);
            event_side_integral(event, recall, RecallStatus::Month, s, lo, hi)
        }
        RecallStatus::Year => {
            let shift = rec.birth_offset + (rec.birth_month - 1) as f64 / 12.0;
            let lo = rec.observed - shift;
            let hi = s.min(rec.observed + 1.0 - shift);
            event_side_integral(event, recall, RecallStatus::Year, s, lo, hi)
        }
        RecallStatus::NoRecall => {
            event_side_integral(event, recall, RecallStatus::NoRecall, s, 0.0, s)
        }
    }
}

/// Total probability of the observable outcome space for fixed `(s, m, d)`:
/// the censoring mass plus every event-side term, with month and year
/// masses summed over all attainable observed values. Equals one when the
/// quadrature and the attainable-value enumeration are consistent.
pub fn outcome_total_mass(
    event: &EventTimeModel,
    recall: &RecallModel,
    s: f64,
    m: u8,
    d: f64,
) -> f64 {
    let mut total = event.survival(s);

    // Exact recall: integrate the density branch over v in (0, s).
    let cuts: Vec<f64> = recall.breakpoints().iter().map(|x| s - x).collect();
    let (sup_lo, sup_hi) = event.support();
    total += integrate_split(
        |v| event.density(v) * recall.prob(RecallStatus::Exact, s - v),
        sup_lo.max(0.0),
        s.min(sup_hi),
        &cuts,
    );

    // Month recall: v ranges over the month grid k/12 reachable before s.
    let k_max = (12.0 * (d + s)).floor() as i64;
    for k in 0..=k_max {
        let v = k as f64 / 12.0;
        let lo = v - d;
        let hi = s.min(v + MONTH - d);
        total += event_side_integral(event, recall, RecallStatus::Month, s, lo, hi);
    }

    // Year recall: v ranges over the nonnegative integers reachable before s.
    let shift = d + (m - 1) as f64 / 12.0;
    let y_max = (s + shift).floor() as i64;
    for y in 0..=y_max {
        let v = y as f64;
        let lo = v - shift;
        let hi = s.min(v + 1.0 - shift);
        total += event_side_integral(event, recall, RecallStatus::Year, s, lo, hi);
    }

    // No recall.
    total += event_side_integral(event, recall, RecallStatus::NoRecall, s, 0.0, s);
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::recall::{LogisticRecall, PiecewiseRecall};
    use approx::assert_abs_diff_eq;

    fn case_i_recall() -> RecallModel {
        RecallModel::Logistic(
            LogisticRecall::new([-0.05, -0.05, -0.05, 0.01, 0.01, 0.01]).unwrap(),
        )
    }

    fn censored(s: f64) -> SubjectRecord {
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
    fn censored_branch_is_survival() {
        let event = EventTimeModel::weibull(10.0, 12.0).unwrap();
        let d = outcome_density(&censored(12.0), &event, &case_i_recall());
        assert_abs_diff_eq!(d, (-1.0f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn no_recall_with_certain_nonrecall_collapses_to_cdf() {
        let event = EventTimeModel::weibull(10.0, 12.0).unwrap();
        // pi_none == 1 on every segment.
        let recall = RecallModel::Piecewise(
            PiecewiseRecall::new(
                vec![0.0, 3.0],
                vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 1.0]],
            )
            .unwrap(),
        );
        let rec = SubjectRecord {
            event_occurred: true,
            recall: RecallStatus::NoRecall,
            ..censored(12.0)
        };
        let d = outcome_density(&rec, &event, &recall);
        assert_abs_diff_eq!(d, event.cdf(12.0), epsilon = 1e-9);
    }

    #[test]
    fn exact_branch_is_product_of_closed_forms() {
        let event = EventTimeModel::weibull(10.0, 12.0).unwrap();
        let recall = case_i_recall();
        let rec = SubjectRecord {
            event_occurred: true,
            recall: RecallStatus::Exact,
            observed: 11.5,
            ..censored(14.0)
        };
        let expected = event.density(11.5) * recall.prob(RecallStatus::Exact, 2.5);
        assert_abs_diff_eq!(outcome_density(&rec, &event, &recall), expected, epsilon = 1e-15);
    }

    #[test]
    fn exact_branch_zero_at_or_beyond_interview() {
        let event = EventTimeModel::weibull(10.0, 12.0).unwrap();
        let rec = SubjectRecord {
            event_occurred: true,
            recall: RecallStatus::Exact,
            observed: 14.0,
            ..censored(14.0)
        };
        assert_eq!(outcome_density(&rec, &event, &case_i_recall()), 0.0);
    }

    #[test]
    fn empty_clipped_interval_is_zero_not_error() {
        let event = EventTimeModel::weibull(10.0, 12.0).unwrap();
        // Year interval entirely above the interview age.
        let rec = SubjectRecord {
            event_occurred: true,
            recall: RecallStatus::Year,
            observed: 14.0,
            interview_age: 13.0,
            ..censored(13.0)
        };
        assert_eq!(outcome_density(&rec, &event, &case_i_recall()), 0.0);
    }

    #[test]
    fn outcome_space_sums_to_one() {
        let event = EventTimeModel::weibull(10.0, 12.0).unwrap();
        let total = outcome_total_mass(&event, &case_i_recall(), 12.0, 6, 0.03);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn outcome_space_sums_to_one_piecewise_truncated() {
        let event = EventTimeModel::truncated_weibull(10.0, 12.0, 8.0, 16.0).unwrap();
        let recall = RecallModel::Piecewise(
            PiecewiseRecall::new(
                vec![0.0, 3.0, 6.0, 9.0],
                vec![
                    vec![0.15, 0.10, 0.08, 0.05],
                    vec![0.28, 0.20, 0.15, 0.10],
                    vec![0.22, 0.25, 0.17, 0.10],
                    vec![0.35, 0.45, 0.60, 0.75],
                ],
            )
            .unwrap(),
        );
        let total = outcome_total_mass(&event, &recall, 14.0, 9, 0.05);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }
}
