//! Subject-level observables and calendar-interval arithmetic.
//!
//! Calendar time is idealized: every year has duration 1 and every month
//! duration 1/12. A subject's birth is located by the month serial
//! `m in 1..=12` and the within-month offset `d in [0, 1/12]` (years).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::recall::RecallStatus;

/// One month, in years.
pub const MONTH: f64 = 1.0 / 12.0;

/// Tolerance used when validating month/year-gridded observed values.
const GRID_TOL: f64 = 1e-9;

/// Kind of a partially recalled calendar interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    Month,
    Year,
}

/// The subject's age range spanned by a recalled calendar month or year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallInterval {
    pub lo: f64,
    pub hi: f64,
    pub kind: IntervalKind,
}

fn check_offset(d: f64) -> Result<()> {
    if !(0.0..=MONTH + 1e-12).contains(&d) {
        return Err(Error::Domain(format!("birth offset must lie in [0, 1/12], got {d}")));
    }
    Ok(())
}

fn check_month(m: u8) -> Result<()> {
    if !(1..=12).contains(&m) {
        return Err(Error::Domain(format!("birth month must lie in 1..=12, got {m}")));
    }
    Ok(())
}

/// Age range covered by the calendar month in which an event at age `t`
/// occurred, for a subject with birth offset `d`.
pub fn month_interval(t: f64, d: f64) -> Result<RecallInterval> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("event age must be positive, got {t}")));
    }
    check_offset(d)?;
    let lo = (12.0 * (d + t)).floor() / 12.0 - d;
    Ok(RecallInterval { lo, hi: lo + MONTH, kind: IntervalKind::Month })
}

/// Age range covered by the calendar year in which an event at age `t`
/// occurred, for a subject born in month `m` with offset `d`.
pub fn year_interval(t: f64, d: f64, m: u8) -> Result<RecallInterval> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("event age must be positive, got {t}")));
    }
    check_offset(d)?;
    check_month(m)?;
    let shift = d + (m - 1) as f64 / 12.0;
    let lo = (t + shift).floor() - shift;
    Ok(RecallInterval { lo, hi: lo + 1.0, kind: IntervalKind::Year })
}

/// The observable summary `v` of a (possibly partially) recalled event age.
///
/// Exact recall reports `t` itself, month recall the month grid point,
/// year recall the year index, and anything else zero.
pub fn observed_v(t: f64, d: f64, m: u8, epsilon: RecallStatus, delta: bool) -> Result<f64> {
    if !delta {
        return Ok(0.0);
    }
    match epsilon {
        RecallStatus::Exact => Ok(t),
        RecallStatus::Month => Ok(month_interval(t, d)?.lo + d),
        RecallStatus::Year => {
            check_month(m)?;
            check_offset(d)?;
            Ok((t + d + (m - 1) as f64 / 12.0).floor())
        }
        RecallStatus::NoRecall => Ok(0.0),
    }
}

/// One respondent's observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub id: u64,
    /// Age at interview (years).
    pub interview_age: f64,
    /// Whether the event had occurred by the interview.
    pub event_occurred: bool,
    /// Recall status; meaningful only when the event occurred.
    pub recall: RecallStatus,
    /// Observed value: exact age, month grid point, year index, or 0.
    pub observed: f64,
    /// Birth month serial in 1..=12.
    pub birth_month: u8,
    /// Offset of birth within the birth month, in years.
    pub birth_offset: f64,
    /// True event age; present only in simulated data and never used by
    /// the estimators.
    pub true_age: Option<f64>,
}

impl SubjectRecord {
    /// Check the domain and consistency invariants of the record.
    pub fn validate(&self) -> Result<()> {
        if !(self.interview_age > 0.0) {
            return Err(Error::InvalidData(format!(
                "subject {}: interview age must be positive",
                self.id
            )));
        }
        check_month(self.birth_month)?;
        check_offset(self.birth_offset)?;
        if !self.event_occurred {
            if self.observed != 0.0 {
                return Err(Error::InvalidData(format!(
                    "subject {}: censored rows must have v = 0",
                    self.id
                )));
            }
            return Ok(());
        }
        match self.recall {
            RecallStatus::Exact => {
                if !(self.observed > 0.0 && self.observed <= self.interview_age) {
                    return Err(Error::InvalidData(format!(
                        "subject {}: exactly recalled age must lie in (0, s]",
                        self.id
                    )));
                }
            }
            RecallStatus::Month => {
                let twelfths = self.observed * 12.0;
                if (twelfths - twelfths.round()).abs() > 12.0 * GRID_TOL {
                    return Err(Error::InvalidData(format!(
                        "subject {}: month-recall v must be a multiple of 1/12",
                        self.id
                    )));
                }
            }
            RecallStatus::Year => {
                if self.observed < 0.0 || (self.observed - self.observed.round()).abs() > GRID_TOL {
                    return Err(Error::InvalidData(format!(
                        "subject {}: year-recall v must be a nonnegative integer",
                        self.id
                    )));
                }
            }
            RecallStatus::NoRecall => {
                if self.observed != 0.0 {
                    return Err(Error::InvalidData(format!(
                        "subject {}: no-recall rows must have v = 0",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// The age interval implied by a month or year recall, reconstructed
    /// from the observed value. `None` for other recall states.
    pub fn recall_interval(&self) -> Option<RecallInterval> {
        if !self.event_occurred {
            return None;
        }
        match self.recall {
            RecallStatus::Month => {
                let lo = self.observed - self.birth_offset;
                Some(RecallInterval { lo, hi: lo + MONTH, kind: IntervalKind::Month })
            }
            RecallStatus::Year => {
                let lo = self.observed
                    - self.birth_offset
                    - (self.birth_month - 1) as f64 / 12.0;
                Some(RecallInterval { lo, hi: lo + 1.0, kind: IntervalKind::Year })
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn month_interval_zero_offset() {
        let iv = month_interval(11.5, 0.0).unwrap();
        assert_abs_diff_eq!(iv.lo, 11.5, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.hi, 11.5 + MONTH, epsilon = 1e-12);
    }

    #[test]
    fn month_interval_with_offset() {
        // floor(12 * 11.53) = 138, so the month starts at 138/12 - 0.03.
        let iv = month_interval(11.5, 0.03).unwrap();
        assert_abs_diff_eq!(iv.lo, 11.47, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.hi, 11.47 + MONTH, epsilon = 1e-12);
    }

    #[test]
    fn year_interval_examples() {
        // floor(11.5 + 0.03 + 5/12) = 11; 11 - 0.44666... = 10.55333...
        let iv = year_interval(11.5, 0.03, 6).unwrap();
        assert_abs_diff_eq!(iv.lo, 11.0 - (0.03 + 5.0 / 12.0), epsilon = 1e-12);
        assert_abs_diff_eq!(iv.hi, iv.lo + 1.0, epsilon = 1e-12);

        let iv = year_interval(11.5, 0.0, 1).unwrap();
        assert_abs_diff_eq!(iv.lo, 11.0, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.hi, 12.0, epsilon = 1e-12);
    }

    #[test]
    fn intervals_contain_event_age() {
        // Deterministic sweep over the (t, d, m) domain.
        for i in 0..50 {
            let t = 0.3 + 0.37 * i as f64;
            for j in 0..8 {
                let d = j as f64 * MONTH / 7.0;
                let mi = month_interval(t, d).unwrap();
                assert!(mi.lo <= t + 1e-12 && t <= mi.hi + 1e-12);
                assert_abs_diff_eq!(mi.hi - mi.lo, MONTH, epsilon = 1e-12);
                for m in [1u8, 5, 12] {
                    let yi = year_interval(t, d, m).unwrap();
                    assert!(yi.lo <= t + 1e-12 && t <= yi.hi + 1e-12);
                    assert_abs_diff_eq!(yi.hi - yi.lo, 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn observed_v_branches() {
        let v = observed_v(11.5, 0.03, 6, RecallStatus::Year, true).unwrap();
        assert_abs_diff_eq!(v, 11.0, epsilon = 1e-12);
        let v = observed_v(11.5, 0.03, 6, RecallStatus::NoRecall, true).unwrap();
        assert_eq!(v, 0.0);
        let v = observed_v(11.5, 0.03, 6, RecallStatus::Month, true).unwrap();
        assert_abs_diff_eq!(v, 11.5, epsilon = 1e-12);
        let v = observed_v(11.5, 0.03, 6, RecallStatus::Exact, false).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(month_interval(0.0, 0.0).is_err());
        assert!(month_interval(1.0, 0.2).is_err());
        assert!(year_interval(1.0, 0.0, 0).is_err());
        assert!(year_interval(1.0, 0.0, 13).is_err());
        assert!(year_interval(-2.0, 0.0, 3).is_err());
    }

    #[test]
    fn validate_catches_inconsistencies() {
        let mut rec = SubjectRecord {
            id: 1,
            interview_age: 14.0,
            event_occurred: true,
            recall: RecallStatus::Exact,
            observed: 11.5,
            birth_month: 6,
            birth_offset: 0.03,
            true_age: None,
        };
        assert!(rec.validate().is_ok());
        rec.observed = 15.0; // exceeds interview age
        assert!(rec.validate().is_err());
        rec.recall = RecallStatus::Month;
        rec.observed = 11.3; // not a twelfth
        assert!(rec.validate().is_err());
        rec.recall = RecallStatus::Year;
        rec.observed = 11.5; // not an integer
        assert!(rec.validate().is_err());
        rec.recall = RecallStatus::NoRecall;
        rec.observed = 0.0;
        assert!(rec.validate().is_ok());
        rec.event_occurred = false;
        rec.observed = 3.0;
        assert!(rec.validate().is_err());
    }

    #[test]
    fn recall_interval_roundtrip() {
        // Reconstructing the interval from v must reproduce the original.
        let (t, d, m) = (11.5, 0.03, 6u8);
        let v_mo = observed_v(t, d, m, RecallStatus::Month, true).unwrap();
        let rec = SubjectRecord {
            id: 0,
            interview_age: 14.0,
            event_occurred: true,
            recall: RecallStatus::Month,
            observed: v_mo,
            birth_month: m,
            birth_offset: d,
            true_age: Some(t),
        };
        let iv = rec.recall_interval().unwrap();
        let direct = month_interval(t, d).unwrap();
        assert_abs_diff_eq!(iv.lo, direct.lo, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.hi, direct.hi, epsilon = 1e-12);

        let v_yr = observed_v(t, d, m, RecallStatus::Year, true).unwrap();
        let rec = SubjectRecord { recall: RecallStatus::Year, observed: v_yr, ..rec };
        let iv = rec.recall_interval().unwrap();
        let direct = year_interval(t, d, m).unwrap();
        assert_abs_diff_eq!(iv.lo, direct.lo, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.hi, direct.hi, epsilon = 1e-12);
    }
}
