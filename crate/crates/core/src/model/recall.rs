//! Recall-probability models.
//!
//! Given the time `u` elapsed between the event and the interview, a recall
//! model assigns probabilities to the four recall outcomes: exact date,
//! calendar month only, calendar year only, and no recall. Outputs are
//! always ordered `[exact, month, year, none]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of recall categories.
pub const N_RECALL: usize = 4;

/// Recall outcome for a subject who experienced the event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallStatus {
    Exact,
    Month,
    Year,
    NoRecall,
}

impl RecallStatus {
    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(RecallStatus::Exact),
            1 => Ok(RecallStatus::Month),
            2 => Ok(RecallStatus::Year),
            3 => Ok(RecallStatus::NoRecall),
            _ => Err(Error::Domain(format!("recall status code must be 0..=3, got {code}"))),
        }
    }

    pub fn code(self) -> u8 {
        match self {
            RecallStatus::Exact => 0,
            RecallStatus::Month => 1,
            RecallStatus::Year => 2,
            RecallStatus::NoRecall => 3,
        }
    }
}

/// Multinomial-logistic or piecewise-constant recall probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecallModel {
    Logistic(LogisticRecall),
    Piecewise(PiecewiseRecall),
}

/// Multinomial-logistic recall probabilities with exact recall as the
/// reference category:
///
/// ```text
/// pi_exact(u) = 1 / (1 + sum_c exp(a_c + b_c u))
/// pi_c(u)     = exp(a_c + b_c u) * pi_exact(u)
/// ```
///
/// The six-parameter vector is laid out `(a_nr, a_mo, a_yr, b_nr, b_mo,
/// b_yr)`: intercepts for the no-recall, month and year categories followed
/// by the matching slopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticRecall {
    pub eta: [f64; 6],
}

impl LogisticRecall {
    pub fn new(eta: [f64; 6]) -> Result<Self> {
        if eta.iter().all(|x| x.is_finite()) {
            Ok(LogisticRecall { eta })
        } else {
            Err(Error::Domain("logistic recall parameters must be finite".into()))
        }
    }

    fn log_odds(&self, u: f64) -> [f64; 3] {
        // Order: no-recall, month, year.
        [
            self.eta[0] + self.eta[3] * u,
            self.eta[1] + self.eta[4] * u,
            self.eta[2] + self.eta[5] * u,
        ]
    }

    pub fn probs(&self, u: f64) -> [f64; N_RECALL] {
        let lo = self.log_odds(u);
        // Normalize in log space against the largest exponent (the exact
        // category has implicit log-odds 0).
        let m = lo.iter().fold(0.0f64, |a, &x| a.max(x));
        let e0 = (-m).exp();
        let en = (lo[0] - m).exp();
        let em = (lo[1] - m).exp();
        let ey = (lo[2] - m).exp();
        let denom = e0 + en + em + ey;
        [e0 / denom, em / denom, ey / denom, en / denom]
    }

    /// Probability of exact recall at elapsed time `u`.
    pub fn exact_prob(&self, u: f64) -> f64 {
        self.probs(u)[0]
    }
}

/// Piecewise-constant recall probabilities on elapsed-time segments.
///
/// `knots` is ascending with `knots[0] == 0`; segment `j` covers elapsed
/// times in `(knots[j], knots[j+1]]` and the last segment extends to
/// infinity. `rows[c][j]` is the probability of category `c` (ordered
/// exact, month, year, none) on segment `j`; each column sums to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseRecall {
    pub knots: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl PiecewiseRecall {
    pub fn new(knots: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if knots.is_empty() || knots[0] != 0.0 {
            return Err(Error::Domain("knots must start at 0".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("knots must be strictly ascending".into()));
        }
        if rows.len() != N_RECALL || rows.iter().any(|r| r.len() != knots.len()) {
            return Err(Error::Domain(format!(
                "need {N_RECALL} rows of {} segment probabilities",
                knots.len()
            )));
        }
        for j in 0..knots.len() {
            let col: f64 = rows.iter().map(|r| r[j]).sum();
            if (col - 1.0).abs() > 1e-12 || rows.iter().any(|r| !(0.0..=1.0).contains(&r[j])) {
                return Err(Error::Domain(format!(
                    "segment {j} probabilities must lie in [0,1] and sum to 1, got sum {col}"
                )));
            }
        }
        Ok(PiecewiseRecall { knots, rows })
    }

    pub fn n_segments(&self) -> usize {
        self.knots.len()
    }

    /// Segment index for elapsed time `u`: the segment `(x_j, x_{j+1}]`
    /// containing `u`, with `u <= 0` mapped to the first segment and the
    /// last segment open-ended.
    pub fn segment_index(&self, u: f64) -> usize {
        let below = self.knots.iter().take_while(|&&x| x < u).count();
        below.saturating_sub(1)
    }

    pub fn probs(&self, u: f64) -> [f64; N_RECALL] {
        let j = self.segment_index(u);
        [self.rows[0][j], self.rows[1][j], self.rows[2][j], self.rows[3][j]]
    }
}

impl RecallModel {
    /// Recall-category probabilities `[exact, month, year, none]` at
    /// elapsed time `u >= 0`.
    pub fn probs(&self, u: f64) -> [f64; N_RECALL] {
        match self {
            RecallModel::Logistic(l) => l.probs(u),
            RecallModel::Piecewise(p) => p.probs(u),
        }
    }

    /// Probability of the given category at elapsed time `u`.
    pub fn prob(&self, status: RecallStatus, u: f64) -> f64 {
        self.probs(u)[status.code() as usize]
    }

    /// Elapsed-time points at which the probabilities may be discontinuous.
    /// Empty for the logistic model.
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            RecallModel::Logistic(_) => &[],
            RecallModel::Piecewise(p) => &p.knots,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn assert_simplex(p: [f64; 4]) {
        let s: f64 = p.iter().sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn logistic_symmetric_case_is_uniform() {
        let m = LogisticRecall::new([-0.05, -0.05, -0.05, 0.01, 0.01, 0.01]).unwrap();
        let p = m.probs(5.0);
        for &x in &p {
            assert_abs_diff_eq!(x, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn logistic_asymmetric_case_two_decimals() {
        let m = LogisticRecall::new([-2.0, -1.0, -0.4, 0.05, 0.3, 0.02]).unwrap();
        let p = m.probs(5.0);
        assert_abs_diff_eq!(p[0], 0.28, epsilon = 5e-3);
        assert_abs_diff_eq!(p[1], 0.46, epsilon = 5e-3);
        assert_abs_diff_eq!(p[2], 0.21, epsilon = 5e-3);
        assert_abs_diff_eq!(p[3], 0.05, epsilon = 5e-3);
        assert_simplex(p);
    }

    #[test]
    fn piecewise_degenerate_exact_recall() {
        let m = PiecewiseRecall::new(
            vec![0.0, 3.0, 6.0, 9.0],
            vec![
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 1.0, 1.0],
                vec![0.0, 0.0, 0.0, 0.0],
            ],
        )
        .unwrap();
        assert_eq!(m.probs(1.0), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn piecewise_segment_convention() {
        let m = PiecewiseRecall::new(
            vec![0.0, 3.0, 6.0, 9.0],
            vec![
                vec![0.4, 0.3, 0.2, 0.1],
                vec![0.2, 0.2, 0.2, 0.2],
                vec![0.2, 0.2, 0.2, 0.2],
                vec![0.2, 0.3, 0.4, 0.5],
            ],
        )
        .unwrap();
        // u = 0 maps to the first segment; knots themselves are
        // right-closed; the last segment extends to infinity.
        assert_eq!(m.segment_index(0.0), 0);
        assert_eq!(m.segment_index(3.0), 0);
        assert_eq!(m.segment_index(3.0 + 1e-12), 1);
        assert_eq!(m.segment_index(9.0), 2);
        assert_eq!(m.segment_index(100.0), 3);
    }

    #[test]
    fn probability_vector_on_dense_grid() {
        let logistic = RecallModel::Logistic(
            LogisticRecall::new([-2.0, -0.7, -1.0, 0.5, 0.06, 0.2]).unwrap(),
        );
        let piecewise = RecallModel::Piecewise(
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
        for i in 0..=500 {
            let u = i as f64 * 0.05;
            assert_simplex(logistic.probs(u));
            assert_simplex(piecewise.probs(u));
        }
    }

    #[test]
    fn rejects_bad_piecewise_columns() {
        assert!(PiecewiseRecall::new(
            vec![0.0, 3.0],
            vec![vec![0.5, 0.5], vec![0.5, 0.6], vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .is_err());
        assert!(PiecewiseRecall::new(
            vec![1.0, 3.0],
            vec![vec![1.0, 1.0], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]],
        )
        .is_err());
    }
}
