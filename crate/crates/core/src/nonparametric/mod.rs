//! Nonparametric estimation of the event-age distribution.
//!
//! The approximate NPMLE (AMLE) places all probability mass on the
//! distinct exactly recalled event ages and alternates two monotone
//! updates: a self-consistency sweep for the masses (an EM step for
//! mixture weights) and a closed-form EM update for the piecewise-constant
//! recall probabilities. Each step cannot decrease the likelihood, so the
//! recorded trace is nondecreasing.

pub mod brute;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RecallStatus, SubjectRecord};
use crate::quad::pairwise_sum;

/// Recall-category rows used by the partial-recall AMLE.
pub const PARTIAL_ROWS: usize = 4;
/// Rows used by the binary-recall AMLE (exact vs anything else).
pub const BINARY_ROWS: usize = 2;

/// Which recall resolution the nonparametric fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmleKind {
    Partial,
    Binary,
}

/// Support of the AMLE: the ordered distinct exactly recalled event ages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpSupport {
    pub points: Vec<f64>,
    /// Indices (into the dataset) of the exact-recall subjects at each point.
    pub contributors: Vec<Vec<usize>>,
}

impl NpSupport {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn index_of(&self, age: f64) -> Option<usize> {
        self.points
            .binary_search_by(|p| p.partial_cmp(&age).unwrap())
            .ok()
    }
}

/// Collect the ordered distinct exactly recalled ages, merging ties.
pub fn build_support(data: &[SubjectRecord]) -> Result<NpSupport> {
    let mut pairs: Vec<(f64, usize)> = data
        .iter()
        .enumerate()
        .filter(|(_, r)| r.event_occurred && r.recall == RecallStatus::Exact)
        .map(|(i, r)| (r.observed, i))
        .collect();
    if pairs.is_empty() {
        return Err(Error::NoExactRecalls);
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut points = Vec::new();
    let mut contributors: Vec<Vec<usize>> = Vec::new();
    for (age, idx) in pairs {
        if points.last() == Some(&age) {
            contributors.last_mut().unwrap().push(idx);
        } else {
            points.push(age);
            contributors.push(vec![idx]);
        }
    }
    Ok(NpSupport { points, contributors })
}

/// Elapsed-time segment index under the right-closed knot convention
/// (`u <= knots[1]` is segment 0, the last segment is open-ended).
fn segment_of(knots: &[f64], u: f64) -> usize {
    knots.iter().take_while(|&&x| x < u).count().saturating_sub(1)
}

fn check_knots(knots: &[f64]) -> Result<()> {
    if knots.is_empty() || knots[0] != 0.0 || knots.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "knots must be strictly ascending and start at 0".into(),
        ));
    }
    Ok(())
}

/// A subject's structural relation to the support points.
#[derive(Debug, Clone)]
enum Pattern {
    /// Censored: mass must lie strictly above the interview age.
    Censored { above: Vec<usize> },
    /// Event with recall row `row`; `admissible` holds (point index,
    /// elapsed-time segment) pairs the subject is compatible with.
    Event { row: usize, admissible: Vec<(usize, usize)> },
}

impl Pattern {
    fn is_empty(&self) -> bool {
        match self {
            Pattern::Censored { above } => above.is_empty(),
            Pattern::Event { admissible, .. } => admissible.is_empty(),
        }
    }
}

fn build_patterns(
    data: &[SubjectRecord],
    support: &NpSupport,
    knots: &[f64],
    kind: AmleKind,
    fallback: bool,
) -> Vec<Pattern> {
    let pts = &support.points;
    data.iter()
        .map(|rec| {
            let s = rec.interview_age;
            if !rec.event_occurred {
                let above = (0..pts.len()).filter(|&j| pts[j] > s).collect();
                return Pattern::Censored { above };
            }
            let (row, lo, hi) = match (kind, rec.recall) {
                (_, RecallStatus::Exact) => {
                    let j = support
                        .index_of(rec.observed)
                        .expect("support contains every exactly recalled age");
                    return Pattern::Event {
                        row: 0,
                        admissible: vec![(j, segment_of(knots, s - pts[j]))],
                    };
                }
                (AmleKind::Binary, _) => (1, f64::NEG_INFINITY, f64::INFINITY),
                (AmleKind::Partial, RecallStatus::NoRecall) => {
                    (3, f64::NEG_INFINITY, f64::INFINITY)
                }
                (AmleKind::Partial, RecallStatus::Month) | (AmleKind::Partial, RecallStatus::Year) => {
                    let iv = rec.recall_interval().expect("month/year rows carry an interval");
                    let row = if rec.recall == RecallStatus::Month { 1 } else { 2 };
                    (row, iv.lo - 1e-12, iv.hi + 1e-12)
                }
            };
            let window = |lo: f64, hi: f64| -> Vec<(usize, usize)> {
                (0..pts.len())
                    .filter(|&j| pts[j] <= s && pts[j] >= lo && pts[j] <= hi)
                    .map(|j| (j, segment_of(knots, s - pts[j])))
                    .collect()
            };
            let mut admissible = window(lo, hi);
            // A month/year window that misses every support point cannot
            // be represented on the restricted support. Rather than
            // discarding the subject, coarsen its statement to "event by
            // the interview" while keeping the recall category.
            if fallback && admissible.is_empty() && lo > f64::NEG_INFINITY {
                admissible = window(f64::NEG_INFINITY, f64::INFINITY);
            }
            Pattern::Event { row, admissible }
        })
        .collect()
}

/// The mixing-coefficient matrix of the restricted likelihood: one row per
/// subject, one column per support point. `w` holds the clipped segment
/// geometry `W_l(S_i) = max(S_i - x_l, t_min)` for `l = 1..=L+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatrix {
    pub values: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

fn alpha_from_patterns(
    patterns: &[Pattern],
    n_points: usize,
    b: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    patterns
        .iter()
        .map(|p| {
            let mut row = vec![0.0; n_points];
            match p {
                Pattern::Censored { above } => {
                    for &j in above {
                        row[j] = 1.0;
                    }
                }
                Pattern::Event { row: r, admissible } => {
                    for &(j, seg) in admissible {
                        row[j] = b[*r][seg];
                    }
                }
            }
            row
        })
        .collect()
}

/// Build the full coefficient matrix for the given piecewise recall
/// parameters `b` (4 rows for the partial fit, 2 for the binary fit).
/// Subjects whose recall window misses every support point get an
/// all-zero row here; see [`effective_alpha_matrix`] for the coarsened
/// matrix the fitting iteration actually uses.
pub fn alpha_matrix(
    data: &[SubjectRecord],
    support: &NpSupport,
    knots: &[f64],
    b: &[Vec<f64>],
) -> Result<AlphaMatrix> {
    alpha_matrix_impl(data, support, knots, b, false)
}

/// The coefficient matrix after the unrepresentable-window fallback:
/// month/year subjects incompatible with every support point enter with
/// their category row spread over all support points up to the interview
/// age, the finest coarsening of their observation the restricted support
/// can express.
pub fn effective_alpha_matrix(
    data: &[SubjectRecord],
    support: &NpSupport,
    knots: &[f64],
    b: &[Vec<f64>],
) -> Result<AlphaMatrix> {
    alpha_matrix_impl(data, support, knots, b, true)
}

fn alpha_matrix_impl(
    data: &[SubjectRecord],
    support: &NpSupport,
    knots: &[f64],
    b: &[Vec<f64>],
    fallback: bool,
) -> Result<AlphaMatrix> {
    check_knots(knots)?;
    let kind = match b.len() {
        PARTIAL_ROWS => AmleKind::Partial,
        BINARY_ROWS => AmleKind::Binary,
        other => {
            return Err(Error::Domain(format!(
                "recall parameter matrix must have 2 or 4 rows, got {other}"
            )))
        }
    };
    if b.iter().any(|row| row.len() != knots.len()) {
        return Err(Error::Domain("recall rows must have one entry per segment".into()));
    }
    let patterns = build_patterns(data, support, knots, kind, fallback);
    let t_min = support
        .points
        .iter()
        .copied()
        .chain(data.iter().filter_map(|r| r.recall_interval().map(|iv| iv.lo)))
        .fold(f64::INFINITY, f64::min);
    let w = data
        .iter()
        .map(|r| {
            let mut row: Vec<f64> = knots
                .iter()
                .map(|&x| (r.interview_age - x).max(t_min))
                .collect();
            row.push(t_min);
            row
        })
        .collect();
    Ok(AlphaMatrix {
        values: alpha_from_patterns(&patterns, support.len(), b),
        w,
    })
}

/// One self-consistency sweep: each mass becomes the average posterior
/// probability of its support point. Rows whose mixture weight vanishes
/// are excluded from the average when the mass vector has zero entries and
/// reported as an error otherwise.
pub fn self_consistency_step(q: &[f64], alpha: &AlphaMatrix) -> Result<Vec<f64>> {
    let strictly_positive = q.iter().all(|&x| x > 0.0);
    let mut num = vec![0.0; q.len()];
    let mut active = 0usize;
    for (i, row) in alpha.values.iter().enumerate() {
        let denom: f64 = row.iter().zip(q).map(|(a, qq)| a * qq).sum();
        if denom <= 0.0 {
            if strictly_positive {
                return Err(Error::AllZeroRow { subject: i });
            }
            continue;
        }
        active += 1;
        for j in 0..q.len() {
            num[j] += row[j] * q[j] / denom;
        }
    }
    if active == 0 {
        return Err(Error::DegenerateData("no subject carries positive weight".into()));
    }
    let scale = 1.0 / active as f64;
    Ok(num.into_iter().map(|x| x * scale).collect())
}

/// Expected-count EM update of the piecewise recall parameters given the
/// current masses and parameters. Segments visited by nobody keep their
/// previous values.
pub fn m_step_recall(
    data: &[SubjectRecord],
    support: &NpSupport,
    q: &[f64],
    knots: &[f64],
    b: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    check_knots(knots)?;
    let kind = match b.len() {
        PARTIAL_ROWS => AmleKind::Partial,
        BINARY_ROWS => AmleKind::Binary,
        other => {
            return Err(Error::Domain(format!(
                "recall parameter matrix must have 2 or 4 rows, got {other}"
            )))
        }
    };
    let patterns = build_patterns(data, support, knots, kind, true);
    Ok(m_step_from_patterns(&patterns, q, b, knots.len()))
}

fn m_step_from_patterns(
    patterns: &[Pattern],
    q: &[f64],
    b: &[Vec<f64>],
    n_segments: usize,
) -> Vec<Vec<f64>> {
    let rows = b.len();
    let mut counts = vec![vec![0.0; n_segments]; rows];
    for p in patterns {
        if let Pattern::Event { row, admissible } = p {
            let total: f64 = admissible
                .iter()
                .map(|&(j, seg)| b[*row][seg] * q[j])
                .sum();
            if total <= 0.0 {
                continue;
            }
            for &(j, seg) in admissible {
                counts[*row][seg] += b[*row][seg] * q[j] / total;
            }
        }
    }
    let mut out = b.to_vec();
    for seg in 0..n_segments {
        let col: f64 = (0..rows).map(|r| counts[r][seg]).sum();
        if col > 0.0 {
            for r in 0..rows {
                out[r][seg] = counts[r][seg] / col;
            }
        }
    }
    out
}

/// Options for the alternating AMLE iteration.
#[derive(Debug, Clone, Copy)]
pub struct AmleOptions {
    /// Max-norm tolerance of the inner self-consistency sweeps.
    pub inner_tol: f64,
    /// Log-likelihood change tolerance of the outer alternation.
    pub outer_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for AmleOptions {
    fn default() -> Self {
        AmleOptions { inner_tol: 1e-8, outer_tol: 1e-8, max_outer: 5000, max_inner: 10_000 }
    }
}

/// Nonparametric fit: masses on the exact-recall support plus the fitted
/// piecewise recall parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpFit {
    pub kind: AmleKind,
    pub support: NpSupport,
    pub masses: Vec<f64>,
    pub recall_b: Vec<Vec<f64>>,
    pub knots: Vec<f64>,
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    /// Subjects whose recall information is incompatible with every
    /// support point; they carry no information under the support
    /// restriction and are excluded from the likelihood.
    pub dropped_subjects: usize,
}

impl NpFit {
    /// Right-continuous step CDF of the fitted distribution.
    pub fn cdf(&self, t: f64) -> f64 {
        self.support
            .points
            .iter()
            .zip(&self.masses)
            .take_while(|(p, _)| **p <= t)
            .map(|(_, q)| q)
            .sum()
    }

    pub fn step_cdf(&self) -> StepCdf {
        StepCdf::from_masses(self.support.points.clone(), self.masses.clone())
    }

    pub fn final_loglik(&self) -> f64 {
        self.loglik_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

fn loglik_given(patterns: &[Pattern], alpha: &[Vec<f64>], q: &[f64]) -> f64 {
    let terms: Vec<f64> = patterns
        .iter()
        .zip(alpha)
        .filter(|(p, _)| !p.is_empty())
        .map(|(_, row)| {
            let mix: f64 = row.iter().zip(q).map(|(a, qq)| a * qq).sum();
            mix.max(f64::MIN_POSITIVE).ln()
        })
        .collect();
    pairwise_sum(&terms)
}

fn fit_amle_impl(
    data: &[SubjectRecord],
    knots: &[f64],
    kind: AmleKind,
    opts: &AmleOptions,
) -> Result<NpFit> {
    check_knots(knots)?;
    let support = build_support(data)?;
    let nu = support.len();
    let n_segments = knots.len();
    let rows = match kind {
        AmleKind::Partial => PARTIAL_ROWS,
        AmleKind::Binary => BINARY_ROWS,
    };

    let all_patterns = build_patterns(data, &support, knots, kind, true);
    let dropped = all_patterns.iter().filter(|p| p.is_empty()).count();
    let patterns: Vec<Pattern> = all_patterns.into_iter().filter(|p| !p.is_empty()).collect();
    let n_active = patterns.len();
    if n_active == 0 {
        return Err(Error::DegenerateData("every subject was dropped".into()));
    }

    let mut q = vec![1.0 / nu as f64; nu];
    let mut b = vec![vec![1.0 / rows as f64; n_segments]; rows];
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;

    for _outer in 0..opts.max_outer {
        let alpha = alpha_from_patterns(&patterns, nu, &b);
        // Inner self-consistency sweeps for the masses.
        for _ in 0..opts.max_inner {
            let mut next = vec![0.0; nu];
            for row in &alpha {
                let denom: f64 = row.iter().zip(&q).map(|(a, qq)| a * qq).sum();
                if denom <= 0.0 {
                    return Err(Error::DegenerateData(
                        "mixture weight vanished during the self-consistency sweep".into(),
                    ));
                }
                for j in 0..nu {
                    next[j] += row[j] * q[j] / denom;
                }
            }
            let scale = 1.0 / n_active as f64;
            let mut delta = 0.0f64;
            for j in 0..nu {
                next[j] *= scale;
                delta = delta.max((next[j] - q[j]).abs());
            }
            q = next;
            if delta < opts.inner_tol {
                break;
            }
        }

        let ll = loglik_given(&patterns, &alpha, &q);
        let done = trace
            .last()
            .is_some_and(|prev| (ll - prev).abs() < opts.outer_tol);
        trace.push(ll);
        if done {
            converged = true;
            break;
        }
        b = m_step_from_patterns(&patterns, &q, &b, n_segments);
    }

    Ok(NpFit {
        kind,
        support,
        masses: q,
        recall_b: b,
        knots: knots.to_vec(),
        loglik_trace: trace,
        converged,
        dropped_subjects: dropped,
    })
}

/// Partial-recall AMLE: masses on exactly recalled ages with a 4-row
/// piecewise recall model, maximized by alternating self-consistency and
/// EM recall updates.
pub fn fit_amle(data: &[SubjectRecord], knots: &[f64], opts: &AmleOptions) -> Result<NpFit> {
    fit_amle_impl(data, knots, AmleKind::Partial, opts)
}

/// Binary-recall AMLE: every partially recalled subject is treated as a
/// non-recaller and the recall model has two rows.
pub fn fit_binary_amle(data: &[SubjectRecord], knots: &[f64]) -> Result<NpFit> {
    fit_amle_impl(data, knots, AmleKind::Binary, &AmleOptions::default())
}

/// A right-continuous step distribution function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCdf {
    pub points: Vec<f64>,
    pub masses: Vec<f64>,
}

impl StepCdf {
    pub fn from_masses(points: Vec<f64>, masses: Vec<f64>) -> Self {
        StepCdf { points, masses }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.masses)
            .take_while(|(p, _)| **p <= t)
            .map(|(_, q)| q)
            .sum()
    }
}

/// Empirical distribution function of fully observed event ages.
pub fn edf(ages: &[f64]) -> Result<StepCdf> {
    if ages.is_empty() {
        return Err(Error::DegenerateData("empty age vector".into()));
    }
    let mut sorted = ages.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut points = Vec::new();
    let mut masses: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        points.push(sorted[i]);
        masses.push((j - i) as f64 / n);
        i = j;
    }
    Ok(StepCdf::from_masses(points, masses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SubjectRecord;
    use crate::simulate::{generate, Scenario};
    use approx::assert_abs_diff_eq;

    const KNOTS: [f64; 4] = [0.0, 3.0, 6.0, 9.0];

    fn subject(
        id: u64,
        s: f64,
        occurred: bool,
        recall: RecallStatus,
        v: f64,
    ) -> SubjectRecord {
        SubjectRecord {
            id,
            interview_age: s,
            event_occurred: occurred,
            recall,
            observed: v,
            birth_month: 6,
            birth_offset: 0.02,
            true_age: None,
        }
    }

    #[test]
    fn support_dedups_and_sorts() {
        let data = vec![
            subject(1, 14.0, true, RecallStatus::Exact, 12.7),
            subject(2, 13.0, true, RecallStatus::Exact, 11.2),
            subject(3, 15.0, true, RecallStatus::Exact, 11.2),
        ];
        let s = build_support(&data).unwrap();
        assert_eq!(s.points, vec![11.2, 12.7]);
        assert_eq!(s.contributors[0], vec![1, 2]);
    }

    #[test]
    fn support_requires_exact_recalls() {
        let data = vec![subject(1, 14.0, true, RecallStatus::NoRecall, 0.0)];
        assert!(matches!(build_support(&data), Err(Error::NoExactRecalls)));
    }

    #[test]
    fn alpha_censored_row_is_indicator() {
        let data = vec![
            subject(1, 13.0, true, RecallStatus::Exact, 9.0),
            subject(2, 13.0, true, RecallStatus::Exact, 11.0),
            subject(3, 10.0, false, RecallStatus::Exact, 0.0),
        ];
        let support = build_support(&data).unwrap();
        let b = vec![vec![0.25; 4]; 4];
        let alpha = alpha_matrix(&data, &support, &KNOTS, &b).unwrap();
        assert_eq!(alpha.values[2], vec![0.0, 1.0]);
    }

    #[test]
    fn alpha_no_recall_row_uniform_when_far_in_last_segment() {
        // Interview far above both support points: elapsed times all fall
        // in the last segment, whose no-recall weight is 0.25.
        let data = vec![
            subject(1, 21.0, true, RecallStatus::Exact, 9.0),
            subject(2, 21.0, true, RecallStatus::Exact, 9.5),
            subject(3, 21.0, true, RecallStatus::NoRecall, 0.0),
        ];
        let support = build_support(&data).unwrap();
        let b = vec![vec![0.25; 4]; 4];
        let alpha = alpha_matrix(&data, &support, &KNOTS, &b).unwrap();
        assert_eq!(alpha.values[2], vec![0.25, 0.25]);
    }

    #[test]
    fn alpha_month_row_zero_without_support_in_interval() {
        let data = vec![
            subject(1, 14.0, true, RecallStatus::Exact, 9.0),
            // Month interval around v=12 contains no support point.
            subject(2, 14.0, true, RecallStatus::Month, 12.0),
        ];
        let support = build_support(&data).unwrap();
        let b = vec![vec![0.25; 4]; 4];
        let alpha = alpha_matrix(&data, &support, &KNOTS, &b).unwrap();
        assert_eq!(alpha.values[1], vec![0.0]);
    }

    #[test]
    fn self_consistency_three_subject_toy() {
        let data = vec![
            subject(1, 10.0, false, RecallStatus::Exact, 0.0),
            subject(2, 12.0, true, RecallStatus::Exact, 9.0),
            subject(3, 13.0, true, RecallStatus::Exact, 11.0),
        ];
        let support = build_support(&data).unwrap();
        let b = vec![
            vec![1.0; 4],
            vec![0.0; 4],
            vec![0.0; 4],
            vec![0.0; 4],
        ];
        let alpha = alpha_matrix(&data, &support, &KNOTS, &b).unwrap();
        let q1 = self_consistency_step(&[0.5, 0.5], &alpha).unwrap();
        assert_abs_diff_eq!(q1[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q1[1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn self_consistency_fixed_point_of_flat_alpha() {
        let alpha = AlphaMatrix {
            values: vec![vec![1.0; 3]; 5],
            w: Vec::new(),
        };
        let q = vec![0.2, 0.5, 0.3];
        let q1 = self_consistency_step(&q, &alpha).unwrap();
        for (a, b) in q.iter().zip(&q1) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn self_consistency_reports_zero_rows() {
        let alpha = AlphaMatrix {
            values: vec![vec![1.0, 1.0], vec![0.0, 0.0]],
            w: Vec::new(),
        };
        assert!(matches!(
            self_consistency_step(&[0.5, 0.5], &alpha),
            Err(Error::AllZeroRow { subject: 1 })
        ));
    }

    #[test]
    fn m_step_single_no_recall_subject() {
        let data = vec![
            subject(1, 12.0, true, RecallStatus::Exact, 10.5),
            subject(2, 12.5, true, RecallStatus::NoRecall, 0.0),
        ];
        let support = build_support(&data).unwrap();
        let b = vec![vec![0.25; 4]; 4];
        // Exclude the exact subject's own effect by checking the column its
        // elapsed time does not touch: exact at elapsed 1.5 -> segment 0;
        // the no-recall subject's only admissible point is also segment 0.
        let b2 = m_step_recall(&data, &support, &[1.0], &KNOTS, &b).unwrap();
        // Column 0 shares one exact and one no-recall expected count.
        assert_abs_diff_eq!(b2[0][0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b2[3][0], 0.5, epsilon = 1e-12);
        // Untouched columns keep their previous value.
        assert_eq!(b2[1][2], 0.25);
    }

    #[test]
    fn amle_on_complete_data_is_edf() {
        let mut sc = Scenario::preset("case_a", 400, 77).unwrap();
        sc.recall = crate::model::RecallModel::Piecewise(
            crate::model::PiecewiseRecall::new(
                KNOTS.to_vec(),
                vec![vec![1.0; 4], vec![0.0; 4], vec![0.0; 4], vec![0.0; 4]],
            )
            .unwrap(),
        );
        let data: Vec<SubjectRecord> = generate(&sc)
            .unwrap()
            .into_iter()
            .filter(|r| r.event_occurred)
            .collect();
        assert!(!data.is_empty());
        let fit = fit_amle(&data, &KNOTS, &AmleOptions::default()).unwrap();
        let ages: Vec<f64> = data.iter().map(|r| r.observed).collect();
        let reference = edf(&ages).unwrap();
        assert_eq!(fit.support.points, reference.points);
        assert_eq!(fit.masses, reference.masses);
        assert_eq!(fit.dropped_subjects, 0);
    }

    #[test]
    fn amle_monotone_trace_and_self_consistent() {
        let sc = Scenario::preset("case_a", 150, 3).unwrap();
        let data = generate(&sc).unwrap();
        let fit = fit_amle(&data, &KNOTS, &AmleOptions::default()).unwrap();
        assert!(fit.converged);
        for w in fit.loglik_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "trace decreased: {} -> {}", w[0], w[1]);
        }
        let total: f64 = fit.masses.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
        assert!(fit.masses.iter().all(|&m| m >= 0.0));

        // Self-consistency residual at the fitted point, dropped rows
        // excluded.
        let active: Vec<SubjectRecord> = data
            .iter()
            .filter(|r| {
                let pats = build_patterns(
                    std::slice::from_ref(*r),
                    &fit.support,
                    &KNOTS,
                    AmleKind::Partial,
                    true,
                );
                !pats[0].is_empty()
            })
            .cloned()
            .collect();
        let alpha = effective_alpha_matrix(&active, &fit.support, &KNOTS, &fit.recall_b).unwrap();
        let next = self_consistency_step(&fit.masses, &alpha).unwrap();
        let resid = fit
            .masses
            .iter()
            .zip(&next)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(resid < 1e-7, "self-consistency residual {resid}");
    }

    #[test]
    fn binary_amle_matches_partial_without_partial_recalls() {
        let mut sc = Scenario::preset("case_b", 300, 15).unwrap();
        // Zero out month/year recall so only exact and none occur.
        sc.recall = crate::model::RecallModel::Piecewise(
            crate::model::PiecewiseRecall::new(
                KNOTS.to_vec(),
                vec![
                    vec![0.69, 0.55, 0.49, 0.31],
                    vec![0.0; 4],
                    vec![0.0; 4],
                    vec![0.31, 0.45, 0.51, 0.69],
                ],
            )
            .unwrap(),
        );
        let data = generate(&sc).unwrap();
        let partial = fit_amle(&data, &KNOTS, &AmleOptions::default()).unwrap();
        let binary = fit_binary_amle(&data, &KNOTS).unwrap();
        for (a, b) in partial.masses.iter().zip(&binary.masses) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        assert_abs_diff_eq!(
            partial.final_loglik(),
            binary.final_loglik(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn edf_examples() {
        let f = edf(&[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(f.eval(2.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(f.eval(0.5), 0.0);
        let g = edf(&[4.2]).unwrap();
        assert_eq!(g.eval(4.2), 1.0);
        assert!(edf(&[]).is_err());
    }
}
