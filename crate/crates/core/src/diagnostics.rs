//! Model-adequacy checks.
//!
//! A chi-square goodness-of-fit test over a discretization of the
//! observable `(S, V, epsilon, delta, m, d)`, a conditional piecewise
//! estimate of the recall probabilities for overlay against the fitted
//! logistic curves, and observed/model cumulative recall proportions by
//! interview-age group.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::model::{
    event_side_integral, EventTimeModel, LogisticRecall, RecallModel, RecallStatus, SubjectRecord,
};
use crate::parametric::{LikelihoodKind, ParametricFit};

const MIN_EXPECTED: f64 = 5.0;

/// One (possibly merged) cell of the discretized outcome space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofBin {
    pub descriptor: String,
    pub observed: f64,
    pub expected: f64,
}

/// Chi-square goodness-of-fit summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub bins: Vec<GofBin>,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Number of bins before expected-count merging.
    pub merged_from: usize,
}

/// Cell coordinates before merging: event status, recall status (ignored
/// for censored cells), and binary split positions for S, V and d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CellKey {
    delta: bool,
    eps: u8,
    s_hi: bool,
    v_hi: Option<bool>,
    d_hi: bool,
}

struct Cell {
    keys: Vec<CellKey>,
    observed: f64,
    expected: f64,
}

const S_SPLIT: f64 = 14.0;
const D_SPLIT: f64 = 1.0 / 24.0;

fn nonzero_v_median(data: &[SubjectRecord]) -> f64 {
    let mut vs: Vec<f64> = data.iter().filter(|r| r.observed > 0.0).map(|r| r.observed).collect();
    if vs.is_empty() {
        return 0.0;
    }
    vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = vs.len();
    if n % 2 == 1 {
        vs[n / 2]
    } else {
        0.5 * (vs[n / 2 - 1] + vs[n / 2])
    }
}

fn initial_cells() -> Vec<CellKey> {
    let mut cells = Vec::new();
    for s_hi in [false, true] {
        for d_hi in [false, true] {
            cells.push(CellKey { delta: false, eps: 0, s_hi, v_hi: None, d_hi });
            cells.push(CellKey { delta: true, eps: 3, s_hi, v_hi: None, d_hi });
            for eps in 0..3u8 {
                for v_hi in [false, true] {
                    cells.push(CellKey { delta: true, eps, s_hi, v_hi: Some(v_hi), d_hi });
                }
            }
        }
    }
    debug_assert_eq!(cells.len(), 32);
    cells
}

/// Conditional cell probabilities for one subject under the fitted model.
/// For the mixed discrete branches (month and year recall) the per-value
/// masses are contiguous unions of age intervals, so each V-split side is
/// a single integral.
fn subject_cell_probability(
    rec: &SubjectRecord,
    key: &CellKey,
    event: &EventTimeModel,
    recall: &RecallModel,
    v_split: f64,
) -> f64 {
    let s = rec.interview_age;
    let d = rec.birth_offset;
    if key.s_hi != (rec.interview_age > S_SPLIT) || key.d_hi != (rec.birth_offset > D_SPLIT) {
        return 0.0;
    }
    if !key.delta {
        return event.survival(s);
    }
    match key.eps {
        3 => event_side_integral(event, recall, RecallStatus::NoRecall, s, 0.0, s),
        0 => {
            // V = T exactly.
            let (lo, hi) = match key.v_hi {
                Some(false) => (0.0, v_split.min(s)),
                Some(true) => (v_split.min(s), s),
                None => (0.0, s),
            };
            event_side_integral(event, recall, RecallStatus::Exact, s, lo, hi)
        }
        1 => {
            // V on the month grid k/12; k <= floor(12 v_split) falls in the
            // low cell. The union of month windows is contiguous in T.
            let k_split = (12.0 * v_split + 1e-9).floor();
            let boundary = (k_split + 1.0) / 12.0 - d;
            let (lo, hi) = match key.v_hi {
                Some(false) => (-d, boundary),
                Some(true) => (boundary, s),
                None => (-d, s),
            };
            event_side_integral(event, recall, RecallStatus::Month, s, lo.max(0.0), hi.min(s))
        }
        2 => {
            let shift = d + (rec.birth_month - 1) as f64 / 12.0;
            let y_split = (v_split + 1e-9).floor();
            let boundary = y_split + 1.0 - shift;
            let (lo, hi) = match key.v_hi {
                Some(false) => (-shift, boundary),
                Some(true) => (boundary, s),
                None => (-shift, s),
            };
            event_side_integral(event, recall, RecallStatus::Year, s, lo.max(0.0), hi.min(s))
        }
        _ => 0.0,
    }
}

fn observed_key(rec: &SubjectRecord, v_split: f64) -> CellKey {
    let s_hi = rec.interview_age > S_SPLIT;
    let d_hi = rec.birth_offset > D_SPLIT;
    if !rec.event_occurred {
        return CellKey { delta: false, eps: 0, s_hi, v_hi: None, d_hi };
    }
    match rec.recall {
        RecallStatus::NoRecall => CellKey { delta: true, eps: 3, s_hi, v_hi: None, d_hi },
        other => CellKey {
            delta: true,
            eps: other.code(),
            s_hi,
            v_hi: Some(rec.observed > v_split),
            d_hi,
        },
    }
}

fn fitted_models(fit: &ParametricFit) -> Result<(EventTimeModel, RecallModel)> {
    if fit.kind != LikelihoodKind::PartialRecall {
        return Err(Error::UnsupportedKind(format!(
            "goodness of fit is defined for the partial-recall model, got {}",
            fit.kind.name()
        )));
    }
    if !fit.converged {
        return Err(Error::FitNotConverged);
    }
    let event = EventTimeModel::weibull(fit.theta[0], fit.theta[1])?;
    let recall = RecallModel::Logistic(LogisticRecall::new([
        fit.eta[0], fit.eta[1], fit.eta[2], fit.eta[3], fit.eta[4], fit.eta[5],
    ])?);
    Ok((event, recall))
}

fn describe(keys: &[CellKey], v_split: f64) -> String {
    let parts: Vec<String> = keys
        .iter()
        .map(|k| {
            let s = if k.s_hi { format!("s>{S_SPLIT}") } else { format!("s<={S_SPLIT}") };
            let d = if k.d_hi { "d>1/24" } else { "d<=1/24" };
            let head = if k.delta { format!("eps={}", k.eps) } else { "censored".to_string() };
            match k.v_hi {
                Some(true) => format!("{head},{s},v>{v_split:.3},{d}"),
                Some(false) => format!("{head},{s},v<={v_split:.3},{d}"),
                None => format!("{head},{s},{d}"),
            }
        })
        .collect();
    parts.join(" | ")
}

fn stratum(key: &CellKey) -> (bool, u8) {
    (key.delta, if key.delta { key.eps } else { 255 })
}

fn hamming(a: &CellKey, b: &CellKey) -> usize {
    let mut h = 0;
    if a.s_hi != b.s_hi {
        h += 1;
    }
    if a.d_hi != b.d_hi {
        h += 1;
    }
    if a.v_hi != b.v_hi {
        h += 1;
    }
    h
}

/// Greedy merge: repeatedly fold the smallest under-populated bin into its
/// nearest neighbor within the same (delta, epsilon) stratum, falling back
/// to any other bin once a stratum is exhausted.
fn merge_cells(mut cells: Vec<Cell>) -> Vec<Cell> {
    loop {
        if cells.len() <= 1 {
            return cells;
        }
        let victim = cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.expected < MIN_EXPECTED)
            .min_by(|a, b| a.1.expected.partial_cmp(&b.1.expected).unwrap())
            .map(|(i, _)| i);
        let Some(vi) = victim else {
            return cells;
        };
        let v_stratum = stratum(&cells[vi].keys[0]);
        let mut best: Option<(usize, usize, f64)> = None; // (index, distance class, expected)
        for (i, c) in cells.iter().enumerate() {
            if i == vi {
                continue;
            }
            let same_stratum = stratum(&c.keys[0]) == v_stratum;
            let same_delta = c.keys[0].delta == cells[vi].keys[0].delta;
            let dist = if same_stratum {
                cells[vi]
                    .keys
                    .iter()
                    .flat_map(|a| c.keys.iter().map(move |b| hamming(a, b)))
                    .min()
                    .unwrap_or(3)
            } else if same_delta {
                10
            } else {
                20
            };
            let better = match &best {
                None => true,
                Some((_, bd, be)) => {
                    dist < *bd || (dist == *bd && c.expected < *be)
                }
            };
            if better {
                best = Some((i, dist, c.expected));
            }
        }
        let (target, _, _) = best.expect("at least two bins");
        let victim_cell = cells.remove(vi);
        let target = if target > vi { target - 1 } else { target };
        cells[target].keys.extend(victim_cell.keys);
        cells[target].observed += victim_cell.observed;
        cells[target].expected += victim_cell.expected;
    }
}

/// Build the observed/expected bin table for a converged partial-recall
/// fit. Returns the merged bins together with the pre-merge bin count.
pub fn gof_bins(data: &[SubjectRecord], fit: &ParametricFit) -> Result<(Vec<GofBin>, usize)> {
    let (event, recall) = fitted_models(fit)?;
    if data.is_empty() {
        return Err(Error::DegenerateData("empty dataset".into()));
    }
    let v_split = nonzero_v_median(data);
    let keys = initial_cells();
    let initial = keys.len();

    let mut cells: Vec<Cell> = keys
        .iter()
        .map(|k| Cell { keys: vec![*k], observed: 0.0, expected: 0.0 })
        .collect();
    for rec in data {
        let ok = observed_key(rec, v_split);
        let slot = keys.iter().position(|k| *k == ok).expect("every record maps to a cell");
        cells[slot].observed += 1.0;
        for (slot, key) in keys.iter().enumerate() {
            cells[slot].expected += subject_cell_probability(rec, key, &event, &recall, v_split);
        }
    }

    let merged = merge_cells(cells);
    Ok((
        merged
            .into_iter()
            .map(|c| GofBin {
                descriptor: describe(&c.keys, v_split),
                observed: c.observed,
                expected: c.expected,
            })
            .collect(),
        initial,
    ))
}

/// Pearson chi-square test of the fitted observation law.
pub fn gof_chisq(data: &[SubjectRecord], fit: &ParametricFit) -> Result<GofResult> {
    let (bins, merged_from) = gof_bins(data, fit)?;
    let params = fit.kind.n_params();
    if bins.len() <= params + 1 {
        return Err(Error::NonPositiveDf { bins: bins.len(), params });
    }
    let statistic: f64 = bins
        .iter()
        .map(|b| {
            if b.expected > 0.0 {
                (b.observed - b.expected).powi(2) / b.expected
            } else {
                0.0
            }
        })
        .sum();
    let df = bins.len() - 1 - params;
    let p_value = ChiSquared::new(df as f64).unwrap().sf(statistic);
    Ok(GofResult { bins, statistic, df, p_value, merged_from })
}

/// Conditional MLE of piecewise-constant recall probabilities with the
/// event distribution held fixed: an EM iteration whose E-step integrates
/// the fixed density over each elapsed-time segment of the subject's
/// recall window.
pub fn conditional_piecewise_recall(
    data: &[SubjectRecord],
    event: &EventTimeModel,
    knots: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if knots.is_empty() || knots[0] != 0.0 || knots.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("knots must be strictly ascending and start at 0".into()));
    }
    let n_segments = knots.len();

    // Per subject: recall row plus the fixed F-mass of each segment slice
    // of its recall window.
    struct Item {
        row: usize,
        seg_mass: Vec<f64>,
    }
    let mut items = Vec::new();
    for rec in data.iter().filter(|r| r.event_occurred) {
        let s = rec.interview_age;
        let (row, win_lo, win_hi) = match rec.recall {
            RecallStatus::Exact => {
                let seg = knots.iter().take_while(|&&x| x < s - rec.observed).count();
                let seg = seg.saturating_sub(1);
                let mut seg_mass = vec![0.0; n_segments];
                seg_mass[seg] = 1.0;
                items.push(Item { row: 0, seg_mass });
                continue;
            }
            RecallStatus::NoRecall => (3, 0.0, s),
            RecallStatus::Month | RecallStatus::Year => {
                let iv = rec.recall_interval().unwrap();
                let row = if rec.recall == RecallStatus::Month { 1 } else { 2 };
                (row, iv.lo.max(0.0), iv.hi.min(s))
            }
        };
        let mut seg_mass = vec![0.0; n_segments];
        for (j, mass) in seg_mass.iter_mut().enumerate() {
            // Age-space slice of elapsed segment j.
            let lo = if j + 1 < n_segments { s - knots[j + 1] } else { f64::NEG_INFINITY };
            let hi = s - knots[j];
            let a = win_lo.max(lo);
            let b = win_hi.min(hi);
            if b > a {
                *mass = (event.cdf(b) - event.cdf(a)).max(0.0);
            }
        }
        items.push(Item { row, seg_mass });
    }
    if items.is_empty() {
        return Err(Error::DegenerateData("no event subjects".into()));
    }

    let mut b = vec![vec![0.25; n_segments]; 4];
    for _ in 0..500 {
        let mut counts = vec![vec![0.0; n_segments]; 4];
        for item in &items {
            let total: f64 = item
                .seg_mass
                .iter()
                .enumerate()
                .map(|(j, m)| b[item.row][j] * m)
                .sum();
            if total <= 0.0 {
                continue;
            }
            for (j, m) in item.seg_mass.iter().enumerate() {
                counts[item.row][j] += b[item.row][j] * m / total;
            }
        }
        let mut delta = 0.0f64;
        for j in 0..n_segments {
            let col: f64 = (0..4).map(|r| counts[r][j]).sum();
            if col > 0.0 {
                for r in 0..4 {
                    let nv = counts[r][j] / col;
                    delta = delta.max((nv - b[r][j]).abs());
                    b[r][j] = nv;
                }
            }
        }
        if delta < 1e-9 {
            break;
        }
    }
    Ok(b)
}

/// Observed cumulative recall proportions for one interview-age group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallCurveGroup {
    pub age_lo: f64,
    pub age_hi: f64,
    pub n_events: usize,
    /// Cumulative proportions of recall categories 0..=3; the last entry
    /// is 1 by construction.
    pub cumulative: [f64; 4],
}

/// Cumulative proportions of decreasing recall precision per interview-age
/// group. Groups without event subjects are omitted.
pub fn cumulative_recall_curves(data: &[SubjectRecord], edges: &[f64]) -> Vec<RecallCurveGroup> {
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let last = hi == *edges.last().unwrap();
        let members: Vec<&SubjectRecord> = data
            .iter()
            .filter(|r| {
                r.event_occurred
                    && r.interview_age >= lo
                    && (r.interview_age < hi || (last && r.interview_age <= hi))
            })
            .collect();
        if members.is_empty() {
            continue;
        }
        let n = members.len() as f64;
        let mut cum = [0.0f64; 4];
        for r in &members {
            for k in r.recall.code()..4 {
                cum[k as usize] += 1.0;
            }
        }
        for c in cum.iter_mut() {
            *c /= n;
        }
        out.push(RecallCurveGroup { age_lo: lo, age_hi: hi, n_events: members.len(), cumulative: cum });
    }
    out
}

/// Model-based cumulative recall probabilities at representative interview
/// ages: `P(eps <= k | delta = 1, S = s)` via numerical integration. Ages
/// where the event probability vanishes are omitted.
pub fn model_recall_curves(fit: &ParametricFit, ages: &[f64]) -> Result<Vec<RecallCurveGroup>> {
    let (event, recall) = fitted_models(fit)?;
    let mut out = Vec::new();
    for &s in ages {
        let denom = event.cdf(s);
        if denom < 1e-12 {
            continue;
        }
        let probs = [
            event_side_integral(&event, &recall, RecallStatus::Exact, s, 0.0, s),
            event_side_integral(&event, &recall, RecallStatus::Month, s, 0.0, s),
            event_side_integral(&event, &recall, RecallStatus::Year, s, 0.0, s),
            event_side_integral(&event, &recall, RecallStatus::NoRecall, s, 0.0, s),
        ];
        let mut cum = [0.0f64; 4];
        let mut acc = 0.0;
        for k in 0..4 {
            acc += probs[k] / denom;
            cum[k] = acc;
        }
        out.push(RecallCurveGroup { age_lo: s, age_hi: s, n_events: 0, cumulative: cum });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parametric::fit_mle;
    use crate::simulate::{generate, Scenario};
    use approx::assert_abs_diff_eq;

    fn fit_case_ii(n: usize, seed: u64) -> (Vec<SubjectRecord>, ParametricFit) {
        let sc = Scenario::preset("case_ii", n, seed).unwrap();
        let data = generate(&sc).unwrap();
        let fit = fit_mle(&data, LikelihoodKind::PartialRecall, None).unwrap();
        assert!(fit.converged);
        (data, fit)
    }

    #[test]
    fn expected_counts_conserved_and_df_arithmetic() {
        let (data, fit) = fit_case_ii(400, 2);
        let result = gof_chisq(&data, &fit).unwrap();
        let total_exp: f64 = result.bins.iter().map(|b| b.expected).sum();
        let total_obs: f64 = result.bins.iter().map(|b| b.observed).sum();
        assert_abs_diff_eq!(total_exp, data.len() as f64, epsilon = 1e-6);
        assert_abs_diff_eq!(total_obs, data.len() as f64, epsilon = 1e-9);
        assert_eq!(result.merged_from, 32);
        assert_eq!(result.df, result.bins.len() - 1 - 8);
        assert!((0.0..=1.0).contains(&result.p_value));
        // No merged bin may stay under-populated unless merging exhausted.
        if result.bins.len() > 1 {
            for b in &result.bins {
                assert!(b.expected >= 5.0 - 1e-9, "bin `{}` kept {}", b.descriptor, b.expected);
            }
        }
    }

    #[test]
    fn identical_observed_expected_gives_statistic_zero() {
        let (data, fit) = fit_case_ii(400, 4);
        let (bins, merged_from) = gof_bins(&data, &fit).unwrap();
        let forged: Vec<GofBin> = bins
            .iter()
            .map(|b| GofBin { descriptor: b.descriptor.clone(), observed: b.expected, expected: b.expected })
            .collect();
        let statistic: f64 = forged
            .iter()
            .map(|b| (b.observed - b.expected).powi(2) / b.expected)
            .sum();
        assert_abs_diff_eq!(statistic, 0.0, epsilon = 1e-12);
        let df = forged.len() - 1 - 8;
        let p = ChiSquared::new(df as f64).unwrap().sf(statistic);
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        assert_eq!(merged_from, 32);
    }

    #[test]
    fn gof_rejects_unconverged_or_wrong_kind() {
        let (data, mut fit) = fit_case_ii(300, 6);
        fit.converged = false;
        assert!(matches!(gof_bins(&data, &fit), Err(Error::FitNotConverged)));
        let binary = fit_mle(&data, LikelihoodKind::BinaryRecall, None).unwrap();
        assert!(matches!(gof_bins(&data, &binary), Err(Error::UnsupportedKind(_))));
    }

    #[test]
    fn conditional_recall_columns_sum_to_one() {
        let sc = Scenario::preset("case_ii", 800, 9).unwrap();
        let data = generate(&sc).unwrap();
        let event = EventTimeModel::weibull(10.0, 12.0).unwrap();
        let b = conditional_piecewise_recall(&data, &event, &[0.0, 3.0, 6.0, 9.0]).unwrap();
        for j in 0..4 {
            let col: f64 = (0..4).map(|r| b[r][j]).sum();
            assert_abs_diff_eq!(col, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn cumulative_curves_monotone_and_end_at_one() {
        let sc = Scenario::preset("case_iii", 2000, 12).unwrap();
        let data = generate(&sc).unwrap();
        let groups = cumulative_recall_curves(&data, &[8.0, 12.0, 15.0, 18.0, 21.0]);
        assert!(!groups.is_empty());
        for g in &groups {
            for k in 1..4 {
                assert!(g.cumulative[k] >= g.cumulative[k - 1] - 1e-12);
            }
            assert_abs_diff_eq!(g.cumulative[3], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn model_curves_monotone_and_normalized() {
        let (_, fit) = fit_case_ii(500, 3);
        let pts = model_recall_curves(&fit, &[11.0, 14.0, 17.0, 20.0]).unwrap();
        assert_eq!(pts.len(), 4);
        for p in &pts {
            for k in 1..4 {
                assert!(p.cumulative[k] >= p.cumulative[k - 1] - 1e-12);
            }
            assert_abs_diff_eq!(p.cumulative[3], 1.0, epsilon = 1e-5);
        }
    }

    #[test]
    fn degenerate_always_exact_model_curve() {
        let fit = ParametricFit {
            kind: LikelihoodKind::PartialRecall,
            theta: [10.0, 12.0],
            eta: vec![-40.0, -40.0, -40.0, 0.0, 0.0, 0.0],
            loglik: 0.0,
            covariance: Vec::new(),
            converged: true,
            iterations: 0,
            derived: crate::parametric::DerivedQuantities {
                median: crate::parametric::Estimate { value: 11.57, se: f64::NAN },
                pi0_at_5: None,
            },
        };
        let pts = model_recall_curves(&fit, &[14.0]).unwrap();
        assert_abs_diff_eq!(pts[0].cumulative[0], 1.0, epsilon = 1e-9);
    }
}
