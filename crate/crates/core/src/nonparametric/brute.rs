//! Exhaustive NPMLE solver for tiny instances.
//!
//! Builds the observation-derived interval family (censoring tails, exact
//! singletons, their open complements, elapsed-time segment slices and the
//! month/year slices), forms every nonempty maximal intersection, applies
//! the partial-order reduction of the candidate class, and maximizes the
//! resulting likelihood jointly over interval masses and piecewise recall
//! parameters by dense grid search refined with coordinatewise
//! golden-section transfers. Intended as an independent oracle for the
//! iterative estimators; refuses instances beyond a few subjects.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{RecallStatus, SubjectRecord};

/// Which candidate family the masses range over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateClass {
    /// All nonempty maximal intersections.
    Full,
    /// The partial-order reduction of the full family.
    Reduced,
    /// Singleton sets at the exactly recalled ages only (the same
    /// parameter space as the iterative support-restricted estimator;
    /// subjects compatible with no singleton are dropped).
    ExactSupport,
}

#[derive(Debug, Clone)]
pub struct BruteOptions {
    pub class: CandidateClass,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    /// Target simplex grid step for the masses.
    pub mass_step: f64,
    /// Target simplex grid step for each recall column.
    pub recall_step: f64,
    /// Upper bound on the number of joint grid points; the steps are
    /// coarsened when the target steps would exceed it. The refinement
    /// stage restores precision.
    pub budget: usize,
}

impl Default for BruteOptions {
    fn default() -> Self {
        BruteOptions {
            class: CandidateClass::Reduced,
            t_min: None,
            t_max: None,
            mass_step: 0.02,
            recall_step: 0.1,
            budget: 200_000,
        }
    }
}

/// Result of the exhaustive maximization.
#[derive(Debug, Clone)]
pub struct BruteFit {
    /// Each candidate as a list of disjoint spans `(lo, hi)`; a singleton
    /// appears as `(t, t)`.
    pub intervals: Vec<Vec<(f64, f64)>>,
    pub masses: Vec<f64>,
    pub recall_b: Vec<Vec<f64>>,
    pub loglik: f64,
    /// Size of the unreduced candidate family.
    pub n_candidates_full: usize,
    /// Size after the partial-order reduction.
    pub n_candidates_reduced: usize,
    /// Subjects excluded in `ExactSupport` mode.
    pub dropped_subjects: usize,
}

const N_ROWS: usize = 4;
const MAX_SUBJECTS: usize = 6;
const MAX_SEGMENTS: usize = 3;
const MAX_SETS: usize = 60;

/// Closed/open interval with exact endpoint bookkeeping.
#[derive(Debug, Clone, Copy)]
struct Iv {
    lo: f64,
    lo_closed: bool,
    hi: f64,
    hi_closed: bool,
}

impl Iv {
    fn closed(lo: f64, hi: f64) -> Iv {
        Iv { lo, lo_closed: true, hi, hi_closed: true }
    }

    fn open_closed(lo: f64, hi: f64) -> Iv {
        Iv { lo, lo_closed: false, hi, hi_closed: true }
    }

    fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    fn intersect(&self, other: &Iv) -> Iv {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if self.lo < other.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if self.hi > other.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        Iv { lo, lo_closed, hi, hi_closed }
    }

    fn contains_point(&self, x: f64) -> bool {
        (self.lo < x || (self.lo == x && self.lo_closed))
            && (x < self.hi || (x == self.hi && self.hi_closed))
    }

    /// Whether the open span `(a, b)` (containing no endpoint of any set)
    /// lies inside this interval.
    fn contains_open_span(&self, a: f64, b: f64) -> bool {
        self.lo <= a && b <= self.hi
    }

    fn key(&self) -> (u64, bool, u64, bool) {
        (self.lo.to_bits(), self.lo_closed, self.hi.to_bits(), self.hi_closed)
    }
}

#[derive(Debug, Clone, Copy)]
enum Atom {
    Point(f64),
    Span(f64, f64),
}

impl Atom {
    fn in_set(&self, iv: &Iv) -> bool {
        match *self {
            Atom::Point(x) => iv.contains_point(x),
            Atom::Span(a, b) => iv.contains_open_span(a, b),
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            Atom::Point(x) => (x, x),
            Atom::Span(a, b) => (a, b),
        }
    }
}

/// How one subject weighs one candidate: not at all, with unit weight, or
/// through a recall parameter cell.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Coef {
    Zero,
    One,
    Cell(usize, usize),
}

struct Problem {
    /// coef[i][r]: subject i's weight class on candidate r.
    coef: Vec<Vec<Coef>>,
    n_segments: usize,
    /// Recall cells that actually occur in some subject's coefficients.
    used_cells: Vec<Vec<bool>>,
}

impl Problem {
    fn eval(&self, masses: &[f64], b: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for row in &self.coef {
            let mut mix = 0.0;
            for (r, c) in row.iter().enumerate() {
                match *c {
                    Coef::Zero => {}
                    Coef::One => mix += masses[r],
                    Coef::Cell(cr, cs) => mix += b[cr][cs] * masses[r],
                }
            }
            if mix <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += mix.ln();
        }
        total
    }
}

fn classify(rec: &SubjectRecord) -> Result<()> {
    rec.validate()
}

fn segment_of(knots: &[f64], u: f64) -> usize {
    knots.iter().take_while(|&&x| x < u).count().saturating_sub(1)
}

/// Age-space slice of elapsed-time segment `j` for interview age `s`:
/// `(W_{j+1}, W_j]` with the last segment closed down to `t_min`.
fn segment_slice(s: f64, knots: &[f64], j: usize, t_min: f64) -> Iv {
    let l = knots.len();
    let w = |idx: usize| -> f64 {
        if idx >= l {
            t_min
        } else {
            (s - knots[idx]).max(t_min)
        }
    };
    if j + 1 < l {
        Iv::open_closed(w(j + 1), w(j))
    } else {
        Iv::closed(t_min, w(l - 1))
    }
}

struct SetTable {
    sets: Vec<Iv>,
    n_singletons: usize,
}

impl SetTable {
    fn push(&mut self, iv: Iv, index: &mut HashMap<(u64, bool, u64, bool), usize>) -> usize {
        *index.entry(iv.key()).or_insert_with(|| {
            self.sets.push(iv);
            self.sets.len() - 1
        })
    }
}

enum SubjectSets {
    Censored { tail: usize },
    Exact { singleton: usize, seg: usize },
    Sliced { row: usize, slices: Vec<(usize, usize)>, s: f64 },
}

/// Exhaustively maximize the nonparametric likelihood of a tiny instance.
pub fn brute_force_npmle(
    data: &[SubjectRecord],
    knots: &[f64],
    opts: &BruteOptions,
) -> Result<BruteFit> {
    if data.len() > MAX_SUBJECTS {
        return Err(Error::TooLarge(format!(
            "{} subjects exceed the bound of {MAX_SUBJECTS}",
            data.len()
        )));
    }
    if knots.len() > MAX_SEGMENTS {
        return Err(Error::TooLarge(format!(
            "{} segments exceed the bound of {MAX_SEGMENTS}",
            knots.len()
        )));
    }
    if knots.is_empty() || knots[0] != 0.0 || knots.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("knots must be strictly ascending and start at 0".into()));
    }
    for rec in data {
        classify(rec)?;
    }
    let n_segments = knots.len();

    let exact_ages: Vec<f64> = {
        let mut v: Vec<f64> = data
            .iter()
            .filter(|r| r.event_occurred && r.recall == RecallStatus::Exact)
            .map(|r| r.observed)
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v
    };
    let interval_los: Vec<f64> = data
        .iter()
        .filter_map(|r| r.recall_interval().map(|iv| iv.lo))
        .collect();
    let t_min = opts.t_min.unwrap_or_else(|| {
        let m = exact_ages
            .iter()
            .copied()
            .chain(interval_los.iter().copied())
            .fold(f64::INFINITY, f64::min);
        if m.is_finite() {
            m.max(0.0)
        } else {
            0.0
        }
    });
    let t_max = opts.t_max.unwrap_or_else(|| {
        data.iter().map(|r| r.interview_age).fold(0.0f64, f64::max) + 1.0
    });
    if !(t_max > t_min) {
        return Err(Error::Domain("t_max must exceed t_min".into()));
    }

    // Build the set family in its canonical order: exact singletons
    // ascending, then their upper-open complements in matching order, then
    // everything else deduplicated.
    let mut table = SetTable { sets: Vec::new(), n_singletons: exact_ages.len() };
    let mut index: HashMap<(u64, bool, u64, bool), usize> = HashMap::new();
    for &t in &exact_ages {
        table.push(Iv::closed(t, t), &mut index);
    }
    for &t in &exact_ages {
        table.push(Iv::open_closed(t, t_max), &mut index);
    }

    let mut subjects: Vec<SubjectSets> = Vec::new();
    for rec in data {
        let s = rec.interview_age;
        if !rec.event_occurred {
            let tail = table.push(Iv::open_closed(s, t_max), &mut index);
            subjects.push(SubjectSets::Censored { tail });
            continue;
        }
        match rec.recall {
            RecallStatus::Exact => {
                let singleton = exact_ages
                    .binary_search_by(|p| p.partial_cmp(&rec.observed).unwrap())
                    .expect("exact age present");
                subjects.push(SubjectSets::Exact {
                    singleton,
                    seg: segment_of(knots, s - rec.observed),
                });
            }
            RecallStatus::NoRecall => {
                let mut slices = Vec::new();
                for j in 0..n_segments {
                    let iv = segment_slice(s, knots, j, t_min);
                    if !iv.is_empty() {
                        slices.push((table.push(iv, &mut index), j));
                    }
                }
                subjects.push(SubjectSets::Sliced { row: 3, slices, s });
            }
            RecallStatus::Month | RecallStatus::Year => {
                let window = rec.recall_interval().unwrap();
                let win = Iv::closed(window.lo, window.hi);
                let row = if rec.recall == RecallStatus::Month { 1 } else { 2 };
                let mut slices = Vec::new();
                for j in 0..n_segments {
                    let iv = segment_slice(s, knots, j, t_min).intersect(&win);
                    if !iv.is_empty() {
                        slices.push((table.push(iv, &mut index), j));
                    }
                }
                subjects.push(SubjectSets::Sliced { row, slices, s });
            }
        }
    }
    let n_sets = table.sets.len();
    if n_sets > MAX_SETS {
        return Err(Error::TooLarge(format!("{n_sets} interval sets")));
    }

    // Elementary atoms: every endpoint as a point plus the open spans
    // between consecutive endpoints.
    let mut cuts: Vec<f64> = table
        .sets
        .iter()
        .flat_map(|iv| [iv.lo, iv.hi])
        .chain([t_min, t_max])
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut atoms: Vec<Atom> = Vec::new();
    for (k, &c) in cuts.iter().enumerate() {
        atoms.push(Atom::Point(c));
        if k + 1 < cuts.len() {
            atoms.push(Atom::Span(c, cuts[k + 1]));
        }
    }

    // Group atoms by membership mask; each nonzero group is a maximal
    // intersection.
    let mut groups: Vec<(u64, Vec<Atom>)> = Vec::new();
    let mut group_of: HashMap<u64, usize> = HashMap::new();
    for atom in atoms {
        let mut mask = 0u64;
        for (b, iv) in table.sets.iter().enumerate() {
            if atom.in_set(iv) {
                mask |= 1 << b;
            }
        }
        if mask == 0 {
            continue;
        }
        let g = *group_of.entry(mask).or_insert_with(|| {
            groups.push((mask, Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(atom);
    }
    groups.sort_by(|a, b| {
        let la = a.1[0].bounds().0;
        let lb = b.1[0].bounds().0;
        la.partial_cmp(&lb).unwrap().then(a.0.cmp(&b.0))
    });
    let full_masks: Vec<u64> = groups.iter().map(|(m, _)| *m).collect();
    let n_full = full_masks.len();

    // Partial-order reduction: discard candidates strictly contained in
    // another, and candidates that swap a singleton for its upper-open
    // complement.
    let n2 = table.n_singletons;
    let reduced: Vec<bool> = full_masks
        .iter()
        .map(|&s| {
            let dominated = full_masks.iter().any(|&s2| s2 != s && (s & s2) == s);
            let swapped = full_masks.iter().any(|&s2| {
                let gain = s2 & !s;
                let loss = s & !s2;
                gain.count_ones() == 1 && loss.count_ones() == 1 && {
                    let j = gain.trailing_zeros() as usize;
                    let jn = loss.trailing_zeros() as usize;
                    j < n2 && jn == j + n2
                }
            });
            !(dominated || swapped)
        })
        .collect();
    let n_reduced = reduced.iter().filter(|x| **x).count();

    let chosen: Vec<usize> = match opts.class {
        CandidateClass::Full => (0..n_full).collect(),
        CandidateClass::Reduced => (0..n_full).filter(|&i| reduced[i]).collect(),
        CandidateClass::ExactSupport => {
            let mut idxs = Vec::new();
            for j in 0..n2 {
                let want = groups.iter().position(|(_, atoms)| {
                    atoms.len() == 1
                        && matches!(atoms[0], Atom::Point(x) if x == exact_ages[j])
                });
                if let Some(g) = want {
                    idxs.push(g);
                }
            }
            idxs
        }
    };
    if chosen.is_empty() {
        return Err(Error::DegenerateData("no candidate intervals".into()));
    }

    // Subject coefficients on the chosen candidates.
    let mut coef: Vec<Vec<Coef>> = Vec::new();
    if opts.class == CandidateClass::ExactSupport {
        // Computed directly from the singleton geometry so the objective
        // matches the iterative support-restricted estimator exactly,
        // including its unrepresentable-window fallback: a month/year
        // subject compatible with no singleton keeps its category row
        // spread over all singletons up to the interview age.
        for subj in &subjects {
            let mut row: Vec<Coef> = exact_ages
                .iter()
                .map(|&t| match subj {
                    SubjectSets::Censored { tail } => {
                        if table.sets[*tail].contains_point(t) {
                            Coef::One
                        } else {
                            Coef::Zero
                        }
                    }
                    SubjectSets::Exact { singleton, seg } => {
                        if exact_ages[*singleton] == t {
                            Coef::Cell(0, *seg)
                        } else {
                            Coef::Zero
                        }
                    }
                    SubjectSets::Sliced { row: r, slices, .. } => slices
                        .iter()
                        .find(|(b, _)| table.sets[*b].contains_point(t))
                        .map(|(_, j)| Coef::Cell(*r, *j))
                        .unwrap_or(Coef::Zero),
                })
                .collect();
            if row.iter().all(|c| *c == Coef::Zero) {
                if let SubjectSets::Sliced { row: r, s, .. } = subj {
                    if *r == 1 || *r == 2 {
                        row = exact_ages
                            .iter()
                            .map(|&t| {
                                (0..n_segments)
                                    .find(|&j| segment_slice(*s, knots, j, t_min).contains_point(t))
                                    .map(|j| Coef::Cell(*r, j))
                                    .unwrap_or(Coef::Zero)
                            })
                            .collect();
                    }
                }
            }
            coef.push(row);
        }
    } else {
        for subj in &subjects {
            let mut row = Vec::with_capacity(chosen.len());
            for &g in &chosen {
                let mask = full_masks[g];
                let c = match subj {
                    SubjectSets::Censored { tail } => {
                        if mask >> tail & 1 == 1 {
                            Coef::One
                        } else {
                            Coef::Zero
                        }
                    }
                    SubjectSets::Exact { singleton, seg } => {
                        if mask >> singleton & 1 == 1 {
                            Coef::Cell(0, *seg)
                        } else {
                            Coef::Zero
                        }
                    }
                    SubjectSets::Sliced { row: r, slices, .. } => slices
                        .iter()
                        .find(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, j)| Coef::Cell(*r, *j))
                        .unwrap_or(Coef::Zero),
                };
                row.push(c);
            }
            coef.push(row);
        }
    }

    // Subjects compatible with no candidate carry no information under
    // the restricted support and are dropped, mirroring the iterative
    // estimator.
    let mut dropped = 0usize;
    if opts.class == CandidateClass::ExactSupport {
        coef.retain(|row| {
            let keep = row.iter().any(|c| *c != Coef::Zero);
            if !keep {
                dropped += 1;
            }
            keep
        });
        if coef.is_empty() {
            return Err(Error::DegenerateData("every subject was dropped".into()));
        }
    }

    let mut used_cells = vec![vec![false; n_segments]; N_ROWS];
    for row in &coef {
        for c in row {
            if let Coef::Cell(r, s) = c {
                used_cells[*r][*s] = true;
            }
        }
    }
    let nu = coef[0].len();
    let problem = Problem { coef, n_segments, used_cells };

    let (masses, b, loglik) = optimize(&problem, nu, opts);

    let intervals = if opts.class == CandidateClass::ExactSupport {
        exact_ages.iter().map(|&t| vec![(t, t)]).collect()
    } else {
        chosen
            .iter()
            .map(|&g| merge_atom_spans(&groups[g].1))
            .collect()
    };
    Ok(BruteFit {
        intervals,
        masses,
        recall_b: b,
        loglik,
        n_candidates_full: n_full,
        n_candidates_reduced: n_reduced,
        dropped_subjects: dropped,
    })
}

fn merge_atom_spans(atoms: &[Atom]) -> Vec<(f64, f64)> {
    let mut spans: Vec<(f64, f64)> = atoms.iter().map(|a| a.bounds()).collect();
    spans.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in spans {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

/// All compositions of `total` into `slots` nonnegative parts.
fn compositions(total: usize, slots: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=total {
            prefix.push(k);
            rec(total - k, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, slots, &mut Vec::new(), &mut out);
    out
}

fn n_compositions(total: usize, slots: usize) -> f64 {
    // C(total + slots - 1, slots - 1)
    let mut c = 1.0f64;
    for i in 0..slots.saturating_sub(1) {
        c = c * (total + i + 1) as f64 / (i + 1) as f64;
    }
    c
}

fn optimize(problem: &Problem, nu: usize, opts: &BruteOptions) -> (Vec<f64>, Vec<Vec<f64>>, f64) {
    // Per-column recall grids over the cells that actually matter; unused
    // rows get zero and untouched columns stay uniform.
    let col_used: Vec<Vec<usize>> = (0..problem.n_segments)
        .map(|s| (0..N_ROWS).filter(|&r| problem.used_cells[r][s]).collect())
        .collect();

    let mass_steps = [opts.mass_step, 0.04, 0.05, 0.1, 0.2, 0.25, 0.5];
    let recall_steps = [opts.recall_step, 0.2, 0.25, 0.5];
    let mut chosen_steps = (0.5, 0.5);
    'outer: for &bs in &recall_steps {
        for &ms in &mass_steps {
            let mass_count = n_compositions((1.0 / ms).round() as usize, nu);
            let b_count: f64 = col_used
                .iter()
                .map(|used| {
                    if used.is_empty() {
                        1.0
                    } else {
                        n_compositions((1.0 / bs).round() as usize, used.len())
                    }
                })
                .product();
            if mass_count * b_count <= opts.budget as f64 {
                chosen_steps = (ms, bs);
                break 'outer;
            }
        }
    }
    let (ms, bs) = chosen_steps;

    let mass_grid = compositions((1.0 / ms).round() as usize, nu);
    let b_col_grids: Vec<Vec<Vec<usize>>> = col_used
        .iter()
        .map(|used| {
            if used.is_empty() {
                vec![Vec::new()]
            } else {
                compositions((1.0 / bs).round() as usize, used.len())
            }
        })
        .collect();

    let make_b = |col_choice: &[usize]| -> Vec<Vec<f64>> {
        let mut b = vec![vec![0.0; problem.n_segments]; N_ROWS];
        let kb = (1.0 / bs).round();
        for (s, &ci) in col_choice.iter().enumerate() {
            if col_used[s].is_empty() {
                for r in 0..N_ROWS {
                    b[r][s] = 1.0 / N_ROWS as f64;
                }
            } else {
                for (slot, &r) in col_used[s].iter().enumerate() {
                    b[r][s] = b_col_grids[s][ci][slot] as f64 / kb;
                }
            }
        }
        b
    };

    // Enumerate the joint grid, tracking the best few starting points.
    let km = (1.0 / ms).round();
    let mut top: Vec<(f64, Vec<f64>, Vec<usize>)> = Vec::new();
    let mut col_choice = vec![0usize; problem.n_segments];
    loop {
        let b = make_b(&col_choice);
        for comp in &mass_grid {
            let masses: Vec<f64> = comp.iter().map(|&k| k as f64 / km).collect();
            let ll = problem.eval(&masses, &b);
            if ll.is_finite() {
                if top.len() < 8 {
                    top.push((ll, masses, col_choice.clone()));
                    top.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
                } else if ll > top.last().unwrap().0 {
                    top.pop();
                    top.push((ll, masses, col_choice.clone()));
                    top.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
                }
            }
        }
        // Advance the mixed-radix column counter.
        let mut s = 0;
        loop {
            if s == problem.n_segments {
                break;
            }
            col_choice[s] += 1;
            if col_choice[s] < b_col_grids[s].len() {
                break;
            }
            col_choice[s] = 0;
            s += 1;
        }
        if s == problem.n_segments {
            break;
        }
    }

    if top.is_empty() {
        // Every grid point hit a zero-weight subject; fall back to the
        // barycenter as a refinement start.
        let masses = vec![1.0 / nu as f64; nu];
        let b = vec![vec![1.0 / N_ROWS as f64; problem.n_segments]; N_ROWS];
        return refine(problem, masses, b);
    }

    let mut best: Option<(Vec<f64>, Vec<Vec<f64>>, f64)> = None;
    for (_, masses, col_choice) in top {
        let b = make_b(&col_choice);
        let candidate = refine(problem, masses, b);
        if best.as_ref().map_or(true, |b0| candidate.2 > b0.2) {
            best = Some(candidate);
        }
    }
    best.unwrap()
}

/// Cyclic coordinatewise ascent: golden-section pairwise transfers on the
/// mass simplex and within each recall column. Every transfer objective is
/// concave, so each one-dimensional search is exact.
fn refine(
    problem: &Problem,
    mut masses: Vec<f64>,
    mut b: Vec<Vec<f64>>,
) -> (Vec<f64>, Vec<Vec<f64>>, f64) {
    let mut ll = problem.eval(&masses, &b);
    for _sweep in 0..400 {
        let mut improved = false;

        for i in 0..masses.len() {
            for j in (i + 1)..masses.len() {
                let (t, val) = golden(
                    |t| {
                        let mut m = masses.clone();
                        m[i] += t;
                        m[j] -= t;
                        problem.eval(&m, &b)
                    },
                    -masses[i],
                    masses[j],
                );
                if val > ll + 1e-12 {
                    masses[i] += t;
                    masses[j] -= t;
                    ll = val;
                    improved = true;
                }
            }
        }

        for s in 0..problem.n_segments {
            let used: Vec<usize> =
                (0..N_ROWS).filter(|&r| problem.used_cells[r][s]).collect();
            for a in 0..used.len() {
                for c in (a + 1)..used.len() {
                    let (ra, rc) = (used[a], used[c]);
                    let (t, val) = golden(
                        |t| {
                            let mut bb = b.clone();
                            bb[ra][s] += t;
                            bb[rc][s] -= t;
                            problem.eval(&masses, &bb)
                        },
                        -b[ra][s],
                        b[rc][s],
                    );
                    if val > ll + 1e-12 {
                        b[ra][s] += t;
                        b[rc][s] -= t;
                        ll = val;
                        improved = true;
                    }
                }
            }
        }

        if !improved {
            break;
        }
    }
    (masses, b, ll)
}

/// Golden-section search for the maximum of a concave function on [a, b].
fn golden<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..90 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}
