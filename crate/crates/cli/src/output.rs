//! Deterministic CSV/JSON writers for the subcommand outputs.

use std::path::Path;

use anyhow::{Context, Result};
use recallsurv_core::diagnostics::RecallCurveGroup;
use recallsurv_core::mc::{McRaw, McRow};
use recallsurv_core::nonparametric::NpFit;

/// Format a float for CSV output: shortest round-trip form, `NA` for
/// non-finite values (mirroring the dashes in printed tables).
pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "NA".to_string()
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_mc_summary(path: &Path, rows: &[McRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["case", "param", "estimator", "bias", "stdev", "mse", "reps_used", "failures"])?;
    for r in rows {
        w.write_record([
            r.case_label.clone(),
            r.quantity.clone(),
            r.estimator.clone(),
            fmt(r.bias),
            fmt(r.stdev),
            fmt(r.mse),
            r.reps_used.to_string(),
            r.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mc_raw(path: &Path, raw: &[McRaw]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rep", "estimator", "quantity", "value"])?;
    for r in raw {
        w.write_record([
            r.rep.to_string(),
            r.estimator.clone(),
            r.quantity.clone(),
            fmt(r.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Step-function export of a nonparametric fit: `(t, F)` pairs at the
/// support points.
pub fn write_step_csv(path: &Path, fit: &NpFit) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "F"])?;
    let mut acc = 0.0;
    for (t, q) in fit.support.points.iter().zip(&fit.masses) {
        acc += q;
        w.write_record([fmt(*t), fmt(acc)])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format piecewise-vs-logistic recall comparison.
pub fn write_recall_check(
    path: &Path,
    knots: &[f64],
    piecewise: &[Vec<f64>],
    logistic: &recallsurv_core::LogisticRecall,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["segment", "seg_lo", "seg_hi", "category", "piecewise", "logistic_mid"])?;
    let names = ["exact", "month", "year", "none"];
    let spacing = if knots.len() >= 2 {
        knots[knots.len() - 1] - knots[knots.len() - 2]
    } else {
        3.0
    };
    for (j, &lo) in knots.iter().enumerate() {
        let hi = knots.get(j + 1).copied().unwrap_or(lo + spacing);
        let mid = 0.5 * (lo + hi);
        let pl = logistic.probs(mid);
        for (cat, name) in names.iter().enumerate() {
            w.write_record([
                j.to_string(),
                fmt(lo),
                fmt(hi),
                (*name).to_string(),
                fmt(piecewise[cat][j]),
                fmt(pl[cat]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Long-format recall-proportion curves (observed groups and/or model ages).
pub fn write_recall_curves(
    path: &Path,
    observed: &[RecallCurveGroup],
    model: &[RecallCurveGroup],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["source", "age_lo", "age_hi", "n_events", "k", "cumulative"])?;
    for (source, groups) in [("observed", observed), ("model", model)] {
        for g in groups {
            for (k, &c) in g.cumulative.iter().enumerate() {
                w.write_record([
                    source.to_string(),
                    fmt(g.age_lo),
                    fmt(g.age_hi),
                    g.n_events.to_string(),
                    k.to_string(),
                    fmt(c),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Fig-2-style long table: per (age, estimator) bias, variance and MSE.
pub fn write_fig2(path: &Path, rows: &[McRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["age", "estimator", "bias", "variance", "mse"])?;
    for r in rows {
        let age = r
            .quantity
            .trim_start_matches("F(")
            .trim_end_matches(')')
            .to_string();
        let n = r.reps_used as f64;
        let variance = if r.reps_used > 1 {
            r.stdev * r.stdev * (n - 1.0) / n
        } else {
            0.0
        };
        w.write_record([
            age,
            r.estimator.clone(),
            fmt(r.bias),
            fmt(variance),
            fmt(r.mse),
        ])?;
    }
    w.flush()?;
    Ok(())
}
