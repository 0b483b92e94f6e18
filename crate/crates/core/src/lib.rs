//! Estimation of time-to-event distributions from partially recalled,
//! cross-sectional data.
//!
//! Respondents interviewed at age `S` report whether a landmark event has
//! occurred and, if so, recall its date exactly, up to a calendar month,
//! up to a calendar year, or not at all. Because the chance of recalling
//! fades with the time since the event, the censoring is informative and
//! enters the likelihood through recall-probability functions of elapsed
//! time.
//!
//! The crate provides:
//!
//! * [`model`] — domain types, calendar-interval arithmetic and the
//!   observation density;
//! * [`simulate`] — scenario presets and a reproducible data generator;
//! * [`parametric`] — Weibull maximum likelihood under the current-status,
//!   binary-recall and partial-recall likelihoods, with observed-information
//!   standard errors;
//! * [`nonparametric`] — the support-restricted approximate NPMLE fitted by
//!   alternating self-consistency and EM recall updates, a binary-recall
//!   variant, the EDF, and a brute-force oracle for tiny instances;
//! * [`diagnostics`] — chi-square goodness of fit and recall-shape checks;
//! * [`mc`] — a Monte Carlo harness comparing the estimators.

pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod nonparametric;
pub mod parametric;
pub mod quad;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{
    month_interval, observed_v, outcome_density, year_interval, EventTimeModel, LogisticRecall,
    PiecewiseRecall, RecallInterval, RecallModel, RecallStatus, SubjectRecord,
};
pub use nonparametric::{build_support, edf, fit_amle, fit_binary_amle, NpFit, NpSupport};
pub use parametric::{fit_mle, loglik, standard_errors, survival_curve, LikelihoodKind, ParametricFit};
pub use simulate::{generate, Scenario};
