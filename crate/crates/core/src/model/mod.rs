//! Domain types: subject records, recall-probability and event-time models,
//! and the observation density they induce.

pub mod dataset;
pub mod density;
pub mod event;
pub mod recall;
pub mod record;

pub use dataset::{read_csv, read_csv_path, write_csv, write_csv_path};
pub use density::{event_side_integral, outcome_density, outcome_total_mass};
pub use event::EventTimeModel;
pub use recall::{LogisticRecall, PiecewiseRecall, RecallModel, RecallStatus, N_RECALL};
pub use record::{
    month_interval, observed_v, year_interval, IntervalKind, RecallInterval, SubjectRecord, MONTH,
};
