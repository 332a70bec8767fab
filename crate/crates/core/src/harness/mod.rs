//! End-to-end subsampling experiments: pilot split, scheme and size sweep,
//! weighted refits and error metrics against the remainder fit.

mod config;
mod report;
mod run;

pub use config::{DataSource, ExperimentConfig, ModelName, SchemeEntry};
pub use report::{emit, quartiles, Format, Quartiles, Report, ReportRow, SummaryRow, CSV_HEADER};
pub use run::{evaluate, mean_loss, run_experiment, run_on, Metrics};
