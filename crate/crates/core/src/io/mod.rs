//! Model files (JSON) and result reports (CSV).

mod model_file;
mod report;

pub use model_file::{
    load_calibration_data, load_model, load_model_file, load_updates, parse_model_file, parse_updates, save_model_file, CalibrationFile, ModelFile, UpdatesFile,
    SCHEMA_VERSION,
};
pub use report::{
    build_report, read_report, rederive_aggregates, write_report, AggregateCheck, ParsedReport, Report, ReportRow,
    AGGREGATE_COLUMNS, FIXED_COLUMNS,
};
