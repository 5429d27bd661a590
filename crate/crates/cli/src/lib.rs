//! Command-line front end for `blaschke-core`.

pub mod commands;
pub mod error;
pub mod expr;
pub mod input;
pub mod report;
pub mod svg;

pub use error::CliError;
pub use expr::{parse_expr, ParseError, ProductExpression};
pub use report::{run_analysis, AnalysisReport, Options, Status};
