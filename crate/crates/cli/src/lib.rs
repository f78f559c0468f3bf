//! Command-line front end: problem-file parsing, command dispatch and
//! report emission.

pub mod commands;
pub mod emit;
pub mod error;
pub mod problem;
pub mod report;

pub use commands::{execute, execute_path, run_command, Command, Outcome, Overrides, Rendered};
pub use emit::Format;
pub use error::CliError;
pub use problem::{parse_problem_file, ProblemFile};
