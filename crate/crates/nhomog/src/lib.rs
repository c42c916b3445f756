//! Command-line and file-format layer over `nhomog-core`.

pub mod io;
pub mod run;

pub use run::{run, Command, Failure, Outcome, RunConfig};
