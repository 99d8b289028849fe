//! Command-line pipeline over the `netmanifold` library: stage execution,
//! artifact persistence and SVG rendering.

pub mod output;
pub mod pipeline;
pub mod svg;

pub use pipeline::{run, RunConfig, Stage, StageError};

use netmanifold::Error;

/// Process exit code for an error: 1 usage, 2 data, 3 numerical.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::InvalidArgument(_) => 1,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}
