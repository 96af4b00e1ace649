//! Library side of the `doall` command: run artifacts, sweeps and exit
//! codes, shared by the binary and the integration tests.

pub mod artifacts;
pub mod sweep;

use doall::Error;

/// Version of the code that produced an artifact: a hash over the sources.
pub const CODE_VERSION: &str = env!("DOALL_CODE_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GRAPH: i32 = 3;
pub const EXIT_NO_TERMINATION: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parameter(_) | Error::Spec(_) => EXIT_CONFIG,
        Error::Graph(_) | Error::Shape(_) => EXIT_GRAPH,
        _ => EXIT_FAILURE,
    }
}
