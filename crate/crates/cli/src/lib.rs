//! Library half of the `lre` binary: argument definitions, pipeline
//! configuration, and stage execution, kept out of `main` so integration
//! tests can drive them directly.

pub mod args;
pub mod config;
pub mod run;

pub use run::run;

/// Process exit code for an error: 1 for bad arguments or configuration,
/// 3 for numeric failures, 2 for everything wrong with data or files.
pub fn exit_code(e: &lre_core::Error) -> i32 {
    match e {
        lre_core::Error::InvalidArgument(_) | lre_core::Error::Config(_) => 1,
        lre_core::Error::Numeric(_) => 3,
        _ => 2,
    }
}
