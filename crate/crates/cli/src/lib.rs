//! Command-line front end for the bwsolve library: run configuration,
//! artifact writers and the `simulate`, `verify`, `sweep` and `preset list`
//! commands.

pub mod artifacts;
pub mod commands;
pub mod config;

use bwsolve::error::ErrorClass;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(err: &bwsolve::Error) -> i32 {
    match err.class() {
        ErrorClass::Config => EXIT_CONFIG,
        ErrorClass::Precondition => EXIT_PRECONDITION,
        ErrorClass::Numerical => EXIT_NUMERICAL,
    }
}

pub fn class_name(err: &bwsolve::Error) -> &'static str {
    match err.class() {
        ErrorClass::Config => "config",
        ErrorClass::Precondition => "precondition",
        ErrorClass::Numerical => "numerical",
    }
}
