//! Subcommands of the `pmt` binary.

pub mod analyze;
pub mod list;
pub mod run;

/// Exit code for backend creation errors.
pub const EXIT_BACKEND: i32 = 2;
/// Exit code when the child command cannot be spawned.
pub const EXIT_SPAWN: i32 = 127;
