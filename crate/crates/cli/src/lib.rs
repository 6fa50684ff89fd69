//! Command-line front end: embed, segment, evaluate and benchmark.
//!
//! Exit codes: 0 success, 1 I/O or parse failure, 2 numerical failure,
//! 3 invalid configuration (including command-line usage errors).

pub mod args;
pub mod commands;
pub mod pipeline;
pub mod report;

use pfe_core::{Error, ErrorKind, Result};

pub use args::Cli;

pub const EXIT_IO: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    match err.kind() {
        ErrorKind::Io => EXIT_IO,
        ErrorKind::Numerical => EXIT_NUMERICAL,
        ErrorKind::Config => EXIT_CONFIG,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    use args::Command::*;
    match &cli.command {
        Embed(a) => commands::embed(a),
        Segment(a) => commands::segment(a),
        Evaluate(a) => commands::evaluate(a),
        Benchmark(a) => commands::benchmark(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let io = Error::Io {
            path: "x".into(),
            source: std::io::Error::other("boom"),
        };
        assert_eq!(exit_code(&io), EXIT_IO);
        assert_eq!(exit_code(&Error::IcBreakdown { attempts: 8 }), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::NonFinite("y".into())), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::InvalidParameter("k".into())), EXIT_CONFIG);
    }
}
