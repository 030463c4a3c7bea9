//! Command-line front end for the `gk` library.
//!
//! Exit codes: 0 success, 1 domain or usage error, 2 verification failure,
//! 3 inconclusive brute-force stabilization.

pub mod args;
pub mod commands;
pub mod literal;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;
use gk::GkError;

use args::{Command, RunConfig, Threads};
use output::{Output, Status};

/// Worker count: `GK_THREADS` overrides the `--threads` flag.
pub fn resolve_threads(flag: Threads, env: Option<&str>) -> Result<usize, String> {
    match env {
        Some(v) if !v.trim().is_empty() => Threads::parse(v).map(Threads::count).map_err(|e| format!("GK_THREADS: {e}")),
        _ => Ok(flag.count()),
    }
}

fn status_of(e: &GkError) -> Status {
    match e {
        GkError::Domain(_) | GkError::Parse { .. } | GkError::Config(_) => Status::Domain,
        GkError::Consistency(_) => Status::VerificationFailure,
        GkError::Inconclusive(_) => Status::Inconclusive,
    }
}

/// Executes one configuration and returns its output.
pub fn execute(cfg: &RunConfig, threads: usize) -> Result<Output, GkError> {
    match &cfg.command {
        Command::Cusps(a) => commands::cusps(a),
        Command::Kloosterman(a) => commands::kloosterman(a),
        Command::Delta(a) => commands::delta(a),
        Command::Bessel(a) => commands::bessel(a),
        Command::Btransform(a) => commands::btransform(a),
        Command::Geom(a) => commands::geom(a),
        Command::Sieve(a) => commands::sieve(a),
        Command::Verify(a) => {
            let rep = verify::run_suite(a.suite, a.budget, a.seed, threads);
            let status = rep.status();
            Ok(Output::new(&rep).with_table(rep.checks.clone()).with_status(status))
        }
    }
}

/// Parses `argv`, runs it and writes the result; returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => Status::Domain.code(),
            };
        }
    };
    let env = std::env::var("GK_THREADS").ok();
    let threads = match resolve_threads(cfg.threads, env.as_deref()) {
        Ok(n) => n,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return Status::Domain.code();
        }
    };
    let out = match execute(&cfg, threads) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return status_of(&e).code();
        }
    };
    let text = out.render(cfg.format);
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        let _ = writeln!(stderr, "error: {msg}");
        return Status::Domain.code();
    }
    out.status.code()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides_flag() {
        assert_eq!(resolve_threads(Threads::Fixed(3), None).unwrap(), 3);
        assert_eq!(resolve_threads(Threads::Fixed(3), Some("5")).unwrap(), 5);
        assert_eq!(resolve_threads(Threads::Fixed(3), Some("")).unwrap(), 3);
        assert!(resolve_threads(Threads::Fixed(3), Some("zero")).is_err());
    }
}
