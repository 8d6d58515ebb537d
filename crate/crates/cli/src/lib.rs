//! The `needdesk` command line: batch pipeline, evaluation, reports and the
//! triage service.
//!
//! Exit codes: 0 on success, 1 when input data is missing or invalid, 2 on
//! usage errors.

pub mod args;
pub mod config;
mod commands;
pub mod output;
pub mod truth;

use std::ffi::OsString;

use clap::Parser;
use thiserror::Error;

pub use crate::commands::{
    ASSIGNMENTS, CORPUS, DETECT_STATS, INGEST_REPORT, LABELS, RESOLVE_SUMMARY, SOURCES, TABLE_STEM,
};

use crate::args::{Cli, Command};
use crate::config::{Reference, Settings};
use crate::output::OutDir;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// An invocation that parsed but cannot be carried out as written.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Everything a subcommand needs.
pub struct Env {
    pub settings: Settings,
    pub reference: Reference,
    pub out: OutDir,
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let settings = Settings::resolve(&cli.global)?;
    let reference = Reference::load(&settings)?;
    // Only commands that produce files create the output directory.
    let writes = !matches!(cli.command, Command::Validate | Command::Similarity(_) | Command::Serve(_));
    let out = if writes {
        OutDir::create(&settings.out)?
    } else {
        output::OutDir::unchecked(&settings.out)
    };
    let env = Env {
        settings,
        reference,
        out,
    };
    commands::dispatch(&env, cli.command)
}
