//! Command-line front end.
//!
//! Every run writes `manifest.json` into the output directory. The manifest
//! echoes the resolved command, seed and formats, lists the files written
//! and any failed jobs, and can be replayed with `--replay`.

mod args;
mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use args::{Cli, Command, Format, Grid};

use crate::error::{Error, Result};
use crate::io::write_json;
use crate::pool::Pool;
use crate::table::Table;

pub const MANIFEST: &str = "manifest.json";

/// Child seeds are FNV-1a over (master seed, job label), finished with a
/// SplitMix64 round; indexed jobs fold their indices in with further
/// SplitMix64 rounds.
pub const SEED_RULE: &str = "child = splitmix64(fnv1a64(le_bytes(master) ++ label)); \
indexed(label, [i, j, ...]) = fold(child, k -> splitmix64(s ^ splitmix64(k + 0x632be59bd9b4e019)))";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Failure {
    pub job: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub formats: Vec<Format>,
    pub seed_rule: String,
    /// Labels and indices of the seeds drawn by this command.
    pub seed_jobs: Vec<String>,
    pub command: Command,
    pub outputs: Vec<String>,
    pub failures: Vec<Failure>,
    pub summary: Map<String, Value>,
    /// Set when the run as a whole failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Output sink of one run.
pub struct Run {
    pub out: PathBuf,
    pub seed: u64,
    pub formats: Vec<Format>,
    pub pool: Pool,
    outputs: Vec<String>,
    failures: Vec<Failure>,
    seed_jobs: Vec<String>,
    summary: Map<String, Value>,
}

impl Run {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Writes `t` as CSV and/or JSON, depending on the requested formats.
    pub fn table(&mut self, t: &Table) -> Result<()> {
        if self.wants(Format::Csv) {
            let f = t.write_csv(&self.out)?;
            self.record(f);
        }
        if self.wants(Format::Json) {
            let f = t.write_json(&self.out)?;
            self.record(f);
        }
        Ok(())
    }

    pub fn svg(&mut self, name: &str, content: String) -> Result<()> {
        if self.wants(Format::Svg) {
            let file = format!("{name}.svg");
            crate::io::write_atomic(&self.out.join(&file), content.as_bytes())?;
            self.record(file);
        }
        Ok(())
    }

    /// Always written, whatever the formats.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let file = format!("{name}.json");
        write_json(&self.out.join(&file), value)?;
        self.record(file);
        Ok(())
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    pub fn record(&mut self, file: String) {
        println!("{}", self.out.join(&file).display());
        self.outputs.push(file);
    }

    pub fn fail(&mut self, job: String, error: &dyn std::fmt::Display) {
        self.failures.push(Failure {
            job,
            error: error.to_string(),
        });
    }

    pub fn seeds(&mut self, rule: &str) {
        self.seed_jobs.push(rule.to_owned());
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_owned(), value.into());
    }

    /// Errors with [`Error::TotalFailure`] when every one of `total` jobs
    /// failed.
    pub fn check_partial(&self, total: usize) -> Result<()> {
        if total > 0 && self.failures.len() >= total {
            return Err(Error::TotalFailure(total));
        }
        Ok(())
    }
}

fn read_manifest(path: &Path) -> Result<Manifest> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Runs the command line and writes the manifest.
pub fn run(cli: Cli) -> Result<()> {
    let (command, seed, formats) = match (&cli.replay, cli.command) {
        (Some(path), None) => {
            let m = read_manifest(path)?;
            (
                m.command,
                cli.seed.unwrap_or(m.seed),
                cli.format.unwrap_or(m.formats),
            )
        }
        (None, Some(c)) => (
            c,
            cli.seed.unwrap_or(0),
            cli.format.unwrap_or_else(Format::defaults),
        ),
        (Some(_), Some(_)) => return Err(Error::Config("--replay takes no subcommand".into())),
        (None, None) => return Err(Error::Config("a subcommand or --replay is required".into())),
    };
    let threads = match cli.threads {
        Some(0) => return Err(Error::Config("--threads must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let mut run = Run {
        out: cli.out,
        seed,
        formats: formats.clone(),
        pool: Pool::new(threads)?,
        outputs: Vec::new(),
        failures: Vec::new(),
        seed_jobs: Vec::new(),
        summary: Map::new(),
    };
    std::fs::create_dir_all(&run.out).map_err(|e| Error::io(&run.out, e))?;
    let result = commands::dispatch(&command, &mut run);
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        threads: run.pool.threads(),
        formats,
        seed_rule: SEED_RULE.into(),
        seed_jobs: run.seed_jobs.clone(),
        command,
        outputs: run.outputs.clone(),
        failures: run.failures.clone(),
        summary: run.summary.clone(),
        error: result.as_ref().err().map(|e| e.to_string()),
    };
    write_json(&run.out.join(MANIFEST), &manifest)?;
    println!("{}", run.out.join(MANIFEST).display());
    result
}

/// Parses `args`, runs, and maps the outcome to an exit code: 0 on success,
/// 1 on total failure, 2 on configuration errors.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
