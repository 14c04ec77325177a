mod args;
mod commands;

use std::fs::File;
use std::io::BufReader;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use harmonious::Error;

use args::{Cli, RunManifest};

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::NotAdmissible(_)
                | Error::GateFailed(_)
                | Error::OutOfScope(_)
                | Error::NotFixedPoint { .. }
                | Error::Divergent { .. } => 1,
                _ => 2,
            };
        }
    }
    2
}

/// Accepts a bare manifest or any JSON output that embeds one.
fn read_manifest(path: &std::path::Path) -> Result<RunManifest> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut v: serde_json::Value =
        serde_json::from_reader(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(inner) = v.get_mut("manifest") {
        v = inner.take();
    }
    serde_json::from_value(v).with_context(|| format!("{} does not hold a run manifest", path.display()))
}

fn with_threads(threads: Option<usize>, f: impl FnOnce() -> Result<u8> + Send) -> Result<u8> {
    let Some(n) = threads else { return f() };
    if n == 0 {
        bail!(Error::InvalidArgument("--threads must be positive".into()));
    }
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
        pool.install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        eprintln!("note: built without the parallel feature; --threads {n} ignored");
        f()
    }
}

fn run(cli: Cli) -> Result<u8> {
    let manifest = match &cli.manifest {
        Some(path) => {
            if cli.command.is_some() {
                bail!(Error::InvalidArgument("--manifest replaces the subcommand; give one or the other".into()));
            }
            let mut m = read_manifest(path)?;
            if let Some(out) = cli.out {
                m.out = out;
            }
            m
        }
        None => RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cli.seed.unwrap_or(0),
            out: cli.out.unwrap_or_else(|| ".".into()),
            command: match cli.command {
                Some(c) => c,
                None => bail!(Error::InvalidArgument("a subcommand or --manifest is required".into())),
            },
        },
    };
    with_threads(cli.threads, || commands::execute(&manifest))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
