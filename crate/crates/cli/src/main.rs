//! `gcrlab` command-line driver.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser};
use gcrlab::Error;

use commands::Command;

#[derive(Debug, Parser)]
#[command(name = "gcrlab", version, about = "Gauss–Codazzi–Ricci workbench: residuals, realization, Hodge theory and weak-convergence experiments")]
struct Cli {
    /// `[subcommand]` sections of `key = value` defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

enum Failure {
    /// Already-rendered clap message.
    Usage(String),
    Validation(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

fn parse(argv: &[OsString]) -> Result<(Cli, ArgMatches), clap::Error> {
    let matches = Cli::command().try_get_matches_from(argv)?;
    Ok((Cli::from_arg_matches(&matches)?, matches))
}

/// Parse the command line, then splice in config entries for the options it
/// left unset.
fn parse_with_config(argv: Vec<OsString>) -> Result<Cli, Failure> {
    let (first, matches) = parse(&argv).map_err(clap_failure)?;
    let Some(path) = &first.config else {
        return Ok(first);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let sections = config::parse(&text)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let explicit = |id: &str| sub.value_source(id) == Some(ValueSource::CommandLine);
    let extra = config::arguments(&sections, &Cli::command(), name, explicit)?;
    let mut full = vec![argv[0].clone(), OsString::from(name)];
    full.extend(extra.into_iter().map(OsString::from));
    let pos = argv.iter().position(|a| a.to_str() == Some(name)).expect("present") + 1;
    full.extend_from_slice(&argv[1..pos - 1]);
    full.extend_from_slice(&argv[pos..]);
    Ok(parse(&full).map_err(clap_failure)?.0)
}

fn clap_failure(e: clap::Error) -> Failure {
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = e.print();
            std::process::exit(0);
        }
        _ => Failure::Usage(e.render().to_string()),
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("GCRLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Failure::Validation(format!("GCRLAB_THREADS must be a nonnegative integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Validation(format!("cannot configure threads: {e}")))
}

fn run(argv: Vec<OsString>) -> Result<(), Failure> {
    let cli = parse_with_config(argv)?;
    configure_threads()?;
    let output = cli.command.run()?;
    match commands::out_dir(&cli.command) {
        Some(dir) => {
            if dir.as_os_str().is_empty() {
                return Err(Failure::Validation("empty output path".into()));
            }
            std::fs::create_dir_all(dir).map_err(Error::from)?;
            for (name, contents) in &output.files {
                std::fs::write(dir.join(name), contents).map_err(Error::from)?;
            }
        }
        None => {
            if let Some(i) = output.primary {
                print!("{}", output.files[i].1);
            }
        }
    }
    println!("{}", output.summary);
    Ok(())
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprint!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {}", msg.trim_end());
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
