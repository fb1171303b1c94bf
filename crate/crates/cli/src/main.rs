//! `gzk`: periodic gZK waves and their transverse stability from the command line.

mod commands;
mod config;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Arg, ArgMatches, Command};

use config::{defaults_text, RunConfig, KEYS};
use error::CliError;

const RUNS: &[(&str, &str)] = &[
    ("wave", "solve for a periodic wave; writes wave.json, profile.svg, phase.svg"),
    ("spectrum", "eigenvalues of one operator; writes spectrum_<operator>*.json and an SVG"),
    ("index", "the index quantity (L^-1 1, 1) and eigenvalue counts; writes index.json"),
    ("analyze", "full instability verdict with growth curve and spectra at k = 0, k0/2, k0"),
    ("sweep", "verdicts over p_values x c_range x L_range; writes sweep.csv"),
    ("evolve", "linearized time evolution at one k; writes evolution.json, .csv, .svg"),
];

fn cli() -> Command {
    let mut cmd = Command::new("gzk")
        .about("Periodic waves of the generalized Zakharov-Kuznetsov equation and their transverse stability")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(Command::new("defaults").about("print every configuration key with its default"));
    for (name, about) in RUNS {
        let mut sub = Command::new(*name).about(*about).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("key = value file; flags override it"),
        );
        for (key, default, help) in KEYS {
            sub = sub.arg(
                Arg::new(*key)
                    .long(*key)
                    .value_name("VALUE")
                    .allow_negative_numbers(true)
                    .help(format!("{help} [default: {default}]")),
            );
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn config_from(m: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = m.get_one::<PathBuf>("config") {
        cfg.apply_file(path)?;
    }
    for (key, _, _) in KEYS {
        if let Some(value) = m.get_one::<String>(key) {
            cfg.set(key, value)?;
        }
    }
    Ok(cfg)
}

fn run(name: &str, m: &ArgMatches) -> Result<(), CliError> {
    if name == "defaults" {
        print!("{}", defaults_text());
        return Ok(());
    }
    let cfg = config_from(m)?;
    match name {
        "wave" => commands::wave(&cfg),
        "spectrum" => commands::spectrum_cmd(&cfg),
        "index" => commands::index_cmd(&cfg),
        "analyze" => commands::analyze(&cfg),
        "sweep" => commands::sweep(&cfg),
        "evolve" => commands::evolve(&cfg),
        other => Err(CliError::Usage(format!("unknown subcommand {other}"))),
    }
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    match run(name, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
