//! `waxsim` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or config error, 3 numerical or model failure.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};

use waxsim::commands::{self, CommandOutput};
use waxsim::config::{parse_lines, parse_toggle_set, RunConfig, KEYS};
use waxsim::protocol::Execution;
use waxsim::Error;

const CONFIG_ENV: &str = "WAXSIM_CONFIG";

fn cli() -> Command {
    let mut cmd = Command::new("waxsim")
        .about("Wave-packet expansion of levitated nanospheres under decoherence and CSL")
        .after_help(format!(
            "Config files hold `section.key = value` lines; every key can also be given as \
             `--section.key VALUE`. Flags override the file. The file path defaults to ${CONFIG_ENV}."
        ))
        .arg(Arg::new("config").long("config").value_name("PATH").global(true).help("config file"))
        .arg(
            Arg::new("print-config")
                .long("print-config")
                .action(ArgAction::SetTrue)
                .global(true)
                .help("print the resolved configuration and exit"),
        )
        .arg(
            Arg::new("preset")
                .long("preset")
                .value_name("ground|space|custom")
                .global(true)
                .help("shorthand for --environment.preset"),
        )
        .arg(
            Arg::new("toggles")
                .long("toggles")
                .value_name("none|all|LIST")
                .global(true)
                .help("enabled channels, e.g. `none` or `blackbody,csl`"),
        )
        .arg(Arg::new("no-gas").long("no-gas").action(ArgAction::SetTrue).global(true).help("disable gas collisions"))
        .arg(
            Arg::new("no-blackbody")
                .long("no-blackbody")
                .action(ArgAction::SetTrue)
                .global(true)
                .help("disable blackbody channels"),
        )
        .arg(Arg::new("csl").long("csl").action(ArgAction::SetTrue).global(true).help("enable CSL"))
        .arg(Arg::new("no-csl").long("no-csl").action(ArgAction::SetTrue).global(true).help("disable CSL"))
        .arg(
            Arg::new("serial")
                .long("serial")
                .action(ArgAction::SetTrue)
                .global(true)
                .help("run Monte-Carlo work on one thread (same output as parallel)"),
        )
        .subcommand(Command::new("rates").about("decoherence budget CSV"))
        .subcommand(Command::new("expand").about("wave-packet width sigma(t) CSV"))
        .subcommand(
            Command::new("campaign")
                .about("seeded measurement campaign CSV")
                .arg(Arg::new("samples").long("samples").value_name("PATH").help("also write raw positions to PATH")),
        )
        .subcommand(
            Command::new("bound").about("minimum detectable CSL rate over the N sweep").arg(
                Arg::new("check-oracle")
                    .long("check-oracle")
                    .action(ArgAction::SetTrue)
                    .help("cross-check every row against Monte-Carlo power bisection"),
            ),
        )
        .subcommand(Command::new("feasibility").about("drop distance for each grid time"));
    for k in KEYS {
        cmd = cmd.arg(
            Arg::new(k.key)
                .long(k.key)
                .value_name(k.unit)
                .global(true)
                .allow_hyphen_values(true)
                .help(k.help)
                .help_heading("Configuration keys"),
        );
    }
    cmd
}

fn flag(m: &ArgMatches, id: &str) -> bool {
    m.get_flag(id)
}

fn collect_pairs(m: &ArgMatches) -> Result<Vec<(String, String)>, Error> {
    let mut pairs = Vec::new();
    let path =
        m.get_one::<String>("config").map(PathBuf::from).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    if let Some(path) = path {
        let text =
            fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        pairs.extend(parse_lines(&text)?);
    }
    let mut push = |k: &str, v: &str| pairs.push((k.to_string(), v.to_string()));
    if let Some(p) = m.get_one::<String>("preset") {
        push("environment.preset", p);
    }
    if let Some(t) = m.get_one::<String>("toggles") {
        let t = parse_toggle_set(t)?;
        push("toggles.blackbody", &t.blackbody.to_string());
        push("toggles.gas", &t.gas.to_string());
        push("toggles.csl", &t.csl.to_string());
    }
    if flag(m, "no-gas") {
        push("toggles.gas", "false");
    }
    if flag(m, "no-blackbody") {
        push("toggles.blackbody", "false");
    }
    if flag(m, "csl") {
        push("toggles.csl", "true");
    }
    if flag(m, "no-csl") {
        push("toggles.csl", "false");
    }
    for k in KEYS {
        if let Some(v) = m.get_one::<String>(k.key) {
            push(k.key, v);
        }
    }
    Ok(pairs)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) => 2,
        Error::Numerical(_) | Error::NotBracketed { .. } => 3,
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if let Error::NotBracketed { power_curve, .. } = e {
        for (lambda, power) in power_curve {
            eprintln!("  lambda = {lambda:e} Hz  power = {power}");
        }
    }
    ExitCode::from(exit_code(e))
}

fn run(top: &ArgMatches) -> Result<(), Error> {
    let (name, sub) = match top.subcommand() {
        Some((name, sub)) => (Some(name), sub),
        None => (None, top),
    };
    let cfg = RunConfig::from_pairs(collect_pairs(sub)?)?;
    if flag(sub, "print-config") {
        print!("{}", cfg.to_canonical());
        return Ok(());
    }
    let execution = if flag(sub, "serial") { Execution::Serial } else { Execution::Parallel };
    let out: CommandOutput = match name {
        Some("rates") => commands::rates(&cfg)?,
        Some("expand") => commands::expand(&cfg)?,
        Some("campaign") => {
            let path = sub.get_one::<String>("samples");
            let out = commands::campaign(&cfg, execution, path.is_some())?;
            if let (Some(path), Some(text)) = (path, &out.samples_csv) {
                fs::write(path, text).map_err(|e| Error::Config(format!("cannot write {path}: {e}")))?;
            }
            out
        }
        Some("bound") => commands::bound(&cfg, flag(sub, "check-oracle"), execution)?,
        Some("feasibility") => commands::feasibility(&cfg)?,
        _ => return Err(Error::Config("no subcommand given (see --help)".into())),
    };
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let mut stdout = io::stdout().lock();
    stdout.write_all(out.csv.as_bytes()).map_err(|e| Error::Config(format!("cannot write output: {e}")))?;
    Ok(())
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
