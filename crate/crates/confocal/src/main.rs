use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use confocal::cli_io::{apply_tolerances, read_config, run_command, write_outputs, RunOptions, COMMANDS};
use confocal::Error;

const EXIT_CODES: &str = "exit codes: 0 all checks pass, 1 a numerical check failed, 2 parse error, \
3 validation error, 4 io error, 10 family/geometry, 11 reflection, 12 trajectory, 13 cayley, \
14 algebra, 15 grid";

/// Billiards in confocal families of quadrics.
#[derive(Parser, Debug)]
#[command(version, after_help = EXIT_CODES)]
struct Cli {
    /// simulate | caustics | cayley-check | cayley-weak | cayley-search | drc | algebra | star | grid | render
    command: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// tolerance override, repeatable
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    csv: bool,
}

fn run(cli: &Cli) -> Result<i32, Error> {
    if !COMMANDS.contains(&cli.command.as_str()) {
        return Err(Error::Validation(format!("unknown command '{}'", cli.command)));
    }
    let mut cfg = read_config(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    apply_tolerances(&mut cfg, &cli.tol)?;
    let (report, art) = run_command(&cli.command, &cfg, RunOptions { svg: cli.svg, csv: cli.csv })?;
    for p in write_outputs(&cli.out, &cfg, &report, &art)? {
        println!("{}", p.display());
    }
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: {:e} (needs {} {:e})", c.name, c.value, c.relation, c.threshold);
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
