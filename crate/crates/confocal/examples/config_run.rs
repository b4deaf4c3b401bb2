//! Drive a command from a JSON configuration, as the binary does.
//!
//! ```bash
//! cargo run --example config_run -- crates/confocal/configs/drc.json drc
//! ```

use confocal::cli_io::{read_config, run_command, RunOptions};

fn main() -> confocal::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/drc.json").into());
    let cmd = args.next().unwrap_or_else(|| "drc".into());
    let cfg = read_config(std::path::Path::new(&path))?;
    let (report, _) = run_command(&cmd, &cfg, RunOptions::default())?;
    for c in &report.checks {
        println!("{:<28} {:>10.3e} {} {:.1e}  {}", c.name, c.value, c.relation, c.threshold, if c.pass { "ok" } else { "FAIL" });
    }
    println!("exit code {}", report.exit_code());
    Ok(())
}
