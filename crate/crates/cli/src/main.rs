use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mimo_ncs_cli::{execute_path, Command, Format, Overrides};

/// Stabilization of linear plants over banks of parallel SISO subchannels.
#[derive(Parser)]
#[command(name = "mimo-ncs", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Problem file (TOML).
    file: PathBuf,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
    /// Trajectory path for `simulate`; document path for other commands.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed scaling instead of the halving search.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let ov = Overrides {
        seed: args.seed,
        epsilon: args.epsilon,
        t_end: args.t_end,
        dt: args.dt,
        out: args.out,
    };
    let r = execute_path(args.command, &args.file, args.format, &ov);
    let _ = std::io::stdout().write_all(r.stdout.as_bytes());
    let _ = std::io::stderr().write_all(r.stderr.as_bytes());
    ExitCode::from(r.exit_code as u8)
}
