use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use noma_harq::config::{emit_config, parse_config};
use noma_harq::report::{write_rows, Format, ResultRow};
use noma_harq::sweep::{run_sweep, SweepAxis, SweepOptions};

/// Monte Carlo sweeps of uplink HARQ scheduling over OMA and NOMA slots.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Swept parameter: `bn` (mean arrivals per phase) or `rate`.
    #[arg(long, default_value = "bn")]
    axis: SweepAxis,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required_unless_present = "print_config")]
    values: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Directory holding precomputed target tables and power curves.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(args: &Args) -> noma_harq::Result<bool> {
    let mut text = match &args.config {
        Some(p) => std::fs::read_to_string(p)?,
        None => String::new(),
    };
    for o in &args.overrides {
        text.push('\n');
        text.push_str(o);
    }
    let cfg = parse_config(&text)?;
    if args.print_config {
        print!("{}", emit_config(&cfg));
        return Ok(true);
    }
    let opts = SweepOptions {
        trials: args.trials,
        threads: args.threads,
        cache_dir: args.cache_dir.as_deref(),
    };
    let points = run_sweep(&cfg, args.axis, &args.values, &opts)?;
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (v, p) in &points {
        match p {
            Ok(p) => rows.push(ResultRow::from_point(p)),
            Err(e) => failed.push(format!("{}={v}: {e}", args.axis.name())),
        }
    }
    let out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    write_rows(out, &rows, args.format)?;
    for f in &failed {
        eprintln!("failed point {f}");
    }
    if !failed.is_empty() {
        eprintln!("{} of {} points failed", failed.len(), points.len());
    }
    Ok(failed.is_empty())
}
