//! Sweeps the mean number of arrivals per phase for OMA and both NOMA pairing
//! strategies and writes one CSV table to standard output.
//!
//! cargo run --release --example sweep_arrival_rate -- [phases] [trials]

use noma_harq::model::{AccessMode, PairingStrategy, SystemConfig};
use noma_harq::report::{write_rows, Format, ResultRow};
use noma_harq::sweep::{run_sweep, SweepAxis, SweepOptions};

fn main() -> noma_harq::Result<()> {
    let mut args = std::env::args().skip(1);
    let phases = args.next().and_then(|s| s.parse().ok()).unwrap_or(500);
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let values = [4.0, 8.0, 12.0, 16.0];
    let opts = SweepOptions {
        trials,
        threads: 0,
        cache_dir: None,
    };
    let mut rows = Vec::new();
    for (access, strategy) in [
        (AccessMode::Oma, PairingStrategy::PowerConservative),
        (AccessMode::Noma, PairingStrategy::PowerConservative),
        (AccessMode::Noma, PairingStrategy::ResourceConservative),
    ] {
        let base = SystemConfig {
            access_mode: access,
            pairing_strategy: strategy,
            n_phases: phases,
            ..SystemConfig::default()
        };
        for (v, point) in run_sweep(&base, SweepAxis::MeanArrivals, &values, &opts)? {
            match point {
                Ok(p) => rows.push(ResultRow::from_point(&p)),
                Err(e) => eprintln!("bn={v}: {e}"),
            }
        }
    }
    write_rows(std::io::stdout().lock(), &rows, Format::Csv)
}
