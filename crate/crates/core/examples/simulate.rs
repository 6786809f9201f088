//! Runs one short simulation per access/HARQ/CSI combination and prints the
//! headline metrics.
//!
//! cargo run --example simulate -- [phases]

use std::time::Instant;

use noma_harq::metrics::Summary;
use noma_harq::model::{AccessMode, CsiMode, HarqMode, SystemConfig};
use noma_harq::sim::{run, Tables};

fn main() -> noma_harq::Result<()> {
    let phases: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let combos = [
        (AccessMode::Oma, HarqMode::ChaseCombining, CsiMode::Statistical),
        (AccessMode::Noma, HarqMode::ChaseCombining, CsiMode::Statistical),
        (AccessMode::Oma, HarqMode::IncrementalRedundancy, CsiMode::Statistical),
        (AccessMode::Noma, HarqMode::IncrementalRedundancy, CsiMode::Statistical),
        (AccessMode::Oma, HarqMode::IncrementalRedundancy, CsiMode::Instantaneous),
        (AccessMode::Noma, HarqMode::IncrementalRedundancy, CsiMode::Instantaneous),
    ];
    println!("access  harq  csi   outage      power[dBm]  util    delivered/arrivals  time");
    for (access, harq, csi) in combos {
        let mut cfg = SystemConfig {
            access_mode: access,
            harq_mode: harq,
            csi_mode: csi,
            n_phases: phases,
            ..SystemConfig::default()
        };
        cfg.set_mean_arrivals(8.0);
        let t0 = Instant::now();
        let tables = Tables::prepare(&cfg, None)?;
        let s = Summary::from_ledger(&run(&cfg, &tables, 1)?, cfg.rate);
        println!(
            "{:<7} {:<5} {:<5} {:<11.3e} {:<11.2} {:<7.3} {:>8}/{:<9} {:.2?}",
            format!("{access:?}"),
            format!("{harq:?}").chars().filter(|c| c.is_uppercase()).collect::<String>(),
            format!("{csi:?}").chars().take(4).collect::<String>(),
            s.outage.unwrap_or(f64::NAN),
            s.power_dbm.unwrap_or(f64::NAN),
            s.util.unwrap_or(f64::NAN),
            s.delivered,
            s.arrivals,
            t0.elapsed()
        );
    }
    Ok(())
}
