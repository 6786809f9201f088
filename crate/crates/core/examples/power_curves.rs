//! Optimal instantaneous-CSI power versus current channel gain, for each
//! number of remaining rounds, normalized to unit pathloss and noise.

use std::time::Instant;

use noma_harq::fbl::{build_power_curve, FblParams};

fn main() -> noma_harq::Result<()> {
    let prm = FblParams {
        rate: 1.0,
        blocklength: 50,
        eps_tar: 1e-5,
        eps_drop: 1e-6,
    };
    for remaining in [0, 1, 2] {
        let t = Instant::now();
        let curve = build_power_curve(remaining, &prm)?;
        println!(
            "remaining rounds {remaining}: postpone below gain {:.4}, built in {:.2} s",
            curve.postpone_below,
            t.elapsed().as_secs_f64()
        );
        for g in [0.01, 0.05, 0.1, 0.3, 1.0, 3.0, 10.0] {
            println!("  gain {g:>6.2}  power {:>12.4}  expected {:>10.4}", curve.normalized_power(g), curve.normalized_value(g));
        }
    }
    Ok(())
}
