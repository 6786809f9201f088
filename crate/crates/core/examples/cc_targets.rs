//! Optimal chase-combining error targets for a range of retransmission
//! limits, and the expected power they imply relative to a single shot.

use noma_harq::targets::{cc_expected_power_factor, cc_optimal_targets};

fn main() -> noma_harq::Result<()> {
    for eps_tar in [1e-3f64, 1e-5] {
        println!("target {eps_tar:e}");
        let one_shot = -1.0 / (-eps_tar).ln_1p();
        for l in 0..=3 {
            let s = cc_optimal_targets(l, eps_tar)?;
            let factor = cc_expected_power_factor(&s.eps);
            println!(
                "  L={l}  eps={:<40} power {:>9.3} x gamma d^a s2  ({:+.1} dB vs one shot)",
                format!("{:.4?}", s.eps),
                factor,
                10.0 * (factor / one_shot).log10()
            );
        }
    }
    Ok(())
}
