//! Optimal first-round IR targets for a two-retransmission schedule, by rate.

use std::time::Instant;

use noma_harq::targets::ir_two_stage;
use noma_harq::harq::initial_gamma;

fn main() {
    let eps_tar = 1e-5;
    println!("{:>6} {:>10} {:>14} {:>10}", "rate", "eps0", "power/(d^a s2)", "ms");
    for rate in [0.5, 1.0, 1.5, 2.0, 2.5] {
        let t = Instant::now();
        let r = ir_two_stage(initial_gamma(rate), eps_tar);
        println!(
            "{rate:>6.1} {:>10.4} {:>14.4} {:>10.1}",
            r.eps,
            r.value,
            t.elapsed().as_secs_f64() * 1e3
        );
    }
}
