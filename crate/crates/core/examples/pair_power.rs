//! Minimum sum power of NOMA pairs versus the two dedicated-slot powers.

use std::time::Instant;

use noma_harq::harq::power_for_target;
use noma_harq::model::{dbm_to_watts, watts_to_dbm};
use noma_harq::noma::{interference_reduction, joint_power_min};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let noise = dbm_to_watts(-129.1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!(
        "{:>6} {:>6} {:>7} {:>7} {:>9} {:>9} {:>9}",
        "d_a", "d_b", "eps_a", "eps_b", "oma dBm", "noma dBm", "extra %"
    );
    let targets = [0.189, 0.0374, 0.0014];
    let n = 2000;
    let mut elapsed = 0.0;
    for i in 0..n {
        let (da, db) = (rng.random_range(20.0..120.0f64), rng.random_range(20.0..120.0f64));
        let (ea, eb) = (targets[rng.random_range(0..3)], targets[rng.random_range(0..3)]);
        let (ga, gb) = (rng.random_range(0.1..1.0), rng.random_range(0.1..1.0));
        // user a already sent one copy that arrived with SINR 0.5
        let zeta_a = interference_reduction(&[0.5]);
        let t = Instant::now();
        let s = joint_power_min(ga, gb, ea, eb, da * da, db * db, zeta_a, 1.0, noise);
        elapsed += t.elapsed().as_secs_f64();
        if i < 10 && s.feasible {
            let oma = power_for_target(ga, ea, da * da, noise).unwrap() + power_for_target(gb, eb, db * db, noise).unwrap();
            println!(
                "{da:>6.1} {db:>6.1} {ea:>7.4} {eb:>7.4} {:>9.2} {:>9.2} {:>9.1}",
                watts_to_dbm(oma),
                watts_to_dbm(s.sum_power()),
                100.0 * s.extra_cost / oma
            );
        }
    }
    println!("mean solve time: {:.1} us", elapsed / n as f64 * 1e6);
}
