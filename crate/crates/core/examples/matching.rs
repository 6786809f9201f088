//! Minimum-cost selection of exactly `q` disjoint pairs, the step that turns
//! per-pair NOMA costs into a pairing decision.

use std::collections::HashMap;

use noma_harq::matching::min_cost_pairs;

fn main() {
    // six packets; missing entries are pairs that may not share a slot
    let mut costs = HashMap::new();
    for (i, j, c) in [
        (0, 1, 4.0),
        (0, 2, 1.0),
        (1, 2, 2.5),
        (1, 3, 0.5),
        (2, 4, 3.0),
        (3, 4, 2.0),
        (3, 5, 6.0),
        (4, 5, 1.5),
    ] {
        costs.insert((i, j), c);
    }
    for q in 0..=3 {
        let sel = min_cost_pairs(6, &costs, q);
        println!(
            "q={q}: pairs {:?}, total cost {}, shortfall {}",
            sel.pairs, sel.total_cost, sel.shortfall
        );
    }
    // a star cannot hold two disjoint pairs
    let star: HashMap<_, _> = (1..5).map(|j| ((0, j), j as f64)).collect();
    let sel = min_cost_pairs(5, &star, 2);
    println!("star, q=2: pairs {:?}, shortfall {}", sel.pairs, sel.shortfall);
}
