use std::collections::{BTreeSet, HashMap};

use noma_harq::harq::initial_gamma;
use noma_harq::model::{
    AccessMode, HarqMode, PacketId, PacketState, PairingStrategy, SystemConfig, UserEquipment,
};
use noma_harq::scheduler::{classify, noma_pair_count, Grant, PhaseContext, ScheduleDecision, Scheduler, SlotUse};
use noma_harq::targets::TargetCache;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn user(id: usize, pathloss: f64) -> UserEquipment {
    UserEquipment {
        id,
        distance: pathloss.sqrt(),
        pathloss,
    }
}

fn packet(id: PacketId, owner: usize, round: usize, cfg: &SystemConfig) -> PacketState {
    let mut p = PacketState::new(id, owner, 100 - round as u64, cfg);
    p.round = round;
    p
}

fn ctx() -> PhaseContext {
    PhaseContext {
        phase_index: 100,
        gains: None,
    }
}

fn cfg_with(w: usize, access: AccessMode, strategy: PairingStrategy) -> SystemConfig {
    SystemConfig {
        n_slots_per_phase: w,
        access_mode: access,
        pairing_strategy: strategy,
        ..SystemConfig::default()
    }
}

fn singles(d: &ScheduleDecision) -> BTreeSet<PacketId> {
    d.slots
        .iter()
        .filter_map(|s| match *s {
            SlotUse::Single(a) => Some(a),
            SlotUse::Pair(..) => None,
        })
        .collect()
}

fn set(ids: &[PacketId]) -> BTreeSet<PacketId> {
    ids.iter().copied().collect()
}

#[test]
fn classify_examples() {
    let cfg = SystemConfig::default();
    let fresh: Vec<_> = (0..4).map(|i| packet(i, i as usize, 0, &cfg)).collect();
    let (c, n) = classify(&fresh, 2);
    assert!(c.is_empty());
    assert_eq!(n.len(), 4);
    let mixed: Vec<_> = (0..6).map(|i| packet(i, i as usize, i as usize % 3, &cfg)).collect();
    let (c, n) = classify(&mixed, 2);
    assert_eq!(c.iter().map(|p| p.id).collect::<Vec<_>>(), vec![2, 5]);
    assert!(n.iter().all(|p| p.round < 2));
    let (c, n) = classify(&[], 2);
    assert!(c.is_empty() && n.is_empty());
}

#[test]
fn pair_count_examples() {
    use PairingStrategy::*;
    assert_eq!(noma_pair_count(12, 10, PowerConservative), 2);
    assert_eq!(noma_pair_count(12, 10, ResourceConservative), 6);
    assert_eq!(noma_pair_count(25, 10, PowerConservative), 10);
    assert_eq!(noma_pair_count(25, 10, ResourceConservative), 10);
    assert_eq!(noma_pair_count(7, 10, PowerConservative), 0);
    assert_eq!(noma_pair_count(7, 10, ResourceConservative), 3);
}

#[test]
fn light_load_schedules_everything() {
    let cfg = cfg_with(10, AccessMode::Oma, PairingStrategy::PowerConservative);
    let cache = TargetCache::new();
    let s = Scheduler::new(&cfg, &cache, &[]);
    let users: Vec<_> = (0..3).map(|u| user(u, 1e3 * (u + 1) as f64)).collect();
    let pending: Vec<_> = (0..3).map(|i| packet(i, i as usize, 0, &cfg)).collect();
    let d = s.schedule(&pending, &users, &ctx()).unwrap();
    assert_eq!(singles(&d), set(&[0, 1, 2]));
    assert!(d.postponed.is_empty() && d.dropped.is_empty());
    assert!(!d.capacity_drop());
}

#[test]
fn cheapest_critical_packets_survive() {
    let cfg = cfg_with(2, AccessMode::Oma, PairingStrategy::PowerConservative);
    let cache = TargetCache::new();
    let s = Scheduler::new(&cfg, &cache, &[]);
    // identical final-round state, so required power scales with pathloss 1:2:3
    let users = vec![user(0, 2e3), user(1, 3e3), user(2, 1e3)];
    let pending: Vec<_> = (0..3).map(|i| packet(i, i as usize, 2, &cfg)).collect();
    let d = s.schedule(&pending, &users, &ctx()).unwrap();
    assert_eq!(singles(&d), set(&[0, 2]));
    assert_eq!(d.dropped, vec![1]);
    assert!(d.capacity_drop());
    let p = |id| d.grants[&id].power;
    assert!((p(0) / p(2) - 2.0).abs() < 1e-12);
}

#[test]
fn costliest_postponements_are_avoided() {
    let cfg = cfg_with(2, AccessMode::Oma, PairingStrategy::PowerConservative);
    let cache = TargetCache::new();
    let s = Scheduler::new(&cfg, &cache, &[]);
    // one critical packet and three fresh ones with postpone costs 5:1:3
    let users = vec![user(0, 4e3), user(1, 5e3), user(2, 1e3), user(3, 3e3)];
    let mut pending = vec![packet(0, 0, 2, &cfg)];
    pending.extend((1..4).map(|i| packet(i, i as usize, 0, &cfg)));
    let costs: Vec<f64> = pending[1..]
        .iter()
        .map(|p| s.postpone_cost(p, &users, &ctx()).unwrap())
        .collect();
    assert!((costs[0] / costs[1] - 5.0).abs() < 1e-9 && (costs[2] / costs[1] - 3.0).abs() < 1e-9);
    let d = s.schedule(&pending, &users, &ctx()).unwrap();
    assert_eq!(singles(&d), set(&[0, 1]));
    assert_eq!(set(&d.postponed), set(&[2, 3]));
    assert!(d.dropped.is_empty());
}

/// Exhaustive check of the dedicated-slot rule: among all ways of filling the
/// free slots, the scheduler picks the critical packets of least power and
/// then the noncritical packets of greatest postpone cost.
#[test]
fn oma_rule_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let w = rng.random_range(1..5);
        let cfg = cfg_with(w, AccessMode::Oma, PairingStrategy::PowerConservative);
        let cache = TargetCache::new();
        let s = Scheduler::new(&cfg, &cache, &[]);
        let n = rng.random_range(1..8);
        let users: Vec<_> = (0..n).map(|u| user(u, 10f64.powf(rng.random_range(2.5..4.2)))).collect();
        let pending: Vec<_> = (0..n).map(|i| packet(i as u64, i, rng.random_range(0..3), &cfg)).collect();
        let d = s.schedule(&pending, &users, &ctx()).unwrap();
        let oma = |p: &PacketState| cache.oma_power(p, users[p.owner].pathloss, &cfg).unwrap().0;
        let cost = |p: &PacketState| s.postpone_cost(p, &users, &ctx()).unwrap();
        // score of a chosen subset: critical kept first, then postpone cost
        let score = |mask: u32| {
            let chosen: Vec<&PacketState> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &pending[i]).collect();
            let crit: Vec<_> = chosen.iter().filter(|p| p.round == 2).collect();
            let power: f64 = crit.iter().map(|p| oma(p)).sum();
            let value: f64 = chosen.iter().filter(|p| p.round < 2).map(|p| cost(p)).sum();
            (crit.len(), -power, value)
        };
        let k = n.min(w);
        let best = (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .max_by(|&a, &b| score(a).partial_cmp(&score(b)).unwrap())
            .unwrap();
        let got: u32 = singles(&d).iter().map(|&id| 1u32 << id).sum();
        let (sb, sg) = (score(best), score(got));
        assert_eq!(sb.0, sg.0);
        assert!((sb.1 - sg.1).abs() <= 1e-9 * sb.1.abs(), "{sb:?} {sg:?}");
        assert!((sb.2 - sg.2).abs() <= 1e-9 * sb.2.abs().max(1e-30), "{sb:?} {sg:?}");
        assert_eq!(d.slots.len() + d.postponed.len() + d.dropped.len(), n);
    }
}

#[test]
fn postpone_cost_scales_with_pathloss() {
    for harq in [HarqMode::ChaseCombining, HarqMode::IncrementalRedundancy] {
        let cfg = SystemConfig {
            harq_mode: harq,
            ..SystemConfig::default()
        };
        let cache = TargetCache::new();
        let s = Scheduler::new(&cfg, &cache, &[]);
        let users = vec![user(0, 1e3), user(1, 7e3)];
        for round in 0..2 {
            let near = packet(0, 0, round, &cfg);
            let far = packet(1, 1, round, &cfg);
            let (cn, cf) = (s.postpone_cost(&near, &users, &ctx()).unwrap(), s.postpone_cost(&far, &users, &ctx()).unwrap());
            assert!(cf > cn && cn > 0.0);
            assert!((cf / cn - 7.0).abs() < 1e-9, "{harq:?} round {round}");
        }
        let mut done = packet(0, 0, 1, &cfg);
        done.residual_snr = 0.0;
        assert_eq!(s.postpone_cost(&done, &users, &ctx()).unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn postpone_cost_is_never_negative(
        ir in any::<bool>(),
        round in 0usize..2,
        gamma_frac in 0.0..1.0f64,
        budget_exp in -5.0..-0.5f64,
        pl_exp in 2.5..4.2f64,
    ) {
        let cfg = SystemConfig {
            harq_mode: if ir { HarqMode::IncrementalRedundancy } else { HarqMode::ChaseCombining },
            ..SystemConfig::default()
        };
        let cache = TargetCache::new();
        let s = Scheduler::new(&cfg, &cache, &[]);
        let users = vec![user(0, 10f64.powf(pl_exp))];
        let mut p = packet(0, 0, round, &cfg);
        if round > 0 {
            p.residual_snr = gamma_frac * initial_gamma(cfg.rate);
            p.budget = 10f64.powf(budget_exp).max(cfg.target_bler);
        }
        let c = s.postpone_cost(&p, &users, &ctx()).unwrap();
        prop_assert!(c >= -1e-12 * c.abs().max(1e-30), "cost {c}");
    }
}

fn noma_setup(w: usize, t: usize, strategy: PairingStrategy, seed: u64) -> (SystemConfig, Vec<UserEquipment>, Vec<PacketState>) {
    let cfg = cfg_with(w, AccessMode::Noma, strategy);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users: Vec<_> = (0..t).map(|u| user(u, 10f64.powf(rng.random_range(2.6..4.1)))).collect();
    let pending = (0..t).map(|i| packet(i as u64, i, 0, &cfg)).collect();
    (cfg, users, pending)
}

fn check_capacity(d: &ScheduleDecision, pending: &[PacketState], w: usize) {
    assert!(d.slots.len() <= w);
    let ids: Vec<PacketId> = d.scheduled().chain(d.postponed.iter().copied()).chain(d.dropped.iter().copied()).collect();
    assert_eq!(ids.len(), pending.len());
    assert_eq!(set(&ids).len(), pending.len());
    for s in &d.slots {
        if let SlotUse::Pair(a, b) = *s {
            assert_ne!(pending[a as usize].owner, pending[b as usize].owner);
        }
    }
}

#[test]
fn power_conservative_pairs_only_the_overflow() {
    let w = 6;
    let (cfg, users, pending) = noma_setup(w, w + 3, PairingStrategy::PowerConservative, 3);
    let cache = TargetCache::new();
    let d = Scheduler::new(&cfg, &cache, &[]).schedule(&pending, &users, &ctx()).unwrap();
    check_capacity(&d, &pending, w);
    assert_eq!(d.n_pairs(), 3);
    assert_eq!(d.slots.len(), w);
    assert_eq!(d.slots.len() - d.n_pairs(), w - 3);
    assert!(d.postponed.is_empty() && d.dropped.is_empty());
}

#[test]
fn full_load_pairs_every_slot() {
    let w = 5;
    for strategy in [PairingStrategy::PowerConservative, PairingStrategy::ResourceConservative] {
        let (cfg, users, pending) = noma_setup(w, 2 * w, strategy, 4);
        let cache = TargetCache::new();
        let d = Scheduler::new(&cfg, &cache, &[]).schedule(&pending, &users, &ctx()).unwrap();
        check_capacity(&d, &pending, w);
        assert_eq!(d.n_pairs(), w, "{strategy:?}");
        assert_eq!(d.slots.len(), w);
    }
}

#[test]
fn light_load_noma_equals_oma() {
    let w = 8;
    let (cfg, users, pending) = noma_setup(w, w - 2, PairingStrategy::PowerConservative, 5);
    let cache = TargetCache::new();
    let d = Scheduler::new(&cfg, &cache, &[]).schedule(&pending, &users, &ctx()).unwrap();
    let oma_cfg = SystemConfig {
        access_mode: AccessMode::Oma,
        ..cfg.clone()
    };
    let e = Scheduler::new(&oma_cfg, &cache, &[]).schedule(&pending, &users, &ctx()).unwrap();
    assert_eq!(d, e);
    assert_eq!(d.n_pairs(), 0);
}

#[test]
fn overload_drops_at_twice_the_slots() {
    let w = 2;
    let cfg = cfg_with(w, AccessMode::Noma, PairingStrategy::PowerConservative);
    let users: Vec<_> = (0..6).map(|u| user(u, 1e3 * (u + 1) as f64)).collect();
    let pending: Vec<_> = (0..6).map(|i| packet(i, i as usize, 2, &cfg)).collect();
    let cache = TargetCache::new();
    let d = Scheduler::new(&cfg, &cache, &[]).schedule(&pending, &users, &ctx()).unwrap();
    check_capacity(&d, &pending, w);
    assert_eq!(set(&d.dropped), set(&[4, 5]));
    assert!(d.capacity_drop());
}

#[test]
fn same_owner_and_repeat_partners_are_not_paired() {
    let cfg = cfg_with(1, AccessMode::Noma, PairingStrategy::ResourceConservative);
    let cache = TargetCache::new();
    let s = Scheduler::new(&cfg, &cache, &[]);
    let users = vec![user(0, 2e3), user(1, 5e3)];
    let g = Grant { power: 1e-9, target: 0.2 };
    let a = packet(0, 0, 0, &cfg);
    let b = packet(1, 0, 1, &cfg);
    assert!(s.pair_solution((&a, g), (&b, g), &users, &ctx()).is_none());
    let mut c = packet(2, 1, 0, &cfg);
    assert!(s.pair_solution((&a, g), (&c, g), &users, &ctx()).is_some());
    c.past_partners.push(0);
    assert!(s.pair_solution((&a, g), (&c, g), &users, &ctx()).is_none());
    let ir = SystemConfig {
        harq_mode: HarqMode::IncrementalRedundancy,
        ..cfg.clone()
    };
    let s = Scheduler::new(&ir, &cache, &[]);
    assert!(s.pair_solution((&a, g), (&c, g), &users, &ctx()).is_some());
}

/// Minimum total cost over all matchings with exactly `q` pairs.
fn brute_force(n: usize, costs: &HashMap<(usize, usize), f64>, q: usize) -> Option<f64> {
    fn rec(free: u32, n: usize, costs: &HashMap<(usize, usize), f64>, q: usize, slack: usize) -> Option<f64> {
        if q == 0 {
            return Some(0.0);
        }
        let i = (0..n).find(|&i| free >> i & 1 == 1)?;
        let rest = free & !(1 << i);
        let mut best = None::<f64>;
        if slack > 0 {
            best = rec(rest, n, costs, q, slack - 1);
        }
        for j in i + 1..n {
            if rest >> j & 1 == 1 {
                if let Some(&c) = costs.get(&(i, j)) {
                    if let Some(r) = rec(rest & !(1 << j), n, costs, q - 1, slack) {
                        best = Some(best.map_or(c + r, |b| b.min(c + r)));
                    }
                }
            }
        }
        best
    }
    if 2 * q > n {
        return None;
    }
    rec((1u32 << n) - 1, n, costs, q, n - 2 * q)
}

/// The pairs the scheduler forms are a minimum-cost set of exactly `q` pairs
/// under its own pair costs.
#[test]
fn scheduled_pairs_are_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..40 {
        let w = rng.random_range(2..5);
        let t = rng.random_range(w + 1..=(2 * w).min(8));
        let strategy = if trial % 2 == 0 {
            PairingStrategy::PowerConservative
        } else {
            PairingStrategy::ResourceConservative
        };
        let (cfg, users, mut pending) = noma_setup(w, t, strategy, 100 + trial);
        // a few shared owners and past partners to thin the graph
        for p in pending.iter_mut() {
            if rng.random_bool(0.2) {
                p.owner = rng.random_range(0..t);
            }
        }
        let cache = TargetCache::new();
        let s = Scheduler::new(&cfg, &cache, &[]);
        let d = s.schedule(&pending, &users, &ctx()).unwrap();
        let oma_cfg = SystemConfig {
            access_mode: AccessMode::Oma,
            n_slots_per_phase: t,
            ..cfg.clone()
        };
        let grants = Scheduler::new(&oma_cfg, &cache, &[]).schedule(&pending, &users, &ctx()).unwrap().grants;
        let mut costs = HashMap::new();
        for i in 0..t {
            for j in i + 1..t {
                let (a, b) = (&pending[i], &pending[j]);
                if let Some(sol) = s.pair_solution((a, grants[&a.id]), (b, grants[&b.id]), &users, &ctx()) {
                    costs.insert((i, j), sol.extra_cost);
                }
            }
        }
        let q = noma_pair_count(t, w, strategy);
        let achievable = (0..=q).rev().find(|&k| brute_force(t, &costs, k).is_some()).unwrap();
        assert_eq!(d.n_pairs(), achievable);
        assert_eq!(d.pair_shortfall, q - achievable);
        let got: f64 = d
            .slots
            .iter()
            .filter_map(|s| match *s {
                SlotUse::Pair(a, b) => Some(costs[&(a.min(b) as usize, a.max(b) as usize)]),
                SlotUse::Single(_) => None,
            })
            .sum();
        let best = brute_force(t, &costs, achievable).unwrap();
        let scale: f64 = costs.values().map(|c| c.abs()).sum::<f64>().max(1e-30);
        assert!((got - best).abs() <= 1e-9 * scale, "trial {trial}: {got} vs {best}");
        check_capacity(&d, &pending, w);
    }
}
