//! Phase-by-phase Monte Carlo loop: arrivals, scheduling, channel
//! realization, decoding with SIC, HARQ updates and metric recording.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::fbl::{load_or_build_curve, FblParams, PowerCurve};
use crate::harq::{cc_residual_update, initial_gamma, ir_residual_update, mi_stats_from_powers, MiStats};
use crate::metrics::{EnergySample, MetricsLedger};
use crate::model::{
    draw_channel_gain, draw_distance, CopyRecord, CsiMode, HarqMode, PacketId, PacketState, PacketStatus, Purpose,
    RngStream, SystemConfig, UserEquipment,
};
use crate::noma::interference_reduction;
use crate::scheduler::{Grant, PhaseContext, ScheduleDecision, Scheduler, SlotUse};
use crate::targets::{ir_two_stage, load_target_table, save_target_table, IrInitial, TargetCache, TargetRecord};

/// Precomputed, read-only tables shared by every trial of one configuration.
#[derive(Debug)]
pub struct Tables {
    pub targets: TargetCache,
    /// Power curves by remaining rounds; empty under statistical CSI.
    pub curves: Vec<PowerCurve>,
}

const TARGET_TABLE: &str = "targets.txt";

impl Tables {
    /// Builds (or loads from `cache_dir`) everything `cfg` needs.
    pub fn prepare(cfg: &SystemConfig, cache_dir: Option<&Path>) -> Result<Self> {
        let targets = TargetCache::new();
        let mut curves = Vec::new();
        match cfg.csi_mode {
            CsiMode::Instantaneous => {
                let prm = FblParams {
                    rate: cfg.rate,
                    blocklength: cfg.blocklength,
                    eps_tar: cfg.target_bler,
                    eps_drop: cfg.drop_threshold,
                };
                for r in 0..=cfg.max_retx {
                    curves.push(load_or_build_curve(cache_dir, r, &prm)?);
                }
            }
            CsiMode::Statistical => prepare_targets(cfg, &targets, cache_dir)?,
        }
        Ok(Self { targets, curves })
    }
}

/// Seeds the fresh-packet targets, reading and extending the on-disk table.
fn prepare_targets(cfg: &SystemConfig, cache: &TargetCache, dir: Option<&Path>) -> Result<()> {
    let mut records = match dir.map(|d| d.join(TARGET_TABLE)) {
        Some(p) if p.exists() => load_target_table(&p)?,
        _ => Vec::new(),
    };
    let found = records.iter().find(|r| {
        r.mode == cfg.harq_mode && r.max_retx == cfg.max_retx && r.rate == cfg.rate && r.eps_tar == cfg.target_bler
    });
    let record = match found {
        Some(r) => r.clone(),
        None => {
            let eps = match cfg.harq_mode {
                HarqMode::ChaseCombining => cache.cc_targets(cfg.max_retx, cfg.target_bler)?.eps,
                HarqMode::IncrementalRedundancy if cfg.max_retx == 2 => {
                    let init = ir_two_stage(initial_gamma(cfg.rate), cfg.target_bler);
                    vec![init.eps, init.value]
                }
                HarqMode::IncrementalRedundancy => return Ok(()),
            };
            let r = TargetRecord {
                mode: cfg.harq_mode,
                max_retx: cfg.max_retx,
                rate: cfg.rate,
                eps_tar: cfg.target_bler,
                eps,
            };
            if let Some(d) = dir {
                records.push(r.clone());
                std::fs::create_dir_all(d)?;
                save_target_table(&d.join(TARGET_TABLE), &records)?;
            }
            r
        }
    };
    match record.mode {
        HarqMode::ChaseCombining => cache.insert_cc(record.max_retx, record.eps_tar, record.eps),
        HarqMode::IncrementalRedundancy => {
            if let [eps, value] = record.eps[..] {
                cache.insert_ir_initial(record.rate, record.eps_tar, IrInitial { eps, value });
            }
        }
    }
    Ok(())
}

/// User positions for one trial.
pub fn draw_users(cfg: &SystemConfig, trial: u64) -> Vec<UserEquipment> {
    let stream_trial = if cfg.redraw_distances { trial } else { 0 };
    (0..cfg.n_users)
        .map(|u| {
            let mut rng = RngStream::new(cfg.seed, stream_trial, 0, Purpose::Distance, u as u64).rng();
            UserEquipment::new(u, draw_distance(&mut rng, cfg.dist_min, cfg.dist_max), cfg.pathloss_exp)
        })
        .collect()
}

/// New round-0 packets of one phase, one Bernoulli draw per user.
pub fn arrivals(cfg: &SystemConfig, trial: u64, phase: u64, next_id: &mut PacketId) -> Vec<PacketState> {
    let mut out = Vec::new();
    for u in 0..cfg.n_users {
        let mut rng = RngStream::new(cfg.seed, trial, phase, Purpose::Arrival, u as u64).rng();
        if rng.random_bool(cfg.activation_prob) {
            out.push(PacketState::new(*next_id, u, phase, cfg));
            *next_id += 1;
        }
    }
    out
}

/// Result of one transmitted copy.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: PacketId,
    pub success: bool,
    pub copy: CopyRecord,
    /// Predicted conditional failure probability of this round.
    pub target: f64,
    /// Mutual-information statistics credited this round (instantaneous CSI).
    pub mi: Option<(MiStats, f64)>,
}

/// Decodes every slot of `decision`. `pending` must contain every scheduled
/// packet.
pub fn realize_and_decode(
    decision: &ScheduleDecision,
    pending: &[PacketState],
    users: &[UserEquipment],
    cfg: &SystemConfig,
    ctx: &PhaseContext,
    trial: u64,
) -> Vec<Outcome> {
    let by_id: BTreeMap<PacketId, &PacketState> = pending.iter().map(|p| (p.id, p)).collect();
    let mut out = Vec::new();
    for slot in &decision.slots {
        match *slot {
            SlotUse::Single(a) => {
                let p = by_id[&a];
                let g = decision.grants[&a];
                out.push(decode_single(p, g, users, cfg, ctx, trial));
            }
            SlotUse::Pair(a, b) => {
                let (pa, pb) = (by_id[&a], by_id[&b]);
                let (ga, gb) = (decision.grants[&a], decision.grants[&b]);
                out.extend(decode_pair((pa, ga), (pb, gb), users, cfg, ctx, trial));
            }
        }
    }
    out
}

fn gain_for(p: &PacketState, cfg: &SystemConfig, ctx: &PhaseContext, trial: u64) -> f64 {
    match &ctx.gains {
        Some(g) => g[p.owner],
        None => {
            let mut rng = RngStream::new(cfg.seed, trial, ctx.phase_index, Purpose::ChannelGain, p.id).rng();
            draw_channel_gain(&mut rng)
        }
    }
}

fn mi_draw(p: &PacketState, cfg: &SystemConfig, ctx: &PhaseContext, trial: u64, st: MiStats) -> f64 {
    let mut rng = RngStream::new(cfg.seed, trial, ctx.phase_index, Purpose::MiNoise, p.id).rng();
    if st.var > 0.0 {
        Normal::new(st.mean, st.var.sqrt()).expect("finite moments").sample(&mut rng)
    } else {
        st.mean
    }
}

fn statistical_success(gamma: f64, sinr: f64) -> bool {
    gamma <= 0.0 || sinr >= gamma
}

fn copy(ctx: &PhaseContext, power: f64, gain: f64, sinr: f64, partner: Option<PacketId>, cancelled: bool) -> CopyRecord {
    CopyRecord {
        phase_index: ctx.phase_index,
        transmit_power: power,
        channel_gain: gain,
        achieved_sinr: sinr,
        partner_packet: partner,
        interference_cancelled: cancelled,
    }
}

fn decode_single(
    p: &PacketState,
    g: Grant,
    users: &[UserEquipment],
    cfg: &SystemConfig,
    ctx: &PhaseContext,
    trial: u64,
) -> Outcome {
    let pl = users[p.owner].pathloss;
    let h = gain_for(p, cfg, ctx, trial);
    let q = g.power * h / pl;
    let sinr = q / cfg.noise_power;
    match cfg.csi_mode {
        CsiMode::Statistical => Outcome {
            id: p.id,
            success: statistical_success(p.residual_snr, sinr),
            copy: copy(ctx, g.power, h, sinr, None, false),
            target: g.target,
            mi: None,
        },
        CsiMode::Instantaneous => {
            let st = mi_stats_from_powers(q, 0.0, cfg.noise_power, cfg.blocklength);
            let x = mi_draw(p, cfg, ctx, trial, st);
            Outcome {
                id: p.id,
                success: g.power > 0.0 && p.mi_realized + x >= cfg.rate * LN_2,
                copy: copy(ctx, g.power, h, sinr, None, false),
                target: g.target,
                mi: Some((st, x)),
            }
        }
    }
}

fn decode_pair(
    (a, ga): (&PacketState, Grant),
    (b, gb): (&PacketState, Grant),
    users: &[UserEquipment],
    cfg: &SystemConfig,
    ctx: &PhaseContext,
    trial: u64,
) -> [Outcome; 2] {
    let (ha, hb) = (gain_for(a, cfg, ctx, trial), gain_for(b, cfg, ctx, trial));
    let qa = ga.power * ha / users[a.owner].pathloss;
    let qb = gb.power * hb / users[b.owner].pathloss;
    let n0 = cfg.noise_power;
    let outcome = |p: &PacketState, g: Grant, h: f64, sinr: f64, partner: PacketId, cancelled: bool, success: bool| Outcome {
        id: p.id,
        success,
        copy: copy(ctx, g.power, h, sinr, Some(partner), cancelled),
        target: g.target,
        mi: None,
    };
    match cfg.csi_mode {
        CsiMode::Statistical => {
            let zeta = |p: &PacketState| match cfg.harq_mode {
                HarqMode::ChaseCombining => interference_reduction(&p.prior_sinrs()),
                HarqMode::IncrementalRedundancy => 1.0,
            };
            let sinr_a = qa / (zeta(b) * qb + n0);
            let sinr_b = qb / (zeta(a) * qa + n0);
            let da = statistical_success(a.residual_snr, sinr_a);
            let db = statistical_success(b.residual_snr, sinr_b);
            // at most two SIC passes: a decodable user is cancelled first
            let (ok_a, s_a, c_a, ok_b, s_b, c_b) = if da && !db {
                let clean = qb / n0;
                (true, sinr_a, false, statistical_success(b.residual_snr, clean), clean, true)
            } else if db && !da {
                let clean = qa / n0;
                (statistical_success(a.residual_snr, clean), clean, true, true, sinr_b, false)
            } else {
                (da, sinr_a, false, db, sinr_b, false)
            };
            [
                outcome(a, ga, ha, s_a, b.id, c_a, ok_a),
                outcome(b, gb, hb, s_b, a.id, c_b, ok_b),
            ]
        }
        CsiMode::Instantaneous => {
            // the stronger received signal is decoded first
            let a_first = qa >= qb;
            let ((f, gf, hf, q_f), (s, gs, hs, q_s)) = if a_first {
                ((a, ga, ha, qa), (b, gb, hb, qb))
            } else {
                ((b, gb, hb, qb), (a, ga, ha, qa))
            };
            let target_mi = cfg.rate * LN_2;
            let st_f = mi_stats_from_powers(q_f, q_s, n0, cfg.blocklength);
            let x_f = mi_draw(f, cfg, ctx, trial, st_f);
            let ok_f = f.mi_realized + x_f >= target_mi;
            let q_int = if ok_f { 0.0 } else { q_f };
            let st_s = mi_stats_from_powers(q_s, q_int, n0, cfg.blocklength);
            let x_s = mi_draw(s, cfg, ctx, trial, st_s);
            let ok_s = s.mi_realized + x_s >= target_mi;
            let mut of = outcome(f, gf, hf, q_f / (q_s + n0), s.id, false, ok_f);
            of.mi = Some((st_f, x_f));
            let mut os = outcome(s, gs, hs, q_s / (q_int + n0), f.id, ok_f, ok_s);
            os.mi = Some((st_s, x_s));
            if a_first {
                [of, os]
            } else {
                [os, of]
            }
        }
    }
}

/// Applies outcomes and scheduler decisions to the buffer. Returns the
/// packets that left it (delivered or dropped).
pub fn advance(
    pending: &mut Vec<PacketState>,
    decision: &ScheduleDecision,
    outcomes: &[Outcome],
    cfg: &SystemConfig,
) -> Vec<PacketState> {
    let by_id: BTreeMap<PacketId, &Outcome> = outcomes.iter().map(|o| (o.id, o)).collect();
    let dropped: Vec<PacketId> = decision.dropped.iter().chain(&decision.faded).copied().collect();
    let mut finished = Vec::new();
    let mut keep = Vec::with_capacity(pending.len());
    for mut p in pending.drain(..) {
        if dropped.contains(&p.id) {
            p.status = PacketStatus::Dropped;
            finished.push(p);
            continue;
        }
        if let Some(o) = by_id.get(&p.id) {
            apply_outcome(&mut p, o, cfg);
            if o.success {
                p.status = PacketStatus::Delivered;
                finished.push(p);
                continue;
            }
        }
        // failed or postponed
        if p.round >= cfg.max_retx {
            p.status = PacketStatus::Dropped;
            finished.push(p);
        } else {
            p.round += 1;
            keep.push(p);
        }
    }
    *pending = keep;
    finished
}

fn apply_outcome(p: &mut PacketState, o: &Outcome, cfg: &SystemConfig) {
    if let Some(partner) = o.copy.partner_packet {
        p.past_partners.push(partner);
    }
    let sinr = o.copy.achieved_sinr;
    if o.copy.transmit_power > 0.0 {
        match cfg.csi_mode {
            CsiMode::Statistical => {
                p.residual_snr = if o.success {
                    0.0
                } else {
                    match cfg.harq_mode {
                        HarqMode::ChaseCombining => cc_residual_update(p.residual_snr, sinr),
                        HarqMode::IncrementalRedundancy => ir_residual_update(p.residual_snr, sinr),
                    }
                };
                if !o.success {
                    p.budget /= o.target.max(f64::MIN_POSITIVE);
                }
            }
            CsiMode::Instantaneous => {
                if let Some((st, x)) = o.mi {
                    p.mi_mean += st.mean;
                    p.mi_var += st.var;
                    p.mi_realized += x;
                }
            }
        }
    }
    p.copies.push(o.copy.clone());
}

/// Everything that happened in one phase.
#[derive(Debug, Clone)]
pub struct PhaseRecord {
    pub phase: u64,
    pub measuring: bool,
    pub arrivals: usize,
    pub decision: ScheduleDecision,
    pub outcomes: Vec<Outcome>,
    /// Packets that left the buffer this phase.
    pub finished: Vec<PacketState>,
}

/// One trial advanced phase by phase.
pub struct Trial<'a> {
    cfg: &'a SystemConfig,
    scheduler: Scheduler<'a>,
    trial: u64,
    users: Vec<UserEquipment>,
    zones: Vec<u8>,
    pending: Vec<PacketState>,
    next_id: PacketId,
    phase: u64,
    ledger: MetricsLedger,
}

impl<'a> Trial<'a> {
    pub fn new(cfg: &'a SystemConfig, tables: &'a Tables, trial: u64) -> Self {
        let users = draw_users(cfg, trial);
        let zones = users.iter().map(|u| cfg.zone_of(u.distance) as u8).collect();
        Self {
            cfg,
            scheduler: Scheduler::new(cfg, &tables.targets, &tables.curves),
            trial,
            users,
            zones,
            pending: Vec::new(),
            next_id: 0,
            phase: 0,
            ledger: MetricsLedger::new(cfg.max_retx),
        }
    }

    pub fn users(&self) -> &[UserEquipment] {
        &self.users
    }

    pub fn pending(&self) -> &[PacketState] {
        &self.pending
    }

    pub fn ledger(&self) -> &MetricsLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> MetricsLedger {
        self.ledger
    }

    /// Total number of phases, warmup included.
    pub fn total_phases(&self) -> u64 {
        (self.cfg.warmup_phases + self.cfg.n_phases) as u64
    }

    pub fn step(&mut self) -> Result<PhaseRecord> {
        let (cfg, trial, phase) = (self.cfg, self.trial, self.phase);
        let warmup = cfg.warmup_phases as u64;
        let measuring = phase >= warmup;
        let new = arrivals(cfg, trial, phase, &mut self.next_id);
        let n_new = new.len();
        self.pending.extend(new);
        let ctx = PhaseContext {
            phase_index: phase,
            gains: (cfg.csi_mode == CsiMode::Instantaneous).then(|| {
                (0..cfg.n_users)
                    .map(|u| {
                        let mut rng = RngStream::new(cfg.seed, trial, phase, Purpose::ChannelGain, u as u64).rng();
                        draw_channel_gain(&mut rng)
                    })
                    .collect()
            }),
        };
        let decision = self.scheduler.schedule(&self.pending, &self.users, &ctx)?;
        let outcomes = realize_and_decode(&decision, &self.pending, &self.users, cfg, &ctx, trial);
        let rounds: BTreeMap<PacketId, usize> = self.pending.iter().map(|p| (p.id, p.round)).collect();
        let finished = advance(&mut self.pending, &decision, &outcomes, cfg);
        self.phase += 1;
        if measuring {
            self.record(n_new, &decision, &outcomes, &rounds, &finished);
        }
        Ok(PhaseRecord {
            phase,
            measuring,
            arrivals: n_new,
            decision,
            outcomes,
            finished,
        })
    }

    fn record(
        &mut self,
        n_new: usize,
        decision: &ScheduleDecision,
        outcomes: &[Outcome],
        rounds: &BTreeMap<PacketId, usize>,
        finished: &[PacketState],
    ) {
        let warmup = self.cfg.warmup_phases as u64;
        let l = &mut self.ledger;
        l.arrivals += n_new as u64;
        l.phases_observed += 1;
        l.outage_phases += u64::from(decision.capacity_drop());
        l.slots_used += decision.slots.len() as u64;
        l.pairs_used += decision.n_pairs() as u64;
        l.pair_shortfall += decision.pair_shortfall as u64;
        l.drops += decision.dropped.len() as u64;
        l.fade_drops += decision.faded.len() as u64;
        let mut delivered = 0u32;
        for o in outcomes {
            let r = rounds[&o.id];
            l.total_power += o.copy.transmit_power;
            l.round_tx[r] += 1;
            l.round_fail[r] += u64::from(!o.success);
            l.round_target[r] += o.target;
            delivered += u32::from(o.success);
        }
        l.packets_delivered += u64::from(delivered);
        l.phase_counts.push((delivered, decision.slots.len() as u32));
        for p in finished {
            let ok = p.status == PacketStatus::Delivered;
            let by_scheduler = decision.dropped.contains(&p.id) || decision.faded.contains(&p.id);
            if !ok && !by_scheduler {
                l.failures += 1;
            }
            if p.arrival_phase >= warmup {
                l.samples.push(EnergySample {
                    energy: p.energy(),
                    zone: self.zones[p.owner],
                    delivered: ok,
                });
            }
        }
    }
}

/// Simulates one trial.
pub fn run_trial(cfg: &SystemConfig, tables: &Tables, trial: u64) -> Result<MetricsLedger> {
    let mut t = Trial::new(cfg, tables, trial);
    for _ in 0..t.total_phases() {
        t.step()?;
    }
    Ok(t.into_ledger())
}

/// Simulates `trials` independent trials in order and merges them.
pub fn run(cfg: &SystemConfig, tables: &Tables, trials: u64) -> Result<MetricsLedger> {
    let mut ledger = MetricsLedger::new(cfg.max_retx);
    for t in 0..trials {
        ledger.merge(&run_trial(cfg, tables, t)?);
    }
    Ok(ledger)
}
