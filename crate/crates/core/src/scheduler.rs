//! Per-phase scheduling: which packets transmit, which are postponed or
//! dropped, slot assignment, and NOMA pairing.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use crate::error::Result;
use crate::fbl::{last_round_power, penultimate_solve, FblParams, PowerCurve};
use crate::matching::min_cost_pairs;
use crate::model::{AccessMode, CsiMode, HarqMode, PacketId, PacketState, PairingStrategy, SystemConfig, UserEquipment};
use crate::noma::{fbl_joint_power_min, fbl_single_error, interference_reduction, joint_power_min, FblUser, PairPowerSolution};
use crate::targets::TargetCache;

/// What the base station knows when it schedules a phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseContext {
    pub phase_index: u64,
    /// Channel power gains per user, known only under instantaneous CSI.
    pub gains: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotUse {
    Single(PacketId),
    Pair(PacketId, PacketId),
}

/// Power and predicted conditional error of one scheduled packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grant {
    pub power: f64,
    pub target: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScheduleDecision {
    pub slots: Vec<SlotUse>,
    pub grants: BTreeMap<PacketId, Grant>,
    /// Packets moved to their next round without a transmission.
    pub postponed: Vec<PacketId>,
    /// Final-round packets dropped for lack of slots.
    pub dropped: Vec<PacketId>,
    /// Final-round packets dropped because their channel is in a deep fade.
    pub faded: Vec<PacketId>,
    /// Requested pairs the eligibility graph could not provide.
    pub pair_shortfall: usize,
}

impl ScheduleDecision {
    /// Whether the phase is an availability outage.
    pub fn capacity_drop(&self) -> bool {
        !self.dropped.is_empty()
    }

    pub fn n_pairs(&self) -> usize {
        self.slots.iter().filter(|s| matches!(s, SlotUse::Pair(..))).count()
    }

    /// Every packet id that occupies a slot.
    pub fn scheduled(&self) -> impl Iterator<Item = PacketId> + '_ {
        self.slots.iter().flat_map(|s| match *s {
            SlotUse::Single(a) => [Some(a), None],
            SlotUse::Pair(a, b) => [Some(a), Some(b)],
        })
        .flatten()
    }
}

/// Splits pending packets into final-round (critical) and the rest.
pub fn classify(pending: &[PacketState], max_retx: usize) -> (Vec<&PacketState>, Vec<&PacketState>) {
    pending.iter().partition(|p| p.round >= max_retx)
}

/// Number of NOMA pairs for `t` packets competing for `w` slots.
pub fn noma_pair_count(t: usize, w: usize, strategy: PairingStrategy) -> usize {
    match strategy {
        PairingStrategy::PowerConservative => t.saturating_sub(w).min(w),
        PairingStrategy::ResourceConservative => (t / 2).min(w),
    }
}

/// Per-packet quantities the scheduler ranks by.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    idx: usize,
    critical: bool,
    power: f64,
    target: f64,
    /// Expected extra power caused by postponing (non-critical only).
    postpone_cost: f64,
    faded: bool,
}

impl Candidate {
    fn grant(&self) -> Grant {
        Grant {
            power: self.power,
            target: self.target,
        }
    }
}

/// Older first, then lower user id.
fn seniority(a: &PacketState, b: &PacketState) -> Ordering {
    a.arrival_phase
        .cmp(&b.arrival_phase)
        .then(a.owner.cmp(&b.owner))
        .then(a.id.cmp(&b.id))
}

/// Stateless scheduler bound to one configuration and its precomputed tables.
pub struct Scheduler<'a> {
    pub cfg: &'a SystemConfig,
    pub targets: &'a TargetCache,
    /// Power curves indexed by remaining rounds (instantaneous CSI only).
    pub curves: &'a [PowerCurve],
}

impl<'a> Scheduler<'a> {
    pub fn new(cfg: &'a SystemConfig, targets: &'a TargetCache, curves: &'a [PowerCurve]) -> Self {
        Self { cfg, targets, curves }
    }

    fn fbl_params(&self) -> FblParams {
        FblParams {
            rate: self.cfg.rate,
            blocklength: self.cfg.blocklength,
            eps_tar: self.cfg.target_bler,
            eps_drop: self.cfg.drop_threshold,
        }
    }

    fn gain(&self, ctx: &PhaseContext, p: &PacketState) -> f64 {
        ctx.gains.as_ref().expect("instantaneous CSI needs channel gains")[p.owner]
    }

    /// Expected extra power if `p` skips the current round.
    pub fn postpone_cost(&self, p: &PacketState, users: &[UserEquipment], ctx: &PhaseContext) -> Result<f64> {
        let remaining = self.cfg.max_retx.saturating_sub(p.round);
        if remaining == 0 {
            return Ok(0.0);
        }
        let pl = users[p.owner].pathloss;
        match self.cfg.csi_mode {
            CsiMode::Statistical => {
                let skip = self.targets.expected_oma_power(p, pl, self.cfg, true)?;
                let now = self.targets.expected_oma_power(p, pl, self.cfg, false)?;
                Ok(skip - now)
            }
            CsiMode::Instantaneous => {
                let g = self.gain(ctx, p);
                let (now, skip) = self.instantaneous_values(p, remaining, g);
                Ok((skip - now) * pl * self.cfg.noise_power)
            }
        }
    }

    /// Normalized `(value if sent now, value if skipped)` for a packet with
    /// `remaining >= 1` rounds after the current one.
    fn instantaneous_values(&self, p: &PacketState, remaining: usize, g: f64) -> (f64, f64) {
        let fresh = p.mi_mean == 0.0 && p.mi_var == 0.0;
        if fresh {
            let c = &self.curves[remaining];
            (c.normalized_value(g), c.postpone_value)
        } else {
            let s = penultimate_solve(g, p.mi_mean, p.mi_var, &self.fbl_params());
            (s.value, s.skip_value)
        }
    }

    /// Dedicated-slot power and conditional error target of `p`.
    fn oma_grant(&self, p: &PacketState, users: &[UserEquipment], ctx: &PhaseContext) -> Result<(Grant, bool)> {
        let pl = users[p.owner].pathloss;
        let cfg = self.cfg;
        match cfg.csi_mode {
            CsiMode::Statistical => {
                let (power, target) = self.targets.oma_power(p, pl, cfg)?;
                Ok((Grant { power, target }, false))
            }
            CsiMode::Instantaneous => {
                let g = self.gain(ctx, p);
                let remaining = cfg.max_retx.saturating_sub(p.round);
                let prm = self.fbl_params();
                let power = if remaining == 0 {
                    if g < prm.fade_threshold() {
                        return Ok((Grant { power: 0.0, target: 1.0 }, true));
                    }
                    last_round_power(g, pl, p.mi_mean, p.mi_var, cfg.rate, cfg.blocklength, cfg.target_bler, cfg.noise_power)?
                } else if p.mi_mean == 0.0 && p.mi_var == 0.0 {
                    self.curves[remaining].normalized_power(g) * pl * cfg.noise_power
                } else {
                    penultimate_solve(g, p.mi_mean, p.mi_var, &prm).power * pl * cfg.noise_power
                };
                let target = if power > 0.0 {
                    fbl_single_error(power * g / pl, cfg.rate, cfg.blocklength, cfg.noise_power, p.mi_mean, p.mi_var)
                } else {
                    1.0
                };
                Ok((Grant { power, target }, false))
            }
        }
    }

    fn candidates(&self, pending: &[PacketState], users: &[UserEquipment], ctx: &PhaseContext) -> Result<Vec<Candidate>> {
        pending
            .iter()
            .enumerate()
            .map(|(idx, p)| {
                let critical = p.round >= self.cfg.max_retx;
                let (grant, faded) = self.oma_grant(p, users, ctx)?;
                let postpone_cost = if critical || faded || grant.power <= 0.0 {
                    0.0
                } else {
                    self.postpone_cost(p, users, ctx)?
                };
                Ok(Candidate {
                    idx,
                    critical,
                    power: grant.power,
                    target: grant.target,
                    postpone_cost,
                    faded,
                })
            })
            .collect()
    }

    /// Schedules one phase.
    pub fn schedule(&self, pending: &[PacketState], users: &[UserEquipment], ctx: &PhaseContext) -> Result<ScheduleDecision> {
        let cands = self.candidates(pending, users, ctx)?;
        let mut d = ScheduleDecision::default();
        let mut critical = Vec::new();
        let mut noncritical = Vec::new();
        for c in cands {
            let id = pending[c.idx].id;
            if c.faded {
                d.faded.push(id);
            } else if c.power <= 0.0 {
                // nothing to send; the round passes as if sent with zero power
                d.postponed.push(id);
            } else if c.critical {
                critical.push(c);
            } else {
                noncritical.push(c);
            }
        }
        critical.sort_by(|a, b| {
            a.power
                .total_cmp(&b.power)
                .then_with(|| seniority(&pending[a.idx], &pending[b.idx]))
        });
        noncritical.sort_by(|a, b| {
            b.postpone_cost
                .total_cmp(&a.postpone_cost)
                .then_with(|| seniority(&pending[a.idx], &pending[b.idx]))
        });
        let w = self.cfg.n_slots_per_phase;
        let capacity = match self.cfg.access_mode {
            AccessMode::Oma => w,
            AccessMode::Noma => 2 * w,
        };
        // priority order: critical by required power, then by postpone cost
        let mut order = critical;
        order.extend(noncritical);
        let n_tx = order.len().min(capacity);
        for c in &order[n_tx..] {
            let id = pending[c.idx].id;
            if c.critical {
                d.dropped.push(id);
            } else {
                d.postponed.push(id);
            }
        }
        order.truncate(n_tx);

        let q = match self.cfg.access_mode {
            AccessMode::Oma => 0,
            AccessMode::Noma => noma_pair_count(n_tx, w, self.cfg.pairing_strategy),
        };
        let mut paired = vec![false; order.len()];
        if q > 0 {
            let (pairs, shortfall) = self.select_pairs(&order, pending, users, ctx, q);
            d.pair_shortfall = shortfall;
            for (i, j, sol) in pairs {
                paired[i] = true;
                paired[j] = true;
                let (a, b) = (&pending[order[i].idx], &pending[order[j].idx]);
                d.slots.push(SlotUse::Pair(a.id, b.id));
                d.grants.insert(
                    a.id,
                    Grant {
                        power: sol.power_a,
                        target: sol.predicted_eps_a,
                    },
                );
                d.grants.insert(
                    b.id,
                    Grant {
                        power: sol.power_b,
                        target: sol.predicted_eps_b,
                    },
                );
            }
        }
        let free = w - d.slots.len();
        let singles: Vec<&Candidate> = order.iter().enumerate().filter(|(k, _)| !paired[*k]).map(|(_, c)| c).collect();
        for (k, c) in singles.iter().enumerate() {
            let id = pending[c.idx].id;
            if k < free {
                d.slots.push(SlotUse::Single(id));
                d.grants.insert(
                    id,
                    Grant {
                        power: c.power,
                        target: c.target,
                    },
                );
            } else if c.critical {
                d.dropped.push(id);
            } else {
                d.postponed.push(id);
            }
        }
        Ok(d)
    }

    /// Pair cost of two transmit-set members, or `None` when ineligible.
    /// `ga` and `gb` are the packets' dedicated-slot grants.
    pub fn pair_solution(
        &self,
        (a, ga): (&PacketState, Grant),
        (b, gb): (&PacketState, Grant),
        users: &[UserEquipment],
        ctx: &PhaseContext,
    ) -> Option<PairPowerSolution> {
        if a.owner == b.owner {
            return None;
        }
        let cfg = self.cfg;
        if cfg.harq_mode == HarqMode::ChaseCombining && (a.has_partnered(b.id) || b.has_partnered(a.id)) {
            return None;
        }
        let (ua, ub) = (&users[a.owner], &users[b.owner]);
        let sol = match cfg.csi_mode {
            CsiMode::Statistical => {
                let zeta = |p: &PacketState| match cfg.harq_mode {
                    HarqMode::ChaseCombining => interference_reduction(&p.prior_sinrs()),
                    HarqMode::IncrementalRedundancy => 1.0,
                };
                joint_power_min(
                    a.residual_snr,
                    b.residual_snr,
                    ga.target,
                    gb.target,
                    ua.pathloss,
                    ub.pathloss,
                    zeta(a),
                    zeta(b),
                    cfg.noise_power,
                )
            }
            CsiMode::Instantaneous => {
                let user = |p: &PacketState, u: &UserEquipment, g: Grant| FblUser {
                    gain: self.gain(ctx, p),
                    pathloss: u.pathloss,
                    mu: p.mi_mean,
                    nu: p.mi_var,
                    oma_power: g.power,
                    oma_target: g.target,
                };
                fbl_joint_power_min(&user(a, ua, ga), &user(b, ub, gb), cfg.rate, cfg.blocklength, cfg.noise_power)
            }
        };
        sol.feasible.then_some(sol)
    }

    /// Minimum-cost `q` pairs among `order`; returns `(i, j, solution)` by
    /// position in `order`, and the shortfall.
    fn select_pairs(
        &self,
        order: &[Candidate],
        pending: &[PacketState],
        users: &[UserEquipment],
        ctx: &PhaseContext,
        q: usize,
    ) -> (Vec<(usize, usize, PairPowerSolution)>, usize) {
        let mut costs = HashMap::new();
        let mut sols = HashMap::new();
        for i in 0..order.len() {
            for j in i + 1..order.len() {
                let (ci, cj) = (&order[i], &order[j]);
                let a = (&pending[ci.idx], ci.grant());
                let b = (&pending[cj.idx], cj.grant());
                if let Some(sol) = self.pair_solution(a, b, users, ctx) {
                    costs.insert((i, j), sol.extra_cost);
                    sols.insert((i, j), sol);
                }
            }
        }
        let sel = min_cost_pairs(order.len(), &costs, q);
        let pairs = sel.pairs.iter().map(|&(i, j)| (i, j, sols[&(i, j)])).collect();
        (pairs, sel.shortfall)
    }
}
