//! Domain types shared by every other module: the experiment configuration,
//! user geometry, per-packet HARQ state and the deterministic random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    Statistical,
    Instantaneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarqMode {
    ChaseCombining,
    IncrementalRedundancy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessMode {
    Oma,
    Noma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingStrategy {
    /// Pair only when the slots would otherwise run out.
    PowerConservative,
    /// Pair as many packets as possible.
    ResourceConservative,
}

/// Full description of one experiment. Powers are linear watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_users: usize,
    pub n_slots_per_phase: usize,
    pub max_retx: usize,
    /// Symbols per packet.
    pub blocklength: usize,
    /// Bits per symbol.
    pub rate: f64,
    pub activation_prob: f64,
    pub target_bler: f64,
    pub drop_threshold: f64,
    pub dist_min: f64,
    pub dist_max: f64,
    pub pathloss_exp: f64,
    pub noise_power: f64,
    pub csi_mode: CsiMode,
    pub harq_mode: HarqMode,
    pub access_mode: AccessMode,
    pub pairing_strategy: PairingStrategy,
    pub n_phases: usize,
    pub warmup_phases: usize,
    pub seed: u64,
    /// Draw fresh user distances for every trial instead of once per campaign.
    pub redraw_distances: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_users: 40,
            n_slots_per_phase: 10,
            max_retx: 2,
            blocklength: 50,
            rate: 1.0,
            activation_prob: 0.2,
            target_bler: 1e-5,
            drop_threshold: 1e-6,
            dist_min: 20.0,
            dist_max: 120.0,
            pathloss_exp: 2.0,
            noise_power: dbm_to_watts(-129.1),
            csi_mode: CsiMode::Statistical,
            harq_mode: HarqMode::ChaseCombining,
            access_mode: AccessMode::Oma,
            pairing_strategy: PairingStrategy::PowerConservative,
            n_phases: 10_000,
            warmup_phases: 30,
            seed: 1,
            redraw_distances: true,
        }
    }
}

impl SystemConfig {
    /// Information bits per packet, `R * K`.
    pub fn bits_per_packet(&self) -> f64 {
        self.rate * self.blocklength as f64
    }

    /// Mean number of new packets per uplink phase.
    pub fn mean_arrivals(&self) -> f64 {
        self.activation_prob * self.n_users as f64
    }

    pub fn set_mean_arrivals(&mut self, bn: f64) {
        self.activation_prob = bn / self.n_users as f64;
    }

    /// Default warmup: ten packet lifetimes.
    pub fn default_warmup(max_retx: usize) -> usize {
        10 * (max_retx + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(key, msg))
            }
        };
        check(self.n_users >= 1, "n_users", "must be at least 1")?;
        check(self.n_slots_per_phase >= 1, "n_slots", "must be at least 1")?;
        check(self.blocklength >= 1, "blocklength", "must be at least 1")?;
        check(self.rate > 0.0 && self.rate.is_finite(), "rate", "must be positive")?;
        check(
            (0.0..=1.0).contains(&self.activation_prob),
            "activation_prob",
            "must lie in [0, 1]",
        )?;
        check(
            self.target_bler > 0.0 && self.target_bler < 1.0,
            "target_bler",
            "must lie in (0, 1)",
        )?;
        check(
            self.drop_threshold > 0.0 && self.drop_threshold < self.target_bler,
            "drop_threshold",
            "must lie in (0, target_bler)",
        )?;
        check(
            self.dist_min > 0.0 && self.dist_min < self.dist_max,
            "dist_min",
            "must be positive and below dist_max",
        )?;
        check(self.pathloss_exp >= 0.0, "pathloss_exp", "must be non-negative")?;
        check(
            self.noise_power > 0.0 && self.noise_power.is_finite(),
            "noise",
            "must be positive",
        )?;
        if self.csi_mode == CsiMode::Instantaneous {
            check(
                self.harq_mode == HarqMode::IncrementalRedundancy,
                "harq",
                "instantaneous CSI supports incremental redundancy only",
            )?;
        }
        if self.harq_mode == HarqMode::IncrementalRedundancy {
            check(
                self.max_retx <= 2,
                "max_retx",
                "incremental redundancy supports at most 2 retransmissions",
            )?;
        }
        Ok(())
    }

    /// Index of the distance zone (three equal thirds of the cell radius span).
    pub fn zone_of(&self, distance: f64) -> usize {
        let width = (self.dist_max - self.dist_min) / 3.0;
        (((distance - self.dist_min) / width).floor().max(0.0) as usize).min(2)
    }

    /// Inner zone boundaries.
    pub fn zone_bounds(&self) -> (f64, f64) {
        let width = (self.dist_max - self.dist_min) / 3.0;
        (self.dist_min + width, self.dist_min + 2.0 * width)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserEquipment {
    pub id: usize,
    pub distance: f64,
    /// `distance^alpha`.
    pub pathloss: f64,
}

impl UserEquipment {
    pub fn new(id: usize, distance: f64, pathloss_exp: f64) -> Self {
        Self {
            id,
            distance,
            pathloss: distance.powf(pathloss_exp),
        }
    }
}

pub type PacketId = u64;

/// One transmitted copy of a packet.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyRecord {
    pub phase_index: u64,
    pub transmit_power: f64,
    pub channel_gain: f64,
    /// Effective SINR credited to this copy after SIC.
    pub achieved_sinr: f64,
    pub partner_packet: Option<PacketId>,
    pub interference_cancelled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketStatus {
    Pending,
    Delivered,
    Dropped,
}

/// HARQ process of a single packet.
#[derive(Debug, Clone)]
pub struct PacketState {
    pub id: PacketId,
    pub owner: usize,
    pub arrival_phase: u64,
    /// Current HARQ round, `0..=L`.
    pub round: usize,
    /// Residual SNR (statistical CSI).
    pub residual_snr: f64,
    /// Remaining error budget `eps_tar / prod(eps of transmitted rounds)`
    /// (statistical CSI).
    pub budget: f64,
    /// Mean of accumulated mutual information in nats (instantaneous CSI).
    pub mi_mean: f64,
    /// Variance of accumulated mutual information (instantaneous CSI).
    pub mi_var: f64,
    /// Realized accumulated mutual information; hidden from the scheduler.
    pub mi_realized: f64,
    pub copies: Vec<CopyRecord>,
    pub past_partners: Vec<PacketId>,
    pub status: PacketStatus,
}

impl PacketState {
    pub fn new(id: PacketId, owner: usize, arrival_phase: u64, cfg: &SystemConfig) -> Self {
        Self {
            id,
            owner,
            arrival_phase,
            round: 0,
            residual_snr: crate::harq::initial_gamma(cfg.rate),
            budget: cfg.target_bler,
            mi_mean: 0.0,
            mi_var: 0.0,
            mi_realized: 0.0,
            copies: Vec::new(),
            past_partners: Vec::new(),
            status: PacketStatus::Pending,
        }
    }

    /// Sum of transmit powers over all copies sent so far.
    pub fn energy(&self) -> f64 {
        self.copies.iter().map(|c| c.transmit_power).sum()
    }

    pub fn has_partnered(&self, other: PacketId) -> bool {
        self.past_partners.contains(&other)
    }

    /// Achieved SINRs of the copies sent so far.
    pub fn prior_sinrs(&self) -> Vec<f64> {
        self.copies.iter().map(|c| c.achieved_sinr).collect()
    }
}

/// Purpose tag separating independent random substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    Distance = 1,
    Arrival = 2,
    ChannelGain = 3,
    MiNoise = 4,
}

/// Deterministic random substream keyed by `(seed, trial, phase, purpose,
/// index)`. Streams do not depend on the order in which they are created.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub trial: u64,
    pub phase: u64,
    pub purpose: Purpose,
    pub index: u64,
}

impl RngStream {
    pub fn new(seed: u64, trial: u64, phase: u64, purpose: Purpose, index: u64) -> Self {
        Self {
            seed,
            trial,
            phase,
            purpose,
            index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut h = splitmix64(self.seed);
        for word in [self.trial, self.phase, self.purpose as u64, self.index] {
            h = splitmix64(h ^ word);
        }
        ChaCha8Rng::seed_from_u64(h)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform distance on `[dist_min, dist_max]`.
pub fn draw_distance<R: Rng + ?Sized>(rng: &mut R, dist_min: f64, dist_max: f64) -> f64 {
    if dist_max <= dist_min {
        return dist_min;
    }
    rng.random_range(dist_min..=dist_max)
}

/// Rayleigh fading power gain `|h|^2 ~ Exp(1)`.
pub fn draw_channel_gain<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Received SNR `P |h|^2 / (d^alpha sigma^2)`.
pub fn received_snr(power: f64, gain: f64, pathloss: f64, noise: f64) -> f64 {
    power * gain / (pathloss * noise)
}
