//! Per-trial accumulation of simulation outcomes and the statistics derived
//! from them.

use serde::{Deserialize, Serialize};

use crate::model::watts_to_dbm;

/// Energy spent on one finished packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    /// Sum of the transmit powers of all copies (watts times phases).
    pub energy: f64,
    /// Distance zone of the owner, `0..3`.
    pub zone: u8,
    pub delivered: bool,
}

/// Raw counters of one or more trials. Merging is associative.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLedger {
    pub phases_observed: u64,
    /// Phases in which final-round packets were dropped for lack of slots.
    pub outage_phases: u64,
    /// Packets that arrived inside the measurement window and finished.
    pub samples: Vec<EnergySample>,
    pub slots_used: u64,
    /// Packets decoded inside the measurement window.
    pub packets_delivered: u64,
    /// Packets that arrived inside the measurement window.
    pub arrivals: u64,
    /// Final-round packets dropped for lack of slots.
    pub drops: u64,
    /// Final-round packets dropped because of a deep fade.
    pub fade_drops: u64,
    /// Packets that failed their final round.
    pub failures: u64,
    pub pairs_used: u64,
    pub pair_shortfall: u64,
    /// Sum of all transmit powers inside the measurement window.
    pub total_power: f64,
    /// Per-round transmissions, failures, and sum of predicted failure
    /// probabilities.
    pub round_tx: Vec<u64>,
    pub round_fail: Vec<u64>,
    pub round_target: Vec<f64>,
    /// Per-phase `(delivered, slots)` for the utilization standard error.
    pub phase_counts: Vec<(u32, u32)>,
}

impl MetricsLedger {
    pub fn new(max_retx: usize) -> Self {
        Self {
            round_tx: vec![0; max_retx + 1],
            round_fail: vec![0; max_retx + 1],
            round_target: vec![0.0; max_retx + 1],
            ..Self::default()
        }
    }

    pub fn merge(&mut self, other: &MetricsLedger) {
        self.phases_observed += other.phases_observed;
        self.outage_phases += other.outage_phases;
        self.samples.extend_from_slice(&other.samples);
        self.slots_used += other.slots_used;
        self.packets_delivered += other.packets_delivered;
        self.arrivals += other.arrivals;
        self.drops += other.drops;
        self.fade_drops += other.fade_drops;
        self.failures += other.failures;
        self.pairs_used += other.pairs_used;
        self.pair_shortfall += other.pair_shortfall;
        self.total_power += other.total_power;
        let n = self.round_tx.len().max(other.round_tx.len());
        self.round_tx.resize(n, 0);
        self.round_fail.resize(n, 0);
        self.round_target.resize(n, 0.0);
        for (i, &v) in other.round_tx.iter().enumerate() {
            self.round_tx[i] += v;
        }
        for (i, &v) in other.round_fail.iter().enumerate() {
            self.round_fail[i] += v;
        }
        for (i, &v) in other.round_target.iter().enumerate() {
            self.round_target[i] += v;
        }
        self.phase_counts.extend_from_slice(&other.phase_counts);
    }

    /// Merges ledgers in the given order.
    pub fn merged<'a>(ledgers: impl IntoIterator<Item = &'a MetricsLedger>) -> MetricsLedger {
        let mut out = MetricsLedger::default();
        for l in ledgers {
            out.merge(l);
        }
        out
    }
}

/// Fraction of observed phases in availability outage.
pub fn availability_outage(l: &MetricsLedger) -> Option<f64> {
    (l.phases_observed > 0).then(|| l.outage_phases as f64 / l.phases_observed as f64)
}

/// Which packets enter the power average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyConvention {
    /// Every finished packet, including dropped ones.
    AllPackets,
    /// Delivered packets only.
    DeliveredOnly,
}

fn energies(l: &MetricsLedger, zone: Option<u8>, conv: EnergyConvention) -> impl Iterator<Item = f64> + '_ {
    l.samples
        .iter()
        .filter(move |s| zone.is_none_or(|z| s.zone == z))
        .filter(move |s| conv == EnergyConvention::AllPackets || s.delivered)
        .map(|s| s.energy)
}

/// Mean and standard error of the linear energy per packet, in watts.
pub fn mean_power(l: &MetricsLedger, zone: Option<u8>, conv: EnergyConvention) -> Option<MeanEstimate> {
    MeanEstimate::from_samples(energies(l, zone, conv))
}

/// Mean energy per packet in dBm.
pub fn avg_power_per_packet(l: &MetricsLedger, zone: Option<u8>) -> Option<f64> {
    mean_power(l, zone, EnergyConvention::AllPackets).map(|m| watts_to_dbm(m.mean))
}

/// Delivered packets per used slot.
pub fn slot_utilization(l: &MetricsLedger) -> Option<f64> {
    (l.slots_used > 0).then(|| l.packets_delivered as f64 / l.slots_used as f64)
}

/// Utilization times the rate, in bits per symbol.
pub fn spectral_efficiency(l: &MetricsLedger, rate: f64) -> Option<f64> {
    slot_utilization(l).map(|u| u * rate)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: impl Iterator<Item = f64>) -> Option<Self> {
        // Welford
        let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for x in xs {
            n += 1;
            let d = x - mean;
            mean += d / n as f64;
            m2 += d * (x - mean);
        }
        if n == 0 {
            return None;
        }
        let se = if n > 1 { (m2 / (n - 1) as f64 / n as f64).sqrt() } else { f64::NAN };
        Some(Self { mean, se, n })
    }

    /// Standard error of `10 log10(mean)` by the delta method.
    pub fn se_db(&self) -> f64 {
        10.0 / std::f64::consts::LN_10 * self.se / self.mean
    }
}

/// Two-sided 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Ratio estimate `sum(d) / sum(s)` with its linearized standard error,
/// treating phases as independent.
pub fn ratio_estimate(pairs: &[(u32, u32)]) -> Option<MeanEstimate> {
    let n = pairs.len();
    let sd: f64 = pairs.iter().map(|p| p.0 as f64).sum();
    let ss: f64 = pairs.iter().map(|p| p.1 as f64).sum();
    if ss <= 0.0 {
        return None;
    }
    let r = sd / ss;
    let se = if n > 1 {
        let sbar = ss / n as f64;
        let var: f64 = pairs.iter().map(|p| (p.0 as f64 - r * p.1 as f64).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt() / sbar
    } else {
        f64::NAN
    };
    Some(MeanEstimate { mean: r, se, n })
}

/// Everything reported for one experiment point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub outage: Option<f64>,
    pub outage_ci: (f64, f64),
    pub power_dbm: Option<f64>,
    pub power_se_db: Option<f64>,
    pub power_delivered_dbm: Option<f64>,
    pub util: Option<f64>,
    pub util_ci: Option<(f64, f64)>,
    pub spectral_efficiency: Option<f64>,
    pub zone_dbm: [Option<f64>; 3],
    pub phases: u64,
    pub arrivals: u64,
    pub delivered: u64,
    pub drops: u64,
    pub failures: u64,
}

impl Summary {
    pub fn from_ledger(l: &MetricsLedger, rate: f64) -> Self {
        let all = mean_power(l, None, EnergyConvention::AllPackets);
        let util = ratio_estimate(&l.phase_counts);
        Self {
            outage: availability_outage(l),
            outage_ci: wilson_interval(l.outage_phases, l.phases_observed),
            power_dbm: all.map(|m| watts_to_dbm(m.mean)),
            power_se_db: all.map(|m| m.se_db()),
            power_delivered_dbm: mean_power(l, None, EnergyConvention::DeliveredOnly).map(|m| watts_to_dbm(m.mean)),
            util: slot_utilization(l),
            util_ci: util.map(|u| (u.mean - 1.96 * u.se, u.mean + 1.96 * u.se)),
            spectral_efficiency: spectral_efficiency(l, rate),
            zone_dbm: [0, 1, 2].map(|z| avg_power_per_packet(l, Some(z))),
            phases: l.phases_observed,
            arrivals: l.arrivals,
            delivered: l.packets_delivered,
            drops: l.drops,
            failures: l.failures,
        }
    }
}
