//! Closed-form per-link HARQ mathematics.
//!
//! Statistical-CSI links are described by a residual SNR `gamma`: the signal
//! power (chase combining) or its IR equivalent still missing before the
//! packet decodes. A packet is decoded once `gamma` reaches zero.
//!
//! Instantaneous-CSI links track the Gaussian approximation of accumulated
//! mutual information: each round adds a mean `ln(1 + s)` and a variance
//! `2 t / K`.

use crate::error::{Error, Result};
use crate::numeric::{ln_normal_cdf, normal_cdf};
use std::f64::consts::LN_2;

/// Residual SNR of a fresh packet, `2^R - 1`.
pub fn initial_gamma(rate: f64) -> f64 {
    rate.exp2() - 1.0
}

/// Chase combining: SINRs add up.
pub fn cc_residual_update(gamma: f64, sinr: f64) -> f64 {
    (gamma - sinr).max(0.0)
}

/// Incremental redundancy: `log2(1 + SINR)` adds up.
pub fn ir_residual_update(gamma: f64, sinr: f64) -> f64 {
    ((gamma - sinr) / (1.0 + sinr)).max(0.0)
}

/// Outage probability of a single Rayleigh-faded copy sent with `power`:
/// `1 - exp(-gamma d^a s2 / P)`.
pub fn oma_error_prob(gamma: f64, power: f64, pathloss: f64, noise: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    if power <= 0.0 {
        return 1.0;
    }
    -(-gamma * pathloss * noise / power).exp_m1()
}

/// Minimum power reaching failure probability `eps` on a single copy.
pub fn power_for_target(gamma: f64, eps: f64, pathloss: f64, noise: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("target {eps} outside (0, 1)")));
    }
    if gamma <= 0.0 {
        return Ok(0.0);
    }
    Ok(-gamma * pathloss * noise / (-eps).ln_1p())
}

/// Mean and variance contribution of one round to accumulated mutual
/// information.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MiStats {
    pub mean: f64,
    pub var: f64,
}

/// Per-round MI statistics for effective SINR `sinr` and received-signal
/// share `share = Q_sig / (Q_sig + Q_int + noise)`.
pub fn mi_round_stats(sinr: f64, share: f64, blocklength: usize) -> MiStats {
    MiStats {
        mean: sinr.ln_1p(),
        var: 2.0 * share.clamp(0.0, 1.0) / blocklength as f64,
    }
}

/// Convenience wrapper computing [`mi_round_stats`] from received powers.
pub fn mi_stats_from_powers(q_sig: f64, q_int: f64, noise: f64, blocklength: usize) -> MiStats {
    if q_sig <= 0.0 {
        return MiStats::default();
    }
    mi_round_stats(
        q_sig / (q_int + noise),
        q_sig / (q_sig + q_int + noise),
        blocklength,
    )
}

/// `ln F_N(R ln 2; mu, nu)`: log-probability that accumulated mutual
/// information stays below the packet's information content.
pub fn ln_fail_prob(rate: f64, mu: f64, nu: f64) -> f64 {
    ln_normal_cdf(rate * LN_2, mu, nu)
}

/// `F_N(R ln 2; mu, nu)`.
pub fn fail_prob(rate: f64, mu: f64, nu: f64) -> f64 {
    normal_cdf(rate * LN_2, mu, nu)
}

/// Conditional failure probability of the upcoming round,
/// `F_N(R ln2; mu + add.mean, nu + add.var) / F_N(R ln2; mu, nu)`.
/// The denominator is 1 for a packet that was never sent (`mu = nu = 0`).
pub fn fbl_round_error(rate: f64, mu_prev: f64, nu_prev: f64, add: MiStats) -> f64 {
    let num = ln_fail_prob(rate, mu_prev + add.mean, nu_prev + add.var);
    let den = if mu_prev == 0.0 && nu_prev == 0.0 {
        0.0
    } else {
        ln_fail_prob(rate, mu_prev, nu_prev)
    };
    if num == f64::NEG_INFINITY {
        return 0.0;
    }
    if den == f64::NEG_INFINITY {
        return 1.0;
    }
    (num - den).exp().clamp(0.0, 1.0)
}
