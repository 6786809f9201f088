//! Per-round error targets for statistical-CSI OMA HARQ and the expected
//! transmit power they imply.
//!
//! Chase combining reduces to a finite-dimensional problem: the expected
//! power of a packet with residual SNR `gamma` equals
//! `gamma d^a s2 * factor(eps)`, so optimal targets depend on the remaining
//! error budget only. Incremental redundancy is solved stage by stage: the
//! penultimate round through a closed-form first-order approximation of the
//! expected power, the first round of a two-retransmission schedule through
//! an offline sweep over the initial target.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::harq::{initial_gamma, power_for_target};
use crate::model::{HarqMode, PacketState, SystemConfig};
use crate::numeric::{golden_section, GaussLegendre};

/// Error targets for the remaining rounds of a packet.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSchedule {
    pub eps: Vec<f64>,
    pub mode: HarqMode,
    pub rate: f64,
    pub budget: f64,
}

impl TargetSchedule {
    pub fn product(&self) -> f64 {
        self.eps.iter().product()
    }
}

/// Dimensionless chase-combining cost: expected power over the listed rounds
/// divided by `gamma d^a s2`.
pub fn cc_expected_power_factor(eps: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut carry = 1.0;
    for &e in eps {
        if e >= 1.0 {
            // skipped round: no power, residual unchanged
            continue;
        }
        let l = (-e).ln_1p();
        total -= carry / l;
        carry *= (l + e) / l;
    }
    total
}

/// Minimizes [`cc_expected_power_factor`] over `rounds + 1` targets whose
/// product equals `budget`.
pub fn cc_optimal_targets(rounds: usize, budget: f64) -> Result<TargetSchedule> {
    let schedule = |eps| TargetSchedule {
        eps,
        mode: HarqMode::ChaseCombining,
        rate: 0.0,
        budget,
    };
    if !(budget > 0.0) {
        return Err(Error::Domain(format!("error budget {budget} must be positive")));
    }
    if budget >= 1.0 {
        return Ok(schedule(vec![1.0; rounds + 1]));
    }
    if rounds == 0 {
        return Ok(schedule(vec![budget]));
    }
    let ln_budget = budget.ln();
    let expand = |u: &[f64]| -> Option<Vec<f64>> {
        let last = ln_budget - u.iter().sum::<f64>();
        if last >= 0.0 || u.iter().any(|&x| x >= 0.0) {
            return None;
        }
        Some(u.iter().copied().chain(std::iter::once(last)).map(f64::exp).collect())
    };
    let objective = |u: &[f64]| expand(u).map_or(f64::INFINITY, |e| cc_expected_power_factor(&e));

    let start = vec![ln_budget / (rounds + 1) as f64; rounds];
    let step = 0.25 * start[0].abs();
    let mut best = nelder_mead(&objective, &start, step, 4000);
    // restart from the incumbent to shake off a collapsed simplex
    for _ in 0..3 {
        let again = nelder_mead(&objective, &best.0, 0.05 * step, 4000);
        let improved = again.1 < best.1 * (1.0 - 1e-15);
        best = again;
        if !improved {
            break;
        }
    }
    let (u, value) = best;
    match expand(&u) {
        Some(eps) if value.is_finite() => Ok(schedule(eps)),
        _ => Err(Error::NoConvergence {
            what: format!("chase-combining targets for {rounds} retransmissions"),
            residual: value,
        }),
    }
}

/// Downhill simplex minimization. Returns `(argmin, min)`.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, start: &[f64], step: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = (values[n] - values[0]).abs();
        let size = simplex[1..]
            .iter()
            .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= 1e-15 * values[0].abs() && size < 1e-11 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (w - c)).collect()
        };
        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let contracted = if fr < values[n] { along(-0.5) } else { along(0.5) };
            let fc = f(&contracted);
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> =
                        simplex[0].iter().zip(&simplex[i]).map(|(b, p)| b + 0.5 * (p - b)).collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    (simplex[best].clone(), values[best])
}

/// First-order approximation of the expected power of the last two IR
/// rounds, for targets `eps_pen` (current) and `eps_last` (final round).
pub fn ir_psi_last(gamma: f64, eps_pen: f64, eps_last: f64, pathloss: f64, noise: f64) -> f64 {
    let scale = pathloss * noise;
    let a = (-eps_pen).ln_1p();
    let first = -gamma * scale / a;
    if eps_last >= 1.0 {
        return first;
    }
    let b = (-eps_last).ln_1p();
    let log_term = (gamma + 1.0) * (gamma - a) * (gamma.ln_1p() / gamma);
    let bracket = 0.5 * gamma * (a - 2.0) + a + log_term;
    first + a * scale / (gamma * b) * bracket
}

/// Target chosen for the penultimate IR round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrTarget {
    pub eps: f64,
    /// Normalized expected power (units of `d^a s2`) at `eps`.
    pub value: f64,
    /// False when the minimum sat on the search boundary and a dense scan
    /// supplied the answer.
    pub interior: bool,
}

/// Largest penultimate target for which the linearized SNR density stays
/// non-negative on `[0, gamma]`.
const IR_EPS_CAP: f64 = 1.0 - 1.0 / std::f64::consts::E;

/// Optimal penultimate-round IR target for residual `gamma` and remaining
/// budget. The argmin does not depend on pathloss or noise, so the returned
/// value is normalized.
pub fn ir_next_target(gamma: f64, budget: f64) -> IrTarget {
    if budget >= 1.0 || gamma <= 0.0 {
        return IrTarget {
            eps: 1.0,
            value: 0.0,
            interior: true,
        };
    }
    let hi = IR_EPS_CAP.max(budget);
    if hi <= budget {
        // the budget is met in one shot
        return IrTarget {
            eps: budget,
            value: ir_psi_last(gamma, budget, 1.0, 1.0, 1.0),
            interior: false,
        };
    }
    let f = |v: f64| {
        let e = v.exp();
        ir_psi_last(gamma, e, (budget / e).min(1.0), 1.0, 1.0)
    };
    let (lo_v, hi_v) = (budget.ln(), hi.ln());
    const N: usize = 40;
    let step = (hi_v - lo_v) / (N - 1) as f64;
    let mut best_i = 0;
    let mut best_val = f64::INFINITY;
    for i in 0..N {
        let val = f(lo_v + step * i as f64);
        if val < best_val {
            best_val = val;
            best_i = i;
        }
    }
    if best_i == 0 || best_i == N - 1 {
        let dense = 4000;
        let step = (hi_v - lo_v) / (dense - 1) as f64;
        let (mut bv, mut bx) = (f64::INFINITY, lo_v);
        for i in 0..dense {
            let x = lo_v + step * i as f64;
            let val = f(x);
            if val < bv {
                bv = val;
                bx = x;
            }
        }
        return IrTarget {
            eps: bx.exp(),
            value: bv,
            interior: false,
        };
    }
    let lo = lo_v + step * (best_i - 1) as f64;
    let up = lo_v + step * (best_i + 1) as f64;
    let (v, val) = golden_section(f, lo, up, 1e-12, 200);
    IrTarget {
        eps: v.exp(),
        value: val,
        interior: true,
    }
}

/// Result of the first-round IR optimization with two retransmissions left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrInitial {
    pub eps: f64,
    /// Normalized expected total power at `eps`.
    pub value: f64,
}

/// Expected normalized power of a two-retransmission IR schedule that starts
/// with target `eps0`: the first-round power plus the penultimate-round
/// optimum integrated over the first-round SNR density.
pub fn ir_stage_value(gamma: f64, budget: f64, eps0: f64) -> f64 {
    let a = (-eps0).ln_1p();
    let p0 = -gamma / a;
    let next_budget = budget / eps0;
    let tail = GaussLegendre::n200().integrate(0.0, gamma, |x| {
        let g1 = (gamma - x) / (1.0 + x);
        (-x / p0).exp() / p0 * ir_next_target(g1, next_budget).value
    });
    p0 + tail
}

/// Sweep of the first IR target for a packet with two retransmissions left:
/// 400 candidates on `(budget^(1/3), 0.6)` followed by a golden refinement
/// around the best candidate.
pub fn ir_two_stage(gamma: f64, budget: f64) -> IrInitial {
    let lo = budget.cbrt();
    let hi = 0.6f64.max(lo);
    const N: usize = 400;
    let step = (hi - lo) / (N + 1) as f64;
    let mut best = IrInitial {
        eps: f64::NAN,
        value: f64::INFINITY,
    };
    let mut best_i = 1;
    for i in 1..=N {
        let e = lo + step * i as f64;
        let v = ir_stage_value(gamma, budget, e);
        if v < best.value {
            best = IrInitial { eps: e, value: v };
            best_i = i;
        }
    }
    let (e, v) = golden_section(
        |e| ir_stage_value(gamma, budget, e),
        lo + step * (best_i - 1) as f64,
        lo + step * (best_i + 1) as f64,
        1e-7,
        60,
    );
    if v < best.value {
        best = IrInitial { eps: e, value: v };
    }
    best
}

/// Optimal initial IR target for rate `rate` and overall target `eps_tar`,
/// assuming two retransmissions.
pub fn ir_initial_target(rate: f64, eps_tar: f64) -> f64 {
    ir_two_stage(initial_gamma(rate), eps_tar).eps
}

fn quantize(x: f64) -> i64 {
    (x.ln() * 1e8).round() as i64
}

fn dequantize(k: i64) -> f64 {
    (k as f64 / 1e8).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Cc { rounds: usize, budget: i64 },
    IrTwoStage { gamma: i64, budget: i64 },
}

#[derive(Debug, Clone)]
enum Cached {
    Cc(Vec<f64>),
    Ir(IrInitial),
}

/// Memoized target computations. Safe to share across threads.
#[derive(Debug, Default)]
pub struct TargetCache {
    map: RwLock<HashMap<Key, Cached>>,
}

impl TargetCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get_or(&self, key: Key, compute: impl FnOnce() -> Result<Cached>) -> Result<Cached> {
        if let Some(v) = self.map.read().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let v = compute()?;
        self.map.write().unwrap().entry(key).or_insert(v.clone());
        Ok(v)
    }

    /// Chase-combining targets for `rounds + 1` remaining rounds. Computed at
    /// the quantized budget; the final entry is rescaled so the product
    /// matches `budget` exactly.
    pub fn cc_targets(&self, rounds: usize, budget: f64) -> Result<TargetSchedule> {
        if budget >= 1.0 || rounds == 0 {
            return cc_optimal_targets(rounds, budget);
        }
        let q = quantize(budget);
        let Cached::Cc(mut eps) = self.get_or(Key::Cc { rounds, budget: q }, || {
            cc_optimal_targets(rounds, dequantize(q)).map(|s| Cached::Cc(s.eps))
        })?
        else {
            unreachable!()
        };
        let last = eps.len() - 1;
        let scale = budget / dequantize(q);
        eps[last] = (eps[last] * scale).min(1.0);
        Ok(TargetSchedule {
            eps,
            mode: HarqMode::ChaseCombining,
            rate: 0.0,
            budget,
        })
    }

    pub fn ir_two_stage(&self, gamma: f64, budget: f64) -> IrInitial {
        if budget >= 1.0 || gamma <= 0.0 {
            return IrInitial { eps: 1.0, value: 0.0 };
        }
        let key = Key::IrTwoStage {
            gamma: quantize(gamma),
            budget: quantize(budget),
        };
        match self.get_or(key, || Ok(Cached::Ir(ir_two_stage(gamma, budget)))) {
            Ok(Cached::Ir(v)) => v,
            _ => unreachable!(),
        }
    }

    /// Seeds the initial-target entry, e.g. from an on-disk table.
    pub fn insert_ir_initial(&self, rate: f64, eps_tar: f64, initial: IrInitial) {
        let key = Key::IrTwoStage {
            gamma: quantize(initial_gamma(rate)),
            budget: quantize(eps_tar),
        };
        self.map.write().unwrap().insert(key, Cached::Ir(initial));
    }

    pub fn insert_cc(&self, rounds: usize, budget: f64, eps: Vec<f64>) {
        let key = Key::Cc {
            rounds,
            budget: quantize(budget),
        };
        self.map.write().unwrap().insert(key, Cached::Cc(eps));
    }

    /// Target for the upcoming round of a packet with `remaining` rounds after
    /// it, residual `gamma` and budget `budget`.
    pub fn current_target(&self, mode: HarqMode, remaining: usize, gamma: f64, budget: f64) -> Result<f64> {
        if budget >= 1.0 || gamma <= 0.0 {
            return Ok(1.0);
        }
        Ok(match (mode, remaining) {
            (_, 0) => budget,
            (HarqMode::ChaseCombining, r) => self.cc_targets(r, budget)?.eps[0],
            (HarqMode::IncrementalRedundancy, 1) => ir_next_target(gamma, budget).eps,
            (HarqMode::IncrementalRedundancy, 2) => self.ir_two_stage(gamma, budget).eps,
            (HarqMode::IncrementalRedundancy, r) => {
                return Err(Error::Domain(format!(
                    "incremental redundancy targets need at most 2 remaining rounds, got {r}"
                )))
            }
        })
    }

    /// Expected normalized power (units of `d^a s2`) of the remaining rounds.
    pub fn normalized_expected_power(
        &self,
        mode: HarqMode,
        remaining: usize,
        gamma: f64,
        budget: f64,
    ) -> Result<f64> {
        if budget >= 1.0 || gamma <= 0.0 {
            return Ok(0.0);
        }
        Ok(match (mode, remaining) {
            (_, 0) => -gamma / (-budget).ln_1p(),
            (HarqMode::ChaseCombining, r) => gamma * cc_expected_power_factor(&self.cc_targets(r, budget)?.eps),
            (HarqMode::IncrementalRedundancy, 1) => ir_next_target(gamma, budget).value,
            (HarqMode::IncrementalRedundancy, 2) => self.ir_two_stage(gamma, budget).value,
            (HarqMode::IncrementalRedundancy, r) => {
                return Err(Error::Domain(format!(
                    "incremental redundancy targets need at most 2 remaining rounds, got {r}"
                )))
            }
        })
    }

    /// Expected OMA power of a pending statistical-CSI packet, optionally
    /// assuming the current round is skipped (sent with zero power).
    pub fn expected_oma_power(
        &self,
        packet: &PacketState,
        pathloss: f64,
        cfg: &SystemConfig,
        skip_current: bool,
    ) -> Result<f64> {
        let remaining = cfg.max_retx.saturating_sub(packet.round);
        if skip_current && remaining == 0 {
            return Err(Error::Domain("a final-round packet cannot be postponed".into()));
        }
        let remaining = if skip_current { remaining - 1 } else { remaining };
        let norm = self.normalized_expected_power(cfg.harq_mode, remaining, packet.residual_snr, packet.budget)?;
        Ok(norm * pathloss * cfg.noise_power)
    }

    /// Transmit power for the upcoming round of a statistical-CSI packet in a
    /// dedicated slot, together with the target it meets.
    pub fn oma_power(&self, packet: &PacketState, pathloss: f64, cfg: &SystemConfig) -> Result<(f64, f64)> {
        let remaining = cfg.max_retx.saturating_sub(packet.round);
        let eps = self.current_target(cfg.harq_mode, remaining, packet.residual_snr, packet.budget)?;
        if eps >= 1.0 {
            return Ok((0.0, 1.0));
        }
        Ok((power_for_target(packet.residual_snr, eps, pathloss, cfg.noise_power)?, eps))
    }
}

/// One entry of the on-disk target table.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetRecord {
    pub mode: HarqMode,
    pub max_retx: usize,
    pub rate: f64,
    pub eps_tar: f64,
    pub eps: Vec<f64>,
}

const TABLE_HEADER: &str = "# noma-harq target table v1";

/// Writes target records, one per line, 17 significant digits.
pub fn save_target_table(path: &Path, records: &[TargetRecord]) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{TABLE_HEADER}").unwrap();
    writeln!(out, "# mode max_retx rate eps_tar eps...").unwrap();
    for r in records {
        let mode = match r.mode {
            HarqMode::ChaseCombining => "cc",
            HarqMode::IncrementalRedundancy => "ir",
        };
        write!(out, "{mode} {} {:.16e} {:.16e}", r.max_retx, r.rate, r.eps_tar).unwrap();
        for e in &r.eps {
            write!(out, " {e:.16e}").unwrap();
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_target_table(path: &Path) -> Result<Vec<TargetRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(TABLE_HEADER) {
        return Err(Error::Cache(format!("{}: missing or unknown version header", path.display())));
    }
    let mut records = Vec::new();
    for line in lines.filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let bad = || Error::Cache(format!("bad record `{line}`"));
        let mut it = line.split_whitespace();
        let mode = match it.next() {
            Some("cc") => HarqMode::ChaseCombining,
            Some("ir") => HarqMode::IncrementalRedundancy,
            _ => return Err(bad()),
        };
        let max_retx = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let rate = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let eps_tar = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let eps = it.map(|s| s.parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        records.push(TargetRecord {
            mode,
            max_retx,
            rate,
            eps_tar,
            eps,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn factor_examples() {
        assert_relative_eq!(cc_expected_power_factor(&[1.0 - (-1f64).exp()]), 1.0, max_relative = 1e-14);
        assert_relative_eq!(cc_expected_power_factor(&[0.5]), 1.0 / 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn cc_trivial_cases() {
        let s = cc_optimal_targets(0, 1e-3).unwrap();
        assert_eq!(s.eps, vec![1e-3]);
        let s = cc_optimal_targets(2, 1.5).unwrap();
        assert_eq!(s.eps, vec![1.0; 3]);
        assert!(cc_optimal_targets(1, 0.0).is_err());
    }

    #[test]
    fn cc_targets_meet_budget() {
        for (l, b) in [(1, 1e-4), (2, 1e-5), (2, 3e-3), (3, 1e-6)] {
            let s = cc_optimal_targets(l, b).unwrap();
            assert_eq!(s.eps.len(), l + 1);
            assert!(s.eps.iter().all(|&e| e > 0.0 && e < 1.0));
            assert_relative_eq!(s.product(), b, max_relative = 1e-9);
        }
    }

    #[test]
    fn cc_single_retransmission_matches_grid_search() {
        let budget = 1e-4;
        let s = cc_optimal_targets(1, budget).unwrap();
        let mut best = (f64::INFINITY, 0.0);
        let mut e = 1e-4;
        while e < 1.0 {
            if e >= budget {
                let v = cc_expected_power_factor(&[e, budget / e]);
                if v < best.0 {
                    best = (v, e);
                }
            }
            e += 1e-4;
        }
        assert!((s.eps[0] - best.1).abs() <= 1e-4, "{} vs {}", s.eps[0], best.1);
        assert!(cc_expected_power_factor(&s.eps) <= best.0 * (1.0 + 1e-12));
    }

    #[test]
    fn cache_agrees_with_fresh_computation() {
        let cache = TargetCache::new();
        let a = cache.cc_targets(2, 1e-5).unwrap();
        let b = cache.cc_targets(2, 1e-5).unwrap();
        assert_eq!(a, b);
        let fresh = cc_optimal_targets(2, dequantize(quantize(1e-5))).unwrap();
        assert_eq!(a.eps[..2], fresh.eps[..2]);
        assert_relative_eq!(a.product(), 1e-5, max_relative = 1e-12);
    }

    #[test]
    fn psi_last_scales_linearly_and_bounds_first_term() {
        let base = ir_psi_last(1.0, 0.2, 5e-5, 1.0, 1.0);
        assert_relative_eq!(ir_psi_last(1.0, 0.2, 5e-5, 2.0, 1.0), 2.0 * base, max_relative = 1e-14);
        assert_relative_eq!(ir_psi_last(1.0, 0.2, 5e-5, 1.0, 2.0), 2.0 * base, max_relative = 1e-14);
        for &(g, ep, el) in &[(1.0, 0.2, 5e-5), (3.0, 0.05, 1e-3), (0.4, 0.5, 0.1)] {
            let p = power_for_target(g, ep, 1.0, 1.0).unwrap();
            assert!(ir_psi_last(g, ep, el, 1.0, 1.0) >= p);
        }
    }

    #[test]
    fn next_target_degenerate_budgets() {
        assert_eq!(ir_next_target(1.0, 1.0).eps, 1.0);
        let t = ir_next_target(1.0, 0.999);
        assert!(t.eps >= 0.999);
        let t = ir_next_target(1.0, 1e-5 / 0.215);
        assert!(t.interior);
        assert!(t.eps > 1e-5 / 0.215 && t.eps < IR_EPS_CAP);
    }

    #[test]
    fn expected_power_zero_for_decoded_packets() {
        let cache = TargetCache::new();
        for mode in [HarqMode::ChaseCombining, HarqMode::IncrementalRedundancy] {
            assert_eq!(cache.normalized_expected_power(mode, 2, 0.0, 1e-5).unwrap(), 0.0);
        }
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("targets.txt");
        let records = vec![
            TargetRecord {
                mode: HarqMode::ChaseCombining,
                max_retx: 2,
                rate: 1.0,
                eps_tar: 1e-5,
                eps: vec![0.189_123_456_789_012_34, 0.0374, 0.1 + 0.2],
            },
            TargetRecord {
                mode: HarqMode::IncrementalRedundancy,
                max_retx: 2,
                rate: 2.5,
                eps_tar: 1e-5,
                eps: vec![0.262],
            },
        ];
        save_target_table(&path, &records).unwrap();
        assert_eq!(load_target_table(&path).unwrap(), records);
    }
}
