//! Instantaneous-CSI power control for dedicated slots.
//!
//! With the channel gain of the current round known, the last round needs
//! exactly the power that pushes the accumulated failure probability down to
//! the target. Earlier rounds trade power now against the expected power of
//! the rounds that follow; the optimum is tabulated once per configuration
//! as a function of the current gain, normalized to unit pathloss and noise.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harq::{fail_prob, ln_fail_prob, mi_round_stats};
use crate::numeric::{bisect, exp_integral_e1, golden_section, illinois, scan_then_golden, GaussLegendre};

/// Accumulated mutual-information statistics after `r` normalized received
/// power (SNR) is added in one more round.
fn add_round(mu: f64, nu: f64, snr: f64, blocklength: usize) -> (f64, f64) {
    let s = mi_round_stats(snr, snr / (1.0 + snr), blocklength);
    (mu + s.mean, nu + s.var)
}

/// Received SNR that brings the cumulative failure probability from state
/// `(mu, nu)` down to `eps_tar`; zero if it is already there.
pub fn last_round_snr(mu: f64, nu: f64, rate: f64, blocklength: usize, eps_tar: f64) -> f64 {
    let fresh = mu == 0.0 && nu == 0.0;
    let ln_eps = eps_tar.ln();
    if !fresh && ln_fail_prob(rate, mu, nu) <= ln_eps {
        return 0.0;
    }
    let lhs = |v: f64| {
        let (m, n) = add_round(mu, nu, v.exp(), blocklength);
        ln_fail_prob(rate, m, n) - ln_eps
    };
    let mut lo = -30.0;
    let mut hi = 0.0;
    while lhs(lo) <= 0.0 {
        lo -= 10.0;
        if lo < -700.0 {
            return lo.exp();
        }
    }
    while lhs(hi) > 0.0 {
        lo = hi;
        hi += 2.0;
        if hi > 700.0 {
            return f64::INFINITY;
        }
    }
    let (_, up) = illinois(lhs, lo, hi, 1e-13, 200);
    up.exp()
}

/// Exact last-round power for a known gain.
#[allow(clippy::too_many_arguments)]
pub fn last_round_power(
    gain: f64,
    pathloss: f64,
    mu_prev: f64,
    nu_prev: f64,
    rate: f64,
    blocklength: usize,
    eps_tar: f64,
    noise: f64,
) -> Result<f64> {
    if !(gain > 0.0) {
        return Err(Error::Domain(format!("last-round power needs a positive gain, got {gain}")));
    }
    Ok(last_round_snr(mu_prev, nu_prev, rate, blocklength, eps_tar) * noise * pathloss / gain)
}

/// Fade below which a final-round packet is dropped, `-ln(1 - eps_drop)`.
pub fn deep_fade_threshold(eps_drop: f64) -> f64 {
    -(-eps_drop).ln_1p()
}

/// Shared parameters of the power-control problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FblParams {
    pub rate: f64,
    pub blocklength: usize,
    pub eps_tar: f64,
    pub eps_drop: f64,
}

impl FblParams {
    pub fn fade_threshold(&self) -> f64 {
        deep_fade_threshold(self.eps_drop)
    }
}

/// Optimal power of a round followed by exactly one more round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenultimateSolution {
    /// Normalized power (units of `d^a s2`); zero means postpone.
    pub power: f64,
    /// Expected normalized power of this and the final round at `power`.
    pub value: f64,
    /// Expected normalized power if this round is skipped.
    pub skip_value: f64,
    /// Conditional failure probability of this round at `power`.
    pub eps: f64,
}

/// Normalized expected-power objective of the penultimate round at power `p`
/// for gain `gain`. The final round costs `r / z` at its gain `z`, averaged
/// over gains above the deep-fade threshold.
fn penultimate_objective(p: f64, gain: f64, mu: f64, nu: f64, prm: &FblParams, e1: f64) -> f64 {
    let (m, n) = if p > 0.0 { add_round(mu, nu, p * gain, prm.blocklength) } else { (mu, nu) };
    let fresh_before = mu == 0.0 && nu == 0.0;
    let ratio = if p <= 0.0 {
        1.0
    } else if fresh_before {
        fail_prob(prm.rate, m, n)
    } else {
        (ln_fail_prob(prm.rate, m, n) - ln_fail_prob(prm.rate, mu, nu)).exp()
    };
    p + ratio * last_round_snr(m, n, prm.rate, prm.blocklength, prm.eps_tar) * e1
}

/// Minimizes the penultimate-round objective over the normalized power.
pub fn penultimate_solve(gain: f64, mu: f64, nu: f64, prm: &FblParams) -> PenultimateSolution {
    let e1 = exp_integral_e1(prm.fade_threshold());
    let skip = penultimate_objective(0.0, gain, mu, nu, prm, e1);
    if !(gain > 0.0) {
        return PenultimateSolution {
            power: 0.0,
            value: skip,
            skip_value: skip,
            eps: 1.0,
        };
    }
    // search over the received SNR s = p * gain
    let f = |v: f64| penultimate_objective(v.exp() / gain, gain, mu, nu, prm, e1);
    const N: usize = 24;
    let (a, b) = ((1e-3f64).ln(), (1e5f64).ln());
    let step = (b - a) / (N - 1) as f64;
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for i in 0..N {
        let v = f(a + step * i as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let lo = a + step * best_i.saturating_sub(1) as f64;
    let hi = a + step * (best_i + 1).min(N - 1) as f64;
    let (v, val) = golden_section(f, lo, hi, 1e-6, 200);
    let (v, val) = if val <= best { (v, val) } else { (a + step * best_i as f64, best) };
    if val >= skip {
        return PenultimateSolution {
            power: 0.0,
            value: skip,
            skip_value: skip,
            eps: 1.0,
        };
    }
    let p = v.exp() / gain;
    let (m, n) = add_round(mu, nu, p * gain, prm.blocklength);
    let eps = if mu == 0.0 && nu == 0.0 {
        fail_prob(prm.rate, m, n)
    } else {
        (ln_fail_prob(prm.rate, m, n) - ln_fail_prob(prm.rate, mu, nu)).exp()
    };
    PenultimateSolution {
        power: p,
        value: val,
        skip_value: skip,
        eps,
    }
}

/// Penultimate-round power in watts.
#[allow(clippy::too_many_arguments)]
pub fn penultimate_power(
    gain: f64,
    pathloss: f64,
    mu_prev2: f64,
    nu_prev2: f64,
    rate: f64,
    blocklength: usize,
    eps_tar: f64,
    eps_drop: f64,
    noise: f64,
) -> f64 {
    let prm = FblParams {
        rate,
        blocklength,
        eps_tar,
        eps_drop,
    };
    penultimate_solve(gain, mu_prev2, nu_prev2, &prm).power * pathloss * noise
}

/// Largest gain at which `postponed(gain)` holds, assuming it holds below a
/// threshold and fails above it. Returns 0 when it fails at `lo`.
fn knee(postponed: impl Fn(f64) -> bool, lo: f64, hi: f64) -> f64 {
    knee_with(postponed, lo, hi, 1e-10)
}

fn knee_with(postponed: impl Fn(f64) -> bool, lo: f64, hi: f64, tol: f64) -> f64 {
    if !postponed(lo) {
        return 0.0;
    }
    if postponed(hi) {
        return hi;
    }
    let (a, _) = bisect(|v: f64| if postponed(v.exp()) { -1.0 } else { 1.0 }, lo.ln(), hi.ln(), tol, 200);
    a.exp()
}

/// Expected normalized power of the first of two remaining rounds after it
/// failed with state `(mu, nu)`, averaged over the next round's gain.
fn expected_penultimate(mu: f64, nu: f64, prm: &FblParams) -> f64 {
    expected_penultimate_with(mu, nu, prm, GaussLegendre::n32(), 1e-7)
}

fn expected_penultimate_with(mu: f64, nu: f64, prm: &FblParams, rule: &GaussLegendre, knee_tol: f64) -> f64 {
    let upper = -(1e-9f64).ln();
    let zk = knee_with(|z| penultimate_solve(z, mu, nu, prm).power == 0.0, 1e-6, upper, knee_tol);
    let flat = penultimate_solve(zk.max(1e-6), mu, nu, prm).skip_value;
    let below = -(-zk).exp_m1() * flat;
    // tail over z > zk with t = exp(-(z - zk)) on (0, 1]
    let tail = rule.integrate(0.0, 1.0, |t| {
        let z = zk - t.ln();
        penultimate_solve(z, mu, nu, prm).value
    });
    below + (-zk).exp() * tail
}

/// Expected cost after a fresh first round at SNR `s` with two rounds left.
fn first_round_tail(s: f64, prm: &FblParams) -> f64 {
    let (m, n) = add_round(0.0, 0.0, s, prm.blocklength);
    fail_prob(prm.rate, m, n) * expected_penultimate(m, n, prm)
}

/// The continuation cost of a fresh three-round packet depends only on the
/// first-round SNR, so it is tabulated once in `ln s` and interpolated.
struct TailTable {
    lo: f64,
    step: f64,
    h: Vec<f64>,
}

impl TailTable {
    const POINTS: usize = 240;

    fn new(prm: &FblParams) -> Self {
        let (lo, hi) = ((1e-2f64).ln(), (1e3f64).ln());
        let step = (hi - lo) / (Self::POINTS - 1) as f64;
        let h = (0..Self::POINTS)
            .map(|i| first_round_tail((lo + step * i as f64).exp(), prm))
            .collect();
        Self { lo, step, h }
    }

    fn hi(&self) -> f64 {
        self.lo + self.step * (self.h.len() - 1) as f64
    }

    /// Catmull-Rom interpolation in `ln s`.
    fn eval(&self, v: f64) -> f64 {
        let n = self.h.len();
        let x = ((v - self.lo) / self.step).clamp(0.0, (n - 1) as f64);
        let i = (x.floor() as usize).min(n - 2);
        let t = x - i as f64;
        let p1 = self.h[i];
        let p2 = self.h[i + 1];
        let p0 = if i == 0 { 2.0 * p1 - p2 } else { self.h[i - 1] };
        let p3 = if i + 2 < n { self.h[i + 2] } else { 2.0 * p2 - p1 };
        let t2 = t * t;
        0.5 * (2.0 * p1
            + (p2 - p0) * t
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
            + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t2 * t)
    }

    /// Optimal first-round normalized power and its expected cost, or
    /// `(0, skip)` when postponing is cheaper.
    fn solve(&self, gain: f64, prm: &FblParams, skip: f64) -> (f64, f64) {
        let f = |v: f64| v.exp() / gain + self.eval(v);
        let (mut best_i, mut best) = (0, f64::INFINITY);
        for i in 0..self.h.len() {
            let v = (self.lo + self.step * i as f64).exp() / gain + self.h[i];
            if v < best {
                best = v;
                best_i = i;
            }
        }
        let lo = self.lo + self.step * best_i.saturating_sub(1) as f64;
        let hi = (self.lo + self.step * (best_i + 1) as f64).min(self.hi());
        let (v, val) = golden_section(f, lo, hi, 1e-7, 100);
        let v = if val <= best { v } else { self.lo + self.step * best_i as f64 };
        let s = v.exp();
        let exact = s / gain + first_round_tail(s, prm);
        if exact.min(val) >= skip {
            (0.0, skip)
        } else {
            (s / gain, exact)
        }
    }
}

/// Expected normalized power of a fresh three-round packet sent now at
/// normalized power `power`.
pub fn first_of_three_cost(power: f64, gain: f64, prm: &FblParams) -> f64 {
    if power <= 0.0 {
        return expected_penultimate(0.0, 0.0, prm);
    }
    power + first_round_tail(power * gain, prm)
}

/// Optimal first-round power for a fresh packet with three rounds, solved
/// directly on the exact objective. Slow; the curve builder uses a table.
pub fn first_of_three_exact(gain: f64, prm: &FblParams) -> (f64, f64) {
    let skip = expected_penultimate(0.0, 0.0, prm);
    let f = |v: f64| {
        let s = v.exp();
        s / gain + first_round_tail(s, prm)
    };
    let (v, val) = scan_then_golden(f, (1e-2f64).ln(), (1e3f64).ln(), 24, 1e-6, 200);
    if val >= skip {
        (0.0, skip)
    } else {
        (v.exp() / gain, val)
    }
}

/// Tabulated optimal power versus current gain for a fresh packet with
/// `remaining_rounds` rounds after the current one, normalized to unit
/// pathloss and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub remaining_rounds: usize,
    pub rate: f64,
    pub blocklength: usize,
    pub eps_tar: f64,
    pub eps_drop: f64,
    /// `(gain, power)` pairs, gains strictly increasing.
    pub grid: Vec<(f64, f64)>,
    /// Expected normalized power from this round on, per grid point.
    pub values: Vec<f64>,
    /// Gains at or below this get zero power.
    pub postpone_below: f64,
    /// Expected normalized power when the round is postponed.
    pub postpone_value: f64,
}

pub const CURVE_POINTS: usize = 256;

/// Builds the power curve for `remaining_rounds` in `{0, 1, 2}`.
pub fn build_power_curve(remaining_rounds: usize, prm: &FblParams) -> Result<PowerCurve> {
    let lo = prm.fade_threshold();
    let hi = -(1e-9f64).ln();
    let gains: Vec<f64> = (0..CURVE_POINTS)
        .map(|i| lo * (hi / lo).powf(i as f64 / (CURVE_POINTS - 1) as f64))
        .collect();
    let mut curve = PowerCurve {
        remaining_rounds,
        rate: prm.rate,
        blocklength: prm.blocklength,
        eps_tar: prm.eps_tar,
        eps_drop: prm.eps_drop,
        grid: Vec::with_capacity(CURVE_POINTS + 1),
        values: Vec::with_capacity(CURVE_POINTS + 1),
        postpone_below: 0.0,
        postpone_value: f64::INFINITY,
    };
    match remaining_rounds {
        0 => {
            let r = last_round_snr(0.0, 0.0, prm.rate, prm.blocklength, prm.eps_tar);
            for g in gains {
                curve.grid.push((g, r / g));
                curve.values.push(r / g);
            }
        }
        1 => {
            let k = knee(|g| penultimate_solve(g, 0.0, 0.0, prm).power == 0.0, lo, hi);
            curve.postpone_below = k;
            curve.postpone_value = penultimate_solve(lo, 0.0, 0.0, prm).skip_value;
            fill(&mut curve, &gains, k, |g| {
                let s = penultimate_solve(g, 0.0, 0.0, prm);
                (s.power, s.value)
            });
        }
        2 => {
            let skip = expected_penultimate(0.0, 0.0, prm);
            curve.postpone_value = skip;
            let table = TailTable::new(prm);
            let k = knee(|g| table.solve(g, prm, skip).0 == 0.0, lo, hi);
            curve.postpone_below = k;
            fill(&mut curve, &gains, k, |g| table.solve(g, prm, skip));
        }
        r => {
            return Err(Error::Domain(format!(
                "power curves cover at most 2 remaining rounds, got {r}"
            )))
        }
    }
    Ok(curve)
}

/// Fills grid points above the knee, starting with the point just past it.
fn fill(curve: &mut PowerCurve, gains: &[f64], knee: f64, solve: impl Fn(f64) -> (f64, f64)) {
    let mut points: Vec<f64> = gains.iter().copied().filter(|&g| g > knee).collect();
    if knee > 0.0 {
        let just_above = knee * (1.0 + 1e-9);
        if points.first().is_none_or(|&g| g > just_above) {
            points.insert(0, just_above);
        }
    }
    for g in points {
        let (p, v) = solve(g);
        curve.grid.push((g, p));
        curve.values.push(v);
    }
}

fn interpolate(curve: &PowerCurve, gain: f64, ys: impl Fn(usize) -> f64) -> f64 {
    let grid = &curve.grid;
    if gain <= grid[0].0 {
        return ys(0);
    }
    let last = grid.len() - 1;
    if gain >= grid[last].0 {
        return ys(last);
    }
    let i = grid.partition_point(|&(g, _)| g <= gain) - 1;
    let (g0, g1) = (grid[i].0, grid[i + 1].0);
    let t = (gain.ln() - g0.ln()) / (g1.ln() - g0.ln());
    ys(i) + t * (ys(i + 1) - ys(i))
}

impl PowerCurve {
    /// Normalized power at `gain`.
    pub fn normalized_power(&self, gain: f64) -> f64 {
        if self.remaining_rounds > 0 && gain <= self.postpone_below {
            return 0.0;
        }
        interpolate(self, gain, |i| self.grid[i].1)
    }

    /// Normalized expected power from this round on at `gain`.
    pub fn normalized_value(&self, gain: f64) -> f64 {
        if self.remaining_rounds > 0 && gain <= self.postpone_below {
            return self.postpone_value;
        }
        interpolate(self, gain, |i| self.values[i])
    }

    /// Tells whether this curve was built for the given parameters.
    pub fn matches(&self, remaining_rounds: usize, prm: &FblParams) -> bool {
        self.remaining_rounds == remaining_rounds
            && self.rate == prm.rate
            && self.blocklength == prm.blocklength
            && self.eps_tar == prm.eps_tar
            && self.eps_drop == prm.eps_drop
    }
}

/// Transmit power in watts read off a curve.
pub fn lookup_power(curve: &PowerCurve, gain: f64, pathloss: f64, noise: f64) -> f64 {
    curve.normalized_power(gain) * pathloss * noise
}

const CURVE_HEADER: &str = "# noma-harq power curve v1";

pub fn save_power_curve(path: &Path, curve: &PowerCurve) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{CURVE_HEADER}").unwrap();
    writeln!(
        out,
        "remaining_rounds={} rate={:.16e} blocklength={} eps_tar={:.16e} eps_drop={:.16e} postpone_below={:.16e} postpone_value={:.16e}",
        curve.remaining_rounds,
        curve.rate,
        curve.blocklength,
        curve.eps_tar,
        curve.eps_drop,
        curve.postpone_below,
        curve.postpone_value
    )
    .unwrap();
    for (&(g, p), v) in curve.grid.iter().zip(&curve.values) {
        writeln!(out, "{g:.16e} {p:.16e} {v:.16e}").unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_power_curve(path: &Path) -> Result<PowerCurve> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(CURVE_HEADER) {
        return Err(Error::Cache(format!("{}: missing or unknown version header", path.display())));
    }
    let meta = lines
        .next()
        .ok_or_else(|| Error::Cache(format!("{}: missing parameter line", path.display())))?;
    let field = |name: &str| -> Result<&str> {
        meta.split_whitespace()
            .find_map(|kv| kv.strip_prefix(name).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| Error::Cache(format!("{}: missing `{name}`", path.display())))
    };
    let num = |name: &str| -> Result<f64> {
        field(name)?
            .parse()
            .map_err(|_| Error::Cache(format!("{}: bad `{name}`", path.display())))
    };
    let int = |name: &str| -> Result<usize> {
        field(name)?
            .parse()
            .map_err(|_| Error::Cache(format!("{}: bad `{name}`", path.display())))
    };
    let mut curve = PowerCurve {
        remaining_rounds: int("remaining_rounds")?,
        rate: num("rate")?,
        blocklength: int("blocklength")?,
        eps_tar: num("eps_tar")?,
        eps_drop: num("eps_drop")?,
        grid: Vec::new(),
        values: Vec::new(),
        postpone_below: num("postpone_below")?,
        postpone_value: num("postpone_value")?,
    };
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Cache(format!("bad curve line `{line}`")))?;
        let [g, p, v] = nums[..] else {
            return Err(Error::Cache(format!("bad curve line `{line}`")));
        };
        curve.grid.push((g, p));
        curve.values.push(v);
    }
    if curve.grid.len() < 2 || curve.grid.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Cache(format!("{}: gains must be strictly increasing", path.display())));
    }
    Ok(curve)
}

/// File name under which a curve with these parameters is cached.
pub fn curve_file_name(remaining_rounds: usize, prm: &FblParams) -> String {
    format!(
        "curve_l{}_r{}_k{}_e{:e}_d{:e}.txt",
        remaining_rounds, prm.rate, prm.blocklength, prm.eps_tar, prm.eps_drop
    )
}

/// Loads a cached curve from `dir` or builds and stores it.
pub fn load_or_build_curve(dir: Option<&Path>, remaining_rounds: usize, prm: &FblParams) -> Result<PowerCurve> {
    if let Some(dir) = dir {
        let path = dir.join(curve_file_name(remaining_rounds, prm));
        if let Ok(curve) = load_power_curve(&path) {
            if curve.matches(remaining_rounds, prm) {
                return Ok(curve);
            }
        }
        let curve = build_power_curve(remaining_rounds, prm)?;
        std::fs::create_dir_all(dir)?;
        save_power_curve(&path, &curve)?;
        return Ok(curve);
    }
    build_power_curve(remaining_rounds, prm)
}
