//! Two users sharing one slot with successive interference cancellation.
//!
//! Statistical CSI uses a closed-form outage probability over the joint
//! Rayleigh fades of both users. Instantaneous CSI uses the Gaussian
//! mutual-information approximation with a fixed decoding order: the user
//! with the larger received power is decoded first.

use crate::harq::{fail_prob, ln_fail_prob, mi_stats_from_powers, power_for_target};
use crate::numeric::{bisect, golden_section, illinois};

/// Optimal powers for a NOMA pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPowerSolution {
    pub power_a: f64,
    pub power_b: f64,
    pub predicted_eps_a: f64,
    pub predicted_eps_b: f64,
    pub feasible: bool,
    /// NOMA sum power minus the two OMA powers.
    pub extra_cost: f64,
}

impl PairPowerSolution {
    fn infeasible() -> Self {
        Self {
            power_a: f64::NAN,
            power_b: f64::NAN,
            predicted_eps_a: 1.0,
            predicted_eps_b: 1.0,
            feasible: false,
            extra_cost: f64::INFINITY,
        }
    }

    pub fn sum_power(&self) -> f64 {
        self.power_a + self.power_b
    }

    /// The same solution with the roles of the two users exchanged.
    pub fn swapped(self) -> Self {
        Self {
            power_a: self.power_b,
            power_b: self.power_a,
            predicted_eps_a: self.predicted_eps_b,
            predicted_eps_b: self.predicted_eps_a,
            ..self
        }
    }
}

/// Normalized pair parameters: `s = P / (gamma d^a)` and `phi = gamma zeta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    pub s_a: f64,
    pub s_b: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    pub noise: f64,
}

impl PairGeometry {
    pub fn swapped(self) -> Self {
        Self {
            s_a: self.s_b,
            s_b: self.s_a,
            phi_a: self.phi_b,
            phi_b: self.phi_a,
            noise: self.noise,
        }
    }
}

/// Outage probability of user `a` when it shares the slot with `b`.
///
/// User `a` decodes either directly, treating `b` as interference scaled by
/// `zeta_b`, or after `b` was decoded and cancelled.
pub fn pair_error_closed_form(g: PairGeometry) -> f64 {
    let PairGeometry {
        s_a,
        s_b,
        phi_a,
        phi_b,
        noise,
    } = g;
    if s_a <= 0.0 {
        return 1.0;
    }
    if s_b <= 0.0 {
        return -(-noise / s_a).exp_m1();
    }
    let direct = s_a / (s_b * phi_b + s_a);
    let after_sic = s_b / (s_a * phi_a + s_b);
    let mut p = 1.0 - (direct + after_sic * (-noise * (phi_a + 1.0) / s_b).exp()) * (-noise / s_a).exp();
    let det = 1.0 - phi_a * phi_b;
    if det > 0.0 {
        let expo = -noise / det * ((phi_a + 1.0) / s_b + (phi_b + 1.0) / s_a);
        p -= (1.0 - direct - after_sic) * expo.exp();
    }
    p.clamp(0.0, 1.0)
}

/// Residual interference factor after combining prior copies of the
/// interferer, `1 / (1 + sum of their SINRs)`.
pub fn interference_reduction(prior_sinrs: &[f64]) -> f64 {
    1.0 / (1.0 + prior_sinrs.iter().sum::<f64>())
}

/// Relative slack allowed on error constraints.
pub const FEASIBILITY_SLACK: f64 = 1e-6;

/// How far above its OMA minimum the first-decoded user's variable is searched.
const SEARCH_SPAN: f64 = 1e6;
const SCAN_POINTS: usize = 20;
/// Log-step of the upward walk over the weak user's variable.
const WEAK_STEP: f64 = 0.35;

/// Smallest `x` in `(lo, hi]` with `g(x) <= tol`. Walks upward in log
/// steps that start tiny and double up to a cap (feasible windows are often
/// narrow and close to `lo`), then refines the first feasible step by root
/// finding.
fn first_crossing(g: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let mut prev = ln_lo;
    let mut h = 1e-3;
    while prev < ln_hi {
        let v = (prev + h).min(ln_hi);
        if g(v.exp()) <= tol {
            let (_, up) = illinois(|u| g(u.exp()) - 0.5 * tol, prev, v, 1e-13, 100);
            let up = if g(up.exp()) <= tol { up } else { v };
            return Some(up.exp());
        }
        prev = v;
        h = (2.0 * h).min(WEAK_STEP);
    }
    None
}

/// One region of the pair problem: user `s` dominates (`x_s >= x_w`).
/// `err(x_s, x_w)` returns `(eps_s, eps_w)`. For each `x_s` the cheapest
/// `x_w` is the smallest one at which both constraints hold.
struct Region<E> {
    err: E,
    eps: (f64, f64),
    lower: (f64, f64),
    weight: (f64, f64),
}

impl<E: Fn(f64, f64) -> (f64, f64)> Region<E> {
    fn excess_strong(&self, xs: f64, xw: f64) -> f64 {
        ((self.err)(xs, xw).0.max(1e-300) / self.eps.0).ln()
    }

    fn excess_weak(&self, xs: f64, xw: f64) -> f64 {
        ((self.err)(xs, xw).1.max(1e-300) / self.eps.1).ln()
    }

    fn excess(&self, xs: f64, xw: f64) -> f64 {
        let (es, ew) = (self.err)(xs, xw);
        (es.max(1e-300) / self.eps.0).ln().max((ew.max(1e-300) / self.eps.1).ln())
    }

    /// Smallest `x_w` in `[lower, x_s]` meeting both constraints. Neither
    /// error is monotone in `x_w` (a loud weak user blocks the strong one,
    /// a quiet one may not be cancelled). The weak user's own constraint is
    /// located first; only if the strong one fails there is the joint
    /// constraint walked further up.
    fn weak_min(&self, xs: f64) -> Option<f64> {
        let lo = self.lower.1;
        if xs < lo {
            return None;
        }
        let tol = FEASIBILITY_SLACK.ln_1p();
        if self.excess(xs, lo) <= tol {
            return Some(lo);
        }
        let w1 = first_crossing(|x| self.excess_weak(xs, x), lo, xs, tol)?;
        if self.excess_strong(xs, w1) <= tol {
            return Some(w1);
        }
        first_crossing(|x| self.excess(xs, x), w1, xs, tol)
    }

    /// Sum cost at log-variable `v` of the strong user, or infinity.
    fn cost(&self, v: f64) -> f64 {
        let xs = v.exp();
        self.weak_min(xs)
            .map_or(f64::INFINITY, |xw| self.weight.0 * xs + self.weight.1 * xw)
    }

    fn solve(&self) -> Option<(f64, f64)> {
        let start = self.lower.0.max(self.lower.1);
        let (a, b) = (start.ln(), (start * SEARCH_SPAN).ln());
        let step = (b - a) / (SCAN_POINTS - 1) as f64;
        let values: Vec<f64> = (0..SCAN_POINTS).map(|i| self.cost(a + step * i as f64)).collect();
        let (best, &best_val) = values.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1))?;
        if !best_val.is_finite() {
            return None;
        }
        let mut lo = a + step * best.saturating_sub(1) as f64;
        let hi = a + step * (best + 1).min(SCAN_POINTS - 1) as f64;
        if best > 0 && !values[best - 1].is_finite() {
            // the strong user's constraint switches on inside the bracket
            let at = a + step * best as f64;
            lo = bisect(|v| if self.cost(v).is_finite() { 1.0 } else { -1.0 }, lo, at, 1e-7, 100).1;
        }
        let (v, val) = golden_section(|v| self.cost(v), lo, hi, 1e-5, 200);
        let v = if val <= best_val { v } else { a + step * best as f64 };
        let xs = v.exp();
        Some((xs, self.weak_min(xs)?))
    }
}

/// Minimum sum power for a statistical-CSI pair meeting both targets.
#[allow(clippy::too_many_arguments)]
pub fn joint_power_min(
    gamma_a: f64,
    gamma_b: f64,
    target_a: f64,
    target_b: f64,
    pathloss_a: f64,
    pathloss_b: f64,
    zeta_a: f64,
    zeta_b: f64,
    noise: f64,
) -> PairPowerSolution {
    let oma = |g, e, pl| power_for_target(g, e, pl, noise);
    let (Ok(oma_a), Ok(oma_b)) = (oma(gamma_a, target_a, pathloss_a), oma(gamma_b, target_b, pathloss_b)) else {
        return PairPowerSolution::infeasible();
    };
    if gamma_a <= 0.0 || gamma_b <= 0.0 {
        let err = |g: f64, e: f64| if g <= 0.0 { 0.0 } else { e };
        return PairPowerSolution {
            power_a: oma_a,
            power_b: oma_b,
            predicted_eps_a: err(gamma_a, target_a),
            predicted_eps_b: err(gamma_b, target_b),
            feasible: true,
            extra_cost: 0.0,
        };
    }
    // variables are mean received SNRs times noise, x = P / d^a
    let (phi_a, phi_b) = (gamma_a * zeta_a, gamma_b * zeta_b);
    let errors = move |xa: f64, xb: f64| {
        let g = PairGeometry {
            s_a: xa / gamma_a,
            s_b: xb / gamma_b,
            phi_a,
            phi_b,
            noise,
        };
        (pair_error_closed_form(g), pair_error_closed_form(g.swapped()))
    };
    let a_strong = Region {
        err: errors,
        eps: (target_a, target_b),
        lower: (oma_a / pathloss_a, oma_b / pathloss_b),
        weight: (pathloss_a, pathloss_b),
    };
    let b_strong = Region {
        err: move |xb: f64, xa: f64| {
            let (ea, eb) = errors(xa, xb);
            (eb, ea)
        },
        eps: (target_b, target_a),
        lower: (oma_b / pathloss_b, oma_a / pathloss_a),
        weight: (pathloss_b, pathloss_a),
    };
    let first = a_strong.solve();
    let second = b_strong.solve().map(|(xb, xa)| (xa, xb));
    let cost = |s: &Option<(f64, f64)>| s.map_or(f64::INFINITY, |(xa, xb)| xa * pathloss_a + xb * pathloss_b);
    let best = if cost(&first) <= cost(&second) { first } else { second };
    let Some((xa, xb)) = best else {
        return PairPowerSolution::infeasible();
    };
    let (ea, eb) = errors(xa, xb);
    let (pa, pb) = (xa * pathloss_a, xb * pathloss_b);
    PairPowerSolution {
        power_a: pa,
        power_b: pb,
        predicted_eps_a: ea,
        predicted_eps_b: eb,
        feasible: true,
        extra_cost: pa + pb - oma_a - oma_b,
    }
}

/// Error probabilities of a pair under instantaneous CSI with user `a`
/// decoded first. `q` are received powers, `(mu, nu)` the accumulated
/// mutual-information statistics of earlier rounds.
#[allow(clippy::too_many_arguments)]
pub fn fbl_pair_errors(
    q_a: f64,
    q_b: f64,
    rate: f64,
    blocklength: usize,
    noise: f64,
    (mu_a, nu_a): (f64, f64),
    (mu_b, nu_b): (f64, f64),
) -> (f64, f64) {
    let prev = |mu: f64, nu: f64| if mu == 0.0 && nu == 0.0 { 0.0 } else { ln_fail_prob(rate, mu, nu) };
    let ratio = |mu: f64, nu: f64, den: f64| {
        if den == f64::NEG_INFINITY {
            return 1.0;
        }
        (ln_fail_prob(rate, mu, nu) - den).exp().min(1.0)
    };
    let den_a = prev(mu_a, nu_a);
    let den_b = prev(mu_b, nu_b);
    let sa = mi_stats_from_powers(q_a, q_b, noise, blocklength);
    let p_a = ratio(mu_a + sa.mean, nu_a + sa.var, den_a);
    let clean = mi_stats_from_powers(q_b, 0.0, noise, blocklength);
    let dirty = mi_stats_from_powers(q_b, q_a, noise, blocklength);
    let p_clean = ratio(mu_b + clean.mean, nu_b + clean.var, den_b);
    let p_dirty = ratio(mu_b + dirty.mean, nu_b + dirty.var, den_b);
    (p_a, ((1.0 - p_a) * p_clean + p_a * p_dirty).min(1.0))
}

/// Per-user state entering an instantaneous-CSI pair solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FblUser {
    pub gain: f64,
    pub pathloss: f64,
    pub mu: f64,
    pub nu: f64,
    /// Power chosen for this user in a dedicated slot.
    pub oma_power: f64,
    /// Conditional error that the OMA power achieves; the pair must match it.
    pub oma_target: f64,
}

impl FblUser {
    fn received(&self, power: f64) -> f64 {
        power * self.gain / self.pathloss
    }
}

/// Minimum sum power for an instantaneous-CSI pair meeting each user's OMA
/// error. The user with the larger received power is decoded first.
pub fn fbl_joint_power_min(a: &FblUser, b: &FblUser, rate: f64, blocklength: usize, noise: f64) -> PairPowerSolution {
    if a.oma_power <= 0.0 || b.oma_power <= 0.0 || a.oma_target >= 1.0 || b.oma_target >= 1.0 {
        return PairPowerSolution {
            power_a: a.oma_power,
            power_b: b.oma_power,
            predicted_eps_a: a.oma_target,
            predicted_eps_b: b.oma_target,
            feasible: true,
            extra_cost: 0.0,
        };
    }
    let errors_first = |f: &FblUser, s: &FblUser| {
        let (f, s) = (*f, *s);
        move |qf: f64, qs: f64| fbl_pair_errors(qf, qs, rate, blocklength, noise, (f.mu, f.nu), (s.mu, s.nu))
    };
    let region = |f: &FblUser, s: &FblUser| Region {
        err: errors_first(f, s),
        eps: (f.oma_target, s.oma_target),
        lower: (f.received(f.oma_power), s.received(s.oma_power)),
        weight: (f.pathloss / f.gain, s.pathloss / s.gain),
    };
    let first = region(a, b).solve();
    let second = region(b, a).solve().map(|(qb, qa)| (qa, qb));
    let cost = |s: &Option<(f64, f64)>| {
        s.map_or(f64::INFINITY, |(qa, qb)| qa * a.pathloss / a.gain + qb * b.pathloss / b.gain)
    };
    let a_first = cost(&first) <= cost(&second);
    let Some((qa, qb)) = (if a_first { first } else { second }) else {
        return PairPowerSolution::infeasible();
    };
    let (ea, eb) = if a_first {
        errors_first(a, b)(qa, qb)
    } else {
        let (eb, ea) = errors_first(b, a)(qb, qa);
        (ea, eb)
    };
    let (pa, pb) = (qa * a.pathloss / a.gain, qb * b.pathloss / b.gain);
    PairPowerSolution {
        power_a: pa,
        power_b: pb,
        predicted_eps_a: ea,
        predicted_eps_b: eb,
        feasible: true,
        extra_cost: pa + pb - a.oma_power - b.oma_power,
    }
}

/// Which user of an instantaneous-CSI pair is decoded first at the given
/// powers: the one with the larger received power, `a` on ties.
pub fn fbl_a_decoded_first(a: &FblUser, b: &FblUser, power_a: f64, power_b: f64) -> bool {
    a.received(power_a) >= b.received(power_b)
}

/// Single-user conditional error at received power `q`.
pub fn fbl_single_error(q: f64, rate: f64, blocklength: usize, noise: f64, mu: f64, nu: f64) -> f64 {
    let s = mi_stats_from_powers(q, 0.0, noise, blocklength);
    if mu == 0.0 && nu == 0.0 {
        return fail_prob(rate, s.mean, s.var);
    }
    crate::harq::fbl_round_error(rate, mu, nu, s)
}
