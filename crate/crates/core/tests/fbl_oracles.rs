use std::f64::consts::LN_2;
use std::sync::OnceLock;

use approx::assert_relative_eq;
use noma_harq::fbl::{
    build_power_curve, first_of_three_cost, first_of_three_exact, last_round_snr, load_or_build_curve, lookup_power,
    penultimate_power, penultimate_solve, FblParams, PowerCurve,
};
use noma_harq::harq::{fail_prob, mi_round_stats};
use noma_harq::numeric::{exp_integral_e1, golden_section, normal_cdf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn prm() -> FblParams {
    FblParams {
        rate: 1.0,
        blocklength: 50,
        eps_tar: 1e-5,
        eps_drop: 1e-6,
    }
}

fn curves() -> &'static [PowerCurve; 3] {
    static CURVES: OnceLock<[PowerCurve; 3]> = OnceLock::new();
    CURVES.get_or_init(|| {
        let p = prm();
        [0, 1, 2].map(|r| build_power_curve(r, &p).unwrap())
    })
}

/// Penultimate objective written out from scratch: pay `p` now, and with the
/// conditional failure probability pay the final round averaged over gains
/// above the deep-fade threshold.
fn objective(p: f64, gain: f64, mu: f64, nu: f64, prm: &FblParams) -> f64 {
    let (m, n) = if p > 0.0 {
        let st = mi_round_stats(p * gain, p * gain / (1.0 + p * gain), prm.blocklength);
        (mu + st.mean, nu + st.var)
    } else {
        (mu, nu)
    };
    let before = if mu == 0.0 && nu == 0.0 { 1.0 } else { fail_prob(prm.rate, mu, nu) };
    let ratio = fail_prob(prm.rate, m, n) / before;
    let rho = last_round_snr(m, n, prm.rate, prm.blocklength, prm.eps_tar);
    let z_fade = -(-prm.eps_drop).ln_1p();
    p + ratio * rho * exp_integral_e1(z_fade)
}

fn oracle_min(gain: f64, mu: f64, nu: f64, prm: &FblParams) -> f64 {
    let f = |v: f64| objective(v.exp(), gain, mu, nu, prm);
    let (a, b) = ((1e-5 / gain).ln(), (1e6 / gain).ln());
    let n = 2000;
    let step = (b - a) / n as f64;
    let mut best = (a, f(a));
    for i in 1..=n {
        let v = a + step * i as f64;
        let y = f(v);
        if y < best.1 {
            best = (v, y);
        }
    }
    let (_, refined) = golden_section(f, best.0 - step, best.0 + step, 1e-10, 300);
    refined.min(best.1).min(objective(0.0, gain, mu, nu, prm))
}

#[test]
fn last_round_lhs_is_strictly_decreasing() {
    let p = prm();
    for &(mu, nu) in &[(0.0, 0.0), (0.2, 0.01), (0.5, 0.04)] {
        let mut prev = f64::INFINITY;
        for i in 0..400 {
            let rho = 1e-3 * 1.05f64.powi(i);
            let st = mi_round_stats(rho, rho / (1.0 + rho), p.blocklength);
            let lhs = normal_cdf(p.rate * LN_2, mu + st.mean, nu + st.var);
            assert!(lhs <= prev, "lhs rose at rho {rho}");
            prev = lhs;
        }
    }
}

#[test]
fn penultimate_matches_golden_section_oracle() {
    let p = prm();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let gain = (rng.random_range(-4.0f64..3.0)).exp();
        let (mu, nu) = if rng.random_bool(0.3) {
            (0.0, 0.0)
        } else {
            let s: f64 = rng.random_range(0.01..2.0);
            let st = mi_round_stats(s, s / (1.0 + s), p.blocklength);
            (st.mean, st.var)
        };
        let sol = penultimate_solve(gain, mu, nu, &p);
        let got = objective(sol.power, gain, mu, nu, &p);
        let best = oracle_min(gain, mu, nu, &p);
        assert!(
            got <= best * 1.005,
            "gain {gain} state ({mu}, {nu}): solver {got}, oracle {best}"
        );
        assert_relative_eq!(sol.value, got, max_relative = 1e-9);
    }
}

#[test]
fn good_channels_approach_one_shot_cost() {
    let p = prm();
    let g = 50.0;
    let sol = penultimate_solve(g, 0.0, 0.0, &p);
    let one_shot = last_round_snr(0.0, 0.0, p.rate, p.blocklength, p.eps_tar) / g;
    assert!(sol.power > 0.0);
    assert!(sol.value <= one_shot);
    assert!(sol.eps < 1e-2, "failure mass {}", sol.eps);
}

#[test]
fn curve_shapes() {
    let [c0, c1, c2] = curves();
    assert_eq!(c0.postpone_below, 0.0);
    assert!(c0.grid.iter().all(|&(_, p)| p > 0.0));
    assert!(c1.postpone_below > 0.0);
    assert!(c2.postpone_below >= c1.postpone_below);
    for c in [c0, c1, c2] {
        assert!(c.grid.windows(2).all(|w| w[0].0 < w[1].0));
        let above: Vec<f64> = c
            .grid
            .iter()
            .filter(|&&(g, _)| g > c.postpone_below)
            .map(|&(_, p)| p)
            .collect();
        assert!(!above.is_empty());
        // past the knee the optimum leaves zero continuously before joining
        // the decreasing branch, so monotonicity starts at the peak
        let peak = (0..above.len()).max_by(|&i, &j| above[i].total_cmp(&above[j])).unwrap();
        let g_peak = c.grid[c.grid.len() - above.len() + peak].0;
        if c.remaining_rounds == 0 {
            assert_eq!(peak, 0);
        } else {
            assert!(g_peak < 2.0 * c.postpone_below, "peak at {g_peak}");
        }
        for w in above[peak..].windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-6), "power rose: {} -> {}", w[0], w[1]);
        }
        if c.remaining_rounds > 0 {
            assert_eq!(c.normalized_power(c.postpone_below), 0.0);
            assert_eq!(c.normalized_power(c.postpone_below * 0.5), 0.0);
            assert!(c.normalized_power(c.postpone_below * 1.01) > 0.0);
        }
    }
}

#[test]
fn fresh_penultimate_equals_curve_lookup() {
    let p = prm();
    let c1 = &curves()[1];
    for &(g, power) in c1.grid.iter().step_by(17) {
        let direct = penultimate_power(g, 1.0, 0.0, 0.0, p.rate, p.blocklength, p.eps_tar, p.eps_drop, 1.0);
        let looked_up = lookup_power(c1, g, 1.0, 1.0);
        assert_eq!(looked_up, power);
        assert_relative_eq!(direct, looked_up, max_relative = 1e-6);
    }
}

#[test]
fn three_round_curve_matches_direct_minimization() {
    let p = prm();
    let c2 = &curves()[2];
    let n = c2.grid.len();
    for i in [1, n / 8, n / 4, n / 2, 3 * n / 4, n - 1] {
        let (g, power) = c2.grid[i];
        let (direct_power, direct_value) = first_of_three_exact(g, &p);
        assert_relative_eq!(c2.values[i], direct_value, max_relative = 1e-3);
        // the objective is flat around its minimum, so compare costs
        let at_curve = first_of_three_cost(power, g, &p);
        assert!(at_curve <= direct_value * (1.0 + 1e-4), "{at_curve} vs {direct_value}");
        assert!(direct_power > 0.0);
    }
}

#[test]
fn lookup_scales_with_pathloss_and_noise() {
    for c in curves() {
        for &(g, power) in c.grid.iter().step_by(31) {
            assert_relative_eq!(lookup_power(c, g, 400.0, 1e-13), power * 400.0 * 1e-13, max_relative = 1e-12);
        }
    }
}

#[test]
fn cached_curves_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = prm();
    let built = load_or_build_curve(Some(dir.path()), 1, &p).unwrap();
    let loaded = load_or_build_curve(Some(dir.path()), 1, &p).unwrap();
    assert_eq!(built, loaded);
    assert_eq!(&built, &curves()[1]);
}
