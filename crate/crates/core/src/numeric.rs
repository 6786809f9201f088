//! Small numerical toolbox shared by the solvers: Gaussian CDF in linear and
//! log domain, bracketed root finding, golden-section minimization,
//! Gauss–Legendre quadrature and the exponential integral `E1`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

/// Standard normal CDF `Φ(z)`.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// `ln Φ(z)`, finite for arguments far into the lower tail.
pub fn ln_std_normal_cdf(z: f64) -> f64 {
    if z > -30.0 {
        let p = std_normal_cdf(z);
        if z > 0.0 {
            // ln(1 - q) for small upper tail mass q
            (-(0.5 * libm::erfc(z * FRAC_1_SQRT_2))).ln_1p()
        } else {
            p.ln()
        }
    } else {
        // asymptotic series of the Mills ratio
        let z2 = z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..8 {
            term *= -((2 * k - 1) as f64) / z2;
            sum += term;
        }
        -0.5 * z2 - (-z).ln() - 0.5 * (2.0 * PI).ln() + sum.ln()
    }
}

/// Gaussian CDF `F_N(x; mean, var)`. A zero variance degenerates to the step
/// `1{x >= mean}`.
pub fn normal_cdf(x: f64, mean: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return if x >= mean { 1.0 } else { 0.0 };
    }
    std_normal_cdf((x - mean) / var.sqrt())
}

/// `ln F_N(x; mean, var)`; `-inf` for the degenerate zero-variance miss.
pub fn ln_normal_cdf(x: f64, mean: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return if x >= mean { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_std_normal_cdf((x - mean) / var.sqrt())
}

/// Bisection on a bracket `[lo, hi]` where `f(lo)` and `f(hi)` have opposite
/// signs. Stops when the bracket is narrower than `rel_tol * |hi|` or after
/// `max_iter` halvings. Returns the final bracket.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let mut f_lo = f(lo);
    for _ in 0..max_iter {
        if (hi - lo).abs() <= rel_tol * hi.abs().max(lo.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return (mid, mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Illinois-modified regula falsi. Same contract as [`bisect`] but converges
/// superlinearly on smooth monotone functions; falls back to halving when the
/// secant step stalls.
pub fn illinois<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    abs_tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return (lo, lo);
    }
    if f_hi == 0.0 {
        return (hi, hi);
    }
    let mut side = 0i8;
    for _ in 0..max_iter {
        if (hi - lo).abs() <= abs_tol {
            break;
        }
        let mut x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !x.is_finite() || x <= lo.min(hi) || x >= lo.max(hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return (x, x);
        }
        if (fx < 0.0) == (f_lo < 0.0) {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    (lo, hi)
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    abs_tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= abs_tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Coarse scan over `n` evenly spaced points of `[a, b]` followed by a golden
/// refinement inside the bracket around the best sample. Robust against
/// objectives that are only locally unimodal.
pub fn scan_then_golden<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    n: usize,
    abs_tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let n = n.max(3);
    let step = (b - a) / (n - 1) as f64;
    let mut best = (a, f64::INFINITY);
    let mut best_i = 0;
    for i in 0..n {
        let x = a + step * i as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    if !best.1.is_finite() {
        return best;
    }
    let lo = a + step * best_i.saturating_sub(1) as f64;
    let hi = (a + step * (best_i + 1) as f64).min(b);
    let refined = golden_section(&mut f, lo, hi, abs_tol, max_iter);
    if refined.1 < best.1 {
        refined
    } else {
        best
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 200-point rule.
    pub fn n200() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(200))
    }

    /// Shared 64-point rule.
    pub fn n64() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(64))
    }

    /// Shared 32-point rule.
    pub fn n32() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(32))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    assert!(x > 0.0, "E1 is defined for positive arguments");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // modified Lentz continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}
