//! Independent oracles shared by the integration and acceptance tests. None of
//! these call into the library's normal-math routines.
#![allow(dead_code)]

use devlab_core::policies::MyopicCase;
use devlab_core::Belief;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`, split into `pieces`
/// panels first so that peaked integrands are resolved.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, pieces: usize) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (lo, hi) = (a + h * i as f64, a + h * (i + 1) as f64);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson(&f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, 30)
        })
        .sum()
}

/// E[z | lo < z < hi] by quadrature of the density rescaled to peak at 1.
/// Infinite ends are cut 40 standard deviations past the peak.
pub fn quad_truncated_mean(lo: f64, hi: f64) -> f64 {
    let peak = if lo > 0.0 {
        lo
    } else if hi < 0.0 {
        hi
    } else {
        0.0
    };
    let a = if lo.is_finite() { lo } else { peak - 40.0 };
    let b = if hi.is_finite() { hi } else { peak + 40.0 };
    // Work in offsets from the peak so that the rescaled density stays O(1).
    let g = |s: f64| (-0.5 * s * (2.0 * peak + s)).exp();
    let (sa, sb) = (a - peak, b - peak);
    let tol = 1e-14 * (sb - sa).min(3.0);
    let mass = integrate(g, sa, sb, tol, 64);
    let moment = integrate(|s| s * g(s), sa, sb, tol, 64);
    peak + moment / mass
}

/// Φ(x) from libm's erfc, kept separate from the library's wrappers.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Monte Carlo estimate of the myopic user's expected payoff under a
/// threshold `rho`: θ ~ Unif[l, u], z ~ N(0, 1), message +1 iff z > ρ, and
/// the user picks arm +1 iff x θ + E[z | message] > 0.
pub fn mc_myopic_value(rho: f64, x: f64, belief: &Belief, samples: usize, seed: u64) -> McEstimate {
    let z_plus = quad_truncated_mean(rho, f64::INFINITY);
    let z_minus = quad_truncated_mean(f64::NEG_INFINITY, rho);
    let mut r = rng(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let theta = belief.lower() + belief.width() * r.random::<f64>();
        let z: f64 = r.sample(StandardNormal);
        let z_mean = if z > rho { z_plus } else { z_minus };
        let payoff = if x * theta + z_mean > 0.0 { x * theta + z } else { 0.0 };
        sum += payoff;
        sum_sq += payoff * payoff;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    McEstimate {
        mean,
        std_err: (var / n).sqrt(),
    }
}

/// The same expectation with z integrated out in closed form per message and
/// θ integrated by quadrature between the user's switching points.
pub fn exact_myopic_value(rho: f64, x: f64, belief: &Belief) -> f64 {
    let (p_plus, p_minus) = (1.0 - cdf(rho), cdf(rho));
    let z_plus = quad_truncated_mean(rho, f64::INFINITY);
    let z_minus = quad_truncated_mean(f64::NEG_INFINITY, rho);
    let dens = pdf(rho);
    let f = |t: f64| {
        let mut v = 0.0;
        if x * t + z_plus > 0.0 {
            v += x * t * p_plus + dens;
        }
        if x * t + z_minus > 0.0 {
            v += x * t * p_minus - dens;
        }
        v
    };
    let (l, u) = (belief.lower(), belief.upper());
    let mut cuts = vec![l, u];
    for c in [-z_plus / x, -z_minus / x] {
        if l < c && c < u {
            cuts.push(c);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let total: f64 = cuts
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], 1e-15, 8))
        .sum();
    total / (u - l)
}

/// Random (ρ, x, belief) points covering each of the six payoff cases, with
/// `quota[k]` points in case k + 1 and alternating context signs.
pub fn myopic_case_points(quota: [usize; 6], seed: u64) -> Vec<(f64, f64, Belief, MyopicCase)> {
    let mut r = rng(seed);
    let mut counts = [0usize; 6];
    let mut out = Vec::new();
    let mut attempts = 0u64;
    while counts.iter().zip(&quota).any(|(c, q)| c < q) {
        attempts += 1;
        assert!(attempts < 10_000_000, "could not cover all cases: {counts:?}");
        let a: f64 = r.random_range(-1.0..1.0);
        let b = r.random_range(-1.0..1.0);
        if (a - b).abs() < 1e-3 {
            continue;
        }
        let belief = Belief::new(f64::min(a, b), f64::max(a, b)).unwrap();
        let sign = if out.len() % 2 == 0 { 1.0 } else { -1.0 };
        let x = sign * r.random_range(0.1..4.0);
        let rho = r.random_range(-4.0..4.0);
        let (_, case) = devlab_core::policies::myopic_value_and_case(rho, x, &belief).unwrap();
        let k = case.number() as usize - 1;
        if counts[k] < quota[k] {
            counts[k] += 1;
            out.push((rho, x, belief, case));
        }
    }
    out
}
