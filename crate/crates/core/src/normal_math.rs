//! Standard-normal primitives and truncated-normal conditional means.
//!
//! Every conditional expectation a user forms about the recommender's private
//! signal is the mean of a standard normal restricted to an interval. Those
//! intervals routinely sit deep in a tail (large `|x|` contexts) or are very
//! narrow (ternary policy with a tight belief), so the ratios below are never
//! formed from raw `pdf / cdf` values where either could underflow.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use libm::erfc;

use crate::error::{Error, Result};

/// 1/sqrt(2π).
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// E[z | z > 0] for z ~ N(0,1), i.e. sqrt(2/π).
pub const HALF_NORMAL_MEAN: f64 = 0.797_884_560_802_865_4;

/// Above this bound the Mills ratio switches to its continued fraction.
const TAIL_SWITCH: f64 = 8.0;

/// Windows with `width * max(|lower|, |upper|)` below this are integrated by
/// Gauss-Legendre instead of differencing cdf values.
const NARROW_WINDOW: f64 = 2.0;

const GAUSS_LEGENDRE_POINTS: usize = 24;

/// Standard normal density.
#[inline]
pub fn std_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function Φ(x).
#[inline]
pub fn std_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail 1 - Φ(x), accurate in relative terms for large `x`.
#[inline]
pub fn std_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Mills ratio (1 - Φ(a)) / φ(a).
///
/// For `a > 8` this uses Laplace's continued fraction
/// `1 / (a + 1/(a + 2/(a + 3/(a + ...))))`, which stays bounded between
/// `a / (a² + 1)` and `1 / a` and never touches an underflowing density.
pub fn mills_ratio(a: f64) -> f64 {
    if a > TAIL_SWITCH {
        let mut tail = a;
        for k in (1..=40).rev() {
            tail = a + k as f64 / tail;
        }
        1.0 / tail
    } else {
        std_sf(a) / std_pdf(a)
    }
}

/// Hazard φ(a) / (1 - Φ(a)), which equals E[z | z > a].
pub fn upper_tail_mean(a: f64) -> f64 {
    if a > TAIL_SWITCH {
        1.0 / mills_ratio(a)
    } else {
        // φ underflows to 0 for a < -38.6 and the mean correctly tends to 0.
        std_pdf(a) / std_sf(a)
    }
}

/// E[z | z < b] = -φ(b) / Φ(b).
#[inline]
pub fn lower_tail_mean(b: f64) -> f64 {
    -upper_tail_mean(-b)
}

/// The support `(lower, upper)` of a truncated standard normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationWindow {
    lower: f64,
    upper: f64,
}

impl TruncationWindow {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower >= upper {
            return Err(Error::InvalidWindow { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    pub fn below(upper: f64) -> Result<Self> {
        Self::new(f64::NEG_INFINITY, upper)
    }

    pub fn above(lower: f64) -> Result<Self> {
        Self::new(lower, f64::INFINITY)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, z: f64) -> bool {
        self.lower < z && z < self.upper
    }
}

/// E[z | lower < z < upper] for z ~ N(0,1).
pub fn truncated_mean(window: TruncationWindow) -> f64 {
    let (lo, hi) = (window.lower, window.upper);
    match (lo.is_finite(), hi.is_finite()) {
        (false, false) => 0.0,
        (false, true) => lower_tail_mean(hi),
        (true, false) => upper_tail_mean(lo),
        (true, true) => bounded_mean(lo, hi),
    }
}

fn bounded_mean(lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    let reach = lo.abs().max(hi.abs());
    if width * reach <= NARROW_WINDOW {
        return narrow_mean(lo, hi);
    }
    if lo >= 0.0 {
        // (φ(l) - φ(u)) / (Q(l) - Q(u)) with everything divided by φ(l).
        let ratio = (-0.5 * width * (hi + lo)).exp();
        (1.0 - ratio) / (mills_ratio(lo) - ratio * mills_ratio(hi))
    } else if hi <= 0.0 {
        -bounded_mean(-hi, -lo)
    } else {
        (std_pdf(lo) - std_pdf(hi)) / (std_cdf(hi) - std_cdf(lo))
    }
}

/// Gauss-Legendre on the window, with the density rescaled by φ(center) so
/// that deep-tail windows do not underflow.
fn narrow_mean(lo: f64, hi: f64) -> f64 {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut mass = 0.0;
    let mut moment = 0.0;
    for &(node, weight) in gauss_legendre() {
        let offset = half * node;
        let density = weight * (-0.5 * offset * (2.0 * center + offset)).exp();
        mass += density;
        moment += density * node;
    }
    center + half * (moment / mass)
}

/// Nodes and weights on [-1, 1], computed once by Newton iteration on the
/// Legendre polynomial.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GAUSS_LEGENDRE_POINTS;
        let mut rule = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut derivative = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                derivative = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / derivative;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let weight = 2.0 / ((1.0 - x * x) * derivative * derivative);
            rule.push((x, weight));
        }
        rule
    })
}

/// Threshold `c(y)` that makes the exploratory message leave the user exactly
/// at the recommender's point estimate.
///
/// For `y > 0` it solves φ(c)/Φ(c) = y (so E[z | z < c] = -y); for `y < 0` it
/// solves φ(c)/(1 - Φ(c)) = -y (so E[z | z > c] = -y). `c(0)` is pinned to 0.
/// The two branches are mirror images, so negative inputs are reflected.
pub fn eve_threshold(y: f64) -> f64 {
    if y == 0.0 || y.is_nan() {
        return 0.0;
    }
    if y < 0.0 {
        return -eve_threshold(-y);
    }
    // φ(c)/Φ(c) is strictly decreasing in c.
    let hazard = |c: f64| upper_tail_mean(-c);
    let mut lo = -1.0_f64;
    while hazard(lo) < y {
        lo *= 2.0;
    }
    let mut hi = 1.0_f64;
    while hazard(hi) > y && hi < 64.0 {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if hazard(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
