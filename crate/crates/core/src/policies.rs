//! Signal functions: how the recommender maps her private signal `z` to a
//! message, and the conditional mean `Z` a rational user infers from it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::normal_math::{
    eve_threshold, lower_tail_mean, std_cdf, std_pdf, std_sf, truncated_mean, upper_tail_mean,
    TruncationWindow,
};
use crate::types::Message;

/// Default on-the-fence scale, ε = C_ε · w.
pub const DEFAULT_C_EPS: f64 = 0.25;

/// Golden-section termination width in ρ.
const GOLDEN_TOL: f64 = 1e-10;

/// Margin added beyond the outermost case boundary when a case region is
/// unbounded; φ(12) ≈ 6e-32 so V is flat beyond it.
const SEARCH_MARGIN: f64 = 12.0;

/// Coarse points scanned before each golden-section run.
const SCAN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    Straightforward,
    Ternary { c_eps: f64 },
    Myopic,
    /// Exploration while `w > 1/sqrt(horizon)`, then straightforward.
    Eve { horizon: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Straightforward,
    Ternary,
    Myopic,
    Eve,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Straightforward,
        PolicyKind::Ternary,
        PolicyKind::Myopic,
        PolicyKind::Eve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Straightforward => "straightforward",
            PolicyKind::Ternary => "ternary",
            PolicyKind::Myopic => "myopic",
            PolicyKind::Eve => "eve",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "straightforward" => Ok(PolicyKind::Straightforward),
            "ternary" => Ok(PolicyKind::Ternary),
            "myopic" => Ok(PolicyKind::Myopic),
            "eve" => Ok(PolicyKind::Eve),
            other => Err(Error::Config(format!("unknown policy `{other}`"))),
        }
    }
}

impl PolicySpec {
    /// Builds a spec from a kind plus the parameters it may need.
    pub fn from_kind(kind: PolicyKind, c_eps: f64, horizon: u64) -> Result<Self> {
        let spec = match kind {
            PolicyKind::Straightforward => PolicySpec::Straightforward,
            PolicyKind::Ternary => PolicySpec::Ternary { c_eps },
            PolicyKind::Myopic => PolicySpec::Myopic,
            PolicyKind::Eve => PolicySpec::Eve { horizon },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// EvE locked in its exploration phase, for single-round experiments.
    pub fn eve_exploration() -> Self {
        PolicySpec::Eve { horizon: u64::MAX }
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            PolicySpec::Straightforward => PolicyKind::Straightforward,
            PolicySpec::Ternary { .. } => PolicyKind::Ternary,
            PolicySpec::Myopic => PolicyKind::Myopic,
            PolicySpec::Eve { .. } => PolicyKind::Eve,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PolicySpec::Ternary { c_eps } if !(c_eps > 0.0 && c_eps.is_finite()) => Err(
                Error::Config(format!("c_eps must be positive and finite, got {c_eps}")),
            ),
            PolicySpec::Eve { horizon: 0 } => Err(Error::Config("EvE horizon must be >= 1".into())),
            _ => Ok(()),
        }
    }

    /// Commits to this round's signal function and applies it to `z`.
    pub fn signal(&self, belief: &Belief, x: f64, z: f64) -> SignalRealization {
        match *self {
            PolicySpec::Straightforward => straightforward_signal(belief, x, z),
            PolicySpec::Ternary { c_eps } => ternary_signal(belief, x, z, c_eps),
            PolicySpec::Myopic => myopic_signal(belief, x, z),
            PolicySpec::Eve { horizon } => eve_signal(belief, x, z, horizon),
        }
    }
}

/// Cutoffs of the signal function that produced a message.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cutoff {
    /// Binary threshold policy: +1 iff z > ρ.
    Threshold(f64),
    /// Ternary: -1 below the first cutoff, 0 between, +1 above the second.
    Band(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalRealization {
    pub message: Message,
    /// Z = E[z | signal function, message].
    pub z_mean: f64,
    pub cutoff: Cutoff,
    /// EvE exploration phase was active.
    pub exploring: bool,
}

impl SignalRealization {
    /// The support of z implied by the message.
    pub fn window(&self) -> (f64, f64) {
        match (self.cutoff, self.message) {
            (Cutoff::Threshold(rho), Message::Plus) => (rho, f64::INFINITY),
            (Cutoff::Threshold(rho), _) => (f64::NEG_INFINITY, rho),
            (Cutoff::Band(_, hi), Message::Plus) => (hi, f64::INFINITY),
            (Cutoff::Band(lo, hi), Message::Fence) => (lo, hi),
            (Cutoff::Band(lo, _), Message::Minus) => (f64::NEG_INFINITY, lo),
        }
    }
}

/// Binary threshold signal: +1 iff z > ρ, with the matching one-sided mean.
pub fn threshold_signal(rho: f64, z: f64) -> SignalRealization {
    let (message, z_mean) = if z > rho {
        (Message::Plus, upper_tail_mean(rho))
    } else {
        (Message::Minus, lower_tail_mean(rho))
    };
    SignalRealization {
        message,
        z_mean,
        cutoff: Cutoff::Threshold(rho),
        exploring: false,
    }
}

/// Recommends the arm with the higher estimated payoff `x m + z`.
pub fn straightforward_signal(belief: &Belief, x: f64, z: f64) -> SignalRealization {
    threshold_signal(-x * belief.midpoint(), z)
}

/// Straightforward plus an on-the-fence message when `|x m + z| < ε`,
/// `ε = c_eps · w`.
pub fn ternary_signal(belief: &Belief, x: f64, z: f64, c_eps: f64) -> SignalRealization {
    let eps = c_eps * belief.width();
    let center = -x * belief.midpoint();
    let (lo, hi) = (center - eps, center + eps);
    let estimate = x * belief.midpoint() + z;
    let (message, z_mean) = if estimate > eps {
        (Message::Plus, upper_tail_mean(hi))
    } else if estimate < -eps {
        (Message::Minus, lower_tail_mean(lo))
    } else {
        let z_mean = match TruncationWindow::new(lo, hi) {
            Ok(window) => truncated_mean(window),
            // ε below the spacing of floats around the center.
            Err(_) => center,
        };
        (Message::Fence, z_mean)
    };
    SignalRealization {
        message,
        z_mean,
        cutoff: Cutoff::Band(lo, hi),
        exploring: false,
    }
}

/// Exploration (ρ = c(x m)) while the belief is wider than `1/sqrt(horizon)`,
/// straightforward afterwards.
pub fn eve_signal(belief: &Belief, x: f64, z: f64, horizon: u64) -> SignalRealization {
    let exploring = eve_explores(belief.width(), horizon);
    let estimate = x * belief.midpoint();
    let rho = if exploring {
        eve_threshold(estimate)
    } else {
        -estimate
    };
    SignalRealization {
        exploring,
        ..threshold_signal(rho, z)
    }
}

/// Phase test `w > 1/sqrt(T)`. Widths within 1e-12 (relative) of the
/// boundary count as exploitation so that e.g. `0.50 - 0.49` with `T = 10^4`
/// is not pushed over by rounding.
pub fn eve_explores(width: f64, horizon: u64) -> bool {
    width > (1.0 + 1e-12) / (horizon as f64).sqrt()
}

/// The six regimes of the myopic payoff `V(ρ)` for `x > 0`, determined by
/// where `x l` and `x u` fall relative to `-E[z | z > ρ]` and `-E[z | z < ρ]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MyopicCase {
    /// Users may deviate from either message.
    DeviateBoth = 1,
    /// Users may deviate only from +1.
    DeviateFromPlus = 2,
    /// Users may deviate only from -1.
    DeviateFromMinus = 3,
    /// Users always follow the message.
    Obedient = 4,
    /// Users always take +1.
    AlwaysPlus = 5,
    /// Users always take -1.
    AlwaysMinus = 6,
}

impl MyopicCase {
    pub fn number(self) -> u8 {
        self as u8
    }

    fn is_informative(self) -> bool {
        !matches!(self, MyopicCase::AlwaysPlus | MyopicCase::AlwaysMinus)
    }
}

/// Quantities of the threshold signal at ρ shared by all cases.
#[derive(Debug, Clone, Copy)]
struct ThresholdStats {
    pdf: f64,
    cdf: f64,
    /// 1 - Φ(ρ)
    sf: f64,
    /// E[z | z > ρ]
    above: f64,
    /// -E[z | z < ρ] = φ(ρ)/Φ(ρ)
    below: f64,
}

impl ThresholdStats {
    fn at(rho: f64) -> Self {
        Self {
            pdf: std_pdf(rho),
            cdf: std_cdf(rho),
            sf: std_sf(rho),
            above: upper_tail_mean(rho),
            below: upper_tail_mean(-rho),
        }
    }

    fn case(&self, x: f64, lower: f64, upper: f64) -> MyopicCase {
        let (xl, xu) = (x * lower, x * upper);
        if self.below < xl {
            MyopicCase::AlwaysPlus
        } else if xu < -self.above {
            MyopicCase::AlwaysMinus
        } else {
            match (xl < -self.above, self.below < xu) {
                (true, true) => MyopicCase::DeviateBoth,
                (false, true) => MyopicCase::DeviateFromPlus,
                (true, false) => MyopicCase::DeviateFromMinus,
                (false, false) => MyopicCase::Obedient,
            }
        }
    }
}

/// Expected payoff of the current user under threshold ρ, averaged over
/// θ ~ Unif[l, u] and z ~ N(0,1).
///
/// For `x < 0` the problem is identical to `(-x, -u, -l)` under θ ↦ -θ, since
/// the user's payoff only involves the product `x θ`.
pub fn myopic_value(rho: f64, x: f64, belief: &Belief) -> Result<f64> {
    Ok(myopic_value_and_case(rho, x, belief)?.0)
}

/// [`myopic_value`] together with the regime it was evaluated in (reported in
/// the reflected frame when `x < 0`).
pub fn myopic_value_and_case(rho: f64, x: f64, belief: &Belief) -> Result<(f64, MyopicCase)> {
    if x == 0.0 {
        return Err(Error::ZeroContext { op: "myopic_value" });
    }
    if !x.is_finite() || !rho.is_finite() {
        return Err(Error::NonFinite { op: "myopic_value", value: if x.is_finite() { rho } else { x } });
    }
    let (x, lower, upper) = positive_frame(x, belief);
    let stats = ThresholdStats::at(rho);
    let case = stats.case(x, lower, upper);
    Ok((value_in_case(&stats, case, x, lower, upper), case))
}

fn positive_frame(x: f64, belief: &Belief) -> (f64, f64, f64) {
    if x > 0.0 {
        (x, belief.lower(), belief.upper())
    } else {
        (-x, -belief.upper(), -belief.lower())
    }
}

/// Closed forms of the six cases. The partial θ-integrals are kept in
/// factored form `(b - a)·(...)` so narrow beliefs do not cancel.
fn value_in_case(s: &ThresholdStats, case: MyopicCase, x: f64, lower: f64, upper: f64) -> f64 {
    let width = upper - lower;
    let mid = 0.5 * (lower + upper);
    let cdf = s.cdf;
    // Case 4: both messages obeyed for every θ.
    let obedient = x * mid * s.sf + s.pdf;
    // θ ∈ [l, -E[z|z>ρ]/x] would take -1 after +1: remove their +1 payoff.
    let cut_plus = || {
        let a = -s.above / x;
        (a - lower) * (x * s.sf * 0.5 * (a + lower) + s.pdf) / width
    };
    // θ ∈ [φ/(xΦ), u] take +1 even after -1: add that payoff.
    let add_minus = || {
        let b = s.below / x;
        (upper - b) * (x * cdf * 0.5 * (upper + b) - s.pdf) / width
    };
    match case {
        MyopicCase::DeviateBoth => obedient - cut_plus() + add_minus(),
        MyopicCase::DeviateFromPlus => obedient + add_minus(),
        MyopicCase::DeviateFromMinus => obedient - cut_plus(),
        MyopicCase::Obedient => obedient,
        MyopicCase::AlwaysPlus => x * mid,
        MyopicCase::AlwaysMinus => 0.0,
    }
}

/// The myopically optimal threshold ρ* = argmax_ρ V(ρ; x, l, u).
///
/// Case boundaries in ρ are exactly `c(x l)` and `c(x u)` (the Mills-ratio
/// conditions inverted by [`eve_threshold`]). On each region between
/// boundaries V is smooth: in Case 1 its maximizer is ρ = 0, in Case 4 it is
/// ρ = -x m (both clamped to the region), and Cases 2 and 3 are searched by a
/// coarse scan followed by golden-section refinement. Cases 5 and 6 are never
/// optimal and are skipped.
pub fn myopic_threshold(belief: &Belief, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Err(Error::ZeroContext { op: "myopic_threshold" });
    }
    let (xp, lower, upper) = positive_frame(x, belief);
    let straightforward = -xp * 0.5 * (lower + upper);
    let value = |rho: f64| {
        let s = ThresholdStats::at(rho);
        let case = s.case(xp, lower, upper);
        (value_in_case(&s, case, xp, lower, upper), case)
    };

    let mut cuts: Vec<f64> = [xp * lower, xp * upper]
        .into_iter()
        .filter(|&v| v != 0.0)
        .map(eve_threshold)
        .collect();
    cuts.sort_by(f64::total_cmp);
    let lo_edge = cuts.iter().copied().fold(straightforward.min(0.0), f64::min) - SEARCH_MARGIN;
    let hi_edge = cuts.iter().copied().fold(straightforward.max(0.0), f64::max) + SEARCH_MARGIN;
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo_edge);
    edges.extend(cuts.iter().copied());
    edges.push(hi_edge);

    let mut best_rho = f64::NAN;
    let mut best_value = f64::NEG_INFINITY;
    let mut consider = |rho: f64, v: f64| {
        if v > best_value {
            best_value = v;
            best_rho = rho;
        }
    };
    for &rho in &[0.0, straightforward] {
        let (v, case) = value(rho);
        if case.is_informative() {
            consider(rho, v);
        }
    }
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !(b > a) {
            continue;
        }
        let (_, case) = value(0.5 * (a + b));
        let rho = match case {
            MyopicCase::DeviateBoth => 0.0f64.clamp(a, b),
            MyopicCase::Obedient => straightforward.clamp(a, b),
            MyopicCase::DeviateFromPlus | MyopicCase::DeviateFromMinus => {
                golden_max(|r| value(r).0, a, b)
            }
            MyopicCase::AlwaysPlus | MyopicCase::AlwaysMinus => continue,
        };
        consider(rho, value(rho).0);
    }

    let floor = (xp * 0.5 * (lower + upper)).max(0.0);
    assert!(
        best_value >= floor - 1e-12,
        "myopic optimum {best_value} below the uninformative value {floor}"
    );
    Ok(best_rho)
}

/// Maximizes `f` on `[a, b]`: a coarse scan picks the best bracket, then
/// golden-section search narrows it to `GOLDEN_TOL`.
fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let step = (b - a) / SCAN_POINTS as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=SCAN_POINTS {
        let v = f(a + step * i as f64);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut lo = a + step * best_i.saturating_sub(1) as f64;
    let mut hi = (a + step * (best_i + 1) as f64).min(b);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > GOLDEN_TOL {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    // Keep the scanned point if the bracket's interior never beat it (edge maxima).
    let edge = a + step * best_i as f64;
    if f(mid) >= best_v {
        mid
    } else {
        edge
    }
}

/// Threshold signal at the myopically optimal ρ*.
pub fn myopic_signal(belief: &Belief, x: f64, z: f64) -> SignalRealization {
    // x = 0 has probability zero; with no static payoff every threshold is
    // equivalent for the user, so fall back to the straightforward cutoff.
    let rho = myopic_threshold(belief, x).unwrap_or(-x * belief.midpoint());
    threshold_signal(rho, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_math::HALF_NORMAL_MEAN;
    use approx::assert_relative_eq;

    fn b(l: f64, u: f64) -> Belief {
        Belief::new(l, u).unwrap()
    }

    #[test]
    fn straightforward_first_round() {
        let s = straightforward_signal(&Belief::default(), 2.0, 0.5);
        assert_eq!(s.message, Message::Plus);
        assert_eq!(s.z_mean, HALF_NORMAL_MEAN);
        let s = straightforward_signal(&Belief::default(), 2.0, -0.5);
        assert_eq!(s.message, Message::Minus);
        assert_relative_eq!(s.z_mean, -HALF_NORMAL_MEAN, max_relative = 1e-15);
    }

    #[test]
    fn straightforward_shifted_mean() {
        let s = straightforward_signal(&b(0.0, 1.0), 1.0, 0.0);
        assert_eq!(s.message, Message::Plus);
        // Frozen from a 40-digit quadrature of the window (-0.5, inf).
        assert_relative_eq!(s.z_mean, 0.509_160_433_837_033_5, max_relative = 1e-12);
    }

    #[test]
    fn straightforward_tie_goes_to_minus() {
        let s = straightforward_signal(&b(0.0, 1.0), 1.0, -0.5);
        assert_eq!(s.message, Message::Minus);
    }

    #[test]
    fn ternary_examples() {
        let s = ternary_signal(&Belief::default(), 1.0, 0.2, 0.25);
        assert_eq!(s.message, Message::Fence);
        assert!(s.z_mean.abs() < 1e-15);
        let s = ternary_signal(&Belief::default(), 1.0, 0.9, 0.25);
        assert_eq!(s.message, Message::Plus);
        assert_relative_eq!(s.z_mean, 1.141_077_770_368_064_5, max_relative = 1e-12);
        let s = ternary_signal(&b(0.4, 0.6), -2.0, 1.02, 0.25);
        assert_eq!(s.message, Message::Fence);
        let (lo, hi) = s.window();
        assert!(lo < s.z_mean && s.z_mean < hi);
    }

    #[test]
    fn eve_examples() {
        let s = eve_signal(&Belief::default(), 1.0, 0.3, 10_000);
        assert!(s.exploring);
        assert_eq!(s.cutoff, Cutoff::Threshold(0.0));
        assert_eq!(s.message, Message::Plus);
        let s = eve_signal(&b(0.49, 0.50), 1.0, 0.3, 10_000);
        assert!(!s.exploring);
        assert_eq!(s.cutoff, Cutoff::Threshold(-0.495));
        let s = eve_signal(&b(0.0, 1.0), 1.0, 0.3, 10_000);
        match s.cutoff {
            // Root of φ(c)/Φ(c) = 0.5 from mpmath.
            Cutoff::Threshold(rho) => assert!((rho - 0.517_912_715_992_179_4).abs() < 1e-10),
            _ => unreachable!(),
        }
    }

    #[test]
    fn myopic_value_cases() {
        let (v, case) = myopic_value_and_case(0.0, 1.0, &b(-0.5, 0.5)).unwrap();
        assert_eq!(case, MyopicCase::Obedient);
        assert_relative_eq!(v, 0.398_942_280_401_432_7, max_relative = 1e-14);
        let (v, case) = myopic_value_and_case(0.0, 3.0, &b(-1.0, 1.0)).unwrap();
        assert_eq!(case, MyopicCase::DeviateBoth);
        assert_relative_eq!(v, 0.803_051_647_697_298_4, max_relative = 1e-13);
        let (v, case) = myopic_value_and_case(-10.0, 1.0, &b(0.3, 0.5)).unwrap();
        assert_eq!(case, MyopicCase::Obedient);
        assert_relative_eq!(v, 0.4, max_relative = 1e-13);
        assert!(myopic_value(0.0, 0.0, &b(0.3, 0.5)).is_err());
    }

    #[test]
    fn myopic_value_matches_paper_display_forms() {
        // Case 1-3 closed forms written exactly as displayed, against the factored implementation.
        let (x, l, u) = (3.0, -0.2, 0.5);
        let w = u - l;
        let m = 0.5 * (l + u);
        for &rho in &[-1.3, -0.6, -0.2, 0.0, 0.4, 1.1] {
            let bel = b(l, u);
            let (v, case) = myopic_value_and_case(rho, x, &bel).unwrap();
            let (pdf, cdf) = (std_pdf(rho), 1.0 - std_sf(rho));
            let display = match case {
                MyopicCase::DeviateBoth => 0.5 / w * (x * u * u + pdf * pdf / (x * cdf * (1.0 - cdf))),
                MyopicCase::DeviateFromPlus => {
                    x * m * (1.0 - cdf)
                        + pdf
                        + 0.5 / w * (x * u * u * cdf + pdf * pdf / (cdf * x) - 2.0 * pdf * u)
                }
                MyopicCase::DeviateFromMinus => {
                    x * m * (1.0 - cdf)
                        + pdf
                        + 0.5 / w
                            * (x * l * l * (1.0 - cdf) + pdf * pdf / ((1.0 - cdf) * x) + 2.0 * pdf * l)
                }
                MyopicCase::Obedient => x * m * (1.0 - cdf) + pdf,
                MyopicCase::AlwaysPlus => x * m,
                MyopicCase::AlwaysMinus => 0.0,
            };
            assert_relative_eq!(v, display, max_relative = 1e-12);
        }
    }

    #[test]
    fn myopic_optimum_structure() {
        let rho = myopic_threshold(&b(-0.8, 0.5), 3.0).unwrap();
        assert!(rho.abs() < 1e-9, "{rho}");
        let rho = myopic_threshold(&b(-0.4, 0.5), 3.0).unwrap();
        assert!(rho.abs() < 1e-9, "{rho}");
        let rho = myopic_threshold(&b(0.2, 0.5), 3.0).unwrap();
        assert!((rho + 1.05).abs() < 1e-9, "{rho}");
        let rho = myopic_threshold(&b(0.4, 0.5), 3.0).unwrap();
        assert!((rho + 1.35).abs() < 1e-9, "{rho}");
        let rho = myopic_threshold(&b(-0.2, 0.5), 3.0).unwrap();
        assert!(rho < -1e-6 && rho > -0.45 + 1e-6, "{rho}");
        let (_, case) = myopic_value_and_case(rho, 3.0, &b(-0.2, 0.5)).unwrap();
        assert_eq!(case, MyopicCase::DeviateFromPlus);
    }

    #[test]
    fn myopic_reflection_for_negative_context() {
        let bel = b(-0.3, 0.6);
        let mirrored = b(-0.6, 0.3);
        for &rho in &[-1.0, -0.2, 0.0, 0.7] {
            assert_eq!(
                myopic_value(rho, -2.0, &bel).unwrap(),
                myopic_value(rho, 2.0, &mirrored).unwrap()
            );
        }
        // Narrow belief: both signs of x pick the straightforward cutoff.
        let narrow = b(0.30, 0.3001);
        for &x in &[1.3, -1.3] {
            let rho = myopic_threshold(&narrow, x).unwrap();
            assert!((rho + x * narrow.midpoint()).abs() < 1e-9, "x={x} rho={rho}");
        }
    }

    #[test]
    fn policy_parsing_and_validation() {
        assert_eq!("EvE".parse::<PolicyKind>().unwrap(), PolicyKind::Eve);
        assert!("greedy".parse::<PolicyKind>().is_err());
        assert!(PolicySpec::from_kind(PolicyKind::Ternary, 0.0, 1).is_err());
        assert!(PolicySpec::from_kind(PolicyKind::Eve, 0.25, 0).is_err());
        assert_eq!(
            PolicySpec::from_kind(PolicyKind::Ternary, 0.25, 7).unwrap(),
            PolicySpec::Ternary { c_eps: 0.25 }
        );
    }
}
