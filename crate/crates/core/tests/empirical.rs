mod common;

use devlab_core::diagnostics::{accuracy_decomposition, run_diagnostics};
use devlab_core::engine::{run_trial, single_round_experiment, RecordGranularity, SimConfig};
use devlab_core::policies::{myopic_threshold, ternary_signal};
use devlab_core::{Belief, Message, PolicySpec};
use rand::Rng;
use rand_distr::StandardNormal;

use common::{cdf, integrate, pdf, rng};

#[test]
fn myopic_matches_straightforward_for_narrow_beliefs() {
    let delta: f64 = 0.1;
    let bound = delta * delta / (4.0 * (std::f64::consts::PI * (1.0 / delta).ln()).sqrt());
    let mut r = rng(41);
    let n = 2000;
    let mut agree = 0;
    for _ in 0..n {
        let w = bound * r.random_range(0.01..1.0);
        let center = r.random_range(-1.0 + w..1.0 - w);
        let belief = Belief::new(center - 0.5 * w, center + 0.5 * w).unwrap();
        let x: f64 = r.sample(StandardNormal);
        let rho = myopic_threshold(&belief, x).unwrap();
        if (rho + x * belief.midpoint()).abs() < 1e-6 {
            agree += 1;
        }
    }
    let freq = agree as f64 / n as f64;
    assert!(freq >= 1.0 - delta, "agreement {freq}");
}

#[test]
fn fence_rounds_shrink_geometrically_often() {
    let config = SimConfig::new(PolicySpec::Ternary { c_eps: 0.25 }, 2000, 200, 8)
        .with_granularity(RecordGranularity::Full);
    let (mut fence, mut shrunk) = (0usize, 0usize);
    for i in 0..config.trials {
        let trial = run_trial(&config, i).unwrap();
        for r in trial.rounds.unwrap() {
            if r.message == Message::Fence {
                fence += 1;
                if r.belief_after.width() <= 5.0 / 6.0 * r.belief_before.width() {
                    shrunk += 1;
                }
            }
        }
    }
    assert!(fence >= 1000, "only {fence} fence rounds");
    let freq = shrunk as f64 / fence as f64;
    assert!(freq >= 0.2, "frequency {freq} over {fence} rounds");
    println!("{shrunk}/{fence} fence rounds shrank to 5/6 or less");
}

/// P[a = 0] for belief (u - w, u) by integrating the fence band over x.
fn fence_probability(belief: &Belief, c_eps: f64) -> f64 {
    let (m, eps) = (belief.midpoint(), c_eps * belief.width());
    integrate(|x| pdf(x) * (cdf(-x * m + eps) - cdf(-x * m - eps)), -12.0, 12.0, 1e-14, 64)
}

#[test]
fn fence_probability_is_proportional_to_epsilon() {
    let c_eps = 0.25;
    let mut r = rng(5);
    for &w in &[1.0, 0.1, 0.01] {
        let belief = Belief::new(0.5 - w, 0.5).unwrap();
        let eps = c_eps * w;
        let exact = fence_probability(&belief, c_eps) / eps;
        assert!((0.1..=1.0).contains(&exact), "w = {w}: exact ratio {exact}");
        let n = 400_000;
        let hits = (0..n)
            .filter(|_| {
                let x: f64 = r.sample(StandardNormal);
                let z: f64 = r.sample(StandardNormal);
                ternary_signal(&belief, x, z, c_eps).message == Message::Fence
            })
            .count();
        let p = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((p - exact * eps).abs() <= 4.0 * se, "w = {w}: {p} vs {}", exact * eps);
        assert!((0.1..=1.0).contains(&(p / eps)), "w = {w}: empirical ratio {}", p / eps);
    }
}

#[test]
fn per_round_regret_shapes() {
    let widths = [0.3, 0.75, 1.5];
    let ternary = single_round_experiment(PolicySpec::Ternary { c_eps: 0.25 }, 0.5, &widths, 40_000, 1).unwrap();
    let myopic = single_round_experiment(PolicySpec::Myopic, 0.5, &widths, 40_000, 1).unwrap();
    for (t, m) in ternary.iter().zip(&myopic) {
        let ratio = t.mean_regret / m.mean_regret;
        assert!((0.45..=0.72).contains(&ratio), "w = {}: ratio {ratio}", t.width);
    }

    let eve = single_round_experiment(PolicySpec::eve_exploration(), 0.5, &[0.001, 0.075, 0.75], 20_000, 2).unwrap();
    for row in &eve {
        assert!(row.mean_regret > 0.15, "exploration regret {} at w = {}", row.mean_regret, row.width);
    }
    for p in [PolicySpec::Straightforward, PolicySpec::Ternary { c_eps: 0.25 }, PolicySpec::Myopic] {
        let row = single_round_experiment(p, 0.5, &[1e-3], 20_000, 3).unwrap()[0];
        assert!(row.mean_regret < 1e-5, "{p:?}: {}", row.mean_regret);
    }
}

#[test]
fn ternary_ends_narrower_than_straightforward_on_paired_seeds() {
    let mut narrower = 0;
    for seed in 0..100 {
        let t = run_trial(&SimConfig::new(PolicySpec::Ternary { c_eps: 0.25 }, 10_000, 1, seed).paired(), 0).unwrap();
        let s = run_trial(&SimConfig::new(PolicySpec::Straightforward, 10_000, 1, seed).paired(), 0).unwrap();
        assert_eq!(t.theta, s.theta);
        if t.final_width() < s.final_width() {
            narrower += 1;
        }
    }
    assert!(narrower >= 95, "{narrower}/100");
}

#[test]
fn accuracy_sources_by_policy() {
    let ternary = run_diagnostics(&SimConfig::new(PolicySpec::Ternary { c_eps: 0.25 }, 10_000, 60, 4)).unwrap();
    let last = |v: &[f64]| *v.last().unwrap();
    let total = last(&ternary.acc_total);
    assert!(last(&ternary.acc_obey) + last(&ternary.acc_deviate) <= 0.05 * total);
    assert!(ternary.max_identity_gap <= 1e-9);

    let straight = run_diagnostics(&SimConfig::new(PolicySpec::Straightforward, 10_000, 60, 4)).unwrap();
    assert!(straight.deviate_dominant * 2 > straight.trials, "{}/{}", straight.deviate_dominant, straight.trials);
    assert_eq!(last(&straight.count_otf), 0.0);
}

#[test]
fn no_update_trial_has_flat_diagnostics() {
    let config = SimConfig::new(PolicySpec::Straightforward, 1, 1, 0).with_granularity(RecordGranularity::Full);
    // Search a few trials for one whose single round leaves the prior intact.
    let trial = (0..200)
        .map(|i| run_trial(&config, i).unwrap())
        .find(|t| t.final_belief == Belief::default())
        .expect("some first round without an update");
    let series = accuracy_decomposition(&trial).unwrap();
    assert!(series.acc_total.iter().chain(&series.acc_obey).chain(&series.acc_deviate).all(|&v| v == 0.0));
}
