//! The sequential game loop, batches of independent trials, and the
//! single-round learning/regret experiments.
//!
//! Each trial owns a ChaCha8 stream selected by its index, so a trial's draws
//! depend only on `(seed, trial_index)` and never on scheduling. Aggregates are
//! reduced in trial order, which makes batch output bit-identical for any
//! worker count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{Belief, UpdateSource};
use crate::error::{Error, Result};
use crate::policies::{PolicyKind, PolicySpec, DEFAULT_C_EPS};
use crate::types::{Arm, Message};
use crate::user_model::UserDecision;

pub const DEFAULT_HORIZON: u64 = 10_000;
pub const DEFAULT_TRIALS: u64 = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordGranularity {
    Full,
    CumulativeOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub policy: PolicySpec,
    pub horizon: u64,
    pub trials: u64,
    pub base_seed: u64,
    pub granularity: RecordGranularity,
    /// Share draws across policies for the same seed instead of salting the
    /// stream with the policy kind.
    pub paired_seeds: bool,
    /// Worker threads; `None` uses the available parallelism.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            policy: PolicySpec::Ternary { c_eps: DEFAULT_C_EPS },
            horizon: DEFAULT_HORIZON,
            trials: DEFAULT_TRIALS,
            base_seed: 0,
            granularity: RecordGranularity::CumulativeOnly,
            paired_seeds: false,
            workers: None,
        }
    }
}

impl SimConfig {
    pub fn new(policy: PolicySpec, horizon: u64, trials: u64, base_seed: u64) -> Self {
        Self {
            policy,
            horizon,
            trials,
            base_seed,
            ..Self::default()
        }
    }

    pub fn with_granularity(mut self, granularity: RecordGranularity) -> Self {
        self.granularity = granularity;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn paired(mut self) -> Self {
        self.paired_seeds = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        Ok(())
    }

    fn stream_seed(&self) -> u64 {
        if self.paired_seeds {
            self.base_seed
        } else {
            let salt = match self.policy.kind() {
                PolicyKind::Straightforward => 0x5f3a_71c2_9e4b_0d11,
                PolicyKind::Ternary => 0x9c2e_4b7d_13a8_6f05,
                PolicyKind::Myopic => 0x27d4_eb2f_1656_67c5,
                PolicyKind::Eve => 0xc2b2_ae3d_27d4_eb4f,
            };
            self.base_seed ^ salt
        }
    }
}

/// Deterministic generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: u64,
    pub x: f64,
    pub z: f64,
    pub message: Message,
    pub z_mean: f64,
    pub chosen: Arm,
    pub optimal: Arm,
    pub reg: f64,
    pub belief_before: Belief,
    pub belief_after: Belief,
    pub update_source: UpdateSource,
    pub exploring: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_index: u64,
    pub theta: f64,
    /// Reg(t) for t = 1..=T.
    pub cumulative_regret: Vec<f64>,
    pub final_belief: Belief,
    pub rounds: Option<Vec<RoundRecord>>,
    /// Rounds in which the floating-point collapse guard fired.
    pub clamp_events: u32,
}

impl TrialResult {
    pub fn final_regret(&self) -> f64 {
        self.cumulative_regret.last().copied().unwrap_or(0.0)
    }

    pub fn final_width(&self) -> f64 {
        self.final_belief.width()
    }
}

fn violation(trial: u64, round: u64, what: String) -> Error {
    Error::Invariant { trial, round, what }
}

/// Plays one trial of `config.horizon` rounds, checking the model invariants
/// inline.
pub fn run_trial(config: &SimConfig, trial_index: u64) -> Result<TrialResult> {
    config.validate()?;
    let mut rng = trial_rng(config.stream_seed(), trial_index);
    let theta: f64 = rng.random_range(-1.0..1.0);
    let horizon = config.horizon;
    let keep_rounds = config.granularity == RecordGranularity::Full;

    let mut belief = Belief::default();
    let mut cumulative = Vec::with_capacity(horizon as usize);
    let mut rounds = keep_rounds.then(|| Vec::with_capacity(horizon as usize));
    let mut total = 0.0;
    let mut clamp_events = 0;

    for t in 1..=horizon {
        let x: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        let signal = config.policy.signal(&belief, x, z);
        let decision = UserDecision::resolve(x, theta, z, signal.z_mean);
        let outcome = belief
            .update(x, signal.z_mean, decision.chosen, signal.message)
            .map_err(|e| violation(trial_index, t, e.to_string()))?;
        let after = outcome.belief_after;

        let (lo, hi) = signal.window();
        if !(lo < signal.z_mean && signal.z_mean < hi) {
            return Err(violation(
                trial_index,
                t,
                format!("Z = {} outside its window ({lo}, {hi})", signal.z_mean),
            ));
        }
        if !after.nested_in(&belief) {
            return Err(violation(trial_index, t, format!("{after:?} not nested in {belief:?}")));
        }
        if !after.contains(theta) {
            return Err(violation(
                trial_index,
                t,
                format!("theta = {theta} excluded by {after:?}"),
            ));
        }
        if (outcome.source == UpdateSource::None) != (after == belief) {
            return Err(violation(
                trial_index,
                t,
                format!("update source {:?} disagrees with the belief change", outcome.source),
            ));
        }
        check_round_properties(config, &belief, &after, x, theta, &signal, decision.chosen)
            .map_err(|what| violation(trial_index, t, what))?;
        if outcome.clamped {
            clamp_events += 1;
        }

        total += decision.per_round_regret;
        cumulative.push(total);
        if let Some(rounds) = rounds.as_mut() {
            rounds.push(RoundRecord {
                t,
                x,
                z,
                message: signal.message,
                z_mean: signal.z_mean,
                chosen: decision.chosen,
                optimal: decision.optimal,
                reg: decision.per_round_regret,
                belief_before: belief,
                belief_after: after,
                update_source: outcome.source,
                exploring: signal.exploring,
            });
        }
        belief = after;
    }

    Ok(TrialResult {
        trial_index,
        theta,
        cumulative_regret: cumulative,
        final_belief: belief,
        rounds,
        clamp_events,
    })
}

/// Policy-specific round invariants: the deviation/obedience width dichotomy
/// for straightforward, obedience to confident ternary messages, and halving
/// after an EvE exploratory message.
fn check_round_properties(
    config: &SimConfig,
    before: &Belief,
    after: &Belief,
    x: f64,
    theta: f64,
    signal: &crate::policies::SignalRealization,
    chosen: Arm,
) -> std::result::Result<(), String> {
    let (w0, w1) = (before.width(), after.width());
    match config.policy {
        PolicySpec::Straightforward => {
            let recommended = signal.message.arm();
            if recommended == Some(chosen) {
                if !(w1 > 0.5 * w0) {
                    return Err(format!("obedience shrank width {w0} to {w1} (<= half)"));
                }
            } else if after != before && !(w1 < 0.5 * w0) {
                return Err(format!("deviation shrank width {w0} only to {w1} (>= half)"));
            }
        }
        PolicySpec::Ternary { .. } => {
            if let Some(arm) = signal.message.arm() {
                let s = arm.sign();
                let lo = s * (x * before.lower() + signal.z_mean);
                let hi = s * (x * before.upper() + signal.z_mean);
                if lo > 0.0 && hi > 0.0 && chosen != arm {
                    return Err(format!("user at theta = {theta} ignored a confident message"));
                }
            }
        }
        PolicySpec::Eve { .. } => {
            let estimate = x * before.midpoint();
            let exploratory = if estimate > 0.0 {
                Message::Minus
            } else {
                Message::Plus
            };
            if signal.exploring && estimate != 0.0 && signal.message == exploratory && after != before
                && w1 > 0.5 * w0 + 1e-12
            {
                return Err(format!("exploratory message shrank width {w0} only to {w1}"));
            }
        }
        PolicySpec::Myopic => {}
    }
    Ok(())
}

fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs every trial of `config` on the worker pool, maps each result with
/// `map` on the worker, and hands the mapped values to `fold` in trial order.
pub fn for_each_trial<T, M, F>(config: &SimConfig, map: M, mut fold: F) -> Result<()>
where
    T: Send,
    M: Fn(TrialResult) -> Result<T> + Sync,
    F: FnMut(T),
{
    config.validate()?;
    let pool = worker_pool(config.workers)?;
    let chunk = (pool.current_num_threads() as u64 * 8).max(16);
    let mut start = 0;
    while start < config.trials {
        let end = (start + chunk).min(config.trials);
        let mapped: Vec<T> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|i| run_trial(config, i).and_then(&map))
                .collect::<Result<Vec<T>>>()
        })?;
        mapped.into_iter().for_each(&mut fold);
        start = end;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub trials: u64,
    pub horizon: u64,
    pub mean_cum_regret: Vec<f64>,
    pub p25: Vec<f64>,
    pub p75: Vec<f64>,
    pub final_mean: f64,
    /// Sample standard deviation of Reg(T) across trials.
    pub final_std: f64,
    /// Two standard errors of `final_mean`.
    pub final_two_sigma: f64,
    pub mean_final_width: f64,
    /// Mean of -ln(w_{T+1}/2) across trials.
    pub mean_final_accuracy: f64,
    pub clamp_events: u64,
}

impl AggregateResult {
    /// Mean Reg(t) at 1-based round `t`.
    pub fn mean_at(&self, t: u64) -> f64 {
        self.mean_cum_regret[(t - 1) as usize]
    }
}

/// Collects per-trial regret curves in trial order and reduces them to an
/// [`AggregateResult`].
#[derive(Debug, Clone)]
pub struct BatchAccumulator {
    horizon: u64,
    curves: Vec<Vec<f64>>,
    widths: Vec<f64>,
    clamp_events: u64,
}

impl BatchAccumulator {
    pub fn new(horizon: u64, expected_trials: u64) -> Self {
        Self {
            horizon,
            curves: Vec::with_capacity(expected_trials as usize),
            widths: Vec::with_capacity(expected_trials as usize),
            clamp_events: 0,
        }
    }

    pub fn push(&mut self, cumulative_regret: Vec<f64>, final_width: f64, clamp_events: u32) {
        debug_assert_eq!(cumulative_regret.len() as u64, self.horizon);
        self.clamp_events += u64::from(clamp_events);
        self.widths.push(final_width);
        self.curves.push(cumulative_regret);
    }

    pub fn push_trial(&mut self, trial: TrialResult) {
        let width = trial.final_width();
        self.push(trial.cumulative_regret, width, trial.clamp_events);
    }

    pub fn finish(self) -> Result<AggregateResult> {
        let curves = self.curves;
        if curves.is_empty() {
            return Err(Error::Config("no trials to aggregate".into()));
        }
        let horizon = self.horizon as usize;
        let n = curves.len() as f64;
        let mut mean = vec![0.0; horizon];
        for curve in &curves {
            for (acc, v) in mean.iter_mut().zip(curve) {
                *acc += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= n);

        let mut p25 = Vec::with_capacity(horizon);
        let mut p75 = Vec::with_capacity(horizon);
        let mut column = vec![0.0; curves.len()];
        for t in 0..horizon {
            for (slot, curve) in column.iter_mut().zip(&curves) {
                *slot = curve[t];
            }
            column.sort_by(f64::total_cmp);
            p25.push(percentile_sorted(&column, 0.25));
            p75.push(percentile_sorted(&column, 0.75));
        }

        let final_mean = mean[horizon - 1];
        let final_std = if curves.len() > 1 {
            let ss: f64 = curves
                .iter()
                .map(|c| (c[horizon - 1] - final_mean).powi(2))
                .sum();
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let widths = &self.widths;
        Ok(AggregateResult {
            trials: curves.len() as u64,
            horizon: self.horizon,
            mean_cum_regret: mean,
            p25,
            p75,
            final_mean,
            final_std,
            final_two_sigma: 2.0 * final_std / n.sqrt(),
            mean_final_width: widths.iter().sum::<f64>() / n,
            mean_final_accuracy: widths.iter().map(|w| -(w / 2.0).ln()).sum::<f64>() / n,
            clamp_events: self.clamp_events,
        })
    }
}

/// Runs all trials and aggregates the regret curves.
pub fn run_batch(config: &SimConfig) -> Result<AggregateResult> {
    let config = config.with_granularity(RecordGranularity::CumulativeOnly);
    let mut acc = BatchAccumulator::new(config.horizon, config.trials);
    for_each_trial(&config, Ok, |trial| acc.push_trial(trial))?;
    acc.finish()
}

/// Percentile of already-sorted data, interpolating linearly between order
/// statistics at position `q (n - 1)`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let i = pos.floor() as usize;
            let frac = pos - i as f64;
            if i + 1 >= n {
                sorted[n - 1]
            } else {
                sorted[i] + frac * (sorted[i + 1] - sorted[i])
            }
        }
    }
}

/// One row of the single-round experiments: a belief `(u - w, u)` is fixed,
/// θ is drawn uniformly from it, and one round is played.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleRoundRow {
    pub width: f64,
    pub samples: u64,
    /// Mean of (w_t - w_{t+1}) / w_t × 100.
    pub mean_shrink_pct: f64,
    pub mean_regret: f64,
    /// Fraction of samples in which the belief changed.
    pub update_rate: f64,
}

/// Plays `samples` independent single rounds at each width and averages the
/// percentage shrink and the per-round regret.
pub fn single_round_experiment(
    policy: PolicySpec,
    u_fixed: f64,
    widths: &[f64],
    samples: u64,
    seed: u64,
) -> Result<Vec<SingleRoundRow>> {
    policy.validate()?;
    if samples == 0 {
        return Err(Error::Config("samples must be >= 1".into()));
    }
    widths
        .iter()
        .enumerate()
        .map(|(i, &width)| {
            if !(width > 0.0) {
                return Err(Error::Config(format!("width must be positive, got {width}")));
            }
            let belief = Belief::new(u_fixed - width, u_fixed)?;
            let mut rng = trial_rng(seed, i as u64);
            let (mut shrink, mut regret, mut updates) = (0.0, 0.0, 0u64);
            for _ in 0..samples {
                let theta = belief.lower() + belief.width() * rng.random::<f64>();
                let x: f64 = rng.sample(StandardNormal);
                let z: f64 = rng.sample(StandardNormal);
                let signal = policy.signal(&belief, x, z);
                let decision = UserDecision::resolve(x, theta, z, signal.z_mean);
                let outcome = belief.update(x, signal.z_mean, decision.chosen, signal.message)?;
                let w1 = outcome.belief_after.width();
                shrink += (belief.width() - w1) / belief.width() * 100.0;
                regret += decision.per_round_regret;
                updates += u64::from(outcome.changed);
            }
            let n = samples as f64;
            Ok(SingleRoundRow {
                width,
                samples,
                mean_shrink_pct: shrink / n,
                mean_regret: regret / n,
                update_rate: updates as f64 / n,
            })
        })
        .collect()
}

/// Per-round expected percentage shrink of the belief at each width.
pub fn shrink_experiment(
    policy: PolicySpec,
    u_fixed: f64,
    widths: &[f64],
    samples: u64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    Ok(single_round_experiment(policy, u_fixed, widths, samples, seed)?
        .into_iter()
        .map(|r| (r.width, r.mean_shrink_pct))
        .collect())
}

/// Per-round expected regret at each width.
pub fn per_round_regret_experiment(
    policy: PolicySpec,
    u_fixed: f64,
    widths: &[f64],
    samples: u64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    Ok(single_round_experiment(policy, u_fixed, widths, samples, seed)?
        .into_iter()
        .map(|r| (r.width, r.mean_regret))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(policy: PolicySpec) -> SimConfig {
        SimConfig::new(policy, 200, 8, 11).with_workers(2)
    }

    #[test]
    fn trial_is_deterministic() {
        let config = small(PolicySpec::Straightforward).with_granularity(RecordGranularity::Full);
        let a = run_trial(&config, 3).unwrap();
        let b = run_trial(&config, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.theta, run_trial(&config, 4).unwrap().theta);
    }

    #[test]
    fn cumulative_regret_is_running_sum() {
        let config = small(PolicySpec::Ternary { c_eps: 0.25 }).with_granularity(RecordGranularity::Full);
        let trial = run_trial(&config, 0).unwrap();
        let rounds = trial.rounds.as_ref().unwrap();
        let mut total = 0.0;
        for (r, &cum) in rounds.iter().zip(&trial.cumulative_regret) {
            assert!(r.reg >= 0.0);
            total += r.reg;
            assert_eq!(total, cum);
            assert_eq!(r.update_source == UpdateSource::None, r.belief_after == r.belief_before);
        }
        assert!(trial.cumulative_regret.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn paired_seeds_share_draws() {
        let a = run_trial(&small(PolicySpec::Straightforward).paired(), 2).unwrap();
        let b = run_trial(&small(PolicySpec::Myopic).paired(), 2).unwrap();
        assert_eq!(a.theta, b.theta);
        let c = run_trial(&small(PolicySpec::Myopic), 2).unwrap();
        assert_ne!(a.theta, c.theta);
    }

    #[test]
    fn batch_independent_of_workers() {
        let one = run_batch(&small(PolicySpec::Eve { horizon: 200 }).with_workers(1)).unwrap();
        let two = run_batch(&small(PolicySpec::Eve { horizon: 200 }).with_workers(2)).unwrap();
        assert_eq!(one, two);
        assert!(one.p25.iter().zip(&one.p75).all(|(a, b)| a <= b));
    }

    #[test]
    fn percentile_interpolates() {
        let data = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile_sorted(&data, 0.25), 2.0);
        assert_eq!(percentile_sorted(&[0.0, 10.0], 0.25), 2.5);
        assert_eq!(percentile_sorted(&[7.0], 0.75), 7.0);
    }

    #[test]
    fn rejects_invalid_config() {
        let mut config = small(PolicySpec::Straightforward);
        config.trials = 0;
        assert!(run_batch(&config).is_err());
        assert!(single_round_experiment(PolicySpec::Straightforward, 0.5, &[1.6], 10, 0).is_err());
        assert!(single_round_experiment(PolicySpec::Straightforward, 0.5, &[-0.1], 10, 0).is_err());
    }
}
