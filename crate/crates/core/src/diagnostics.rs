//! Post-hoc classification of belief updates and the accuracy decomposition
//! by update source.

use serde::{Deserialize, Serialize};

use crate::belief::UpdateSource;
use crate::engine::{for_each_trial, RecordGranularity, RoundRecord, SimConfig, TrialResult};
use crate::error::{Error, Result};

/// Allowed gap between ACC(t) and the sum of its per-source parts.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Source of the belief change in a round, judged from the record alone.
pub fn classify_update(record: &RoundRecord) -> UpdateSource {
    if record.belief_after == record.belief_before {
        UpdateSource::None
    } else {
        match record.message.arm() {
            None => UpdateSource::OnTheFence,
            Some(arm) if arm == record.chosen => UpdateSource::Obey,
            Some(_) => UpdateSource::Deviate,
        }
    }
}

/// ACC = -ln(w/2), zero at the prior width 2.
pub fn accuracy(width_after: f64) -> Result<f64> {
    if !(width_after > 0.0 && width_after <= 2.0) {
        return Err(Error::InvalidWidth(width_after));
    }
    Ok(-(width_after / 2.0).ln())
}

/// Per-round cumulative update counts and accuracy gains of one trial.
/// Entry `t - 1` covers rounds `1..=t`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub count_obey: Vec<u64>,
    pub count_deviate: Vec<u64>,
    pub count_otf: Vec<u64>,
    pub acc_total: Vec<f64>,
    pub acc_obey: Vec<f64>,
    pub acc_deviate: Vec<f64>,
    pub acc_otf: Vec<f64>,
}

impl DiagnosticsSeries {
    pub fn len(&self) -> usize {
        self.acc_total.len()
    }

    pub fn is_empty(&self) -> bool {
        self.acc_total.is_empty()
    }

    /// Largest |ACC - (ACC_obey + ACC_deviate + ACC_otf)| over the series.
    pub fn identity_gap(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                (self.acc_total[i] - (self.acc_obey[i] + self.acc_deviate[i] + self.acc_otf[i])).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Splits a trial's accuracy gain by the source of each update.
pub fn accuracy_decomposition(trial: &TrialResult) -> Result<DiagnosticsSeries> {
    let rounds = trial.rounds.as_ref().ok_or(Error::MissingRecords(trial.trial_index))?;
    let n = rounds.len();
    let mut out = DiagnosticsSeries {
        count_obey: Vec::with_capacity(n),
        count_deviate: Vec::with_capacity(n),
        count_otf: Vec::with_capacity(n),
        acc_total: Vec::with_capacity(n),
        acc_obey: Vec::with_capacity(n),
        acc_deviate: Vec::with_capacity(n),
        acc_otf: Vec::with_capacity(n),
    };
    let (mut c_obey, mut c_dev, mut c_otf) = (0u64, 0u64, 0u64);
    let (mut a_obey, mut a_dev, mut a_otf) = (0.0, 0.0, 0.0);
    for record in rounds {
        let gain = -(record.belief_after.width() / record.belief_before.width()).ln();
        match classify_update(record) {
            UpdateSource::Obey => {
                c_obey += 1;
                a_obey += gain;
            }
            UpdateSource::Deviate => {
                c_dev += 1;
                a_dev += gain;
            }
            UpdateSource::OnTheFence => {
                c_otf += 1;
                a_otf += gain;
            }
            UpdateSource::None => {}
        }
        let total = accuracy(record.belief_after.width())?;
        let gap = (total - (a_obey + a_dev + a_otf)).abs();
        if gap > IDENTITY_TOL {
            return Err(Error::Invariant {
                trial: trial.trial_index,
                round: record.t,
                what: format!("accuracy decomposition off by {gap:e}"),
            });
        }
        out.count_obey.push(c_obey);
        out.count_deviate.push(c_dev);
        out.count_otf.push(c_otf);
        out.acc_total.push(total);
        out.acc_obey.push(a_obey);
        out.acc_deviate.push(a_dev);
        out.acc_otf.push(a_otf);
    }
    Ok(out)
}

/// Trial-averaged diagnostics series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub trials: u64,
    pub count_obey: Vec<f64>,
    pub count_deviate: Vec<f64>,
    pub count_otf: Vec<f64>,
    pub acc_total: Vec<f64>,
    pub acc_obey: Vec<f64>,
    pub acc_deviate: Vec<f64>,
    pub acc_otf: Vec<f64>,
    /// Per-trial final ACC, in trial order.
    pub final_acc: Vec<f64>,
    /// Trials whose final deviation gain exceeds their final obedience gain.
    pub deviate_dominant: u64,
    pub max_identity_gap: f64,
}

impl DiagnosticsSummary {
    fn new(horizon: usize) -> Self {
        Self {
            trials: 0,
            count_obey: vec![0.0; horizon],
            count_deviate: vec![0.0; horizon],
            count_otf: vec![0.0; horizon],
            acc_total: vec![0.0; horizon],
            acc_obey: vec![0.0; horizon],
            acc_deviate: vec![0.0; horizon],
            acc_otf: vec![0.0; horizon],
            final_acc: Vec::new(),
            deviate_dominant: 0,
            max_identity_gap: 0.0,
        }
    }

    fn add(&mut self, s: &DiagnosticsSeries) {
        fn acc(into: &mut [f64], from: &[f64]) {
            for (a, b) in into.iter_mut().zip(from) {
                *a += b;
            }
        }
        fn count(into: &mut [f64], from: &[u64]) {
            for (a, &b) in into.iter_mut().zip(from) {
                *a += b as f64;
            }
        }
        count(&mut self.count_obey, &s.count_obey);
        count(&mut self.count_deviate, &s.count_deviate);
        count(&mut self.count_otf, &s.count_otf);
        acc(&mut self.acc_total, &s.acc_total);
        acc(&mut self.acc_obey, &s.acc_obey);
        acc(&mut self.acc_deviate, &s.acc_deviate);
        acc(&mut self.acc_otf, &s.acc_otf);
        if let (Some(&total), Some(&obey), Some(&dev)) =
            (s.acc_total.last(), s.acc_obey.last(), s.acc_deviate.last())
        {
            self.final_acc.push(total);
            if dev > obey {
                self.deviate_dominant += 1;
            }
        }
        self.max_identity_gap = self.max_identity_gap.max(s.identity_gap());
        self.trials += 1;
    }

    fn finish(mut self) -> Self {
        let n = self.trials.max(1) as f64;
        for series in [
            &mut self.count_obey,
            &mut self.count_deviate,
            &mut self.count_otf,
            &mut self.acc_total,
            &mut self.acc_obey,
            &mut self.acc_deviate,
            &mut self.acc_otf,
        ] {
            series.iter_mut().for_each(|v| *v /= n);
        }
        self
    }

    pub fn mean_final_acc(&self) -> f64 {
        self.final_acc.iter().sum::<f64>() / self.final_acc.len().max(1) as f64
    }

    pub fn final_value(series: &[f64]) -> f64 {
        series.last().copied().unwrap_or(0.0)
    }
}

/// Runs `config` with full records and averages the per-trial diagnostics.
/// Trials are decomposed on the workers and folded in trial order.
pub fn run_diagnostics(config: &SimConfig) -> Result<DiagnosticsSummary> {
    let config = config.with_granularity(RecordGranularity::Full);
    let mut summary = DiagnosticsSummary::new(config.horizon as usize);
    for_each_trial(
        &config,
        |trial| accuracy_decomposition(&trial),
        |series| summary.add(&series),
    )?;
    Ok(summary.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::Belief;
    use crate::types::{Arm, Message};
    use crate::PolicySpec;

    fn record(message: Message, chosen: Arm, after: Belief) -> RoundRecord {
        RoundRecord {
            t: 1,
            x: 1.0,
            z: 0.0,
            message,
            z_mean: 0.0,
            chosen,
            optimal: chosen,
            reg: 0.0,
            belief_before: Belief::default(),
            belief_after: after,
            update_source: UpdateSource::None,
            exploring: false,
        }
    }

    #[test]
    fn classification() {
        let same = Belief::default();
        let narrowed = Belief::new(-1.0, 0.5).unwrap();
        assert_eq!(classify_update(&record(Message::Plus, Arm::Plus, same)), UpdateSource::None);
        assert_eq!(classify_update(&record(Message::Plus, Arm::Minus, narrowed)), UpdateSource::Deviate);
        assert_eq!(classify_update(&record(Message::Fence, Arm::Plus, narrowed)), UpdateSource::OnTheFence);
        assert_eq!(classify_update(&record(Message::Minus, Arm::Minus, narrowed)), UpdateSource::Obey);
    }

    #[test]
    fn accuracy_values() {
        assert_eq!(accuracy(2.0).unwrap(), 0.0);
        assert!((accuracy(2.0 / std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert!((accuracy(0.2).unwrap() - 2.302_585_092_994_046).abs() < 1e-14);
        assert!(accuracy(0.0).is_err());
        assert!(accuracy(-1.0).is_err());
        assert!(accuracy(2.5).is_err());
    }

    #[test]
    fn decomposition_requires_records() {
        let config = SimConfig::new(PolicySpec::Straightforward, 50, 1, 3);
        let trial = crate::engine::run_trial(&config, 0).unwrap();
        assert!(matches!(accuracy_decomposition(&trial), Err(Error::MissingRecords(0))));
    }

    #[test]
    fn decomposition_matches_engine_labels() {
        let config = SimConfig::new(PolicySpec::Ternary { c_eps: 0.25 }, 500, 1, 5)
            .with_granularity(RecordGranularity::Full);
        let trial = crate::engine::run_trial(&config, 0).unwrap();
        for r in trial.rounds.as_ref().unwrap() {
            assert_eq!(classify_update(r), r.update_source);
        }
        let series = accuracy_decomposition(&trial).unwrap();
        assert!(series.identity_gap() <= IDENTITY_TOL);
        assert!(series.acc_total.windows(2).all(|w| w[0] <= w[1]));
    }
}
