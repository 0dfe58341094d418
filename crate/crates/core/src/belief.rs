//! The recommender's posterior over the state: uniform on `[lower, upper]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Arm, Message};

/// Width of the interval substituted when rounding would otherwise collapse
/// the belief.
pub const DEGENERATE_WIDTH: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    lower: f64,
    upper: f64,
}

impl Default for Belief {
    /// The prior, Unif[-1, 1].
    fn default() -> Self {
        Self {
            lower: -1.0,
            upper: 1.0,
        }
    }
}

impl Belief {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower < -1.0 || upper > 1.0 || lower >= upper
        {
            return Err(Error::InvalidBelief { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    #[inline]
    pub fn lower(&self) -> f64 {
        self.lower
    }

    #[inline]
    pub fn upper(&self) -> f64 {
        self.upper
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.lower <= theta && theta <= self.upper
    }

    /// `self` lies inside `outer`.
    pub fn nested_in(&self, outer: &Belief) -> bool {
        outer.lower <= self.lower && self.upper <= outer.upper
    }

    /// Bayes update after the user picked `chosen` having inferred `z_mean`
    /// from `message`.
    ///
    /// The user picks +1 exactly when `x * theta + z_mean > 0`, so the choice
    /// reveals which side of `-z_mean / x` the state lies on.
    pub fn update(&self, x: f64, z_mean: f64, chosen: Arm, message: Message) -> Result<UpdateOutcome> {
        if !x.is_finite() {
            return Err(Error::NonFinite { op: "belief update (x)", value: x });
        }
        if !z_mean.is_finite() {
            return Err(Error::NonFinite { op: "belief update (Z)", value: z_mean });
        }
        let cut = -z_mean / x;
        let mut lower = self.lower;
        let mut upper = self.upper;
        if chosen.sign() * sgn(x) > 0.0 {
            lower = lower.max(cut);
        } else {
            upper = upper.min(cut);
        }
        let mut clamped = false;
        if lower >= upper {
            let center = cut.clamp(self.lower, self.upper);
            lower = (center - 0.5 * DEGENERATE_WIDTH).max(self.lower);
            upper = (center + 0.5 * DEGENERATE_WIDTH).min(self.upper);
            clamped = true;
            log::warn!("belief collapsed at {center}; substituted a {DEGENERATE_WIDTH:e}-wide interval");
        }
        let after = Belief { lower, upper };
        let changed = after != *self;
        let source = if !changed {
            UpdateSource::None
        } else {
            match message.arm() {
                None => UpdateSource::OnTheFence,
                Some(arm) if arm == chosen => UpdateSource::Obey,
                Some(_) => UpdateSource::Deviate,
            }
        };
        Ok(UpdateOutcome {
            belief_after: after,
            changed,
            source,
            clamped,
        })
    }
}

/// sgn with sgn(0) = +1.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// What produced a belief change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UpdateSource {
    Obey,
    Deviate,
    OnTheFence,
    None,
}

impl UpdateSource {
    pub fn as_str(self) -> &'static str {
        match self {
            UpdateSource::Obey => "obey",
            UpdateSource::Deviate => "deviate",
            UpdateSource::OnTheFence => "on_the_fence",
            UpdateSource::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateOutcome {
    pub belief_after: Belief,
    pub changed: bool,
    pub source: UpdateSource,
    /// The floating-point collapse guard fired.
    pub clamped: bool,
}
