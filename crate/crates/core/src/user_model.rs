//! The rational user and the omniscient benchmark.

use serde::{Deserialize, Serialize};

use crate::types::Arm;

/// The user's arm given the posterior mean `z_mean` of the hidden payoff.
/// Ties go to arm -1.
#[inline]
pub fn choose(x: f64, theta: f64, z_mean: f64) -> Arm {
    if x * theta + z_mean > 0.0 {
        Arm::Plus
    } else {
        Arm::Minus
    }
}

/// The arm with the higher realized payoff.
#[inline]
pub fn optimal_arm(x: f64, theta: f64, z: f64) -> Arm {
    choose(x, theta, z)
}

/// Payoff forfeited by choosing `chosen` instead of the optimal arm.
#[inline]
pub fn regret(x: f64, theta: f64, z: f64, chosen: Arm) -> f64 {
    let payoff = x * theta + z;
    let taken = match chosen {
        Arm::Plus => payoff,
        Arm::Minus => 0.0,
    };
    payoff.max(0.0) - taken
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserDecision {
    pub chosen: Arm,
    pub optimal: Arm,
    pub per_round_regret: f64,
}

impl UserDecision {
    pub fn resolve(x: f64, theta: f64, z: f64, z_mean: f64) -> Self {
        let chosen = choose(x, theta, z_mean);
        Self {
            chosen,
            optimal: optimal_arm(x, theta, z),
            per_round_regret: regret(x, theta, z, chosen),
        }
    }
}
